//! The positive linear system downstream of the bottleneck.
//!
//! The cascade feeds the bottleneck outflow `w = lambda * x` into
//! `z' = A z + b w`, `y = c^T z` with `A` Metzler and Hurwitz and
//! `b, c >= 0`. Over each arc the joint state `(z, x)` obeys a single affine
//! ODE, so augmenting with a constant coordinate turns every segment into one
//! matrix exponential and the entrained orbit into a linear solve. The
//! average output over a period needs no trajectory at all: integrating
//! `z' = A z + b w` over one period gives `ave(y) = H(0) * ave(w)` with
//! `H(0) = -c^T A^{-1} b` the DC gain.

use nalgebra::{Complex, DMatrix, DVector};

use crate::bottleneck::{periodic_fixed_point, BottleneckParams};
use crate::error::{Error, Result};
use crate::signals::SwitchingSignal;

/// Spectral abscissa must sit strictly below this threshold to count as
/// Hurwitz; anything closer to the imaginary axis is rejected as numerically
/// marginal.
pub const HURWITZ_MARGIN: f64 = -1e-10;

/// Validation flags for a candidate `(A, b, c)` triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemValidation {
    /// All off-diagonal entries of `A` nonnegative.
    pub metzler_ok: bool,
    /// Spectral abscissa below [`HURWITZ_MARGIN`].
    pub hurwitz_ok: bool,
    pub spectral_abscissa: f64,
    pub input_nonnegative: bool,
    pub output_nonnegative: bool,
}

impl SystemValidation {
    pub fn is_valid(&self) -> bool {
        self.metzler_ok && self.hurwitz_ok && self.input_nonnegative && self.output_nonnegative
    }
}

fn check_dimensions(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            context: "state matrix must be square",
            expected: a.nrows(),
            actual: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "input vector",
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    if c.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            context: "output vector",
            expected: a.nrows(),
            actual: c.len(),
        });
    }
    Ok(())
}

fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .map(|v| Complex::new(v, 0.0))
        .eigenvalues()
        .map(|eigs| eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max))
        .unwrap_or(f64::INFINITY)
}

/// Checks the structural requirements of the cascade on a raw triple:
/// Metzler sign pattern, Hurwitz stability and nonnegative gains.
/// Dimension mismatches are errors; everything else is reported.
pub fn validate_positive_system(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
) -> Result<SystemValidation> {
    check_dimensions(a, b, c)?;
    let n = a.nrows();
    let mut metzler_ok = true;
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] < 0.0 {
                metzler_ok = false;
            }
        }
    }
    let abscissa = spectral_abscissa(a);
    Ok(SystemValidation {
        metzler_ok,
        hurwitz_ok: abscissa < HURWITZ_MARGIN,
        spectral_abscissa: abscissa,
        input_nonnegative: b.iter().all(|&v| v >= 0.0),
        output_nonnegative: c.iter().all(|&v| v >= 0.0),
    })
}

/// A Hurwitz linear SISO system `z' = A z + b w`, `y = c^T z`.
///
/// Constructed through [`PositiveLinearSystem::new`] it is additionally
/// positive (Metzler `A`, nonnegative `b`, `c`), the setting of the cascade
/// throughput bound. [`PositiveLinearSystem::hurwitz_only`] relaxes the
/// positivity checks: the DC-gain averaging identity needs only stability.
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveLinearSystem {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
}

impl PositiveLinearSystem {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        let report = validate_positive_system(&a, &b, &c)?;
        if !report.metzler_ok {
            let n = a.nrows();
            for i in 0..n {
                for j in 0..n {
                    if i != j && a[(i, j)] < 0.0 {
                        return Err(Error::NotMetzler {
                            row: i,
                            col: j,
                            value: a[(i, j)],
                        });
                    }
                }
            }
        }
        if let Some(i) = b.iter().position(|&v| v < 0.0) {
            return Err(Error::NegativeEntry {
                vector: "b",
                index: i,
                value: b[i],
            });
        }
        if let Some(i) = c.iter().position(|&v| v < 0.0) {
            return Err(Error::NegativeEntry {
                vector: "c",
                index: i,
                value: c[i],
            });
        }
        if !report.hurwitz_ok {
            return Err(Error::NotHurwitz(report.spectral_abscissa));
        }
        Ok(Self { a, b, c })
    }

    /// Accepts any Hurwitz system, skipping the positivity requirements.
    pub fn hurwitz_only(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        check_dimensions(&a, &b, &c)?;
        let abscissa = spectral_abscissa(&a);
        if !(abscissa < HURWITZ_MARGIN) {
            return Err(Error::NotHurwitz(abscissa));
        }
        Ok(Self { a, b, c })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    /// DC gain `H(0) = -c^T A^{-1} b`; nonnegative for positive systems.
    pub fn dc_gain(&self) -> Result<f64> {
        let u = self
            .a
            .clone()
            .lu()
            .solve(&self.b)
            .ok_or_else(|| Error::Numerical("state matrix solve failed in dc_gain".into()))?;
        Ok(-self.c.dot(&u))
    }
}

/// `exp(m)`; nalgebra's scaling-and-squaring Pade implementation behind one
/// local name.
fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().exp()
}

/// Generator of the augmented linear dynamics on `(z, x, 1)` while the
/// schedule holds `level`: `z' = A z + lambda b x`, `x' = drive - decay x`.
fn augmented_generator(
    sys: &PositiveLinearSystem,
    params: &BottleneckParams,
    level: crate::bottleneck::ArcLevel,
) -> DMatrix<f64> {
    let n = sys.dim();
    let arc = params.arc(level);
    let mut g = DMatrix::zeros(n + 2, n + 2);
    g.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    for i in 0..n {
        g[(i, n)] = params.lambda() * sys.b[i];
    }
    g[(n, n)] = -arc.decay;
    g[(n, n + 1)] = arc.drive;
    g
}

/// Affine segment map on the joint state `(z, x)`: `u -> m u + q`.
struct SegmentMap {
    m: DMatrix<f64>,
    q: DVector<f64>,
}

fn segment_maps(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    sys: &PositiveLinearSystem,
) -> Vec<SegmentMap> {
    let n = sys.dim();
    signal
        .segments()
        .iter()
        .map(|seg| {
            let g = augmented_generator(sys, params, seg.level);
            let phi = expm(&(g * seg.duration));
            SegmentMap {
                m: phi.view((0, 0), (n + 1, n + 1)).into(),
                q: phi.view((0, n + 1), (n + 1, 1)).column(0).into(),
            }
        })
        .collect()
}

/// Solves the periodic boundary condition for the joint state and returns
/// the initial state `(z0, x0)` plus the composed maps.
fn solve_joint_orbit(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    sys: &PositiveLinearSystem,
) -> Result<(DVector<f64>, Vec<SegmentMap>)> {
    let n = sys.dim();
    let maps = segment_maps(signal, params, sys);
    let mut m_total = DMatrix::<f64>::identity(n + 1, n + 1);
    let mut q_total = DVector::<f64>::zeros(n + 1);
    for map in &maps {
        q_total = &map.m * q_total + &map.q;
        m_total = &map.m * m_total;
    }
    let lhs = DMatrix::<f64>::identity(n + 1, n + 1) - m_total;
    let u0 = lhs.lu().solve(&q_total).ok_or_else(|| {
        Error::Numerical("periodic boundary solve failed for the cascade".into())
    })?;
    Ok((u0, maps))
}

/// The entrained periodic orbit of the cascade.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOrbit {
    /// Periodic initial state of the linear block; componentwise nonnegative.
    pub z0: DVector<f64>,
    /// Periodic initial occupancy of the bottleneck.
    pub x0: f64,
    /// Average input into the linear block, `lambda * ave(x)`.
    pub average_input: f64,
    /// Average output `ave(y) = H(0) * average_input`, computed through the
    /// DC-gain identity rather than trajectory quadrature.
    pub average_output: f64,
    /// Joint state `(z, x)` at every switch instant; first and last entries
    /// coincide.
    pub boundary_states: Vec<DVector<f64>>,
}

/// Solves the entrained orbit of the cascade under a switching schedule.
///
/// Segments are propagated with the matrix exponential of the augmented
/// generator; the periodic initial state comes from the linear boundary
/// solve, and the average output from the exact identity
/// `ave(y) = H(0) * lambda * ave(x)` with `ave(x)` taken from the scalar
/// closed-form pipeline.
pub fn cascade_periodic_orbit(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    sys: &PositiveLinearSystem,
) -> Result<CascadeOrbit> {
    let n = sys.dim();
    let (u0, maps) = solve_joint_orbit(signal, params, sys)?;

    let mut boundary_states = Vec::with_capacity(maps.len() + 1);
    boundary_states.push(u0.clone());
    let mut u = u0.clone();
    for map in &maps {
        u = &map.m * u + &map.q;
        boundary_states.push(u.clone());
    }

    let scalar_orbit = periodic_fixed_point(signal, params);
    let average_input = params.lambda() * scalar_orbit.average_occupancy;
    let average_output = sys.dc_gain()? * average_input;

    Ok(CascadeOrbit {
        z0: u0.rows(0, n).into(),
        x0: u0[n],
        average_input,
        average_output,
        boundary_states,
    })
}

/// One sample of the entrained cascade trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSample {
    pub time: f64,
    pub occupancy: f64,
    pub state: DVector<f64>,
    pub output: f64,
}

/// Samples the entrained cascade trajectory, `samples_per_segment` equal
/// steps inside every arc plus the closing state. Each sample is exact: the
/// in-segment step reuses the matrix exponential of the substep.
pub fn cascade_trajectory(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    sys: &PositiveLinearSystem,
    samples_per_segment: usize,
) -> Result<Vec<CascadeSample>> {
    if samples_per_segment == 0 {
        return Err(Error::InvalidInput(
            "samples_per_segment must be at least 1".into(),
        ));
    }
    let n = sys.dim();
    let (u0, _) = solve_joint_orbit(signal, params, sys)?;

    let mut samples = Vec::with_capacity(signal.segments().len() * samples_per_segment + 1);
    let push = |samples: &mut Vec<CascadeSample>, t: f64, u: &DVector<f64>| {
        let state: DVector<f64> = u.rows(0, n).into();
        let output = sys.c.dot(&state);
        samples.push(CascadeSample {
            time: t,
            occupancy: u[n],
            state,
            output,
        });
    };

    let mut u = u0;
    let mut t = 0.0;
    push(&mut samples, t, &u);
    for seg in signal.segments() {
        let g = augmented_generator(sys, params, seg.level);
        let h = seg.duration / samples_per_segment as f64;
        let phi = expm(&(g * h));
        let step_m: DMatrix<f64> = phi.view((0, 0), (n + 1, n + 1)).into();
        let step_q: DVector<f64> = phi.view((0, n + 1), (n + 1, 1)).column(0).into();
        for _ in 0..samples_per_segment {
            u = &step_m * u + &step_q;
            t += h;
            push(&mut samples, t, &u);
        }
    }
    Ok(samples)
}

/// `exp([[G, I], [0, 0]] dt)` for a generator `G`: the top-left block is the
/// step map `exp(G dt)` and the top-right block is `Int_0^dt exp(G s) ds`.
fn expm_with_integral(g: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let dim = g.nrows();
    let mut block = DMatrix::<f64>::zeros(2 * dim, 2 * dim);
    block.view_mut((0, 0), (dim, dim)).copy_from(g);
    block
        .view_mut((0, dim), (dim, dim))
        .copy_from(&DMatrix::identity(dim, dim));
    let phi = expm(&(block * dt));
    (
        phi.view((0, 0), (dim, dim)).into(),
        phi.view((0, dim), (dim, dim)).into(),
    )
}

/// Average output over one period computed by exact state integration: each
/// segment contributes `Int z` through the block-matrix exponential
/// `exp([[G, I], [0, 0]] dt)`, whose upper-right block is `Int exp(G s) ds`.
///
/// This is the trajectory-side route to `ave(y)`; it must agree with the
/// DC-gain identity used by [`cascade_periodic_orbit`] to rounding error.
pub fn average_output_via_state_integrals(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    sys: &PositiveLinearSystem,
) -> Result<f64> {
    let n = sys.dim();
    let (u0, maps) = solve_joint_orbit(signal, params, sys)?;

    // Augment u with its trailing constant coordinate for propagation.
    let mut u_aug = DVector::<f64>::zeros(n + 2);
    u_aug.rows_mut(0, n + 1).copy_from(&u0);
    u_aug[n + 1] = 1.0;

    let mut output_integral = 0.0;
    for (seg, map) in signal.segments().iter().zip(&maps) {
        let g = augmented_generator(sys, params, seg.level);
        let (_, integral_op) = expm_with_integral(&g, seg.duration);
        let state_integral = &integral_op * &u_aug;
        output_integral += sys.c.dot(&state_integral.rows(0, n));

        let next = &map.m * u_aug.rows(0, n + 1) + &map.q;
        u_aug.rows_mut(0, n + 1).copy_from(&next);
    }
    Ok(output_integral / signal.period())
}

/// Result of checking the DC-gain averaging identity on one periodic input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prop9Check {
    /// Average output over the entrained period.
    pub average_output: f64,
    /// `H(0)` times the average input.
    pub predicted: f64,
    /// Relative disagreement between the two.
    pub residual: f64,
}

/// Verifies that the average entrained output equals the DC gain times the
/// average input for an arbitrary bounded periodic input, supplied as one
/// period of uniform samples (interpreted as its piecewise-linear periodic
/// interpolant).
///
/// The periodic response and its integral are computed exactly for that
/// interpolant, so the residual is rounding-level for any sample count.
pub fn verify_prop9(sys: &PositiveLinearSystem, w: &[f64], period: f64) -> Result<Prop9Check> {
    if w.is_empty() {
        return Err(Error::InvalidInput(
            "at least one input sample is required".into(),
        ));
    }
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::InvalidInput(format!(
            "period must be positive (got {period})"
        )));
    }
    let n = sys.dim();
    let dim = n + 2;
    let m = w.len();
    let h = period / m as f64;

    // Generator on (z, 1, tau) for one interval with input w0 + slope * tau.
    let generator = |w0: f64, slope: f64| -> DMatrix<f64> {
        let mut g = DMatrix::<f64>::zeros(dim, dim);
        g.view_mut((0, 0), (n, n)).copy_from(&sys.a);
        for i in 0..n {
            g[(i, n)] = w0 * sys.b[i];
            g[(i, n + 1)] = slope * sys.b[i];
        }
        g[(n + 1, n)] = 1.0; // tau' = 1
        g
    };

    // One doubled exponential per interval yields both the step map on z
    // and the exact state integral.
    let mut step_m: Vec<DMatrix<f64>> = Vec::with_capacity(m);
    let mut step_q: Vec<DVector<f64>> = Vec::with_capacity(m);
    let mut integral_ops: Vec<DMatrix<f64>> = Vec::with_capacity(m);
    for k in 0..m {
        let w0 = w[k];
        let slope = (w[(k + 1) % m] - w0) / h;
        let (phi, integral_op) = expm_with_integral(&generator(w0, slope), h);
        step_m.push(phi.view((0, 0), (n, n)).into());
        step_q.push(phi.view((0, n), (n, 1)).column(0).into());
        integral_ops.push(integral_op);
    }

    let mut m_total = DMatrix::<f64>::identity(n, n);
    let mut q_total = DVector::<f64>::zeros(n);
    for k in 0..m {
        q_total = &step_m[k] * q_total + &step_q[k];
        m_total = &step_m[k] * m_total;
    }
    let z0 = (DMatrix::<f64>::identity(n, n) - m_total)
        .lu()
        .solve(&q_total)
        .ok_or_else(|| Error::Numerical("periodic response solve failed".into()))?;

    // Integrate the output exactly interval by interval.
    let mut z = z0;
    let mut output_integral = 0.0;
    for k in 0..m {
        let mut u = DVector::<f64>::zeros(dim);
        u.rows_mut(0, n).copy_from(&z);
        u[n] = 1.0;
        let state_integral = &integral_ops[k] * u;
        output_integral += sys.c.dot(&state_integral.rows(0, n));
        z = &step_m[k] * z + &step_q[k];
    }

    let average_output = output_integral / period;
    // Mean of the piecewise-linear interpolant over a full period.
    let average_input = w.iter().sum::<f64>() / m as f64;
    let predicted = sys.dc_gain()? * average_input;
    let denom = average_output.abs().max(predicted.abs()).max(1e-30);
    Ok(Prop9Check {
        average_output,
        predicted,
        residual: (average_output - predicted).abs() / denom,
    })
}
