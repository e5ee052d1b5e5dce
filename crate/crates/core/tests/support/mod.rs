//! Shared test oracles, fully independent of the closed-form pipeline: a
//! classical fourth-order integrator for the scalar bottleneck and the joint
//! cascade, with composite-Simpson quadrature on the same grid.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use flowgain::{ArcLevel, BottleneckParams, PositiveLinearSystem, SwitchingSignal};

/// One fourth-order step of `x' = a - b x`.
fn rk4_scalar_step(a: f64, b: f64, x: f64, h: f64) -> f64 {
    let f = |x: f64| a - b * x;
    let k1 = f(x);
    let k2 = f(x + 0.5 * h * k1);
    let k3 = f(x + 0.5 * h * k2);
    let k4 = f(x + h * k3);
    x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Integrates one arc and its occupancy integral with `steps` fourth-order
/// steps (rounded up to even for Simpson).
pub fn rk4_segment(a: f64, b: f64, x0: f64, dt: f64, steps: usize) -> (f64, f64) {
    let m = (steps + steps % 2).max(2);
    let h = dt / m as f64;
    let mut x = x0;
    let mut integral = h / 3.0 * x;
    for i in 1..=m {
        x = rk4_scalar_step(a, b, x, h);
        let weight = if i == m {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
        integral += weight * x;
    }
    (x, integral)
}

/// Even substep count for a segment at nominal step `h`.
fn segment_steps(duration: f64, step: f64) -> usize {
    let n = (duration / step).ceil() as usize;
    (n + n % 2).max(2)
}

/// Advances one period of the switched bottleneck; returns the end state
/// and the occupancy integral over the period.
pub fn rk4_bottleneck_period(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    x0: f64,
    step: f64,
) -> (f64, f64) {
    let mut x = x0;
    let mut integral = 0.0;
    for seg in signal.segments() {
        let arc = params.arc(seg.level);
        let (x1, part) = rk4_segment(
            arc.drive,
            arc.decay,
            x,
            seg.duration,
            segment_steps(seg.duration, step),
        );
        x = x1;
        integral += part;
    }
    (x, integral)
}

/// Runs the integrator to its entrained orbit (period-map residual below
/// `1e-12` or 5000 periods) and returns `(x0, average occupancy)`.
pub fn rk4_entrained_orbit(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    step: f64,
) -> (f64, f64) {
    let mut x = 0.5;
    for _ in 0..5000 {
        let (x1, _) = rk4_bottleneck_period(signal, params, x, step);
        let settled = (x1 - x).abs() < 1e-12;
        x = x1;
        if settled {
            break;
        }
    }
    let (_, integral) = rk4_bottleneck_period(signal, params, x, step);
    (x, integral / signal.period())
}

/// Joint fourth-order co-simulation of the cascade state `(z, x)` over one
/// period; returns the end state and the output integral.
pub fn rk4_cascade_period(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    sys: &PositiveLinearSystem,
    u0: &DVector<f64>,
    step: f64,
) -> (DVector<f64>, f64) {
    let n = sys.dim();
    let field = |arc: flowgain::ArcCoefficients, u: &DVector<f64>| -> DVector<f64> {
        let z = u.rows(0, n);
        let x = u[n];
        let mut du = DVector::<f64>::zeros(n + 1);
        let dz = sys.a() * z + sys.b() * (params.lambda() * x);
        du.rows_mut(0, n).copy_from(&dz);
        du[n] = arc.drive - arc.decay * x;
        du
    };
    let mut u = u0.clone();
    let mut output_integral = 0.0;
    for seg in signal.segments() {
        let arc = params.arc(seg.level);
        let m = segment_steps(seg.duration, step);
        let h = seg.duration / m as f64;
        output_integral += h / 3.0 * sys.c().dot(&u.rows(0, n));
        for i in 1..=m {
            let k1 = field(arc, &u);
            let k2 = field(arc, &(&u + &k1 * (0.5 * h)));
            let k3 = field(arc, &(&u + &k2 * (0.5 * h)));
            let k4 = field(arc, &(&u + &k3 * h));
            u += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            let weight = if i == m {
                h / 3.0
            } else if i % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            };
            output_integral += weight * sys.c().dot(&u.rows(0, n));
        }
    }
    (u, output_integral)
}

/// Entrained cascade orbit by brute iteration; returns the joint initial
/// state and the average output.
pub fn rk4_cascade_entrained(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    sys: &PositiveLinearSystem,
    step: f64,
) -> (DVector<f64>, f64) {
    let n = sys.dim();
    let mut u = DVector::<f64>::zeros(n + 1);
    for _ in 0..5000 {
        let (u1, _) = rk4_cascade_period(signal, params, sys, &u, step);
        let settled = (&u1 - &u).amax() < 1e-12;
        u = u1;
        if settled {
            break;
        }
    }
    let (_, integral) = rk4_cascade_period(signal, params, sys, &u, step);
    (u, integral / signal.period())
}

/// A random positive system: Metzler off-diagonal entries with a strictly
/// dominant negative diagonal (hence Hurwitz), and gains bounded away from
/// zero so the DC gain never vanishes.
pub fn random_positive_system<R: Rng>(n: usize, rng: &mut R) -> PositiveLinearSystem {
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                a[(i, j)] = rng.random::<f64>();
            }
        }
    }
    for i in 0..n {
        let row_sum: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = -(row_sum + 0.1 + rng.random::<f64>());
    }
    let b = DVector::from_fn(n, |_, _| 0.1 + rng.random::<f64>());
    let c = DVector::from_fn(n, |_, _| 0.1 + rng.random::<f64>());
    PositiveLinearSystem::new(a, b, c).expect("diagonally dominant Metzler matrix is Hurwitz")
}

/// The parameter grid used by the property corpora:
/// `lambda x sigma_bar x epsilon/sigma_bar` over 27 combinations.
pub const LAMBDA_GRID: [f64; 3] = [0.2, 1.0, 5.0];
pub const SIGMA_GRID: [f64; 3] = [0.5, 1.0, 2.0];
pub const EPSILON_RATIO_GRID: [f64; 3] = [0.1, 0.5, 0.9];

/// Deterministic parameter combination `index % 27`.
pub fn grid_params(index: usize) -> BottleneckParams {
    let lambda = LAMBDA_GRID[index % 3];
    let sigma_bar = SIGMA_GRID[(index / 3) % 3];
    let ratio = EPSILON_RATIO_GRID[(index / 9) % 3];
    BottleneckParams::new(lambda, sigma_bar, ratio * sigma_bar).expect("grid values are valid")
}

/// Occupancy from exact per-arc propagation at an arbitrary time into the
/// period; used to sample the bottleneck outflow as a test input.
pub fn exact_occupancy(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    x0: f64,
    t: f64,
) -> f64 {
    let mut x = x0;
    let mut remaining = t;
    for seg in signal.segments() {
        let arc = params.arc(seg.level);
        let dt = remaining.min(seg.duration);
        x = flowgain::scalar_step_exact(arc.drive, arc.decay, x, dt).unwrap();
        remaining -= dt;
        if remaining <= 0.0 {
            break;
        }
    }
    x
}

// Not every test file uses every oracle.
#[allow(dead_code)]
fn _support_is_shared() {}

#[allow(dead_code)]
pub fn arc_level_name(level: ArcLevel) -> &'static str {
    match level {
        ArcLevel::Minus => "minus",
        ArcLevel::Zero => "zero",
        ArcLevel::Plus => "plus",
    }
}
