//! The full ribosome flow model and its bottleneck reduction.
//!
//! The flow model tracks `n` site occupancies with unidirectional hopping
//! and exclusion,
//!
//! ```text
//! x_k' = r_{k-1} x_{k-1} (1 - x_k) - r_k x_k (1 - x_{k+1}),
//! ```
//!
//! with the conventions `x_0 = 1` and `x_{n+1} = 0`, and with the initiation
//! rate `r_0` replaced by the time-varying inflow `sigma(t)`. When the site
//! rates dwarf the inflow, the downstream occupancies stay near zero and the
//! model reduces to a bottleneck feeding a linear chain, which the exact
//! cascade machinery solves in closed form. This module integrates the full
//! nonlinear model numerically and measures how well that reduction holds.

use nalgebra::{DMatrix, DVector};

use crate::bottleneck::{periodic_fixed_point, BottleneckParams};
use crate::cascade::{cascade_periodic_orbit, PositiveLinearSystem};
use crate::error::{Error, Result};
use crate::signals::SwitchingSignal;

/// Sup-norm tolerance on the period map residual that counts as entrained.
pub const ENTRAINMENT_TOL: f64 = 1e-10;
/// Hard cap on the number of periods when entrainment is required;
/// entrainment is guaranteed analytically, so running past this signals a
/// defect, not a slow orbit.
pub const ENTRAINMENT_PERIOD_CAP: usize = 10_000;
/// Occupancies may leave `[0, 1]` by at most this much before the
/// integration step is declared too coarse.
const CUBE_TOL: f64 = 1e-9;

/// Site transition rates `r_1 .. r_n`; the initiation rate is the
/// time-varying inflow and is supplied separately.
#[derive(Debug, Clone, PartialEq)]
pub struct RfmParams {
    rates: Vec<f64>,
}

impl RfmParams {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidInput(
                "the flow model needs at least one site".into(),
            ));
        }
        for &r in &rates {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::NonPositiveRate {
                    name: "site rate",
                    value: r,
                });
            }
        }
        Ok(Self { rates })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn site_count(&self) -> usize {
        self.rates.len()
    }

    /// Exit rate of the last site (the model output is `r_n * x_n`).
    pub fn exit_rate(&self) -> f64 {
        *self.rates.last().expect("at least one site")
    }
}

/// A point of the state space, the closed unit cube.
#[derive(Debug, Clone, PartialEq)]
pub struct RfmState {
    occupancies: Vec<f64>,
}

impl RfmState {
    pub fn new(occupancies: Vec<f64>) -> Result<Self> {
        for &x in &occupancies {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::OccupancyOutOfRange(x));
            }
        }
        Ok(Self { occupancies })
    }

    /// The empty configuration.
    pub fn zeros(n: usize) -> Self {
        Self {
            occupancies: vec![0.0; n],
        }
    }

    /// The fully packed configuration.
    pub fn ones(n: usize) -> Self {
        Self {
            occupancies: vec![1.0; n],
        }
    }

    pub fn occupancies(&self) -> &[f64] {
        &self.occupancies
    }
}

/// The flow-model vector field with inflow `sigma` in place of the
/// initiation rate.
pub fn rfm_rhs(params: &RfmParams, state: &[f64], sigma: f64) -> Vec<f64> {
    let mut out = vec![0.0; state.len()];
    rfm_rhs_into(params, state, sigma, &mut out);
    out
}

fn rfm_rhs_into(params: &RfmParams, state: &[f64], sigma: f64, out: &mut [f64]) {
    let n = state.len();
    let rates = &params.rates;
    for k in 0..n {
        let inflow = if k == 0 {
            sigma * (1.0 - state[0])
        } else {
            rates[k - 1] * state[k - 1] * (1.0 - state[k])
        };
        let vacancy_ahead = if k + 1 < n { 1.0 - state[k + 1] } else { 1.0 };
        let outflow = rates[k] * state[k] * vacancy_ahead;
        out[k] = inflow - outflow;
    }
}

/// Trajectory and periodic-orbit estimate from integrating the full model.
#[derive(Debug, Clone, PartialEq)]
pub struct RfmSimulation {
    /// State at the period boundaries `0, T, 2T, ...`.
    pub period_states: Vec<Vec<f64>>,
    /// Index of the first period whose map residual fell below
    /// [`ENTRAINMENT_TOL`], if any.
    pub entrained_after: Option<usize>,
    /// Sample times of the final (entrained) period, relative to its start.
    pub sample_times: Vec<f64>,
    /// State at each sample time of the final period.
    pub sample_states: Vec<Vec<f64>>,
    /// Average outflow `r_n * ave(x_n)` over the final period (Simpson on
    /// the integration grid).
    pub average_outflow: f64,
}

struct Rk4Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Workspace {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

fn rk4_step(
    params: &RfmParams,
    state: &mut [f64],
    sigma: f64,
    h: f64,
    ws: &mut Rk4Workspace,
) {
    let n = state.len();
    rfm_rhs_into(params, state, sigma, &mut ws.k1);
    for i in 0..n {
        ws.tmp[i] = state[i] + 0.5 * h * ws.k1[i];
    }
    rfm_rhs_into(params, &ws.tmp, sigma, &mut ws.k2);
    for i in 0..n {
        ws.tmp[i] = state[i] + 0.5 * h * ws.k2[i];
    }
    rfm_rhs_into(params, &ws.tmp, sigma, &mut ws.k3);
    for i in 0..n {
        ws.tmp[i] = state[i] + h * ws.k3[i];
    }
    rfm_rhs_into(params, &ws.tmp, sigma, &mut ws.k4);
    for i in 0..n {
        state[i] += (h / 6.0) * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}

fn check_cube(state: &[f64], t: f64) -> Result<()> {
    for (i, &x) in state.iter().enumerate() {
        if !(-CUBE_TOL..=1.0 + CUBE_TOL).contains(&x) {
            return Err(Error::StateEscaped {
                time: t,
                site: i,
                value: x,
            });
        }
    }
    Ok(())
}

/// Even number of integration substeps covering a segment at nominal step
/// `h`; evenness keeps composite Simpson applicable on the segment grid.
fn substeps(duration: f64, step: f64) -> usize {
    let n = (duration / step).ceil() as usize;
    (n + (n % 2)).max(2)
}

fn validate_inflow(params: &RfmParams, inflow: &BottleneckParams) -> Result<()> {
    if inflow.lambda() != params.rates[0] {
        return Err(Error::InvalidInput(format!(
            "inflow lambda ({}) must equal the first site rate ({})",
            inflow.lambda(),
            params.rates[0]
        )));
    }
    Ok(())
}

/// Integrates the full flow model under a switching inflow.
///
/// Classical fourth-order steps with the grid aligned to switch instants, so
/// no step straddles an inflow discontinuity. Runs until the period map
/// settles below [`ENTRAINMENT_TOL`] or `n_periods` elapses, then samples
/// one further period as the periodic-orbit estimate.
///
/// `inflow.lambda()` must equal the first site rate: the inflow bundle is
/// shared with the reduced bottleneck model, whose exit rate is `r_1`.
pub fn simulate_rfm(
    params: &RfmParams,
    inflow: &BottleneckParams,
    signal: &SwitchingSignal,
    x_init: &RfmState,
    n_periods: usize,
    step: f64,
) -> Result<RfmSimulation> {
    validate_inflow(params, inflow)?;
    let n = params.site_count();
    if x_init.occupancies.len() != n {
        return Err(Error::DimensionMismatch {
            context: "initial state",
            expected: n,
            actual: x_init.occupancies.len(),
        });
    }
    if n_periods == 0 {
        return Err(Error::InvalidInput("n_periods must be at least 1".into()));
    }
    let period = signal.period();
    if !(step > 0.0) || step > period / 100.0 {
        return Err(Error::InvalidInput(format!(
            "step must satisfy 0 < step <= T/100 (got {step}, T = {period})"
        )));
    }

    let mut ws = Rk4Workspace::new(n);
    let mut state = x_init.occupancies.clone();
    let mut period_states = vec![state.clone()];
    let mut entrained_after = None;

    for k in 0..n_periods {
        let before = state.clone();
        advance_period(params, inflow, signal, &mut state, &mut ws, step, None)?;
        period_states.push(state.clone());
        let residual = state
            .iter()
            .zip(&before)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < ENTRAINMENT_TOL {
            entrained_after = Some(k + 1);
            break;
        }
    }

    // One more period, sampled, as the periodic-orbit estimate.
    let mut run = PeriodSamples::new(&state, params.exit_rate());
    advance_period(
        params,
        inflow,
        signal,
        &mut state,
        &mut ws,
        step,
        Some(&mut run),
    )?;
    period_states.push(state.clone());

    Ok(RfmSimulation {
        period_states,
        entrained_after,
        sample_times: run.times,
        sample_states: run.states,
        average_outflow: run.outflow_integral / period,
    })
}

/// Sample collector for one period: the node grid plus a composite-Simpson
/// accumulation of the outflow `r_n * x_n`.
struct PeriodSamples {
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    outflow_integral: f64,
    exit_rate: f64,
}

impl PeriodSamples {
    fn new(initial: &[f64], exit_rate: f64) -> Self {
        Self {
            times: vec![0.0],
            states: vec![initial.to_vec()],
            outflow_integral: 0.0,
            exit_rate,
        }
    }
}

/// Advances one full period with segment-aligned steps. With a collector,
/// records every node and accumulates the Simpson outflow integral; each
/// segment is its own Simpson panel with an even substep count.
fn advance_period(
    params: &RfmParams,
    inflow: &BottleneckParams,
    signal: &SwitchingSignal,
    state: &mut [f64],
    ws: &mut Rk4Workspace,
    step: f64,
    mut collector: Option<&mut PeriodSamples>,
) -> Result<()> {
    let n = state.len();
    let mut t_local = 0.0;
    for seg in signal.segments() {
        let sigma = inflow.inflow_rate(seg.level);
        let m = substeps(seg.duration, step);
        let h = seg.duration / m as f64;
        if let Some(run) = collector.as_deref_mut() {
            // Opening node of this segment's Simpson panel.
            run.outflow_integral += h / 3.0 * run.exit_rate * state[n - 1];
        }
        for i in 1..=m {
            rk4_step(params, state, sigma, h, ws);
            t_local += h;
            check_cube(state, t_local)?;
            if let Some(run) = collector.as_deref_mut() {
                run.times.push(t_local);
                run.states.push(state.to_vec());
                let weight = if i == m {
                    h / 3.0
                } else if i % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                };
                run.outflow_integral += weight * run.exit_rate * state[n - 1];
            }
        }
    }
    Ok(())
}

/// Builds the reduced linear chain for sites `2..n`: state `z_i`, dynamics
/// `z_i' = r_{i-1} z_{i-1} - r_i z_i` driven by `w = r_1 x_1`, output
/// `r_n z_n`. Mass conservation makes its DC gain exactly one.
fn reduced_chain(params: &RfmParams) -> Result<PositiveLinearSystem> {
    let n = params.site_count();
    let m = n - 1; // chain states z_2 .. z_n
    let rates = params.rates();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = -rates[i + 1];
        if i > 0 {
            a[(i, i - 1)] = rates[i];
        }
    }
    let mut b = DVector::<f64>::zeros(m);
    b[0] = 1.0;
    let mut c = DVector::<f64>::zeros(m);
    c[m - 1] = rates[m];
    PositiveLinearSystem::new(a, b, c)
}

/// Side-by-side comparison of the full model and its bottleneck reduction
/// on the entrained orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub site_count: usize,
    /// `min site rate / max inflow rate`; the reduction is designed for
    /// large values.
    pub rate_ratio: f64,
    pub average_output_full: f64,
    pub average_output_reduced: f64,
    /// `|full - reduced| / reduced`.
    pub relative_output_gap: f64,
    /// Largest pointwise occupancy gap per site over the entrained period.
    pub per_site_max_gap: Vec<f64>,
    /// Periods the full model needed to entrain.
    pub periods_to_entrain: usize,
}

/// Runs the full model to entrainment and the reduced cascade exactly, then
/// reports per-site and average-output discrepancies. Large discrepancies
/// are data (the reduction is simply invalid there), not errors.
pub fn compare_reduction(
    params: &RfmParams,
    inflow: &BottleneckParams,
    signal: &SwitchingSignal,
    step: f64,
) -> Result<ReductionReport> {
    validate_inflow(params, inflow)?;
    let n = params.site_count();

    let full = simulate_rfm(
        params,
        inflow,
        signal,
        &RfmState::zeros(n),
        ENTRAINMENT_PERIOD_CAP,
        step,
    )?;
    let periods_to_entrain = match full.entrained_after {
        Some(k) => k,
        None => {
            let last = full.period_states.len() - 2;
            let residual = full.period_states[last]
                .iter()
                .zip(&full.period_states[last - 1])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            return Err(Error::NoEntrainment {
                periods: ENTRAINMENT_PERIOD_CAP,
                residual,
            });
        }
    };

    let scalar_orbit = periodic_fixed_point(signal, inflow);
    let average_output_reduced;
    let mut per_site_max_gap = vec![0.0f64; n];

    if n == 1 {
        // The reduction is the bottleneck itself.
        average_output_reduced = inflow.lambda() * scalar_orbit.average_occupancy;
        for (t, s) in full.sample_times.iter().zip(&full.sample_states) {
            let exact = exact_occupancy_at(signal, inflow, scalar_orbit.x0, *t);
            per_site_max_gap[0] = per_site_max_gap[0].max((s[0] - exact).abs());
        }
    } else {
        let chain = reduced_chain(params)?;
        let orbit = cascade_periodic_orbit(signal, inflow, &chain)?;
        average_output_reduced = orbit.average_output;

        // Propagate the reduced joint state over exactly the full model's
        // sample grid: per segment the substep map is one matrix exponential.
        let mut u = DVector::<f64>::zeros(n + 1);
        u.rows_mut(0, n - 1).copy_from(&orbit.z0);
        u[n - 1] = orbit.x0;
        u[n] = 1.0;
        let mut reduced_states: Vec<DVector<f64>> = vec![u.clone()];
        for seg in signal.segments() {
            let g = reduced_generator(&chain, inflow, seg.level);
            let m = substeps(seg.duration, step);
            let h = seg.duration / m as f64;
            let phi = (g * h).exp();
            for _ in 0..m {
                u = &phi * u;
                reduced_states.push(u.clone());
            }
        }
        debug_assert_eq!(reduced_states.len(), full.sample_states.len());
        for (s_full, s_red) in full.sample_states.iter().zip(&reduced_states) {
            // Reduced ordering: (z_2..z_n, x_1, 1); full ordering: (x_1..x_n).
            per_site_max_gap[0] = per_site_max_gap[0].max((s_full[0] - s_red[n - 1]).abs());
            for site in 1..n {
                per_site_max_gap[site] =
                    per_site_max_gap[site].max((s_full[site] - s_red[site - 1]).abs());
            }
        }
    }

    let max_inflow = inflow.sigma_high();
    let min_rate = params.rates().iter().cloned().fold(f64::INFINITY, f64::min);
    let denom = average_output_reduced.abs().max(1e-30);
    Ok(ReductionReport {
        site_count: n,
        rate_ratio: min_rate / max_inflow,
        average_output_full: full.average_outflow,
        average_output_reduced,
        relative_output_gap: (full.average_outflow - average_output_reduced).abs() / denom,
        per_site_max_gap,
        periods_to_entrain,
    })
}

/// Generator of the reduced joint dynamics `(z, x, 1)` for one arc.
fn reduced_generator(
    chain: &PositiveLinearSystem,
    inflow: &BottleneckParams,
    level: crate::bottleneck::ArcLevel,
) -> DMatrix<f64> {
    let m = chain.dim();
    let arc = inflow.arc(level);
    let mut g = DMatrix::<f64>::zeros(m + 2, m + 2);
    g.view_mut((0, 0), (m, m)).copy_from(chain.a());
    for i in 0..m {
        g[(i, m)] = inflow.lambda() * chain.b()[i];
    }
    g[(m, m)] = -arc.decay;
    g[(m, m + 1)] = arc.drive;
    g
}

/// Exact bottleneck occupancy at time `t` into the period, starting the
/// period at `x0`.
fn exact_occupancy_at(
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
        x = crate::bottleneck::scalar_step_exact(arc.drive, arc.decay, x, dt)
            .expect("positive decay");
        remaining -= dt;
        if remaining <= 0.0 {
            break;
        }
    }
    x
}
