//! Exact analysis of the switched bottleneck element.
//!
//! The bottleneck is the scalar flow model
//!
//! ```text
//! x'(t) = sigma(t) * (1 - x(t)) - lambda * x(t),      w(t) = lambda * x(t),
//! ```
//!
//! where `x` is the occupancy, `sigma(t)` the inflow rate and `lambda` the
//! exit rate. When `sigma` is piecewise constant the dynamics on each arc are
//! affine, `x' = drive - decay * x`, so the flow map of every segment is an
//! explicit affine contraction and the entrained periodic orbit is the fixed
//! point of their composition. Everything in this module is closed-form; no
//! quadrature or time stepping is involved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signals::{check_admissible_b, SwitchingSignal};

/// `1 - e^-u` evaluated without cancellation for small `u`.
#[inline]
pub(crate) fn one_minus_exp_neg(u: f64) -> f64 {
    -(-u).exp_m1()
}

/// Inflow level of an arc: the sign of the deviation from the mean inflow.
///
/// `Plus` and `Minus` are the high/low inflow phases `sigma_bar +- epsilon`;
/// `Zero` is the mean inflow itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcLevel {
    Minus,
    Zero,
    Plus,
}

impl ArcLevel {
    /// Deviation sign, -1, 0 or +1.
    pub fn sign(self) -> f64 {
        match self {
            ArcLevel::Minus => -1.0,
            ArcLevel::Zero => 0.0,
            ArcLevel::Plus => 1.0,
        }
    }
}

/// Coefficients of the affine arc dynamics `x' = drive - decay * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcCoefficients {
    /// Constant forcing term (equals the inflow rate of the arc).
    pub drive: f64,
    /// Relaxation rate; always positive for valid parameters.
    pub decay: f64,
}

impl ArcCoefficients {
    /// Equilibrium occupancy `drive / decay` of the arc held forever.
    pub fn fixed_point(&self) -> f64 {
        self.drive / self.decay
    }
}

/// Parameters of the bottleneck: exit rate, mean inflow and switching
/// amplitude. The low/high inflow levels are `sigma_bar -+ epsilon`, kept
/// symmetric about the mean so that balancing the high and low phases
/// preserves the mean inflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBottleneckParams")]
pub struct BottleneckParams {
    lambda: f64,
    sigma_bar: f64,
    epsilon: f64,
}

#[derive(Deserialize)]
struct RawBottleneckParams {
    lambda: f64,
    sigma_bar: f64,
    epsilon: f64,
}

impl TryFrom<RawBottleneckParams> for BottleneckParams {
    type Error = Error;

    fn try_from(raw: RawBottleneckParams) -> Result<Self> {
        BottleneckParams::new(raw.lambda, raw.sigma_bar, raw.epsilon)
    }
}

impl BottleneckParams {
    /// Requires `lambda > 0`, `sigma_bar > 0` and `0 <= epsilon < sigma_bar`,
    /// so that both switched inflow levels stay positive.
    pub fn new(lambda: f64, sigma_bar: f64, epsilon: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::NonPositiveRate {
                name: "lambda",
                value: lambda,
            });
        }
        if !(sigma_bar > 0.0) || !sigma_bar.is_finite() {
            return Err(Error::NonPositiveRate {
                name: "sigma_bar",
                value: sigma_bar,
            });
        }
        if !(epsilon >= 0.0 && epsilon < sigma_bar) {
            return Err(Error::AmplitudeOutOfRange { epsilon, sigma_bar });
        }
        Ok(Self {
            lambda,
            sigma_bar,
            epsilon,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn sigma_bar(&self) -> f64 {
        self.sigma_bar
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Low inflow level `sigma_bar - epsilon`.
    pub fn sigma_low(&self) -> f64 {
        self.sigma_bar - self.epsilon
    }

    /// High inflow level `sigma_bar + epsilon`.
    pub fn sigma_high(&self) -> f64 {
        self.sigma_bar + self.epsilon
    }

    /// Inflow rate while the schedule holds `level`.
    pub fn inflow_rate(&self, level: ArcLevel) -> f64 {
        self.sigma_bar + self.epsilon * level.sign()
    }

    /// Affine coefficients of the arc at `level`:
    /// `drive = sigma_bar + epsilon*sign`, `decay = sigma_bar + lambda + epsilon*sign`.
    pub fn arc(&self, level: ArcLevel) -> ArcCoefficients {
        let s = level.sign();
        ArcCoefficients {
            drive: self.sigma_bar + self.epsilon * s,
            decay: self.sigma_bar + self.lambda + self.epsilon * s,
        }
    }

    /// Occupancy fixed point `sigma_bar / (sigma_bar + lambda)` under the
    /// constant mean inflow.
    pub fn mean_fixed_point(&self) -> f64 {
        self.sigma_bar / (self.sigma_bar + self.lambda)
    }

    /// Outflow `lambda * sigma_bar / (sigma_bar + lambda)` of the constant
    /// mean inflow; the reference value the periodic gain is measured against.
    pub fn constant_outflow(&self) -> f64 {
        self.lambda * self.mean_fixed_point()
    }
}

/// Exact flow map of one arc: `x -> factor * x + offset` over the arc
/// duration. `factor` lies in (0, 1) for any positive duration, so every
/// segment map is a contraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub factor: f64,
    pub offset: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        factor: 1.0,
        offset: 0.0,
    };

    pub fn apply(&self, x: f64) -> f64 {
        self.factor * x + self.offset
    }

    /// Map equal to applying `self` first and `next` afterwards.
    pub fn then(&self, next: &AffineMap) -> AffineMap {
        AffineMap {
            factor: next.factor * self.factor,
            offset: next.factor * self.offset + next.offset,
        }
    }
}

/// Propagates `x' = a - b x` exactly over `dt`:
/// `x(dt) = e^(-b dt) x0 + (a/b)(1 - e^(-b dt))`.
///
/// Evaluated in the cancellation-safe form `x0 + (e^(-b dt) - 1)(x0 - a/b)`
/// so that short arcs (fast switching) lose no precision.
pub fn scalar_step_exact(a: f64, b: f64, x0: f64, dt: f64) -> Result<f64> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::NonPositiveRate {
            name: "decay rate b",
            value: b,
        });
    }
    if !(dt >= 0.0) {
        return Err(Error::NegativeDuration(dt));
    }
    let em1 = (-b * dt).exp_m1(); // e^(-b dt) - 1, in [-1, 0]
    Ok(x0 + em1 * (x0 - a / b))
}

/// Exact integral of the arc solution over `[0, dt]`. By integrating the
/// affine equation once, `b * Int x = a * dt + x0 - x1`, which avoids any
/// quadrature.
pub fn segment_integral(a: f64, b: f64, x0: f64, dt: f64) -> Result<f64> {
    let x1 = scalar_step_exact(a, b, x0, dt)?;
    Ok((a * dt + x0 - x1) / b)
}

/// Affine flow map of the arc at `level` over a positive duration.
pub fn segment_affine_map(
    level: ArcLevel,
    params: &BottleneckParams,
    dt: f64,
) -> Result<AffineMap> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!(
            "segment duration must be positive (got {dt})"
        )));
    }
    let arc = params.arc(level);
    let one_minus_m = one_minus_exp_neg(arc.decay * dt);
    Ok(AffineMap {
        factor: 1.0 - one_minus_m,
        offset: arc.fixed_point() * one_minus_m,
    })
}

/// The unique entrained periodic solution of the bottleneck under a
/// switching schedule: initial value, occupancy at every switch instant and
/// the exact time-average occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    /// Occupancy at the start of the period; equals the occupancy at the end.
    pub x0: f64,
    /// Occupancy at each switch instant, `segments + 1` entries; the first
    /// and last both equal `x0`.
    pub segment_endpoints: Vec<f64>,
    /// Duration-weighted exact average occupancy over one period.
    pub average_occupancy: f64,
    /// Period of the schedule.
    pub period: f64,
}

impl PeriodicOrbit {
    /// Exact occupancy integral over one period.
    pub fn occupancy_integral(&self) -> f64 {
        self.average_occupancy * self.period
    }
}

/// Solves the periodic boundary condition `x(T) = x(0)` for a switching
/// schedule.
///
/// The composition of the per-segment affine maps is `x -> M x + Q` with
/// `M = exp(-sum decay_i * dt_i) < 1`, so the fixed point `x0 = Q / (1 - M)`
/// exists and is unique; `1 - M` is evaluated through `expm1` of the summed
/// exponent to stay accurate when the total contraction is weak.
pub fn periodic_fixed_point(signal: &SwitchingSignal, params: &BottleneckParams) -> PeriodicOrbit {
    let mut offset = 0.0;
    let mut exponent = 0.0;
    for seg in signal.segments() {
        let arc = params.arc(seg.level);
        let one_minus_m = one_minus_exp_neg(arc.decay * seg.duration);
        offset = (1.0 - one_minus_m) * offset + arc.fixed_point() * one_minus_m;
        exponent += arc.decay * seg.duration;
    }
    let x0 = offset / one_minus_exp_neg(exponent);

    let mut endpoints = Vec::with_capacity(signal.segments().len() + 1);
    endpoints.push(x0);
    let mut x = x0;
    let mut integral = 0.0;
    for seg in signal.segments() {
        let arc = params.arc(seg.level);
        integral += segment_integral(arc.drive, arc.decay, x, seg.duration)
            .expect("arc decay is positive by construction");
        x = scalar_step_exact(arc.drive, arc.decay, x, seg.duration)
            .expect("arc decay is positive by construction");
        endpoints.push(x);
    }
    // Close the loop exactly: x(T) equals x0 up to rounding by construction.
    let last = endpoints.last_mut().expect("at least one segment");
    *last = x0;

    PeriodicOrbit {
        x0,
        segment_endpoints: endpoints,
        average_occupancy: integral / signal.period(),
        period: signal.period(),
    }
}

/// Average production rate `lambda * ave(x)` along the entrained orbit.
pub fn average_outflow(orbit: &PeriodicOrbit, params: &BottleneckParams) -> f64 {
    params.lambda() * orbit.average_occupancy
}

/// Periodic gain of a schedule: its average outflow divided by the outflow
/// of the constant inflow with the same mean.
///
/// Equals 1 for the constant schedule and is strictly below 1 for every
/// admissible schedule that actually switches. Inadmissible schedules are
/// rejected with the failed membership conditions.
pub fn periodic_gain(signal: &SwitchingSignal, params: &BottleneckParams) -> Result<f64> {
    let report = check_admissible_b(signal, params);
    if !report.is_member() {
        return Err(Error::Inadmissible(report));
    }
    if params.epsilon() == 0.0 {
        // All levels collapse to the mean inflow: the schedule is the
        // constant inflow and the gain is exactly one.
        return Ok(1.0);
    }
    let orbit = periodic_fixed_point(signal, params);
    Ok(orbit.average_occupancy / params.mean_fixed_point())
}

/// Gain of the vacancy output `lambda * (1 - x)`: the mirror quantity under
/// the substitution `xi = 1 - x`. At least 1 for every admissible schedule;
/// for the vacancy output, switching beats the constant inflow.
pub fn dual_gain(signal: &SwitchingSignal, params: &BottleneckParams) -> Result<f64> {
    let report = check_admissible_b(signal, params);
    if !report.is_member() {
        return Err(Error::Inadmissible(report));
    }
    if params.epsilon() == 0.0 {
        return Ok(1.0);
    }
    let orbit = periodic_fixed_point(signal, params);
    Ok((1.0 - orbit.average_occupancy) / (1.0 - params.mean_fixed_point()))
}

/// Closed-form upper bound on the occupancy integral over one period for an
/// admissible schedule:
///
/// ```text
/// Int x < c0 mu0 + c+ mu+ + c- mu- + (c+ - c-)(b+ - b-)(mu+ + mu-) / (4 b0),
/// ```
///
/// with `mu+ = mu- = (T - mu0) / 2`. The exact integral always stays below
/// the returned value, which in turn simplifies to the constant-inflow
/// integral `c0 T`; the gap between bound and exact integral quantifies the
/// throughput lost to switching.
pub fn throughput_upper_bound(signal: &SwitchingSignal, params: &BottleneckParams) -> Result<f64> {
    let report = check_admissible_b(signal, params);
    if !report.is_member() {
        return Err(Error::Inadmissible(report));
    }
    let t = signal.period();
    let mu0 = signal.measure(ArcLevel::Zero);
    let mu_pm = 0.5 * (t - mu0);
    let plus = params.arc(ArcLevel::Plus);
    let minus = params.arc(ArcLevel::Minus);
    let zero = params.arc(ArcLevel::Zero);
    let (c_plus, c_minus, c_zero) = (
        plus.fixed_point(),
        minus.fixed_point(),
        zero.fixed_point(),
    );
    Ok(c_zero * mu0
        + (c_plus + c_minus) * mu_pm
        + (c_plus - c_minus) * (plus.decay - minus.decay) * (2.0 * mu_pm) / (4.0 * zero.decay))
}

/// Both sides of the mean inequality
/// `(1 - e^-a)(1 - e^-b) / (1 - e^-(a+b)) < a b / (a + b)` for `a, b > 0`.
///
/// The left side is the endpoint-gap factor of a two-arc loop, the right its
/// short-arc limit; the strict ordering is what makes every switching loop
/// lose throughput.
pub fn lemma2_sides(a: f64, b: f64) -> Result<(f64, f64)> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveRate { name, value: v });
        }
    }
    let lhs = one_minus_exp_neg(a) * one_minus_exp_neg(b) / one_minus_exp_neg(a + b);
    let rhs = a * b / (a + b);
    Ok((lhs, rhs))
}

/// Endpoints of the closed two-arc loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoArcLoop {
    /// Occupancy at the start of the high-inflow arc (loop bottom).
    pub v: f64,
    /// Occupancy at the end of the high-inflow arc (loop top).
    pub w: f64,
    /// True when `epsilon = 0`, in which case the loop collapses to `w = v`.
    pub degenerate: bool,
}

/// The unique pair `(v, w)` such that the high-inflow arc moves the
/// occupancy from `v` to `w` in `t_plus` and the low-inflow arc moves it back
/// in `t_minus`. Solved through the generic periodic-orbit machinery on the
/// two-segment schedule, so it can be checked independently against the
/// closed-form endpoint-gap expression.
pub fn two_arc_loop(params: &BottleneckParams, t_plus: f64, t_minus: f64) -> Result<TwoArcLoop> {
    if !(t_plus > 0.0) || !t_plus.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t_plus must be positive (got {t_plus})"
        )));
    }
    if !(t_minus > 0.0) || !t_minus.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t_minus must be positive (got {t_minus})"
        )));
    }
    let up = segment_affine_map(ArcLevel::Plus, params, t_plus)?;
    let down = segment_affine_map(ArcLevel::Minus, params, t_minus)?;

    let plus = params.arc(ArcLevel::Plus);
    let minus = params.arc(ArcLevel::Minus);
    let exponent = plus.decay * t_plus + minus.decay * t_minus;

    // v is the fixed point of up-then-down, w of down-then-up; both share
    // the loop contraction factor e^(-exponent).
    let v = up.then(&down).offset / one_minus_exp_neg(exponent);
    let w = down.then(&up).offset / one_minus_exp_neg(exponent);
    Ok(TwoArcLoop {
        v,
        w,
        degenerate: params.epsilon() == 0.0,
    })
}

/// Exact piecewise-exponential samples of the transient started at `x_init`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub occupancies: Vec<f64>,
    /// Occupancy at the period boundaries `0, T, 2T, ...`, `n_periods + 1`
    /// entries. The distance to the entrained orbit contracts by exactly the
    /// product of segment factors every period.
    pub period_states: Vec<f64>,
}

/// Simulates the transient from an arbitrary initial occupancy, sampling
/// `samples_per_period` points per period plus the final state. All samples
/// are computed by exact arc propagation from the enclosing switch instant.
pub fn simulate_transient(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
    x_init: f64,
    n_periods: usize,
    samples_per_period: usize,
) -> Result<Trajectory> {
    if !(0.0..=1.0).contains(&x_init) {
        return Err(Error::OccupancyOutOfRange(x_init));
    }
    if n_periods == 0 || samples_per_period == 0 {
        return Err(Error::InvalidInput(
            "n_periods and samples_per_period must be at least 1".into(),
        ));
    }

    let t_period = signal.period();
    let n_samples = n_periods * samples_per_period + 1;
    let mut times = Vec::with_capacity(n_samples);
    let mut occupancies = Vec::with_capacity(n_samples);
    let mut period_states = Vec::with_capacity(n_periods + 1);
    period_states.push(x_init);

    let mut x = x_init;
    for k in 0..n_periods {
        let mut seg_iter = signal.segments().iter();
        let mut seg = seg_iter.next().expect("signal is nonempty");
        let mut seg_start = 0.0;
        let mut seg_end = seg.duration;
        let mut x_seg = x;

        for s in 0..samples_per_period {
            let t_local = (s as f64) * t_period / (samples_per_period as f64);
            // Advance to the segment containing this sample.
            while t_local >= seg_end {
                let arc = params.arc(seg.level);
                x_seg = scalar_step_exact(arc.drive, arc.decay, x_seg, seg.duration)?;
                seg_start = seg_end;
                match seg_iter.next() {
                    Some(next) => {
                        seg = next;
                        seg_end += seg.duration;
                    }
                    None => break, // t_local == T up to rounding
                }
            }
            let arc = params.arc(seg.level);
            let sample = scalar_step_exact(arc.drive, arc.decay, x_seg, t_local - seg_start)?;
            times.push((k as f64) * t_period + t_local);
            occupancies.push(sample);
        }

        // Close the period exactly through the remaining segments.
        let arc = params.arc(seg.level);
        x_seg = scalar_step_exact(arc.drive, arc.decay, x_seg, seg.duration)?;
        for rest in seg_iter {
            let arc = params.arc(rest.level);
            x_seg = scalar_step_exact(arc.drive, arc.decay, x_seg, rest.duration)?;
        }
        x = x_seg;
        period_states.push(x);
    }
    times.push((n_periods as f64) * t_period);
    occupancies.push(x);

    Ok(Trajectory {
        times,
        occupancies,
        period_states,
    })
}

/// Per-period contraction factor `exp(-sum decay_i * dt_i)` of the schedule:
/// the exact rate at which transients die out.
pub fn period_contraction(signal: &SwitchingSignal, params: &BottleneckParams) -> f64 {
    let exponent: f64 = signal
        .segments()
        .iter()
        .map(|seg| params.arc(seg.level).decay * seg.duration)
        .sum();
    (-exponent).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::Segment;

    fn params(lambda: f64, sigma_bar: f64, epsilon: f64) -> BottleneckParams {
        BottleneckParams::new(lambda, sigma_bar, epsilon).unwrap()
    }

    fn two_arc_signal(t_plus: f64, t_minus: f64) -> SwitchingSignal {
        SwitchingSignal::new(vec![
            Segment::new(ArcLevel::Plus, t_plus),
            Segment::new(ArcLevel::Minus, t_minus),
        ])
        .unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(BottleneckParams::new(0.0, 1.0, 0.0).is_err());
        assert!(BottleneckParams::new(1.0, -1.0, 0.0).is_err());
        assert!(BottleneckParams::new(1.0, 1.0, 1.0).is_err()); // epsilon == sigma_bar
        assert!(BottleneckParams::new(1.0, 1.0, -0.1).is_err());
        let p = params(2.0, 1.0, 0.5);
        assert_eq!(p.sigma_low(), 0.5);
        assert_eq!(p.sigma_high(), 1.5);
        assert_eq!(p.arc(ArcLevel::Plus).decay, 3.5);
        assert_eq!(p.arc(ArcLevel::Minus).decay, 2.5);
        assert!(p.arc(ArcLevel::Plus).decay > p.arc(ArcLevel::Zero).decay);
        assert!(p.arc(ArcLevel::Zero).decay > p.arc(ArcLevel::Minus).decay);
    }

    #[test]
    fn scalar_step_holds_fixed_point() {
        // x0 already at the arc equilibrium a/b: stays exactly put.
        assert_eq!(scalar_step_exact(1.0, 2.0, 0.5, 7.25).unwrap(), 0.5);
    }

    #[test]
    fn scalar_step_closed_forms() {
        let x = scalar_step_exact(0.0, 1.0, 1.0, std::f64::consts::LN_2).unwrap();
        assert!((x - 0.5).abs() < 1e-15);
        let x = scalar_step_exact(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((x - 0.6321205588285577).abs() < 1e-15);
        assert_eq!(scalar_step_exact(1.0, 1.0, 0.3, 0.0).unwrap(), 0.3);
    }

    #[test]
    fn scalar_step_rejects_bad_domain() {
        assert!(scalar_step_exact(1.0, 0.0, 0.5, 1.0).is_err());
        assert!(scalar_step_exact(1.0, -2.0, 0.5, 1.0).is_err());
        assert!(scalar_step_exact(1.0, 1.0, 0.5, -0.1).is_err());
    }

    #[test]
    fn segment_integral_closed_forms() {
        // Constant solution: integral is x0 * dt.
        assert!((segment_integral(1.0, 2.0, 0.5, 3.0).unwrap() - 1.5).abs() < 1e-15);
        // Pure decay from 1 to 1/2: integral is (x0 - x1) / b = 1/2.
        let v = segment_integral(0.0, 1.0, 1.0, std::f64::consts::LN_2).unwrap();
        assert!((v - 0.5).abs() < 1e-15);
        assert!(segment_integral(1.0, 0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn affine_map_limits_and_half_life() {
        let p = params(1.0, 1.0, 0.25);
        // Long zero arc relaxes to the mean fixed point 1/2.
        let m = segment_affine_map(ArcLevel::Zero, &p, 100.0).unwrap();
        assert!(m.factor.abs() < 1e-80);
        assert!((m.offset - 0.5).abs() < 1e-12);
        // Half-life duration gives factor exactly 1/2.
        let b = p.arc(ArcLevel::Plus).decay;
        let m = segment_affine_map(ArcLevel::Plus, &p, std::f64::consts::LN_2 / b).unwrap();
        assert!((m.factor - 0.5).abs() < 1e-15);
        assert!(segment_affine_map(ArcLevel::Plus, &p, 0.0).is_err());
    }

    #[test]
    fn affine_map_composition_is_the_longer_segment() {
        let p = params(0.7, 1.3, 0.4);
        for level in [ArcLevel::Minus, ArcLevel::Zero, ArcLevel::Plus] {
            let m1 = segment_affine_map(level, &p, 0.4).unwrap();
            let m2 = segment_affine_map(level, &p, 1.1).unwrap();
            let joint = segment_affine_map(level, &p, 1.5).unwrap();
            let composed = m1.then(&m2);
            assert!((composed.factor - joint.factor).abs() < 1e-15);
            assert!((composed.offset - joint.offset).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_schedule_sits_at_the_fixed_point() {
        let p = params(1.0, 1.0, 0.0);
        let sig = SwitchingSignal::constant(2.0).unwrap();
        let orbit = periodic_fixed_point(&sig, &p);
        assert!((orbit.x0 - 0.5).abs() < 1e-15);
        for x in &orbit.segment_endpoints {
            assert!((x - 0.5).abs() < 1e-15);
        }
        assert!((orbit.average_occupancy - 0.5).abs() < 1e-15);

        let p = params(0.3, 2.1, 0.0);
        let orbit = periodic_fixed_point(&SwitchingSignal::constant(5.0).unwrap(), &p);
        assert!((orbit.x0 - p.mean_fixed_point()).abs() < 1e-15);
    }

    #[test]
    fn two_arc_orbit_matches_frozen_values() {
        // lambda = 1, sigma_bar = 1, epsilon = 0.5, (Plus 1, Minus 1);
        // values frozen from an independent high-precision evaluation.
        let p = params(1.0, 1.0, 0.5);
        let sig = two_arc_signal(1.0, 1.0);
        let orbit = periodic_fixed_point(&sig, &p);
        assert!((orbit.x0 - 0.38896955189081911).abs() < 1e-14);
        assert!((orbit.segment_endpoints[1] - 0.58267756595735714).abs() < 1e-14);
        assert!((orbit.average_occupancy - 0.49249440187553840).abs() < 1e-14);
        assert_eq!(orbit.segment_endpoints.len(), 3);
        assert_eq!(orbit.segment_endpoints[0], orbit.x0);
        assert_eq!(orbit.segment_endpoints[2], orbit.x0);
    }

    #[test]
    fn outflow_and_gain_for_the_constant_inflow() {
        let p = params(1.0, 1.0, 0.0);
        let sig = SwitchingSignal::constant(3.0).unwrap();
        let orbit = periodic_fixed_point(&sig, &p);
        assert!((average_outflow(&orbit, &p) - 0.5).abs() < 1e-15);
        assert!((periodic_gain(&sig, &p).unwrap() - 1.0).abs() < 1e-12);
        assert!((dual_gain(&sig, &p).unwrap() - 1.0).abs() < 1e-12);

        let p = params(0.4, 1.7, 0.0);
        let orbit = periodic_fixed_point(&sig, &p);
        assert!((average_outflow(&orbit, &p) - p.constant_outflow()).abs() < 1e-15);
    }

    #[test]
    fn switching_gain_matches_frozen_value_and_loses_throughput() {
        let p = params(1.0, 1.0, 0.5);
        let sig = two_arc_signal(1.0, 1.0);
        let j = periodic_gain(&sig, &p).unwrap();
        assert!((j - 0.98498880375107681).abs() < 1e-13);
        assert!(j < 1.0 - 1e-12);
        let orbit = periodic_fixed_point(&sig, &p);
        assert!(average_outflow(&orbit, &p) < 0.5);
    }

    #[test]
    fn inadmissible_schedule_is_rejected_with_diagnostics() {
        let p = params(1.0, 1.0, 0.5);
        let sig = two_arc_signal(1.0, 2.0); // unbalanced
        let err = periodic_gain(&sig, &p).unwrap_err();
        match err {
            Error::Inadmissible(report) => {
                assert!(!report.mean_ok);
                assert!(report.diagnostics.iter().any(|d| d.contains("mean")));
            }
            other => panic!("expected Inadmissible, got {other:?}"),
        }
    }

    #[test]
    fn dual_gain_mirrors_periodic_gain() {
        let p = params(1.0, 1.0, 0.5);
        let sig = two_arc_signal(1.0, 1.0);
        let j = periodic_gain(&sig, &p).unwrap();
        let d = dual_gain(&sig, &p).unwrap();
        assert!(d > 1.0);
        // lambda*ave(x) + lambda*ave(1-x) = lambda, expressed through the gains.
        let ave = j * p.mean_fixed_point();
        let dual_ave = d * (1.0 - p.mean_fixed_point());
        assert!((ave + dual_ave - 1.0).abs() < 1e-14);
    }

    #[test]
    fn upper_bound_degenerates_to_the_constant_integral() {
        let p = params(1.0, 1.0, 0.5);
        let sig = SwitchingSignal::constant(2.0).unwrap();
        let bound = throughput_upper_bound(&sig, &p).unwrap();
        let orbit = periodic_fixed_point(&sig, &p);
        let c0_t = p.mean_fixed_point() * sig.period();
        assert!((bound - c0_t).abs() < 1e-14);
        assert!((orbit.occupancy_integral() - c0_t).abs() < 1e-14);
    }

    #[test]
    fn upper_bound_dominates_the_exact_integral() {
        let p = params(1.0, 1.0, 0.5);
        let sig = two_arc_signal(1.0, 1.0);
        let bound = throughput_upper_bound(&sig, &p).unwrap();
        let orbit = periodic_fixed_point(&sig, &p);
        assert!(orbit.occupancy_integral() < bound);
        // The simplified form of the bound is the constant-inflow integral.
        let c0_t = p.mean_fixed_point() * sig.period();
        assert!(orbit.occupancy_integral() < c0_t);
        assert!((bound - c0_t).abs() < 1e-13);
    }

    #[test]
    fn lemma2_frozen_point_and_limits() {
        let (lhs, rhs) = lemma2_sides(1.0, 1.0).unwrap();
        assert!((lhs - 0.4621171572600098).abs() < 1e-15);
        assert_eq!(rhs, 0.5);
        assert!(lhs < rhs);
        // The gap closes as both arguments shrink.
        let (lhs, rhs) = lemma2_sides(1e-6, 1e-6).unwrap();
        assert!((lhs / rhs - 1.0).abs() < 1e-5);
        assert!(lemma2_sides(0.0, 1.0).is_err());
        assert!(lemma2_sides(1.0, -1.0).is_err());
    }

    #[test]
    fn lemma2_strict_on_grid() {
        for &a in &[0.01, 0.1, 1.0, 10.0] {
            for &b in &[0.01, 0.1, 1.0, 10.0] {
                let (lhs, rhs) = lemma2_sides(a, b).unwrap();
                assert!(lhs < rhs, "violated at a={a}, b={b}");
            }
        }
    }

    #[test]
    fn two_arc_loop_symmetric_case_is_a_tanh() {
        let p = params(1.0, 1.0, 0.5);
        let plus = p.arc(ArcLevel::Plus);
        let minus = p.arc(ArcLevel::Minus);
        for theta in [0.3, 1.0, 2.5] {
            let loop_ = two_arc_loop(&p, theta / plus.decay, theta / minus.decay).unwrap();
            let gap = (plus.fixed_point() - minus.fixed_point()) * (theta / 2.0).tanh();
            assert!((loop_.w - loop_.v - gap).abs() < 1e-14, "theta={theta}");
        }
    }

    #[test]
    fn two_arc_loop_collapses_without_switching() {
        let p = params(1.0, 1.0, 0.0);
        let loop_ = two_arc_loop(&p, 1.0, 1.0).unwrap();
        assert!(loop_.degenerate);
        assert!((loop_.w - loop_.v).abs() < 1e-15);
        assert!(two_arc_loop(&p, 0.0, 1.0).is_err());
        assert!(two_arc_loop(&p, 1.0, -1.0).is_err());
    }

    #[test]
    fn two_arc_loop_agrees_with_the_periodic_orbit() {
        let p = params(0.8, 1.4, 0.6);
        let (tp, tm) = (0.7, 1.9);
        let loop_ = two_arc_loop(&p, tp, tm).unwrap();
        let orbit = periodic_fixed_point(&two_arc_signal(tp, tm), &p);
        assert!((loop_.v - orbit.x0).abs() < 1e-14);
        assert!((loop_.w - orbit.segment_endpoints[1]).abs() < 1e-14);
    }

    #[test]
    fn transient_from_the_orbit_stays_on_it() {
        let p = params(1.0, 1.0, 0.5);
        let sig = two_arc_signal(1.0, 1.0);
        let orbit = periodic_fixed_point(&sig, &p);
        let traj = simulate_transient(&sig, &p, orbit.x0, 3, 8).unwrap();
        for &x in &traj.period_states {
            assert!((x - orbit.x0).abs() < 1e-14);
        }
        // Interior samples match a fresh exact propagation from x0.
        let one_period = simulate_transient(&sig, &p, orbit.x0, 1, 8).unwrap();
        for (a, b) in traj.occupancies[..8].iter().zip(&one_period.occupancies) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn transient_contracts_by_the_segment_factor_product() {
        let p = params(1.0, 1.0, 0.5);
        let sig = two_arc_signal(1.0, 1.0);
        let m = period_contraction(&sig, &p);
        let from_zero = simulate_transient(&sig, &p, 0.0, 40, 1).unwrap();
        let from_one = simulate_transient(&sig, &p, 1.0, 40, 1).unwrap();
        let d0 = (from_one.period_states[0] - from_zero.period_states[0]).abs();
        let d1 = (from_one.period_states[1] - from_zero.period_states[1]).abs();
        assert!((d1 / d0 - m).abs() < 1e-10);
        // Both initial conditions reach the same entrained state.
        let k = from_zero.period_states.len() - 1;
        assert!((from_zero.period_states[k] - from_one.period_states[k]).abs() < 1e-10);
    }

    #[test]
    fn transient_rejects_bad_initial_state() {
        let p = params(1.0, 1.0, 0.5);
        let sig = two_arc_signal(1.0, 1.0);
        assert!(simulate_transient(&sig, &p, -0.1, 1, 4).is_err());
        assert!(simulate_transient(&sig, &p, 1.5, 1, 4).is_err());
        assert!(simulate_transient(&sig, &p, 0.5, 0, 4).is_err());
    }
}
