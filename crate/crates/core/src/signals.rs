//! Construction, validation and generation of periodic switching schedules.
//!
//! A schedule is an ordered list of `(level, duration)` arcs repeated with
//! period `T`. Admissible schedules keep the mean inflow at `sigma_bar`
//! (equal time at the high and low levels) and may hold the mean level only
//! while the occupancy sits exactly at its fixed point.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bottleneck::{periodic_fixed_point, ArcLevel, BottleneckParams};
use crate::error::{Error, Result};

/// One arc of a schedule: an inflow level held for a positive duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub level: ArcLevel,
    pub duration: f64,
}

impl Segment {
    pub fn new(level: ArcLevel, duration: f64) -> Self {
        Segment { level, duration }
    }
}

/// A `T`-periodic piecewise-constant inflow schedule in canonical form:
/// positive durations and no two adjacent arcs at the same level.
///
/// Durations are first-class (switch instants are derived), so the period is
/// the exact sum of durations and phase arithmetic accumulates no error.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSignal {
    segments: Vec<Segment>,
    period: f64,
}

impl SwitchingSignal {
    /// Builds a canonical schedule: rejects empty lists and non-positive
    /// durations, merges adjacent arcs that share a level.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::EmptySignal);
        }
        let mut canonical: Vec<Segment> = Vec::with_capacity(segments.len());
        for (index, seg) in segments.into_iter().enumerate() {
            if !(seg.duration > 0.0) || !seg.duration.is_finite() {
                return Err(Error::NonPositiveDuration {
                    index,
                    duration: seg.duration,
                });
            }
            match canonical.last_mut() {
                Some(last) if last.level == seg.level => last.duration += seg.duration,
                _ => canonical.push(seg),
            }
        }
        let period = canonical.iter().map(|s| s.duration).sum();
        Ok(SwitchingSignal {
            segments: canonical,
            period,
        })
    }

    /// The constant mean-inflow schedule: a single zero arc of length
    /// `period`.
    pub fn constant(period: f64) -> Result<Self> {
        SwitchingSignal::new(vec![Segment::new(ArcLevel::Zero, period)])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Total time spent at `level` over one period.
    pub fn measure(&self, level: ArcLevel) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.level == level)
            .map(|s| s.duration)
            .sum()
    }

    /// True when the schedule never leaves the mean level.
    pub fn is_constant(&self) -> bool {
        self.segments.iter().all(|s| s.level == ArcLevel::Zero)
    }

    /// The same schedule started `k` segments later (a phase shift).
    pub fn rotated(&self, k: usize) -> SwitchingSignal {
        let n = self.segments.len();
        let mut rotated: Vec<Segment> = Vec::with_capacity(n);
        rotated.extend_from_slice(&self.segments[k % n..]);
        rotated.extend_from_slice(&self.segments[..k % n]);
        SwitchingSignal::new(rotated).expect("rotation preserves validity")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("signal serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::SignalFormat(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct SignalDoc {
    period: f64,
    segments: Vec<Segment>,
}

impl Serialize for SwitchingSignal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SignalDoc {
            period: self.period,
            segments: self.segments.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SwitchingSignal {
    fn deserialize<D: Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let doc = SignalDoc::deserialize(deserializer)?;
        let signal = SwitchingSignal::new(doc.segments).map_err(D::Error::custom)?;
        let tolerance = 1e-9 * doc.period.abs().max(1.0);
        if (signal.period - doc.period).abs() > tolerance {
            return Err(D::Error::custom(format!(
                "declared period {} does not match the segment total {}",
                doc.period, signal.period
            )));
        }
        Ok(signal)
    }
}

/// Outcome of the admissibility test, with one diagnostic per violation.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// Equal time at the high and low levels, so the mean inflow is
    /// `sigma_bar`.
    pub mean_ok: bool,
    /// Every zero arc starts (and therefore stays) at the mean fixed point.
    pub zero_arc_ok: bool,
    pub diagnostics: Vec<String>,
}

impl AdmissibilityReport {
    pub fn is_member(&self) -> bool {
        self.mean_ok && self.zero_arc_ok
    }
}

impl fmt::Display for AdmissibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_member() {
            write!(f, "member of the admissible set")
        } else {
            write!(f, "not admissible: {}", self.diagnostics.join("; "))
        }
    }
}

/// Relative tolerance on the high/low time balance.
const MEAN_BALANCE_TOL: f64 = 1e-12;
/// Absolute tolerance on the occupancy at the start of a zero arc.
const ZERO_ARC_TOL: f64 = 1e-9;

/// Tests membership in the admissible schedule set for the given parameters:
/// the mean constraint `mu(plus) = mu(minus)` and, for every zero arc, that
/// the entrained occupancy enters it exactly at the mean fixed point (it
/// then holds that value for the whole arc).
///
/// With `epsilon = 0` every level carries the same inflow, so the schedule
/// is the constant inflow and is admissible outright.
pub fn check_admissible_b(
    signal: &SwitchingSignal,
    params: &BottleneckParams,
) -> AdmissibilityReport {
    if params.epsilon() == 0.0 {
        return AdmissibilityReport {
            mean_ok: true,
            zero_arc_ok: true,
            diagnostics: vec!["epsilon = 0: schedule equals the constant mean inflow".into()],
        };
    }

    let mut diagnostics = Vec::new();
    let mu_plus = signal.measure(ArcLevel::Plus);
    let mu_minus = signal.measure(ArcLevel::Minus);
    let mean_ok = (mu_plus - mu_minus).abs() <= MEAN_BALANCE_TOL * signal.period();
    if !mean_ok {
        diagnostics.push(format!(
            "mean constraint violated: mu(plus) = {mu_plus}, mu(minus) = {mu_minus}"
        ));
    }

    let mut zero_arc_ok = true;
    if signal
        .segments()
        .iter()
        .any(|s| s.level == ArcLevel::Zero)
    {
        let orbit = periodic_fixed_point(signal, params);
        let fixed = params.mean_fixed_point();
        for (i, seg) in signal.segments().iter().enumerate() {
            if seg.level != ArcLevel::Zero {
                continue;
            }
            let at_start = orbit.segment_endpoints[i];
            if (at_start - fixed).abs() > ZERO_ARC_TOL {
                zero_arc_ok = false;
                diagnostics.push(format!(
                    "zero arc {i} starts at occupancy {at_start} instead of the fixed point {fixed}"
                ));
            }
        }
    }

    AdmissibilityReport {
        mean_ok,
        zero_arc_ok,
        diagnostics,
    }
}

/// Draws a random admissible schedule: `n_pairs` alternating high/low arcs
/// whose high and low blocks are independent random partitions of `T/2`, so
/// the mean constraint holds by construction. Deterministic in `seed`.
pub fn random_signal(period: f64, n_pairs: usize, seed: u64) -> Result<SwitchingSignal> {
    if n_pairs == 0 {
        return Err(Error::InvalidInput("n_pairs must be at least 1".into()));
    }
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::InvalidInput(format!(
            "period must be positive (got {period})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        // Exponential spacings normalized to sum T/2: a uniform random
        // partition of the block. Floored away from zero-length arcs.
        let mut raw: Vec<f64> = (0..n_pairs)
            .map(|_| {
                let u: f64 = rng.random();
                (-(1.0 - u).ln()).max(1e-9)
            })
            .collect();
        let total: f64 = raw.iter().sum();
        let scale = period / 2.0 / total;
        for d in &mut raw {
            *d *= scale;
        }
        raw
    };
    let plus = block(&mut rng);
    let minus = block(&mut rng);
    let mut segments = Vec::with_capacity(2 * n_pairs);
    for i in 0..n_pairs {
        segments.push(Segment::new(ArcLevel::Plus, plus[i]));
        segments.push(Segment::new(ArcLevel::Minus, minus[i]));
    }
    SwitchingSignal::new(segments)
}

/// The evenly spaced family of `n_pairs` high/low alternations over one
/// period. As `n_pairs` grows the schedule approaches the averaged constant
/// inflow and its gain climbs towards (but never reaches) one.
pub fn fast_switching_family(period: f64, n_pairs: usize) -> Result<SwitchingSignal> {
    if n_pairs == 0 {
        return Err(Error::InvalidInput("n_pairs must be at least 1".into()));
    }
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::InvalidInput(format!(
            "period must be positive (got {period})"
        )));
    }
    let dt = period / (2 * n_pairs) as f64;
    let mut segments = Vec::with_capacity(2 * n_pairs);
    for _ in 0..n_pairs {
        segments.push(Segment::new(ArcLevel::Plus, dt));
        segments.push(Segment::new(ArcLevel::Minus, dt));
    }
    SwitchingSignal::new(segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bottleneck::periodic_gain;

    fn params() -> BottleneckParams {
        BottleneckParams::new(1.0, 1.0, 0.5).unwrap()
    }

    #[test]
    fn adjacent_equal_levels_merge() {
        let sig = SwitchingSignal::new(vec![
            Segment::new(ArcLevel::Plus, 1.0),
            Segment::new(ArcLevel::Plus, 1.0),
        ])
        .unwrap();
        assert_eq!(sig.segments().len(), 1);
        assert_eq!(sig.segments()[0].duration, 2.0);
        assert_eq!(sig.period(), 2.0);
    }

    #[test]
    fn measures_split_the_period() {
        let sig = SwitchingSignal::new(vec![
            Segment::new(ArcLevel::Plus, 1.0),
            Segment::new(ArcLevel::Minus, 1.0),
        ])
        .unwrap();
        assert_eq!(sig.period(), 2.0);
        assert_eq!(sig.measure(ArcLevel::Plus), 1.0);
        assert_eq!(sig.measure(ArcLevel::Minus), 1.0);
        assert_eq!(sig.measure(ArcLevel::Zero), 0.0);
    }

    #[test]
    fn invalid_constructions_are_rejected() {
        assert!(matches!(
            SwitchingSignal::new(vec![]),
            Err(Error::EmptySignal)
        ));
        let err = SwitchingSignal::new(vec![
            Segment::new(ArcLevel::Plus, 1.0),
            Segment::new(ArcLevel::Zero, 0.0),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::NonPositiveDuration { index: 1, .. }));
        assert!(SwitchingSignal::new(vec![Segment::new(ArcLevel::Plus, -1.0)]).is_err());
        assert!(SwitchingSignal::constant(0.0).is_err());
    }

    #[test]
    fn balanced_two_arc_schedule_is_admissible() {
        let sig = SwitchingSignal::new(vec![
            Segment::new(ArcLevel::Plus, 1.0),
            Segment::new(ArcLevel::Minus, 1.0),
        ])
        .unwrap();
        let report = check_admissible_b(&sig, &params());
        assert!(report.is_member());
        assert!(report.mean_ok && report.zero_arc_ok);
    }

    #[test]
    fn unbalanced_schedule_fails_the_mean_check() {
        let sig = SwitchingSignal::new(vec![
            Segment::new(ArcLevel::Plus, 1.0),
            Segment::new(ArcLevel::Minus, 2.0),
        ])
        .unwrap();
        let report = check_admissible_b(&sig, &params());
        assert!(!report.mean_ok);
        assert!(!report.is_member());
    }

    #[test]
    fn generic_zero_arc_fails_the_fixed_point_check() {
        let sig = SwitchingSignal::new(vec![
            Segment::new(ArcLevel::Plus, 1.0),
            Segment::new(ArcLevel::Minus, 1.0),
            Segment::new(ArcLevel::Zero, 1.0),
        ])
        .unwrap();
        let report = check_admissible_b(&sig, &params());
        assert!(report.mean_ok);
        assert!(!report.zero_arc_ok);
        assert!(report
            .diagnostics
            .iter()
            .any(|d| d.contains("zero arc")));
    }

    #[test]
    fn constant_schedule_is_admissible() {
        let sig = SwitchingSignal::constant(2.0).unwrap();
        assert!(check_admissible_b(&sig, &params()).is_member());
        assert!(sig.is_constant());
    }

    #[test]
    fn zero_amplitude_collapses_to_the_constant_inflow() {
        let p = BottleneckParams::new(1.0, 1.0, 0.0).unwrap();
        // Even an unbalanced schedule is the constant inflow when epsilon = 0.
        let sig = SwitchingSignal::new(vec![
            Segment::new(ArcLevel::Plus, 1.0),
            Segment::new(ArcLevel::Minus, 2.0),
        ])
        .unwrap();
        assert!(check_admissible_b(&sig, &p).is_member());
    }

    #[test]
    fn random_signals_are_deterministic_and_admissible() {
        let a = random_signal(10.0, 4, 42).unwrap();
        let b = random_signal(10.0, 4, 42).unwrap();
        assert_eq!(a, b);
        let c = random_signal(10.0, 4, 43).unwrap();
        assert_ne!(a, c);

        for seed in 0..50 {
            let sig = random_signal(7.5, 3, seed).unwrap();
            assert_eq!(sig.segments().len(), 6);
            let report = check_admissible_b(&sig, &params());
            assert!(report.is_member(), "seed {seed}: {report}");
            let imbalance =
                (sig.measure(ArcLevel::Plus) - sig.measure(ArcLevel::Minus)).abs();
            assert!(imbalance <= 1e-12 * sig.period());
        }
        assert!(random_signal(10.0, 0, 1).is_err());
        assert!(random_signal(-1.0, 1, 1).is_err());
    }

    #[test]
    fn fast_switching_family_layout_and_trend() {
        let one = fast_switching_family(2.0, 1).unwrap();
        assert_eq!(one.segments().len(), 2);
        assert_eq!(one.segments()[0].duration, 1.0);

        let p = params();
        let j1 = periodic_gain(&one, &p).unwrap();
        let j1000 = periodic_gain(&fast_switching_family(2.0, 1000).unwrap(), &p).unwrap();
        assert!(j1000 > j1);
        assert!(j1000 < 1.0);
        assert!(fast_switching_family(2.0, 0).is_err());
    }

    #[test]
    fn json_round_trip_uses_the_documented_field_names() {
        let sig = SwitchingSignal::new(vec![
            Segment::new(ArcLevel::Plus, 1.0),
            Segment::new(ArcLevel::Zero, 0.5),
            Segment::new(ArcLevel::Minus, 1.0),
        ])
        .unwrap();
        let text = sig.to_json();
        assert!(text.contains("\"period\""));
        assert!(text.contains("\"segments\""));
        assert!(text.contains("\"level\""));
        assert!(text.contains("\"plus\""));
        assert!(text.contains("\"zero\""));
        assert!(text.contains("\"minus\""));
        assert!(text.contains("\"duration\""));
        let back = SwitchingSignal::from_json(&text).unwrap();
        assert_eq!(sig, back);
    }

    #[test]
    fn json_validation_rejects_broken_documents() {
        assert!(SwitchingSignal::from_json("{}").is_err());
        // Level outside the three-valued alphabet.
        let bad = r#"{"period": 1.0, "segments": [{"level": "high", "duration": 1.0}]}"#;
        assert!(SwitchingSignal::from_json(bad).is_err());
        // Declared period inconsistent with the segment total.
        let bad = r#"{"period": 3.0, "segments": [{"level": "plus", "duration": 1.0}]}"#;
        assert!(SwitchingSignal::from_json(bad).is_err());
        // Adjacent duplicates are merged on load.
        let dup = r#"{"period": 2.0, "segments": [
            {"level": "plus", "duration": 1.0},
            {"level": "plus", "duration": 1.0}
        ]}"#;
        let sig = SwitchingSignal::from_json(dup).unwrap();
        assert_eq!(sig.segments().len(), 1);
    }

    #[test]
    fn rotation_preserves_the_period() {
        let sig = random_signal(6.0, 3, 9).unwrap();
        let rot = sig.rotated(2);
        assert!((rot.period() - sig.period()).abs() < 1e-15);
        assert_eq!(rot.segments().len(), sig.segments().len());
    }
}
