//! Derivative-free search for the gain-maximizing switching schedule.
//!
//! The search space is the set of `n_pairs` alternating high/low schedules
//! whose high and low blocks each sum to `T/2`, so every candidate is
//! admissible by construction. The gain is smooth in the durations and each
//! evaluation is an exact closed-form orbit solve, so plain coordinate
//! descent on the two duration simplices with random restarts is enough. No
//! schedule attains gain one; refining the search only creeps towards the
//! fast-switching limit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bottleneck::{periodic_gain, ArcLevel, BottleneckParams};
use crate::error::{Error, Result};
use crate::exec;
use crate::signals::{Segment, SwitchingSignal};

/// An alternating high/low schedule with exactly balanced blocks: the
/// high-arc durations and low-arc durations each sum to half the period.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleTemplate {
    plus: Vec<f64>,
    minus: Vec<f64>,
    period: f64,
}

impl ScheduleTemplate {
    /// The evenly spaced template: all arcs of length `T / (2 n_pairs)`.
    pub fn even(period: f64, n_pairs: usize) -> Result<Self> {
        Self::from_durations(vec![1.0; n_pairs], vec![1.0; n_pairs], period)
    }

    /// Builds a template from raw positive durations; each block is rescaled
    /// to sum to exactly half the period, which keeps the mean constraint
    /// structural rather than penalized.
    pub fn from_durations(plus: Vec<f64>, minus: Vec<f64>, period: f64) -> Result<Self> {
        if plus.is_empty() || plus.len() != minus.len() {
            return Err(Error::InvalidInput(
                "high and low blocks must be nonempty and equally long".into(),
            ));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidInput(format!(
                "period must be positive (got {period})"
            )));
        }
        for &d in plus.iter().chain(minus.iter()) {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "template durations must be positive (got {d})"
                )));
            }
        }
        let mut template = Self {
            plus,
            minus,
            period,
        };
        template.normalize();
        Ok(template)
    }

    fn random(period: f64, n_pairs: usize, rng: &mut ChaCha8Rng) -> Self {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n_pairs)
                .map(|_| {
                    let u: f64 = rng.random();
                    (-(1.0 - u).ln()).max(1e-9)
                })
                .collect()
        };
        let plus = draw(rng);
        let minus = draw(rng);
        Self::from_durations(plus, minus, period).expect("draws are positive")
    }

    fn normalize(&mut self) {
        let half = self.period / 2.0;
        for block in [&mut self.plus, &mut self.minus] {
            let total: f64 = block.iter().sum();
            let scale = half / total;
            for d in block.iter_mut() {
                *d *= scale;
            }
        }
    }

    /// A copy with one duration scaled and its block renormalized.
    fn with_scaled(&self, coordinate: usize, scale: f64) -> Self {
        let mut next = self.clone();
        let n = next.plus.len();
        if coordinate < n {
            next.plus[coordinate] *= scale;
        } else {
            next.minus[coordinate - n] *= scale;
        }
        next.normalize();
        next
    }

    pub fn n_pairs(&self) -> usize {
        self.plus.len()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn to_signal(&self) -> SwitchingSignal {
        let mut segments = Vec::with_capacity(2 * self.plus.len());
        for (p, m) in self.plus.iter().zip(&self.minus) {
            segments.push(Segment::new(ArcLevel::Plus, *p));
            segments.push(Segment::new(ArcLevel::Minus, *m));
        }
        SwitchingSignal::new(segments).expect("template durations are positive")
    }
}

/// Outcome of a schedule search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_signal: SwitchingSignal,
    pub best_gain: f64,
    /// Best gain found after each evaluation, in a fixed restart order;
    /// nondecreasing by construction.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

struct RestartOutcome {
    best_gain: f64,
    best_template: ScheduleTemplate,
    trace: Vec<f64>,
}

fn run_restart(
    params: &BottleneckParams,
    start: ScheduleTemplate,
    budget: usize,
) -> Result<RestartOutcome> {
    let evaluate = |t: &ScheduleTemplate| periodic_gain(&t.to_signal(), params);

    let mut current = start;
    let mut best_gain = evaluate(&current)?;
    let mut best_template = current.clone();
    let mut trace = vec![best_gain];
    let mut evals = 1;
    let coords = 2 * current.n_pairs();
    let mut delta = 0.5;

    'outer: while evals < budget && delta > 1e-6 {
        let mut improved = false;
        for coordinate in 0..coords {
            for scale in [1.0 + delta, 1.0 / (1.0 + delta)] {
                if evals >= budget {
                    break 'outer;
                }
                let candidate = current.with_scaled(coordinate, scale);
                let gain = evaluate(&candidate)?;
                evals += 1;
                if gain > best_gain {
                    best_gain = gain;
                    best_template = candidate.clone();
                    current = candidate;
                    improved = true;
                }
                trace.push(best_gain);
            }
        }
        if !improved {
            delta *= 0.5;
        }
    }

    Ok(RestartOutcome {
        best_gain,
        best_template,
        trace,
    })
}

/// Searches the balanced alternating schedules for the highest periodic
/// gain under an evaluation budget. Deterministic in `seed`; restarts are
/// independent (and run in parallel when enabled) and are merged by best
/// gain with the earliest restart winning ties.
pub fn search_schedule(
    params: &BottleneckParams,
    period: f64,
    n_pairs: usize,
    budget: usize,
    seed: u64,
) -> Result<SearchResult> {
    if budget == 0 {
        return Err(Error::InvalidInput("budget must be at least 1".into()));
    }
    if n_pairs == 0 {
        return Err(Error::InvalidInput("n_pairs must be at least 1".into()));
    }

    // One restart per few passes of the coordinate loop, up to four.
    let pass = 4 * n_pairs;
    let restarts = (budget / (4 * pass)).clamp(1, 4);
    let base = budget / restarts;
    let mut slices = vec![base; restarts];
    slices[0] += budget - base * restarts;

    let starts: Vec<(usize, ScheduleTemplate)> = (0..restarts)
        .map(|r| {
            let template = if r == 0 {
                ScheduleTemplate::even(period, n_pairs)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed.wrapping_add((r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                );
                Ok(ScheduleTemplate::random(period, n_pairs, &mut rng))
            };
            template.map(|t| (r, t))
        })
        .collect::<Result<_>>()?;

    let outcomes = exec::map_collect(starts, |(r, template)| {
        run_restart(params, template, slices[r])
    });
    let outcomes: Vec<RestartOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let mut trace = Vec::with_capacity(budget);
    let mut running_best = f64::NEG_INFINITY;
    for outcome in &outcomes {
        for &g in &outcome.trace {
            running_best = running_best.max(g);
            trace.push(running_best);
        }
    }
    let best = outcomes
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| {
            a.best_gain
                .partial_cmp(&b.best_gain)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(j.cmp(i)) // earliest restart wins ties
        })
        .expect("at least one restart");

    Ok(SearchResult {
        best_signal: best.1.best_template.to_signal(),
        best_gain: best.1.best_gain,
        evaluations: trace.len(),
        trace,
    })
}
