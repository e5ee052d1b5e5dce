//! Exact simulation and throughput analysis of a periodically switched
//! "bottleneck" flow element, alone and in cascade with a positive linear
//! system.
//!
//! The bottleneck `x' = sigma(t)(1 - x) - lambda x` entrains to any
//! `T`-periodic inflow `sigma(t)`; for piecewise-constant schedules the
//! entrained orbit, its average outflow and the periodic gain (outflow
//! relative to the constant inflow of equal mean) are all available in
//! closed form. The headline fact this crate makes checkable is that no
//! admissible switching schedule beats the constant inflow: the gain is
//! strictly below one whenever the schedule actually switches, approaches
//! one under ever-faster switching, and caps the cascade output at the DC
//! gain times the constant-inflow outflow.
//!
//! Modules:
//! - [`bottleneck`]: exact arc propagation, periodic orbits, gains and the
//!   loop inequalities behind the throughput bound;
//! - [`signals`]: switching schedules, admissibility and generators;
//! - [`cascade`]: the downstream positive linear system;
//! - [`rfm`]: the full ribosome-flow-style nonlinear chain and its
//!   bottleneck reduction;
//! - [`optimize`]: schedule search under an evaluation budget;
//! - [`sweep`]: seed-deterministic Monte-Carlo sweeps (parallel with the
//!   default `parallel` feature).

pub mod bottleneck;
pub mod cascade;
mod error;
mod exec;
pub mod optimize;
pub mod rfm;
pub mod signals;
pub mod sweep;

pub use bottleneck::{
    average_outflow, dual_gain, lemma2_sides, period_contraction, periodic_fixed_point,
    periodic_gain, scalar_step_exact, segment_affine_map, segment_integral, simulate_transient,
    throughput_upper_bound, two_arc_loop, AffineMap, ArcCoefficients, ArcLevel, BottleneckParams,
    PeriodicOrbit, Trajectory, TwoArcLoop,
};
pub use cascade::{
    average_output_via_state_integrals, cascade_periodic_orbit, cascade_trajectory, validate_positive_system,
    verify_prop9, CascadeOrbit, CascadeSample, PositiveLinearSystem, Prop9Check, SystemValidation,
};
pub use error::{Error, Result};
pub use optimize::{search_schedule, ScheduleTemplate, SearchResult};
pub use rfm::{compare_reduction, rfm_rhs, simulate_rfm, ReductionReport, RfmParams, RfmSimulation, RfmState};
pub use signals::{
    check_admissible_b, fast_switching_family, random_signal, AdmissibilityReport, Segment,
    SwitchingSignal,
};
pub use sweep::{histogram_gains, sigma_sweep, GainSample, SweepPoint};
