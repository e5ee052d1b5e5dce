//! Command-line front end: every analysis in the library as a subcommand
//! with JSON/CSV input and output.

mod config;
mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;
use flowgain::{
    average_outflow, cascade_periodic_orbit, compare_reduction, dual_gain, histogram_gains,
    periodic_fixed_point, periodic_gain, search_schedule, sigma_sweep, simulate_rfm,
    simulate_transient, throughput_upper_bound, RfmState,
};
use report::{emit, g15, signal_json, Csv, JsonObject};

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, missing files, malformed documents: exit 2.
    Config(String),
    /// Schedule rejected by the admissibility test: exit 3.
    Rejected(String),
    /// Numerical failure in an otherwise valid run: exit 4.
    Numerical(String),
}

impl CliError {
    fn config(message: String) -> Self {
        CliError::Config(message)
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Rejected(m) | CliError::Numerical(m) => m,
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Rejected(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<flowgain::Error> for CliError {
    fn from(err: flowgain::Error) -> Self {
        use flowgain::Error as E;
        match &err {
            E::Inadmissible(_) => CliError::Rejected(err.to_string()),
            E::Numerical(_) | E::NoEntrainment { .. } | E::StateEscaped { .. } => {
                CliError::Numerical(err.to_string())
            }
            _ => CliError::Config(err.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "flowgain",
    about = "Throughput experiments for a periodically switched bottleneck and its linear cascade",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides any seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the sample count in the configuration.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Entrained periodic orbit of the bottleneck (JSON, optional trajectory CSV).
    Orbit(Common),
    /// Periodic gain, dual gain and throughput bound of one schedule (JSON).
    Gain(Common),
    /// Gains of random admissible schedules (CSV with summary rows).
    Histogram(Common),
    /// Gains across a grid of mean inflows (CSV).
    Sweep(Common),
    /// Cascade average output against its throughput bound (JSON).
    Cascade(Common),
    /// Full flow model against its bottleneck reduction (JSON, optional trajectory CSV).
    Rfm(Common),
    /// Search for the gain-maximizing schedule (JSON).
    Optimize(Common),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Orbit(ref args) => cmd_orbit(args),
        Command::Gain(ref args) => cmd_gain(args),
        Command::Histogram(ref args) => cmd_histogram(args),
        Command::Sweep(ref args) => cmd_sweep(args),
        Command::Cascade(ref args) => cmd_cascade(args),
        Command::Rfm(ref args) => cmd_rfm(args),
        Command::Optimize(ref args) => cmd_optimize(args),
    };
    if let Err(err) = result {
        eprintln!("error: {}", err.message());
        std::process::exit(err.exit_code());
    }
}

fn output_path<'a>(args: &'a Common, cfg: &'a ExperimentConfig) -> Option<&'a std::path::Path> {
    args.out.as_deref().or(cfg.out.as_deref())
}

fn cmd_orbit(args: &Common) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let params = cfg.bottleneck_params()?;
    let signal = cfg.resolve_signal(args.seed)?;
    let gain = periodic_gain(&signal, &params)?;
    let orbit = periodic_fixed_point(&signal, &params);

    let doc = JsonObject::new()
        .number("period", orbit.period)
        .number("x0", orbit.x0)
        .numbers("endpoints", orbit.segment_endpoints.iter().copied())
        .number("average_occupancy", orbit.average_occupancy)
        .number("average_outflow", average_outflow(&orbit, &params))
        .number("j", gain)
        .render();
    emit(output_path(args, &cfg), &doc)?;

    if let Some(path) = cfg.trajectory_out.as_deref() {
        let n_periods = cfg.n_periods.unwrap_or(1);
        let per_period = cfg.samples_per_period.unwrap_or(200);
        let traj = simulate_transient(&signal, &params, orbit.x0, n_periods, per_period)?;
        let mut csv = Csv::new("t,x");
        for (t, x) in traj.times.iter().zip(&traj.occupancies) {
            csv.row(&[g15(*t), g15(*x)]);
        }
        emit(Some(path), &csv.into_text())?;
    }
    Ok(())
}

fn cmd_gain(args: &Common) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let params = cfg.bottleneck_params()?;
    let signal = cfg.resolve_signal(args.seed)?;
    let gain = periodic_gain(&signal, &params)?;
    let dual = dual_gain(&signal, &params)?;
    let bound = throughput_upper_bound(&signal, &params)?;
    let orbit = periodic_fixed_point(&signal, &params);

    let doc = JsonObject::new()
        .number("j", gain)
        .number("dual_j", dual)
        .number("average_outflow", average_outflow(&orbit, &params))
        .number("constant_outflow", params.constant_outflow())
        .number("throughput_bound", bound)
        .render();
    emit(output_path(args, &cfg), &doc)
}

fn cmd_histogram(args: &Common) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let params = cfg.bottleneck_params()?;
    let period = ExperimentConfig::require(cfg.period, "period")?;
    let n_pairs = cfg.n_pairs.unwrap_or(3);
    let samples = args
        .samples
        .or(cfg.samples)
        .ok_or_else(|| CliError::config("config field 'samples' is required".into()))?;
    if samples == 0 {
        return Err(CliError::config("samples must be at least 1".into()));
    }
    let seed = args.seed.or(cfg.seed).unwrap_or(0);

    let gains = histogram_gains(&params, period, n_pairs, samples, seed)?;
    let mut csv = Csv::new("seed,j");
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for g in &gains {
        min = min.min(g.gain);
        max = max.max(g.gain);
        sum += g.gain;
        csv.row(&[g.seed.to_string(), g15(g.gain)]);
    }
    csv.row(&["mean".into(), g15(sum / gains.len() as f64)]);
    csv.row(&["min".into(), g15(min)]);
    csv.row(&["max".into(), g15(max)]);
    emit(output_path(args, &cfg), &csv.into_text())
}

fn cmd_sweep(args: &Common) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let grid = cfg
        .sigma_grid
        .as_deref()
        .filter(|g| !g.is_empty())
        .ok_or_else(|| CliError::config("config field 'sigma_grid' is required".into()))?;
    let period = ExperimentConfig::require(cfg.period, "period")?;
    let n_pairs = cfg.n_pairs.unwrap_or(3);
    let ratio = cfg.epsilon_ratio.unwrap_or(0.5);
    let samples = args
        .samples
        .or(cfg.samples)
        .ok_or_else(|| CliError::config("config field 'samples' is required".into()))?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);

    let points = sigma_sweep(cfg.params.lambda, ratio, grid, period, n_pairs, samples, seed)?;
    let mut csv = Csv::new("sigma_bar,seed,j");
    for p in &points {
        csv.row(&[g15(p.sigma_bar), p.seed.to_string(), g15(p.gain)]);
    }
    emit(output_path(args, &cfg), &csv.into_text())
}

fn cmd_cascade(args: &Common) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let params = cfg.bottleneck_params()?;
    let signal = cfg.resolve_signal(args.seed)?;
    let sys = cfg.positive_system()?;
    // Surface inadmissibility as such before solving the cascade.
    periodic_gain(&signal, &params)?;

    let orbit = cascade_periodic_orbit(&signal, &params, &sys)?;
    let h0 = sys.dc_gain()?;
    let bound = h0 * params.constant_outflow();
    let doc = JsonObject::new()
        .number("h0", h0)
        .number("average_input", orbit.average_input)
        .number("average_output", orbit.average_output)
        .number("bound", bound)
        .number("margin", bound - orbit.average_output)
        .render();
    emit(output_path(args, &cfg), &doc)
}

fn cmd_rfm(args: &Common) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let inflow = cfg.bottleneck_params()?;
    let rfm = cfg.rfm_params()?;
    let signal = cfg.resolve_signal(args.seed)?;
    let max_rate = rfm.rates().iter().cloned().fold(0.0, f64::max);
    let step = cfg
        .step
        .unwrap_or_else(|| (signal.period() / 1000.0).min(0.2 / max_rate));

    let reduction = compare_reduction(&rfm, &inflow, &signal, step)?;
    let doc = JsonObject::new()
        .integer("site_count", reduction.site_count)
        .number("rate_ratio", reduction.rate_ratio)
        .number("average_output_full", reduction.average_output_full)
        .number("average_output_reduced", reduction.average_output_reduced)
        .number("relative_output_gap", reduction.relative_output_gap)
        .numbers("per_site_max_gap", reduction.per_site_max_gap.iter().copied())
        .integer("periods_to_entrain", reduction.periods_to_entrain)
        .render();
    emit(output_path(args, &cfg), &doc)?;

    if let Some(path) = cfg.trajectory_out.as_deref() {
        let n_periods = cfg.n_periods.unwrap_or(flowgain::rfm::ENTRAINMENT_PERIOD_CAP);
        let sim = simulate_rfm(
            &rfm,
            &inflow,
            &signal,
            &RfmState::zeros(rfm.site_count()),
            n_periods,
            step,
        )?;
        let header = std::iter::once("t".to_string())
            .chain((1..=rfm.site_count()).map(|i| format!("x{i}")))
            .collect::<Vec<_>>()
            .join(",");
        let mut csv = Csv::new(&header);
        for (t, state) in sim.sample_times.iter().zip(&sim.sample_states) {
            let mut row = vec![g15(*t)];
            row.extend(state.iter().map(|x| g15(*x)));
            csv.row(&row);
        }
        emit(Some(path), &csv.into_text())?;
    }
    Ok(())
}

fn cmd_optimize(args: &Common) -> Result<(), CliError> {
    let cfg = ExperimentConfig::load(&args.config)?;
    let params = cfg.bottleneck_params()?;
    let period = ExperimentConfig::require(cfg.period, "period")?;
    let n_pairs = cfg.n_pairs.unwrap_or(2);
    let budget = cfg.budget.unwrap_or(100);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);

    let result = search_schedule(&params, period, n_pairs, budget, seed)?;
    let doc = JsonObject::new()
        .number("best_gain", result.best_gain)
        .integer("evaluations", result.evaluations)
        .raw("best_signal", signal_json(&result.best_signal))
        .numbers("trace", result.trace.iter().copied())
        .render();
    emit(output_path(args, &cfg), &doc)
}
