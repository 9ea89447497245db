//! `anclab`: bounds, simulation, optimization and sweeps for layered
//! analog-network-coding relay networks.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 a requested check failed.

mod grid;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use anc_core::bounds::{anc_rate, bounds_report, scheme_gains, Scheme};
use anc_core::montecarlo::{agreement_check, analytic_values, simulate, SimConfig};
use anc_core::optimizer::{gain_boxes, optimize_gains, OptimizerConfig};
use anc_core::power::check_feasible;
use anc_core::report::csv_string;
use anc_core::sweep::{sweep_delta, sweep_relay_count, sweep_source_power};
use anc_core::{GainAssignment, LayeredNetwork};

#[derive(Parser, Debug)]
#[command(name = "anclab", version, about = "Analog network coding rate bounds, simulation and sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rate bounds and the achieved rate of one scheme.
    Bounds(BoundsArgs),
    /// Monte Carlo simulation checked against the exact moments.
    Simulate(SimulateArgs),
    /// Numeric SNR maximization inside the maximum-gain boxes.
    Optimize(OptimizeArgs),
    /// Rates and bounds over a source-power grid.
    SweepPs(SweepPsArgs),
    /// Rates and bounds as the last relay layer grows.
    SweepN(SweepNArgs),
    /// Bounds as the regime delta shrinks with the exceptional layer held fixed.
    SweepDelta(SweepDeltaArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    FullPower,
    Generalized,
    Optimizer,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::FullPower => Scheme::FullPower,
            SchemeArg::Generalized => Scheme::Generalized,
            SchemeArg::Optimizer => Scheme::Optimizer,
        }
    }
}

#[derive(Args, Debug)]
struct Common {
    /// Network config (JSON).
    #[arg(long)]
    network: PathBuf,
    /// Output file; `-` or absent writes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct OptimizerArgs {
    /// Random restarts on top of the scheme seeds.
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl OptimizerArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig { restarts: self.restarts, max_iterations: self.max_iterations, seed: self.seed, ..Default::default() }
    }
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    /// Exceptional relay layer `l`, `1 <= l <= L-1`.
    #[arg(long)]
    layer: usize,
    #[arg(long, value_enum, default_value = "generalized")]
    scheme: SchemeArg,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Gain assignment (JSON). Without it the gains come from `--scheme`.
    #[arg(long)]
    gains: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "full-power")]
    scheme: SchemeArg,
    /// Exceptional layer for `--scheme generalized`.
    #[arg(long, default_value_t = 1)]
    layer: usize,
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Agreement threshold in standard errors.
    #[arg(long, default_value_t = 4.0)]
    z: f64,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Also write the best gains as JSON, ready for `simulate --gains`.
    #[arg(long)]
    gains_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepPsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    layer: usize,
    /// Source powers: `a,b,c` or `log:START:STOP:COUNT`.
    #[arg(long)]
    grid: String,
    /// `optimizer` adds the numeric baseline column; the scheme columns are always present.
    #[arg(long, value_enum, default_value = "generalized")]
    scheme: SchemeArg,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Args, Debug)]
struct SweepNArgs {
    #[command(flatten)]
    common: Common,
    /// Relay counts: `a,b,c` or `A..B`.
    #[arg(long)]
    grid: String,
    /// Budget of every relay in the swept layer.
    #[arg(long, default_value_t = 2.0)]
    relay_budget: f64,
}

#[derive(Args, Debug)]
struct SweepDeltaArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    layer: usize,
    /// Target deltas: `a,b,c` or `log:START:STOP:COUNT`.
    #[arg(long)]
    grid: String,
}

enum Outcome {
    Success,
    CheckFailed,
}

fn load_network(path: &Path) -> Result<LayeredNetwork> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    LayeredNetwork::from_json(&text).with_context(|| format!("invalid network config {}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) if p.as_os_str() != "-" => {
            fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))
        }
        _ => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn render<T: Serialize>(format: Format, rows: &[T]) -> Result<String> {
    Ok(match format {
        Format::Csv => csv_string(rows)?,
        Format::Json => serde_json::to_string_pretty(rows)? + "\n",
    })
}

fn cmd_bounds(args: &BoundsArgs) -> Result<Outcome> {
    let net = load_network(&args.common.network)?;
    let report = bounds_report(&net, args.layer, args.scheme.into(), &args.optimizer.config())?;
    let text = match args.common.format {
        Format::Csv => report.to_csv()?,
        Format::Json => report.to_json() + "\n",
    };
    emit(&args.common.out, &text)?;
    Ok(Outcome::Success)
}

/// One line of the `simulate` CSV: a statistical check or a budget check.
#[derive(Serialize)]
struct SimRow {
    check: String,
    value: f64,
    std_error: Option<f64>,
    reference: f64,
    z_score: Option<f64>,
    pass: bool,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<Outcome> {
    let net = load_network(&args.common.network)?;
    let gains = match &args.gains {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            GainAssignment::from_json(&net, &text).with_context(|| format!("invalid gains {}", path.display()))?
        }
        None => scheme_gains(&net, args.layer, args.scheme.into(), &OptimizerConfig { seed: args.seed, ..Default::default() })?,
    };
    if !(args.z > 0.0) {
        bail!("--z must be positive, got {}", args.z);
    }
    let config = SimConfig { samples: args.samples, seed: args.seed, workers: args.workers };
    let report = simulate(&net, &gains, &config)?;
    let analytic = analytic_values(&net, &gains)?;
    let agreement = agreement_check(&report, &analytic, args.z)?;
    let feasibility = check_feasible(&net, &gains)?;

    let text = match args.common.format {
        Format::Json => {
            let value = serde_json::json!({
                "simulation": report,
                "analytic": analytic,
                "agreement": agreement,
                "feasibility": feasibility,
            });
            serde_json::to_string_pretty(&value)? + "\n"
        }
        Format::Csv => {
            let mut rows: Vec<SimRow> = agreement
                .checks
                .iter()
                .map(|c| SimRow {
                    check: c.quantity.clone(),
                    value: c.empirical,
                    std_error: Some(c.std_error),
                    reference: c.analytic,
                    z_score: Some(c.z_score),
                    pass: c.pass,
                })
                .collect();
            rows.extend(feasibility.nodes.iter().map(|n| SimRow {
                check: format!("budget[{}:{}]", n.layer, n.index),
                value: n.exact_power,
                std_error: None,
                reference: n.budget,
                z_score: None,
                pass: n.exact_ok,
            }));
            csv_string(&rows)?
        }
    };
    emit(&args.common.out, &text)?;
    for n in feasibility.nodes.iter().filter(|n| !n.exact_ok) {
        eprintln!(
            "warning: relay {}:{} transmits {:.6} > budget {:.6}",
            n.layer, n.index, n.exact_power, n.budget
        );
    }
    if agreement.all_pass && feasibility.all_exact {
        Ok(Outcome::Success)
    } else {
        eprintln!(
            "check failed: {}/{} statistical checks passed at {} s.e.; budgets {}",
            agreement.pass_count(),
            agreement.checks.len(),
            args.z,
            if feasibility.all_exact { "respected" } else { "violated" }
        );
        Ok(Outcome::CheckFailed)
    }
}

#[derive(Serialize)]
struct GainRow {
    layer: usize,
    index: usize,
    beta: f64,
    beta_max: f64,
}

#[derive(Serialize)]
struct OptimizeSummary<'a> {
    snr: f64,
    rate: f64,
    best_start: usize,
    sweeps: usize,
    gains: &'a GainAssignment,
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<Outcome> {
    let net = load_network(&args.common.network)?;
    let res = optimize_gains(&net, &args.optimizer.config())?;
    let rate = anc_rate(res.snr)?;
    let text = match args.common.format {
        Format::Json => {
            let summary = OptimizeSummary {
                snr: res.snr,
                rate,
                best_start: res.best_start,
                sweeps: res.trace.len() - 1,
                gains: &res.gains,
            };
            serde_json::to_string_pretty(&summary)? + "\n"
        }
        Format::Csv => {
            let rows: Vec<GainRow> = net
                .relays()
                .zip(gain_boxes(&net)?)
                .map(|(n, b)| GainRow { layer: n.layer, index: n.index, beta: res.gains.beta(n), beta_max: b })
                .collect();
            csv_string(&rows)?
        }
    };
    emit(&args.common.out, &text)?;
    if let Some(path) = &args.gains_out {
        fs::write(path, res.gains.to_json() + "\n").with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(Outcome::Success)
}

fn cmd_sweep_ps(args: &SweepPsArgs) -> Result<Outcome> {
    let net = load_network(&args.common.network)?;
    let grid = grid::parse_real_grid(&args.grid)?;
    let cfg = args.optimizer.config();
    let optimizer = (args.scheme == SchemeArg::Optimizer).then_some(&cfg);
    let rows = sweep_source_power(&net, args.layer, &grid, optimizer)?;
    emit(&args.common.out, &render(args.common.format, &rows)?)?;
    Ok(Outcome::Success)
}

fn cmd_sweep_n(args: &SweepNArgs) -> Result<Outcome> {
    let net = load_network(&args.common.network)?;
    let grid = grid::parse_count_grid(&args.grid)?;
    let rows = sweep_relay_count(&net, &grid, args.relay_budget)?;
    emit(&args.common.out, &render(args.common.format, &rows)?)?;
    Ok(Outcome::Success)
}

fn cmd_sweep_delta(args: &SweepDeltaArgs) -> Result<Outcome> {
    let net = load_network(&args.common.network)?;
    let grid = grid::parse_real_grid(&args.grid)?;
    let rows = sweep_delta(&net, args.layer, &grid)?;
    emit(&args.common.out, &render(args.common.format, &rows)?)?;
    Ok(Outcome::Success)
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::SweepPs(a) => cmd_sweep_ps(a),
        Command::SweepN(a) => cmd_sweep_n(a),
        Command::SweepDelta(a) => cmd_sweep_delta(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors; that code is reserved for failed checks here.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
