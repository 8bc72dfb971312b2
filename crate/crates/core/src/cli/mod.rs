//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure or failed check, 2 invalid
//! configuration or arguments, 3 oracle enumeration budget exceeded.

pub mod output;
pub mod presets;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::agents::AgentKind;
use crate::harness::{parse_config_text, resolve_jobs, run_experiment, sweep, RunConfig, SweepGrid};
use crate::net::complexity_bounds;
use crate::net::gradcheck;
use crate::oracle::{exact_success_prob, mc_success_rate, StaticPolicyMatrix, DEFAULT_BUDGET};
use crate::seed::rng_from;
use crate::{Result, SimError};

pub use presets::{instance_names, preset_names, preset_text};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "alarm-sim", version, about = "Multi-channel alarm random access with distributed learning agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one configuration and write events.csv, summary.json, manifest.json.
    Run(ExperimentArgs),
    /// Run every cell of a grid and write one summary covering all cells.
    Sweep {
        #[command(flatten)]
        exp: ExperimentArgs,
        /// Also write one events file per cell.
        #[arg(long)]
        events_files: bool,
    },
    /// Exact success probability of a static policy against Monte Carlo.
    Oracle {
        /// Bundled instance name or path to a JSON instance.
        instance: String,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Backpropagation against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Operation counts per transmission decision.
    Complexity {
        /// Inclusive channel range `a..b`.
        #[arg(long, default_value = "1..10")]
        m_range: String,
    },
    /// Recompute summary rows from the event files in a result directory.
    Verify {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    /// Config file: flat settings plus an optional [grid] table.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled configuration (fig4 ... fig8).
    #[arg(long)]
    pub preset: Option<String>,
    /// `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub devices: Option<usize>,
    #[arg(long)]
    pub agent: Option<AgentKind>,
    #[arg(long)]
    pub events: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, env = "ALARM_SIM_JOBS")]
    pub jobs: Option<usize>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &SimError) -> i32 {
    match e {
        SimError::Config(_) => EXIT_CONFIG,
        SimError::ResourceLimit { .. } => EXIT_BUDGET,
        _ => EXIT_FAILURE,
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Run(exp) => cmd_run(&exp),
        Command::Sweep { exp, events_files } => cmd_sweep(&exp, events_files),
        Command::Oracle { instance, trials, seed, budget } => cmd_oracle(&instance, trials, seed, budget),
        Command::Gradcheck { trials, seed } => cmd_gradcheck(trials, seed),
        Command::Complexity { m_range } => cmd_complexity(&m_range),
        Command::Verify { out } => cmd_verify(&out),
    }
}

/// Defaults, then preset or file, then `--set`, then the dedicated flags.
pub fn resolve_config(exp: &ExperimentArgs) -> Result<(RunConfig, Option<SweepGrid>)> {
    let (mut config, grid) = match (&exp.preset, &exp.config) {
        (Some(name), _) => {
            let text = preset_text(name).ok_or_else(|| {
                SimError::Config(vec![format!(
                    "unknown preset '{name}' (available: {})",
                    preset_names().join(", ")
                )])
            })?;
            parse_config_text(text)?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| SimError::Config(vec![format!("{}: {e}", path.display())]))?;
            parse_config_text(&text).map_err(|e| match e {
                SimError::Config(p) => {
                    SimError::Config(p.into_iter().map(|m| format!("{}: {m}", path.display())).collect())
                }
                other => other,
            })?
        }
        (None, None) => (RunConfig::default(), None),
    };
    config = config.with_overrides(&exp.overrides)?;
    if let Some(v) = exp.channels {
        config.m_channels = v;
    }
    if let Some(v) = exp.devices {
        config.n_devices = v;
    }
    if let Some(v) = exp.agent {
        config.agent = v;
    }
    if let Some(v) = exp.events {
        config.n_events = v;
    }
    if let Some(v) = exp.runs {
        config.n_runs = v;
    }
    if let Some(v) = exp.seed {
        config.seed = v;
    }
    Ok((config, grid))
}

fn print_row(row: &output::SummaryRow) {
    let fmt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    println!(
        "cell {:>3}  {:<5} N={:<3} M={} lambda={} H,h={},{}  success={} [{}, {}]  converged {}/{}",
        row.cell,
        row.agent,
        row.n_devices,
        row.m_channels,
        row.lambda,
        row.hidden_layers,
        row.hidden_size,
        fmt(row.mean_success_rate),
        fmt(row.ci95_low),
        fmt(row.ci95_high),
        row.converged_runs,
        row.runs
    );
}

pub fn cmd_run(exp: &ExperimentArgs) -> Result<i32> {
    let (config, grid) = resolve_config(exp)?;
    if grid.is_some() {
        return Err(SimError::Config(vec!["config has a [grid] section; use the sweep command".into()]));
    }
    config.validate()?;
    let jobs = resolve_jobs(exp.jobs);
    log::info!("running {} runs of {} events on {jobs} workers", config.n_runs, config.n_events);
    let result = run_experiment(&config, jobs)?;
    output::write_results(
        &exp.out,
        &invocation(),
        config.seed,
        &[(config.clone(), result.summary.clone(), Some(result.runs.as_slice()))],
        true,
    )?;
    print_row(&output::SummaryRow::new(0, &config, &result.summary));
    println!("wrote {}", exp.out.display());
    Ok(EXIT_OK)
}

pub fn cmd_sweep(exp: &ExperimentArgs, events_files: bool) -> Result<i32> {
    let (base, grid) = resolve_config(exp)?;
    let grid = grid.ok_or_else(|| SimError::Config(vec!["sweep needs a [grid] section".into()]))?;
    let jobs = resolve_jobs(exp.jobs);
    let cells = sweep(&base, &grid, jobs, events_files)?;
    let entries: Vec<_> = cells
        .iter()
        .map(|c| (c.config.clone(), c.summary.clone(), events_files.then_some(c.runs.as_slice())))
        .collect();
    output::write_results(&exp.out, &invocation(), base.seed, &entries, false)?;
    for c in &cells {
        print_row(&output::SummaryRow::new(c.index, &c.config, &c.summary));
    }
    println!("wrote {} cells to {}", cells.len(), exp.out.display());
    Ok(EXIT_OK)
}

/// Bundled instance by name, else a JSON file.
/// The command line as typed, recorded in the manifest.
fn invocation() -> String {
    std::env::args_os()
        .map(|a| a.to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn load_instance(name_or_path: &str) -> Result<StaticPolicyMatrix> {
    let text = match presets::instance_text(name_or_path) {
        Some(t) => t.to_string(),
        None => std::fs::read_to_string(name_or_path).map_err(|e| {
            SimError::Config(vec![format!(
                "{name_or_path}: {e} (bundled instances: {})",
                instance_names().join(", ")
            )])
        })?,
    };
    let raw: StaticPolicyMatrix = serde_json::from_str(&text).map_err(|e| SimError::Parse {
        path: name_or_path.to_string(),
        message: e.to_string(),
    })?;
    StaticPolicyMatrix::new(raw.n_channels, raw.probs, raw.activation)
        .map_err(|e| SimError::Config(vec![format!("{name_or_path}: {e}")]))
}

pub fn cmd_oracle(instance: &str, trials: u64, seed: u64, budget: u128) -> Result<i32> {
    let policy = load_instance(instance)?;
    let exact = exact_success_prob(&policy, budget)?;
    let mc = mc_success_rate(&policy, trials, &mut rng_from(seed))?;
    let pass = mc.agrees_with(exact, 3.0);
    println!("instance      {instance}");
    println!("exact         {exact:.10}");
    println!("monte carlo   {:.10} ({} trials)", mc.mean, mc.trials);
    println!("std error     {:.3e}", mc.std_error);
    println!("3-sigma test  {}", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { EXIT_OK } else { EXIT_FAILURE })
}

pub fn cmd_gradcheck(trials: usize, seed: u64) -> Result<i32> {
    if trials == 0 {
        return Err(SimError::Config(vec!["trials: must be at least 1".into()]));
    }
    let report = gradcheck::run(trials, seed, gradcheck::backprop_gradient)?;
    println!("trials              {}", report.trials);
    println!("max relative error  {:.3e}", report.max_rel_error);
    println!(
        "worst               trial {} param {} layer {} shape {:?}",
        report.worst_trial, report.worst_param, report.worst_layer, report.worst_shape
    );
    println!("result              {}", if report.passed() { "PASS" } else { "FAIL" });
    Ok(if report.passed() { EXIT_OK } else { EXIT_FAILURE })
}

/// Parses `a..b` with `1 <= a <= b <= 16`.
pub fn parse_m_range(s: &str) -> Result<(u32, u32)> {
    let bad = || SimError::Config(vec![format!("m-range '{s}': expected a..b with 1 <= a <= b <= 16")]);
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if !(1 <= a && a <= b && b <= 16) {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn cmd_complexity(m_range: &str) -> Result<i32> {
    let (a, b) = parse_m_range(m_range)?;
    println!("{:>3} {:>14} {:>16} {:>16} {:>8}", "M", "forward", "lower", "upper", "ratio");
    let mut prev: Option<u128> = None;
    for m in a..=b {
        let c = complexity_bounds(m, 30u128 << m);
        let ratio = prev.map_or_else(|| "-".to_string(), |p| format!("{:.4}", c.lower as f64 / p as f64));
        println!("{m:>3} {:>14} {:>16} {:>16} {ratio:>8}", c.forward, c.lower, c.upper);
        prev = Some(c.lower);
    }
    Ok(EXIT_OK)
}

pub fn cmd_verify(out: &Path) -> Result<i32> {
    let report = output::verify(out)?;
    println!(
        "checked {} cells, skipped {} without events, {} mismatched",
        report.checked,
        report.skipped,
        report.mismatches.len()
    );
    for cell in &report.mismatches {
        println!("mismatch in cell {cell}");
    }
    Ok(if report.mismatches.is_empty() && report.checked > 0 { EXIT_OK } else { EXIT_FAILURE })
}
