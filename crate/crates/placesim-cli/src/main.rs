//! Command-line front end: scenario files, single runs, n x seed sweeps,
//! standalone solves, and trace aggregation.
//!
//! Every run prints the resolved scenario (file values with flag overrides
//! applied, flags winning) before any work, so the output alone is enough
//! to reproduce it. The process exits 0 only when the requested operation
//! completed and every internal audit passed.

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use placesim::experiment::{
    baseline_scenario, load_scenario, metrics_csv, metrics_json, replay, run_simulation,
    save_scenario, summarize, ScenarioConfig, SimulationTrace,
};
use placesim::solver::{
    brute_force, parse_model, solve_exact, SolveBudget, DEFAULT_ENUMERATION_CAP,
};
use rayon::prelude::*;
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "placesim", version, about = "Three-tier placement simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the built-in benchmark scenario to a TOML file
    Scenario(ScenarioArgs),
    /// Run one simulation and export its trace
    Run(RunArgs),
    /// Run every n x seed cell and aggregate the metrics table
    Sweep(SweepArgs),
    /// Solve a plain-text assignment instance and print the result
    Solve(SolveArgs),
    /// Aggregate previously exported trace files into a metrics table
    Report(ReportArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Destination path for the scenario TOML
    #[arg(long)]
    out: PathBuf,
    /// Overwrite an existing file
    #[arg(long)]
    force: bool,
}

/// Scenario source plus the overrides shared by `run` and `sweep`.
/// Precedence: flag > file value > built-in benchmark scenario.
#[derive(Args)]
struct ConfigArgs {
    /// Scenario TOML; defaults to the built-in benchmark scenario
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the improvement threshold epsilon
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    base: ConfigArgs,
    /// Override the RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the reconfiguration target count n
    #[arg(long)]
    n: Option<usize>,
    /// Directory for trace.json and waves.csv exports
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    base: ConfigArgs,
    /// Target counts, comma separated (e.g. 100,200,400)
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Seeds, comma separated (e.g. 1,2,3)
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    /// File for the metrics table; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Directory for per-cell trace files
    #[arg(long)]
    traces: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Plain-text assignment instance (see solver docs for the format)
    #[arg(long)]
    instance: PathBuf,
    /// Cross-check the result against brute-force enumeration
    #[arg(long)]
    oracle: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace JSON files produced by `run` or `sweep --traces`
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// File for the metrics table; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Scenario(args) => scenario(args),
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Solve(args) => solve(args),
        Command::Report(args) => report(args),
    }
}

fn scenario(args: ScenarioArgs) -> Result<()> {
    if args.out.exists() && !args.force {
        bail!("{} exists; pass --force to overwrite", args.out.display());
    }
    save_scenario(&baseline_scenario(), &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn effective_config(base: &ConfigArgs) -> Result<ScenarioConfig> {
    let mut config = match &base.config {
        Some(path) => {
            load_scenario(path).with_context(|| format!("loading {}", path.display()))?
        }
        None => baseline_scenario(),
    };
    if let Some(epsilon) = base.epsilon {
        config.run.epsilon = epsilon;
    }
    Ok(config)
}

fn echo_config(config: &ScenarioConfig) -> Result<()> {
    println!("# effective scenario");
    print!("{}", config.to_toml()?);
    println!("# end scenario");
    Ok(())
}

/// Runs one cell and verifies the trace is self-consistent: the replayed
/// digest must equal the recorded one.
fn audited_run(config: &ScenarioConfig) -> Result<SimulationTrace> {
    config.validate()?;
    let trace = run_simulation(config)?;
    let digest = replay(&trace)?;
    ensure!(
        digest == trace.final_digest,
        "replay digest {digest:016x} differs from recorded {:016x}",
        trace.final_digest
    );
    Ok(trace)
}

fn run(args: RunArgs) -> Result<()> {
    let mut config = effective_config(&args.base)?;
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    if let Some(n) = args.n {
        config.run.targets = n;
    }
    echo_config(&config)?;

    let trace = audited_run(&config)?;
    let s = &trace.summary;
    println!(
        "placed {} rejected {} rounds {} applied {} moved {} digest {:016x}",
        s.placed, s.rejected, s.reconfig_rounds, s.applied_rounds, s.moved_total,
        trace.final_digest
    );

    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let trace_path = dir.join("trace.json");
        fs::write(&trace_path, trace.to_json()?)?;
        println!("wrote {}", trace_path.display());
        let waves_path = dir.join("waves.csv");
        fs::write(&waves_path, trace.wave_report_csv())?;
        println!("wrote {}", waves_path.display());
    }
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<()> {
    ensure!(!args.n.is_empty(), "--n needs at least one target count");
    ensure!(!args.seeds.is_empty(), "--seeds needs at least one seed");

    let base = effective_config(&args.base)?;
    echo_config(&base)?;
    println!(
        "# sweep n {:?} x seeds {:?} ({} cells)",
        args.n,
        args.seeds,
        args.n.len() * args.seeds.len()
    );

    let cells: Vec<(usize, u64)> = args
        .n
        .iter()
        .flat_map(|&n| args.seeds.iter().map(move |&seed| (n, seed)))
        .collect();
    // Cell order is the deterministic merge order; par_iter keeps it.
    let traces: Vec<SimulationTrace> = cells
        .par_iter()
        .map(|&(n, seed)| {
            let mut config = base.clone();
            config.run.targets = n;
            config.run.seed = seed;
            audited_run(&config).with_context(|| format!("cell n={n} seed={seed}"))
        })
        .collect::<Result<_>>()?;

    if let Some(dir) = &args.traces {
        fs::create_dir_all(dir)?;
        for (&(n, seed), trace) in cells.iter().zip(&traces) {
            let path = dir.join(format!("trace-n{n}-seed{seed}.json"));
            fs::write(&path, trace.to_json()?)?;
        }
        println!("# wrote {} trace files to {}", traces.len(), dir.display());
    }

    let rows = summarize(&traces)?;
    let table = match args.format {
        Format::Csv => metrics_csv(&rows),
        Format::Json => metrics_json(&rows)?,
    };
    emit(&table, args.out.as_deref())
}

fn solve(args: SolveArgs) -> Result<()> {
    let text = fs::read_to_string(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let model = parse_model(&text)?;
    let solved = solve_exact(&model, &SolveBudget::default())?;

    for (k, app) in model.apps.iter().enumerate() {
        let candidate = &app.candidates[solved.choice[k]];
        let movement = if candidate.is_current { "stays" } else { "moves" };
        println!("{} -> {} cost {} ({movement})", app.label, candidate.label, candidate.cost);
    }
    println!(
        "objective {} moves {} certified {} nodes {} lp {}",
        solved.objective,
        model.moved_count(&solved.choice),
        solved.certified,
        solved.stats.nodes,
        solved.stats.lp_solves
    );

    if args.oracle {
        let reference = brute_force(&model, DEFAULT_ENUMERATION_CAP)
            .context("brute-force cross-check refused")?;
        ensure!(
            reference.objective == solved.objective,
            "enumeration found {} but the solver returned {}",
            reference.objective,
            solved.objective
        );
        println!("oracle: enumeration agrees at {}", reference.objective);
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let mut traces = Vec::with_capacity(args.traces.len());
    for path in &args.traces {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        traces.push(SimulationTrace::from_json(&text)?);
    }
    let rows = summarize(&traces)?;
    let table = match args.format {
        Format::Csv => metrics_csv(&rows),
        Format::Json => metrics_json(&rows)?,
    };
    emit(&table, args.out.as_deref())
}

fn emit(table: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, table).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{table}"),
    }
    Ok(())
}
