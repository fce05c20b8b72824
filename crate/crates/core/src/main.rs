use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use isac_core::allocator::{epa, optimize_ppa_default, rpa, AllocationResult};
use isac_core::channel;
use isac_core::harness::{
    any_feasible, emit_csv, parse_schemes, render_plots, run_pod_validation, run_rate_sweep, Grid, ResultRow, Scheme,
    SnapshotPolicy, SweepSpec, SweepVariable,
};
use isac_core::{Error, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "comp-isac",
    version,
    about = "Detection validation and power allocation sweeps for CoMP ISAC"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form vs Monte Carlo detection probability along a budget grid.
    ValidatePod(SweepArgs),
    /// Sum rate of each scheme versus the power budget (dB).
    SweepBudget(SweepArgs),
    /// Sum rate of each scheme versus the detection probability threshold.
    SweepPod(SweepArgs),
    /// Allocate power for one scenario and print the result as JSON.
    Solve(SolveArgs),
    /// Render SVG charts from a sweep CSV.
    Plot(PlotArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML). Defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the power budget in dB.
    #[arg(long = "budget-db")]
    budget_db: Option<f64>,
    /// Comma-separated subset of ppa,epa,rpa.
    #[arg(long)]
    schemes: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory for the CSV (and plots).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Monte Carlo experiments per target and grid point.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long)]
    start: Option<f64>,
    #[arg(long)]
    stop: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Average over this many channel snapshots instead of one fixed draw.
    #[arg(long)]
    snapshots: Option<usize>,
    /// Record per-row wall time (makes the CSV non-reproducible).
    #[arg(long)]
    timing: bool,
    /// Also render SVG charts next to the CSV.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Override every detection probability threshold.
    #[arg(long)]
    pod: Option<f64>,
    /// Channel snapshot index.
    #[arg(long, default_value_t = 0)]
    snapshot: u64,
    /// Also write the JSON to this directory as solve.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// CSV written by one of the sweep subcommands.
    csv: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::Parse { .. } | Error::Io { .. } => 1,
            Error::Infeasible { .. } | Error::SamplingExhausted { .. } | Error::InfeasibleTarget { .. } => 2,
            _ => 3,
        };
        Failure {
            code,
            kind: e.kind(),
            msg: e.to_string(),
        }
    }
}

fn load(common: &Common) -> Result<ScenarioConfig, Failure> {
    let mut config = match &common.config {
        Some(path) => ScenarioConfig::from_path(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(db) = common.budget_db {
        config = config.with_power_budget_db(db);
    }
    config.validate()?;
    Ok(config)
}

fn sweep_spec(
    args: &SweepArgs,
    variable: SweepVariable,
    defaults: (f64, f64, f64),
    schemes: &str,
) -> Result<SweepSpec, Failure> {
    let grid = Grid::new(
        args.start.unwrap_or(defaults.0),
        args.stop.unwrap_or(defaults.1),
        args.step.unwrap_or(defaults.2),
    )?;
    let schemes = parse_schemes(args.common.schemes.as_deref().unwrap_or(schemes))?;
    let mut spec = SweepSpec::new(variable, grid, schemes);
    spec.trials = args.trials;
    spec.timing = args.timing;
    if let Some(m) = args.snapshots {
        spec.snapshots = SnapshotPolicy::Average(m);
    }
    spec.validate()?;
    Ok(spec)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|source| {
        Failure::from(Error::Io {
            path: dir.to_path_buf(),
            source,
        })
    })
}

fn write_outputs(rows: &[ResultRow], args: &SweepArgs, name: &str) -> Result<(), Failure> {
    create_dir(&args.out)?;
    let path = args.out.join(format!("{name}.csv"));
    emit_csv(rows, &path)?;
    println!("{}", path.display());
    if args.plot {
        for svg in render_plots(&path, &args.out)? {
            println!("{}", svg.display());
        }
    }
    Ok(())
}

fn infeasible_everywhere(rows: &[ResultRow]) -> Failure {
    Failure {
        code: 2,
        kind: "infeasible",
        msg: format!("no scheme is feasible at any of the {} sweep rows", rows.len()),
    }
}

#[derive(Serialize)]
struct Solved {
    scheme: Scheme,
    result: AllocationResult,
}

fn solve(args: &SolveArgs) -> Result<(), Failure> {
    let mut config = load(&args.common)?;
    if let Some(xi) = args.pod {
        if !(0.0..1.0).contains(&xi) {
            return Err(Error::Config {
                key: "pod".into(),
                msg: format!("{xi} outside [0, 1)"),
            }
            .into());
        }
        config = config.with_pod_threshold(xi);
    }
    let schemes = parse_schemes(args.common.schemes.as_deref().unwrap_or("ppa"))?;
    let realization = channel::snapshot(&config, args.snapshot)?;
    let mut solved = Vec::new();
    for scheme in schemes {
        let result = match scheme {
            Scheme::Ppa => optimize_ppa_default(&config, &realization)?,
            Scheme::Epa => epa(&config, &realization)?,
            Scheme::Rpa => rpa(&config, &realization, config.solver.rpa_seed)?,
        };
        solved.push(Solved { scheme, result });
    }
    let json = serde_json::to_string_pretty(&solved).expect("results serialize");
    println!("{json}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        let path = dir.join("solve.json");
        std::fs::write(&path, format!("{json}\n")).map_err(|source| Failure::from(Error::Io { path, source }))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::ValidatePod(args) => {
            let config = load(&args.common)?;
            let spec = sweep_spec(&args, SweepVariable::PowerBudgetDb, (10.0, 20.0, 2.0), "epa")?;
            let rows = run_pod_validation(&config, &spec)?;
            write_outputs(&rows, &args, "validate_pod")
        }
        Command::SweepBudget(args) => {
            let config = load(&args.common)?;
            let spec = sweep_spec(&args, SweepVariable::PowerBudgetDb, (5.0, 25.0, 1.0), "ppa,epa,rpa")?;
            let rows = run_rate_sweep(&config, &spec)?;
            write_outputs(&rows, &args, "sweep_budget")?;
            if !any_feasible(&rows) {
                return Err(infeasible_everywhere(&rows));
            }
            Ok(())
        }
        Command::SweepPod(args) => {
            let config = load(&args.common)?;
            let spec = sweep_spec(&args, SweepVariable::PodThreshold, (0.5, 0.95, 0.05), "ppa,epa,rpa")?;
            let rows = run_rate_sweep(&config, &spec)?;
            write_outputs(&rows, &args, "sweep_pod")?;
            if !any_feasible(&rows) {
                return Err(infeasible_everywhere(&rows));
            }
            Ok(())
        }
        Command::Solve(args) => solve(&args),
        Command::Plot(args) => {
            for svg in render_plots(&args.csv, &args.out)? {
                println!("{}", svg.display());
            }
            Ok(())
        }
    }
}

fn fail(f: Failure) -> ExitCode {
    let msg = f.msg.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error[{}]: {msg}", f.kind);
    ExitCode::from(f.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("invalid arguments");
            return fail(Failure {
                code: 1,
                kind: "usage",
                msg: first.trim_start_matches("error: ").to_string(),
            });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(
                Error::Config {
                    key: "threads".into(),
                    msg: "must be >= 1".into(),
                }
                .into(),
            );
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(Failure {
                code: 3,
                kind: "threads",
                msg: e.to_string(),
            });
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}
