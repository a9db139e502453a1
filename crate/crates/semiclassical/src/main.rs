use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semiclassical::cli::{load_config, run_scenario, sweep, validate_config, ScenarioConfig, SweepParam, SCENARIOS};

/// Worker-count override for the parallel check pool.
const WORKERS_ENV: &str = "SEMICLASSICAL_WORKERS";

#[derive(Parser)]
#[command(name = "semiclassical", version, about = "Runs semiclassical verification scenarios and sweeps")]
struct Cli {
    /// Seed for the random instances used in property checks.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config (or a builtin scenario name) and emit a JSON report.
    Run {
        config: String,
        /// Report path; overrides output.report. Printed to stdout when neither is set.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sweep one parameter and fit the log-log slope of the residual.
    Sweep {
        config: String,
        #[arg(long)]
        param: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',')]
        grid: Vec<f64>,
        /// CSV path; overrides output.table.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Print every schema violation in a config; empty output means valid.
    Validate { config: PathBuf },
    /// List builtin scenarios.
    ListScenarios,
}

const EXIT_CHECK_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn resolve(config: &str) -> Result<ScenarioConfig, ExitCode> {
    let path = Path::new(config);
    if !path.exists() {
        if let Ok(cfg) = ScenarioConfig::builtin(config) {
            return Ok(cfg);
        }
    }
    load_config(path).map_err(|diags| {
        for d in diags {
            eprintln!("config error: {d}");
        }
        ExitCode::from(EXIT_CONFIG)
    })
}

fn init_workers() -> Result<(), ExitCode> {
    let Ok(v) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = match v.parse() {
        Ok(n) if n > 0 => n,
        _ => {
            eprintln!("config error: {WORKERS_ENV} must be a positive integer, got {v:?}");
            return Err(ExitCode::from(EXIT_CONFIG));
        }
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| {
        eprintln!("cannot start worker pool: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), ExitCode> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| {
            eprintln!("cannot write {}: {e}", p.display());
            ExitCode::from(EXIT_CHECK_FAILURE)
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, ExitCode> {
    init_workers()?;
    match cli.command {
        Command::ListScenarios => {
            for s in SCENARIOS {
                println!("{:<24} {}", s.name, s.description);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let diags = validate_config(&config).map_err(|e| {
                eprintln!("{e}");
                ExitCode::from(EXIT_CONFIG)
            })?;
            for d in &diags {
                println!("{d}");
            }
            Ok(if diags.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_CONFIG) })
        }
        Command::Run { config, report } => {
            let cfg = resolve(&config)?;
            let rep = run_scenario(&cfg, cli.seed).map_err(|e| {
                eprintln!("{e}");
                ExitCode::from(EXIT_CONFIG)
            })?;
            for c in &rep.checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                let resid = c.residual.map_or_else(|| "error".to_string(), |r| format!("{r:.3e}"));
                eprintln!("{status} {:<36} residual {resid} tolerance {:.1e}", c.name, c.tolerance);
                if let Some(e) = &c.error {
                    eprintln!("     {e}");
                }
            }
            write_or_print(report.as_deref().or(cfg.output.report.as_deref()), &rep.to_json())?;
            Ok(ExitCode::from(rep.exit_code() as u8))
        }
        Command::Sweep { config, param, grid, table } => {
            let cfg = resolve(&config)?;
            let p: SweepParam = param.parse().map_err(|e| {
                eprintln!("{e}");
                ExitCode::from(EXIT_CONFIG)
            })?;
            let t = sweep(&cfg, p, &grid).map_err(|e| {
                eprintln!("{e}");
                match e {
                    semiclassical::Error::Config(_) => ExitCode::from(EXIT_CONFIG),
                    _ => ExitCode::from(EXIT_CHECK_FAILURE),
                }
            })?;
            if let Some(path) = table.as_deref().or(cfg.output.table.as_deref()) {
                let f = std::fs::File::create(path).map_err(|e| {
                    eprintln!("cannot write {}: {e}", path.display());
                    ExitCode::from(EXIT_CHECK_FAILURE)
                })?;
                t.write_csv(f).map_err(|e| {
                    eprintln!("{e}");
                    ExitCode::from(EXIT_CHECK_FAILURE)
                })?;
            }
            println!("{}", serde_json::to_string_pretty(&t).expect("table serializes"));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    run(cli).unwrap_or_else(|code| code)
}
