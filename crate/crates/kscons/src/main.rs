use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kscons::config::{load_config, load_str, LoadedConfig};
use kscons::error::HarnessError;
use kscons::io::Table;
use kscons::report::summarize_dir;
use kscons::scenarios::run_to_dir;
use kscons_core::blowup::{report, FitOptions};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "kscons",
    version,
    about = "Chemotaxis-consumption simulator and diagnostics lab"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its output directory.
    Run {
        /// TOML run file; omit to run a scenario preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Scenario preset, same as `--override scenario=<name>`.
        #[arg(long)]
        scenario: Option<String>,
        /// Output directory (default: `out_dir` from the config).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Stop after this many steps.
        #[arg(long)]
        max_steps: Option<usize>,
        /// `key.path=value`, applied after the file. Repeatable.
        #[arg(long = "override", short = 'o')]
        overrides: Vec<String>,
    },
    /// Fit a blow-up rate to a `t, n_sup` series.
    Fit {
        /// CSV with a header; `t` and the chosen column are read.
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value = "n_sup")]
        column: String,
        /// `‖c₀‖∞` for the lower bound; defaults to the first `c_sup` entry.
        #[arg(long)]
        c0_sup: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c3: f64,
        #[arg(long, default_value_t = 0.25)]
        window_fraction: f64,
        #[arg(long, default_value_t = 0.05)]
        max_residual: f64,
        #[arg(long, default_value_t = 0.05)]
        classify_tol: f64,
    },
    /// Recompute and print the summary of a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

fn load(
    config: Option<PathBuf>,
    scenario: Option<String>,
    overrides: Vec<String>,
) -> Result<LoadedConfig, HarnessError> {
    let mut all = Vec::new();
    if let Some(s) = scenario {
        all.push(format!("scenario=\"{s}\""));
    }
    all.extend(overrides);
    match config {
        Some(path) => load_config(&path, &all),
        None => load_str("", &all),
    }
}

fn execute(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Run {
            config,
            scenario,
            out_dir,
            max_steps,
            overrides,
        } => {
            let loaded = load(config, scenario, overrides)?;
            for d in &loaded.defaulted {
                eprintln!("default: {d}");
            }
            let dir = out_dir.unwrap_or_else(|| PathBuf::from(&loaded.config.out_dir));
            let summary = run_to_dir(&loaded, &dir, max_steps)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
            if summary.status.diverged {
                eprintln!("run diverged: {} {}", summary.status.reason, summary.status.detail);
                return Ok(2);
            }
            Ok(0)
        }
        Command::Fit {
            series,
            column,
            c0_sup,
            c3,
            window_fraction,
            max_residual,
            classify_tol,
        } => {
            let table = Table::read(&series)?;
            let missing = |name: &str| HarnessError::format(&series, format!("missing column `{name}`"));
            let t = table.column("t").ok_or_else(|| missing("t"))?;
            let n = table.column(&column).ok_or_else(|| missing(&column))?;
            let c0 = match c0_sup {
                Some(v) => v,
                None => table
                    .column("c_sup")
                    .and_then(|c| c.first().copied())
                    .ok_or_else(|| HarnessError::Config("pass --c0-sup or include a c_sup column".into()))?,
            };
            let points: Vec<(f64, f64)> = t.into_iter().zip(n).collect();
            let options = FitOptions {
                window_fraction,
                max_residual,
            };
            let r = report(&points, options, classify_tol, c0, c3)?;
            let out = json!({
                "t_star": r.t_star,
                "gamma": r.gamma,
                "amplitude": r.amplitude,
                "fit_residual": r.fit_residual,
                "classification": r.classification.as_str(),
                "alpha": r.alpha,
                "limsup_estimate": r.limsup_estimate,
                "lower_bound_satisfied": r.lower_bound_satisfied,
            });
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            Ok(0)
        }
        Command::Report { run } => {
            let summary = summarize_dir(&run)?;
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable"));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
