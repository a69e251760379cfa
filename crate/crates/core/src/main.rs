//! Batch command-line front end: single runs, parameter sweeps, the
//! spectral cross-check, diffusion-surface dumps, and default-config
//! generation. Exit codes: 0 success, 1 configuration or usage error,
//! 2 numerical failure.

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use twosir::config::{default_config_text, parse_config};
use twosir::galerkin::{relative_l2_discrepancy, run_oracle};
use twosir::io::{
    emit_grid_table, emit_heatmap, emit_sigma_surface, emit_summary, emit_sweep_table,
    emit_timeseries, fmt_f64,
};
use twosir::metrics::summarize;
use twosir::model::Compartment;
use twosir::stepper::run_simulation;
use twosir::sweep::{run_lambda_grid, run_lambda_sweep};

#[derive(Parser)]
#[command(
    name = "twosir",
    about = "Two-region SIR reaction-diffusion simulator with a switching migration interface",
    after_help = "Configuration files use a flat `key = value` format; run `twosir default-config` \
                  to print every key with its default value and a comment block per section.",
    version
)]
struct Cli {
    /// Worker threads for sweep parallelism (other commands are serial).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output directory; created if absent.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Assert that no randomness is involved: every command is fully
    /// deterministic; this flag only documents that fact.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write time series, heatmaps and a summary.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a lambda sweep (both regions equal) or a (lambda1, lambda2) grid.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated lambda values, e.g. 1e-5,1e-4,1e-3.
        #[arg(long, value_delimiter = ',')]
        lambdas: Vec<f64>,
        /// Grid axis for lambda1 (requires --lambda2-grid).
        #[arg(long, value_delimiter = ',')]
        lambda1_grid: Vec<f64>,
        /// Grid axis for lambda2.
        #[arg(long, value_delimiter = ',')]
        lambda2_grid: Vec<f64>,
    },
    /// Run the solver and the spectral oracle side by side and report the
    /// relative L2 discrepancy.
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Number of spectral modes per region.
        #[arg(long, default_value_t = 32)]
        modes: usize,
    },
    /// Dump the diffusion coefficient surface sigma(y, t) as CSV.
    SigmaDump {
        #[arg(long)]
        config: PathBuf,
        /// Number of time samples over the horizon.
        #[arg(long, default_value_t = 151)]
        t_samples: usize,
    },
    /// Print (or write) the default configuration file.
    DefaultConfig {
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn ensure_dir(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {}", dir.display(), e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {}", msg);
            ExitCode::from(2)
        }
    }
}

enum CliError {
    Config(String),
    Numerical(String),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let out_dir = cli.out_dir.clone();
    match cli.command {
        Command::Run { config } => {
            ensure_dir(&out_dir).map_err(CliError::Config)?;
            let cfg = parse_config(&config).map_err(|e| CliError::Config(e.to_string()))?;
            let record = run_simulation(&cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
            emit_timeseries(&record, &out_dir.join("timeseries.csv"))
                .map_err(|e| CliError::Config(e.to_string()))?;
            for (c, name) in [
                (Compartment::S, "heatmap_s.csv"),
                (Compartment::I, "heatmap_i.csv"),
                (Compartment::R, "heatmap_r.csv"),
            ] {
                emit_heatmap(&record, c, &out_dir.join(name))
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
            let row = summarize(&record).map_err(|e| CliError::Numerical(e.to_string()))?;
            emit_summary(&row, &out_dir.join("summary.csv"))
                .map_err(|e| CliError::Config(e.to_string()))?;
            println!(
                "run complete: {} frames, lockdown {} days ({} clamps, max {}), weak degeneracy finite: {}",
                record.frames.len(),
                record.lockdown_days,
                record.clamp_count,
                record.clamp_max,
                record
                    .weak_degeneracy_finite
                    .map(|b| b.to_string())
                    .unwrap_or_else(|| "n/a".to_string())
            );
            Ok(())
        }
        Command::Sweep {
            config,
            lambdas,
            lambda1_grid,
            lambda2_grid,
        } => {
            ensure_dir(&out_dir).map_err(CliError::Config)?;
            let cfg = parse_config(&config).map_err(|e| CliError::Config(e.to_string()))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(cli.threads.max(1))
                .build()
                .map_err(|e| CliError::Config(e.to_string()))?;
            let has_grid = !lambda1_grid.is_empty() || !lambda2_grid.is_empty();
            if has_grid {
                if lambda1_grid.is_empty() || lambda2_grid.is_empty() {
                    return Err(CliError::Config(
                        "grid sweeps need both --lambda1-grid and --lambda2-grid".to_string(),
                    ));
                }
                let points = pool.install(|| run_lambda_grid(&cfg, &lambda1_grid, &lambda2_grid));
                let failures = points.iter().filter(|p| p.outcome.is_err()).count();
                emit_grid_table(&points, &out_dir.join("grid.csv"))
                    .map_err(|e| CliError::Config(e.to_string()))?;
                println!(
                    "grid sweep complete: {} points, {} failed",
                    points.len(),
                    failures
                );
                if failures == points.len() && !points.is_empty() {
                    return Err(CliError::Numerical("every grid point failed".to_string()));
                }
            }
            if !lambdas.is_empty() {
                let points = pool.install(|| run_lambda_sweep(&cfg, &lambdas));
                let failures = points.iter().filter(|p| p.outcome.is_err()).count();
                emit_sweep_table(&points, &out_dir.join("sweep_summary.csv"))
                    .map_err(|e| CliError::Config(e.to_string()))?;
                println!(
                    "lambda sweep complete: {} points, {} failed",
                    points.len(),
                    failures
                );
                if failures == points.len() && !points.is_empty() {
                    return Err(CliError::Numerical("every sweep point failed".to_string()));
                }
            }
            if !has_grid && lambdas.is_empty() {
                return Err(CliError::Config(
                    "nothing to sweep: pass --lambdas or --lambda1-grid/--lambda2-grid".to_string(),
                ));
            }
            Ok(())
        }
        Command::Oracle { config, modes } => {
            ensure_dir(&out_dir).map_err(CliError::Config)?;
            let cfg = parse_config(&config).map_err(|e| CliError::Config(e.to_string()))?;
            let record = run_simulation(&cfg).map_err(|e| CliError::Numerical(e.to_string()))?;
            let oracle = run_oracle(&cfg, modes).map_err(|e| CliError::Numerical(e.to_string()))?;
            let disc = relative_l2_discrepancy(&record, &oracle);
            let path = out_dir.join("oracle_report.csv");
            let mut text = String::from(
                "n_modes,rk4_dt,relative_l2_discrepancy,lockdown_days_fvm,lockdown_days_oracle\n",
            );
            text.push_str(&format!(
                "{},{},{},{},{}\n",
                modes,
                fmt_f64(oracle.dt_used),
                fmt_f64(disc),
                fmt_f64(record.lockdown_days),
                fmt_f64(oracle.lockdown_days)
            ));
            std::fs::write(&path, text)
                .map_err(|e| CliError::Config(format!("cannot write {}: {}", path.display(), e)))?;
            println!(
                "oracle comparison: {} modes, relative L2 discrepancy {:.6e}",
                modes, disc
            );
            Ok(())
        }
        Command::SigmaDump { config, t_samples } => {
            ensure_dir(&out_dir).map_err(CliError::Config)?;
            let cfg = parse_config(&config).map_err(|e| CliError::Config(e.to_string()))?;
            emit_sigma_surface(&cfg, t_samples, &out_dir.join("sigma_surface.csv"))
                .map_err(|e| CliError::Config(e.to_string()))?;
            println!("sigma surface written");
            Ok(())
        }
        Command::DefaultConfig { out } => {
            let text = default_config_text();
            match out {
                Some(path) => {
                    if let Some(parent) = path.parent() {
                        if !parent.as_os_str().is_empty() {
                            ensure_dir(parent).map_err(CliError::Config)?;
                        }
                    }
                    std::fs::write(&path, text).map_err(|e| {
                        CliError::Config(format!("cannot write {}: {}", path.display(), e))
                    })?;
                    println!("default configuration written to {}", path.display());
                }
                None => print!("{}", text),
            }
            Ok(())
        }
    }
}
