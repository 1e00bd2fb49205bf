use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irs_experiments::config::ExperimentConfig;
use irs_experiments::error::{ExpError, Result};
use irs_experiments::output;
use irs_experiments::overhead::run_overhead;
use irs_experiments::presets::{preset, PRESETS};
use irs_experiments::run::{run_optimize, run_sweep, run_validate};

#[derive(Parser)]
#[command(name = "irs-exp", version, about = "IRS phase-design experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (TOML).
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in config: fig1, fig2a, fig2b, fig3a, fig3b, fig4a, fig4b or table2.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Output directory, overriding the config's.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed for Monte Carlo draws and optimizers.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    mc_samples: Option<usize>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the empirical SNR CDF with the fitted gamma CDF.
    Validate,
    /// Analytic and Monte Carlo metric for every sweep value and method.
    Sweep,
    /// Optimize phases at a single scenario point.
    Optimize,
    /// Signaling overhead of statistical versus instantaneous designs.
    Overhead,
    /// Print the resolved config as TOML.
    ShowConfig,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match (&cli.config, &cli.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => {
            return Err(ExpError::Config(format!(
                "pass --config PATH or --preset NAME ({})",
                PRESETS.join(", ")
            )))
        }
    };
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.monte_carlo.seed = seed;
    }
    if let Some(n) = cli.mc_samples {
        config.monte_carlo.samples = n;
    }
    config.validate()?;
    Ok(config)
}

fn execute(cli: &Cli) -> Result<()> {
    let config = load(cli)?;
    let dir = config.output_dir.clone();
    log::info!("{} (fingerprint {})", config.name, config.fingerprint());
    match cli.command {
        Command::ShowConfig => print!("{}", config.to_toml()),
        Command::Overhead => {
            let o = &config.overhead;
            let rows = run_overhead(&o.x, o.bits, o.continuous_bits, &o.elements)?;
            for r in rows.iter().filter(|r| r.elements == o.elements[0]) {
                println!("x = {:>4}: {:.2}% reduction", r.x, r.reduction_percent);
            }
            println!("wrote {}", output::write_overhead(&dir, &config, &rows)?.display());
        }
        Command::Sweep => {
            let rows = run_sweep(&config)?;
            println!("wrote {}", output::write_sweep(&dir, &config, &rows)?.display());
            let errors = rows.iter().filter(|r| r.status.starts_with("error")).count();
            if errors > 0 {
                log::warn!("{errors} cells failed");
            }
            let failed: Vec<String> = rows
                .iter()
                .filter(|r| r.is_gate_failure())
                .map(|r| format!("{}@{}", r.method, r.axis_value))
                .collect();
            if !failed.is_empty() {
                return Err(ExpError::Gate(format!("{} cells: {}", failed.len(), failed.join(", "))));
            }
        }
        Command::Validate => {
            let v = run_validate(&config)?;
            for p in output::write_validation(&dir, &config, &v)? {
                println!("wrote {}", p.display());
            }
            for k in &v.ks {
                let warn = if k.low_sample_warning { " (low-sample warning)" } else { "" };
                println!("N = {:>4} {:<12} KS = {:.5}{warn}", k.elements, k.method, k.ks);
            }
            let failed = v.ks.iter().filter(|k| k.status != "ok").count();
            if failed > 0 {
                return Err(ExpError::Gate(format!("{failed} KS distances at or above the gate")));
            }
        }
        Command::Optimize => {
            let outcome = run_optimize(&config)?;
            for p in output::write_optimize(&dir, &config, &outcome)? {
                println!("wrote {}", p.display());
            }
            let r = &outcome.report;
            println!("{} {} = {:.6e} (Monte Carlo {:.6e} +- {:.1e})", r.method, r.metric, r.objective_value, r.mc_metric, r.mc_stderr);
            if r.phase_independent {
                println!("objective is phase-independent (flat trace)");
            }
            if let Some(b) = r.brute_force_value {
                println!("exhaustive optimum {b:.6e}");
            }
            if !r.gate_passed {
                return Err(ExpError::Gate(format!("{} analytic {} vs Monte Carlo {}", r.metric, r.objective_value, r.mc_metric)));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = std::env::var("IRS_LOG_LEVEL").unwrap_or_else(|_| "warn".into());
    env_logger::Builder::new().parse_filters(&level).init();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
