use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use mrad_cli::config::{Scenario, ScenarioConfig, ScenarioKind};
use mrad_cli::runner;

#[derive(Parser)]
#[command(name = "mrad", about = "Measurement-induced radiation scenarios", version)]
struct Cli {
    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Relative quadrature tolerance override.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and emit its tables.
    Run { config: PathBuf },
    /// Rerun a scenario over a list of values of one scalar parameter.
    Sweep {
        config: PathBuf,
        /// Dotted path of the parameter, e.g. `measurement.tau`.
        #[arg(long)]
        param: String,
        /// Comma-separated list of values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
    /// Run the randomized oracle verification suites.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn main() -> Result<()> {
    if let Ok(threads) = std::env::var("MRAD_THREADS") {
        let n: usize = threads.parse().context("MRAD_THREADS must be an integer")?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let base = config.parent().unwrap_or(std::path::Path::new(".")).to_path_buf();
            let mut cfg = ScenarioConfig::from_path(&config)?;
            if let Some(tol) = cli.tolerance {
                cfg.quadrature.rel_tol = tol;
            }
            let summary = runner::run(&cfg, &base, cli.out.as_deref())?;
            print!("{}", summary.render());
            if !summary.all_converged {
                eprintln!("warning: quadrature convergence flag raised");
            }
            if let Some((pass, total)) = summary.checks {
                if pass != total {
                    anyhow::bail!("{} of {} checks failed", total - pass, total);
                }
            }
        }
        Command::Sweep {
            config,
            param,
            values,
        } => {
            let base = config.parent().unwrap_or(std::path::Path::new(".")).to_path_buf();
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            match runner::sweep(&text, &base, &param, &values, cli.out.as_deref())? {
                Some(path) => println!("sweep written to {}", path.display()),
                None => println!("no sweep values; nothing written"),
            }
        }
        Command::Verify { seed } => {
            let cfg = ScenarioConfig {
                scenario: Scenario {
                    kind: ScenarioKind::OracleVerify,
                    seed,
                },
                state: None,
                measurement: None,
                form_factors: Default::default(),
                photon_grid: None,
                probe: None,
                quadrature: Default::default(),
                output: mrad_cli::config::OutputSpec {
                    dir: "out".into(),
                    prefix: "verify".into(),
                },
            };
            let base = std::env::current_dir()?;
            let report = mrad_core::verify::run_all(seed);
            for c in &report.checks {
                println!("{c}");
            }
            let summary = runner::run(&cfg, &base, cli.out.as_deref())?;
            if let Some((pass, total)) = summary.checks {
                println!("{pass}/{total} checks passed");
                if pass != total {
                    anyhow::bail!("verification failed");
                }
            }
        }
    }
    Ok(())
}
