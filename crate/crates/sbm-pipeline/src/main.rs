use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use sbm_pipeline::config::RunConfig;
use sbm_pipeline::pipeline;

#[derive(Parser)]
#[command(
    name = "sbm",
    about = "Embedded shifted-boundary solver with a POD-Galerkin reduced order model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the evaluated mode counts, e.g. --modes 2,5,10.
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<usize>>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample training parameters, run the full order sweep, build the basis.
    Offline(Common),
    /// Evaluate the reduced model on fresh test parameters.
    Online(Common),
    /// Manufactured-solution mesh refinement study.
    Convergence(Common),
    /// Write result tables and VTK field exports.
    Report {
        #[command(flatten)]
        common: Common,
        /// Also dump the assembled operator in Matrix Market format.
        #[arg(long)]
        dump_matrix: bool,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(modes) = &common.modes {
        config.mode_counts = modes.clone();
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    config.validate()?;
    Ok(config)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Offline(common) => {
            let config = load(&common)?;
            let result = pipeline::offline(&config)?;
            let total: f64 = result.solve_seconds.iter().sum();
            let mean = total / result.solve_seconds.len().max(1) as f64;
            println!(
                "offline: {} snapshots, basis rank {}, mean solve {:.4}s, basis build {:.2}s",
                result.parameters.len(),
                result.basis.n_modes(),
                mean,
                result.pod_seconds,
            );
            println!("artifacts in {}", config.output_dir.display());
        }
        Command::Online(common) => {
            let config = load(&common)?;
            let result = pipeline::online(&config)?;
            println!(
                "online: {} test samples over {} mode counts",
                result.test_parameters.len(),
                result.rows.len()
            );
            println!("modes  mean_rom_error  mean_proj_error  online_s   speedup");
            for row in &result.rows {
                println!(
                    "{:>5}  {:>14.6e}  {:>15.6e}  {:>9.6}  {:>7.2}",
                    row.modes,
                    row.mean_rom_error,
                    row.mean_projection_error,
                    row.online_seconds,
                    row.speedup
                );
            }
        }
        Command::Convergence(common) => {
            let config = load(&common)?;
            let rows = pipeline::convergence(&config)?;
            println!("h          l2_error       rate");
            for row in &rows {
                match row.rate {
                    Some(rate) => println!("{:<9.4} {:>12.6e}  {rate:.3}", row.h, row.l2_error),
                    None => println!("{:<9.4} {:>12.6e}  -", row.h, row.l2_error),
                }
            }
        }
        Command::Report {
            common,
            dump_matrix,
        } => {
            let config = load(&common)?;
            pipeline::report(&config, dump_matrix)?;
            println!("report written to {}", config.output_dir.display());
        }
    }
    Ok(())
}
