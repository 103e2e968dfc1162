use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skinlab::runner::{self, RunOptions};
use skinlab::RunError;

#[derive(Parser)]
#[command(name = "skinlab", version, about = "Dissipative lattice experiments as datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its datasets and manifest.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed for trajectory ensembles (overrides `master_seed`).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on this.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => runner::load_config(&config).and_then(|c| {
            let (dir, m) = runner::run_experiment(c, &RunOptions { out, seed, threads })?;
            println!(
                "{}: {} files in {} ({:.2} s), config {}",
                m.experiment,
                m.files.len(),
                dir.display(),
                m.wall_time_seconds,
                &m.config_sha256[..12]
            );
            Ok(())
        }),
        Command::Validate { config } => runner::load_config(&config).and_then(|c| {
            let v = c.validate()?;
            println!("ok: {} ({})", v.config.experiment.name(), v.hash);
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
