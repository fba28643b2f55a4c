use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nhpinn::{collect_report, run_baseline, run_experiment, run_reference, run_transfer, ExperimentConfig, Result, RunEnv};

/// Neural homogenization PINN experiments.
#[derive(Parser)]
#[command(name = "nhpinn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` of the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed; overrides `seed` of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Print training progress.
    #[arg(short, long)]
    verbose: bool,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, RunEnv)> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        let mut env = RunEnv::new(&cfg.output_dir);
        env.verbose = self.verbose;
        Ok((cfg, env))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Cell solves, homogenized coefficients, homogenized solve and the error suite.
    Run(Common),
    /// Classical PINN on the multiscale problem.
    Baseline(Common),
    /// Classical PINN on the multiscale problem, initialised from a checkpoint.
    Transfer {
        #[command(flatten)]
        common: Common,
        /// Network checkpoint, e.g. `checkpoints/homogenized.ckpt` of a run.
        #[arg(long)]
        init: PathBuf,
    },
    /// Finite-difference references only.
    Reference(Common),
    /// Merge baseline and transfer results into the report of a run directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn direct_line(name: &str, s: &nhpinn::report::DirectSummary, out: &Path) {
    println!(
        "{name}: windowed error {:.6} (initial {:.6}, final {:.6}, max {:.6}) -> {}",
        s.windowed,
        s.initial,
        s.final_error,
        s.max,
        out.display()
    );
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(c) => {
            let (cfg, env) = c.load()?;
            let report = run_experiment(&cfg, &env)?;
            print!("{}", report.summary());
        }
        Command::Baseline(c) => {
            let (cfg, env) = c.load()?;
            let run = run_baseline(&cfg, &env)?;
            direct_line("baseline", &run.record.summary, &env.out);
        }
        Command::Transfer { common, init } => {
            let (cfg, env) = common.load()?;
            let run = run_transfer(&cfg, &env, &init)?;
            direct_line("transfer", &run.record.summary, &env.out);
        }
        Command::Reference(c) => {
            let (cfg, env) = c.load()?;
            let (_, e4) = run_reference(&cfg, &env)?;
            println!("e4 {e4:.6} -> {}", env.out.display());
        }
        Command::Report { dir } => {
            print!("{}", collect_report(&dir)?.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
