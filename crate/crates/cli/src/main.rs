use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bregman_cli::config::RunConfig;
use bregman_cli::experiment::{cmd_run, cmd_summarize, cmd_sweep, RunError, Summarized};
use bregman_cli::output::{self, COMPARISON_FILE, SUMMARY_FILE};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bregman", version, about = "Over-relaxed mirror descent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use seed indices 0..N instead of the configured list.
    #[arg(long)]
    seeds: Option<u64>,
    /// Suppress warnings and the printed summary.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of one configuration.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run the configuration for each λ of a grid and compare.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated λ values, e.g. "1.0,1.3,1.6,1.8".
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Skip steps-to-target, which needs λ = 1.0 in the grid.
        #[arg(long)]
        no_target: bool,
    },
    /// Recompute summaries from the trace files of a run or sweep directory.
    Summarize {
        dir: PathBuf,
        /// Loss threshold for steps-to-target of a plain run directory.
        #[arg(long)]
        target_loss: Option<f64>,
        /// Write summary files to this directory instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip steps-to-target for a sweep directory.
        #[arg(long)]
        no_target: bool,
    },
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), RunError> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(n) = common.seeds {
        if n == 0 {
            return Err(RunError::Usage("--seeds must be positive".into()));
        }
        config.seeds = (0..n).collect();
    }
    let out = common
        .out
        .clone()
        .or_else(|| config.out.clone())
        .ok_or_else(|| RunError::Usage("no output directory: pass --out or set `out`".into()))?;
    if config.experimental_super() && !common.quiet {
        eprintln!(
            "warning: super-relaxation with {:?} on {} is experimental",
            config.method.kind,
            config.problem.name()
        );
    }
    Ok((config, out))
}

fn write_or_print(out: Option<&Path>, name: &str, csv: &str) -> Result<(), RunError> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| output::OutputError::Io { path: dir.into(), source })?;
            output::write_file(&dir.join(name), csv)?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Run { common } => {
            let (config, out) = load(&common)?;
            let report = cmd_run(&config, &out)?;
            if !common.quiet {
                eprintln!("wrote {} traces to {}", report.summary.per_seed.len(), report.out.display());
                print!("{}", output::summary_csv(&report.summary, config.target_loss.is_some()));
            }
        }
        Command::Sweep { common, grid, no_target } => {
            let (config, out) = load(&common)?;
            let report = cmd_sweep(&config, &grid, &out, !no_target)?;
            if !common.quiet {
                eprintln!("wrote {} sweep cells to {}", report.rows.len(), out.display());
                print!("{}", output::comparison_csv(&report.rows, report.has_target));
            }
        }
        Command::Summarize { dir, target_loss, out, no_target } => match cmd_summarize(&dir, target_loss, !no_target)? {
            Summarized::Run { csv } => write_or_print(out.as_deref(), SUMMARY_FILE, &csv)?,
            Summarized::Sweep { csv, summaries } => {
                if let Some(root) = out.as_deref() {
                    for (lambda, s) in &summaries {
                        write_or_print(Some(&root.join(output::lambda_dir_name(*lambda))), SUMMARY_FILE, s)?;
                    }
                }
                write_or_print(out.as_deref(), COMPARISON_FILE, &csv)?;
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
