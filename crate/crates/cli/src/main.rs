use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use memlab_cli::analyze::{analyze, AnalyzeRequest};
use memlab_cli::config::{ExperimentConfig, Format, Overrides};
use memlab_cli::demo::{demo, DemoSettings, Which};
use memlab_cli::simulate::simulate;
use memlab_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "memlab", version, about = "Sequential QKD device simulations and analyses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trials described by a TOML config and write transcripts and a report.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
        /// Eve's decoder for eve_guessing: copy_decoder or map_decoder.
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Run preset desk-scale demonstrations and print one line per claim.
    Demo {
        #[arg(value_enum)]
        which: Which,
        #[arg(long, default_value_t = 20_240_611)]
        seed: u64,
        /// Monte Carlo trials for protocol_attack.
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value = "memlab_demo")]
        out: PathBuf,
    },
    /// Recompute analyses from stored transcripts.
    Analyze {
        /// Comma-separated analysis ids.
        ids: String,
        /// Transcript files or directories containing them.
        files: Vec<PathBuf>,
        #[arg(long, default_value = "memlab_analysis")]
        out: PathBuf,
        #[arg(long, default_value = "json")]
        format: Format,
        #[arg(long)]
        strategy: Option<String>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            trials,
            out,
            format,
            strategy,
        } => {
            let overrides = Overrides {
                seed,
                trials,
                out,
                format,
                strategy,
            };
            let config = ExperimentConfig::from_file(&config)?.apply(&overrides)?;
            let result = simulate(&config)?;
            println!(
                "{} trials of {} on {}: transcripts in {}, report {}",
                config.trials,
                serde_json::to_value(config.protocol).expect("serializes").as_str().unwrap_or("?"),
                config.device_id,
                result.transcript_dir.display(),
                result.report_path.display()
            );
        }
        Command::Demo {
            which,
            seed,
            trials,
            out,
        } => {
            let lines = demo(which, &DemoSettings { seed, trials }, &out)?;
            for l in &lines {
                println!("{l}");
            }
            if lines.iter().any(|l| !l.pass) {
                return Err(CliError::runtime("a demo claim failed"));
            }
        }
        Command::Analyze {
            ids,
            files,
            out,
            format,
            strategy,
        } => {
            let ids: Vec<String> = ids.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
            let report = analyze(&AnalyzeRequest {
                ids: &ids,
                files: &files,
                out: &out,
                format,
                strategy: strategy.as_deref(),
            })?;
            println!("analysed {} transcripts into {}", report["trials"], out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("memlab: {e}");
            e.exit_code()
        }
    }
}
