use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use glyphskel_cli::{cmd_compare, cmd_synth, cmd_thin, parse_methods, ConfigArgs};

/// Skeletonize character images by pairing parallel contour strokes.
#[derive(Debug, Parser)]
#[command(name = "glyphskel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Thin one PGM or PNG image and write every stage artifact.
    Thin {
        input: PathBuf,
        /// Output directory.
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score thinning methods over a directory of images.
    Compare {
        corpus: PathBuf,
        /// Comma-separated list of `proposed`, `zhang_suen`.
        #[arg(long, default_value = "proposed,zhang_suen")]
        methods: String,
        /// Where report.csv and report.md go; defaults to the corpus directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write a synthetic test shape with its ground-truth sidecar.
    Synth {
        shape: String,
        #[arg(required = true, allow_negative_numbers = true)]
        params: Vec<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Thin { input, output, config } => {
            let outcome = cmd_thin(&input, &config.to_config(), &output)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {} files to {}", outcome.written.len(), output.display());
        }
        Command::Compare {
            corpus,
            methods,
            output,
            config,
        } => {
            let methods = parse_methods(&methods)?;
            let out = output.unwrap_or_else(|| corpus.clone());
            let rows = cmd_compare(&corpus, &methods, &config.to_config(), &out)?;
            println!("wrote {} rows to {}", rows.len(), out.join("report.csv").display());
        }
        Command::Synth { shape, params, output } => {
            let sidecar = cmd_synth(&shape, &params, &output)?;
            println!("wrote {} and {}", output.display(), sidecar.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
