use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use oamvortex::config::Overrides;
use oamvortex::{execute, load, write_artifacts, AppError, Format};

#[derive(Parser)]
#[command(name = "oamvortex", version, about = "Write OAM qubits onto a spinor condensate and read them back")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Directory for the output files (overrides output.dir).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Relative ODE tolerance (overrides numerics.rtol).
        #[arg(long)]
        tolerance: Option<f64>,
        /// Number of output samples (overrides numerics.samples).
        #[arg(long)]
        samples: Option<usize>,
        /// Write only this format.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Check a config and report problems without running it.
    Validate { config: PathBuf },
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run { config, output_dir, tolerance, samples, format } => {
            let overrides = Overrides {
                output_dir,
                tolerance,
                samples,
                format: format.map(|f| match f {
                    FormatArg::Csv => Format::Csv,
                    FormatArg::Json => Format::Json,
                }),
            };
            let cfg = load(&config, &overrides)?;
            for w in &cfg.warnings {
                eprintln!("warning: {w}");
            }
            let out = execute(&cfg)?;
            for path in write_artifacts(&cfg.output.dir, &out.artifacts)? {
                eprintln!("wrote {}", path.display());
            }
            println!("{}", serde_json::to_string(&out.summary).expect("json serializes"));
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load(&config, &Overrides::default())?;
            for w in &cfg.warnings {
                println!("warning: {w}");
            }
            println!("ok: {} (config_hash={})", cfg.name, cfg.hash);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
