use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Runs one experiment described by a TOML config file.
#[derive(Parser)]
#[command(name = "spinbath", version)]
struct Args {
    /// Run configuration (schema v1).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV / JSON-lines artifacts.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Progress messages on stderr.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match spinbath_cli::run_file(&args.config, &args.out_dir, args.verbose) {
        Ok(paths) => {
            if args.verbose {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code())
        }
    }
}
