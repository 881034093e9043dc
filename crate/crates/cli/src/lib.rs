//! Config-driven runner for the `spinbath` library.

pub mod config;
pub mod output;
pub mod run;

use std::path::Path;

pub use config::{RunConfig, RunMode};
pub use run::{execute, Artifact};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("numerical failure in {module}: {source}")]
    Numerical {
        module: &'static str,
        #[source]
        source: spinbath::Error,
    },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit status: 2 for anything wrong with the input, 3 for failures during the run.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } => 2,
            CliError::Numerical { .. } | CliError::Io { .. } => 3,
        }
    }
}

pub fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Schema {
        path: String::new(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    RunConfig::parse(&text)
}

/// Parses, runs and writes every artifact into `out_dir`. Returns the written paths.
pub fn run_file(config: &Path, out_dir: &Path, verbose: bool) -> Result<Vec<std::path::PathBuf>, CliError> {
    let cfg = load(config)?;
    let artifacts = execute(&cfg, verbose)?;
    let io = |p: &Path| {
        let path = p.display().to_string();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let mut written = Vec::new();
    for a in artifacts {
        let p = out_dir.join(&a.name);
        std::fs::write(&p, a.contents).map_err(io(&p))?;
        written.push(p);
    }
    Ok(written)
}
