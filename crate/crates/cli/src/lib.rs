//! Batch front end for `arcert`: experiment configs in, JSON and CSV out.
//!
//! Every subcommand writes its outputs plus a `metadata.json` holding the
//! only nondeterministic content (the wall-clock time of the run).

pub mod commands;
pub mod config;
pub mod error;

pub use commands::RunOptions;
pub use config::{DirectionSpec, EpsilonPolicy, ExperimentConfig};
pub use error::CliError;

/// Run `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::config("threads", "must be at least 1")),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| CliError::config("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}
