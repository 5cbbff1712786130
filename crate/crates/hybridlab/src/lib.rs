//! Command line, file formats and thread-pool setup around `hybridlab-core`.

pub mod cli;
pub mod commands;
pub mod formats;

use anyhow::{Context, Result};

pub use commands::run;

/// Bad flag combinations that clap cannot express. The binary exits with 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub const THREADS_ENV: &str = "HYBRIDLAB_THREADS";

/// Caps the global rayon pool at `HYBRIDLAB_THREADS` when set.
pub fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| UsageError(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("thread pool already initialised")
}
