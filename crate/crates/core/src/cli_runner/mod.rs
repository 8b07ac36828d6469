//! Config-driven experiment runner behind the `multiauto` binary.

pub mod build;
pub mod config;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind, RawConfig, Section, Values};
pub use run::{run_experiment, run_file, sha256_hex, Artifact, RunOutcome, MANIFEST, RESULT};

/// Configures the global thread pool from `MULTIAUTO_THREADS`, if set.
pub fn init_threads() -> crate::Result<()> {
    if let Ok(v) = std::env::var("MULTIAUTO_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| crate::Error::Config(format!("MULTIAUTO_THREADS={v:?} is not a thread count")))?;
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
