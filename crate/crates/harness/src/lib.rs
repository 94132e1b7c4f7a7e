//! Benchmark and experiment engine for `fpsketch`: hard-instance generators,
//! a parallel trial runner that measures empirical failure probability
//! against the exact oracle, and the lower-bound distinguishing lab.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod generators;
pub mod lb;
pub mod trials;

pub use generators::{HardInstanceSpec, InstanceKind};
pub use lb::{lb_distinguish, LbParams, LbReport};
pub use trials::{run_trials, TrialReport, TrialRow, TrialStats};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Sketch(#[from] fpsketch::SketchError),
    #[error("invalid instance: {0}")]
    Instance(String),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
