//! Linear sketches for the frequency moment `F_p = Σ |x_i|^p`, `p > 2`, of
//! turnstile streams, with failure probability `delta` paid for additively in
//! the sketch size rather than by median amplification.
//!
//! The sketch is a subsampled hierarchy of heavy-hitter and roots-of-unity
//! tables plus a shelf structure for large items, all generic over the cell
//! scalar. Use [`FpSketch64`] unless memory is tight.

// Parameter checks are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod avg_est;
pub mod codec;
pub mod config;
pub mod error;
pub mod f2;
pub mod ghss;
pub mod hash;
pub mod heavy_hitter;
pub mod measure;
pub mod oracle;
pub mod scalar;
pub mod shelf;
pub mod sketch;
pub mod stream;

pub use avg_est::{AeStructure, AvgEstimate, BlockedIndex, CollisionReport};
pub use config::{ConfigSpec, FpConfig, Overrides, ShelfDims, ShelfMode};
pub use error::{Result, SketchError};
pub use f2::F2Sketch;
pub use ghss::{Assignment, AssignmentKind, Discovery, DropReason, Recovered, RecoveryStructure, Thresholds};
pub use hash::{HashMode, HashParams, KWiseHash, RootsFamily, SubsampleHashes};
pub use heavy_hitter::CsStructure;
pub use measure::{measurement_report, MeasurementReport};
pub use scalar::Scalar;
pub use shelf::ShelfThresholds;
pub use sketch::{FpEstimate, FpSketch};

pub type FpSketch64 = FpSketch<f64>;
pub type FpSketch32 = FpSketch<f32>;
pub type CsStructure64 = CsStructure<f64>;
pub type AeStructure64 = AeStructure<f64>;
