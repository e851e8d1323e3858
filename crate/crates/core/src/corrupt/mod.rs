//! Dataset variants with controlled hallucinations, and the benchmark sets
//! used to evaluate detectors and quantifiers.
//!
//! All seeded pipelines are pure functions of `(input dataset, seed)`: every
//! point draws from its own stream derived from the run seed and its index
//! (see [`crate::rng`]), so points can be processed in parallel and the output
//! is bit-identical across runs.

mod augment;
mod detection;
mod fuse;
mod longer;
mod missing;
mod quant;

use thiserror::Error;

use crate::backends::BackendError;
use crate::ingest::IngestError;
use crate::model::{Dataset, ModelError, ProvenanceRecord};

pub use augment::{augment_irrelevant, token_retention, RETENTION_THRESHOLD};
pub use detection::{
    build_detection_set, read_detection_set, read_detection_set_from, write_detection_set,
    write_detection_set_to, DetectionSample, HallucinatedText,
};
pub use fuse::fuse_test_set;
pub use longer::corrupt_longer_texts;
pub use missing::corrupt_missing_triples;
pub use quant::{build_quant_set, DeletionPolicy};

#[derive(Debug, Error)]
pub enum CorruptError {
    #[error("point `{0}` shares a triple with every other point; no donor text available")]
    NoEligibleDonor(String),
    #[error("dataset `{0}` is not a test split")]
    NotATestSplit(String),
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("augmentation of point `{id}` rejected: {reason}")]
    AugmentationRejected { id: String, reason: String },
    #[error("deletion fraction {0} is outside [0, 1)")]
    InvalidFraction(f64),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

/// Seed and step name of one pipeline run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededPipelineConfig {
    pub seed: u64,
    pub step_name: String,
}

impl SeededPipelineConfig {
    pub fn new(step_name: impl Into<String>, seed: u64) -> Self {
        SeededPipelineConfig {
            seed,
            step_name: step_name.into(),
        }
    }

    pub(crate) fn record(&self, source: &Dataset) -> ProvenanceRecord {
        ProvenanceRecord::new(self.step_name.clone(), Some(self.seed), source.name.clone())
    }
}
