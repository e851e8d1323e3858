use std::fmt;

use rayon::prelude::*;

use super::{corrupt_missing_triples, CorruptError, SeededPipelineConfig};
use crate::model::{Dataset, Triple};
use crate::rng::SeedStream;

/// How many triples [`build_quant_set`] removes from each annotation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DeletionPolicy {
    /// One triple from every point with at least two.
    #[default]
    OnePerPoint,
    /// `⌊f·|T|⌋` triples per point, always leaving at least one.
    Fraction(f64),
}

impl fmt::Display for DeletionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeletionPolicy::OnePerPoint => f.write_str("one-per-point"),
            DeletionPolicy::Fraction(x) => write!(f, "fraction {x}"),
        }
    }
}

/// Quantification benchmark: deletes triples from a hallucination-free
/// dataset and keeps them in `missing_triples`, so each point knows exactly
/// which expressed triples its annotation lacks.
pub fn build_quant_set(
    ds: &Dataset,
    policy: DeletionPolicy,
    cfg: &SeededPipelineConfig,
) -> Result<Dataset, CorruptError> {
    let fraction = match policy {
        DeletionPolicy::OnePerPoint => return corrupt_missing_triples(ds, cfg),
        DeletionPolicy::Fraction(f) if (0.0..1.0).contains(&f) => f,
        DeletionPolicy::Fraction(f) => return Err(CorruptError::InvalidFraction(f)),
    };

    let points = ds
        .points()
        .par_iter()
        .enumerate()
        .map(|(index, point)| {
            let mut point = point.clone();
            let n = point.triples().len();
            // tolerance keeps e.g. 0.29 * 100 from flooring to 28
            let k = ((fraction * n as f64 + 1e-9).floor() as usize).min(n.saturating_sub(1));
            if k > 0 {
                let mut stream = SeedStream::for_point(cfg.seed, index as u64);
                let victims: Vec<Triple> = stream
                    .choose_distinct(n, k)
                    .into_iter()
                    .map(|i| point.triples().get_index(i).expect("index in range").clone())
                    .collect();
                for victim in &victims {
                    point.drop_triple(victim);
                }
            }
            point
        })
        .collect();
    let record = cfg.record(ds).with_detail("policy", policy.to_string());
    Ok(ds.derive(points, record)?)
}
