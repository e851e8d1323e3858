use rayon::prelude::*;

use super::{CorruptError, SeededPipelineConfig};
use crate::model::Dataset;
use crate::rng::SeedStream;

/// Missing-triples corruption: removes one uniformly chosen triple from every point annotated with
/// at least two triples and records it in `missing_triples`. Texts are left
/// untouched, so each removed triple becomes a hallucination of its text.
pub fn corrupt_missing_triples(
    ds: &Dataset,
    cfg: &SeededPipelineConfig,
) -> Result<Dataset, CorruptError> {
    let points = ds
        .points()
        .par_iter()
        .enumerate()
        .map(|(index, point)| {
            let mut point = point.clone();
            let n = point.triples().len();
            if n >= 2 {
                let mut stream = SeedStream::for_point(cfg.seed, index as u64);
                let victim = point
                    .triples()
                    .get_index(stream.index(n))
                    .expect("index in range")
                    .clone();
                point.drop_triple(&victim);
            }
            point
        })
        .collect();
    Ok(ds.derive(points, cfg.record(ds))?)
}
