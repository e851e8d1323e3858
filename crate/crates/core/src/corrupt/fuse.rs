use super::{CorruptError, SeededPipelineConfig};
use crate::model::{DataPoint, Dataset, Split};
use crate::rng::SeedStream;

/// Pairs the points of a test split at random and merges each pair into one
/// point: texts joined by a space, annotations united. With an odd number of
/// points the one left over after shuffling is dropped and noted in the
/// provenance record under `"dropped"`.
///
/// Every fused annotation is the union of two complete annotations, so no
/// hallucination is introduced.
pub fn fuse_test_set(ds: &Dataset, cfg: &SeededPipelineConfig) -> Result<Dataset, CorruptError> {
    if ds.split != Split::Test {
        return Err(CorruptError::NotATestSplit(ds.name.clone()));
    }
    if ds.len() < 2 {
        return Err(CorruptError::TooFewPoints {
            needed: 2,
            found: ds.len(),
        });
    }

    let mut order: Vec<usize> = (0..ds.len()).collect();
    SeedStream::for_dataset(cfg.seed).shuffle(&mut order);

    let mut record = cfg.record(ds);
    let mut pairs = order.chunks_exact(2);
    let mut points = Vec::with_capacity(ds.len() / 2);
    for pair in pairs.by_ref() {
        let (a, b) = (&ds.points()[pair[0]], &ds.points()[pair[1]]);
        let triples = a.triples().union(b.triples());
        let missing = a
            .missing_triples()
            .union(b.missing_triples())
            .iter()
            .filter(|t| !triples.contains(t))
            .cloned()
            .collect();
        points.push(DataPoint::with_missing(
            format!("{}+{}", a.id(), b.id()),
            format!("{} {}", a.text(), b.text()),
            triples,
            missing,
        )?);
    }
    if let [left] = pairs.remainder() {
        let dropped = ds.points()[*left].id();
        log::warn!("{}: odd point count, dropping `{dropped}` from the fused set", ds.name);
        record.details.insert("dropped".into(), dropped.to_owned());
    }
    Ok(ds.derive(points, record)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Triple, TripleSet};

    fn point(id: &str, heads: &[&str]) -> DataPoint {
        let set: TripleSet = heads.iter().map(|h| Triple::new(*h, "r", "x").unwrap()).collect();
        DataPoint::new(id, format!("Text {id}."), set).unwrap()
    }

    fn test_set(points: Vec<DataPoint>) -> Dataset {
        Dataset::new("t", Split::Test, points).unwrap()
    }

    #[test]
    fn four_points_make_two() {
        let ds = test_set(vec![
            point("a", &["A", "B"]),
            point("b", &["B"]),
            point("c", &["C"]),
            point("d", &["D", "E"]),
        ]);
        let out = fuse_test_set(&ds, &SeededPipelineConfig::new("fuse", 4)).unwrap();
        assert_eq!(out.len(), 2);
        for fused in out.points() {
            let (x, y) = fused.id().split_once('+').unwrap();
            let px = ds.points().iter().find(|p| p.id() == x).unwrap();
            let py = ds.points().iter().find(|p| p.id() == y).unwrap();
            assert!(fused.triples().len() <= px.triples().len() + py.triples().len());
            assert_eq!(fused.triples(), &px.triples().union(py.triples()));
            assert_eq!(fused.text(), format!("{} {}", px.text(), py.text()));
        }
        assert!(!out.provenance()[0].details.contains_key("dropped"));
    }

    #[test]
    fn odd_point_is_dropped_and_recorded() {
        let ds = test_set((0..5).map(|i| point(&format!("p{i}"), &["A"])).collect());
        let out = fuse_test_set(&ds, &SeededPipelineConfig::new("fuse", 8)).unwrap();
        assert_eq!(out.len(), 2);
        let dropped = &out.provenance()[0].details["dropped"];
        assert!(out.points().iter().all(|p| !p.id().split('+').any(|id| id == dropped)));
    }

    #[test]
    fn identical_annotations_fuse_idempotently() {
        let ds = test_set(vec![point("a", &["A", "B"]), point("b", &["B", "A"])]);
        let out = fuse_test_set(&ds, &SeededPipelineConfig::new("fuse", 1)).unwrap();
        assert_eq!(out.points()[0].triples().len(), 2);
    }

    #[test]
    fn rejects_train_split_and_tiny_sets() {
        let train = Dataset::new("tr", Split::Train, vec![point("a", &["A"]), point("b", &["B"])]).unwrap();
        assert!(matches!(
            fuse_test_set(&train, &SeededPipelineConfig::new("fuse", 1)),
            Err(CorruptError::NotATestSplit(_))
        ));
        assert!(matches!(
            fuse_test_set(&test_set(vec![point("a", &["A"])]), &SeededPipelineConfig::new("fuse", 1)),
            Err(CorruptError::TooFewPoints { .. })
        ));
    }
}
