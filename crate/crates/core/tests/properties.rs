mod support;

use proptest::prelude::*;

use hallu_core::backends::mock::{OracleNer, OracleSimilarity};
use hallu_core::backends::BackendSuite;
use hallu_core::corrupt::{build_detection_set, build_quant_set, fuse_test_set, DeletionPolicy, DetectionSample, HallucinatedText, SeededPipelineConfig};
use hallu_core::detect::{detect_batch, DetectionInput, Method};
use hallu_core::eval::{score_detection, threshold_sweep, SweepGrid};
use hallu_core::model::{Dataset, RelationSchema, Split, Triple};
use hallu_core::quantify::quantify_dataset;
use hallu_core::synth;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn detection_samples_are_strict_subset_pairs(n in 2usize..80, pool in 2usize..8, max in 1usize..5, seed: u64) {
        let ds = Dataset::new("p", Split::Train, synth::pool_points(n, pool, max, seed)).unwrap();
        for sample in build_detection_set(&ds) {
            prop_assert!(!sample.triples.is_empty());
            for clean in &sample.clean_texts {
                let p = ds.points().iter().find(|p| p.text() == clean).unwrap();
                prop_assert_eq!(p.triples(), &sample.triples);
            }
            for h in &sample.hallucinated_texts {
                let q = ds.points().iter().find(|p| p.id() == h.source_id).unwrap();
                prop_assert!(sample.triples.is_strict_subset(q.triples()));
                prop_assert_eq!(h.extra_triple_count, q.triples().len() - sample.triples.len());
            }
        }
    }

    #[test]
    fn fraction_policy_conserves_and_floors(n in 1usize..40, permille in 0u32..1000, seed: u64) {
        let f = permille as f64 / 1000.0;
        let ds = Dataset::new("q", Split::Train, synth::random_points(n, 1, 8, &["r", "s"], seed)).unwrap();
        let out = build_quant_set(&ds, DeletionPolicy::Fraction(f), &SeededPipelineConfig::new("q", seed)).unwrap();
        for (before, after) in ds.points().iter().zip(out.points()) {
            let size = before.triples().len();
            let k = ((f * size as f64 + 1e-9).floor() as usize).min(size - 1);
            prop_assert_eq!(after.missing_triples().len(), k);
            prop_assert_eq!(&after.expressed_triples(), before.triples());
            prop_assert!(!after.triples().is_empty());
        }
    }

    #[test]
    fn fused_annotations_are_unions(n in 2usize..60, seed: u64) {
        let ds = Dataset::new("f", Split::Test, synth::random_points(n, 1, 4, &["r"], seed)).unwrap();
        let out = fuse_test_set(&ds, &SeededPipelineConfig::new("fuse", seed)).unwrap();
        prop_assert_eq!(out.len(), n / 2);
        for fused in out.points() {
            let (a, b) = fused.id().split_once('+').unwrap();
            let pa = ds.points().iter().find(|p| p.id() == a).unwrap();
            let pb = ds.points().iter().find(|p| p.id() == b).unwrap();
            prop_assert_eq!(fused.triples(), &pa.triples().union(pb.triples()));
        }
    }

    #[test]
    fn ener_never_reports_relations_outside_the_schema(n in 1usize..20, seed: u64) {
        // every point expresses triples over two relations, only one is queried
        let source = Dataset::new("q", Split::Test, synth::random_points(n, 2, 4, &["birthPlace", "hobby"], seed)).unwrap();
        let quant = build_quant_set(&source, DeletionPolicy::Fraction(0.5), &SeededPipelineConfig::new("q", seed)).unwrap();
        let schema = RelationSchema::new(["birthPlace"]).unwrap();
        let report = quantify_dataset(&quant, &schema, &support::oracle_suite(&quant)).unwrap();
        for (entry, point) in report.points.iter().zip(quant.points()) {
            prop_assert!(entry.found_missing.iter().all(|t| t.relation() == "birthPlace"));
            prop_assert!(entry.found_missing.is_disjoint(point.triples()));
            let relevant: Vec<&Triple> = point.missing_triples().iter().filter(|t| t.relation() == "birthPlace").collect();
            prop_assert_eq!(entry.found_missing.len(), relevant.len());
        }
    }

    #[test]
    fn sweep_rows_equal_direct_detection(scores in proptest::collection::vec((0u32..=20, 0u32..=20), 1..12)) {
        let mut ner = OracleNer::new();
        let mut sim = OracleSimilarity::new();
        let mut samples = Vec::new();
        for (i, &(clean_score, hall_score)) in scores.iter().enumerate() {
            let anchor = format!("Anchor{i:03}");
            let clean = format!("Good{i:03} stays.");
            let hallucinated = format!("Bad{i:03} appears.");
            ner.insert(clean.clone(), [format!("Good{i:03}")]);
            ner.insert(hallucinated.clone(), [format!("Bad{i:03}")]);
            sim.insert(&format!("Good{i:03}"), &anchor, clean_score as f64 / 20.0);
            sim.insert(&format!("Bad{i:03}"), &anchor, hall_score as f64 / 20.0);
            samples.push(DetectionSample {
                clean_texts: vec![clean],
                hallucinated_texts: vec![HallucinatedText { extra_triple_count: 1, source_id: format!("h{i}"), text: hallucinated }],
                id: format!("s{i}"),
                triples: [Triple::new(anchor.as_str(), "r", anchor.as_str()).unwrap()].into_iter().collect(),
            });
        }
        let suite = BackendSuite::default().with_extractor(ner).with_similarity(sim);
        let sweep = threshold_sweep(&samples, &suite, SweepGrid::default()).unwrap();
        for pair in sweep.rows.windows(2) {
            prop_assert!(pair[1].metrics.fp <= pair[0].metrics.fp);
            prop_assert!(pair[1].metrics.fn_ >= pair[0].metrics.fn_);
        }
        for row in sweep.rows.iter().step_by(4) {
            let verdicts = detect_batch(DetectionInput::Samples(&samples), Method::Ner { threshold: row.threshold }, &suite).unwrap();
            prop_assert_eq!(score_detection(&verdicts).unwrap(), row.metrics);
        }
        let best = sweep.best();
        prop_assert!(sweep.rows.iter().all(|r| r.metrics.f1 <= best.metrics.f1));
        prop_assert!(sweep.rows.iter().filter(|r| r.threshold < best.threshold).all(|r| r.metrics.f1 < best.metrics.f1));
    }
}
