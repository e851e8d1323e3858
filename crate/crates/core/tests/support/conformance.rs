//! The workload replayed by the protocol conformance check, run identically
//! against the in-process mocks and against a remote client.

use std::time::Duration;

use hallu_core::backends::remote::RemoteConfig;
use hallu_core::backends::{BackendSuite, Capability};
use hallu_core::corrupt::{augment_irrelevant, build_detection_set, build_quant_set, DeletionPolicy, DetectionSample, SeededPipelineConfig};
use hallu_core::detect::{detect_batch, DetectionInput, Method, VerdictRecord};
use hallu_core::model::{DataPoint, Dataset, RelationSchema, Split, Triple, TripleSet};
use hallu_core::quantify::{quantify_dataset, QuantReport};
use hallu_core::synth;

pub const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/protocol_exchanges.json");
pub const RELATIONS: [&str; 2] = ["birthPlace", "employer"];

const CLEAN: &str = "Ted lives in the city of New York.";
const HALLUCINATED: &str = "Ted lives in the city of New York, which has a population of 8.4 million inhabitants.";

pub struct Workload {
    pub corpus: Dataset,
    pub samples: Vec<DetectionSample>,
    pub quant: Dataset,
}

pub fn workload() -> Workload {
    let t = |h: &str, r: &str, tl: &str| Triple::new(h, r, tl).unwrap();
    let ted: TripleSet = [t("Ted", "livesIn", "New_York")].into_iter().collect();
    let mut bigger = ted.clone();
    bigger.insert(t("New_York", "population", "8.4 million inhabitants"));
    let mut points = vec![
        DataPoint::new("ted", CLEAN, ted).unwrap(),
        DataPoint::new("ted-pop", HALLUCINATED, bigger).unwrap(),
    ];
    points.extend(synth::chain_points(4, &RELATIONS, 5));
    let corpus = Dataset::new("conformance", Split::Train, points).unwrap();
    let samples = build_detection_set(&corpus);

    let quant_source = Dataset::new("quant", Split::Test, synth::random_points(3, 2, 3, &RELATIONS, 8)).unwrap();
    let quant = build_quant_set(&quant_source, DeletionPolicy::OnePerPoint, &SeededPipelineConfig::new("quant", 2)).unwrap();
    Workload { corpus, samples, quant }
}

/// Mock tables cover the corpus and the quantification set.
pub fn mock_suite(w: &Workload) -> BackendSuite {
    let mut all: Vec<DataPoint> = w.corpus.points().to_vec();
    all.extend(w.quant.points().iter().cloned());
    super::oracle_suite(&Dataset::new("tables", Split::Train, all).unwrap())
}

/// Small chunks and two requests in flight, so batches are split and
/// reassembled.
pub fn remote_suite(url: &str) -> BackendSuite {
    let mut config = RemoteConfig::new(url);
    config.chunk_size = 3;
    config.max_in_flight = 2;
    config.max_attempts = 1;
    config.backoff_base = Duration::from_millis(1);
    BackendSuite::remote(config)
}

#[derive(Debug, PartialEq)]
pub struct Outputs {
    pub ner: Vec<VerdictRecord>,
    pub nli: Vec<VerdictRecord>,
    pub quant: QuantReport,
    pub augmented: Dataset,
}

pub fn run(w: &Workload, suite: &BackendSuite) -> Result<Outputs, String> {
    suite.check_health(&Capability::ALL).map_err(|e| e.to_string())?;
    let input = DetectionInput::Samples(&w.samples);
    let ner = detect_batch(input, Method::Ner { threshold: 0.5 }, suite).map_err(|e| e.to_string())?;
    let nli = detect_batch(input, Method::Nli, suite).map_err(|e| e.to_string())?;
    let schema = RelationSchema::new(RELATIONS).unwrap();
    let quant = quantify_dataset(&w.quant, &schema, suite).map_err(|e| e.to_string())?;
    let augmented = augment_irrelevant(&w.corpus, "numeric-facts", &*suite.augmenter, &SeededPipelineConfig::new("augment", 7))
        .map_err(|e| e.to_string())?;
    Ok(Outputs { ner, nli, quant, augmented })
}
