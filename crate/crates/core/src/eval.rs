//! Scoring detectors and quantifiers.
//!
//! **The positive class is `clean`.** A hallucination-free text accepted as
//! clean is a true positive; a hallucinated text accepted as clean is a false
//! positive. Precision therefore measures how trustworthy an acceptance is,
//! recall how many good texts survive the filter.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, BackendSuite, SimilarityScorer};
use crate::corrupt::{DetectionSample, HallucinatedText};
use crate::detect::{detection_items, ner_scores, DetectError, DetectionInput, DetectionLabel, TextRole, VerdictLine, VerdictRecord};
use crate::model::{normalize_surface, Dataset, Triple, TripleSet};
use crate::quantify::QuantReport;
use crate::rng::SeedStream;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("nothing to score")]
    EmptyInput,
    #[error("verdict `{0}` has no gold role")]
    Unlabeled(String),
    #[error("asked for {requested} samples, only {available} have both clean and hallucinated texts")]
    NotEnoughSamples { requested: usize, available: usize },
    #[error("invalid grid: lo {lo}, hi {hi}, step {step}")]
    InvalidGrid { lo: f64, hi: f64, step: f64 },
    #[error("report and gold disagree on ids: {0}")]
    IdMismatch(String),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Confusion counts with clean as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub f1: f64,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub precision: f64,
    pub recall: f64,
    pub tn: usize,
    pub tp: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl DetectionMetrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        DetectionMetrics {
            f1: harmonic(precision, recall),
            fn_,
            fp,
            precision,
            recall,
            tn,
            tp,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn confusion<'a>(pairs: impl IntoIterator<Item = (TextRole, DetectionLabel, &'a str)>) -> Result<DetectionMetrics, EvalError> {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (role, label, id) in pairs {
        match (role, label) {
            (TextRole::Clean, DetectionLabel::Clean) => tp += 1,
            (TextRole::Hallucinated, DetectionLabel::Clean) => fp += 1,
            (TextRole::Hallucinated, DetectionLabel::Hallucinated) => tn += 1,
            (TextRole::Clean, DetectionLabel::Hallucinated) => fn_ += 1,
            (TextRole::Unlabeled, _) => return Err(EvalError::Unlabeled(id.to_owned())),
        }
    }
    let metrics = DetectionMetrics::from_counts(tp, fp, tn, fn_);
    if metrics.total() == 0 {
        return Err(EvalError::EmptyInput);
    }
    Ok(metrics)
}

pub fn score_detection(verdicts: &[VerdictRecord]) -> Result<DetectionMetrics, EvalError> {
    confusion(verdicts.iter().map(|v| (v.role, v.verdict.label, v.id.as_str())))
}

/// Scores verdicts read back from a verdict file.
pub fn score_verdict_lines(lines: &[VerdictLine]) -> Result<DetectionMetrics, EvalError> {
    confusion(lines.iter().map(|v| (v.role, v.label, v.id.as_str())))
}

/// Draws `n` distinct samples and, from each, one clean and one hallucinated
/// text. Each returned sample holds exactly those two texts, so detecting over
/// the result yields `n` clean and `n` hallucinated instances.
///
/// Only samples with at least one hallucinated text are eligible.
pub fn sample_balanced(d: &[DetectionSample], n: usize, seed: u64) -> Result<Vec<DetectionSample>, EvalError> {
    let eligible: Vec<&DetectionSample> = d
        .iter()
        .filter(|s| !s.clean_texts.is_empty() && !s.hallucinated_texts.is_empty())
        .collect();
    if n > eligible.len() {
        return Err(EvalError::NotEnoughSamples {
            requested: n,
            available: eligible.len(),
        });
    }
    let chosen = SeedStream::for_dataset(seed).choose_distinct(eligible.len(), n);
    Ok(chosen
        .into_iter()
        .map(|index| {
            let sample = eligible[index];
            let mut stream = SeedStream::for_point(seed, index as u64);
            let clean = &sample.clean_texts[stream.below(sample.clean_texts.len() as u64) as usize];
            let hallucinated: &HallucinatedText =
                &sample.hallucinated_texts[stream.below(sample.hallucinated_texts.len() as u64) as usize];
            DetectionSample {
                clean_texts: vec![clean.clone()],
                hallucinated_texts: vec![hallucinated.clone()],
                id: sample.id.clone(),
                triples: sample.triples.clone(),
            }
        })
        .collect())
}

/// Inclusive threshold grid `lo, lo+step, …, hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub hi: f64,
    pub lo: f64,
    pub step: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            hi: 0.95,
            lo: 0.05,
            step: 0.05,
        }
    }
}

impl SweepGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self, EvalError> {
        let grid = SweepGrid { hi, lo, step };
        let valid = lo.is_finite()
            && hi.is_finite()
            && step.is_finite()
            && step > 0.0
            && lo <= hi
            && lo >= 0.0
            && hi <= 1.0;
        if valid {
            Ok(grid)
        } else {
            Err(EvalError::InvalidGrid { lo, hi, step })
        }
    }

    /// Grid values rounded to 1e-9 so that e.g. the seventh step of 0.05 is
    /// exactly `0.4` rather than `0.39999999999999997`.
    pub fn thresholds(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| ((self.lo + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub metrics: DetectionMetrics,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Threshold with the highest F1; the lowest one on ties.
    pub best_threshold: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn best(&self) -> &SweepRow {
        self.rows
            .iter()
            .find(|r| r.threshold == self.best_threshold)
            .expect("best threshold is a row")
    }
}

/// NER detection at every grid threshold. Entity extraction and similarity
/// scoring run once per text; each threshold only re-reads the scores.
pub fn threshold_sweep(samples: &[DetectionSample], suite: &BackendSuite, grid: SweepGrid) -> Result<SweepResult, EvalError> {
    let grid = SweepGrid::new(grid.lo, grid.hi, grid.step)?;
    let items = detection_items(DetectionInput::Samples(samples))?;
    if items.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let scored = items
        .par_iter()
        .map(|item| ner_scores(&item.point, suite).map(|s| (item, s)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    for threshold in grid.thresholds() {
        let metrics = confusion(
            scored
                .iter()
                .map(|(item, scores)| (item.role, scores.verdict(threshold).label, item.id.as_str())),
        )?;
        rows.push(SweepRow { metrics, threshold });
    }
    let mut best = &rows[0];
    for row in &rows[1..] {
        if row.metrics.f1 > best.metrics.f1 {
            best = row;
        }
    }
    Ok(SweepResult {
        best_threshold: best.threshold,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantMetrics {
    pub f1: f64,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
}

/// How a found triple is matched against a recorded missing triple.
#[derive(Clone, Copy)]
pub enum TripleMatch<'a> {
    /// Equal after surface normalization.
    Exact,
    /// Same relation, and head and tail each scoring at least `threshold`.
    /// Matching is one-to-one, greedy in report order.
    Similar { scorer: &'a dyn SimilarityScorer, threshold: f64 },
}

fn count_matches(found: &TripleSet, gold: &TripleSet, mode: TripleMatch<'_>) -> Result<usize, EvalError> {
    match mode {
        TripleMatch::Exact => {
            let gold: HashSet<Triple> = gold.iter().map(Triple::normalized).collect();
            let found: HashSet<Triple> = found.iter().map(Triple::normalized).collect();
            Ok(found.intersection(&gold).count())
        }
        TripleMatch::Similar { scorer, threshold } => {
            let mut used = vec![false; gold.len()];
            let mut matched = 0;
            for candidate in found {
                let relation = normalize_surface(candidate.relation());
                let open: Vec<usize> = (0..gold.len())
                    .filter(|&g| !used[g])
                    .filter(|&g| normalize_surface(gold.get_index(g).unwrap().relation()) == relation)
                    .collect();
                if open.is_empty() {
                    continue;
                }
                let (head, tail) = (normalize_surface(candidate.head()), normalize_surface(candidate.tail()));
                let surfaces: Vec<(String, String)> = open
                    .iter()
                    .map(|&g| {
                        let t = gold.get_index(g).unwrap();
                        (normalize_surface(t.head()), normalize_surface(t.tail()))
                    })
                    .collect();
                let pairs: Vec<(&str, &str)> = surfaces
                    .iter()
                    .flat_map(|(h, t)| [(head.as_str(), h.as_str()), (tail.as_str(), t.as_str())])
                    .collect();
                let scores = scorer.score_similarity(&pairs)?;
                if let Some(k) = (0..open.len()).find(|&k| scores[2 * k] >= threshold && scores[2 * k + 1] >= threshold) {
                    used[open[k]] = true;
                    matched += 1;
                }
            }
            Ok(matched)
        }
    }
}

/// Micro-averaged triple-level scores of a quantification report against the
/// recorded missing triples of the gold set.
pub fn score_quantifier(report: &QuantReport, gold: &Dataset, mode: TripleMatch<'_>) -> Result<QuantMetrics, EvalError> {
    if report.points.len() != gold.len() {
        return Err(EvalError::IdMismatch(format!(
            "report has {} points, gold {}",
            report.points.len(),
            gold.len()
        )));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (found, truth) in report.points.iter().zip(gold.points()) {
        if found.id != truth.id() {
            return Err(EvalError::IdMismatch(format!("`{}` vs `{}`", found.id, truth.id())));
        }
        let hits = count_matches(&found.found_missing, truth.missing_triples(), mode)?;
        tp += hits;
        fp += found.found_missing.len() - hits;
        fn_ += truth.missing_triples().len() - hits;
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    Ok(QuantMetrics {
        f1: harmonic(precision, recall),
        fn_,
        fp,
        precision,
        recall,
        tp,
    })
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn to_json_report<T: Serialize>(value: &T) -> String {
    // going through Value sorts every object's keys
    let value = serde_json::to_value(value).expect("report serializes");
    let mut out = serde_json::to_string_pretty(&value).expect("value serializes");
    out.push('\n');
    out
}

pub fn write_json_report<T: Serialize, W: Write>(mut out: W, value: &T) -> Result<(), EvalError> {
    out.write_all(to_json_report(value).as_bytes())?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CsvRow {
    threshold: f64,
    precision: f64,
    recall: f64,
    f1: f64,
}

/// One `threshold,precision,recall,f1` line per row, after a header.
pub fn write_sweep_csv<W: Write>(out: W, sweep: &SweepResult) -> Result<(), EvalError> {
    let mut writer = csv::Writer::from_writer(out);
    for row in &sweep.rows {
        writer.serialize(CsvRow {
            threshold: row.threshold,
            precision: row.metrics.precision,
            recall: row.metrics.recall,
            f1: row.metrics.f1,
        })?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::mock::{JaccardSimilarity, OracleNer, OracleSimilarity};
    use crate::detect::{DetectionVerdict, Evidence};
    use crate::model::{DataPoint, Split};
    use crate::quantify::PointQuant;
    use proptest::prelude::*;

    fn record(role: TextRole, label: DetectionLabel) -> VerdictRecord {
        VerdictRecord {
            id: "x".into(),
            role,
            index: 0,
            verdict: DetectionVerdict {
                label,
                evidence: Evidence::Ner { threshold: 0.5, unmatched: vec![] },
            },
        }
    }

    #[test]
    fn hand_arithmetic() {
        use DetectionLabel as L;
        use TextRole as R;
        let verdicts = [
            record(R::Clean, L::Clean),
            record(R::Clean, L::Clean),
            record(R::Hallucinated, L::Clean),
            record(R::Clean, L::Hallucinated),
            record(R::Hallucinated, L::Hallucinated),
            record(R::Hallucinated, L::Hallucinated),
        ];
        let m = score_detection(&verdicts).unwrap();
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (2, 1, 2, 1));
        for v in [m.precision, m.recall, m.f1] {
            assert!((v - 2.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_correct_and_errors() {
        let mut verdicts = vec![record(TextRole::Clean, DetectionLabel::Clean); 10];
        verdicts.extend(vec![record(TextRole::Hallucinated, DetectionLabel::Hallucinated); 10]);
        let m = score_detection(&verdicts).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (1.0, 1.0, 1.0));
        assert!(matches!(score_detection(&[]), Err(EvalError::EmptyInput)));
        assert!(matches!(
            score_detection(&[record(TextRole::Unlabeled, DetectionLabel::Clean)]),
            Err(EvalError::Unlabeled(_))
        ));
    }

    proptest! {
        #[test]
        fn metric_bounds(tp in 0usize..50, fp in 0usize..50, tn in 0usize..50, fn_ in 0usize..50) {
            let m = DetectionMetrics::from_counts(tp, fp, tn, fn_);
            for v in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if m.precision > 0.0 && m.recall > 0.0 {
                prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
                prop_assert!(m.f1 >= m.precision.min(m.recall) - 1e-12);
            }
        }
    }

    #[test]
    fn grids() {
        let default = SweepGrid::default().thresholds();
        assert_eq!(default.len(), 19);
        assert_eq!(default[0], 0.05);
        assert_eq!(default[7], 0.4);
        assert_eq!(default[18], 0.95);
        assert!(default.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(SweepGrid::new(0.5, 0.5, 0.05).unwrap().thresholds(), vec![0.5]);
        assert!(SweepGrid::new(0.6, 0.5, 0.05).is_err());
        assert!(SweepGrid::new(0.1, 0.5, 0.0).is_err());
    }

    fn sample(id: &str, cleans: usize, halls: usize) -> DetectionSample {
        DetectionSample {
            clean_texts: (0..cleans).map(|i| format!("{id} clean {i}")).collect(),
            hallucinated_texts: (0..halls)
                .map(|i| HallucinatedText {
                    extra_triple_count: 1,
                    source_id: format!("{id}-h{i}"),
                    text: format!("{id} hallucinated {i}"),
                })
                .collect(),
            id: id.into(),
            triples: [Triple::new(id, "r", "x").unwrap()].into_iter().collect(),
        }
    }

    #[test]
    fn balanced_sampling() {
        let d: Vec<_> = (0..10).map(|i| sample(&format!("s{i}"), 3, 2)).collect();
        let a = sample_balanced(&d, 4, 9).unwrap();
        assert_eq!(a, sample_balanced(&d, 4, 9).unwrap());
        assert_eq!(a.len(), 4);
        let ids: HashSet<_> = a.iter().map(|s| &s.id).collect();
        assert_eq!(ids.len(), 4);
        assert!(a.iter().all(|s| s.clean_texts.len() == 1 && s.hallucinated_texts.len() == 1));
        assert!(sample_balanced(&d, 0, 9).unwrap().is_empty());
        assert!(matches!(
            sample_balanced(&d, 11, 9),
            Err(EvalError::NotEnoughSamples { requested: 11, available: 10 })
        ));
    }

    /// Clean texts' worst entity scores 0.6, each hallucinated text has an
    /// entity scoring 0.4.
    fn sweep_fixture() -> (Vec<DetectionSample>, BackendSuite) {
        let mut ner = OracleNer::new();
        let mut sim = OracleSimilarity::new();
        let mut samples = Vec::new();
        for i in 0..5 {
            let mut s = sample(&format!("Entity{i}"), 1, 1);
            s.clean_texts[0] = format!("Near{i} is here.");
            s.hallucinated_texts[0].text = format!("Far{i} is there.");
            ner.insert(s.clean_texts[0].clone(), [format!("Near{i}")]);
            ner.insert(s.hallucinated_texts[0].text.clone(), [format!("Far{i}")]);
            sim.insert(&format!("Near{i}"), &format!("Entity{i}"), 0.6);
            sim.insert(&format!("Far{i}"), &format!("Entity{i}"), 0.4);
            samples.push(s);
        }
        let suite = BackendSuite::default().with_extractor(ner).with_similarity(sim);
        (samples, suite)
    }

    #[test]
    fn sweep_plateau_and_tie_break() {
        let (samples, suite) = sweep_fixture();
        let sweep = threshold_sweep(&samples, &suite, SweepGrid::default()).unwrap();
        assert_eq!(sweep.rows.len(), 19);
        for row in &sweep.rows {
            let perfect = (0.45..=0.6 + 1e-12).contains(&row.threshold);
            assert_eq!(row.metrics.f1 == 1.0, perfect, "threshold {}", row.threshold);
        }
        assert_eq!(sweep.best_threshold, 0.45);
        for pair in sweep.rows.windows(2) {
            assert!(pair[1].metrics.fp <= pair[0].metrics.fp);
            assert!(pair[1].metrics.fn_ >= pair[0].metrics.fn_);
        }
    }

    #[test]
    fn sweep_rows_match_direct_detection() {
        let (samples, suite) = sweep_fixture();
        let sweep = threshold_sweep(&samples, &suite, SweepGrid::default()).unwrap();
        for row in &sweep.rows {
            let verdicts = crate::detect::detect_batch(
                DetectionInput::Samples(&samples),
                crate::detect::Method::Ner { threshold: row.threshold },
                &suite,
            )
            .unwrap();
            assert_eq!(score_detection(&verdicts).unwrap(), row.metrics);
        }
    }

    #[test]
    fn csv_shape() {
        let (samples, suite) = sweep_fixture();
        let sweep = threshold_sweep(&samples, &suite, SweepGrid::default()).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &sweep).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 20);
        assert_eq!(lines[0], "threshold,precision,recall,f1");
        assert_eq!(lines[9], "0.45,1.0,1.0,1.0");
        let json = to_json_report(&sweep);
        assert_eq!(serde_json::from_str::<SweepResult>(&json).unwrap(), sweep);
    }

    fn t(h: &str) -> Triple {
        Triple::new(h, "r", "x").unwrap()
    }

    fn gold_and_report(found: Vec<Triple>) -> (Dataset, QuantReport) {
        let missing: TripleSet = (0..9).map(|i| t(&format!("m_{i}"))).collect();
        let point = DataPoint::with_missing("p", "text", [t("kept")].into_iter().collect(), missing).unwrap();
        let gold = Dataset::new("g", Split::Test, vec![point]).unwrap();
        let report = QuantReport {
            absolute_missing: found.len(),
            points: vec![PointQuant {
                candidates: 0,
                found_missing: found.into_iter().collect(),
                id: "p".into(),
            }],
            relative_missing: 0.0,
        };
        (gold, report)
    }

    #[test]
    fn quantifier_arithmetic() {
        let mut found: Vec<Triple> = (0..9).map(|i| t(&format!("m {i}"))).collect();
        found.push(t("extra"));
        let (gold, report) = gold_and_report(found);
        let m = score_quantifier(&report, &gold, TripleMatch::Exact).unwrap();
        assert!((m.precision - 0.9).abs() < 1e-12);
        assert_eq!(m.recall, 1.0);

        let (gold, report) = gold_and_report(vec![]);
        let m = score_quantifier(&report, &gold, TripleMatch::Exact).unwrap();
        assert_eq!(m.recall, 0.0);

        let (gold, mut report) = gold_and_report(vec![]);
        report.points[0].id = "q".into();
        assert!(matches!(score_quantifier(&report, &gold, TripleMatch::Exact), Err(EvalError::IdMismatch(_))));
    }

    #[test]
    fn similarity_matching_is_one_to_one() {
        let (gold, report) = gold_and_report(vec![t("m 0"), t("m 0 the")]);
        let m = score_quantifier(
            &report,
            &gold,
            TripleMatch::Similar { scorer: &JaccardSimilarity, threshold: 0.6 },
        )
        .unwrap();
        // the near-duplicate cannot reuse the gold triple already matched
        assert_eq!((m.tp, m.fp, m.fn_), (1, 1, 8));
    }
}
