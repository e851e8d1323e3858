use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ingest::IngestError;
use crate::model::{Dataset, Triple, TripleSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HallucinatedText {
    /// How many triples the source annotation has beyond the sample's.
    pub extra_triple_count: usize,
    pub source_id: String,
    pub text: String,
}

/// One annotation with texts that express exactly it (`clean_texts`) and
/// texts that express it plus more (`hallucinated_texts`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSample {
    pub clean_texts: Vec<String>,
    pub hallucinated_texts: Vec<HallucinatedText>,
    pub id: String,
    pub triples: TripleSet,
}

/// Builds the detection benchmark from a hallucination-free dataset.
///
/// Points are grouped by annotation value. For every non-empty annotation
/// `T1` and every point `q` whose annotation strictly contains `T1`, `q`'s
/// text is a hallucinated text for `T1`: it expresses all of `T1` plus
/// `|T_q| - |T1|` further triples. Groups without such a `q` are skipped.
///
/// Samples are ordered by the first point carrying their annotation, and take
/// that point's id. Texts keep point order.
pub fn build_detection_set(d0: &Dataset) -> Vec<DetectionSample> {
    let points = d0.points();

    let mut groups: Vec<(Vec<Triple>, Vec<usize>)> = Vec::new();
    let mut group_of: HashMap<Vec<Triple>, usize> = HashMap::new();
    for (index, point) in points.iter().enumerate() {
        if point.triples().is_empty() {
            continue;
        }
        let key = point.triples().sorted();
        match group_of.get(&key) {
            Some(&g) => groups[g].1.push(index),
            None => {
                group_of.insert(key.clone(), groups.len());
                groups.push((key, vec![index]));
            }
        }
    }

    let mut postings: HashMap<&Triple, Vec<usize>> = HashMap::new();
    for (index, point) in points.iter().enumerate() {
        for triple in point.triples() {
            postings.entry(triple).or_default().push(index);
        }
    }

    let mut samples = Vec::new();
    for (key, members) in &groups {
        let annotation = points[members[0]].triples();
        let rarest = key
            .iter()
            .map(|t| &postings[t])
            .min_by_key(|p| p.len())
            .expect("non-empty annotation");
        let hallucinated: Vec<HallucinatedText> = rarest
            .iter()
            .map(|&q| &points[q])
            .filter(|q| annotation.is_strict_subset(q.triples()))
            .map(|q| HallucinatedText {
                extra_triple_count: q.triples().len() - annotation.len(),
                source_id: q.id().to_owned(),
                text: q.text().to_owned(),
            })
            .collect();
        if hallucinated.is_empty() {
            continue;
        }
        samples.push(DetectionSample {
            clean_texts: members.iter().map(|&m| points[m].text().to_owned()).collect(),
            hallucinated_texts: hallucinated,
            id: points[members[0]].id().to_owned(),
            triples: annotation.clone(),
        });
    }
    samples
}

pub fn write_detection_set_to<W: Write>(mut out: W, samples: &[DetectionSample]) -> Result<(), IngestError> {
    for sample in samples {
        let line = serde_json::to_string(sample).expect("sample serializes");
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_detection_set(path: &Path, samples: &[DetectionSample]) -> Result<(), IngestError> {
    write_detection_set_to(BufWriter::new(File::create(path)?), samples)
}

pub fn read_detection_set_from<R: BufRead>(input: R) -> Result<Vec<DetectionSample>, IngestError> {
    let mut samples = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let violation = |message: String| IngestError::SchemaViolation {
            line: index + 1,
            message,
        };
        let sample: DetectionSample =
            serde_json::from_str(&line).map_err(|e| violation(e.to_string()))?;
        if sample.clean_texts.is_empty() {
            return Err(violation(format!("sample `{}` has no clean text", sample.id)));
        }
        if sample.hallucinated_texts.iter().any(|h| h.extra_triple_count == 0) {
            return Err(violation(format!(
                "sample `{}` has a hallucinated text with extra_triple_count 0",
                sample.id
            )));
        }
        samples.push(sample);
    }
    Ok(samples)
}

pub fn read_detection_set(path: &Path) -> Result<Vec<DetectionSample>, IngestError> {
    read_detection_set_from(BufReader::new(File::open(path)?))
}
