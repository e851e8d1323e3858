use std::collections::HashMap;

use serde::Deserialize;

use super::IngestError;
use crate::model::{DataPoint, Dataset, ProvenanceRecord, Split, Triple, TripleSet};

#[derive(Deserialize)]
struct Document {
    title: String,
    sents: Vec<Vec<String>>,
    #[serde(rename = "vertexSet")]
    vertex_set: Vec<Vec<Mention>>,
    #[serde(default)]
    labels: Vec<Label>,
}

#[derive(Deserialize)]
struct Mention {
    name: String,
}

#[derive(Deserialize)]
struct Label {
    h: usize,
    t: usize,
    r: String,
}

/// Parses a DocRED / Re-DocRED style JSON array.
///
/// The text is every token of every sentence joined by single spaces. Each
/// label becomes a triple over the first mention names of its head and tail
/// vertices. Point ids are document titles; a repeated title gets a `#n`
/// suffix.
pub fn parse_docred_json(json: &str, name: &str, split: Split) -> Result<Dataset, IngestError> {
    let docs: Vec<Document> =
        serde_json::from_str(json).map_err(|e| IngestError::MalformedJson(e.to_string()))?;

    let mut title_counts: HashMap<String, usize> = HashMap::new();
    let mut points = Vec::with_capacity(docs.len());
    for doc in docs {
        let text = doc
            .sents
            .iter()
            .flatten()
            .map(|tok| tok.trim())
            .filter(|tok| !tok.is_empty())
            .collect::<Vec<_>>()
            .join(" ");

        let surface = |index: usize| -> Result<&str, IngestError> {
            let vertex = doc.vertex_set.get(index).ok_or_else(|| IngestError::IndexOutOfRange {
                title: doc.title.clone(),
                index,
                available: doc.vertex_set.len(),
            })?;
            vertex.first().map(|m| m.name.as_str()).ok_or_else(|| {
                IngestError::MalformedJson(format!(
                    "document `{}`: vertex {index} has no mentions",
                    doc.title
                ))
            })
        };

        let mut triples = TripleSet::new();
        for label in &doc.labels {
            triples.insert(Triple::new(surface(label.h)?, &label.r, surface(label.t)?)?);
        }

        let seen = title_counts.entry(doc.title.clone()).or_insert(0);
        let id = if *seen == 0 {
            doc.title.clone()
        } else {
            format!("{}#{}", doc.title, seen)
        };
        *seen += 1;
        points.push(DataPoint::new(id, text, triples)?);
    }

    let mut dataset = Dataset::new(name, split, points)?;
    dataset.record(ProvenanceRecord::new("ingest:docred-json", None, name));
    Ok(dataset)
}
