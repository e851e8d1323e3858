use std::collections::BTreeMap;

use serde::Serialize;

use super::IngestError;
use crate::model::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub avg_sentences_per_point: f64,
    pub avg_triples_per_point: f64,
    pub document_count: usize,
    /// Points whose annotation is empty.
    pub empty_annotation_count: usize,
    pub relation_type_histogram: BTreeMap<String, u64>,
    pub total_sentences: u64,
    pub total_triples: u64,
}

/// Counts sentences by splitting after `.`, `!` or `?` when followed by
/// whitespace or the end of the text. Abbreviations are not special-cased.
pub fn count_sentences(text: &str) -> usize {
    let mut count = 0;
    let mut segment_has_content = false;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if matches!(c, '.' | '!' | '?') {
            let boundary = chars.peek().is_none_or(|next| next.is_whitespace());
            if boundary {
                if segment_has_content {
                    count += 1;
                }
                segment_has_content = false;
                continue;
            }
        }
        if !c.is_whitespace() && !matches!(c, '.' | '!' | '?') {
            segment_has_content = true;
        }
    }
    if segment_has_content {
        count += 1;
    }
    count
}

pub fn corpus_stats(ds: &Dataset) -> Result<CorpusStats, IngestError> {
    if ds.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let mut histogram = BTreeMap::new();
    let mut total_sentences = 0u64;
    let mut empty = 0;
    for point in ds.points() {
        total_sentences += count_sentences(point.text()) as u64;
        if point.triples().is_empty() {
            empty += 1;
        }
        for triple in point.triples() {
            *histogram.entry(triple.relation().to_owned()).or_insert(0) += 1;
        }
    }
    let total_triples = ds.total_triples();
    let n = ds.len() as f64;
    if empty > 0 {
        log::warn!("{}: {empty} point(s) have an empty annotation", ds.name);
    }
    Ok(CorpusStats {
        avg_sentences_per_point: total_sentences as f64 / n,
        avg_triples_per_point: total_triples as f64 / n,
        document_count: ds.len(),
        empty_annotation_count: empty,
        relation_type_histogram: histogram,
        total_sentences,
        total_triples,
    })
}
