use std::collections::HashMap;

use super::{CorruptError, SeededPipelineConfig};
use crate::backends::{PromptId, TextAugmenter};
use crate::model::Dataset;

/// Minimum share of the original tokens an augmented text must keep before
/// it is flagged as suspect.
pub const RETENTION_THRESHOLD: f64 = 0.9;

fn token_counts(text: &str) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for token in text.split_whitespace() {
        let token = token
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if !token.is_empty() {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    counts
}

/// Fraction of `original`'s tokens (as a multiset, lowercased, punctuation
/// trimmed) that also occur in `augmented`.
pub fn token_retention(original: &str, augmented: &str) -> f64 {
    let before = token_counts(original);
    let after = token_counts(augmented);
    let total: usize = before.values().sum();
    if total == 0 {
        return 1.0;
    }
    let kept: usize = before
        .iter()
        .map(|(tok, &n)| n.min(after.get(tok).copied().unwrap_or(0)))
        .sum();
    kept as f64 / total as f64
}

/// Replaces every text with the augmenter's output for `prompt_id`, keeping
/// the annotations. Since the additions are unannotated, each augmented point
/// carries irrelevant or relevant hallucinations depending on what the model
/// added.
///
/// An empty output, or one shorter than its input, fails the run. Outputs that
/// keep less than [`RETENTION_THRESHOLD`] of the input tokens are kept but
/// flagged `suspect` in the provenance record.
pub fn augment_irrelevant(
    ds: &Dataset,
    prompt_id: &str,
    backend: &dyn TextAugmenter,
    cfg: &SeededPipelineConfig,
) -> Result<Dataset, CorruptError> {
    let prompt: PromptId = prompt_id.parse()?;
    let texts: Vec<&str> = ds.points().iter().map(|p| p.text()).collect();
    let augmented = backend.augment_text(&texts, prompt, cfg.seed)?;

    let mut record = cfg.record(ds).with_detail("prompt_id", prompt.as_str());
    let mut points = Vec::with_capacity(ds.len());
    for (point, output) in ds.points().iter().zip(augmented) {
        let reject = |reason: String| CorruptError::AugmentationRejected {
            id: point.id().to_owned(),
            reason,
        };
        if output.trim().is_empty() {
            return Err(reject("empty output".into()));
        }
        let (before, after) = (point.text().chars().count(), output.chars().count());
        if after < before {
            return Err(reject(format!("output has {after} characters, input {before}")));
        }
        let retention = token_retention(point.text(), &output);
        if retention < RETENTION_THRESHOLD {
            record
                .details
                .insert(point.id().to_owned(), format!("suspect: retention {retention:.3}"));
        }
        let mut point = point.clone();
        point.set_text(output);
        points.push(point);
    }
    Ok(ds.derive(points, record)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::mock::TemplateAugmenter;
    use crate::backends::BackendError;
    use crate::model::{DataPoint, Split, Triple, TripleSet};

    struct Fixed(&'static str);

    impl TextAugmenter for Fixed {
        fn augment_text(&self, texts: &[&str], _: PromptId, _: u64) -> Result<Vec<String>, BackendError> {
            Ok(texts.iter().map(|_| self.0.to_owned()).collect())
        }
        fn describe(&self) -> String {
            "fixed".into()
        }
    }

    fn ds() -> Dataset {
        let triples: TripleSet = [Triple::new("Ted", "livesIn", "New_York").unwrap()].into_iter().collect();
        Dataset::new(
            "w",
            Split::Train,
            vec![DataPoint::new("p", "Ted lives in the city of New York", triples).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn appends_fact_and_keeps_annotation() {
        let cfg = SeededPipelineConfig::new("augment", 3);
        let out = augment_irrelevant(&ds(), "numeric-facts", &TemplateAugmenter, &cfg).unwrap();
        let text = out.points()[0].text();
        assert!(text.starts_with("Ted lives in the city of New York"));
        assert!(text.contains("million inhabitants"));
        assert_eq!(out.points()[0].triples(), ds().points()[0].triples());
        let again = augment_irrelevant(&ds(), "numeric-facts", &TemplateAugmenter, &cfg).unwrap();
        assert_eq!(out, again);
    }

    #[test]
    fn empty_output_rejected() {
        let cfg = SeededPipelineConfig::new("augment", 3);
        assert!(matches!(
            augment_irrelevant(&ds(), "verbose", &Fixed(""), &cfg),
            Err(CorruptError::AugmentationRejected { .. })
        ));
        assert!(matches!(
            augment_irrelevant(&ds(), "verbose", &Fixed("Ted."), &cfg),
            Err(CorruptError::AugmentationRejected { .. })
        ));
    }

    #[test]
    fn unknown_prompt_fails_before_backend() {
        struct Panics;
        impl TextAugmenter for Panics {
            fn augment_text(&self, _: &[&str], _: PromptId, _: u64) -> Result<Vec<String>, BackendError> {
                panic!("backend must not be called")
            }
            fn describe(&self) -> String {
                "panics".into()
            }
        }
        let cfg = SeededPipelineConfig::new("augment", 3);
        assert!(matches!(
            augment_irrelevant(&ds(), "nope", &Panics, &cfg),
            Err(CorruptError::Backend(BackendError::UnknownPrompt(_)))
        ));
    }

    #[test]
    fn paraphrase_is_flagged_suspect() {
        let cfg = SeededPipelineConfig::new("augment", 3);
        let out = augment_irrelevant(
            &ds(),
            "free",
            &Fixed("Edward resides within the metropolis called NYC, a large town."),
            &cfg,
        )
        .unwrap();
        assert!(out.provenance()[0].details["p"].starts_with("suspect"));
    }

    #[test]
    fn retention_counts_multiset() {
        assert_eq!(token_retention("a a b", "a b c"), 2.0 / 3.0);
        assert_eq!(token_retention("York.", "york is big"), 1.0);
        assert_eq!(token_retention("", "x"), 1.0);
    }
}
