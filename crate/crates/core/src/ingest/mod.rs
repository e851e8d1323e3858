//! Corpus readers and writers.
//!
//! Source corpora (WebNLG-style XML, DocRED-style JSON) are parsed into
//! [`Dataset`](crate::model::Dataset)s. The canonical on-disk form is JSON
//! Lines, one data point per line, with a manifest beside it carrying the
//! dataset name, split and provenance.

mod canonical;
mod docred;
mod stats;
mod webnlg;

use thiserror::Error;

use crate::model::ModelError;

pub use canonical::{
    manifest_path, read_canonical, read_canonical_from, read_manifest, write_canonical,
    write_canonical_to, write_manifest, Manifest, PointRecord,
};
pub use docred::parse_docred_json;
pub use stats::{corpus_stats, count_sentences, CorpusStats};
pub use webnlg::parse_webnlg_xml;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("entry `{entry}`: cannot parse triple `{raw}` (expected `head | relation | tail`)")]
    TripleParseError { entry: String, raw: String },
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("document `{title}`: label references vertex {index} but only {available} exist")]
    IndexOutOfRange {
        title: String,
        index: usize,
        available: usize,
    },
    #[error("line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid data point: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
