//! JSON bodies of the backend HTTP protocol.
//!
//! | endpoint            | request                                   | response                      |
//! |---------------------|-------------------------------------------|-------------------------------|
//! | `GET /v1/health`    |                                           | `{"status","capabilities"}`   |
//! | `POST /v1/ner`      | `{"texts":[..]}`                          | `{"entities":[[{"text","start","end"}]]}` |
//! | `POST /v1/similarity` | `{"pairs":[["a","b"]]}`                 | `{"scores":[..]}`             |
//! | `POST /v1/nli`      | `{"pairs":[{"premise","hypothesis"}]}`    | `{"verdicts":[{"label","scores"}]}` |
//! | `POST /v1/augment`  | `{"texts":[..],"prompt_id":"..","seed":7}`| `{"texts":[..]}`              |
//!
//! Failures are non-200 responses with `{"error":"..."}`. Entity offsets count
//! characters. Unknown response fields are ignored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Capability, PromptId};
use crate::model::NliLabel;

pub const HEALTH_PATH: &str = "/v1/health";
pub const NER_PATH: &str = "/v1/ner";
pub const SIMILARITY_PATH: &str = "/v1/similarity";
pub const NLI_PATH: &str = "/v1/nli";
pub const AUGMENT_PATH: &str = "/v1/augment";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub capabilities: Vec<Capability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerRequest<'a> {
    #[serde(borrow)]
    pub texts: Vec<&'a str>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireEntity {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NerResponse {
    pub entities: Vec<Vec<WireEntity>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRequest<'a> {
    #[serde(borrow)]
    pub pairs: Vec<[&'a str; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityResponse {
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePair<'a> {
    pub premise: &'a str,
    pub hypothesis: &'a str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliRequest<'a> {
    #[serde(borrow)]
    pub pairs: Vec<WirePair<'a>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireVerdict {
    pub label: NliLabel,
    pub scores: BTreeMap<NliLabel, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliResponse {
    pub verdicts: Vec<WireVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentRequest<'a> {
    #[serde(borrow)]
    pub texts: Vec<&'a str>,
    pub prompt_id: PromptId,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentResponse {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
