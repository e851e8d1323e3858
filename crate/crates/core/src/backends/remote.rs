//! Blocking HTTP client for the backend protocol in [`super::protocol`].
//!
//! Large batches are split into chunks of `chunk_size` items, at most
//! `max_in_flight` of which are outstanding at once. Results are reassembled
//! in input order. Transport failures and 5xx responses are retried with
//! exponential backoff; 4xx responses are not.

use std::collections::HashMap;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::protocol::*;
use super::{
    check_nli_inputs, non_overlapping, BackendError, Capability, EntailmentJudge, Entity,
    EntityExtractor, NliPair, NliVerdict, PromptId, SimilarityScorer, TextAugmenter,
};

pub const BACKEND_URL_ENV: &str = "HALLU_BACKEND_URL";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub base_url: String,
    pub chunk_size: usize,
    pub max_attempts: u32,
    pub backoff_base: Duration,
    pub max_in_flight: usize,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        let base_url: String = base_url.into();
        RemoteConfig {
            base_url: base_url.trim_end_matches('/').to_owned(),
            chunk_size: 32,
            max_attempts: 3,
            backoff_base: Duration::from_millis(200),
            max_in_flight: 4,
            timeout: Duration::from_secs(120),
        }
    }

    /// Reads the base URL from `HALLU_BACKEND_URL`.
    pub fn from_env() -> Option<Self> {
        std::env::var(BACKEND_URL_ENV)
            .ok()
            .filter(|v| !v.trim().is_empty())
            .map(Self::new)
    }
}

type AugmentKey = (PromptId, String, u64);

pub struct RemoteBackend {
    config: RemoteConfig,
    agent: ureq::Agent,
    augment_cache: Mutex<HashMap<AugmentKey, String>>,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(config.timeout)
            .build();
        RemoteBackend {
            config,
            agent,
            augment_cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    /// Capabilities the service advertises, provided it reports `ok`.
    pub fn health(&self) -> Result<Vec<Capability>, BackendError> {
        let url = self.url(HEALTH_PATH);
        let health: HealthResponse = self.with_retry(&url, || self.agent.get(&url).call())?;
        if health.status != "ok" {
            return Err(BackendError::BackendUnavailable {
                url,
                reason: format!("status `{}`", health.status),
            });
        }
        Ok(health.capabilities)
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url, path)
    }

    fn post<B: Serialize, R: DeserializeOwned>(&self, path: &str, body: &B) -> Result<R, BackendError> {
        let payload = serde_json::to_string(body).expect("request serializes");
        let url = self.url(path);
        self.with_retry(&url, || {
            self.agent
                .post(&url)
                .set("Content-Type", "application/json")
                .send_string(&payload)
        })
    }

    fn with_retry<R: DeserializeOwned>(
        &self,
        url: &str,
        send: impl Fn() -> Result<ureq::Response, ureq::Error>,
    ) -> Result<R, BackendError> {
        let attempts = self.config.max_attempts.max(1);
        let mut last_error = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                thread::sleep(self.config.backoff_base * 2u32.pow(attempt - 1));
            }
            match send() {
                Ok(response) => {
                    let body = response
                        .into_string()
                        .map_err(|e| BackendError::ProtocolError(format!("{url}: {e}")))?;
                    return serde_json::from_str(&body)
                        .map_err(|e| BackendError::ProtocolError(format!("{url}: {e}")));
                }
                Err(ureq::Error::Status(status, response)) => {
                    let message = response
                        .into_string()
                        .ok()
                        .and_then(|b| serde_json::from_str::<ErrorBody>(&b).ok())
                        .map(|b| b.error)
                        .unwrap_or_else(|| format!("HTTP {status}"));
                    let error = if status == 503 {
                        BackendError::BackendUnavailable {
                            url: url.to_owned(),
                            reason: message,
                        }
                    } else {
                        BackendError::Remote { status, message }
                    };
                    if status < 500 {
                        return Err(error);
                    }
                    log::debug!("{url}: attempt {} failed with HTTP {status}", attempt + 1);
                    last_error = Some(error);
                }
                Err(ureq::Error::Transport(transport)) => {
                    log::debug!("{url}: attempt {} failed: {transport}", attempt + 1);
                    last_error = Some(BackendError::BackendUnavailable {
                        url: url.to_owned(),
                        reason: transport.to_string(),
                    });
                }
            }
        }
        Err(last_error.expect("at least one attempt"))
    }

    /// Runs `call` over chunks of `items` with bounded concurrency and checks
    /// every chunk comes back with one result per item.
    fn chunked<T, R, F>(&self, items: &[T], call: F) -> Result<Vec<R>, BackendError>
    where
        T: Sync,
        R: Send,
        F: Fn(&[T]) -> Result<Vec<R>, BackendError> + Sync,
    {
        let chunks: Vec<&[T]> = items.chunks(self.config.chunk_size.max(1)).collect();
        let mut out = Vec::with_capacity(items.len());
        for wave in chunks.chunks(self.config.max_in_flight.max(1)) {
            let results: Vec<Result<Vec<R>, BackendError>> = if wave.len() == 1 {
                vec![call(wave[0])]
            } else {
                thread::scope(|scope| {
                    let call = &call;
                    let handles: Vec<_> = wave
                        .iter()
                        .map(|chunk| scope.spawn(move || call(chunk)))
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("backend worker panicked"))
                        .collect()
                })
            };
            for (chunk, result) in wave.iter().zip(results) {
                let result = result?;
                if result.len() != chunk.len() {
                    return Err(BackendError::ProtocolError(format!(
                        "expected {} results, got {}",
                        chunk.len(),
                        result.len()
                    )));
                }
                out.extend(result);
            }
        }
        Ok(out)
    }
}

fn to_entities(text: &str, wire: Vec<WireEntity>) -> Result<Vec<Entity>, BackendError> {
    let mut entities = Vec::with_capacity(wire.len());
    for w in wire {
        let entity = Entity::from_span(text, w.start, w.end)
            .filter(|e| e.surface == w.text)
            .ok_or_else(|| {
                BackendError::ProtocolError(format!(
                    "entity `{}` at {}..{} does not match the text",
                    w.text, w.start, w.end
                ))
            })?;
        entities.push(entity);
    }
    Ok(non_overlapping(entities))
}

impl EntityExtractor for RemoteBackend {
    fn extract_entities(&self, texts: &[&str]) -> Result<Vec<Vec<Entity>>, BackendError> {
        self.chunked(texts, |chunk| {
            let response: NerResponse = self.post(NER_PATH, &NerRequest { texts: chunk.to_vec() })?;
            if response.entities.len() != chunk.len() {
                return Err(BackendError::ProtocolError(format!(
                    "expected {} entity lists, got {}",
                    chunk.len(),
                    response.entities.len()
                )));
            }
            chunk
                .iter()
                .zip(response.entities)
                .map(|(text, wire)| to_entities(text, wire))
                .collect()
        })
    }

    fn describe(&self) -> String {
        format!("remote:{}", self.config.base_url)
    }
}

impl SimilarityScorer for RemoteBackend {
    fn score_similarity(&self, pairs: &[(&str, &str)]) -> Result<Vec<f64>, BackendError> {
        self.chunked(pairs, |chunk| {
            let request = SimilarityRequest {
                pairs: chunk.iter().map(|&(a, b)| [a, b]).collect(),
            };
            let response: SimilarityResponse = self.post(SIMILARITY_PATH, &request)?;
            response
                .scores
                .into_iter()
                .map(|s| {
                    if s.is_nan() {
                        Err(BackendError::ProtocolError("similarity score is NaN".into()))
                    } else {
                        Ok(s.clamp(0.0, 1.0))
                    }
                })
                .collect()
        })
    }

    fn describe(&self) -> String {
        format!("remote:{}", self.config.base_url)
    }
}

impl EntailmentJudge for RemoteBackend {
    fn judge_entailment(&self, pairs: &[NliPair<'_>]) -> Result<Vec<NliVerdict>, BackendError> {
        check_nli_inputs(pairs)?;
        self.chunked(pairs, |chunk| {
            let request = NliRequest {
                pairs: chunk
                    .iter()
                    .map(|p| WirePair {
                        premise: p.premise,
                        hypothesis: p.hypothesis,
                    })
                    .collect(),
            };
            let response: NliResponse = self.post(NLI_PATH, &request)?;
            response
                .verdicts
                .into_iter()
                .map(|wire| {
                    let verdict = NliVerdict::from_scores(wire.scores)?;
                    if verdict.label != wire.label {
                        log::warn!(
                            "backend label `{}` disagrees with argmax `{}`; using argmax",
                            wire.label,
                            verdict.label
                        );
                    }
                    Ok(verdict)
                })
                .collect()
        })
    }

    fn describe(&self) -> String {
        format!("remote:{}", self.config.base_url)
    }
}

impl TextAugmenter for RemoteBackend {
    fn augment_text(
        &self,
        texts: &[&str],
        prompt: PromptId,
        seed: u64,
    ) -> Result<Vec<String>, BackendError> {
        let mut pending: Vec<&str> = {
            let cache = self.augment_cache.lock().expect("cache lock");
            texts
                .iter()
                .copied()
                .filter(|t| !cache.contains_key(&(prompt, (*t).to_owned(), seed)))
                .collect()
        };
        pending.sort_unstable();
        pending.dedup();

        let fresh = self.chunked(&pending, |chunk| {
            let request = AugmentRequest {
                texts: chunk.to_vec(),
                prompt_id: prompt,
                seed,
            };
            let response: AugmentResponse = self.post(AUGMENT_PATH, &request)?;
            Ok(response.texts)
        })?;

        let mut cache = self.augment_cache.lock().expect("cache lock");
        for (text, augmented) in pending.iter().zip(fresh) {
            cache.insert((prompt, (*text).to_owned(), seed), augmented);
        }
        Ok(texts
            .iter()
            .map(|t| cache[&(prompt, (*t).to_owned(), seed)].clone())
            .collect())
    }

    fn describe(&self) -> String {
        format!("remote:{}", self.config.base_url)
    }
}
