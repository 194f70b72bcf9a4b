//! Entailment scoring contract and the in-process adapters.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::BackendError;
use crate::question::SyntacticPosition;

/// Identifies which (predicate, phrase, position) a hypothesis encodes.
///
/// Real models ignore it; the mock oracle keys on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Probe {
    pub doc_id: String,
    pub predicate_token: usize,
    pub start: usize,
    pub end: usize,
    pub position: SyntacticPosition,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntailmentRequest {
    pub premise: String,
    pub hypothesis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Probe>,
}

impl EntailmentRequest {
    pub fn new(premise: impl Into<String>, hypothesis: impl Into<String>) -> Self {
        EntailmentRequest {
            premise: premise.into(),
            hypothesis: hypothesis.into(),
            probe: None,
        }
    }

    pub fn with_probe(mut self, probe: Probe) -> Self {
        self.probe = Some(probe);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntailmentScore {
    pub probability: f64,
    pub backend_id: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EntailmentError {
    #[error("empty {0}")]
    EmptyField(&'static str),
    #[error("premise of {len} chars exceeds backend capacity of {max}")]
    Capacity { len: usize, max: usize },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("invalid model response: {0}")]
    InvalidResponse(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl EntailmentError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, EntailmentError::Transport(_))
    }
}

impl From<BackendError> for EntailmentError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Transport(m) => EntailmentError::Transport(m),
            other => EntailmentError::Protocol(other.to_string()),
        }
    }
}

/// Checks request validity against a declared premise capacity.
pub fn validate_request(req: &EntailmentRequest, max_premise_chars: Option<usize>) -> Result<(), EntailmentError> {
    if req.premise.trim().is_empty() {
        return Err(EntailmentError::EmptyField("premise"));
    }
    if req.hypothesis.trim().is_empty() {
        return Err(EntailmentError::EmptyField("hypothesis"));
    }
    if let Some(max) = max_premise_chars {
        let len = req.premise.chars().count();
        if len > max {
            return Err(EntailmentError::Capacity { len, max });
        }
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<f64, EntailmentError> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(EntailmentError::InvalidResponse(format!("probability {p} outside [0, 1]")))
    }
}

pub trait EntailmentBackend: Send + Sync {
    fn id(&self) -> &str;

    /// Longest premise accepted, in characters.
    fn max_premise_chars(&self) -> Option<usize> {
        None
    }

    fn score(&self, req: &EntailmentRequest) -> Result<EntailmentScore, EntailmentError>;

    /// Order-preserving; item `i` equals `score(&reqs[i])`.
    fn score_batch(&self, reqs: &[EntailmentRequest]) -> Vec<Result<EntailmentScore, EntailmentError>> {
        reqs.iter().map(|r| self.score(r)).collect()
    }

    /// Whether scores depend on the request probe (and must be cached by it).
    fn keys_on_probe(&self) -> bool {
        false
    }
}

impl<T: EntailmentBackend + ?Sized> EntailmentBackend for Box<T> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn max_premise_chars(&self) -> Option<usize> {
        (**self).max_premise_chars()
    }
    fn score(&self, req: &EntailmentRequest) -> Result<EntailmentScore, EntailmentError> {
        (**self).score(req)
    }
    fn score_batch(&self, reqs: &[EntailmentRequest]) -> Vec<Result<EntailmentScore, EntailmentError>> {
        (**self).score_batch(reqs)
    }
    fn keys_on_probe(&self) -> bool {
        (**self).keys_on_probe()
    }
}

impl<T: EntailmentBackend + ?Sized> EntailmentBackend for Arc<T> {
    fn id(&self) -> &str {
        (**self).id()
    }
    fn max_premise_chars(&self) -> Option<usize> {
        (**self).max_premise_chars()
    }
    fn score(&self, req: &EntailmentRequest) -> Result<EntailmentScore, EntailmentError> {
        (**self).score(req)
    }
    fn score_batch(&self, reqs: &[EntailmentRequest]) -> Vec<Result<EntailmentScore, EntailmentError>> {
        (**self).score_batch(reqs)
    }
    fn keys_on_probe(&self) -> bool {
        (**self).keys_on_probe()
    }
}

/// Deterministic oracle scoring requests by their probe.
///
/// Listed probes get their stored probability, everything else (including
/// probe-less requests) gets 0.
#[derive(Debug, Clone, Default)]
pub struct MockOracle {
    id: String,
    table: HashMap<Probe, f64>,
}

impl MockOracle {
    pub fn new(id: impl Into<String>) -> Self {
        MockOracle {
            id: id.into(),
            table: HashMap::new(),
        }
    }

    /// Oracle scoring each listed probe 1.0.
    pub fn perfect(id: impl Into<String>, gold: impl IntoIterator<Item = Probe>) -> Self {
        let mut oracle = MockOracle::new(id);
        for p in gold {
            oracle.insert(p, 1.0);
        }
        oracle
    }

    pub fn insert(&mut self, probe: Probe, probability: f64) {
        self.table.insert(probe, probability.clamp(0.0, 1.0));
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl EntailmentBackend for MockOracle {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, req: &EntailmentRequest) -> Result<EntailmentScore, EntailmentError> {
        validate_request(req, None)?;
        let probability = req
            .probe
            .as_ref()
            .and_then(|p| self.table.get(p).copied())
            .unwrap_or(0.0);
        Ok(EntailmentScore {
            probability,
            backend_id: self.id.clone(),
        })
    }

    fn keys_on_probe(&self) -> bool {
        true
    }
}

type ScoreFn = dyn Fn(&EntailmentRequest) -> Result<f64, EntailmentError> + Send + Sync;

/// Backend driven by a closure.
pub struct FnEntailment {
    id: String,
    keys_on_probe: bool,
    f: Box<ScoreFn>,
}

impl FnEntailment {
    pub fn new<F>(id: impl Into<String>, f: F) -> Self
    where
        F: Fn(&EntailmentRequest) -> Result<f64, EntailmentError> + Send + Sync + 'static,
    {
        FnEntailment {
            id: id.into(),
            keys_on_probe: true,
            f: Box::new(f),
        }
    }
}

impl EntailmentBackend for FnEntailment {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, req: &EntailmentRequest) -> Result<EntailmentScore, EntailmentError> {
        validate_request(req, None)?;
        let probability = check_probability((self.f)(req)?)?;
        Ok(EntailmentScore {
            probability,
            backend_id: self.id.clone(),
        })
    }

    fn keys_on_probe(&self) -> bool {
        self.keys_on_probe
    }
}

/// Zero-shot prompt for instruction-following models. Must contain
/// `{premise}` and `{hypothesis}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructPrompt {
    pub template: String,
}

impl Default for InstructPrompt {
    fn default() -> Self {
        InstructPrompt {
            template: "Premise: {premise}\nHypothesis: {hypothesis}\n\
                       Does the premise entail the hypothesis? Answer Yes or No."
                .to_string(),
        }
    }
}

impl InstructPrompt {
    pub fn new(template: impl Into<String>) -> Result<Self, EntailmentError> {
        let template = template.into();
        for slot in ["{premise}", "{hypothesis}"] {
            if !template.contains(slot) {
                return Err(EntailmentError::Protocol(format!("prompt template lacks {slot}")));
            }
        }
        Ok(InstructPrompt { template })
    }

    pub fn render(&self, premise: &str, hypothesis: &str) -> String {
        // Substitute in one pass so a premise containing "{hypothesis}" stays literal.
        let mut out = String::with_capacity(self.template.len() + premise.len() + hypothesis.len());
        let mut rest = self.template.as_str();
        while let Some(i) = rest.find('{') {
            out.push_str(&rest[..i]);
            let tail = &rest[i..];
            if let Some(t) = tail.strip_prefix("{premise}") {
                out.push_str(premise);
                rest = t;
            } else if let Some(t) = tail.strip_prefix("{hypothesis}") {
                out.push_str(hypothesis);
                rest = t;
            } else {
                out.push('{');
                rest = &tail[1..];
            }
        }
        out.push_str(rest);
        out
    }
}

/// First decoding step of an instruction-following model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStep {
    pub first_token: String,
    pub yes_logit: f64,
    pub no_logit: f64,
}

/// Greedy first-token decoder exposing the Yes/No logits.
pub trait FirstTokenLogits: Send + Sync {
    fn id(&self) -> &str;

    fn first_step(&self, prompt: &str) -> Result<FirstStep, BackendError>;
}

/// Two-way softmax of the Yes logit against the No logit.
pub fn yes_no_probability(yes: f64, no: f64) -> f64 {
    1.0 / (1.0 + (no - yes).exp())
}

fn answer_token(token: &str) -> Option<bool> {
    let t = token
        .trim()
        .trim_start_matches(['\u{2581}', '\u{120}'])
        .trim_end_matches(|c: char| c.is_ascii_punctuation())
        .to_ascii_lowercase();
    match t.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Yes/No entailment through an instruction-following model.
pub struct InstructNli<S> {
    decoder: S,
    prompt: InstructPrompt,
    max_premise_chars: Option<usize>,
    invalid_responses: AtomicU64,
}

impl<S: FirstTokenLogits> InstructNli<S> {
    pub fn new(decoder: S, prompt: InstructPrompt) -> Self {
        InstructNli {
            decoder,
            prompt,
            max_premise_chars: None,
            invalid_responses: AtomicU64::new(0),
        }
    }

    pub fn with_capacity(mut self, max_premise_chars: Option<usize>) -> Self {
        self.max_premise_chars = max_premise_chars;
        self
    }

    pub fn prompt(&self, premise: &str, hypothesis: &str) -> String {
        self.prompt.render(premise, hypothesis)
    }

    /// Responses whose first token was neither Yes nor No.
    pub fn invalid_responses(&self) -> u64 {
        self.invalid_responses.load(Ordering::Relaxed)
    }
}

impl<S: FirstTokenLogits> EntailmentBackend for InstructNli<S> {
    fn id(&self) -> &str {
        self.decoder.id()
    }

    fn max_premise_chars(&self) -> Option<usize> {
        self.max_premise_chars
    }

    fn score(&self, req: &EntailmentRequest) -> Result<EntailmentScore, EntailmentError> {
        validate_request(req, self.max_premise_chars)?;
        let step = self.decoder.first_step(&self.prompt(&req.premise, &req.hypothesis))?;
        if answer_token(&step.first_token).is_none() {
            self.invalid_responses.fetch_add(1, Ordering::Relaxed);
            return Err(EntailmentError::InvalidResponse(format!(
                "first token {:?} is neither Yes nor No",
                step.first_token
            )));
        }
        let probability = check_probability(yes_no_probability(step.yes_logit, step.no_logit))?;
        Ok(EntailmentScore {
            probability,
            backend_id: self.decoder.id().to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CacheKey {
    premise_sha: [u8; 32],
    hypothesis: String,
    probe: Option<Probe>,
}

/// Memoizing wrapper keyed by premise hash and hypothesis (and the probe for
/// probe-keyed backends). Errors are not cached.
pub struct CachedBackend<B> {
    inner: B,
    cache: Mutex<HashMap<CacheKey, f64>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<B: EntailmentBackend> CachedBackend<B> {
    pub fn new(inner: B) -> Self {
        CachedBackend {
            inner,
            cache: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }

    fn key(&self, req: &EntailmentRequest) -> CacheKey {
        CacheKey {
            premise_sha: Sha256::digest(req.premise.as_bytes()).into(),
            hypothesis: req.hypothesis.clone(),
            probe: if self.inner.keys_on_probe() { req.probe.clone() } else { None },
        }
    }

    fn lookup(&self, key: &CacheKey) -> Option<f64> {
        let hit = self.cache.lock().unwrap_or_else(|e| e.into_inner()).get(key).copied();
        if hit.is_some() {
            self.hits.fetch_add(1, Ordering::Relaxed);
        }
        hit
    }

    fn store(&self, key: CacheKey, p: f64) {
        self.cache.lock().unwrap_or_else(|e| e.into_inner()).insert(key, p);
    }

    fn hit(&self, p: f64) -> EntailmentScore {
        EntailmentScore {
            probability: p,
            backend_id: self.inner.id().to_string(),
        }
    }
}

impl<B: EntailmentBackend> EntailmentBackend for CachedBackend<B> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn max_premise_chars(&self) -> Option<usize> {
        self.inner.max_premise_chars()
    }

    fn keys_on_probe(&self) -> bool {
        self.inner.keys_on_probe()
    }

    fn score(&self, req: &EntailmentRequest) -> Result<EntailmentScore, EntailmentError> {
        let key = self.key(req);
        if let Some(p) = self.lookup(&key) {
            return Ok(self.hit(p));
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let s = self.inner.score(req)?;
        self.store(key, s.probability);
        Ok(s)
    }

    fn score_batch(&self, reqs: &[EntailmentRequest]) -> Vec<Result<EntailmentScore, EntailmentError>> {
        let keys: Vec<CacheKey> = reqs.iter().map(|r| self.key(r)).collect();
        let mut out: Vec<Option<Result<EntailmentScore, EntailmentError>>> =
            keys.iter().map(|k| self.lookup(k).map(|p| Ok(self.hit(p)))).collect();

        // One upstream request per distinct missing key.
        let mut first_of: HashMap<&CacheKey, usize> = HashMap::new();
        let mut pending: Vec<usize> = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            if out[i].is_none() && !first_of.contains_key(k) {
                first_of.insert(k, i);
                pending.push(i);
            }
        }
        if !pending.is_empty() {
            self.misses.fetch_add(pending.len() as u64, Ordering::Relaxed);
            let batch: Vec<EntailmentRequest> = pending.iter().map(|&i| reqs[i].clone()).collect();
            let results = self.inner.score_batch(&batch);
            let mut by_index: HashMap<usize, Result<EntailmentScore, EntailmentError>> = HashMap::new();
            for (&i, r) in pending.iter().zip(results) {
                if let Ok(s) = &r {
                    self.store(keys[i].clone(), s.probability);
                }
                by_index.insert(i, r);
            }
            for (i, slot) in out.iter_mut().enumerate() {
                if slot.is_none() {
                    let src = first_of[&keys[i]];
                    *slot = Some(by_index[&src].clone());
                }
            }
        }
        out.into_iter().map(|r| r.expect("every slot filled")).collect()
    }
}
