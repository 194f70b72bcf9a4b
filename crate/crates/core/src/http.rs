//! JSON-over-HTTP adapters for remotely served models.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::backend::BackendError;
use crate::candidates::{Phrase, PhraseProvider};
use crate::entailment::{validate_request, EntailmentBackend, EntailmentError, EntailmentRequest, EntailmentScore, FirstStep, FirstTokenLogits};
use crate::hypothesis::{FillMaskBackend, MaskPrediction};
use crate::model::Document;
use crate::qasrl::{QasrlAnswer, QasrlBackend, QasrlRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub url: String,
    pub timeout_secs: u64,
    /// Extra attempts after a transport failure.
    pub retries: u32,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            url: String::new(),
            timeout_secs: 60,
            retries: 2,
        }
    }
}

impl EndpointConfig {
    pub fn new(url: impl Into<String>) -> Self {
        EndpointConfig {
            url: url.into(),
            ..EndpointConfig::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct HttpEndpoint {
    cfg: EndpointConfig,
    client: reqwest::blocking::Client,
}

impl HttpEndpoint {
    pub fn new(cfg: EndpointConfig) -> Result<Self, BackendError> {
        if cfg.url.trim().is_empty() {
            return Err(BackendError::InvalidInput("endpoint url is empty".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs.max(1)))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpEndpoint { cfg, client })
    }

    pub fn url(&self) -> &str {
        &self.cfg.url
    }

    /// Whether anything answers at the endpoint. Any HTTP status counts.
    pub fn health_check(&self) -> Result<(), BackendError> {
        self.client
            .get(&self.cfg.url)
            .send()
            .map(|_| ())
            .map_err(|e| BackendError::Transport(format!("{}: {e}", self.cfg.url)))
    }

    fn post_once<Q: Serialize, R: DeserializeOwned>(&self, body: &Q) -> Result<R, BackendError> {
        let resp = self
            .client
            .post(&self.cfg.url)
            .json(body)
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() {
            return Err(BackendError::Transport(format!("{} returned {status}", self.cfg.url)));
        }
        if !status.is_success() {
            return Err(BackendError::Protocol(format!("{} returned {status}", self.cfg.url)));
        }
        resp.json::<R>()
            .map_err(|e| BackendError::Protocol(format!("malformed response from {}: {e}", self.cfg.url)))
    }

    pub fn post<Q: Serialize, R: DeserializeOwned>(&self, body: &Q) -> Result<R, BackendError> {
        let mut attempt = 0;
        loop {
            match self.post_once(body) {
                Err(e) if e.is_retryable() && attempt < self.cfg.retries => {
                    attempt += 1;
                    log::warn!("retrying {} after transport failure ({attempt}/{}): {e}", self.cfg.url, self.cfg.retries);
                    std::thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
                }
                other => return other,
            }
        }
    }
}

#[derive(Serialize)]
struct PairBody<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Serialize)]
struct NliBody<'a> {
    pairs: Vec<PairBody<'a>>,
}

#[derive(Deserialize)]
struct NliResult {
    probability: f64,
}

#[derive(Deserialize)]
struct NliResponse {
    results: Vec<NliResult>,
}

/// Classifier-style NLI model behind an HTTP endpoint.
///
/// Request `{"pairs": [{"premise", "hypothesis"}]}`, response
/// `{"results": [{"probability"}]}` in the same order.
pub struct RemoteNli {
    id: String,
    endpoint: HttpEndpoint,
    batch_size: usize,
    max_premise_chars: Option<usize>,
}

impl RemoteNli {
    pub fn new(id: impl Into<String>, endpoint: HttpEndpoint, batch_size: usize, max_premise_chars: Option<usize>) -> Self {
        RemoteNli {
            id: id.into(),
            endpoint,
            batch_size: batch_size.max(1),
            max_premise_chars,
        }
    }

    pub fn endpoint(&self) -> &HttpEndpoint {
        &self.endpoint
    }

    fn send(&self, reqs: &[&EntailmentRequest]) -> Result<Vec<f64>, EntailmentError> {
        let body = NliBody {
            pairs: reqs
                .iter()
                .map(|r| PairBody { premise: &r.premise, hypothesis: &r.hypothesis })
                .collect(),
        };
        let resp: NliResponse = self.endpoint.post(&body)?;
        if resp.results.len() != reqs.len() {
            return Err(EntailmentError::Protocol(format!(
                "expected {} results, got {}",
                reqs.len(),
                resp.results.len()
            )));
        }
        Ok(resp.results.into_iter().map(|r| r.probability).collect())
    }
}

impl EntailmentBackend for RemoteNli {
    fn id(&self) -> &str {
        &self.id
    }

    fn max_premise_chars(&self) -> Option<usize> {
        self.max_premise_chars
    }

    fn score(&self, req: &EntailmentRequest) -> Result<EntailmentScore, EntailmentError> {
        self.score_batch(std::slice::from_ref(req)).pop().expect("one result per request")
    }

    fn score_batch(&self, reqs: &[EntailmentRequest]) -> Vec<Result<EntailmentScore, EntailmentError>> {
        let mut out: Vec<Option<Result<EntailmentScore, EntailmentError>>> = reqs
            .iter()
            .map(|r| validate_request(r, self.max_premise_chars).err().map(Err))
            .collect();
        let valid: Vec<usize> = (0..reqs.len()).filter(|&i| out[i].is_none()).collect();
        for chunk in valid.chunks(self.batch_size) {
            let batch: Vec<&EntailmentRequest> = chunk.iter().map(|&i| &reqs[i]).collect();
            match self.send(&batch) {
                Ok(probs) => {
                    for (&i, p) in chunk.iter().zip(probs) {
                        out[i] = Some(if p.is_finite() && (0.0..=1.0).contains(&p) {
                            Ok(EntailmentScore { probability: p, backend_id: self.id.clone() })
                        } else {
                            Err(EntailmentError::InvalidResponse(format!("probability {p} outside [0, 1]")))
                        });
                    }
                }
                Err(e) => {
                    for &i in chunk {
                        out[i] = Some(Err(e.clone()));
                    }
                }
            }
        }
        out.into_iter().map(|r| r.expect("every slot filled")).collect()
    }
}

#[derive(Serialize)]
struct PromptBody<'a> {
    prompt: &'a str,
}

/// Instruction-following model returning its first decoding step:
/// request `{"prompt"}`, response `{"first_token", "yes_logit", "no_logit"}`.
pub struct RemoteDecoder {
    id: String,
    endpoint: HttpEndpoint,
}

impl RemoteDecoder {
    pub fn new(id: impl Into<String>, endpoint: HttpEndpoint) -> Self {
        RemoteDecoder { id: id.into(), endpoint }
    }

    pub fn endpoint(&self) -> &HttpEndpoint {
        &self.endpoint
    }
}

impl FirstTokenLogits for RemoteDecoder {
    fn id(&self) -> &str {
        &self.id
    }

    fn first_step(&self, prompt: &str) -> Result<FirstStep, BackendError> {
        self.endpoint.post(&PromptBody { prompt })
    }
}

#[derive(Serialize)]
struct MaskBody<'a> {
    text: &'a str,
    top_k: usize,
}

#[derive(Deserialize)]
struct MaskResponse {
    predictions: Vec<MaskPrediction>,
}

/// Masked language model: request `{"text", "top_k"}`, response
/// `{"predictions": [{"token", "probability"}]}`.
pub struct RemoteFillMask {
    id: String,
    endpoint: HttpEndpoint,
    mask_token: String,
}

impl RemoteFillMask {
    pub fn new(id: impl Into<String>, endpoint: HttpEndpoint, mask_token: impl Into<String>) -> Self {
        RemoteFillMask {
            id: id.into(),
            endpoint,
            mask_token: mask_token.into(),
        }
    }

    pub fn endpoint(&self) -> &HttpEndpoint {
        &self.endpoint
    }
}

impl FillMaskBackend for RemoteFillMask {
    fn id(&self) -> &str {
        &self.id
    }

    fn mask_token(&self) -> &str {
        &self.mask_token
    }

    fn predict(&self, text: &str, top_k: usize) -> Result<Vec<MaskPrediction>, BackendError> {
        let resp: MaskResponse = self.endpoint.post(&MaskBody { text, top_k })?;
        Ok(resp.predictions)
    }
}

#[derive(Deserialize)]
struct QasrlResponse {
    answers: Vec<QasrlAnswer>,
}

/// QA-SRL parser: the request is a [`QasrlRequest`], the response
/// `{"answers": [...]}` with sentence-local spans.
pub struct RemoteQasrl {
    id: String,
    endpoint: HttpEndpoint,
}

impl RemoteQasrl {
    pub fn new(id: impl Into<String>, endpoint: HttpEndpoint) -> Self {
        RemoteQasrl { id: id.into(), endpoint }
    }

    pub fn endpoint(&self) -> &HttpEndpoint {
        &self.endpoint
    }
}

impl QasrlBackend for RemoteQasrl {
    fn id(&self) -> &str {
        &self.id
    }

    fn parse(&self, req: &QasrlRequest) -> Result<Vec<QasrlAnswer>, BackendError> {
        let resp: QasrlResponse = self.endpoint.post(req)?;
        Ok(resp.answers)
    }
}

#[derive(Serialize)]
struct PhraseBody<'a> {
    doc_id: &'a str,
    first_sentence: usize,
    /// Global index of the first token of `first_sentence`.
    first_token: usize,
    sentences: Vec<&'a [String]>,
}

#[derive(Deserialize)]
struct PhraseResponse {
    phrases: Vec<Phrase>,
}

/// Noun-phrase and entity chunker. Request `{doc_id, first_sentence,
/// first_token, sentences}`, response `{"phrases": [{span, kind}]}` with
/// global spans.
pub struct RemotePhrases {
    id: String,
    endpoint: HttpEndpoint,
}

impl RemotePhrases {
    pub fn new(id: impl Into<String>, endpoint: HttpEndpoint) -> Self {
        RemotePhrases { id: id.into(), endpoint }
    }

    pub fn endpoint(&self) -> &HttpEndpoint {
        &self.endpoint
    }
}

impl PhraseProvider for RemotePhrases {
    fn id(&self) -> &str {
        &self.id
    }

    fn phrases(&self, doc: &Document, sentences: std::ops::RangeInclusive<usize>) -> Result<Vec<Phrase>, BackendError> {
        let bounds = doc
            .sentences_tokens(&sentences)
            .map_err(|e| BackendError::InvalidInput(e.to_string()))?;
        let body = PhraseBody {
            doc_id: doc.doc_id(),
            first_sentence: *sentences.start(),
            first_token: bounds.start,
            sentences: doc.sentences()[*sentences.start()..=*sentences.end()]
                .iter()
                .map(|s| s.tokens.as_slice())
                .collect(),
        };
        let resp: PhraseResponse = self.endpoint.post(&body)?;
        Ok(resp
            .phrases
            .into_iter()
            .filter(|p| p.span.start >= bounds.start && p.span.end <= bounds.end)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Serves canned responses; records request bodies.
    fn stub(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                log.lock().unwrap().push(String::from_utf8(buf).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (url, seen)
    }

    fn endpoint(url: &str, retries: u32) -> HttpEndpoint {
        HttpEndpoint::new(EndpointConfig { url: url.into(), timeout_secs: 5, retries }).unwrap()
    }

    #[test]
    fn remote_nli_batches_and_reports_positionally() {
        let (url, seen) = stub(vec![
            (200, r#"{"results":[{"probability":0.9},{"probability":0.1}]}"#.into()),
            (200, r#"{"results":[{"probability":0.5}]}"#.into()),
        ]);
        let nli = RemoteNli::new("remote", endpoint(&url, 0), 2, Some(100));
        let reqs = vec![
            EntailmentRequest::new("p1", "h1"),
            EntailmentRequest::new("", "h"),
            EntailmentRequest::new("p2", "h2"),
            EntailmentRequest::new("p3", "h3"),
        ];
        let out = nli.score_batch(&reqs);
        assert_eq!(out[0].as_ref().unwrap().probability, 0.9);
        assert_eq!(out[1], Err(EntailmentError::EmptyField("premise")));
        assert_eq!(out[2].as_ref().unwrap().probability, 0.1);
        assert_eq!(out[3].as_ref().unwrap().probability, 0.5);
        let bodies = seen.lock().unwrap();
        assert!(bodies[0].contains("\"p1\"") && bodies[0].contains("\"p2\""));
    }

    #[test]
    fn server_errors_are_retried() {
        let (url, _) = stub(vec![
            (503, "{}".into()),
            (200, r#"{"results":[{"probability":0.7}]}"#.into()),
        ]);
        let nli = RemoteNli::new("remote", endpoint(&url, 1), 8, None);
        assert_eq!(nli.score(&EntailmentRequest::new("p", "h")).unwrap().probability, 0.7);
    }

    #[test]
    fn malformed_and_client_errors() {
        let (url, _) = stub(vec![(200, r#"{"results":[]}"#.into()), (400, "{}".into())]);
        let nli = RemoteNli::new("remote", endpoint(&url, 0), 8, None);
        assert!(matches!(nli.score(&EntailmentRequest::new("p", "h")), Err(EntailmentError::Protocol(_))));
        assert!(matches!(nli.score(&EntailmentRequest::new("p", "h")), Err(EntailmentError::Protocol(_))));
    }

    #[test]
    fn unreachable_endpoint() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        drop(listener);
        let e = endpoint(&url, 0);
        assert!(matches!(e.health_check(), Err(BackendError::Transport(_))));
    }

    #[test]
    fn other_adapters_round_trip() {
        let (url, seen) = stub(vec![
            (200, r#"{"first_token":"Yes","yes_logit":2.0,"no_logit":0.0}"#.into()),
            (200, r#"{"predictions":[{"token":"to","probability":0.4}]}"#.into()),
            (200, r#"{"answers":[{"start":0,"end":2,"question":"Who left?"}]}"#.into()),
            (200, r#"{"phrases":[{"span":{"start":4,"end":6,"head":5},"kind":"noun_phrase"},{"span":{"start":0,"end":1,"head":0},"kind":"noun_phrase"}]}"#.into()),
        ]);
        let step = RemoteDecoder::new("dec", endpoint(&url, 0)).first_step("prompt").unwrap();
        assert_eq!(step.first_token, "Yes");
        let fm = RemoteFillMask::new("fm", endpoint(&url, 0), "<mask>");
        assert_eq!(fm.predict("x <mask> y", 10).unwrap()[0].token, "to");
        let q = RemoteQasrl::new("q", endpoint(&url, 0));
        let req = QasrlRequest {
            doc_id: "d".into(),
            sentence_index: 0,
            tokens: vec!["a".into()],
            predicate_index: 0,
            pos_kind: crate::qasrl::PosKind::Verb,
        };
        assert_eq!(q.parse(&req).unwrap().len(), 1);
        let doc = Document::new(
            "d",
            vec![vec!["a".into(), "b".into(), "c".into()], vec!["d".into(), "e".into(), "f".into()]],
            vec![],
        )
        .unwrap();
        let p = RemotePhrases::new("np", endpoint(&url, 0));
        let phrases = p.phrases(&doc, 1..=1).unwrap();
        assert_eq!(phrases.len(), 1);
        let bodies = seen.lock().unwrap();
        assert!(bodies[3].contains("\"first_token\":3"));
    }
}
