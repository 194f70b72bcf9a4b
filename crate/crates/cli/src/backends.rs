//! Builds model backends from the run configuration.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use argentail::candidates::PhraseProvider;
use argentail::entailment::{CachedBackend, EntailmentBackend, InstructNli, InstructPrompt, MockOracle, Probe};
use argentail::http::{EndpointConfig, HttpEndpoint, RemoteDecoder, RemoteFillMask, RemoteNli, RemotePhrases, RemoteQasrl};
use argentail::hypothesis::FillMaskBackend;
use argentail::io::read_jsonl;
use argentail::pipeline::Backends;
use argentail::qasrl::{FilePhrases, FileQasrl, QasrlBackend};
use serde::Deserialize;

use crate::config::{Config, EntailmentKind, SourceKind, SourceSection};
use crate::error::CliError;
use crate::manifest::BackendInfo;

/// One line of a mock oracle file.
#[derive(Debug, Deserialize)]
struct OracleEntry {
    #[serde(flatten)]
    probe: Probe,
    #[serde(default = "one")]
    probability: f64,
}

fn one() -> f64 {
    1.0
}

pub fn load_oracle(id: &str, path: &Path) -> Result<MockOracle, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("cannot open oracle {}: {e}", path.display())))?;
    let entries: Vec<OracleEntry> =
        read_jsonl(BufReader::new(file)).map_err(|e| CliError::Input(format!("oracle {}: {e}", path.display())))?;
    let mut oracle = MockOracle::new(id);
    for e in entries {
        oracle.insert(e.probe, e.probability);
    }
    Ok(oracle)
}

/// Live backends for one run.
pub struct Runtime {
    pub entailment: Box<dyn EntailmentBackend>,
    pub qasrl: Box<dyn QasrlBackend>,
    pub fill_mask: Option<Box<dyn FillMaskBackend>>,
    pub phrases: Option<Box<dyn PhraseProvider>>,
    pub info: Vec<BackendInfo>,
}

impl Runtime {
    pub fn backends(&self) -> Backends<'_> {
        Backends {
            entailment: self.entailment.as_ref(),
            qasrl: self.qasrl.as_ref(),
            fill_mask: self.fill_mask.as_deref(),
            phrases: self.phrases.as_deref(),
        }
    }
}

fn endpoint(role: &str, url: &str, timeout_secs: u64, retries: u32) -> Result<HttpEndpoint, CliError> {
    let ep = HttpEndpoint::new(EndpointConfig {
        url: url.to_string(),
        timeout_secs,
        retries,
    })
    .map_err(|e| CliError::Input(format!("{role} endpoint: {e}")))?;
    ep.health_check()
        .map_err(|e| CliError::Backend(format!("{role} endpoint {url} is unreachable: {e}")))?;
    Ok(ep)
}

fn source_endpoint(role: &str, s: &SourceSection) -> Result<HttpEndpoint, CliError> {
    endpoint(role, &s.url, s.timeout_secs, s.retries)
}

fn open(role: &str, path: Option<&Path>) -> Result<BufReader<File>, CliError> {
    let path = path.ok_or_else(|| CliError::Input(format!("{role}: kind = \"file\" needs a path")))?;
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("cannot open {role} file {}: {e}", path.display())))
}

fn info(role: &str, id: &str, kind: &str) -> BackendInfo {
    BackendInfo {
        role: role.into(),
        id: id.into(),
        kind: kind.into(),
        version: None,
    }
}

fn id_or(s: &str, fallback: &str) -> String {
    if s.is_empty() {
        fallback.to_string()
    } else {
        s.to_string()
    }
}

fn build_entailment(cfg: &Config) -> Result<(Box<dyn EntailmentBackend>, BackendInfo), CliError> {
    let e = &cfg.entailment;
    let backend: Box<dyn EntailmentBackend> = match e.kind {
        EntailmentKind::Mock => {
            let path = e
                .oracle
                .as_deref()
                .ok_or_else(|| CliError::Input("entailment: kind = \"mock\" needs an oracle path".into()))?;
            Box::new(load_oracle(&e.id, path)?)
        }
        EntailmentKind::Remote => {
            let ep = endpoint("entailment", &e.url, e.timeout_secs, e.retries)?;
            Box::new(RemoteNli::new(&e.id, ep, e.batch_size, e.max_premise_chars))
        }
        EntailmentKind::Instruct => {
            let ep = endpoint("entailment", &e.url, e.timeout_secs, e.retries)?;
            let prompt = match &e.prompt_template {
                Some(t) => InstructPrompt::new(t.clone()).map_err(|err| CliError::Input(format!("entailment: {err}")))?,
                None => InstructPrompt::default(),
            };
            Box::new(InstructNli::new(RemoteDecoder::new(&e.id, ep), prompt).with_capacity(e.max_premise_chars))
        }
    };
    let kind = serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let backend: Box<dyn EntailmentBackend> = if e.cache { Box::new(CachedBackend::new(backend)) } else { backend };
    Ok((backend, info("entailment", &e.id, &kind)))
}

/// Backends needed by `detect`.
pub fn build_runtime(cfg: &Config) -> Result<Runtime, CliError> {
    let mut infos = Vec::new();
    let (entailment, i) = build_entailment(cfg)?;
    infos.push(i);

    let q = &cfg.qasrl;
    let qid = id_or(&q.id, "qasrl");
    let qasrl: Box<dyn QasrlBackend> = match q.kind {
        SourceKind::File => Box::new(
            FileQasrl::from_reader(&qid, open("qasrl", q.path.as_deref())?)
                .map_err(|e| CliError::Input(format!("qasrl file: {e}")))?,
        ),
        SourceKind::Remote => Box::new(RemoteQasrl::new(&qid, source_endpoint("qasrl", q)?)),
        SourceKind::None => return Err(CliError::Input("qasrl: a parser source is required".into())),
    };
    infos.push(info("qasrl", &qid, kind_name(q.kind)));

    let f = &cfg.fill_mask;
    let fid = id_or(&f.id, "fill_mask");
    let fill_mask: Option<Box<dyn FillMaskBackend>> = match f.kind {
        SourceKind::Remote => Some(Box::new(RemoteFillMask::new(&fid, source_endpoint("fill_mask", f)?, &f.mask_token))),
        SourceKind::File => return Err(CliError::Input("fill_mask: only \"remote\" or \"none\" are supported".into())),
        SourceKind::None => None,
    };
    if fill_mask.is_some() {
        infos.push(info("fill_mask", &fid, kind_name(f.kind)));
    }

    let phrases = build_phrases(&cfg.phrases)?;
    if let Some(p) = &phrases {
        infos.push(info("phrases", p.id(), kind_name(cfg.phrases.kind)));
    }
    Ok(Runtime {
        entailment,
        qasrl,
        fill_mask,
        phrases,
        info: infos,
    })
}

pub fn build_phrases(p: &SourceSection) -> Result<Option<Box<dyn PhraseProvider>>, CliError> {
    let pid = id_or(&p.id, "phrases");
    Ok(match p.kind {
        SourceKind::File => Some(Box::new(
            FilePhrases::from_reader(&pid, open("phrases", p.path.as_deref())?)
                .map_err(|e| CliError::Input(format!("phrases file: {e}")))?,
        )),
        SourceKind::Remote => Some(Box::new(RemotePhrases::new(&pid, source_endpoint("phrases", p)?))),
        SourceKind::None => None,
    })
}

fn kind_name(k: SourceKind) -> &'static str {
    match k {
        SourceKind::None => "none",
        SourceKind::File => "file",
        SourceKind::Remote => "remote",
    }
}
