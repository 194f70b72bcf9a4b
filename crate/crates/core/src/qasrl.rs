//! QA-SRL parser contract and file-backed providers.

use std::collections::HashMap;
use std::io::BufRead;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::backend::BackendError;
use crate::candidates::{Phrase, PhraseKind, PhraseProvider};
use crate::model::{Document, Span};
use crate::question::QasrlQuestion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PosKind {
    #[default]
    Verb,
    Nominalization,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QasrlRequest {
    pub doc_id: String,
    pub sentence_index: usize,
    pub tokens: Vec<String>,
    /// Index within `tokens`.
    pub predicate_index: usize,
    pub pos_kind: PosKind,
}

/// One answer with sentence-local token offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QasrlAnswer {
    pub start: usize,
    pub end: usize,
    #[serde(default)]
    pub head: Option<usize>,
    pub question: QasrlQuestion,
    #[serde(default)]
    pub verbal_lemma: Option<String>,
}

impl QasrlAnswer {
    /// The answer as a global span of `doc`, given its sentence.
    pub fn global_span(&self, doc: &Document, sentence: usize) -> Result<Span, crate::model::ModelError> {
        let start = doc.to_global(sentence, self.start)?;
        let end = start + (self.end.saturating_sub(self.start));
        let head = match self.head {
            Some(h) => doc.to_global(sentence, h)?,
            None => end.saturating_sub(1),
        };
        let span = Span::new(start, end, head)?;
        doc.check_span(&span)?;
        if doc.sentence_of_span(&span)? != sentence {
            return Err(crate::model::ModelError::CrossSentence { start, end });
        }
        Ok(span)
    }
}

pub trait QasrlBackend: Send + Sync {
    fn id(&self) -> &str;

    fn parse(&self, req: &QasrlRequest) -> Result<Vec<QasrlAnswer>, BackendError>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParseRecord {
    doc_id: String,
    sentence_index: usize,
    predicate_index: usize,
    answers: Vec<QasrlAnswer>,
}

/// Precomputed parser output, one JSON record per predicate:
/// `{doc_id, sentence_index, predicate_index, answers}`.
#[derive(Debug, Clone, Default)]
pub struct FileQasrl {
    id: String,
    parses: HashMap<(String, usize, usize), Vec<QasrlAnswer>>,
}

impl FileQasrl {
    pub fn from_reader(id: impl Into<String>, reader: impl BufRead) -> Result<Self, BackendError> {
        let mut parses = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| BackendError::Transport(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ParseRecord = serde_json::from_str(&line)
                .map_err(|e| BackendError::Protocol(format!("line {}: {e}", n + 1)))?;
            parses.insert((rec.doc_id, rec.sentence_index, rec.predicate_index), rec.answers);
        }
        Ok(FileQasrl { id: id.into(), parses })
    }

    pub fn insert(&mut self, doc_id: &str, sentence: usize, predicate: usize, answers: Vec<QasrlAnswer>) {
        self.parses.insert((doc_id.to_string(), sentence, predicate), answers);
    }

    pub fn new(id: impl Into<String>) -> Self {
        FileQasrl {
            id: id.into(),
            parses: HashMap::new(),
        }
    }
}

impl QasrlBackend for FileQasrl {
    fn id(&self) -> &str {
        &self.id
    }

    /// Predicates without a record have no local arguments.
    fn parse(&self, req: &QasrlRequest) -> Result<Vec<QasrlAnswer>, BackendError> {
        Ok(self
            .parses
            .get(&(req.doc_id.clone(), req.sentence_index, req.predicate_index))
            .cloned()
            .unwrap_or_default())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PhraseRecord {
    doc_id: String,
    phrases: Vec<Phrase>,
}

/// Precomputed noun phrases per document: `{doc_id, phrases: [{span, kind}]}`
/// with global spans.
#[derive(Debug, Clone, Default)]
pub struct FilePhrases {
    id: String,
    by_doc: HashMap<String, Vec<Phrase>>,
}

impl FilePhrases {
    pub fn new(id: impl Into<String>) -> Self {
        FilePhrases {
            id: id.into(),
            by_doc: HashMap::new(),
        }
    }

    pub fn from_reader(id: impl Into<String>, reader: impl BufRead) -> Result<Self, BackendError> {
        let mut out = FilePhrases::new(id);
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| BackendError::Transport(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PhraseRecord = serde_json::from_str(&line)
                .map_err(|e| BackendError::Protocol(format!("line {}: {e}", n + 1)))?;
            out.by_doc.entry(rec.doc_id).or_default().extend(rec.phrases);
        }
        Ok(out)
    }

    pub fn insert(&mut self, doc_id: &str, span: Span, kind: PhraseKind) {
        self.by_doc
            .entry(doc_id.to_string())
            .or_default()
            .push(Phrase { span, kind });
    }
}

impl PhraseProvider for FilePhrases {
    fn id(&self) -> &str {
        &self.id
    }

    fn phrases(&self, doc: &Document, sentences: RangeInclusive<usize>) -> Result<Vec<Phrase>, BackendError> {
        let bounds = doc
            .sentences_tokens(&sentences)
            .map_err(|e| BackendError::InvalidInput(e.to_string()))?;
        Ok(self
            .by_doc
            .get(doc.doc_id())
            .map(|ps| {
                ps.iter()
                    .filter(|p| p.span.start >= bounds.start && p.span.end <= bounds.end)
                    .cloned()
                    .collect()
            })
            .unwrap_or_default())
    }
}
