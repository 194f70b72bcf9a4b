//! Candidate phrases and the sentence window the search runs in.

use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use crate::backend::BackendError;
use crate::model::{Document, ModelError, Span};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    NounPhrase,
    NamedEntity,
    ProvidedList,
    DemotedLocal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub span: Span,
    pub text: String,
    pub source: CandidateSource,
}

impl Candidate {
    pub fn from_span(doc: &Document, span: Span, source: CandidateSource) -> Result<Self, ModelError> {
        Ok(Candidate {
            span,
            text: doc.span_text(&span)?,
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub sentences_before: usize,
    pub sentences_after: usize,
    pub enabled: bool,
}

impl WindowConfig {
    pub const fn new(sentences_before: usize, sentences_after: usize) -> Self {
        WindowConfig {
            sentences_before,
            sentences_after,
            enabled: true,
        }
    }

    pub const fn disabled() -> Self {
        WindowConfig {
            sentences_before: 0,
            sentences_after: 0,
            enabled: false,
        }
    }
}

impl Default for WindowConfig {
    /// Five sentences before the predicate and one after.
    fn default() -> Self {
        WindowConfig::new(5, 1)
    }
}

/// Inclusive sentence range searched for a predicate.
pub fn context_window(
    doc: &Document,
    predicate_token: usize,
    cfg: &WindowConfig,
) -> Result<RangeInclusive<usize>, ModelError> {
    let sp = doc.sentence_of(predicate_token)?;
    let last = doc.num_sentences() - 1;
    if !cfg.enabled {
        return Ok(0..=last);
    }
    Ok(sp.saturating_sub(cfg.sentences_before)..=(sp + cfg.sentences_after).min(last))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhraseKind {
    NounPhrase,
    NamedEntity,
}

impl From<PhraseKind> for CandidateSource {
    fn from(kind: PhraseKind) -> Self {
        match kind {
            PhraseKind::NounPhrase => CandidateSource::NounPhrase,
            PhraseKind::NamedEntity => CandidateSource::NamedEntity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phrase {
    pub span: Span,
    pub kind: PhraseKind,
}

/// Supplies noun phrases and named entities for a range of sentences.
pub trait PhraseProvider: Send + Sync {
    fn id(&self) -> &str;

    fn phrases(
        &self,
        doc: &Document,
        sentences: RangeInclusive<usize>,
    ) -> Result<Vec<Phrase>, BackendError>;
}

#[derive(Debug, thiserror::Error)]
pub enum ExtractionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("phrase provider failed: {0}")]
    Backend(#[from] BackendError),
    #[error("no candidate list was provided and no phrase provider is configured")]
    NoSource,
}

/// Candidates inside `window` that share no token with any local argument,
/// ordered by `(start, end)`.
///
/// With `provided` spans (a pre-specified candidate list) the provider is not
/// consulted.
pub fn extract_candidates(
    doc: &Document,
    window: &RangeInclusive<usize>,
    local_args: &[Span],
    provided: Option<&[Span]>,
    provider: Option<&dyn PhraseProvider>,
) -> Result<Vec<Candidate>, ExtractionError> {
    let bounds = doc.sentences_tokens(window)?;
    let raw: Vec<(Span, CandidateSource)> = match (provided, provider) {
        (Some(spans), _) => spans
            .iter()
            .map(|s| (*s, CandidateSource::ProvidedList))
            .collect(),
        (None, Some(p)) => p
            .phrases(doc, window.clone())?
            .into_iter()
            .map(|ph| (ph.span, ph.kind.into()))
            .collect(),
        (None, None) => return Err(ExtractionError::NoSource),
    };

    let mut sorted = raw;
    sorted.sort_by_key(|(s, src)| (s.start, s.end, *src));
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (span, source) in sorted {
        if span.start < bounds.start || span.end > bounds.end {
            continue;
        }
        if local_args.iter().any(|l| l.overlaps(&span)) {
            continue;
        }
        if !seen.insert((span.start, span.end)) {
            continue;
        }
        out.push(Candidate::from_span(doc, span, source)?);
    }
    Ok(out)
}

/// Appends demoted local arguments after the extracted candidates, skipping
/// any whose extent is already present.
pub fn append_demoted(candidates: &mut Vec<Candidate>, demoted: Vec<Candidate>) {
    let mut demoted = demoted;
    demoted.sort_by_key(|c| (c.span.start, c.span.end));
    for mut d in demoted {
        if candidates.iter().any(|c| c.span.same_extent(&d.span)) {
            continue;
        }
        d.source = CandidateSource::DemotedLocal;
        candidates.push(d);
    }
}
