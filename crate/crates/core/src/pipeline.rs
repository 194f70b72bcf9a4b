//! Local-argument verification, candidate scoring and argument selection.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::backend::BackendError;
use crate::candidates::{
    append_demoted, context_window, extract_candidates, Candidate, CandidateSource, ExtractionError,
    PhraseProvider, WindowConfig,
};
use crate::entailment::{EntailmentBackend, EntailmentError, EntailmentRequest, Probe};
use crate::hypothesis::{
    assign_fields, candidate_hypotheses, iobj_gap_hypothesis, local_preposition, realize, select_preposition,
    transitivity_expansion, FillMaskBackend, Filler, Hypothesis, HypothesisFields, LocalArgument,
};
use crate::model::{Document, ModelError, Span};
use crate::qasrl::{PosKind, QasrlBackend, QasrlRequest};
use crate::question::{GrammaticalAttributes, SyntacticPosition};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateInstance {
    pub doc_id: String,
    pub predicate_token: usize,
    #[serde(default)]
    pub pos_kind: PosKind,
    /// Verbal form used in hypotheses; empty means "take it from the parser".
    #[serde(default)]
    pub verbal_lemma: String,
    /// Pre-specified candidate spans; when absent the phrase provider is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Span>>,
}

impl PredicateInstance {
    pub fn id(&self) -> String {
        format!("{}:{}", self.doc_id, self.predicate_token)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub candidate_threshold: f64,
    pub local_verification_threshold: f64,
    pub window: WindowConfig,
    /// Score a `something` direct-object variant alongside each hypothesis,
    /// folded into its position's maximum.
    pub transitivity_expansion: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            candidate_threshold: 0.5,
            local_verification_threshold: 0.5,
            window: WindowConfig::default(),
            transitivity_expansion: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{name} must lie in [0, 1], got {value}")]
    Threshold { name: &'static str, value: f64 },
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("candidate_threshold", self.candidate_threshold),
            ("local_verification_threshold", self.local_verification_threshold),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::Threshold { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
pub struct Backends<'a> {
    pub entailment: &'a dyn EntailmentBackend,
    pub qasrl: &'a dyn QasrlBackend,
    pub fill_mask: Option<&'a dyn FillMaskBackend>,
    pub phrases: Option<&'a dyn PhraseProvider>,
}

#[derive(Debug, thiserror::Error)]
pub enum DetectError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("predicate belongs to document {predicate} but {document} was given")]
    DocumentMismatch { predicate: String, document: String },
    #[error("QA-SRL backend failed: {0}")]
    Qasrl(BackendError),
    #[error("entailment backend failed: {0}")]
    Entailment(#[from] EntailmentError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
}

impl DetectError {
    /// Failures caused by an unreachable or misbehaving backend.
    pub fn is_backend(&self) -> bool {
        match self {
            DetectError::Qasrl(_) | DetectError::Entailment(_) => true,
            DetectError::Extraction(ExtractionError::Backend(_)) => true,
            _ => false,
        }
    }
}

/// Identifies the predicate whose hypotheses are being scored.
#[derive(Debug, Clone, Copy)]
pub struct ProbeContext<'a> {
    pub doc_id: &'a str,
    pub predicate_token: usize,
}

impl ProbeContext<'_> {
    fn probe(&self, span: &Span, position: SyntacticPosition) -> Probe {
        Probe {
            doc_id: self.doc_id.to_string(),
            predicate_token: self.predicate_token,
            start: span.start,
            end: span.end,
            position,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warnings {
    /// Entailment responses that were not a Yes/No answer, scored as 0.
    pub invalid_responses: usize,
    pub messages: Vec<String>,
}

impl Warnings {
    fn push(&mut self, msg: String) {
        log::warn!("{msg}");
        self.messages.push(msg);
    }

    pub fn is_empty(&self) -> bool {
        self.invalid_responses == 0 && self.messages.is_empty()
    }
}

/// Probability of a batch item; invalid responses count as 0.
fn probability(r: &Result<crate::entailment::EntailmentScore, EntailmentError>, warnings: &mut Warnings) -> Result<f64, EntailmentError> {
    match r {
        Ok(s) => Ok(s.probability),
        Err(EntailmentError::InvalidResponse(m)) => {
            warnings.invalid_responses += 1;
            log::warn!("invalid entailment response scored as 0: {m}");
            Ok(0.0)
        }
        Err(e) => Err(e.clone()),
    }
}

/// Hypotheses checking a local argument on its own: the intransitive reading
/// and a transitive one with a placeholder in the free SUBJ or DOBJ slot.
pub fn singleton_hypotheses(lemma: &str, local: &LocalArgument) -> Vec<HypothesisFields> {
    let attrs = local.question.grammatical_attributes();
    let bare = HypothesisFields::new(lemma, attrs).with(
        local.position,
        local.filler(),
        local.preposition.as_deref(),
    );
    let transitive = match local.position {
        SyntacticPosition::Dobj => bare.clone().with(SyntacticPosition::Subj, Filler::Someone, None),
        _ => bare.clone().with(SyntacticPosition::Dobj, Filler::Something, None),
    };
    vec![bare.normalized(), transitive.normalized()]
}

/// Scores each local argument against its sentence, keeps the top survivor per
/// position and returns the others as candidates.
///
/// An argument survives when its score is not below `threshold`; ties within a
/// position go to the earlier argument.
pub fn verify_local_arguments(
    sentence: &str,
    lemma: &str,
    locals: Vec<LocalArgument>,
    ctx: ProbeContext<'_>,
    backend: &dyn EntailmentBackend,
    threshold: f64,
    warnings: &mut Warnings,
) -> Result<(Vec<LocalArgument>, Vec<Candidate>), EntailmentError> {
    let mut requests = Vec::new();
    let mut owner = Vec::new();
    for (i, l) in locals.iter().enumerate() {
        for fields in singleton_hypotheses(lemma, l) {
            requests.push(
                EntailmentRequest::new(sentence, realize(&fields)).with_probe(ctx.probe(&l.span, l.position)),
            );
            owner.push(i);
        }
    }
    let results = backend.score_batch(&requests);
    let mut scores = vec![0.0f64; locals.len()];
    for (r, &i) in results.iter().zip(&owner) {
        scores[i] = scores[i].max(probability(r, warnings)?);
    }

    let mut best: BTreeMap<SyntacticPosition, usize> = BTreeMap::new();
    for (i, l) in locals.iter().enumerate() {
        if scores[i] < threshold {
            continue;
        }
        match best.get(&l.position) {
            Some(&j) if scores[j] >= scores[i] => {}
            _ => {
                best.insert(l.position, i);
            }
        }
    }
    let mut kept = Vec::new();
    let mut demoted = Vec::new();
    for (i, mut l) in locals.into_iter().enumerate() {
        l.verification_score = scores[i];
        if best.get(&l.position) == Some(&i) {
            kept.push(l);
        } else {
            demoted.push(Candidate {
                span: l.span,
                text: l.text,
                source: CandidateSource::DemotedLocal,
            });
        }
    }
    Ok((kept, demoted))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateVerdict {
    pub candidate: Candidate,
    /// None when every hypothesis failed to score.
    pub best_position: Option<SyntacticPosition>,
    pub best_score: f64,
    pub per_position_scores: BTreeMap<SyntacticPosition, f64>,
    pub accepted: bool,
    pub best_hypothesis_text: String,
    #[serde(default)]
    pub unscored: bool,
    #[serde(default)]
    pub failed_hypotheses: usize,
}

impl CandidateVerdict {
    /// Re-applies a threshold to the stored scores.
    pub fn accepted_at(&self, threshold: f64) -> bool {
        !self.unscored && self.best_score > threshold
    }
}

/// Highest-scoring position; ties go to the earlier of SUBJ, DOBJ, IOBJ.
pub fn best_position(scores: &BTreeMap<SyntacticPosition, f64>) -> Option<(SyntacticPosition, f64)> {
    let mut best: Option<(SyntacticPosition, f64)> = None;
    for (&pos, &s) in scores {
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((pos, s));
        }
    }
    best
}

/// A verdict built from per-position scores alone.
pub fn verdict_from_scores(
    candidate: Candidate,
    per_position_scores: BTreeMap<SyntacticPosition, f64>,
    threshold: f64,
) -> CandidateVerdict {
    let best = best_position(&per_position_scores);
    CandidateVerdict {
        candidate,
        best_position: best.map(|b| b.0),
        best_score: best.map_or(0.0, |b| b.1),
        accepted: best.is_some_and(|b| b.1 > threshold),
        per_position_scores,
        best_hypothesis_text: String::new(),
        unscored: best.is_none(),
        failed_hypotheses: 0,
    }
}

/// Candidate hypotheses (and expansions) for one candidate.
pub fn scoring_variants(
    fields: &HypothesisFields,
    candidate: &Candidate,
    iobj_prep: Option<&str>,
    expand: bool,
) -> Vec<Hypothesis> {
    let mut out = Vec::new();
    for h in candidate_hypotheses(fields, candidate, iobj_prep) {
        let extra = if expand {
            transitivity_expansion(&h.fields, h.candidate_position)
        } else {
            None
        };
        let pos = h.candidate_position;
        out.push(h);
        if let Some(f) = extra {
            out.push(Hypothesis {
                text: realize(&f),
                fields: f,
                candidate_position: pos,
                candidate: Some(candidate.clone()),
            });
        }
    }
    out
}

/// Scores a candidate at every position and applies the threshold.
#[allow(clippy::too_many_arguments)]
pub fn score_candidate(
    premise: &str,
    fields: &HypothesisFields,
    candidate: &Candidate,
    iobj_prep: Option<&str>,
    ctx: ProbeContext<'_>,
    backend: &dyn EntailmentBackend,
    cfg: &PipelineConfig,
    warnings: &mut Warnings,
) -> (CandidateVerdict, Option<Hypothesis>) {
    let variants = scoring_variants(fields, candidate, iobj_prep, cfg.transitivity_expansion);
    let requests: Vec<EntailmentRequest> = variants
        .iter()
        .map(|h| {
            let pos = h.candidate_position.expect("candidate variants carry a position");
            EntailmentRequest::new(premise, h.text.clone()).with_probe(ctx.probe(&candidate.span, pos))
        })
        .collect();
    let results = backend.score_batch(&requests);

    let mut per_position: BTreeMap<SyntacticPosition, f64> = BTreeMap::new();
    let mut best_variant: BTreeMap<SyntacticPosition, usize> = BTreeMap::new();
    let mut failed = 0;
    for (i, (h, r)) in variants.iter().zip(&results).enumerate() {
        let pos = h.candidate_position.expect("candidate variants carry a position");
        match probability(r, warnings) {
            Ok(p) => {
                if per_position.get(&pos).map_or(true, |&b| p > b) {
                    per_position.insert(pos, p);
                    best_variant.insert(pos, i);
                }
            }
            Err(e) => {
                failed += 1;
                warnings.push(format!("hypothesis {:?} for {:?} failed: {e}", h.text, candidate.text));
            }
        }
    }
    let mut verdict = verdict_from_scores(candidate.clone(), per_position, cfg.candidate_threshold);
    verdict.failed_hypotheses = failed;
    let best = verdict
        .best_position
        .and_then(|p| best_variant.get(&p))
        .map(|&i| variants[i].clone());
    if let Some(h) = &best {
        verdict.best_hypothesis_text = h.text.clone();
    }
    (verdict, best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub predicate: PredicateInstance,
    pub local_arguments: Vec<LocalArgument>,
    pub cross_arguments: Vec<CandidateVerdict>,
    pub all_verdicts: Vec<CandidateVerdict>,
    pub propositions: Vec<Hypothesis>,
    /// No local argument supplied grammatical attributes; defaults were used.
    #[serde(default)]
    pub default_attributes: bool,
    /// The verb was inflected by regular rules rather than the irregular table.
    #[serde(default)]
    pub inflected_by_rule: bool,
    #[serde(default)]
    pub warnings: Warnings,
}

impl DetectionResult {
    /// Local arguments plus accepted candidates.
    pub fn predicted_arguments(&self) -> Vec<Span> {
        self.local_arguments
            .iter()
            .map(|l| l.span)
            .chain(self.cross_arguments.iter().map(|v| v.candidate.span))
            .collect()
    }

    /// Predicted arguments under a different candidate threshold.
    pub fn predicted_at(&self, threshold: f64) -> Vec<Span> {
        self.local_arguments
            .iter()
            .map(|l| l.span)
            .chain(
                self.all_verdicts
                    .iter()
                    .filter(|v| v.accepted_at(threshold))
                    .map(|v| v.candidate.span),
            )
            .collect()
    }
}

fn fallback_lemma(doc: &Document, predicate_token: usize) -> Result<String, ModelError> {
    Ok(doc.token(predicate_token)?.to_lowercase())
}

/// Runs the full flow for one predicate.
pub fn detect(
    doc: &Document,
    predicate: &PredicateInstance,
    cfg: &PipelineConfig,
    backends: Backends<'_>,
) -> Result<DetectionResult, DetectError> {
    cfg.validate()?;
    if predicate.doc_id != doc.doc_id() {
        return Err(DetectError::DocumentMismatch {
            predicate: predicate.doc_id.clone(),
            document: doc.doc_id().to_string(),
        });
    }
    let mut warnings = Warnings::default();
    let (sentence, local_index) = doc.to_local(predicate.predicate_token)?;
    let ctx = ProbeContext {
        doc_id: &predicate.doc_id,
        predicate_token: predicate.predicate_token,
    };

    let request = QasrlRequest {
        doc_id: predicate.doc_id.clone(),
        sentence_index: sentence,
        tokens: doc.sentences()[sentence].tokens.clone(),
        predicate_index: local_index,
        pos_kind: predicate.pos_kind,
    };
    let answers = backends.qasrl.parse(&request).map_err(DetectError::Qasrl)?;

    let mut lemma = predicate.verbal_lemma.trim().to_lowercase();
    if lemma.is_empty() {
        lemma = answers
            .iter()
            .find_map(|a| a.verbal_lemma.as_ref().map(|l| l.trim().to_lowercase()))
            .filter(|l| !l.is_empty())
            .map_or_else(|| fallback_lemma(doc, predicate.predicate_token), Ok)?;
    }

    let mut locals = Vec::new();
    let mut parser_spans = Vec::new();
    let mut unmapped = Vec::new();
    for a in answers {
        let span = match a.global_span(doc, sentence) {
            Ok(s) => s,
            Err(e) => {
                warnings.push(format!("skipping parser answer {}..{}: {e}", a.start, a.end));
                continue;
            }
        };
        parser_spans.push(span);
        let text = doc.span_text(&span)?;
        match a.question.syntactic_position() {
            Ok(position) => {
                let preposition = match position {
                    SyntacticPosition::Iobj | SyntacticPosition::Adj => local_preposition(doc, &span, &a.question),
                    _ => None,
                };
                locals.push(LocalArgument {
                    span,
                    text,
                    question: a.question,
                    position,
                    preposition,
                    verification_score: 0.0,
                });
            }
            Err(e) => {
                warnings.push(format!("demoting {text:?}: {e}"));
                unmapped.push(Candidate {
                    span,
                    text,
                    source: CandidateSource::DemotedLocal,
                });
            }
        }
    }

    let sentence_text = doc.sentence_text(sentence)?;
    let (kept, mut demoted) = verify_local_arguments(
        &sentence_text,
        &lemma,
        locals,
        ctx,
        backends.entailment,
        cfg.local_verification_threshold,
        &mut warnings,
    )?;
    demoted.extend(unmapped);
    demoted.retain(|d| !kept.iter().any(|k| k.span.same_extent(&d.span)));

    let fields = assign_fields(&lemma, &kept);
    let base_realization = crate::hypothesis::realize_with_meta(&fields);

    let window = context_window(doc, predicate.predicate_token, &cfg.window)?;
    let mut candidates = extract_candidates(
        doc,
        &window,
        &parser_spans,
        predicate.candidates.as_deref(),
        backends.phrases,
    )?;
    append_demoted(&mut candidates, demoted);
    let premise = doc.window_text(&window)?;

    let mut all_verdicts = Vec::with_capacity(candidates.len());
    let mut propositions = vec![Hypothesis::from_fields(fields.clone())];
    for c in &candidates {
        let prep = match backends.fill_mask {
            Some(fm) => {
                let gap = iobj_gap_hypothesis(&fields, c, fm.mask_token());
                match select_preposition(&premise, &gap, fm) {
                    Ok(p) => p,
                    Err(e) => {
                        warnings.push(format!("preposition selection failed for {:?}: {e}", c.text));
                        None
                    }
                }
            }
            None => None,
        };
        let (verdict, best) = score_candidate(
            &premise,
            &fields,
            c,
            prep.as_deref(),
            ctx,
            backends.entailment,
            cfg,
            &mut warnings,
        );
        if verdict.accepted {
            propositions.extend(best);
        }
        all_verdicts.push(verdict);
    }
    let cross_arguments = all_verdicts.iter().filter(|v| v.accepted).cloned().collect();

    let mut predicate = predicate.clone();
    predicate.verbal_lemma = lemma;
    Ok(DetectionResult {
        predicate,
        default_attributes: kept.is_empty(),
        inflected_by_rule: base_realization.inflected_by_rule,
        local_arguments: kept,
        cross_arguments,
        all_verdicts,
        propositions,
        warnings,
    })
}

/// Attributes the hypotheses of a result were realized with.
pub fn result_attributes(result: &DetectionResult) -> GrammaticalAttributes {
    result
        .propositions
        .first()
        .map(|h| h.fields.attributes)
        .unwrap_or(crate::hypothesis::DEFAULT_ATTRIBUTES)
}
