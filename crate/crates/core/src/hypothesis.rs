//! Semantic hypotheses: field assignment and English realization.
//!
//! Templates:
//!
//! ```text
//! active   SUBJ AUX VERB DOBJ IOBJ ADJ
//! passive  DOBJ AUX VERB(participle) IOBJ ADJ
//! ```
//!
//! The auxiliary chain is fixed by tense, modal, negation and voice:
//!
//! | tense   | modal | active             | passive                   |
//! |---------|-------|--------------------|---------------------------|
//! | past    | -     | left / did not leave | was given / was not given |
//! | present | -     | leaves / does not leave | is given / is not given |
//! | future  | -     | will (not) leave   | will (not) be given       |
//! | past    | might | might (not) have left | might (not) have been given |
//! | present | might | might (not) leave  | might (not) be given      |
//! | future  | might | might (not) leave  | might (not) be given      |
//!
//! A modal takes the place of `will`, so future and present coincide once a
//! modal is present. `be` agrees with the subject (`was`/`were`,
//! `am`/`is`/`are`) and so does `do`-support (`does`/`do`).

use serde::{Deserialize, Serialize};

use crate::backend::BackendError;
use crate::candidates::Candidate;
use crate::inflect::{self, Agreement};
use crate::model::{Document, Span};
use crate::question::{GrammaticalAttributes, QasrlQuestion, SyntacticPosition, Tense};

/// Attributes used when no local argument supplies a question.
pub const DEFAULT_ATTRIBUTES: GrammaticalAttributes =
    GrammaticalAttributes::new(Tense::Past, false, None);

/// Prepositions the fill-mask reranker may pick from.
pub const PREPOSITIONS: [&str; 17] = [
    "on", "at", "for", "to", "from", "about", "as", "against", "in", "with", "off", "over",
    "into", "after", "while", "before", "by",
];

/// Prepositions recognized next to a local argument in its sentence.
const CONNECTING_PREPOSITIONS: [&str; 52] = [
    "on", "at", "for", "to", "from", "about", "as", "against", "in", "with", "off", "over",
    "into", "after", "while", "before", "by", "across", "along", "amid", "among", "around",
    "behind", "below", "beneath", "beside", "between", "beyond", "despite", "down", "during",
    "except", "inside", "like", "near", "of", "onto", "out", "outside", "past", "per", "since",
    "through", "throughout", "toward", "towards", "under", "until", "up", "upon", "via", "within",
];

pub fn is_preposition(word: &str) -> bool {
    CONNECTING_PREPOSITIONS.contains(&word.to_lowercase().as_str())
}

/// A preposition is only taken if it ranks within this many vocabulary items.
pub const PREPOSITION_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "text")]
pub enum Filler {
    Someone,
    Something,
    Phrase(String),
}

impl Filler {
    pub fn phrase(text: impl Into<String>) -> Self {
        Filler::Phrase(text.into())
    }

    pub fn text(&self) -> &str {
        match self {
            Filler::Someone => "someone",
            Filler::Something => "something",
            Filler::Phrase(t) => t,
        }
    }

    pub fn is_placeholder(&self) -> bool {
        !matches!(self, Filler::Phrase(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrepPhrase {
    #[serde(default)]
    pub prep: Option<String>,
    pub filler: Filler,
}

impl PrepPhrase {
    pub fn new(prep: Option<&str>, filler: Filler) -> Self {
        PrepPhrase {
            prep: prep.map(str::to_string),
            filler,
        }
    }

    fn render(&self) -> String {
        match &self.prep {
            Some(p) if !p.is_empty() => format!("{p} {}", self.filler.text()),
            _ => self.filler.text().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Voice {
    Active,
    Passive,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HypothesisFields {
    pub verb_lemma: String,
    #[serde(default)]
    pub subj: Option<Filler>,
    #[serde(default)]
    pub dobj: Option<Filler>,
    #[serde(default)]
    pub iobj: Option<PrepPhrase>,
    #[serde(default)]
    pub adj: Option<PrepPhrase>,
    pub attributes: GrammaticalAttributes,
    pub voice: Voice,
}

impl HypothesisFields {
    /// Empty assignment; voice is settled by [`HypothesisFields::normalized`].
    pub fn new(verb_lemma: impl Into<String>, attributes: GrammaticalAttributes) -> Self {
        HypothesisFields {
            verb_lemma: verb_lemma.into(),
            subj: None,
            dobj: None,
            iobj: None,
            adj: None,
            attributes,
            voice: Voice::Active,
        }
    }

    pub fn with(mut self, position: SyntacticPosition, filler: Filler, prep: Option<&str>) -> Self {
        self.set(position, filler, prep);
        self
    }

    pub fn set(&mut self, position: SyntacticPosition, filler: Filler, prep: Option<&str>) {
        match position {
            SyntacticPosition::Subj => self.subj = Some(filler),
            SyntacticPosition::Dobj => self.dobj = Some(filler),
            SyntacticPosition::Iobj => self.iobj = Some(PrepPhrase::new(prep, filler)),
            SyntacticPosition::Adj => self.adj = Some(PrepPhrase::new(prep, filler)),
        }
    }

    pub fn get(&self, position: SyntacticPosition) -> Option<&Filler> {
        match position {
            SyntacticPosition::Subj => self.subj.as_ref(),
            SyntacticPosition::Dobj => self.dobj.as_ref(),
            SyntacticPosition::Iobj => self.iobj.as_ref().map(|p| &p.filler),
            SyntacticPosition::Adj => self.adj.as_ref().map(|p| &p.filler),
        }
    }

    pub fn clear(&mut self, position: SyntacticPosition) {
        match position {
            SyntacticPosition::Subj => self.subj = None,
            SyntacticPosition::Dobj => self.dobj = None,
            SyntacticPosition::Iobj => self.iobj = None,
            SyntacticPosition::Adj => self.adj = None,
        }
    }

    /// Settles the voice: active with a subject, passive with only a direct
    /// object, and active with a `someone` subject when both are missing.
    pub fn normalized(mut self) -> Self {
        if self.subj.is_some() {
            self.voice = Voice::Active;
        } else if self.dobj.is_some() {
            self.voice = Voice::Passive;
        } else {
            self.subj = Some(Filler::Someone);
            self.voice = Voice::Active;
        }
        self
    }

    /// Checks the voice invariants.
    pub fn is_valid(&self) -> bool {
        match self.voice {
            Voice::Active => self.subj.is_some(),
            Voice::Passive => self.dobj.is_some() && self.subj.is_none(),
        }
    }

    /// Concrete phrases in template order.
    pub fn phrases(&self) -> Vec<(SyntacticPosition, &str)> {
        let mut out = Vec::new();
        for pos in SyntacticPosition::ALL {
            if let Some(Filler::Phrase(t)) = self.get(pos) {
                out.push((pos, t.as_str()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Realization {
    pub text: String,
    /// The verb was missing from the irregular table and was inflected by
    /// the regular spelling rules.
    pub inflected_by_rule: bool,
}

/// Auxiliary chain plus main verb for the given subject agreement.
fn verb_group(lemma: &str, attrs: &GrammaticalAttributes, voice: Voice, agr: Agreement) -> Vec<String> {
    let not = attrs.negation;
    let mut out: Vec<String> = Vec::new();
    let mut push = |w: &str| out.push(w.to_string());
    match voice {
        Voice::Active => {
            if let Some(m) = attrs.modal {
                push(m.as_str());
                if not {
                    push("not");
                }
                if attrs.tense == Tense::Past {
                    push("have");
                    push(&inflect::past_participle(lemma));
                } else {
                    push(lemma);
                }
            } else {
                match attrs.tense {
                    Tense::Future => {
                        push("will");
                        if not {
                            push("not");
                        }
                        push(lemma);
                    }
                    Tense::Past if lemma == "be" => {
                        push(inflect::be_past(agr));
                        if not {
                            push("not");
                        }
                    }
                    Tense::Past if not => {
                        push("did");
                        push("not");
                        push(lemma);
                    }
                    Tense::Past => push(&inflect::past(lemma)),
                    Tense::Present if lemma == "be" => {
                        push(inflect::be_present(agr));
                        if not {
                            push("not");
                        }
                    }
                    Tense::Present if not => {
                        push(inflect::do_present(agr));
                        push("not");
                        push(lemma);
                    }
                    Tense::Present => push(&inflect::present(lemma, agr)),
                }
            }
        }
        Voice::Passive => {
            let pp = inflect::past_participle(lemma);
            if let Some(m) = attrs.modal {
                push(m.as_str());
                if not {
                    push("not");
                }
                if attrs.tense == Tense::Past {
                    push("have");
                    push("been");
                } else {
                    push("be");
                }
            } else {
                match attrs.tense {
                    Tense::Future => {
                        push("will");
                        if not {
                            push("not");
                        }
                        push("be");
                    }
                    Tense::Past => {
                        push(inflect::be_past(agr));
                        if not {
                            push("not");
                        }
                    }
                    Tense::Present => {
                        push(inflect::be_present(agr));
                        if not {
                            push("not");
                        }
                    }
                }
            }
            push(&pp);
        }
    }
    out
}

fn capitalize_first(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn realize_with_meta(fields: &HypothesisFields) -> Realization {
    let lemma = fields.verb_lemma.trim().to_lowercase();
    let someone = Filler::Someone;
    let something = Filler::Something;
    let (subject, object) = match fields.voice {
        Voice::Active => (fields.subj.as_ref().unwrap_or(&someone), fields.dobj.as_ref()),
        Voice::Passive => (fields.dobj.as_ref().unwrap_or(&something), None),
    };
    let agr = inflect::subject_agreement(subject.text());

    let mut words: Vec<String> = vec![subject.text().trim().to_string()];
    words.extend(verb_group(&lemma, &fields.attributes, fields.voice, agr));
    if let Some(o) = object {
        words.push(o.text().trim().to_string());
    }
    for pp in [&fields.iobj, &fields.adj].into_iter().flatten() {
        words.push(pp.render().trim().to_string());
    }
    let body = words
        .into_iter()
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    let mut text = capitalize_first(&body);
    let ends_with_terminal = text.ends_with(['.', '!', '?']);
    if !ends_with_terminal {
        text.push('.');
    }
    Realization {
        text,
        inflected_by_rule: !inflect::is_irregular(&lemma),
    }
}

/// Deterministic sentence for a field assignment.
pub fn realize(fields: &HypothesisFields) -> String {
    realize_with_meta(fields).text
}

/// A local, in-sentence argument with its question label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalArgument {
    pub span: Span,
    pub text: String,
    pub question: QasrlQuestion,
    pub position: SyntacticPosition,
    /// Connecting preposition found in the question or the source sentence.
    #[serde(default)]
    pub preposition: Option<String>,
    #[serde(default)]
    pub verification_score: f64,
}

impl LocalArgument {
    pub fn filler(&self) -> Filler {
        Filler::phrase(self.text.clone())
    }
}

/// Connecting preposition for a local argument: the question's preposition
/// slot, else a preposition immediately preceding the span in its sentence.
/// Spans that already begin with a preposition get none.
pub fn local_preposition(doc: &Document, span: &Span, question: &QasrlQuestion) -> Option<String> {
    if is_preposition(doc.token(span.start).ok()?) {
        return None;
    }
    let from_question = question.prep.trim().to_lowercase();
    if !from_question.is_empty() {
        return Some(from_question);
    }
    if span.start == 0 {
        return None;
    }
    let (_, local) = doc.to_local(span.start).ok()?;
    if local == 0 {
        return None;
    }
    let prev = doc.token(span.start - 1).ok()?.to_lowercase();
    is_preposition(&prev).then_some(prev)
}

/// Fields from verified local arguments: the top-scoring argument of each
/// position, attributes from the first argument's question.
pub fn assign_fields(predicate_lemma: &str, locals: &[LocalArgument]) -> HypothesisFields {
    let attributes = locals
        .first()
        .map(|l| l.question.grammatical_attributes())
        .unwrap_or(DEFAULT_ATTRIBUTES);
    let mut fields = HypothesisFields::new(predicate_lemma, attributes);
    for pos in SyntacticPosition::ALL {
        let best = locals
            .iter()
            .filter(|l| l.position == pos)
            .fold(None::<&LocalArgument>, |best, l| match best {
                Some(b) if b.verification_score >= l.verification_score => Some(b),
                _ => Some(l),
            });
        if let Some(l) = best {
            fields.set(pos, l.filler(), l.preposition.as_deref());
        }
    }
    fields.normalized()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub text: String,
    pub fields: HypothesisFields,
    #[serde(default)]
    pub candidate_position: Option<SyntacticPosition>,
    #[serde(default)]
    pub candidate: Option<Candidate>,
}

impl Hypothesis {
    pub fn from_fields(fields: HypothesisFields) -> Self {
        Hypothesis {
            text: realize(&fields),
            fields,
            candidate_position: None,
            candidate: None,
        }
    }
}

/// Fields with the candidate placed at `position`, overriding whatever was
/// there.
pub fn place_candidate(
    fields: &HypothesisFields,
    candidate: &Candidate,
    position: SyntacticPosition,
    prep: Option<&str>,
) -> HypothesisFields {
    let mut placed = fields.clone();
    if position == SyntacticPosition::Subj && placed.voice == Voice::Passive {
        placed.voice = Voice::Active;
    }
    placed.set(position, Filler::phrase(candidate.text.clone()), prep);
    placed.normalized()
}

/// The candidate in SUBJ, DOBJ and IOBJ, in that order.
pub fn candidate_hypotheses(
    fields: &HypothesisFields,
    candidate: &Candidate,
    iobj_prep: Option<&str>,
) -> Vec<Hypothesis> {
    SyntacticPosition::CANDIDATE
        .iter()
        .map(|&pos| {
            let prep = (pos == SyntacticPosition::Iobj).then_some(iobj_prep).flatten();
            let placed = place_candidate(fields, candidate, pos, prep);
            Hypothesis {
                text: realize(&placed),
                fields: placed,
                candidate_position: Some(pos),
                candidate: Some(candidate.clone()),
            }
        })
        .collect()
}

/// An extra field set with `something` as direct object, forcing the
/// transitive reading. None when DOBJ is taken, the fields are passive, or the
/// candidate itself goes to DOBJ.
pub fn transitivity_expansion(
    fields: &HypothesisFields,
    candidate_position: Option<SyntacticPosition>,
) -> Option<HypothesisFields> {
    if fields.dobj.is_some()
        || fields.voice == Voice::Passive
        || candidate_position == Some(SyntacticPosition::Dobj)
    {
        return None;
    }
    let mut expanded = fields.clone();
    expanded.dobj = Some(Filler::Something);
    Some(expanded.normalized())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPrediction {
    pub token: String,
    pub probability: f64,
}

/// Masked language model ranking the vocabulary for a single mask slot.
pub trait FillMaskBackend: Send + Sync {
    fn id(&self) -> &str;

    fn mask_token(&self) -> &str {
        "[MASK]"
    }

    /// The `top_k` most probable fillers for the mask in `text`.
    fn predict(&self, text: &str, top_k: usize) -> Result<Vec<MaskPrediction>, BackendError>;
}

/// Highest-probability listed preposition among the top ten fillers of the
/// mask in `hypothesis_with_gap`, read with the document as left context.
pub fn select_preposition(
    doc_text: &str,
    hypothesis_with_gap: &str,
    backend: &dyn FillMaskBackend,
) -> Result<Option<String>, BackendError> {
    let mask = backend.mask_token();
    let slots = hypothesis_with_gap.matches(mask).count();
    if slots != 1 {
        return Err(BackendError::InvalidInput(format!(
            "hypothesis must contain exactly one {mask} slot, found {slots}"
        )));
    }
    let input = format!("{doc_text} {hypothesis_with_gap}");
    let mut ranked = backend.predict(&input, PREPOSITION_TOP_K)?;
    ranked.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    Ok(ranked
        .iter()
        .take(PREPOSITION_TOP_K)
        .map(|p| p.token.trim().to_lowercase())
        .find(|t| PREPOSITIONS.contains(&t.as_str())))
}

/// The IOBJ variant with the mask token standing in for its preposition.
pub fn iobj_gap_hypothesis(fields: &HypothesisFields, candidate: &Candidate, mask: &str) -> String {
    realize(&place_candidate(fields, candidate, SyntacticPosition::Iobj, Some(mask)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::CandidateSource;
    use crate::question::Modal;

    fn cand(text: &str) -> Candidate {
        Candidate {
            span: Span::new(0, 1, 0).unwrap(),
            text: text.into(),
            source: CandidateSource::ProvidedList,
        }
    }

    fn local(text: &str, question: &str, pos: SyntacticPosition, prep: Option<&str>, score: f64) -> LocalArgument {
        LocalArgument {
            span: Span::new(0, 1, 0).unwrap(),
            text: text.into(),
            question: question.parse().unwrap(),
            position: pos,
            preposition: prep.map(str::to_string),
            verification_score: score,
        }
    }

    fn past() -> GrammaticalAttributes {
        GrammaticalAttributes::new(Tense::Past, false, None)
    }

    #[test]
    fn realize_examples() {
        let f = HypothesisFields::new("increase", past())
            .with(SyntacticPosition::Subj, Filler::phrase("salaries"), None)
            .normalized();
        assert_eq!(realize(&f), "Salaries increased.");

        let f = HypothesisFields::new("increase", past())
            .with(SyntacticPosition::Subj, Filler::phrase("the board"), None)
            .with(SyntacticPosition::Dobj, Filler::phrase("the salaries"), None)
            .normalized();
        assert_eq!(realize(&f), "The board increased the salaries.");

        let f = HypothesisFields::new("give", GrammaticalAttributes::new(Tense::Past, false, Some(Modal::Might)))
            .with(SyntacticPosition::Dobj, Filler::phrase("the award"), None)
            .normalized();
        assert_eq!(f.voice, Voice::Passive);
        assert_eq!(realize(&f), "The award might have been given.");
    }

    #[test]
    fn agreement_and_negation() {
        let present = GrammaticalAttributes::new(Tense::Present, false, None);
        let f = HypothesisFields::new("leave", present)
            .with(SyntacticPosition::Subj, Filler::phrase("the boats"), None)
            .normalized();
        assert_eq!(realize(&f), "The boats leave.");
        let f = HypothesisFields::new("leave", GrammaticalAttributes { negation: true, ..present })
            .with(SyntacticPosition::Subj, Filler::phrase("the boat"), None)
            .normalized();
        assert_eq!(realize(&f), "The boat does not leave.");
        let f = HypothesisFields::new("give", GrammaticalAttributes::new(Tense::Past, true, None))
            .with(SyntacticPosition::Dobj, Filler::phrase("the awards"), None)
            .normalized();
        assert_eq!(realize(&f), "The awards were not given.");
    }

    #[test]
    fn assign_fields_examples() {
        let locals = vec![
            local("the boat", "Who left?", SyntacticPosition::Subj, None, 0.9),
            local("the day of the bombing", "When did someone leave?", SyntacticPosition::Adj, Some("on"), 0.8),
        ];
        let f = assign_fields("leave", &locals);
        assert_eq!(f.voice, Voice::Active);
        assert_eq!(f.subj, Some(Filler::phrase("the boat")));
        assert_eq!(realize(&f), "The boat left on the day of the bombing.");

        let f = assign_fields("pay", &[local("the salaries", "What was paid?", SyntacticPosition::Dobj, None, 0.9)]);
        assert_eq!(f.voice, Voice::Passive);
        assert_eq!(realize(&f), "The salaries were paid.");

        let f = assign_fields("present", &[]);
        assert_eq!(f.subj, Some(Filler::Someone));
        assert_eq!(f.attributes, DEFAULT_ATTRIBUTES);
        assert_eq!(realize(&f), "Someone presented.");
    }

    #[test]
    fn assign_fields_keeps_top_scoring_per_position() {
        let locals = vec![
            local("the crew", "Who left?", SyntacticPosition::Subj, None, 0.6),
            local("the boat", "Who left?", SyntacticPosition::Subj, None, 0.9),
        ];
        assert_eq!(assign_fields("leave", &locals).subj, Some(Filler::phrase("the boat")));
    }

    #[test]
    fn candidate_variants() {
        let base = assign_fields(
            "leave",
            &[
                local("the boat", "Who left?", SyntacticPosition::Subj, None, 0.9),
                local("the day of the bombing", "When did someone leave?", SyntacticPosition::Adj, Some("on"), 0.9),
            ],
        );
        let hs = candidate_hypotheses(&base, &cand("the house"), None);
        assert_eq!(hs.len(), 3);
        assert_eq!(hs[0].text, "The house left on the day of the bombing.");
        assert_eq!(hs[1].text, "The boat left the house on the day of the bombing.");
        assert_eq!(hs[2].text, "The boat left the house on the day of the bombing.");
        let hs = candidate_hypotheses(&base, &cand("the port"), Some("for"));
        assert_eq!(hs[2].text, "The boat left for the port on the day of the bombing.");
        assert_eq!(hs[2].candidate_position, Some(SyntacticPosition::Iobj));
    }

    #[test]
    fn passive_fields_become_active_with_a_subject_candidate() {
        let base = assign_fields("pay", &[local("the salaries", "What was paid?", SyntacticPosition::Dobj, None, 0.9)]);
        let hs = candidate_hypotheses(&base, &cand("the board"), Some("to"));
        assert_eq!(hs[0].text, "The board paid the salaries.");
        assert_eq!(hs[1].text, "The board was paid.");
        assert_eq!(hs[2].text, "The salaries were paid to the board.");
    }

    #[test]
    fn expansion_rules() {
        let f = HypothesisFields::new("increase", past())
            .with(SyntacticPosition::Subj, Filler::phrase("salaries"), None)
            .normalized();
        let e = transitivity_expansion(&f, Some(SyntacticPosition::Subj)).unwrap();
        assert_eq!(e.dobj, Some(Filler::Something));
        assert_eq!(realize(&e), "Salaries increased something.");
        assert!(transitivity_expansion(&f, Some(SyntacticPosition::Dobj)).is_none());

        let occupied = f.clone().with(SyntacticPosition::Dobj, Filler::phrase("x"), None);
        assert!(transitivity_expansion(&occupied, None).is_none());
        let passive = HypothesisFields::new("give", past())
            .with(SyntacticPosition::Dobj, Filler::phrase("the award"), None)
            .normalized();
        assert!(transitivity_expansion(&passive, None).is_none());
    }

    struct Ranked(Vec<(&'static str, f64)>);

    impl FillMaskBackend for Ranked {
        fn id(&self) -> &str {
            "ranked"
        }
        fn predict(&self, text: &str, top_k: usize) -> Result<Vec<MaskPrediction>, BackendError> {
            assert!(text.starts_with("Doc text."));
            assert!(top_k >= PREPOSITION_TOP_K);
            Ok(self
                .0
                .iter()
                .map(|(t, p)| MaskPrediction { token: t.to_string(), probability: *p })
                .collect())
        }
    }

    fn ranking(words: &[&'static str]) -> Ranked {
        let n = words.len() as f64;
        Ranked(words.iter().enumerate().map(|(i, w)| (*w, (n - i as f64) / (n * n))).collect())
    }

    #[test]
    fn preposition_reranker() {
        let mut words = vec!["the", "of", "to", "a", "and", "his", "it", "that", "this", "her", "their", "for"];
        let backend = ranking(&words);
        let got = select_preposition("Doc text.", "The boat left [MASK] the port.", &backend).unwrap();
        assert_eq!(got.as_deref(), Some("to"));

        words.retain(|w| *w != "to");
        let backend = ranking(&words);
        assert_eq!(select_preposition("Doc text.", "x [MASK] y", &backend).unwrap(), None);

        assert!(select_preposition("Doc text.", "no slot", &backend).is_err());
        assert!(select_preposition("Doc text.", "[MASK] [MASK]", &backend).is_err());
    }

    #[test]
    fn gap_hypothesis_carries_the_mask() {
        let base = HypothesisFields::new("leave", past())
            .with(SyntacticPosition::Subj, Filler::phrase("the boat"), None)
            .normalized();
        assert_eq!(iobj_gap_hypothesis(&base, &cand("the port"), "[MASK]"), "The boat left [MASK] the port.");
    }

    #[test]
    fn local_preposition_sources() {
        let doc = Document::new(
            "d",
            vec!["The boat left on the day".split(' ').map(String::from).collect()],
            vec![],
        )
        .unwrap();
        let q: QasrlQuestion = "When did something leave?".parse().unwrap();
        let day = Span::new(4, 6, 5).unwrap();
        assert_eq!(local_preposition(&doc, &day, &q).as_deref(), Some("on"));
        let on_day = Span::new(3, 6, 5).unwrap();
        assert_eq!(local_preposition(&doc, &on_day, &q), None);
        let q2: QasrlQuestion = "Who did someone give something to?".parse().unwrap();
        assert_eq!(local_preposition(&doc, &Span::new(0, 2, 1).unwrap(), &q2).as_deref(), Some("to"));
    }
}
