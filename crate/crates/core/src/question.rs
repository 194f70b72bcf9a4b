//! QA-SRL question analysis.
//!
//! A question is held in its seven-slot form
//! `WH AUX SUBJ VERB OBJ PREP OBJ2`. The slot in which the Wh-word leaves a
//! gap decides the argument's syntactic position; the auxiliary and verb
//! slots carry tense, modality and negation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::inflect;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QuestionError {
    #[error("cannot parse question {question:?}: {reason}")]
    Parse { question: String, reason: String },
    #[error("question {0:?} does not map to a syntactic position")]
    Unmapped(String),
    #[error("invalid question: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WhWord {
    Who,
    What,
    When,
    Where,
    Why,
    How,
    HowMuch,
}

impl WhWord {
    pub fn as_str(self) -> &'static str {
        match self {
            WhWord::Who => "who",
            WhWord::What => "what",
            WhWord::When => "when",
            WhWord::Where => "where",
            WhWord::Why => "why",
            WhWord::How => "how",
            WhWord::HowMuch => "how much",
        }
    }

    pub fn is_adjunct(self) -> bool {
        !matches!(self, WhWord::Who | WhWord::What)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placeholder {
    Someone,
    Something,
}

impl Placeholder {
    pub fn as_str(self) -> &'static str {
        match self {
            Placeholder::Someone => "someone",
            Placeholder::Something => "something",
        }
    }

    fn parse(token: &str) -> Option<Placeholder> {
        match token {
            "someone" | "somebody" => Some(Placeholder::Someone),
            "something" => Some(Placeholder::Something),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SyntacticPosition {
    #[serde(rename = "SUBJ")]
    Subj,
    #[serde(rename = "DOBJ")]
    Dobj,
    #[serde(rename = "IOBJ")]
    Iobj,
    #[serde(rename = "ADJ")]
    Adj,
}

impl SyntacticPosition {
    pub const ALL: [SyntacticPosition; 4] = [
        SyntacticPosition::Subj,
        SyntacticPosition::Dobj,
        SyntacticPosition::Iobj,
        SyntacticPosition::Adj,
    ];
    /// Positions a cross-sentence candidate is tried in, in tie-break order.
    pub const CANDIDATE: [SyntacticPosition; 3] = [
        SyntacticPosition::Subj,
        SyntacticPosition::Dobj,
        SyntacticPosition::Iobj,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SyntacticPosition::Subj => "SUBJ",
            SyntacticPosition::Dobj => "DOBJ",
            SyntacticPosition::Iobj => "IOBJ",
            SyntacticPosition::Adj => "ADJ",
        }
    }
}

impl fmt::Display for SyntacticPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tense {
    Past,
    Present,
    Future,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modal {
    May,
    Should,
    Would,
    Can,
    Might,
}

impl Modal {
    pub const ALL: [Modal; 5] = [Modal::May, Modal::Should, Modal::Would, Modal::Can, Modal::Might];

    pub fn as_str(self) -> &'static str {
        match self {
            Modal::May => "may",
            Modal::Should => "should",
            Modal::Would => "would",
            Modal::Can => "can",
            Modal::Might => "might",
        }
    }

    fn from_aux(token: &str) -> Option<Modal> {
        match token {
            "may" => Some(Modal::May),
            "should" | "shouldn't" => Some(Modal::Should),
            "would" | "wouldn't" => Some(Modal::Would),
            "can" | "can't" | "cannot" => Some(Modal::Can),
            "might" | "mightn't" => Some(Modal::Might),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrammaticalAttributes {
    pub tense: Tense,
    pub negation: bool,
    #[serde(default)]
    pub modal: Option<Modal>,
}

impl GrammaticalAttributes {
    pub const fn new(tense: Tense, negation: bool, modal: Option<Modal>) -> Self {
        GrammaticalAttributes {
            tense,
            negation,
            modal,
        }
    }
}

impl Default for GrammaticalAttributes {
    fn default() -> Self {
        GrammaticalAttributes::new(Tense::Present, false, None)
    }
}

/// A QA-SRL question in slot form.
///
/// `verb` holds the whole verb group, e.g. `"have left"`, `"not leave"` or
/// `"been given"`; its last token is the inflected main verb.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "QuestionRepr")]
pub struct QasrlQuestion {
    pub wh: WhWord,
    #[serde(default)]
    pub aux: String,
    #[serde(default)]
    pub subj: Option<Placeholder>,
    pub verb: String,
    #[serde(default)]
    pub obj: Option<Placeholder>,
    #[serde(default)]
    pub prep: String,
    #[serde(default)]
    pub obj2: Option<Placeholder>,
    #[serde(default)]
    pub is_passive: bool,
}

#[derive(Deserialize)]
struct QuestionSlots {
    wh: WhWord,
    #[serde(default)]
    aux: String,
    #[serde(default)]
    subj: Option<Placeholder>,
    verb: String,
    #[serde(default)]
    obj: Option<Placeholder>,
    #[serde(default)]
    prep: String,
    #[serde(default)]
    obj2: Option<Placeholder>,
    #[serde(default)]
    is_passive: bool,
}

/// Questions arrive either as slot objects or as flat strings.
#[derive(Deserialize)]
#[serde(untagged)]
enum QuestionRepr {
    Text(String),
    Slots(QuestionSlots),
}

impl TryFrom<QuestionRepr> for QasrlQuestion {
    type Error = QuestionError;

    fn try_from(repr: QuestionRepr) -> Result<Self, Self::Error> {
        match repr {
            QuestionRepr::Text(s) => s.parse(),
            QuestionRepr::Slots(s) => {
                let q = QasrlQuestion {
                    wh: s.wh,
                    aux: s.aux,
                    subj: s.subj,
                    verb: s.verb,
                    obj: s.obj,
                    prep: s.prep,
                    obj2: s.obj2,
                    is_passive: s.is_passive,
                };
                q.validate()?;
                Ok(q)
            }
        }
    }
}

const AUXILIARIES: &[&str] = &[
    "did", "does", "do", "was", "were", "is", "are", "am", "has", "have", "had", "will",
    "would", "might", "may", "can", "could", "should", "must", "didn't", "doesn't", "don't",
    "wasn't", "weren't", "isn't", "aren't", "hasn't", "haven't", "hadn't", "won't",
    "wouldn't", "can't", "cannot", "couldn't", "shouldn't", "mightn't", "mustn't",
];
const BE_FORMS: &[&str] = &[
    "was", "were", "is", "are", "am", "be", "been", "being", "wasn't", "weren't", "isn't",
    "aren't",
];
const VERB_GROUP_PREFIX: &[&str] = &["not", "n't", "have", "has", "had", "be", "been", "being"];
const PAST_AUX: &[&str] = &[
    "did", "was", "were", "had", "didn't", "wasn't", "weren't", "hadn't", "has", "have",
    "hasn't", "haven't",
];
const PRESENT_AUX: &[&str] = &[
    "does", "do", "is", "are", "am", "doesn't", "don't", "isn't", "aren't",
];

impl QasrlQuestion {
    /// Active question with no placeholders or preposition.
    pub fn simple(wh: WhWord, aux: &str, verb: &str) -> Self {
        QasrlQuestion {
            wh,
            aux: aux.to_string(),
            subj: None,
            verb: verb.to_string(),
            obj: None,
            prep: String::new(),
            obj2: None,
            is_passive: false,
        }
    }

    pub fn validate(&self) -> Result<(), QuestionError> {
        if self.verb.trim().is_empty() {
            return Err(QuestionError::Invalid("empty verb slot".into()));
        }
        Ok(())
    }

    fn aux_tokens(&self) -> Vec<String> {
        self.aux.split_whitespace().map(str::to_lowercase).collect()
    }

    fn verb_tokens(&self) -> Vec<String> {
        self.verb.split_whitespace().map(str::to_lowercase).collect()
    }

    /// The inflected main verb (last token of the verb group).
    pub fn main_verb(&self) -> &str {
        self.verb.split_whitespace().last().unwrap_or("")
    }

    /// Maps the Wh-gap to a syntactic position. Passive gaps are mapped back
    /// to their deep (active) slot.
    pub fn syntactic_position(&self) -> Result<SyntacticPosition, QuestionError> {
        if self.wh.is_adjunct() {
            return Ok(SyntacticPosition::Adj);
        }
        let prep_gap = !self.prep.trim().is_empty() && self.obj2.is_none();
        if self.is_passive {
            if self.subj.is_none() {
                return Ok(SyntacticPosition::Dobj);
            }
            if prep_gap {
                return Ok(SyntacticPosition::Iobj);
            }
        } else {
            if self.subj.is_none() {
                return Ok(SyntacticPosition::Subj);
            }
            if prep_gap {
                return Ok(SyntacticPosition::Iobj);
            }
            if self.obj.is_none() {
                return Ok(SyntacticPosition::Dobj);
            }
        }
        Err(QuestionError::Unmapped(self.to_string()))
    }

    /// Tense, modality and negation read from the auxiliary and verb slots.
    pub fn grammatical_attributes(&self) -> GrammaticalAttributes {
        let aux = self.aux_tokens();
        let verb = self.verb_tokens();
        let negation = aux
            .iter()
            .chain(verb.iter())
            .any(|t| t == "not" || t.ends_with("n't") || t == "cannot");
        let modal = aux.iter().find_map(|t| Modal::from_aux(t));

        let tense = if aux.iter().any(|t| t == "will" || t == "won't") {
            Tense::Future
        } else if aux.iter().any(|t| PAST_AUX.contains(&t.as_str())) {
            Tense::Past
        } else if aux.iter().any(|t| PRESENT_AUX.contains(&t.as_str())) {
            Tense::Present
        } else if verb.iter().any(|t| t == "have" || t == "has" || t == "had") {
            Tense::Past
        } else if aux.is_empty() && verb.len() == 1 && inflect::is_past_form(&verb[0]) {
            Tense::Past
        } else {
            Tense::Present
        };
        GrammaticalAttributes {
            tense,
            negation,
            modal,
        }
    }
}

pub fn syntactic_position_of(q: &QasrlQuestion) -> Result<SyntacticPosition, QuestionError> {
    q.syntactic_position()
}

pub fn grammatical_attributes(q: &QasrlQuestion) -> GrammaticalAttributes {
    q.grammatical_attributes()
}

impl fmt::Display for QasrlQuestion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut words: Vec<&str> = vec![self.wh.as_str()];
        if !self.aux.is_empty() {
            words.push(&self.aux);
        }
        if let Some(p) = self.subj {
            words.push(p.as_str());
        }
        words.push(&self.verb);
        if let Some(p) = self.obj {
            words.push(p.as_str());
        }
        if !self.prep.is_empty() {
            words.push(&self.prep);
        }
        if let Some(p) = self.obj2 {
            words.push(p.as_str());
        }
        let text = words.join(" ");
        let mut chars = text.chars();
        match chars.next() {
            Some(c) => write!(f, "{}{}?", c.to_uppercase(), chars.as_str()),
            None => Ok(()),
        }
    }
}

impl FromStr for QasrlQuestion {
    type Err = QuestionError;

    /// Thin parser for flat question strings such as
    /// `"Who did someone give something to?"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cleaned = s.trim().trim_end_matches('?').trim();
        let tokens: Vec<String> = cleaned
            .split_whitespace()
            .map(str::to_lowercase)
            .collect();
        // "Who had something?" reads "had" as the main verb, not an auxiliary.
        parse_slots(&tokens, true)
            .or_else(|_| parse_slots(&tokens, false))
            .map_err(|reason| QuestionError::Parse {
                question: s.to_string(),
                reason: reason.to_string(),
            })
    }
}

fn parse_slots(tokens: &[String], allow_aux: bool) -> Result<QasrlQuestion, &'static str> {
    let mut i = 0;
    let wh = match tokens.first().map(String::as_str) {
        Some("who") => WhWord::Who,
        Some("what") => WhWord::What,
        Some("when") => WhWord::When,
        Some("where") => WhWord::Where,
        Some("why") => WhWord::Why,
        Some("how") if tokens.get(1).map(String::as_str) == Some("much") => {
            i += 1;
            WhWord::HowMuch
        }
        Some("how") => WhWord::How,
        _ => return Err("missing or unknown wh-word"),
    };
    i += 1;

    let mut aux = String::new();
    if let Some(t) = tokens.get(i) {
        if allow_aux && AUXILIARIES.contains(&t.as_str()) && i + 1 < tokens.len() {
            aux = t.clone();
            i += 1;
            if tokens.get(i).map(String::as_str) == Some("n't") {
                aux.push_str("n't");
                i += 1;
            }
        }
    }

    let subj = tokens.get(i).and_then(|t| Placeholder::parse(t));
    if subj.is_some() {
        i += 1;
    }

    let mut verb_group = Vec::new();
    while let Some(t) = tokens.get(i) {
        if VERB_GROUP_PREFIX.contains(&t.as_str()) && i + 1 < tokens.len() {
            verb_group.push(t.clone());
            i += 1;
        } else {
            break;
        }
    }
    match tokens.get(i) {
        Some(t) if Placeholder::parse(t).is_none() => {
            verb_group.push(t.clone());
            i += 1;
        }
        _ => return Err("missing verb"),
    }

    let obj = tokens.get(i).and_then(|t| Placeholder::parse(t));
    if obj.is_some() {
        i += 1;
    }
    let mut prep = Vec::new();
    while let Some(t) = tokens.get(i) {
        if Placeholder::parse(t).is_some() {
            break;
        }
        prep.push(t.clone());
        i += 1;
    }
    let obj2 = tokens.get(i).and_then(|t| Placeholder::parse(t));
    if obj2.is_some() {
        i += 1;
    }
    if i != tokens.len() {
        return Err("trailing tokens after the second object");
    }

    let main = verb_group.last().cloned().unwrap_or_default();
    let be_marked = BE_FORMS.contains(&aux.as_str())
        || verb_group[..verb_group.len() - 1]
            .iter()
            .any(|t| BE_FORMS.contains(&t.as_str()));
    let is_passive = be_marked && !main.ends_with("ing") && inflect::is_participle_form(&main);

    Ok(QasrlQuestion {
        wh,
        aux,
        subj,
        verb: verb_group.join(" "),
        obj,
        prep: prep.join(" "),
        obj2,
        is_passive,
    })
}

/// Renders an active question whose gap sits at `position` and whose
/// auxiliary and verb slots encode `attrs`. Used to emit question labels
/// that parse back to the same position and attributes.
pub fn render_question(
    position: SyntacticPosition,
    attrs: &GrammaticalAttributes,
    lemma: &str,
) -> QasrlQuestion {
    // SUBJ questions keep declarative order; all others invert the auxiliary.
    let inverted = position != SyntacticPosition::Subj;
    let (aux, verb) = question_verb_slots(attrs, lemma, inverted);
    let mut q = QasrlQuestion::simple(WhWord::Who, &aux, &verb);
    match position {
        SyntacticPosition::Subj => {}
        SyntacticPosition::Dobj => {
            q.wh = WhWord::What;
            q.subj = Some(Placeholder::Someone);
        }
        SyntacticPosition::Iobj => {
            q.subj = Some(Placeholder::Someone);
            q.obj = Some(Placeholder::Something);
            q.prep = "to".into();
        }
        SyntacticPosition::Adj => {
            q.wh = WhWord::Where;
            q.subj = Some(Placeholder::Someone);
        }
    }
    q
}

fn question_verb_slots(attrs: &GrammaticalAttributes, lemma: &str, inverted: bool) -> (String, String) {
    let neg = attrs.negation;
    if let Some(m) = attrs.modal {
        let rest = match (attrs.tense, neg) {
            (Tense::Past, true) => format!("not have {}", inflect::past_participle(lemma)),
            (Tense::Past, false) => format!("have {}", inflect::past_participle(lemma)),
            (_, true) => format!("not {lemma}"),
            (_, false) => lemma.to_string(),
        };
        return (m.as_str().to_string(), rest);
    }
    match (attrs.tense, neg) {
        (Tense::Future, false) => ("will".into(), lemma.into()),
        (Tense::Future, true) => ("won't".into(), lemma.into()),
        (Tense::Past, true) => ("didn't".into(), lemma.into()),
        (Tense::Present, true) => ("doesn't".into(), lemma.into()),
        (Tense::Past, false) if inverted => ("did".into(), lemma.into()),
        (Tense::Present, false) if inverted => ("does".into(), lemma.into()),
        (Tense::Past, false) => (String::new(), inflect::past(lemma)),
        (Tense::Present, false) => (String::new(), inflect::third_person(lemma)),
    }
}
