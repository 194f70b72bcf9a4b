//! Token-indexed documents, spans with syntactic heads, and entity clusters.
//!
//! All token indices are global across the document. Per-sentence indices are
//! derived from the sentence offsets and never stored.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Range, RangeInclusive};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid span [{start}, {end}) with head {head}")]
    InvalidSpan { start: usize, end: usize, head: usize },
    #[error("token index {index} out of bounds for a document of {len} tokens")]
    TokenOutOfBounds { index: usize, len: usize },
    #[error("sentence index {index} out of bounds for a document of {len} sentences")]
    SentenceOutOfBounds { index: usize, len: usize },
    #[error("sentence {0} has no tokens")]
    EmptySentence(usize),
    #[error("mention [{start}, {end}) of cluster {cc_id} lies outside the document ({len} tokens)")]
    MentionOutOfBounds {
        cc_id: ClusterId,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("cluster {cc_id} lists mention [{start}, {end}) more than once")]
    DuplicateMention {
        cc_id: ClusterId,
        start: usize,
        end: usize,
    },
    #[error("span [{start}, {end}) crosses a sentence boundary")]
    CrossSentence { start: usize, end: usize },
}

/// Half-open token range `[start, end)` with the index of its syntactic head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawSpan")]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub head: usize,
}

#[derive(Deserialize)]
struct RawSpan {
    start: usize,
    end: usize,
    #[serde(default)]
    head: Option<usize>,
}

impl TryFrom<RawSpan> for Span {
    type Error = ModelError;

    fn try_from(raw: RawSpan) -> Result<Self, Self::Error> {
        match raw.head {
            Some(head) => Span::new(raw.start, raw.end, head),
            None => {
                log::warn!(
                    "span [{}, {}) has no head index; using its last token",
                    raw.start,
                    raw.end
                );
                Span::with_last_head(raw.start, raw.end)
            }
        }
    }
}

impl Span {
    pub fn new(start: usize, end: usize, head: usize) -> Result<Self, ModelError> {
        if start < end && (start..end).contains(&head) {
            Ok(Span { start, end, head })
        } else {
            Err(ModelError::InvalidSpan { start, end, head })
        }
    }

    /// Span whose head is its last token, for inputs that carry no head.
    pub fn with_last_head(start: usize, end: usize) -> Result<Self, ModelError> {
        if end == 0 {
            return Err(ModelError::InvalidSpan { start, end, head: 0 });
        }
        Span::new(start, end, end - 1)
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn tokens(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn contains_token(&self, index: usize) -> bool {
        self.tokens().contains(&index)
    }

    pub fn intersection_len(&self, other: &Span) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        hi.saturating_sub(lo)
    }

    /// Nonempty token intersection.
    pub fn overlaps(&self, other: &Span) -> bool {
        self.intersection_len(other) > 0
    }

    pub fn same_extent(&self, other: &Span) -> bool {
        self.start == other.start && self.end == other.end
    }

    pub fn shifted(&self, offset: usize) -> Span {
        Span {
            start: self.start + offset,
            end: self.end + offset,
            head: self.head + offset,
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}) h={}", self.start, self.end, self.head)
    }
}

/// Tokenwise intersection over union.
pub fn iou(a: &Span, b: &Span) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// `max(1[head(a) == head(m)], iou(a, m))`.
pub fn span_match_score(a: &Span, m: &Span) -> f64 {
    if a.head == m.head {
        1.0
    } else {
        iou(a, m)
    }
}

/// Cluster identifier. Accepts JSON strings or integers; integer-like ids
/// order numerically, everything else lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClusterId(pub String);

impl ClusterId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for ClusterId {
    fn from(s: &str) -> Self {
        ClusterId(s.to_string())
    }
}

impl From<i64> for ClusterId {
    fn from(n: i64) -> Self {
        ClusterId(n.to_string())
    }
}

impl fmt::Display for ClusterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Ord for ClusterId {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0.parse::<i64>(), other.0.parse::<i64>()) {
            (Ok(a), Ok(b)) => a.cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Ok(_), Err(_)) => Ordering::Less,
            (Err(_), Ok(_)) => Ordering::Greater,
            (Err(_), Err(_)) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for ClusterId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for ClusterId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ClusterId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Str(String),
        }
        Ok(match Repr::deserialize(deserializer)? {
            Repr::Int(n) => ClusterId(n.to_string()),
            Repr::Str(s) => ClusterId(s),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub span: Span,
    pub cc_id: ClusterId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityCluster {
    pub cc_id: ClusterId,
    pub mentions: Vec<Span>,
}

impl EntityCluster {
    pub fn new(cc_id: impl Into<ClusterId>, mentions: Vec<Span>) -> Self {
        EntityCluster {
            cc_id: cc_id.into(),
            mentions,
        }
    }

    pub fn iter_mentions(&self) -> impl Iterator<Item = Mention> + '_ {
        self.mentions.iter().map(|span| Mention {
            span: *span,
            cc_id: self.cc_id.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub index: usize,
    pub tokens: Vec<String>,
}

impl Sentence {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }
}

/// A pre-tokenized document with its coreference clusters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDocument", into = "RawDocument")]
pub struct Document {
    doc_id: String,
    sentences: Vec<Sentence>,
    clusters: Vec<EntityCluster>,
    // offsets[i] = global index of sentence i's first token; one extra
    // trailing entry holds the total token count.
    offsets: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    doc_id: String,
    sentences: Vec<Vec<String>>,
    #[serde(default)]
    clusters: Vec<EntityCluster>,
}

impl TryFrom<RawDocument> for Document {
    type Error = ModelError;

    fn try_from(raw: RawDocument) -> Result<Self, Self::Error> {
        Document::new(raw.doc_id, raw.sentences, raw.clusters)
    }
}

impl From<Document> for RawDocument {
    fn from(doc: Document) -> Self {
        RawDocument {
            doc_id: doc.doc_id,
            sentences: doc.sentences.into_iter().map(|s| s.tokens).collect(),
            clusters: doc.clusters,
        }
    }
}

impl Document {
    pub fn new(
        doc_id: impl Into<String>,
        sentences: Vec<Vec<String>>,
        clusters: Vec<EntityCluster>,
    ) -> Result<Self, ModelError> {
        let mut offsets = Vec::with_capacity(sentences.len() + 1);
        let mut total = 0;
        let mut built = Vec::with_capacity(sentences.len());
        for (index, tokens) in sentences.into_iter().enumerate() {
            if tokens.is_empty() {
                return Err(ModelError::EmptySentence(index));
            }
            offsets.push(total);
            total += tokens.len();
            built.push(Sentence { index, tokens });
        }
        offsets.push(total);

        for cluster in &clusters {
            let mut seen = std::collections::HashSet::new();
            for m in &cluster.mentions {
                if m.end > total {
                    return Err(ModelError::MentionOutOfBounds {
                        cc_id: cluster.cc_id.clone(),
                        start: m.start,
                        end: m.end,
                        len: total,
                    });
                }
                if !seen.insert((m.start, m.end)) {
                    return Err(ModelError::DuplicateMention {
                        cc_id: cluster.cc_id.clone(),
                        start: m.start,
                        end: m.end,
                    });
                }
            }
        }

        Ok(Document {
            doc_id: doc_id.into(),
            sentences: built,
            clusters,
            offsets,
        })
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn clusters(&self) -> &[EntityCluster] {
        &self.clusters
    }

    pub fn num_sentences(&self) -> usize {
        self.sentences.len()
    }

    pub fn num_tokens(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn token(&self, index: usize) -> Result<&str, ModelError> {
        let (s, local) = self.to_local(index)?;
        Ok(&self.sentences[s].tokens[local])
    }

    /// Global index of the first token of `sentence`.
    pub fn sentence_offset(&self, sentence: usize) -> Result<usize, ModelError> {
        self.check_sentence(sentence)?;
        Ok(self.offsets[sentence])
    }

    /// Global token range covered by `sentence`.
    pub fn sentence_tokens(&self, sentence: usize) -> Result<Range<usize>, ModelError> {
        self.check_sentence(sentence)?;
        Ok(self.offsets[sentence]..self.offsets[sentence + 1])
    }

    /// Global token range covered by an inclusive range of sentences.
    pub fn sentences_tokens(&self, range: &RangeInclusive<usize>) -> Result<Range<usize>, ModelError> {
        let first = self.sentence_tokens(*range.start())?;
        let last = self.sentence_tokens(*range.end())?;
        Ok(first.start..last.end)
    }

    pub fn sentence_of(&self, token_index: usize) -> Result<usize, ModelError> {
        if token_index >= self.num_tokens() {
            return Err(ModelError::TokenOutOfBounds {
                index: token_index,
                len: self.num_tokens(),
            });
        }
        // offsets is sorted; the containing sentence is the last offset <= index.
        let pos = self.offsets.partition_point(|&o| o <= token_index);
        Ok(pos - 1)
    }

    pub fn to_global(&self, sentence: usize, local: usize) -> Result<usize, ModelError> {
        let range = self.sentence_tokens(sentence)?;
        let global = range.start + local;
        if global >= range.end {
            return Err(ModelError::TokenOutOfBounds {
                index: local,
                len: range.len(),
            });
        }
        Ok(global)
    }

    /// (sentence index, index within the sentence)
    pub fn to_local(&self, token_index: usize) -> Result<(usize, usize), ModelError> {
        let s = self.sentence_of(token_index)?;
        Ok((s, token_index - self.offsets[s]))
    }

    pub fn check_span(&self, span: &Span) -> Result<(), ModelError> {
        if span.end > self.num_tokens() {
            return Err(ModelError::TokenOutOfBounds {
                index: span.end - 1,
                len: self.num_tokens(),
            });
        }
        Ok(())
    }

    /// Sentence containing the whole span; an error when it crosses a boundary.
    pub fn sentence_of_span(&self, span: &Span) -> Result<usize, ModelError> {
        let first = self.sentence_of(span.start)?;
        let last = self.sentence_of(span.end - 1)?;
        if first != last {
            return Err(ModelError::CrossSentence {
                start: span.start,
                end: span.end,
            });
        }
        Ok(first)
    }

    pub fn span_text(&self, span: &Span) -> Result<String, ModelError> {
        self.check_span(span)?;
        let words: Vec<&str> = span
            .tokens()
            .map(|i| self.token(i))
            .collect::<Result<_, _>>()?;
        Ok(words.join(" "))
    }

    pub fn sentence_text(&self, sentence: usize) -> Result<String, ModelError> {
        self.check_sentence(sentence)?;
        Ok(self.sentences[sentence].text())
    }

    /// Space-joined text of an inclusive sentence range.
    pub fn window_text(&self, range: &RangeInclusive<usize>) -> Result<String, ModelError> {
        self.check_sentence(*range.end())?;
        Ok(self.sentences[*range.start()..=*range.end()]
            .iter()
            .map(Sentence::text)
            .collect::<Vec<_>>()
            .join(" "))
    }

    pub fn text(&self) -> String {
        self.sentences
            .iter()
            .map(Sentence::text)
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn mentions(&self) -> Vec<Mention> {
        self.clusters.iter().flat_map(|c| c.iter_mentions()).collect()
    }

    fn check_sentence(&self, sentence: usize) -> Result<(), ModelError> {
        if sentence >= self.sentences.len() {
            Err(ModelError::SentenceOutOfBounds {
                index: sentence,
                len: self.sentences.len(),
            })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sp(start: usize, end: usize, head: usize) -> Span {
        Span::new(start, end, head).unwrap()
    }

    fn doc_with_lengths(lengths: &[usize]) -> Document {
        let sentences = lengths
            .iter()
            .enumerate()
            .map(|(s, &n)| (0..n).map(|t| format!("w{s}_{t}")).collect())
            .collect();
        Document::new("d", sentences, vec![]).unwrap()
    }

    fn token_set_iou(a: &Span, b: &Span) -> f64 {
        use std::collections::HashSet;
        let sa: HashSet<usize> = a.tokens().collect();
        let sb: HashSet<usize> = b.tokens().collect();
        sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou(&sp(3, 7, 3), &sp(3, 7, 6)), 1.0);
        let expected = token_set_iou(&sp(0, 4, 0), &sp(2, 6, 2));
        assert!((expected - 2.0 / 6.0).abs() < 1e-12);
        assert!((iou(&sp(0, 4, 0), &sp(2, 6, 2)) - expected).abs() < 1e-12);
        assert_eq!(iou(&sp(0, 2, 0), &sp(5, 8, 5)), 0.0);
    }

    #[test]
    fn match_score_examples() {
        assert_eq!(span_match_score(&sp(0, 10, 4), &sp(4, 5, 4)), 1.0);
        let s = span_match_score(&sp(0, 4, 1), &sp(2, 6, 3));
        assert!((s - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(span_match_score(&sp(0, 2, 0), &sp(5, 8, 6)), 0.0);
    }

    #[test]
    fn sentence_of_examples() {
        let doc = doc_with_lengths(&[5, 4]);
        assert_eq!(doc.sentence_of(0).unwrap(), 0);
        assert_eq!(doc.sentence_of(5).unwrap(), 1);
        assert!(matches!(
            doc.sentence_of(9),
            Err(ModelError::TokenOutOfBounds { index: 9, len: 9 })
        ));
    }

    #[test]
    fn invalid_spans_rejected() {
        assert!(Span::new(3, 3, 3).is_err());
        assert!(Span::new(3, 5, 5).is_err());
        assert!(Span::new(3, 5, 2).is_err());
    }

    #[test]
    fn missing_head_defaults_to_last_token() {
        let span: Span = serde_json::from_str(r#"{"start": 2, "end": 5}"#).unwrap();
        assert_eq!(span.head, 4);
        assert!(serde_json::from_str::<Span>(r#"{"start": 2, "end": 5, "head": 9}"#).is_err());
    }

    #[test]
    fn document_json_round_trip_and_validation() {
        let line = r#"{"doc_id":"d1","sentences":[["A","b","."],["C","d"]],"clusters":[{"cc_id":7,"mentions":[{"start":0,"end":1,"head":0},{"start":3,"end":4,"head":3}]}]}"#;
        let doc: Document = serde_json::from_str(line).unwrap();
        assert_eq!(doc.num_tokens(), 5);
        assert_eq!(doc.clusters()[0].cc_id, ClusterId::from("7"));
        assert_eq!(doc.window_text(&(0..=1)).unwrap(), "A b . C d");
        let back: Document = serde_json::from_str(&serde_json::to_string(&doc).unwrap()).unwrap();
        assert_eq!(back, doc);

        let bad = r#"{"doc_id":"d","sentences":[["a"]],"clusters":[{"cc_id":"x","mentions":[{"start":0,"end":2,"head":0}]}]}"#;
        assert!(serde_json::from_str::<Document>(bad).is_err());
        let empty = r#"{"doc_id":"d","sentences":[["a"],[]]}"#;
        assert!(serde_json::from_str::<Document>(empty).is_err());
        let dup = r#"{"doc_id":"d","sentences":[["a","b"]],"clusters":[{"cc_id":1,"mentions":[{"start":0,"end":1,"head":0},{"start":0,"end":1,"head":0}]}]}"#;
        assert!(serde_json::from_str::<Document>(dup).is_err());
    }

    #[test]
    fn cross_sentence_spans_detected() {
        let doc = doc_with_lengths(&[3, 3]);
        assert_eq!(doc.sentence_of_span(&sp(3, 5, 4)).unwrap(), 1);
        assert!(doc.sentence_of_span(&sp(2, 4, 2)).is_err());
    }

    #[test]
    fn cluster_ids_order_numerically() {
        let mut ids: Vec<ClusterId> = vec!["10".into(), "9".into(), "b".into(), "a".into()];
        ids.sort();
        let names: Vec<&str> = ids.iter().map(|c| c.as_str()).collect();
        assert_eq!(names, ["9", "10", "a", "b"]);
    }

    fn arb_span() -> impl Strategy<Value = Span> {
        (0usize..30, 1usize..8)
            .prop_flat_map(|(start, len)| (Just(start), Just(len), 0..len))
            .prop_map(|(start, len, h)| Span::new(start, start + len, start + h).unwrap())
    }

    proptest! {
        #[test]
        fn iou_is_symmetric(a in arb_span(), b in arb_span()) {
            prop_assert_eq!(iou(&a, &b), iou(&b, &a));
            prop_assert!((iou(&a, &b) - token_set_iou(&a, &b)).abs() < 1e-12);
        }

        #[test]
        fn match_score_dominates_iou(a in arb_span(), b in arb_span()) {
            prop_assert_eq!(span_match_score(&a, &a), 1.0);
            prop_assert!(span_match_score(&a, &b) >= iou(&a, &b));
        }

        #[test]
        fn sentence_of_inverts_local_to_global(lengths in proptest::collection::vec(1usize..6, 1..8)) {
            let doc = doc_with_lengths(&lengths);
            for (s, &n) in lengths.iter().enumerate() {
                for local in 0..n {
                    let g = doc.to_global(s, local).unwrap();
                    prop_assert_eq!(doc.sentence_of(g).unwrap(), s);
                    prop_assert_eq!(doc.to_local(g).unwrap(), (s, local));
                }
            }
            let prefix: usize = lengths.iter().sum();
            prop_assert!(doc.sentence_of(prefix).is_err());
        }
    }
}
