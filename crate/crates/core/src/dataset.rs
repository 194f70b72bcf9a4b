//! Builds sentence/proposition entailment pairs from QA-SRL annotations.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::candidates::PhraseProvider;
use crate::hypothesis::{local_preposition, realize, Filler, HypothesisFields, PrepPhrase};
use crate::model::{Document, Span};
use crate::question::{GrammaticalAttributes, QasrlQuestion, SyntacticPosition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Entailed,
    NotEntailed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PositiveSubset,
    NegativeSwap,
    NegativeInsertion,
}

impl Provenance {
    pub const ALL: [Provenance; 3] = [
        Provenance::PositiveSubset,
        Provenance::NegativeSwap,
        Provenance::NegativeInsertion,
    ];

    pub fn label(self) -> Label {
        match self {
            Provenance::PositiveSubset => Label::Entailed,
            _ => Label::NotEntailed,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// A phrase placed in a hypothesis, with its sentence-local source span.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotMeta {
    pub position: SyntacticPosition,
    pub text: String,
    pub start: usize,
    pub end: usize,
    pub gold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleMeta {
    pub verbal_lemma: String,
    pub attributes: GrammaticalAttributes,
    pub slots: Vec<SlotMeta>,
    /// The object position exchanged with SUBJ in a swap.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swapped_with: Option<SyntacticPosition>,
    /// Slots of the positive the negative was derived from.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub source_slots: Vec<SlotMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NliExample {
    pub premise: String,
    pub hypothesis: String,
    pub label: Label,
    pub provenance: Provenance,
    pub sentence_id: String,
    /// Sentence-local predicate index.
    pub predicate_token: usize,
    pub meta: ExampleMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuilderConfig {
    pub positive_fraction: f64,
    pub swap_fraction: f64,
    pub insertion_fraction: f64,
    pub rng_seed: u64,
    pub max_subset_variants: usize,
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig {
            positive_fraction: 0.30,
            swap_fraction: 0.14,
            insertion_fraction: 0.56,
            rng_seed: 0,
            max_subset_variants: 8,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("invalid builder config: {0}")]
    Config(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization failure: {0}")]
    Json(#[from] serde_json::Error),
}

impl BuilderConfig {
    pub fn validate(&self) -> Result<(), BuildError> {
        let f = [self.positive_fraction, self.swap_fraction, self.insertion_fraction];
        if f.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(BuildError::Config("fractions must lie in [0, 1]".into()));
        }
        let sum: f64 = f.iter().sum();
        if (sum - 1.0).abs() > 0.01 {
            return Err(BuildError::Config(format!("fractions sum to {sum}, expected 1")));
        }
        if self.max_subset_variants == 0 {
            return Err(BuildError::Config("max_subset_variants must be positive".into()));
        }
        Ok(())
    }

    pub fn targets(&self) -> [f64; 3] {
        [self.positive_fraction, self.swap_fraction, self.insertion_fraction]
    }

    /// SHA-256 of the key-sorted JSON form.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

/// Seed for an independent shard: hash of the run seed and the shard id.
pub fn shard_seed(seed: u64, shard_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(shard_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaPair {
    pub question: String,
    pub answers: Vec<LocalSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPredicate {
    pub predicate_index: usize,
    pub verbal_lemma: String,
    pub qas: Vec<QaPair>,
}

/// One annotated sentence of the input corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRow {
    pub sentence_id: String,
    pub tokens: Vec<String>,
    pub predicates: Vec<CorpusPredicate>,
    /// Sentence-local noun phrases; the phrase provider is asked when absent.
    #[serde(default)]
    pub noun_phrases: Option<Vec<LocalSpan>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub seed: u64,
    pub config_hash: String,
    pub counts: BTreeMap<Provenance, usize>,
    pub total: usize,
    pub rows: usize,
    pub predicates: usize,
    pub skipped_rows: usize,
    pub skipped_arguments: usize,
    /// Predicates left with no placeable argument.
    pub empty_predicates: usize,
}

impl BuildManifest {
    pub fn fraction(&self, p: Provenance) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.counts.get(&p).copied().unwrap_or(0) as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Slot {
    filler: Filler,
    prep: Option<String>,
    span: Span,
    gold: bool,
}

type Slots = BTreeMap<SyntacticPosition, Slot>;

fn fields_of(lemma: &str, attrs: GrammaticalAttributes, slots: &Slots) -> HypothesisFields {
    let mut f = HypothesisFields::new(lemma, attrs);
    for (&pos, s) in slots {
        f.set(pos, s.filler.clone(), s.prep.as_deref());
    }
    f.normalized()
}

fn slot_meta(slots: &Slots) -> Vec<SlotMeta> {
    slots
        .iter()
        .map(|(&position, s)| SlotMeta {
            position,
            text: s.filler.text().to_string(),
            start: s.span.start,
            end: s.span.end,
            gold: s.gold,
        })
        .collect()
}

/// Exchanges SUBJ with an object position; an involution. None unless both
/// are concrete phrases.
pub fn swap_fields(fields: &HypothesisFields, object: SyntacticPosition) -> Option<HypothesisFields> {
    let concrete = |f: Option<&Filler>| matches!(f, Some(Filler::Phrase(_)));
    if !concrete(fields.subj.as_ref()) || !concrete(fields.get(object)) {
        return None;
    }
    let mut out = fields.clone();
    let subj = fields.subj.clone()?;
    match object {
        SyntacticPosition::Dobj => {
            out.subj = fields.dobj.clone();
            out.dobj = Some(subj);
        }
        SyntacticPosition::Iobj => {
            let iobj = fields.iobj.clone()?;
            out.subj = Some(iobj.filler);
            out.iobj = Some(PrepPhrase { prep: iobj.prep, filler: subj });
        }
        _ => return None,
    }
    Some(out.normalized())
}

fn swap_slots(slots: &Slots, object: SyntacticPosition) -> Option<Slots> {
    let s = slots.get(&SyntacticPosition::Subj)?;
    let o = slots.get(&object)?;
    if s.filler.is_placeholder() || o.filler.is_placeholder() {
        return None;
    }
    let mut out = slots.clone();
    out.insert(
        SyntacticPosition::Subj,
        Slot { prep: None, ..o.clone() },
    );
    out.insert(object, Slot { prep: o.prep.clone(), ..s.clone() });
    Some(out)
}

/// Ratio controller: emits the available kind with the largest deficit while
/// that deficit is positive.
#[derive(Debug, Clone, Default)]
struct Quota {
    targets: [f64; 3],
    counts: [usize; 3],
}

impl Quota {
    fn pick(&self, available: [bool; 3]) -> Option<usize> {
        let next = self.counts.iter().sum::<usize>() as f64 + 1.0;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..3 {
            if !available[i] {
                continue;
            }
            let deficit = self.targets[i] * next - self.counts[i] as f64;
            if best.map_or(true, |(_, d)| deficit > d) {
                best = Some((i, deficit));
            }
        }
        best.filter(|&(_, d)| d > 0.0).map(|(i, _)| i)
    }
}

struct Gold {
    slots: Slots,
    attrs: GrammaticalAttributes,
    all_spans: Vec<Span>,
}

/// Gold arguments placed by question position (first argument per position
/// wins) and the count of skipped arguments.
fn gold_arguments(doc: &Document, pred: &CorpusPredicate) -> (Gold, usize) {
    let mut skipped = 0;
    let mut slots = Slots::new();
    let mut attrs = None;
    let mut all_spans = Vec::new();
    for qa in &pred.qas {
        let spans: Vec<Span> = qa
            .answers
            .iter()
            .filter_map(|a| Span::with_last_head(a.start, a.end).ok())
            .filter(|s| doc.check_span(s).is_ok())
            .collect();
        all_spans.extend(spans.iter().copied());
        let question: QasrlQuestion = match qa.question.parse() {
            Ok(q) => q,
            Err(e) => {
                log::debug!("skipping argument: {e}");
                skipped += 1;
                continue;
            }
        };
        let (Ok(pos), Some(span)) = (question.syntactic_position(), spans.first()) else {
            skipped += 1;
            continue;
        };
        if attrs.is_none() {
            attrs = Some(question.grammatical_attributes());
        }
        if slots.contains_key(&pos) {
            continue;
        }
        let prep = match pos {
            SyntacticPosition::Iobj | SyntacticPosition::Adj => local_preposition(doc, span, &question),
            _ => None,
        };
        let text = doc.span_text(span).unwrap_or_default();
        slots.insert(pos, Slot { filler: Filler::Phrase(text), prep, span: *span, gold: true });
    }
    let gold = Gold {
        slots,
        attrs: attrs.unwrap_or(crate::hypothesis::DEFAULT_ATTRIBUTES),
        all_spans,
    };
    (gold, skipped)
}

/// Streaming builder; feed rows in order, then take the manifest.
pub struct Builder<'p> {
    cfg: BuilderConfig,
    provider: Option<&'p dyn PhraseProvider>,
    quota: Quota,
    manifest: BuildManifest,
}

impl<'p> Builder<'p> {
    pub fn new(cfg: BuilderConfig, provider: Option<&'p dyn PhraseProvider>) -> Result<Self, BuildError> {
        cfg.validate()?;
        let manifest = BuildManifest {
            seed: cfg.rng_seed,
            config_hash: cfg.hash(),
            counts: Provenance::ALL.iter().map(|&p| (p, 0)).collect(),
            ..BuildManifest::default()
        };
        Ok(Builder {
            quota: Quota { targets: cfg.targets(), counts: [0; 3] },
            cfg,
            provider,
            manifest,
        })
    }

    pub fn skip_row(&mut self) {
        self.manifest.skipped_rows += 1;
    }

    pub fn manifest(&self) -> &BuildManifest {
        &self.manifest
    }

    pub fn finish(self) -> BuildManifest {
        self.manifest
    }

    fn noun_phrases(&self, doc: &Document, row: &CorpusRow) -> Vec<Span> {
        if let Some(nps) = &row.noun_phrases {
            return nps
                .iter()
                .filter_map(|a| Span::with_last_head(a.start, a.end).ok())
                .filter(|s| doc.check_span(s).is_ok())
                .collect();
        }
        match self.provider.map(|p| p.phrases(doc, 0..=0)) {
            Some(Ok(ps)) => ps.into_iter().map(|p| p.span).collect(),
            Some(Err(e)) => {
                log::warn!("phrase provider failed for {}: {e}", row.sentence_id);
                Vec::new()
            }
            None => Vec::new(),
        }
    }

    /// Examples for one corpus row.
    pub fn push_row(&mut self, row: &CorpusRow) -> Vec<NliExample> {
        let doc = match Document::new(row.sentence_id.clone(), vec![row.tokens.clone()], vec![]) {
            Ok(d) => d,
            Err(e) => {
                log::warn!("skipping row {}: {e}", row.sentence_id);
                self.manifest.skipped_rows += 1;
                return Vec::new();
            }
        };
        self.manifest.rows += 1;
        let premise = doc.text();
        let nps = self.noun_phrases(&doc, row);
        let mut out = Vec::new();
        for pred in &row.predicates {
            if pred.predicate_index >= row.tokens.len() {
                self.manifest.skipped_arguments += pred.qas.len();
                continue;
            }
            self.manifest.predicates += 1;
            let (gold, skipped) = gold_arguments(&doc, pred);
            self.manifest.skipped_arguments += skipped;
            if gold.slots.is_empty() {
                self.manifest.empty_predicates += 1;
                continue;
            }
            let seed = shard_seed(self.cfg.rng_seed, &format!("{}#{}", row.sentence_id, pred.predicate_index));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let predicate_span = Span::with_last_head(pred.predicate_index, pred.predicate_index + 1).ok();
            let ctx = Ctx {
                premise: &premise,
                sentence_id: &row.sentence_id,
                predicate_token: pred.predicate_index,
                lemma: &pred.verbal_lemma,
                attrs: gold.attrs,
            };

            let positives = subset_slots(&gold.slots, self.cfg.max_subset_variants);
            let seed_slots = positives[rng.gen_range(0..positives.len())].clone();
            let mut swaps: Vec<(SyntacticPosition, Slots)> = [SyntacticPosition::Dobj, SyntacticPosition::Iobj]
                .into_iter()
                .filter_map(|o| swap_slots(&seed_slots, o).map(|s| (o, s)))
                .collect();
            swaps.shuffle(&mut rng);
            let eligible: Vec<Span> = nps
                .iter()
                .filter(|np| !gold.all_spans.iter().any(|g| g.overlaps(np)))
                .filter(|np| predicate_span.map_or(true, |p| !p.overlaps(np)))
                .copied()
                .collect();
            let mut insertions: Vec<Slots> = Vec::new();
            for np in &eligible {
                let text = doc.span_text(np).unwrap_or_default();
                for pos in SyntacticPosition::ALL {
                    let mut s = seed_slots.clone();
                    let prep = s.get(&pos).and_then(|x| x.prep.clone());
                    s.insert(pos, Slot { filler: Filler::Phrase(text.clone()), prep, span: *np, gold: false });
                    insertions.push(s);
                }
            }
            insertions.shuffle(&mut rng);

            let mut queues: [std::vec::IntoIter<Candidate>; 3] = [
                positives.into_iter().map(|s| Candidate { slots: s, swapped: None }).collect::<Vec<_>>().into_iter(),
                swaps.into_iter().map(|(o, s)| Candidate { slots: s, swapped: Some(o) }).collect::<Vec<_>>().into_iter(),
                insertions.into_iter().map(|s| Candidate { slots: s, swapped: None }).collect::<Vec<_>>().into_iter(),
            ];
            loop {
                let available = [0, 1, 2].map(|i| queues[i].len() > 0);
                let Some(kind) = self.quota.pick(available) else { break };
                let c = queues[kind].next().expect("available queue is non-empty");
                let provenance = Provenance::ALL[kind];
                let source = (provenance != Provenance::PositiveSubset).then(|| slot_meta(&seed_slots));
                out.push(ctx.example(provenance, &c, source));
                self.quota.counts[kind] += 1;
                *self.manifest.counts.entry(provenance).or_default() += 1;
                self.manifest.total += 1;
                debug_assert_eq!(provenance.index(), kind);
            }
        }
        out
    }
}

struct Candidate {
    slots: Slots,
    swapped: Option<SyntacticPosition>,
}

struct Ctx<'a> {
    premise: &'a str,
    sentence_id: &'a str,
    predicate_token: usize,
    lemma: &'a str,
    attrs: GrammaticalAttributes,
}

impl Ctx<'_> {
    fn example(&self, provenance: Provenance, c: &Candidate, source: Option<Vec<SlotMeta>>) -> NliExample {
        let fields = fields_of(self.lemma, self.attrs, &c.slots);
        NliExample {
            premise: self.premise.to_string(),
            hypothesis: realize(&fields),
            label: provenance.label(),
            provenance,
            sentence_id: self.sentence_id.to_string(),
            predicate_token: self.predicate_token,
            meta: ExampleMeta {
                verbal_lemma: self.lemma.to_string(),
                attributes: self.attrs,
                slots: slot_meta(&c.slots),
                swapped_with: c.swapped,
                source_slots: source.unwrap_or_default(),
            },
        }
    }
}

/// Non-empty subsets of the gold slots, largest first (ties by bitmask),
/// capped at `cap`.
fn subset_slots(slots: &Slots, cap: usize) -> Vec<Slots> {
    let entries: Vec<(&SyntacticPosition, &Slot)> = slots.iter().collect();
    let n = entries.len();
    let mut masks: Vec<u32> = (1..(1u32 << n)).collect();
    masks.sort_by_key(|m| (std::cmp::Reverse(m.count_ones()), *m));
    masks
        .into_iter()
        .take(cap)
        .map(|m| {
            entries
                .iter()
                .enumerate()
                .filter(|(i, _)| m & (1 << i) != 0)
                .map(|(_, (p, s))| (**p, (*s).clone()))
                .collect()
        })
        .collect()
}

/// Positive examples for one predicate: every capped argument subset.
pub fn positive_examples(row: &CorpusRow, predicate: usize, cfg: &BuilderConfig) -> Result<Vec<NliExample>, BuildError> {
    cfg.validate()?;
    let Some(pred) = row.predicates.iter().find(|p| p.predicate_index == predicate) else {
        return Ok(Vec::new());
    };
    let doc = Document::new(row.sentence_id.clone(), vec![row.tokens.clone()], vec![])
        .map_err(|e| BuildError::Config(e.to_string()))?;
    let (gold, _) = gold_arguments(&doc, pred);
    if gold.slots.is_empty() {
        return Ok(Vec::new());
    }
    let premise = doc.text();
    let ctx = Ctx {
        premise: &premise,
        sentence_id: &row.sentence_id,
        predicate_token: predicate,
        lemma: &pred.verbal_lemma,
        attrs: gold.attrs,
    };
    Ok(subset_slots(&gold.slots, cfg.max_subset_variants)
        .into_iter()
        .map(|slots| ctx.example(Provenance::PositiveSubset, &Candidate { slots, swapped: None }, None))
        .collect())
}

/// Reads corpus JSONL, writes example JSONL, returns the manifest. Malformed
/// lines are skipped and counted.
pub fn build<R: BufRead, W: Write>(
    reader: R,
    cfg: &BuilderConfig,
    provider: Option<&dyn PhraseProvider>,
    out: &mut W,
) -> Result<BuildManifest, BuildError> {
    let mut b = Builder::new(cfg.clone(), provider)?;
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: CorpusRow = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("skipping corpus line {}: {e}", n + 1);
                b.skip_row();
                continue;
            }
        };
        for ex in b.push_row(&row) {
            serde_json::to_writer(&mut *out, &ex)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(b.finish())
}
