//! Entity-level argument evaluation over coreference clusters.

use std::collections::{BTreeMap, BTreeSet};
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::model::{span_match_score, ClusterId, Document, EntityCluster, ModelError, Span};

/// Minimum match score an argument must exceed to join a cluster.
pub const MATCH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl EvalCounts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        EvalCounts { tp, fp, fn_ }
    }
}

impl Add for EvalCounts {
    type Output = EvalCounts;

    fn add(self, o: EvalCounts) -> EvalCounts {
        EvalCounts::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_)
    }
}

impl AddAssign for EvalCounts {
    fn add_assign(&mut self, o: EvalCounts) {
        *self = *self + o;
    }
}

impl Sum for EvalCounts {
    fn sum<I: Iterator<Item = EvalCounts>>(iter: I) -> Self {
        iter.fold(EvalCounts::default(), Add::add)
    }
}

impl<'a> Sum<&'a EvalCounts> for EvalCounts {
    fn sum<I: Iterator<Item = &'a EvalCounts>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

/// The entity an argument is credited to.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityId {
    Cluster(ClusterId),
    /// Minted for a reference argument (and any predicted argument unified
    /// with it), named by the reference span.
    Singleton(Span),
    /// Minted for a predicted argument matching nothing.
    PredictedSingleton(Span),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub argument: Span,
    pub entity: EntityId,
    pub match_score: f64,
}

/// Best cluster for `arg`: highest mention score above the threshold, ties to
/// the lower cc_id.
pub fn best_cluster<'a>(arg: &Span, clusters: &'a [EntityCluster]) -> Option<(&'a EntityCluster, f64)> {
    let mut best: Option<(&EntityCluster, f64)> = None;
    for c in clusters {
        let score = c
            .mentions
            .iter()
            .map(|m| span_match_score(arg, m))
            .fold(0.0, f64::max);
        if score <= MATCH_THRESHOLD {
            continue;
        }
        best = match best {
            Some((b, s)) if s > score || (s == score && b.cc_id <= c.cc_id) => Some((b, s)),
            _ => Some((c, score)),
        };
    }
    best
}

/// Cluster assignment for a single argument, before singleton unification.
pub fn map_to_cluster(arg: &Span, clusters: &[EntityCluster]) -> ClusterAssignment {
    match best_cluster(arg, clusters) {
        Some((c, score)) => ClusterAssignment {
            argument: *arg,
            entity: EntityId::Cluster(c.cc_id.clone()),
            match_score: score,
        },
        None => ClusterAssignment {
            argument: *arg,
            entity: EntityId::Singleton(*arg),
            match_score: 1.0,
        },
    }
}

/// Joint assignment of predicted and reference arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityAssignment {
    pub predicted: Vec<ClusterAssignment>,
    pub reference: Vec<ClusterAssignment>,
}

impl EntityAssignment {
    pub fn predicted_entities(&self) -> BTreeSet<EntityId> {
        self.predicted.iter().map(|a| a.entity.clone()).collect()
    }

    pub fn reference_entities(&self) -> BTreeSet<EntityId> {
        self.reference.iter().map(|a| a.entity.clone()).collect()
    }

    /// Counts over entities accepted by `keep`.
    pub fn counts_where(&self, keep: impl Fn(&EntityId) -> bool) -> EvalCounts {
        let p: BTreeSet<EntityId> = self.predicted_entities().into_iter().filter(|e| keep(e)).collect();
        let r: BTreeSet<EntityId> = self.reference_entities().into_iter().filter(|e| keep(e)).collect();
        EvalCounts::new(p.intersection(&r).count(), p.difference(&r).count(), r.difference(&p).count())
    }

    pub fn counts(&self) -> EvalCounts {
        self.counts_where(|_| true)
    }

    /// Mentions of every entity: cluster mentions for clusters, the assigned
    /// arguments for singletons.
    pub fn entity_mentions(&self, clusters: &[EntityCluster]) -> BTreeMap<EntityId, Vec<Span>> {
        let mut out: BTreeMap<EntityId, Vec<Span>> = BTreeMap::new();
        for a in self.predicted.iter().chain(&self.reference) {
            match &a.entity {
                EntityId::Cluster(id) => {
                    out.entry(a.entity.clone()).or_insert_with(|| {
                        clusters
                            .iter()
                            .filter(|c| &c.cc_id == id)
                            .flat_map(|c| c.mentions.iter().copied())
                            .collect()
                    });
                }
                _ => out.entry(a.entity.clone()).or_default().push(a.argument),
            }
        }
        for spans in out.values_mut() {
            spans.sort();
            spans.dedup();
        }
        out
    }
}

/// Maps both argument lists to entities, then unifies leftover singletons
/// across the two sides greedily by descending match score (each argument at
/// most once, ties by position in sorted order).
pub fn assign_entities(predicted: &[Span], reference: &[Span], clusters: &[EntityCluster]) -> EntityAssignment {
    let mut pred: Vec<ClusterAssignment> = predicted.iter().map(|a| map_to_cluster(a, clusters)).collect();
    let refs: Vec<ClusterAssignment> = reference.iter().map(|a| map_to_cluster(a, clusters)).collect();

    let singles = |v: &[ClusterAssignment]| -> Vec<Span> {
        let set: BTreeSet<Span> = v
            .iter()
            .filter(|a| matches!(a.entity, EntityId::Singleton(_)))
            .map(|a| a.argument)
            .collect();
        set.into_iter().collect()
    };
    let p_single = singles(&pred);
    let r_single = singles(&refs);

    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in p_single.iter().enumerate() {
        for (j, r) in r_single.iter().enumerate() {
            let s = span_match_score(p, r);
            if s > MATCH_THRESHOLD {
                pairs.push((s, i, j));
            }
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut p_to: BTreeMap<Span, (Span, f64)> = BTreeMap::new();
    let mut r_used = vec![false; r_single.len()];
    for (s, i, j) in pairs {
        if p_to.contains_key(&p_single[i]) || r_used[j] {
            continue;
        }
        r_used[j] = true;
        p_to.insert(p_single[i], (r_single[j], s));
    }

    for a in pred.iter_mut() {
        if let EntityId::Singleton(span) = a.entity {
            match p_to.get(&span) {
                Some(&(r, s)) => {
                    a.entity = EntityId::Singleton(r);
                    a.match_score = s;
                }
                None => a.entity = EntityId::PredictedSingleton(span),
            }
        }
    }
    EntityAssignment {
        predicted: pred,
        reference: refs,
    }
}

/// Entity-level true positives, false positives and false negatives.
pub fn count_entities(predicted: &[Span], reference: &[Span], clusters: &[EntityCluster]) -> EvalCounts {
    assign_entities(predicted, reference, clusters).counts()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Some denominator was zero and the affected values were set to 0.
    pub undefined: bool,
}

/// Micro-averaged precision, recall and F1.
pub fn aggregate(per_instance: &[EvalCounts]) -> Prf {
    prf(per_instance.iter().sum())
}

pub fn prf(c: EvalCounts) -> Prf {
    let mut undefined = false;
    let mut ratio = |num: usize, den: usize| {
        if den == 0 {
            undefined = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        undefined = true;
        0.0
    };
    Prf { precision, recall, f1, undefined }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("entity {0} has no mentions")]
    EmptyEntity(String),
    #[error("no prediction for instances: {0:?}")]
    MissingPredictions(Vec<String>),
    #[error("no reference for instances: {0:?}")]
    MissingReferences(Vec<String>),
}

/// Sentences between the closest mention head and the predicate.
pub fn min_distance(mentions: &[Span], doc: &Document, predicate_token: usize) -> Result<Option<usize>, ModelError> {
    let sp = doc.sentence_of(predicate_token)?;
    let mut best: Option<usize> = None;
    for m in mentions {
        let d = doc.sentence_of(m.head)?.abs_diff(sp);
        best = Some(best.map_or(d, |b| b.min(d)));
    }
    Ok(best)
}

pub fn min_entity_distance(entity: &EntityCluster, doc: &Document, predicate_token: usize) -> Result<usize, EvalError> {
    min_distance(&entity.mentions, doc, predicate_token)?
        .ok_or_else(|| EvalError::EmptyEntity(entity.cc_id.to_string()))
}

/// Distance of every entity in an assignment.
pub fn entity_distances(
    assignment: &EntityAssignment,
    doc: &Document,
    predicate_token: usize,
) -> Result<BTreeMap<EntityId, usize>, EvalError> {
    let mut out = BTreeMap::new();
    for (id, mentions) in assignment.entity_mentions(doc.clusters()) {
        let d = min_distance(&mentions, doc, predicate_token)?
            .ok_or_else(|| EvalError::EmptyEntity(format!("{id:?}")))?;
        out.insert(id, d);
    }
    Ok(out)
}

/// Arguments whose entity has no mention in the predicate's sentence.
pub fn cross_sentence_filter(args: &[Span], doc: &Document, predicate_token: usize) -> Result<Vec<Span>, EvalError> {
    let assignment = assign_entities(args, &[], doc.clusters());
    let distances = entity_distances(&assignment, doc, predicate_token)?;
    Ok(assignment
        .predicted
        .iter()
        .filter(|a| distances[&a.entity] >= 1)
        .map(|a| a.argument)
        .collect())
}

/// Counts restricted to entities at each minimal distance.
pub fn stratify_by_distance(
    predicted: &[Span],
    reference: &[Span],
    doc: &Document,
    predicate_token: usize,
) -> Result<BTreeMap<usize, EvalCounts>, EvalError> {
    let assignment = assign_entities(predicted, reference, doc.clusters());
    let distances = entity_distances(&assignment, doc, predicate_token)?;
    let levels: BTreeSet<usize> = distances.values().copied().collect();
    Ok(levels
        .into_iter()
        .map(|d| (d, assignment.counts_where(|e| distances[e] == d)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    Full,
    Cross,
    Both,
}

impl EvalMode {
    pub fn full(self) -> bool {
        matches!(self, EvalMode::Full | EvalMode::Both)
    }

    pub fn cross(self) -> bool {
        matches!(self, EvalMode::Cross | EvalMode::Both)
    }
}

/// One predicate to evaluate.
#[derive(Debug, Clone)]
pub struct EvalInstance<'a> {
    pub id: String,
    pub doc: &'a Document,
    pub predicate_token: usize,
    pub predicted: Vec<Span>,
    pub reference: Vec<Span>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCounts {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full: Option<EvalCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross: Option<EvalCounts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub counts: EvalCounts,
    #[serde(flatten)]
    pub scores: Prf,
}

impl Block {
    fn from_counts(counts: EvalCounts) -> Self {
        Block { counts, scores: prf(counts) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    pub distance: usize,
    pub gold_entities: usize,
    /// Fewer gold entities than the requested minimum.
    pub suppressed: bool,
    #[serde(flatten)]
    pub block: Block,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mode: EvalMode,
    pub instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full: Option<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross: Option<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strata: Option<Vec<Stratum>>,
    pub per_instance: Vec<InstanceCounts>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub mode: EvalMode,
    pub strata: bool,
    /// Strata with fewer gold entities are flagged as suppressed.
    pub min_stratum_gold: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            mode: EvalMode::Both,
            strata: false,
            min_stratum_gold: 0,
        }
    }
}

pub fn evaluate(instances: &[EvalInstance<'_>], opts: &EvalOptions) -> Result<EvaluationReport, EvalError> {
    let mut full_total = EvalCounts::default();
    let mut cross_total = EvalCounts::default();
    let mut strata: BTreeMap<usize, EvalCounts> = BTreeMap::new();
    let mut per_instance = Vec::with_capacity(instances.len());
    for inst in instances {
        let assignment = assign_entities(&inst.predicted, &inst.reference, inst.doc.clusters());
        let needs_distance = opts.mode.cross() || opts.strata;
        let distances = if needs_distance {
            entity_distances(&assignment, inst.doc, inst.predicate_token)?
        } else {
            BTreeMap::new()
        };
        let full = opts.mode.full().then(|| assignment.counts());
        let cross = opts.mode.cross().then(|| assignment.counts_where(|e| distances[e] >= 1));
        if let Some(c) = full {
            full_total += c;
        }
        if let Some(c) = cross {
            cross_total += c;
        }
        if opts.strata {
            let levels: BTreeSet<usize> = distances.values().copied().collect();
            for d in levels {
                *strata.entry(d).or_default() += assignment.counts_where(|e| distances[e] == d);
            }
        }
        per_instance.push(InstanceCounts { id: inst.id.clone(), full, cross });
    }
    Ok(EvaluationReport {
        mode: opts.mode,
        instances: instances.len(),
        full: opts.mode.full().then(|| Block::from_counts(full_total)),
        cross: opts.mode.cross().then(|| Block::from_counts(cross_total)),
        strata: opts.strata.then(|| {
            strata
                .into_iter()
                .map(|(distance, counts)| {
                    let gold_entities = counts.tp + counts.fn_;
                    Stratum {
                        distance,
                        gold_entities,
                        suppressed: gold_entities < opts.min_stratum_gold,
                        block: Block::from_counts(counts),
                    }
                })
                .collect()
        }),
        per_instance,
    })
}
