//! Fixture generators and independent oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use argentail::dataset::{CorpusPredicate, CorpusRow, LocalSpan, QaPair};
use argentail::model::{Document, EntityCluster, Span};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// A predicate with its arguments, all spans global.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub doc: Document,
    pub predicate_token: usize,
    pub predicted: Vec<Span>,
    pub reference: Vec<Span>,
}

fn random_span(rng: &mut ChaCha8Rng, sentence_start: usize, sentence_len: usize) -> Span {
    let len = rng.gen_range(1..=3.min(sentence_len));
    let start = sentence_start + rng.gen_range(0..=sentence_len - len);
    let head = rng.gen_range(start..start + len);
    Span::new(start, start + len, head).unwrap()
}

/// Random document with a few clusters and argument lists; cluster mentions
/// plus arguments never exceed `max_mentions`.
pub fn random_instance(rng: &mut ChaCha8Rng, id: usize, max_mentions: usize) -> RandomInstance {
    let lengths: Vec<usize> = (0..rng.gen_range(2..=5)).map(|_| rng.gen_range(3..=7)).collect();
    let sentences: Vec<Vec<String>> = lengths
        .iter()
        .enumerate()
        .map(|(s, &n)| (0..n).map(|t| format!("w{s}_{t}")).collect())
        .collect();
    let mut starts = Vec::new();
    let mut total = 0;
    for &n in &lengths {
        starts.push(total);
        total += n;
    }
    let any_span = |rng: &mut ChaCha8Rng| {
        let s = rng.gen_range(0..lengths.len());
        random_span(rng, starts[s], lengths[s])
    };

    let mut budget = max_mentions;
    let mut clusters = Vec::new();
    for cc in 0..rng.gen_range(0..=3) {
        let n = rng.gen_range(1..=3).min(budget.saturating_sub(2));
        let mut mentions: Vec<Span> = Vec::new();
        for _ in 0..n {
            let m = any_span(rng);
            if !mentions.iter().any(|x| x.start == m.start && x.end == m.end) {
                mentions.push(m);
            }
        }
        if mentions.is_empty() {
            break;
        }
        budget -= mentions.len();
        // Ids are not in creation order so the lower-id tie-break matters.
        clusters.push(EntityCluster::new((7 - 2 * cc) as i64, mentions));
    }
    let cluster_mentions: Vec<Span> = clusters.iter().flat_map(|c| c.mentions.clone()).collect();
    let pick = |rng: &mut ChaCha8Rng| {
        // Half of the arguments reuse or perturb a cluster mention.
        if !cluster_mentions.is_empty() && rng.gen_bool(0.5) {
            let m = *cluster_mentions.choose(rng).unwrap();
            if rng.gen_bool(0.5) {
                m
            } else {
                let s = any_span(rng);
                Span::new(m.start.min(s.start), m.end.max(s.end).min(m.start.min(s.start) + 4), m.head)
                    .unwrap_or(m)
            }
        } else {
            any_span(rng)
        }
    };
    let n_ref = rng.gen_range(0..=budget.min(4));
    budget -= n_ref;
    let reference: Vec<Span> = (0..n_ref).map(|_| pick(rng)).collect();
    let n_pred = rng.gen_range(0..=budget.min(5));
    let mut predicted: Vec<Span> = (0..n_pred).map(|_| pick(rng)).collect();
    // Predicted arguments often copy or nudge a reference argument.
    for p in predicted.iter_mut() {
        if !reference.is_empty() && rng.gen_bool(0.3) {
            let r = *reference.choose(rng).unwrap();
            *p = if rng.gen_bool(0.5) { r } else { Span::new(r.start, r.end, r.start).unwrap() };
        }
    }
    let doc = Document::new(format!("r{id}"), sentences, clusters).unwrap();
    let predicate_token = rng.gen_range(0..total);
    RandomInstance {
        doc,
        predicate_token,
        predicted,
        reference,
    }
}

/// Entity label as computed by the brute-force oracle.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    Cluster(i64),
    Reference((usize, usize, usize)),
    Predicted((usize, usize, usize)),
}

fn key(s: &Span) -> (usize, usize, usize) {
    (s.start, s.end, s.head)
}

/// `max(head match, token IoU)`, computed from token sets.
pub fn pair_score(a: &Span, b: &Span) -> f64 {
    if a.head == b.head {
        return 1.0;
    }
    let ta: BTreeSet<usize> = (a.start..a.end).collect();
    let tb: BTreeSet<usize> = (b.start..b.end).collect();
    let inter = ta.intersection(&tb).count() as f64;
    let union = ta.union(&tb).count() as f64;
    inter / union
}

fn cluster_label(arg: &Span, clusters: &[EntityCluster]) -> Option<i64> {
    // Every argument-mention pair, then the best cluster above one half.
    let mut table: Vec<(i64, f64)> = Vec::new();
    for c in clusters {
        let id: i64 = c.cc_id.as_str().parse().expect("numeric ids in fixtures");
        for m in &c.mentions {
            table.push((id, pair_score(arg, m)));
        }
    }
    let mut best: BTreeMap<i64, f64> = BTreeMap::new();
    for (id, s) in table {
        let e = best.entry(id).or_insert(0.0);
        if s > *e {
            *e = s;
        }
    }
    let top = best.values().cloned().fold(0.0, f64::max);
    if top <= 0.5 {
        return None;
    }
    best.into_iter().filter(|&(_, s)| s == top).map(|(id, _)| id).min()
}

/// Labels for the predicted and reference arguments.
pub fn brute_labels(predicted: &[Span], reference: &[Span], clusters: &[EntityCluster]) -> (Vec<Label>, Vec<Label>) {
    let p_cluster: Vec<Option<i64>> = predicted.iter().map(|a| cluster_label(a, clusters)).collect();
    let r_cluster: Vec<Option<i64>> = reference.iter().map(|a| cluster_label(a, clusters)).collect();
    let p_free: BTreeSet<(usize, usize, usize)> =
        predicted.iter().zip(&p_cluster).filter(|(_, c)| c.is_none()).map(|(a, _)| key(a)).collect();
    let r_free: BTreeSet<(usize, usize, usize)> =
        reference.iter().zip(&r_cluster).filter(|(_, c)| c.is_none()).map(|(a, _)| key(a)).collect();

    // Repeatedly unify the best remaining pair above one half.
    let as_span = |k: &(usize, usize, usize)| Span::new(k.0, k.1, k.2).unwrap();
    let mut unified: BTreeMap<(usize, usize, usize), (usize, usize, usize)> = BTreeMap::new();
    let mut used_r: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    loop {
        let mut best: Option<(f64, (usize, usize, usize), (usize, usize, usize))> = None;
        for p in &p_free {
            if unified.contains_key(p) {
                continue;
            }
            for r in &r_free {
                if used_r.contains(r) {
                    continue;
                }
                let s = pair_score(&as_span(p), &as_span(r));
                if s <= 0.5 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bs, bp, br)) => s > bs || (s == bs && (*p, *r) < (bp, br)),
                };
                if better {
                    best = Some((s, *p, *r));
                }
            }
        }
        match best {
            Some((_, p, r)) => {
                unified.insert(p, r);
                used_r.insert(r);
            }
            None => break,
        }
    }

    let p_labels = predicted
        .iter()
        .zip(&p_cluster)
        .map(|(a, c)| match c {
            Some(id) => Label::Cluster(*id),
            None => match unified.get(&key(a)) {
                Some(r) => Label::Reference(*r),
                None => Label::Predicted(key(a)),
            },
        })
        .collect();
    let r_labels = reference
        .iter()
        .zip(&r_cluster)
        .map(|(a, c)| match c {
            Some(id) => Label::Cluster(*id),
            None => Label::Reference(key(a)),
        })
        .collect();
    (p_labels, r_labels)
}

/// (tp, fp, fn) over entity labels.
pub fn brute_counts(predicted: &[Span], reference: &[Span], clusters: &[EntityCluster]) -> (usize, usize, usize) {
    let (p, r) = brute_labels(predicted, reference, clusters);
    let p: BTreeSet<Label> = p.into_iter().collect();
    let r: BTreeSet<Label> = r.into_iter().collect();
    let tp = p.iter().filter(|l| r.contains(l)).count();
    (tp, p.len() - tp, r.len() - tp)
}

/// Paths of a synthetic detection fixture.
pub struct E2eFixture {
    pub dir: PathBuf,
    pub docs: PathBuf,
    pub predicates: PathBuf,
    pub gold: PathBuf,
    pub config: PathBuf,
    pub instances: usize,
}

const ENTITIES: [&str; 16] = [
    "board", "union", "company", "council", "agency", "harbor", "bank", "museum", "court", "ministry",
    "committee", "factory", "school", "airline", "hospital", "library",
];
const VERBS: [(&str, &str); 6] = [
    ("increase", "increased"),
    ("acquire", "acquired"),
    ("approve", "approved"),
    ("sell", "sold"),
    ("fund", "funded"),
    ("build", "built"),
];

struct DocBuilder {
    sentences: Vec<Vec<String>>,
    offset: usize,
}

impl DocBuilder {
    fn push(&mut self, text: &str) -> usize {
        let start = self.offset;
        let toks = words(text);
        self.offset += toks.len();
        self.sentences.push(toks);
        start
    }
}

fn np(start: usize) -> Span {
    Span::new(start, start + 2, start + 1).unwrap()
}

/// Twenty documents whose gold arguments the mock oracle knows exactly.
///
/// Each document has six sentences; the predicate sits in sentence 3 with a
/// local subject and sometimes a local object. The implicit argument is a
/// cluster mentioned only outside the predicate's sentence. Every other noun
/// phrase is a distractor the oracle scores 0.
pub fn write_e2e_fixture(dir: &Path, n_docs: usize) -> E2eFixture {
    let mut docs = Vec::new();
    let mut predicates = Vec::new();
    let mut parses = Vec::new();
    let mut phrases = Vec::new();
    let mut oracle = Vec::new();
    let mut gold = Vec::new();

    for k in 0..n_docs {
        let e = |i: usize| ENTITIES[(k + i) % ENTITIES.len()];
        let (lemma, past) = VERBS[k % VERBS.len()];
        let with_object = k % 3 != 0;
        let second_mention = k % 2 == 0;
        let implicit_after = k % 4 == 1;
        let doc_id = format!("doc{k:02}");

        let mut b = DocBuilder {
            sentences: Vec::new(),
            offset: 0,
        };
        let mut nps = Vec::new();
        // s0
        let s0 = b.push(&format!("The {} met the {} .", if implicit_after { e(9) } else { e(0) }, e(1)));
        nps.extend([np(s0), np(s0 + 3)]);
        // s1
        let s1 = b.push(&format!("Later the {} said nothing .", e(2)));
        nps.push(np(s1 + 1));
        // s2
        let s2 = b.push(&format!("The {} praised the {} .", if second_mention && !implicit_after { e(0) } else { e(10) }, e(3)));
        nps.extend([np(s2), np(s2 + 3)]);
        // s3: predicate sentence
        let s3 = if with_object {
            b.push(&format!("The {} {past} the {} .", e(4), e(5)))
        } else {
            b.push(&format!("The {} {past} quickly .", e(4)))
        };
        nps.push(np(s3));
        if with_object {
            nps.push(np(s3 + 3));
        }
        // s4
        let s4 = b.push(&format!("The {} agreed with the {} .", if implicit_after { e(0) } else { e(6) }, e(4)));
        nps.extend([np(s4), np(s4 + 4)]);
        // s5, outside the window
        let s5 = b.push(&format!("The {} closed .", e(7)));
        nps.push(np(s5));

        let implicit_mentions: Vec<Span> = if implicit_after {
            vec![np(s4)]
        } else if second_mention {
            vec![np(s0), np(s2)]
        } else {
            vec![np(s0)]
        };
        let subj = np(s3);
        let obj = with_object.then(|| np(s3 + 3));
        let mut clusters = vec![
            json!({"cc_id": 1, "mentions": implicit_mentions}),
            // The local subject is mentioned again after the predicate.
            json!({"cc_id": 2, "mentions": [subj, np(s4 + 4)]}),
        ];
        if k % 5 == 0 {
            clusters.push(json!({"cc_id": 3, "mentions": [np(s1 + 1), np(s5)]}));
        }
        docs.push(json!({"doc_id": doc_id, "sentences": b.sentences, "clusters": clusters}));

        let predicate_token = s3 + 2;
        predicates.push(json!({"doc_id": doc_id, "predicate_token": predicate_token, "verbal_lemma": lemma}));

        let subj_q = if with_object { format!("Who {past} something?") } else { format!("Who {past}?") };
        let mut answers = vec![json!({"start": 0, "end": 2, "head": 1, "question": subj_q})];
        if with_object {
            answers.push(json!({"start": 3, "end": 5, "head": 4, "question": format!("What did someone {lemma}?")}));
        }
        parses.push(json!({"doc_id": doc_id, "sentence_index": 3, "predicate_index": 2, "answers": answers}));

        phrases.push(json!({
            "doc_id": doc_id,
            "phrases": nps.iter().map(|s| json!({"span": s, "kind": "noun_phrase"})).collect::<Vec<_>>(),
        }));

        let probe = |s: &Span, position: &str| {
            json!({"doc_id": doc_id, "predicate_token": predicate_token, "start": s.start, "end": s.end, "position": position})
        };
        oracle.push(probe(&subj, "SUBJ"));
        if let Some(o) = &obj {
            oracle.push(probe(o, "DOBJ"));
        }
        // The implicit argument fills the free object slot, or IOBJ when taken.
        let implicit = implicit_mentions[0];
        oracle.push(probe(&implicit, if with_object { "IOBJ" } else { "DOBJ" }));

        let mut arguments = vec![subj];
        arguments.extend(obj);
        arguments.push(implicit);
        gold.push(json!({"doc_id": doc_id, "predicate_token": predicate_token, "arguments": arguments}));
    }

    let write = |name: &str, rows: &[serde_json::Value]| {
        let path = dir.join(name);
        let text: String = rows.iter().map(|r| format!("{r}\n")).collect();
        std::fs::write(&path, text).unwrap();
        path
    };
    let docs_path = write("docs.jsonl", &docs);
    let predicates_path = write("predicates.jsonl", &predicates);
    write("qasrl.jsonl", &parses);
    write("phrases.jsonl", &phrases);
    write("oracle.jsonl", &oracle);
    let gold_path = write("gold.jsonl", &gold);
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        "[entailment]\nkind = \"mock\"\nid = \"mock-oracle\"\noracle = \"oracle.jsonl\"\n\n\
         [qasrl]\nkind = \"file\"\npath = \"qasrl.jsonl\"\n\n\
         [phrases]\nkind = \"file\"\npath = \"phrases.jsonl\"\n",
    )
    .unwrap();
    E2eFixture {
        dir: dir.to_path_buf(),
        docs: docs_path,
        predicates: predicates_path,
        gold: gold_path,
        config,
        instances: n_docs,
    }
}

const SUBJECTS: [&str; 10] = [
    "The board", "The union", "A company", "The council", "Local officials", "The agency", "Two banks",
    "The museum", "The court", "Investors",
];
const OBJECTS: [&str; 10] = [
    "the salaries", "a new plant", "the proposal", "their shares", "the museum wing", "the budget",
    "the old bridge", "a small firm", "the contract", "the report",
];
const RECIPIENTS: [&str; 6] = ["the workers", "the city", "its members", "the school", "a charity", "the press"];
const EXTRAS: [&str; 8] = [
    "the morning", "the region", "the sector", "the meeting", "last year", "the crisis", "the vote", "the summer",
];
const CORPUS_VERBS: [(&str, &str, &str); 8] = [
    ("increase", "increased", "increase"),
    ("give", "gave", "give"),
    ("send", "sent", "send"),
    ("sell", "sold", "sell"),
    ("offer", "offered", "offer"),
    ("approve", "approved", "approve"),
    ("pay", "paid", "pay"),
    ("show", "showed", "show"),
];

/// Synthetic QA-SRL corpus: one predicate per sentence, with a subject, an
/// object, optional recipient and a non-argument noun phrase or two.
pub fn qasrl_corpus(rng: &mut ChaCha8Rng, predicates: usize) -> Vec<CorpusRow> {
    (0..predicates)
        .map(|i| {
            let (lemma, past, _) = CORPUS_VERBS[rng.gen_range(0..CORPUS_VERBS.len())];
            let subj = SUBJECTS[rng.gen_range(0..SUBJECTS.len())];
            let obj = OBJECTS[rng.gen_range(0..OBJECTS.len())];
            let extra = EXTRAS[rng.gen_range(0..EXTRAS.len())];
            let recipient = rng.gen_bool(0.4).then(|| RECIPIENTS[rng.gen_range(0..RECIPIENTS.len())]);
            let mut tokens = words(subj);
            let subj_span = LocalSpan { start: 0, end: tokens.len() };
            let pred = tokens.len();
            tokens.push(past.to_string());
            let o0 = tokens.len();
            tokens.extend(words(obj));
            let obj_span = LocalSpan { start: o0, end: tokens.len() };
            let mut qas = vec![
                QaPair { question: format!("Who {past} something?"), answers: vec![subj_span] },
                QaPair { question: format!("What did someone {lemma}?"), answers: vec![obj_span] },
            ];
            let mut nps = vec![subj_span, obj_span];
            if let Some(r) = recipient {
                tokens.push("to".into());
                let r0 = tokens.len();
                tokens.extend(words(r));
                let r_span = LocalSpan { start: r0, end: tokens.len() };
                qas.push(QaPair { question: format!("Who did someone {lemma} something to?"), answers: vec![r_span] });
                nps.push(r_span);
            }
            tokens.push(if rng.gen_bool(0.5) { "during" } else { "in" }.into());
            let e0 = tokens.len();
            tokens.extend(words(extra));
            nps.push(LocalSpan { start: e0, end: tokens.len() });
            if rng.gen_bool(0.3) {
                tokens.extend(words("despite the protest"));
                let p0 = tokens.len() - 2;
                nps.push(LocalSpan { start: p0, end: p0 + 2 });
            }
            tokens.push(".".into());
            CorpusRow {
                sentence_id: format!("s{i:05}"),
                tokens,
                predicates: vec![CorpusPredicate { predicate_index: pred, verbal_lemma: lemma.into(), qas }],
                noun_phrases: Some(nps),
            }
        })
        .collect()
}
