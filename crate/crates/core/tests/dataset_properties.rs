use argentail::dataset::{build, BuilderConfig, CorpusPredicate, CorpusRow, Label, LocalSpan, NliExample, Provenance};
use proptest::prelude::*;

fn row(i: usize, with_recipient: bool) -> CorpusRow {
    let mut tokens: Vec<String> = ["The", "board", "gave", "the", "award", "during", "the", "winter"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut qas = vec![
        argentail::dataset::QaPair {
            question: "Who gave something?".into(),
            answers: vec![LocalSpan { start: 0, end: 2 }],
        },
        argentail::dataset::QaPair {
            question: "What did someone give?".into(),
            answers: vec![LocalSpan { start: 3, end: 5 }],
        },
    ];
    if with_recipient {
        tokens.extend(["to", "the", "author"].iter().map(|s| s.to_string()));
        qas.push(argentail::dataset::QaPair {
            question: "Who did someone give something to?".into(),
            answers: vec![LocalSpan { start: 9, end: 11 }],
        });
    }
    CorpusRow {
        sentence_id: format!("s{i}"),
        tokens,
        predicates: vec![CorpusPredicate {
            predicate_index: 2,
            verbal_lemma: "give".into(),
            qas,
        }],
        noun_phrases: Some(vec![LocalSpan { start: 0, end: 2 }, LocalSpan { start: 3, end: 5 }, LocalSpan { start: 6, end: 8 }]),
    }
}

fn run(rows: &[CorpusRow], seed: u64) -> Vec<NliExample> {
    let cfg = BuilderConfig { rng_seed: seed, ..BuilderConfig::default() };
    let input: String = rows.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    let mut out = Vec::new();
    build(input.as_bytes(), &cfg, None, &mut out).unwrap();
    std::str::from_utf8(&out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_seed_same_dataset(seed in any::<u64>(), recipients in prop::collection::vec(any::<bool>(), 1..30)) {
        let rows: Vec<CorpusRow> = recipients.iter().enumerate().map(|(i, &r)| row(i, r)).collect();
        let a = run(&rows, seed);
        prop_assert_eq!(&a, &run(&rows, seed));
        for e in &a {
            let entailed = e.provenance == Provenance::PositiveSubset;
            prop_assert_eq!(e.label == Label::Entailed, entailed);
        }
    }
}
