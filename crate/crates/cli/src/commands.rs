//! Subcommands of the `argentail` binary.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use argentail::dataset::build;
use argentail::eval::{evaluate, EvalInstance, EvalMode, EvalOptions};
use argentail::io::{read_jsonl, write_jsonl, DetectionRecord, ErrorKind, ErrorRecord, ReferenceInstance};
use argentail::model::{Document, Span};
use argentail::pipeline::{detect, DetectionResult, PipelineConfig, PredicateInstance};
use argentail::tune::{default_grid, tune_on_dev, tune_threshold, ScoredInstance, TuneConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::backends::{build_phrases, build_runtime, Runtime};
use crate::config::Config;
use crate::error::CliError;
use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "argentail", version, about = "Implicit and cross-sentence argument detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect arguments for a list of predicates.
    Detect(DetectArgs),
    /// Score detections against gold arguments.
    Evaluate(EvaluateArgs),
    /// Select the candidate threshold by cross-validation.
    Tune(TuneArgs),
    /// Build an NLI training set from QA-SRL annotations.
    BuildNli(BuildArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Documents, one JSON object per line.
    #[arg(long)]
    pub docs: PathBuf,
    /// Predicate instances, one JSON object per line.
    #[arg(long)]
    pub predicates: PathBuf,
    #[arg(long, env = "ARGENTAIL_CONFIG")]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; output order follows the input regardless.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Cross,
    Both,
}

impl From<ModeArg> for EvalMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => EvalMode::Full,
            ModeArg::Cross => EvalMode::Cross,
            ModeArg::Both => EvalMode::Both,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    /// Output of `detect`.
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Both)]
    pub mode: ModeArg,
    /// Also report counts per sentence distance.
    #[arg(long)]
    pub strata: bool,
    #[arg(long, default_value_t = 0)]
    pub min_stratum_gold: usize,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Output of `detect`, holding every candidate's score.
    #[arg(long)]
    pub scored: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long, default_value_t = 4)]
    pub folds: usize,
    /// With `--folds 1`: the first N instances are the dev split, the rest the test split.
    #[arg(long)]
    pub dev_count: Option<usize>,
    /// `full` or `cross`; `cross` counts only entities outside the predicate's sentence.
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// QA-SRL corpus, one sentence per line.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `builder.rng_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Detect(a) => run_detect(&a),
        Command::Evaluate(a) => run_evaluate(&a),
        Command::Tune(a) => run_tune(&a),
        Command::BuildNli(a) => run_build(&a),
    }
}

fn read_file<T: DeserializeOwned>(what: &str, path: &Path) -> Result<Vec<T>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("cannot open {what} {}: {e}", path.display())))?;
    read_jsonl(BufReader::new(file)).map_err(|e| CliError::Input(format!("{what} {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", path.display())))
}

fn write_report<T: Serialize>(report: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn load_documents(path: &Path) -> Result<HashMap<String, Document>, CliError> {
    let docs: Vec<Document> = read_file("documents", path)?;
    let mut map = HashMap::with_capacity(docs.len());
    for d in docs {
        let id = d.doc_id().to_string();
        if map.insert(id.clone(), d).is_some() {
            return Err(CliError::Input(format!("duplicate document id {id}")));
        }
    }
    Ok(map)
}

fn detect_one(
    docs: &HashMap<String, Document>,
    pred: &PredicateInstance,
    cfg: &PipelineConfig,
    rt: &Runtime,
) -> DetectionRecord {
    let error = |kind, error: String| {
        log::error!("{}: {error}", pred.id());
        DetectionRecord::Error(ErrorRecord {
            doc_id: pred.doc_id.clone(),
            predicate_token: pred.predicate_token,
            kind,
            error,
        })
    };
    let Some(doc) = docs.get(&pred.doc_id) else {
        return error(ErrorKind::Input, format!("unknown document {}", pred.doc_id));
    };
    match detect(doc, pred, cfg, rt.backends()) {
        Ok(r) => DetectionRecord::Ok(Box::new(r)),
        Err(e) if e.is_backend() => error(ErrorKind::Backend, e.to_string()),
        Err(e) => error(ErrorKind::Input, e.to_string()),
    }
}

pub fn run_detect(a: &DetectArgs) -> Result<(), CliError> {
    let cfg = Config::load(&a.config)?;
    let mut manifest = RunManifest::begin("detect", cfg.snapshot());
    manifest.add_input(&a.docs)?;
    manifest.add_input(&a.predicates)?;
    let docs = load_documents(&a.docs)?;
    let predicates: Vec<PredicateInstance> = read_file("predicates", &a.predicates)?;
    let rt = build_runtime(&cfg)?;
    manifest.backends = rt.info.clone();
    let pipeline = cfg.pipeline.to_pipeline();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.workers.max(1))
        .build()
        .map_err(|e| CliError::Input(format!("cannot start workers: {e}")))?;
    let records: Vec<DetectionRecord> =
        pool.install(|| predicates.par_iter().map(|p| detect_one(&docs, p, &pipeline, &rt)).collect());

    let errors: Vec<&ErrorRecord> = records
        .iter()
        .filter_map(|r| match r {
            DetectionRecord::Error(e) => Some(e),
            DetectionRecord::Ok(_) => None,
        })
        .collect();
    let backend_failures = errors.iter().filter(|e| e.kind == ErrorKind::Backend).count();
    write_jsonl(create(&a.out)?, &records).map_err(|e| CliError::Input(format!("writing {}: {e}", a.out.display())))?;
    manifest.instances = records.len();
    manifest.errors = errors.len();
    manifest.write(&a.out)?;
    log::info!("{} predicates, {} errors", records.len(), errors.len());
    if !records.is_empty() && backend_failures == records.len() {
        return Err(CliError::Backend(format!("all {} predicates failed in a backend", records.len())));
    }
    Ok(())
}

/// Pairs gold and predicted records by id; both sides must list the same ids.
fn pair<'a>(
    gold: &'a [ReferenceInstance],
    pred: &'a [DetectionRecord],
) -> Result<Vec<(&'a ReferenceInstance, Option<&'a DetectionResult>)>, CliError> {
    let mut by_id: HashMap<String, &DetectionRecord> = HashMap::new();
    for r in pred {
        if by_id.insert(r.id(), r).is_some() {
            return Err(CliError::Input(format!("duplicate prediction for {}", r.id())));
        }
    }
    let gold_ids: BTreeSet<String> = gold.iter().map(|g| g.id()).collect();
    if gold_ids.len() != gold.len() {
        return Err(CliError::Input("duplicate gold instance ids".into()));
    }
    let pred_ids: BTreeSet<String> = by_id.keys().cloned().collect();
    if gold_ids != pred_ids {
        let missing: Vec<_> = gold_ids.difference(&pred_ids).cloned().collect();
        let extra: Vec<_> = pred_ids.difference(&gold_ids).cloned().collect();
        return Err(CliError::Input(format!(
            "instance ids differ; without predictions: [{}]; without gold: [{}]",
            missing.join(", "),
            extra.join(", ")
        )));
    }
    Ok(gold.iter().map(|g| (g, by_id[&g.id()].result())).collect())
}

fn doc_for<'d>(docs: &'d HashMap<String, Document>, id: &str) -> Result<&'d Document, CliError> {
    docs.get(id).ok_or_else(|| CliError::Input(format!("unknown document {id}")))
}

pub fn run_evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let opts = EvalOptions {
        mode: a.mode.into(),
        strata: a.strata,
        min_stratum_gold: a.min_stratum_gold,
    };
    let mut manifest = RunManifest::begin("evaluate", serde_json::to_value(opts).expect("options serialize"));
    for p in [&a.gold, &a.pred, &a.docs] {
        manifest.add_input(p)?;
    }
    let docs = load_documents(&a.docs)?;
    let gold: Vec<ReferenceInstance> = read_file("gold", &a.gold)?;
    let pred: Vec<DetectionRecord> = read_file("predictions", &a.pred)?;
    let pairs = pair(&gold, &pred)?;
    let mut instances = Vec::with_capacity(pairs.len());
    let mut errors = 0;
    for (g, r) in pairs {
        if r.is_none() {
            errors += 1;
        }
        instances.push(EvalInstance {
            id: g.id(),
            doc: doc_for(&docs, &g.doc_id)?,
            predicate_token: g.predicate_token,
            predicted: r.map(DetectionResult::predicted_arguments).unwrap_or_default(),
            reference: g.arguments.clone(),
        });
    }
    let report = evaluate(&instances, &opts).map_err(|e| CliError::Input(e.to_string()))?;
    write_report(&report, a.out.as_deref())?;
    if let Some(out) = &a.out {
        manifest.instances = instances.len();
        manifest.errors = errors;
        manifest.write(out)?;
    }
    Ok(())
}

fn scored_instance<'d>(
    g: &ReferenceInstance,
    r: Option<&DetectionResult>,
    doc: &'d Document,
) -> ScoredInstance<'d> {
    let (fixed, scored) = match r {
        Some(r) => (
            r.local_arguments.iter().map(|l| l.span).collect(),
            r.all_verdicts
                .iter()
                .map(|v| (v.candidate.span, if v.unscored { f64::NEG_INFINITY } else { v.best_score }))
                .collect::<Vec<(Span, f64)>>(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    ScoredInstance {
        id: g.id(),
        doc,
        predicate_token: g.predicate_token,
        fixed,
        scored,
        reference: g.arguments.clone(),
    }
}

pub fn run_tune(a: &TuneArgs) -> Result<(), CliError> {
    let cross_only = match a.mode {
        ModeArg::Full => false,
        ModeArg::Cross => true,
        ModeArg::Both => return Err(CliError::Input("tune --mode must be full or cross".into())),
    };
    let cfg = TuneConfig {
        folds: a.folds,
        grid: default_grid(),
        cross_only,
    };
    let mut manifest = RunManifest::begin(
        "tune",
        serde_json::json!({"folds": a.folds, "dev_count": a.dev_count, "cross_only": cross_only}),
    );
    for p in [&a.scored, &a.gold, &a.docs] {
        manifest.add_input(p)?;
    }
    let docs = load_documents(&a.docs)?;
    let gold: Vec<ReferenceInstance> = read_file("gold", &a.gold)?;
    let pred: Vec<DetectionRecord> = read_file("scored predictions", &a.scored)?;
    let pairs = pair(&gold, &pred)?;
    let instances = pairs
        .iter()
        .map(|(g, r)| Ok(scored_instance(g, *r, doc_for(&docs, &g.doc_id)?)))
        .collect::<Result<Vec<_>, CliError>>()?;

    let report = if a.folds == 1 {
        let dev_count = a
            .dev_count
            .ok_or_else(|| CliError::Input("--folds 1 needs --dev-count".into()))?;
        if dev_count == 0 || dev_count > instances.len() {
            return Err(CliError::Input(format!(
                "--dev-count {dev_count} outside 1..={}",
                instances.len()
            )));
        }
        let (dev, test) = instances.split_at(dev_count);
        tune_on_dev(dev, test, &cfg.grid, cross_only)
    } else {
        tune_threshold(&instances, &cfg)
    }
    .map_err(|e| CliError::Input(e.to_string()))?;
    write_report(&report, a.out.as_deref())?;
    if let Some(out) = &a.out {
        manifest.instances = instances.len();
        manifest.errors = pairs.iter().filter(|(_, r)| r.is_none()).count();
        manifest.write(out)?;
    }
    Ok(())
}

pub fn run_build(a: &BuildArgs) -> Result<(), CliError> {
    let mut cfg = match &a.config {
        Some(p) => Config::load(p)?,
        None => Config::from_toml("", std::env::vars())?,
    };
    if let Some(seed) = a.seed {
        cfg.builder.rng_seed = seed;
    }
    let mut manifest = RunManifest::begin("build-nli", serde_json::to_value(&cfg.builder).expect("config serializes"));
    manifest.config_hash = cfg.builder.hash();
    manifest.seed = Some(cfg.builder.rng_seed);
    manifest.add_input(&a.corpus)?;
    let phrases = build_phrases(&cfg.phrases)?;
    if let Some(p) = &phrases {
        manifest.backends.push(crate::manifest::BackendInfo {
            role: "phrases".into(),
            id: p.id().into(),
            kind: "provider".into(),
            version: None,
        });
    }
    let corpus = File::open(&a.corpus)
        .map(BufReader::new)
        .map_err(|e| CliError::Input(format!("cannot open corpus {}: {e}", a.corpus.display())))?;
    let mut out = create(&a.out)?;
    let built = build(corpus, &cfg.builder, phrases.as_deref(), &mut out).map_err(|e| CliError::Input(e.to_string()))?;
    out.flush().map_err(|e| CliError::Input(e.to_string()))?;
    manifest.instances = built.total;
    manifest.errors = built.skipped_rows;
    let summary = a.out.with_extension("stats.json");
    write_report(&built, Some(&summary))?;
    manifest.write(&a.out)?;
    log::info!("{} examples from {} predicates", built.total, built.predicates);
    Ok(())
}
