//! Candidate-threshold selection by grid search and k-fold cross-validation.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::eval::{assign_entities, entity_distances, prf, EvalCounts, EvalError, Prf};
use crate::model::{Document, Span};

/// A predicate whose candidate scores are already known.
#[derive(Debug, Clone)]
pub struct ScoredInstance<'a> {
    pub id: String,
    pub doc: &'a Document,
    pub predicate_token: usize,
    /// Always predicted (verified local arguments).
    pub fixed: Vec<Span>,
    /// Candidates with their best entailment score.
    pub scored: Vec<(Span, f64)>,
    pub reference: Vec<Span>,
}

impl ScoredInstance<'_> {
    pub fn predicted_at(&self, threshold: f64) -> Vec<Span> {
        self.fixed
            .iter()
            .copied()
            .chain(self.scored.iter().filter(|(_, s)| *s > threshold).map(|(sp, _)| *sp))
            .collect()
    }

    /// Entity counts at `threshold`, optionally restricted to entities with no
    /// mention in the predicate's sentence.
    pub fn counts_at(&self, threshold: f64, cross_only: bool) -> Result<EvalCounts, EvalError> {
        let assignment = assign_entities(&self.predicted_at(threshold), &self.reference, self.doc.clusters());
        if cross_only {
            let distances = entity_distances(&assignment, self.doc, self.predicate_token)?;
            Ok(assignment.counts_where(|e| distances[e] >= 1))
        } else {
            Ok(assignment.counts())
        }
    }
}

/// 0.01, 0.02, ..., 1.00.
pub fn default_grid() -> Vec<f64> {
    (1..=100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub folds: usize,
    pub grid: Vec<f64>,
    pub cross_only: bool,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            folds: 4,
            grid: default_grid(),
            cross_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TuneError {
    #[error("{instances} instances cannot be split into {folds} folds")]
    TooFewInstances { instances: usize, folds: usize },
    #[error("cross-validation needs at least 2 folds, got {0}")]
    InvalidFolds(usize),
    #[error("the threshold grid is empty")]
    EmptyGrid,
    #[error("threshold grid value {0} outside [0, 1]")]
    GridValue(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_range: Range<usize>,
    pub threshold: f64,
    pub train_f1: f64,
    pub test_counts: EvalCounts,
    pub test: Prf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return MeanSd { mean: 0.0, sd: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        MeanSd { mean, sd: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub folds: Vec<FoldReport>,
    pub precision: MeanSd,
    pub recall: MeanSd,
    pub f1: MeanSd,
    /// Threshold chosen on all instances together.
    pub threshold: f64,
}

/// Contiguous fold ranges whose sizes differ by at most one.
pub fn fold_ranges(n: usize, folds: usize) -> Vec<Range<usize>> {
    let base = n / folds;
    let extra = n % folds;
    let mut start = 0;
    (0..folds)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

/// Per-instance counts at every grid value.
struct CountTable {
    rows: Vec<Vec<EvalCounts>>,
}

impl CountTable {
    fn build(instances: &[ScoredInstance<'_>], grid: &[f64], cross_only: bool) -> Result<Self, EvalError> {
        let rows = instances
            .iter()
            .map(|inst| grid.iter().map(|&t| inst.counts_at(t, cross_only)).collect())
            .collect::<Result<_, _>>()?;
        Ok(CountTable { rows })
    }

    fn total(&self, members: impl Iterator<Item = usize> + Clone, g: usize) -> EvalCounts {
        members.map(|i| self.rows[i][g]).sum()
    }

    /// Grid index with the best F1 over `members`; ties to the lowest threshold.
    fn best(&self, members: impl Iterator<Item = usize> + Clone, grid_len: usize) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for g in 0..grid_len {
            let f1 = prf(self.total(members.clone(), g)).f1;
            if f1 > best.1 {
                best = (g, f1);
            }
        }
        best
    }
}

fn check_grid(grid: &[f64]) -> Result<(), TuneError> {
    if grid.is_empty() {
        return Err(TuneError::EmptyGrid);
    }
    if let Some(&v) = grid.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(TuneError::GridValue(v));
    }
    Ok(())
}

fn summarize(folds: Vec<FoldReport>, threshold: f64) -> TuneReport {
    let pick = |f: fn(&Prf) -> f64| folds.iter().map(|r| f(&r.test)).collect::<Vec<_>>();
    TuneReport {
        precision: MeanSd::of(&pick(|p| p.precision)),
        recall: MeanSd::of(&pick(|p| p.recall)),
        f1: MeanSd::of(&pick(|p| p.f1)),
        folds,
        threshold,
    }
}

/// K-fold tuning: each fold's threshold maximizes F1 on the other folds and is
/// scored on the held-out one.
pub fn tune_threshold(instances: &[ScoredInstance<'_>], cfg: &TuneConfig) -> Result<TuneReport, TuneError> {
    if cfg.folds < 2 {
        return Err(TuneError::InvalidFolds(cfg.folds));
    }
    if instances.len() < cfg.folds {
        return Err(TuneError::TooFewInstances {
            instances: instances.len(),
            folds: cfg.folds,
        });
    }
    check_grid(&cfg.grid)?;
    let table = CountTable::build(instances, &cfg.grid, cfg.cross_only)?;
    let n = instances.len();
    let mut reports = Vec::with_capacity(cfg.folds);
    for (fold, test) in fold_ranges(n, cfg.folds).into_iter().enumerate() {
        let train = (0..n).filter(|i| !test.contains(i));
        let (g, train_f1) = table.best(train, cfg.grid.len());
        let test_counts = table.total(test.clone(), g);
        reports.push(FoldReport {
            fold,
            test_range: test,
            threshold: cfg.grid[g],
            train_f1,
            test_counts,
            test: prf(test_counts),
        });
    }
    let (g, _) = table.best(0..n, cfg.grid.len());
    Ok(summarize(reports, cfg.grid[g]))
}

/// Single split: tune on `dev`, report on `test`.
pub fn tune_on_dev(
    dev: &[ScoredInstance<'_>],
    test: &[ScoredInstance<'_>],
    grid: &[f64],
    cross_only: bool,
) -> Result<TuneReport, TuneError> {
    if dev.is_empty() {
        return Err(TuneError::TooFewInstances { instances: 0, folds: 1 });
    }
    check_grid(grid)?;
    let dev_table = CountTable::build(dev, grid, cross_only)?;
    let (g, train_f1) = dev_table.best(0..dev.len(), grid.len());
    let test_counts: EvalCounts = test
        .iter()
        .map(|inst| inst.counts_at(grid[g], cross_only))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .sum();
    let report = FoldReport {
        fold: 0,
        test_range: 0..test.len(),
        threshold: grid[g],
        train_f1,
        test_counts,
        test: prf(test_counts),
    };
    Ok(summarize(vec![report], grid[g]))
}
