//! Confusion matrices, per-class metrics, stratified splits and the
//! exhaustive feature-subset sweep.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cart::{fit, TrainConfig, TreeModel};
use crate::error::{Error, Result};
use crate::features::{FeatureMask, FeatureMatrix};

/// Rows are actual behaviours, columns are predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            n: n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_pairs(n_classes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut cm = Self::new(n_classes);
        for (actual, predicted) in pairs {
            cm.add(actual, predicted);
        }
        cm
    }

    pub fn add(&mut self, actual: usize, predicted: usize) {
        self.counts[actual * self.n + predicted] += 1;
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.n + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Support of class `c`.
    pub fn row_sum(&self, c: usize) -> u64 {
        (0..self.n).map(|p| self.get(c, p)).sum()
    }

    /// Number of rows predicted as `c`.
    pub fn col_sum(&self, c: usize) -> u64 {
        (0..self.n).map(|a| self.get(a, c)).sum()
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.trace(), self.total())
    }

    pub fn precision(&self, c: usize) -> f64 {
        ratio(self.get(c, c), self.col_sum(c))
    }

    pub fn recall(&self, c: usize) -> f64 {
        ratio(self.get(c, c), self.row_sum(c))
    }

    pub fn f1(&self, c: usize) -> f64 {
        f1(self.precision(c), self.recall(c))
    }

    pub fn to_csv(&self, behaviours: &[String]) -> String {
        let mut s = String::from("actual\\predicted");
        for b in behaviours {
            let _ = write!(s, ",{b}");
        }
        s.push('\n');
        for (a, b) in behaviours.iter().enumerate() {
            s.push_str(b);
            for p in 0..self.n {
                let _ = write!(s, ",{}", self.get(a, p));
            }
            s.push('\n');
        }
        s
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean, zero when both inputs are zero.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub target: usize,
    pub target_f1: f64,
    /// Mean F1 over classes that occur as label or prediction.
    pub macro_f1: f64,
    /// Support-weighted mean F1.
    pub weighted_f1: f64,
}

impl Metrics {
    pub fn from_matrix(cm: &ConfusionMatrix, target: usize) -> Metrics {
        let n = cm.n_classes();
        let precision: Vec<f64> = (0..n).map(|c| cm.precision(c)).collect();
        let recall: Vec<f64> = (0..n).map(|c| cm.recall(c)).collect();
        let f1s: Vec<f64> = (0..n).map(|c| f1(precision[c], recall[c])).collect();
        let active: Vec<usize> = (0..n)
            .filter(|&c| cm.row_sum(c) + cm.col_sum(c) > 0)
            .collect();
        let macro_f1 = if active.is_empty() {
            0.0
        } else {
            active.iter().map(|&c| f1s[c]).sum::<f64>() / active.len() as f64
        };
        let total = cm.total();
        let weighted_f1 = if total == 0 {
            0.0
        } else {
            (0..n).map(|c| cm.row_sum(c) as f64 * f1s[c]).sum::<f64>() / total as f64
        };
        Metrics {
            accuracy: cm.accuracy(),
            target_f1: f1s[target],
            precision,
            recall,
            f1: f1s,
            target,
            macro_f1,
            weighted_f1,
        }
    }

    pub fn render(&self, behaviours: &[String]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "accuracy     {:6.2}%", 100.0 * self.accuracy);
        let _ = writeln!(
            s,
            "target       {} (F1 {:.2}%)",
            behaviours[self.target],
            100.0 * self.target_f1
        );
        let _ = writeln!(s, "macro F1     {:6.2}%", 100.0 * self.macro_f1);
        let _ = writeln!(s, "weighted F1  {:6.2}%", 100.0 * self.weighted_f1);
        let width = behaviours.iter().map(String::len).max().unwrap_or(0).max(9);
        let _ = writeln!(s, "{:width$}  precision  recall      F1", "behaviour");
        for (c, b) in behaviours.iter().enumerate() {
            let _ = writeln!(
                s,
                "{b:width$}  {:8.2}%  {:6.2}%  {:6.2}%",
                100.0 * self.precision[c],
                100.0 * self.recall[c],
                100.0 * self.f1[c]
            );
        }
        s
    }
}

/// Scores `model` on every row of `fm`. Behaviours are matched by name, so
/// `fm` may declare a subset of the model's behaviours in any order.
pub fn evaluate(
    model: &TreeModel,
    fm: &FeatureMatrix,
    target: &str,
) -> Result<(ConfusionMatrix, Metrics)> {
    let remap = fm
        .behaviours()
        .iter()
        .map(|b| {
            model
                .behaviours
                .iter()
                .position(|m| m == b)
                .ok_or_else(|| Error::Label(format!("behaviour {b:?} unknown to the model")))
        })
        .collect::<Result<Vec<usize>>>()?;
    let target = model
        .behaviours
        .iter()
        .position(|b| b == target)
        .ok_or_else(|| Error::Label(format!("target behaviour {target:?} unknown to the model")))?;
    let cm = ConfusionMatrix::from_pairs(
        model.behaviours.len(),
        fm.rows()
            .iter()
            .map(|r| (remap[r.label], model.predict_unchecked(&r.values))),
    );
    let metrics = Metrics::from_matrix(&cm, target);
    Ok((cm, metrics))
}

/// Stratified train/test partition. Each present class contributes
/// `round(ratio * n)` rows (at least one, and leaving at least one) to the
/// training part. Rows keep their original relative order.
pub fn split(fm: &FeatureMatrix, ratio: f64, seed: u64) -> Result<(FeatureMatrix, FeatureMatrix)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); fm.n_classes()];
    for (i, r) in fm.rows().iter().enumerate() {
        by_class[r.label].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut idx) in by_class.into_iter().enumerate() {
        match idx.len() {
            0 => continue,
            1 => {
                return Err(Error::Data(format!(
                    "class {:?} has a single row and cannot be split",
                    fm.behaviours()[c]
                )))
            }
            n => {
                idx.shuffle(&mut rng);
                let k = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
                train.extend_from_slice(&idx[..k]);
                test.extend_from_slice(&idx[k..]);
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((fm.select(&train), fm.select(&test)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EvalMode {
    /// Score on the training rows.
    Resubstitution,
    /// Stratified split; train on `ratio` of rows, score on the rest.
    Holdout { ratio: f64, seed: u64 },
}

impl EvalMode {
    pub fn holdout(seed: u64) -> Self {
        EvalMode::Holdout { ratio: 0.7, seed }
    }
}

/// Fits on the training part implied by `mode` and scores accordingly.
pub fn fit_and_evaluate(
    fm: &FeatureMatrix,
    cfg: &TrainConfig,
    target: &str,
    mode: EvalMode,
) -> Result<(TreeModel, ConfusionMatrix, Metrics)> {
    let (train, test) = match mode {
        EvalMode::Resubstitution => (fm.clone(), fm.clone()),
        EvalMode::Holdout { ratio, seed } => split(fm, ratio, seed)?,
    };
    let model = fit(&train, cfg)?;
    let (cm, m) = evaluate(&model, &test, target)?;
    Ok((model, cm, m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub rank: usize,
    pub mask: FeatureMask,
    pub target_f1: f64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub target: String,
    pub config: TrainConfig,
    pub mode: EvalMode,
}

impl SweepResult {
    pub fn entry_for(&self, mask: FeatureMask) -> Option<&SweepEntry> {
        self.entries.iter().find(|e| e.mask == mask)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("rank,mask,target_f1,accuracy\n");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                e.rank,
                e.mask.render(),
                e.target_f1,
                e.accuracy
            );
        }
        s
    }
}

/// Descending target F1, then descending accuracy, then ascending mask bits.
pub fn ranking_order(a: &SweepEntry, b: &SweepEntry) -> Ordering {
    b.target_f1
        .total_cmp(&a.target_f1)
        .then(b.accuracy.total_cmp(&a.accuracy))
        .then(a.mask.bits().cmp(&b.mask.bits()))
}

/// Trains and scores one tree per non-empty feature subset (255 of them).
/// `cfg.feature_mask` is ignored. With `threads` set, work runs on a
/// dedicated pool of that size; the output does not depend on it.
pub fn sweep(
    fm: &FeatureMatrix,
    cfg: &TrainConfig,
    target: &str,
    mode: EvalMode,
    threads: Option<usize>,
) -> Result<SweepResult> {
    let present = fm.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Data("sweep needs at least two classes".into()));
    }
    fm.behaviour_index(target)?;
    let (train, test) = match mode {
        EvalMode::Resubstitution => (fm.clone(), fm.clone()),
        EvalMode::Holdout { ratio, seed } => split(fm, ratio, seed)?,
    };
    let run = || -> Result<Vec<SweepEntry>> {
        FeatureMask::all_nonempty()
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|mask| {
                let model = fit(&train, &cfg.with_mask(mask))?;
                let (_, m) = evaluate(&model, &test, target)?;
                Ok(SweepEntry {
                    rank: 0,
                    mask,
                    target_f1: m.target_f1,
                    accuracy: m.accuracy,
                    macro_f1: m.macro_f1,
                    depth: model.depth(),
                })
            })
            .collect()
    };
    let mut entries = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    entries.sort_by(ranking_order);
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ok(SweepResult {
        entries,
        target: target.to_string(),
        config: cfg.with_mask(FeatureMask::FULL),
        mode,
    })
}

/// Plain-text ranking table of the best `top_n` subsets.
pub fn rank_report(sr: &SweepResult, top_n: usize) -> String {
    let shown: Vec<&SweepEntry> = sr.entries.iter().take(top_n.max(1)).collect();
    let width = shown
        .iter()
        .map(|e| e.mask.render().len())
        .max()
        .unwrap_or(0)
        .max("Feature Permutation".len());
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>9} | {:width$} | {:>6} | {:>8}",
        "n-th best", "Feature Permutation", "F1 %", "Acc %"
    );
    for e in shown {
        let _ = writeln!(
            s,
            "{:>9} | {:width$} | {:>6.2} | {:>8.2}",
            e.rank,
            e.mask.render(),
            100.0 * e.target_f1,
            100.0 * e.accuracy
        );
    }
    let _ = writeln!(
        s,
        "target: {}; {} subsets ranked (2^8 = 256 counts the empty subset, which cannot be trained)",
        sr.target,
        sr.entries.len()
    );
    s
}
