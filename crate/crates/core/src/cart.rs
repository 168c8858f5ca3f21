//! Depth-bounded CART classification trees.
//!
//! Splits are chosen greedily by weighted impurity over candidate thresholds
//! placed at midpoints between consecutive distinct values. Rows with
//! `value <= threshold` go left. Equal-impurity candidates resolve to the
//! lower feature index, then the lower threshold, so a fit is a pure function
//! of its inputs.

use std::fmt::Write as _;

use crate::datamodel::validate_behaviour_name;
use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureMask, FeatureMatrix, N_FEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub max_depth: usize,
    pub feature_mask: FeatureMask,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub oversample: bool,
    pub seed: u64,
    pub criterion: Criterion,
}

impl TrainConfig {
    pub fn new(max_depth: usize, feature_mask: FeatureMask) -> Self {
        TrainConfig {
            max_depth,
            feature_mask,
            min_samples_split: 2,
            min_samples_leaf: 1,
            oversample: false,
            seed: 0,
            criterion: Criterion::Gini,
        }
    }

    pub fn with_mask(&self, feature_mask: FeatureMask) -> Self {
        TrainConfig {
            feature_mask,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::Config("max_depth must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::Config("min_samples_split must be >= 2".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::Config("min_samples_leaf must be >= 1".into()));
        }
        if self.feature_mask.is_empty() {
            return Err(Error::Config("feature mask is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: FeatureId,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class: usize,
        class_counts: Vec<usize>,
    },
}

impl TreeNode {
    fn leaf(counts: Vec<usize>) -> Self {
        TreeNode::Leaf {
            class: argmax(&counts),
            class_counts: counts,
        }
    }

    /// Number of comparisons on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => 1 + left.node_count() + right.node_count(),
        }
    }

    /// Pre-order visit.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        f(self);
        if let TreeNode::Internal { left, right, .. } = self {
            left.walk(f);
            right.walk(f);
        }
    }
}

/// Lowest index wins ties.
fn argmax(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub seed: u64,
    /// Rows seen by the learner, after oversampling.
    pub rows: usize,
    /// Observed (min, max) per masked feature, in `FeatureId` order.
    pub feature_ranges: Vec<(FeatureId, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    pub root: TreeNode,
    pub max_depth: usize,
    pub feature_mask: FeatureMask,
    pub behaviours: Vec<String>,
    pub meta: TrainingMeta,
}

pub fn gini(counts: &[usize]) -> Result<f64> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::Data("impurity of an empty node".into()));
    }
    Ok(gini_of(counts, n))
}

fn gini_of(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

pub fn entropy(counts: &[usize]) -> Result<f64> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(Error::Data("impurity of an empty node".into()));
    }
    Ok(entropy_of(counts, n))
}

fn entropy_of(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Threshold between two consecutive distinct sorted values, guaranteed to
/// satisfy `lo <= t < hi`.
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo / 2.0 + hi / 2.0;
    if lo <= m && m < hi {
        m
    } else {
        lo
    }
}

/// Row indices after deterministic oversampling: every present minority
/// class is topped up to the majority count by repeating its rows cyclically
/// in their original order.
pub fn oversample_indices(labels: &[usize], n_classes: usize) -> Vec<usize> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let majority = by_class.iter().map(Vec::len).max().unwrap_or(0);
    let mut out: Vec<usize> = (0..labels.len()).collect();
    for rows in by_class.iter().filter(|r| !r.is_empty()) {
        out.extend(rows.iter().cycle().take(majority - rows.len()));
    }
    out
}

struct Learner<'a> {
    columns: Vec<(FeatureId, Vec<f64>)>,
    labels: &'a [usize],
    n_classes: usize,
    cfg: &'a TrainConfig,
}

struct Split {
    impurity: f64,
    feature_pos: usize,
    threshold: f64,
}

impl Learner<'_> {
    fn impurity(&self, counts: &[usize], n: usize) -> f64 {
        match self.cfg.criterion {
            Criterion::Gini => gini_of(counts, n),
            Criterion::Entropy => entropy_of(counts, n),
        }
    }

    fn counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &r in rows {
            c[self.labels[r]] += 1;
        }
        c
    }

    fn build(&self, rows: &mut [usize], depth: usize) -> TreeNode {
        let counts = self.counts(rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.cfg.max_depth || rows.len() < self.cfg.min_samples_split {
            return TreeNode::leaf(counts);
        }
        let Some(split) = self.best_split(rows, &counts) else {
            return TreeNode::leaf(counts);
        };
        let (feature, column) = &self.columns[split.feature_pos];
        let mut left: Vec<usize> = Vec::with_capacity(rows.len());
        let mut right: Vec<usize> = Vec::with_capacity(rows.len());
        for &r in rows.iter() {
            if column[r] <= split.threshold {
                left.push(r);
            } else {
                right.push(r);
            }
        }
        TreeNode::Internal {
            feature: *feature,
            threshold: split.threshold,
            left: Box::new(self.build(&mut left, depth + 1)),
            right: Box::new(self.build(&mut right, depth + 1)),
        }
    }

    fn best_split(&self, rows: &mut [usize], parent: &[usize]) -> Option<Split> {
        let n = rows.len();
        let min_leaf = self.cfg.min_samples_leaf;
        let mut best: Option<Split> = None;
        let mut left = vec![0usize; self.n_classes];
        let mut right = vec![0usize; self.n_classes];
        for (pos, (_, column)) in self.columns.iter().enumerate() {
            rows.sort_unstable_by(|&a, &b| column[a].total_cmp(&column[b]));
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(parent);
            for i in 1..n {
                let moved = self.labels[rows[i - 1]];
                left[moved] += 1;
                right[moved] -= 1;
                let (lo, hi) = (column[rows[i - 1]], column[rows[i]]);
                if lo >= hi || i < min_leaf || n - i < min_leaf {
                    continue;
                }
                let impurity = (i as f64 * self.impurity(&left, i)
                    + (n - i) as f64 * self.impurity(&right, n - i))
                    / n as f64;
                let threshold = midpoint(lo, hi);
                let better = match &best {
                    None => true,
                    Some(b) => {
                        impurity < b.impurity
                            || (impurity == b.impurity
                                && (pos, threshold) < (b.feature_pos, b.threshold))
                    }
                };
                if better {
                    best = Some(Split {
                        impurity,
                        feature_pos: pos,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

/// Trains a tree on `fm` restricted to `cfg.feature_mask`.
pub fn fit(fm: &FeatureMatrix, cfg: &TrainConfig) -> Result<TreeModel> {
    cfg.validate()?;
    if fm.is_empty() {
        return Err(Error::Data(
            "cannot train on an empty feature matrix".into(),
        ));
    }
    let mut labels: Vec<usize> = fm.rows().iter().map(|r| r.label).collect();
    let sample: Vec<usize> = if cfg.oversample {
        oversample_indices(&labels, fm.n_classes())
    } else {
        (0..labels.len()).collect()
    };
    labels = sample.iter().map(|&i| labels[i]).collect();

    let columns: Vec<(FeatureId, Vec<f64>)> = cfg
        .feature_mask
        .features()
        .map(|f| (f, sample.iter().map(|&i| fm.rows()[i].get(f)).collect()))
        .collect();
    let feature_ranges = columns
        .iter()
        .map(|(f, col)| {
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (*f, lo, hi)
        })
        .collect();

    let learner = Learner {
        columns,
        labels: &labels,
        n_classes: fm.n_classes(),
        cfg,
    };
    let mut rows: Vec<usize> = (0..labels.len()).collect();
    let root = learner.build(&mut rows, 0);
    Ok(TreeModel {
        root,
        max_depth: cfg.max_depth,
        feature_mask: cfg.feature_mask,
        behaviours: fm.behaviours().to_vec(),
        meta: TrainingMeta {
            seed: cfg.seed,
            rows: labels.len(),
            feature_ranges,
        },
    })
}

impl TreeModel {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Class index for a full 8-feature vector. Only masked features are
    /// read, and they must be finite.
    pub fn predict(&self, values: &[f64; N_FEATURES]) -> Result<usize> {
        for f in self.feature_mask.features() {
            if !values[f.index()].is_finite() {
                return Err(Error::value(None, format!("{f} is not finite")));
            }
        }
        Ok(self.predict_unchecked(values))
    }

    pub(crate) fn predict_unchecked(&self, values: &[f64; N_FEATURES]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { class, .. } => return *class,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if values[feature.index()] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    /// Fraction of rows in `fm` predicted correctly.
    pub fn accuracy_on(&self, fm: &FeatureMatrix) -> f64 {
        if fm.is_empty() {
            return 0.0;
        }
        let hits = fm
            .rows()
            .iter()
            .filter(|r| self.predict_unchecked(&r.values) == r.label)
            .count();
        hits as f64 / fm.len() as f64
    }

    /// Portable plain-text form; see [`TreeModel::deserialize`].
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MODEL_MAGIC}");
        let _ = writeln!(s, "behaviours {}", self.behaviours.join(" "));
        let names: Vec<&str> = self.feature_mask.features().map(FeatureId::name).collect();
        let _ = writeln!(s, "features {}", names.join(" "));
        let _ = writeln!(s, "max_depth {}", self.max_depth);
        let _ = writeln!(s, "seed {}", self.meta.seed);
        let _ = writeln!(s, "rows {}", self.meta.rows);
        for (f, lo, hi) in &self.meta.feature_ranges {
            let _ = writeln!(s, "range {f} {lo} {hi}");
        }
        let _ = writeln!(s, "nodes {}", self.root.node_count());
        self.root.walk(&mut |n| match n {
            TreeNode::Internal {
                feature, threshold, ..
            } => {
                let _ = writeln!(s, "internal {feature} {threshold}");
            }
            TreeNode::Leaf {
                class,
                class_counts,
            } => {
                let counts: Vec<String> = class_counts.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(s, "leaf {class} {}", counts.join(" "));
            }
        });
        s.push_str("end\n");
        s
    }

    pub fn deserialize(text: &str) -> Result<TreeModel> {
        Parser::new(text).model()
    }
}

const MODEL_MAGIC: &str = "behavtx-tree 1";

struct Parser<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    last_line: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            lines: text.lines().enumerate().peekable(),
            last_line: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(format!("line {}", self.last_line), msg)
    }

    fn next_line(&mut self) -> Result<&'a str> {
        for (i, line) in self.lines.by_ref() {
            self.last_line = i + 1;
            if !line.trim().is_empty() {
                return Ok(line.trim());
            }
        }
        self.last_line += 1;
        Err(self.err("unexpected end of model text"))
    }

    /// Next line must start with `key`; returns the remaining tokens.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.next_line()?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some(k) if k == key => Ok(toks.collect()),
            other => Err(self.err(format!("expected `{key}`, found {:?}", other.unwrap_or("")))),
        }
    }

    fn number<T: std::str::FromStr>(&self, tok: &str) -> Result<T> {
        tok.parse()
            .map_err(|_| self.err(format!("bad number {tok:?}")))
    }

    fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let toks = self.keyed(key)?;
        match toks.as_slice() {
            [t] => self.number(t),
            _ => Err(self.err(format!("`{key}` takes one value"))),
        }
    }

    fn model(mut self) -> Result<TreeModel> {
        if self.next_line()? != MODEL_MAGIC {
            return Err(self.err(format!("expected header `{MODEL_MAGIC}`")));
        }
        let behaviours: Vec<String> = self
            .keyed("behaviours")?
            .iter()
            .map(|s| s.to_string())
            .collect();
        if behaviours.is_empty() {
            return Err(self.err("no behaviours"));
        }
        for b in &behaviours {
            validate_behaviour_name(b).map_err(|e| self.err(e.to_string()))?;
        }
        let mut feats = Vec::new();
        for t in self.keyed("features")? {
            feats.push(
                t.parse::<FeatureId>()
                    .map_err(|e| self.err(e.to_string()))?,
            );
        }
        let feature_mask = FeatureMask::from_features(feats.iter().copied());
        if feature_mask.is_empty() {
            return Err(self.err("empty feature list"));
        }
        let max_depth: usize = self.single("max_depth")?;
        let seed: u64 = self.single("seed")?;
        let rows: usize = self.single("rows")?;
        let mut feature_ranges = Vec::new();
        while let Some((_, l)) = self.lines.peek() {
            if !l.trim_start().starts_with("range") {
                break;
            }
            let toks = self.keyed("range")?;
            let [f, lo, hi] = toks.as_slice() else {
                return Err(self.err("`range` takes feature, min, max"));
            };
            let f: FeatureId = f.parse().map_err(|e: Error| self.err(e.to_string()))?;
            feature_ranges.push((f, self.number(lo)?, self.number(hi)?));
        }
        let n_nodes: usize = self.single("nodes")?;
        let mut seen = 0;
        let root = self.node(&behaviours, feature_mask, &mut seen)?;
        if seen != n_nodes {
            return Err(self.err(format!("declared {n_nodes} nodes, read {seen}")));
        }
        if self.next_line()? != "end" {
            return Err(self.err("expected `end`"));
        }
        let model = TreeModel {
            root,
            max_depth,
            feature_mask,
            behaviours,
            meta: TrainingMeta {
                seed,
                rows,
                feature_ranges,
            },
        };
        if model.depth() > max_depth {
            return Err(Error::format(
                "nodes",
                format!("tree depth {} exceeds max_depth {max_depth}", model.depth()),
            ));
        }
        Ok(model)
    }

    fn node(
        &mut self,
        behaviours: &[String],
        mask: FeatureMask,
        seen: &mut usize,
    ) -> Result<TreeNode> {
        let line = self.next_line()?;
        *seen += 1;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["internal", f, t] => {
                let feature: FeatureId = f.parse().map_err(|e: Error| self.err(e.to_string()))?;
                if !mask.contains(feature) {
                    return Err(self.err(format!("{feature} is not in the feature list")));
                }
                let threshold: f64 = self.number(t)?;
                if !threshold.is_finite() {
                    return Err(self.err("threshold must be finite"));
                }
                let left = Box::new(self.node(behaviours, mask, seen)?);
                let right = Box::new(self.node(behaviours, mask, seen)?);
                Ok(TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                })
            }
            ["leaf", class, counts @ ..] => {
                let class: usize = self.number(class)?;
                if class >= behaviours.len() {
                    return Err(self.err(format!("class {class} out of range")));
                }
                if counts.len() != behaviours.len() {
                    return Err(self.err(format!(
                        "leaf needs {} counts, found {}",
                        behaviours.len(),
                        counts.len()
                    )));
                }
                let class_counts = counts
                    .iter()
                    .map(|c| self.number(c))
                    .collect::<Result<Vec<usize>>>()?;
                Ok(TreeNode::Leaf {
                    class,
                    class_counts,
                })
            }
            _ => Err(self.err(format!("expected `internal` or `leaf`, found {line:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;

    fn matrix(values: &[(f64, usize)]) -> FeatureMatrix {
        let rows = values
            .iter()
            .enumerate()
            .map(|(i, &(v, l))| {
                let mut vals = [0.0; N_FEATURES];
                vals[0] = v;
                FeatureVector {
                    values: vals,
                    label: l,
                    timestamp: i as u64,
                }
            })
            .collect();
        FeatureMatrix::new(vec!["A".into(), "B".into()], rows).unwrap()
    }

    fn ax_only() -> FeatureMask {
        FeatureMask::from_features([FeatureId::Ax])
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[4, 0]).unwrap(), 0.0);
        assert_eq!(gini(&[2, 2]).unwrap(), 0.5);
        assert!((gini(&[1, 2, 3]).unwrap() - 11.0 / 18.0).abs() < 1e-15);
        assert!(matches!(gini(&[0, 0]), Err(Error::Data(_))));
        assert_eq!(entropy(&[2, 2]).unwrap(), 1.0);
    }

    #[test]
    fn four_row_stump() {
        let fm = matrix(&[(1.0, 0), (2.0, 0), (3.0, 1), (4.0, 1)]);
        let m = fit(&fm, &TrainConfig::new(1, ax_only())).unwrap();
        match &m.root {
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                assert_eq!(*feature, FeatureId::Ax);
                assert_eq!(*threshold, 2.5);
                assert!(matches!(**left, TreeNode::Leaf { class: 0, .. }));
                assert!(matches!(**right, TreeNode::Leaf { class: 1, .. }));
            }
            leaf => panic!("expected a split, got {leaf:?}"),
        }
        assert_eq!(m.accuracy_on(&fm), 1.0);
        let mut v = [0.0; N_FEATURES];
        v[0] = 1.0;
        assert_eq!(m.predict(&v).unwrap(), 0);
        v[0] = 4.0;
        assert_eq!(m.predict(&v).unwrap(), 1);
        v[0] = 2.5;
        assert_eq!(m.predict(&v).unwrap(), 0);
    }

    #[test]
    fn pure_matrix_is_single_leaf() {
        let fm = matrix(&[(1.0, 1), (5.0, 1), (3.0, 1)]);
        let m = fit(&fm, &TrainConfig::new(14, FeatureMask::FULL)).unwrap();
        assert_eq!(m.depth(), 0);
        assert!(matches!(m.root, TreeNode::Leaf { class: 1, .. }));
        let v = [123.0; N_FEATURES];
        assert_eq!(m.predict(&v).unwrap(), 1);
    }

    #[test]
    fn config_and_data_errors() {
        let fm = matrix(&[(1.0, 0)]);
        assert!(matches!(
            fit(&fm, &TrainConfig::new(3, FeatureMask::EMPTY)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            fit(&fm, &TrainConfig::new(0, ax_only())),
            Err(Error::Config(_))
        ));
        let empty = FeatureMatrix::new(vec!["A".into()], vec![]).unwrap();
        assert!(matches!(
            fit(&empty, &TrainConfig::new(3, ax_only())),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn predict_rejects_non_finite_masked_values() {
        let fm = matrix(&[(1.0, 0), (2.0, 1)]);
        let m = fit(&fm, &TrainConfig::new(2, ax_only())).unwrap();
        let mut v = [0.0; N_FEATURES];
        v[1] = f64::NAN; // unmasked, ignored
        assert!(m.predict(&v).is_ok());
        v[0] = f64::INFINITY;
        assert!(matches!(m.predict(&v), Err(Error::Value { .. })));
    }

    #[test]
    fn midpoint_stays_below_upper_value() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        assert_eq!(midpoint(a, b), a);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
        assert_eq!(midpoint(-3.0, -1.0), -2.0);
    }

    #[test]
    fn oversampling_equalizes_counts() {
        let labels = [0, 0, 0, 0, 1, 2, 2];
        let idx = oversample_indices(&labels, 4);
        let mut counts = [0; 4];
        for &i in &idx {
            counts[labels[i]] += 1;
        }
        assert_eq!(counts, [4, 4, 4, 0]);
        assert_eq!(&idx[..7], &[0, 1, 2, 3, 4, 5, 6]);
        assert_eq!(&idx[7..], &[4, 4, 4, 5, 6]);
    }

    #[test]
    fn min_samples_leaf_blocks_small_children() {
        let fm = matrix(&[(1.0, 0), (2.0, 1), (3.0, 1), (4.0, 1)]);
        let mut cfg = TrainConfig::new(3, ax_only());
        cfg.min_samples_leaf = 2;
        let m = fit(&fm, &cfg).unwrap();
        let mut leaves = Vec::new();
        m.root.walk(&mut |n| {
            if let TreeNode::Leaf { class_counts, .. } = n {
                leaves.push(class_counts.iter().sum::<usize>());
            }
        });
        assert!(leaves.iter().all(|&n| n >= 2), "{leaves:?}");
    }

    #[test]
    fn serialized_text_shape() {
        let fm = matrix(&[(1.0, 0), (2.0, 0), (3.0, 1), (4.0, 1)]);
        let m = fit(&fm, &TrainConfig::new(1, ax_only())).unwrap();
        let text = m.serialize();
        assert_eq!(
            text,
            "behavtx-tree 1\nbehaviours A B\nfeatures AX\nmax_depth 1\nseed 0\nrows 4\n\
             range AX 1 4\nnodes 3\ninternal AX 2.5\nleaf 0 2 0\nleaf 1 0 2\nend\n"
        );
        assert_eq!(TreeModel::deserialize(&text).unwrap(), m);
    }

    #[test]
    fn malformed_model_text() {
        let fm = matrix(&[(1.0, 0), (2.0, 0), (3.0, 1), (4.0, 1)]);
        let text = fit(&fm, &TrainConfig::new(1, ax_only()))
            .unwrap()
            .serialize();
        let truncated: String = text.lines().take(9).map(|l| format!("{l}\n")).collect();
        assert!(matches!(
            TreeModel::deserialize(&truncated),
            Err(Error::Format { .. })
        ));
        let bad = text.replace("internal AX 2.5", "internal GX 2.5");
        match TreeModel::deserialize(&bad) {
            Err(Error::Format { location, .. }) => assert_eq!(location, "line 9"),
            other => panic!("{other:?}"),
        }
        assert!(TreeModel::deserialize(&text.replace("leaf 1 0 2", "leaf 1 0")).is_err());
        assert!(TreeModel::deserialize("").is_err());
    }
}
