use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CThreshold, ValueType};
use crate::cart::{TreeModel, TreeNode};
use crate::error::{Error, Result};
use crate::features::{FeatureId, N_FEATURES};

/// Test vectors in the C argument domain, each with the class the
/// reference tree predicts for it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalVectors {
    pub features: Vec<FeatureId>,
    pub value_type: ValueType,
    pub rows: Vec<(Vec<f64>, usize)>,
    /// Leading rows that were drawn at random; the rest are boundary probes.
    pub n_random: usize,
}

impl EvalVectors {
    /// Full feature vector in reference units for a C-domain row; unmasked
    /// features are zero.
    pub fn reference_values(&self, c_row: &[f64]) -> [f64; N_FEATURES] {
        let mut v = [0.0; N_FEATURES];
        for (f, c) in self.features.iter().zip(c_row) {
            v[f.index()] = self.value_type.to_reference(*c);
        }
        v
    }

    /// CSV: one column per parameter, then `expected_class`.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for f in &self.features {
            let _ = write!(s, "{},", f.name());
        }
        s.push_str("expected_class\n");
        for (vals, class) in &self.rows {
            for v in vals {
                let _ = write!(s, "{},", self.value_type.format_c_value(*v));
            }
            let _ = writeln!(s, "{class}");
        }
        s
    }

    pub fn from_csv(text: &str, value_type: ValueType) -> Result<EvalVectors> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::format("line 1", "missing header"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.last() != Some(&"expected_class") {
            return Err(Error::format(
                "line 1",
                "last column must be expected_class",
            ));
        }
        let features = cols[..cols.len() - 1]
            .iter()
            .map(|c| c.parse::<FeatureId>())
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let loc = format!("line {}", n + 1);
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != cols.len() {
                return Err(Error::format(
                    &loc,
                    format!("expected {} cells", cols.len()),
                ));
            }
            let vals = cells[..features.len()]
                .iter()
                .map(|c| {
                    let parsed = match value_type {
                        ValueType::Float => c.parse::<f32>().map(f64::from).ok(),
                        _ => c.parse::<f64>().ok(),
                    };
                    parsed.ok_or_else(|| Error::format(&loc, format!("bad value {c:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let class = cells[features.len()]
                .parse()
                .map_err(|_| Error::format(&loc, "bad class index"))?;
            rows.push((vals, class));
        }
        Ok(EvalVectors {
            features,
            value_type,
            n_random: rows.len(),
            rows,
        })
    }
}

fn sampling_range(m: &TreeModel, f: FeatureId) -> (f64, f64) {
    let recorded = m
        .meta
        .feature_ranges
        .iter()
        .find(|(g, _, _)| *g == f)
        .map(|&(_, lo, hi)| (lo, hi));
    let (lo, hi) = recorded.unwrap_or_else(|| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        m.root.walk(&mut |n| {
            if let TreeNode::Internal {
                feature, threshold, ..
            } = n
            {
                if *feature == f {
                    lo = lo.min(*threshold);
                    hi = hi.max(*threshold);
                }
            }
        });
        if lo.is_finite() {
            (lo, hi)
        } else {
            (-1.0, 1.0)
        }
    });
    let pad = if hi > lo { 0.1 * (hi - lo) } else { 1.0 };
    (lo - pad, hi + pad)
}

/// `n` random vectors across the training ranges, then probes at and
/// immediately around every split threshold, steered down the path to that
/// split. Expected classes come from [`TreeModel::predict`].
pub fn emit_eval_vectors(m: &TreeModel, n: usize, seed: u64, vt: ValueType) -> Result<EvalVectors> {
    if n == 0 {
        return Err(Error::Config("need at least one test vector".into()));
    }
    let features: Vec<FeatureId> = m.feature_mask.features().collect();
    let ranges: Vec<(f64, f64)> = features.iter().map(|f| sampling_range(m, *f)).collect();
    let mut out = EvalVectors {
        features,
        value_type: vt,
        rows: Vec::new(),
        n_random: n,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c_rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            ranges
                .iter()
                .map(|&(lo, hi)| vt.to_c_domain(rng.random_range(lo..=hi)))
                .collect()
        })
        .collect();

    let intervals = vec![(f64::NEG_INFINITY, f64::INFINITY); N_FEATURES];
    let mut probes = Vec::new();
    boundary_probes(&m.root, &intervals, &out, &ranges, &mut probes)?;
    c_rows.extend(probes);

    for row in c_rows {
        let class = m.predict(&out.reference_values(&row))?;
        out.rows.push((row, class));
    }
    Ok(out)
}

fn boundary_probes(
    node: &TreeNode,
    intervals: &[(f64, f64)],
    ev: &EvalVectors,
    ranges: &[(f64, f64)],
    out: &mut Vec<Vec<f64>>,
) -> Result<()> {
    let TreeNode::Internal {
        feature,
        threshold,
        left,
        right,
    } = node
    else {
        return Ok(());
    };
    let vt = ev.value_type;
    // A value inside (lo, hi] for every feature keeps the probe on this path.
    let base: Vec<f64> = ev
        .features
        .iter()
        .zip(ranges)
        .map(|(f, &(rlo, rhi))| {
            let (lo, hi) = intervals[f.index()];
            let x = if hi.is_finite() {
                hi
            } else if lo.is_finite() {
                lo + (rhi - rlo).abs().max(1.0) * 0.05
            } else {
                rlo / 2.0 + rhi / 2.0
            };
            to_c_domain_at_most(vt, x)
        })
        .collect();
    let pos = ev
        .features
        .iter()
        .position(|f| f == feature)
        .expect("split feature is in the mask");
    let at = CThreshold::new(*threshold, vt)?.as_c_value();
    let around = match vt {
        ValueType::Double => [at, at.next_down(), at.next_up()],
        ValueType::Float => {
            let f = at as f32;
            [at, f.next_down() as f64, f.next_up() as f64]
        }
        ValueType::Int16 { .. } => [at, at - 1.0, at + 1.0],
    };
    for v in around {
        if vt.to_c_domain(vt.to_reference(v)) != v {
            continue; // outside the representable range
        }
        let mut row = base.clone();
        row[pos] = v;
        out.push(row);
    }

    let mut l = intervals.to_vec();
    l[feature.index()].1 = l[feature.index()].1.min(*threshold);
    boundary_probes(left, &l, ev, ranges, out)?;
    let mut r = intervals.to_vec();
    r[feature.index()].0 = r[feature.index()].0.max(*threshold);
    boundary_probes(right, &r, ev, ranges, out)
}

/// Largest representable C-domain value whose reference value is <= x.
fn to_c_domain_at_most(vt: ValueType, x: f64) -> f64 {
    match vt {
        ValueType::Double => x,
        ValueType::Float => CThreshold::new(x, vt)
            .map(|t| t.as_c_value())
            .unwrap_or(x as f32 as f64),
        ValueType::Int16 { .. } => match CThreshold::new(x, vt) {
            Ok(t) => t
                .as_c_value()
                .clamp(f64::from(i16::MIN), f64::from(i16::MAX)),
            Err(_) => vt.to_c_domain(x),
        },
    }
}
