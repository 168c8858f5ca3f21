use behavtx::cart::{fit, gini, midpoint, oversample_indices, TrainConfig, TreeModel, TreeNode};
use behavtx::datamodel::{synthesize, SynthProtocol};
use behavtx::features::{featurize, FeatureId, FeatureMask, FeatureMatrix, FeatureVector};
use behavtx::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recursive walk, written independently of `TreeModel::predict`.
fn interpret(node: &TreeNode, v: &[f64; 8]) -> usize {
    match node {
        TreeNode::Leaf { class, .. } => *class,
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            if v[feature.index()] <= *threshold {
                interpret(left, v)
            } else {
                interpret(right, v)
            }
        }
    }
}

fn leaf_totals(node: &TreeNode, acc: &mut Vec<usize>) {
    match node {
        TreeNode::Leaf { class_counts, .. } => {
            acc.resize(acc.len().max(class_counts.len()), 0);
            for (a, c) in acc.iter_mut().zip(class_counts) {
                *a += c;
            }
        }
        TreeNode::Internal { left, right, .. } => {
            leaf_totals(left, acc);
            leaf_totals(right, acc);
        }
    }
}

fn matrix(rows: Vec<([f64; 3], usize)>, n_classes: usize) -> FeatureMatrix {
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(i, (v, label))| {
            let mut values = [0.0; 8];
            values[FeatureId::Ax.index()] = v[0];
            values[FeatureId::Gy.index()] = v[1];
            values[FeatureId::Vedba.index()] = v[2];
            FeatureVector {
                values,
                label,
                timestamp: i as u64,
            }
        })
        .collect();
    let names = (0..n_classes).map(|c| format!("c{c}")).collect();
    FeatureMatrix::new(names, rows).unwrap()
}

fn three() -> FeatureMask {
    FeatureMask::from_features([FeatureId::Ax, FeatureId::Gy, FeatureId::Vedba])
}

fn rows_strategy() -> impl Strategy<Value = Vec<([f64; 3], usize)>> {
    prop::collection::vec(
        (
            [-5.0..5.0f64, 0.0..5.0f64, 0.0..5.0f64]
                .prop_map(|v| v.map(|x| (x * 4.0).round() / 4.0)),
            0usize..3,
        ),
        1..60,
    )
}

fn ea60_model() -> (TreeModel, FeatureMatrix) {
    let fm =
        featurize(&synthesize(&SynthProtocol::preset("paper-ea60").unwrap()).unwrap()).unwrap();
    (
        fit(&fm, &TrainConfig::new(14, FeatureMask::FULL)).unwrap(),
        fm,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn fitted_trees_respect_structure(rows in rows_strategy(), k in 1usize..8) {
        let fm = matrix(rows, 3);
        let m = fit(&fm, &TrainConfig::new(k, three())).unwrap();
        prop_assert!(m.depth() <= k);
        let mut totals = Vec::new();
        leaf_totals(&m.root, &mut totals);
        totals.resize(3, 0);
        prop_assert_eq!(totals, fm.class_counts());
        let mut ok = true;
        m.root.walk(&mut |n| {
            if let TreeNode::Internal { feature, threshold, .. } = n {
                ok &= three().contains(*feature) && threshold.is_finite();
            }
        });
        prop_assert!(ok);
        for r in fm.rows() {
            prop_assert_eq!(m.predict(&r.values).unwrap(), interpret(&m.root, &r.values));
        }
    }

    #[test]
    fn accuracy_monotone_in_depth(rows in rows_strategy()) {
        let fm = matrix(rows, 3);
        let mut prev = 0.0;
        for k in 1..=10 {
            let acc = fit(&fm, &TrainConfig::new(k, three())).unwrap().accuracy_on(&fm);
            prop_assert!(acc >= prev);
            prev = acc;
        }
    }

    #[test]
    fn separable_by_one_feature_needs_one_split(xs in prop::collection::vec(-10.0..10.0f64, 2..40), cut in -5.0..5.0f64) {
        let rows: Vec<_> = xs.iter().map(|&x| ([x, 1.0, 1.0], usize::from(x > cut))).collect();
        let fm = matrix(rows, 2);
        let m = fit(&fm, &TrainConfig::new(3, three())).unwrap();
        prop_assert_eq!(m.accuracy_on(&fm), 1.0);
        prop_assert!(m.depth() <= 1);
    }

    #[test]
    fn midpoint_lies_between(a in -1e6..1e6f64, d in 0.0..1e3f64) {
        let b = a + d;
        prop_assume!(a < b);
        let m = midpoint(a, b);
        prop_assert!(a <= m && m < b);
    }

    #[test]
    fn oversampling_balances_classes(labels in prop::collection::vec(0usize..4, 1..80)) {
        let idx = oversample_indices(&labels, 4);
        prop_assert_eq!(&idx[..labels.len()], &(0..labels.len()).collect::<Vec<_>>()[..]);
        let mut before = [0usize; 4];
        let mut after = [0usize; 4];
        for &l in &labels {
            before[l] += 1;
        }
        for &i in &idx {
            after[labels[i]] += 1;
        }
        let top = *before.iter().max().unwrap();
        for c in 0..4 {
            prop_assert_eq!(after[c], if before[c] == 0 { 0 } else { top });
        }
        prop_assert_eq!(oversample_indices(&labels, 4), idx);
    }

    #[test]
    fn gini_bounds(counts in prop::collection::vec(0usize..50, 1..6)) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let g = gini(&counts).unwrap();
        let k = counts.len() as f64;
        prop_assert!(g >= 0.0 && g <= 1.0 - 1.0 / k + 1e-12);
    }
}

#[test]
fn predict_matches_interpreter_on_random_vectors() {
    let (m, _) = ea60_model();
    let ranges = m.meta.feature_ranges.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let mut v = [0.0; 8];
        for &(f, lo, hi) in &ranges {
            v[f.index()] = rng.random_range(lo - 1.0..=hi + 1.0);
        }
        assert_eq!(m.predict(&v).unwrap(), interpret(&m.root, &v));
    }
}

#[test]
fn depth14_serialization_round_trip() {
    let (m, fm) = ea60_model();
    let text = m.serialize();
    let back = TreeModel::deserialize(&text).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.serialize(), text);
    for r in fm.rows().iter().take(1000) {
        assert_eq!(
            back.predict(&r.values).unwrap(),
            m.predict(&r.values).unwrap()
        );
    }
}

#[test]
fn deterministic_fit() {
    let (a, fm) = ea60_model();
    let b = fit(&fm, &TrainConfig::new(14, FeatureMask::FULL)).unwrap();
    assert_eq!(a.serialize(), b.serialize());
}

#[test]
fn config_and_data_errors() {
    let fm = matrix(vec![([0.0, 0.0, 0.0], 0), ([1.0, 0.0, 0.0], 1)], 2);
    assert!(matches!(
        fit(&fm, &TrainConfig::new(0, three())),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        fit(&fm, &TrainConfig::new(2, FeatureMask::EMPTY)),
        Err(Error::Config(_))
    ));
    let empty = matrix(vec![], 2);
    assert!(matches!(
        fit(&empty, &TrainConfig::new(2, three())),
        Err(Error::Data(_))
    ));
    let m = fit(&fm, &TrainConfig::new(2, three())).unwrap();
    let mut v = [0.0; 8];
    v[FeatureId::Ax.index()] = f64::NAN;
    assert!(m.predict(&v).is_err());
    v[FeatureId::Ax.index()] = 0.0;
    v[FeatureId::Gz.index()] = f64::NAN;
    assert_eq!(m.predict(&v).unwrap(), 0, "unmasked features are not read");
}
