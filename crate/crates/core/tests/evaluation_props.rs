use behavtx::cart::{fit, TrainConfig};
use behavtx::evaluation::{
    evaluate, f1, fit_and_evaluate, rank_report, split, sweep, ConfusionMatrix, EvalMode, Metrics,
};
use behavtx::features::{FeatureId, FeatureMask, FeatureMatrix, FeatureVector};
use behavtx::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn names(k: usize) -> Vec<String> {
    (0..k).map(|c| format!("b{c}")).collect()
}

/// Rows where only AX carries the label; every other feature is noise.
fn ax_signal(n: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|i| {
            let label = i % 3;
            let mut values: [f64; 8] = std::array::from_fn(|_| rng.random_range(0.0..1.0));
            values[FeatureId::Ax.index()] = label as f64 * 10.0 + rng.random_range(0.0..1.0);
            FeatureVector {
                values,
                label,
                timestamp: i as u64,
            }
        })
        .collect();
    FeatureMatrix::new(names(3), rows).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_rows(labels in prop::collection::vec(0usize..3, 2..120), ratio in 0.1..0.9f64, seed in any::<u64>()) {
        let rows: Vec<FeatureVector> = labels
            .iter()
            .enumerate()
            .map(|(i, &label)| FeatureVector { values: [i as f64; 8], label, timestamp: i as u64 })
            .collect();
        let fm = FeatureMatrix::new(names(3), rows).unwrap();
        let counts = fm.class_counts();
        match split(&fm, ratio, seed) {
            Err(Error::Data(_)) => prop_assert!(counts.contains(&1)),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
            Ok((train, test)) => {
                let mut ts: Vec<u64> = train.rows().iter().chain(test.rows()).map(|r| r.timestamp).collect();
                ts.sort_unstable();
                prop_assert_eq!(ts, (0..labels.len() as u64).collect::<Vec<_>>());
                for part in [&train, &test] {
                    prop_assert!(part.rows().windows(2).all(|w| w[0].timestamp < w[1].timestamp));
                }
                for (c, &n) in counts.iter().enumerate() {
                    if n == 0 {
                        continue;
                    }
                    let k = ((ratio * n as f64).round() as usize).clamp(1, n - 1);
                    prop_assert_eq!(train.class_counts()[c], k);
                }
                prop_assert_eq!(split(&fm, ratio, seed).unwrap(), (train, test));
            }
        }
    }

    #[test]
    fn metrics_match_brute_force(pairs in prop::collection::vec((0usize..5, 0usize..5), 1..300), target in 0usize..5) {
        let cm = ConfusionMatrix::from_pairs(5, pairs.iter().copied());
        let m = Metrics::from_matrix(&cm, target);
        let n = pairs.len() as f64;
        let acc = pairs.iter().filter(|(a, p)| a == p).count() as f64 / n;
        prop_assert!((m.accuracy - acc).abs() < 1e-12);
        let mut weighted = 0.0;
        for c in 0..5 {
            let tp = pairs.iter().filter(|&&(a, p)| a == c && p == c).count() as f64;
            let fp = pairs.iter().filter(|&&(a, p)| a != c && p == c).count() as f64;
            let fneg = pairs.iter().filter(|&&(a, p)| a == c && p != c).count() as f64;
            let prec = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let rec = if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
            let f = if tp > 0.0 { 2.0 * tp / (2.0 * tp + fp + fneg) } else { 0.0 };
            prop_assert!((m.precision[c] - prec).abs() < 1e-12);
            prop_assert!((m.recall[c] - rec).abs() < 1e-12);
            prop_assert!((m.f1[c] - f).abs() < 1e-12);
            weighted += f * (tp + fneg) / n;
        }
        prop_assert!((m.target_f1 - m.f1[target]).abs() < 1e-15);
        prop_assert!((m.weighted_f1 - weighted).abs() < 1e-12);
        prop_assert_eq!(cm.total(), pairs.len() as u64);
    }
}

#[test]
fn f1_of_zero_is_zero() {
    assert_eq!(f1(0.0, 0.0), 0.0);
    assert!((f1(0.5, 1.0) - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn sweep_ranks_signal_feature_first() {
    let fm = ax_signal(90, 1);
    let cfg = TrainConfig::new(4, FeatureMask::FULL);
    let sr = sweep(&fm, &cfg, "b1", EvalMode::Resubstitution, None).unwrap();
    assert_eq!(sr.entries.len(), 255);
    assert_eq!(
        sr.entries[0].mask,
        FeatureMask::from_features([FeatureId::Ax])
    );
    let ax = FeatureMask::from_features([FeatureId::Ax]);
    for e in &sr.entries {
        if e.mask.contains(FeatureId::Ax) {
            assert_eq!(e.target_f1, 1.0, "{}", e.mask.render());
        }
    }
    assert!(
        sr.entries
            .iter()
            .position(|e| !e.mask.contains(FeatureId::Ax))
            .unwrap()
            >= 128
    );
    assert_eq!(sr.entry_for(ax).unwrap().rank, 1);
    let ranks: Vec<usize> = sr.entries.iter().map(|e| e.rank).collect();
    assert_eq!(ranks, (1..=255).collect::<Vec<_>>());
    let report = rank_report(&sr, 5);
    assert_eq!(report.lines().count(), 7);
    assert!(report.contains("255 subsets"));
}

#[test]
fn sweep_ignores_row_order() {
    let fm = ax_signal(60, 2);
    let mut idx: Vec<usize> = (0..fm.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
    let shuffled = fm.select(&idx);
    let cfg = TrainConfig::new(3, FeatureMask::FULL);
    let a = sweep(&fm, &cfg, "b0", EvalMode::Resubstitution, None).unwrap();
    let b = sweep(&shuffled, &cfg, "b0", EvalMode::Resubstitution, Some(2)).unwrap();
    assert_eq!(a.entries, b.entries);
}

#[test]
fn full_mask_entry_equals_standalone_fit() {
    let fm = ax_signal(60, 3);
    let cfg = TrainConfig::new(2, FeatureMask::FULL);
    for mode in [EvalMode::Resubstitution, EvalMode::holdout(4)] {
        let sr = sweep(&fm, &cfg, "b2", mode, Some(3)).unwrap();
        let (model, _, m) = fit_and_evaluate(&fm, &cfg, "b2", mode).unwrap();
        let e = sr.entry_for(FeatureMask::FULL).unwrap();
        assert_eq!(e.target_f1, m.target_f1);
        assert_eq!(e.accuracy, m.accuracy);
        assert_eq!(e.depth, model.depth());
    }
}

#[test]
fn evaluation_errors() {
    let fm = ax_signal(30, 4);
    let cfg = TrainConfig::new(2, FeatureMask::FULL);
    assert!(matches!(
        sweep(&fm, &cfg, "nobody", EvalMode::Resubstitution, None),
        Err(Error::Label(_))
    ));
    let model = fit(&fm, &cfg).unwrap();
    assert!(matches!(evaluate(&model, &fm, "zzz"), Err(Error::Label(_))));
    let one_class = fm.select(&[0, 3, 6]);
    assert!(matches!(
        sweep(&one_class, &cfg, "b0", EvalMode::Resubstitution, None),
        Err(Error::Data(_))
    ));
    assert!(matches!(split(&fm, 1.0, 0), Err(Error::Config(_))));
}
