use behavtx::datamodel::{
    apportion, export_csv, format_sample, ingest_csv, ingest_csv_with, quantize, synthesize,
    write_csv, Dataset, SensorRecord, SynthProtocol, PRESETS,
};
use behavtx::Error;
use proptest::prelude::*;

fn burst() -> impl Strategy<Value = [f64; 50]> {
    prop::array::uniform32(-40.0..40.0f64).prop_flat_map(|head| {
        prop::collection::vec(-40.0..40.0f64, 18).prop_map(move |tail| {
            let mut b = [0.0; 50];
            b[..32].copy_from_slice(&head);
            b[32..].copy_from_slice(&tail);
            b.map(quantize)
        })
    })
}

fn record() -> impl Strategy<Value = (u64, [[f64; 50]; 3], [[f64; 50]; 3], usize)> {
    (
        1u64..100,
        [burst(), burst(), burst()],
        [burst(), burst(), burst()],
        0usize..3,
    )
}

fn dataset() -> impl Strategy<Value = Dataset> {
    prop::collection::vec(record(), 0..6).prop_map(|recs| {
        let mut t = 0;
        let records = recs
            .into_iter()
            .map(|(gap, acc, gyro, label)| {
                t += gap;
                SensorRecord {
                    timestamp: t,
                    acc,
                    gyro,
                    label,
                }
            })
            .collect();
        let names = ["rest", "walk", "run"].map(String::from).to_vec();
        Dataset::new("prop", names, records).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_round_trip_is_identity(ds in dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prop.csv");
        export_csv(&ds, &path).unwrap();
        let declared = ds.behaviours().to_vec();
        let back = ingest_csv_with(&path, Some(&declared)).unwrap();
        prop_assert_eq!(back.records(), ds.records());
        prop_assert_eq!(back.source_id(), "prop");
    }

    #[test]
    fn class_frequency_matches_counting_loop(ds in dataset()) {
        let mut total = 0.0;
        for (i, b) in ds.behaviours().iter().enumerate() {
            let f = ds.class_frequency(b).unwrap();
            let mut hits = 0usize;
            for r in ds.records() {
                if r.label == i {
                    hits += 1;
                }
            }
            let want = if ds.is_empty() { 0.0 } else { hits as f64 / ds.len() as f64 };
            prop_assert!((f - want).abs() < 1e-15);
            total += f;
        }
        if !ds.is_empty() {
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quantize_is_idempotent(x in -1.0e6..1.0e6f64) {
        let q = quantize(x);
        prop_assert_eq!(quantize(q), q);
        prop_assert!((q - x).abs() <= 5e-7 * (1.0 + x.abs() * 1e-9));
        prop_assert!(!format_sample(x).ends_with('.'));
    }

    #[test]
    fn apportion_sums_to_total(total in 1u64..10_000, raw in prop::collection::vec(0.1..50.0f64, 1..8)) {
        let sum: f64 = raw.iter().sum();
        let pct: Vec<f64> = raw.iter().map(|r| 100.0 * r / sum).collect();
        let parts = apportion(total, &pct);
        prop_assert_eq!(parts.iter().sum::<u64>(), total);
        for (p, q) in parts.iter().zip(&pct) {
            let exact = total as f64 * q / 100.0;
            prop_assert!((*p as f64 - exact).abs() < 1.0 + 1e-9);
        }
    }
}

#[test]
fn preset_ea60_counts_and_frequency() {
    let ds = synthesize(&SynthProtocol::preset("paper-ea60").unwrap()).unwrap();
    assert_eq!(ds.len(), 2350);
    assert_eq!(ds.class_counts(), vec![516, 272, 414, 976, 172]);
    let f = ds.class_frequency("standing").unwrap();
    assert!((f - 0.1762).abs() < 5e-5, "{f}");
}

#[test]
fn preset_totals() {
    let totals: Vec<usize> = PRESETS
        .iter()
        .map(|p| {
            synthesize(&SynthProtocol::preset(p).unwrap())
                .unwrap()
                .len()
        })
        .collect();
    assert_eq!(totals, vec![2350, 2320, 2340]);
    assert!(matches!(
        SynthProtocol::preset("nope"),
        Err(Error::Protocol(_))
    ));
}

#[test]
fn synthesis_is_deterministic_per_seed() {
    let proto = SynthProtocol::preset("paper-ebf8").unwrap();
    let bytes = |p: &SynthProtocol| {
        let mut out = Vec::new();
        write_csv(&synthesize(p).unwrap(), &mut out).unwrap();
        out
    };
    let a = bytes(&proto);
    assert_eq!(a, bytes(&proto));
    let mut other = proto.clone();
    other.seed += 1;
    assert_ne!(a, bytes(&other));
}

#[test]
fn synthesized_export_round_trips() {
    let ds = synthesize(&SynthProtocol::preset("paper-ed3c").unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ED3C.csv");
    export_csv(&ds, &path).unwrap();
    let back = ingest_csv(&path).unwrap();
    assert_eq!(back.source_id(), "ED3C");
    assert_eq!(back.records(), ds.records());
}

#[test]
fn ingest_reports_row_of_bad_value() {
    let ds = synthesize(&SynthProtocol::preset("paper-ea60").unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut out = Vec::new();
    write_csv(&ds, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines: Vec<String> = text.lines().take(5).map(String::from).collect();
    let mut cells: Vec<&str> = lines[3].split(',').collect();
    cells[5] = "abc";
    lines[3] = cells.join(",");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    match ingest_csv(&path) {
        Err(Error::Value { row, .. }) => assert_eq!(row, Some(2)),
        other => panic!("unexpected {other:?}"),
    }
}
