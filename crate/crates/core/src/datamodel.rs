//! Labelled IMU burst data: records, datasets, the burst CSV format and a
//! seeded synthetic generator.
//!
//! One [`SensorRecord`] is one second of 50 Hz data: 50 accelerometer
//! samples (m/s²) and 50 gyroscope samples (rad/s) per axis, plus the index
//! of the behaviour shown during that second.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per axis per record (50 Hz bursts, one second each).
pub const SAMPLES_PER_SECOND: usize = 50;

pub type Burst = [f64; SAMPLES_PER_SECOND];

const AXIS_GROUPS: [&str; 6] = ["acc_x", "acc_y", "acc_z", "gyr_x", "gyr_y", "gyr_z"];

/// Value cells per CSV row, excluding the label.
pub const VALUE_CELLS: usize = 1 + AXIS_GROUPS.len() * SAMPLES_PER_SECOND;

#[derive(Debug, Clone, PartialEq)]
pub struct SensorRecord {
    pub timestamp: u64,
    pub acc: [Burst; 3],
    pub gyro: [Burst; 3],
    pub label: usize,
}

impl SensorRecord {
    fn check_finite(&self) -> bool {
        self.acc
            .iter()
            .chain(self.gyro.iter())
            .all(|b| b.iter().all(|v| v.is_finite()))
    }
}

/// An ordered, validated collection of records. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    source_id: String,
    behaviours: Vec<String>,
    records: Vec<SensorRecord>,
}

/// Behaviour names travel through CSV cells and whitespace-separated model
/// text, so they must not contain separators.
pub fn validate_behaviour_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::Label("empty behaviour name".into()));
    }
    if name
        .chars()
        .any(|c| c.is_whitespace() || c == ',' || c == ';' || c == '"')
    {
        return Err(Error::Label(format!(
            "behaviour name {name:?} contains a separator character"
        )));
    }
    Ok(())
}

impl Dataset {
    pub fn new(
        source_id: impl Into<String>,
        behaviours: Vec<String>,
        records: Vec<SensorRecord>,
    ) -> Result<Self> {
        let mut seen = HashSet::new();
        for b in &behaviours {
            validate_behaviour_name(b)?;
            if !seen.insert(b.as_str()) {
                return Err(Error::Label(format!("duplicate behaviour {b:?}")));
            }
        }
        let mut prev: Option<u64> = None;
        for (row, r) in records.iter().enumerate() {
            if r.label >= behaviours.len() {
                return Err(Error::Label(format!(
                    "row {row}: label index {} outside {} behaviours",
                    r.label,
                    behaviours.len()
                )));
            }
            if !r.check_finite() {
                return Err(Error::value(Some(row), "non-finite sample"));
            }
            if let Some(p) = prev {
                if r.timestamp <= p {
                    return Err(Error::value(
                        Some(row),
                        format!("timestamp {} not after {p}", r.timestamp),
                    ));
                }
            }
            prev = Some(r.timestamp);
        }
        Ok(Dataset {
            source_id: source_id.into(),
            behaviours,
            records,
        })
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn behaviours(&self) -> &[String] {
        &self.behaviours
    }

    pub fn records(&self) -> &[SensorRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn behaviour_index(&self, name: &str) -> Result<usize> {
        self.behaviours
            .iter()
            .position(|b| b == name)
            .ok_or_else(|| Error::Label(format!("unknown behaviour {name:?}")))
    }

    /// Fraction of records labelled `behaviour`.
    pub fn class_frequency(&self, behaviour: &str) -> Result<f64> {
        let idx = self.behaviour_index(behaviour)?;
        if self.records.is_empty() {
            return Ok(0.0);
        }
        let hits = self.records.iter().filter(|r| r.label == idx).count();
        Ok(hits as f64 / self.records.len() as f64)
    }

    /// Record count per behaviour index.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.behaviours.len()];
        for r in &self.records {
            counts[r.label] += 1;
        }
        counts
    }
}

// ---------------------------------------------------------------------------
// Burst CSV
// ---------------------------------------------------------------------------

/// The exact header row of the burst CSV format.
pub fn csv_header() -> Vec<String> {
    let mut h = Vec::with_capacity(VALUE_CELLS + 1);
    h.push("timestamp".to_string());
    for g in AXIS_GROUPS {
        for i in 0..SAMPLES_PER_SECOND {
            h.push(format!("{g}_{i:02}"));
        }
    }
    h.push("label".to_string());
    h
}

/// Decimal rendering with at most six fraction digits, trailing zeros trimmed.
pub fn format_sample(x: f64) -> String {
    let mut s = format!("{x:.6}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// The value `x` becomes after a trip through the CSV format.
pub fn quantize(x: f64) -> f64 {
    format_sample(x).parse().expect("formatted float parses")
}

/// Reads a burst CSV, inferring behaviours in order of first appearance.
/// The dataset's `source_id` is the file stem.
pub fn ingest_csv(path: &Path) -> Result<Dataset> {
    ingest_csv_with(path, None)
}

/// Reads a burst CSV. With `declared` set, labels must come from that list
/// and indices follow its order.
pub fn ingest_csv_with(path: &Path, declared: Option<&[String]>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(BufReader::new(file));

    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h.map_err(|e| csv_error(path, e))?,
        None => return Err(Error::format("line 1", "missing header row")),
    };
    check_header(&header)?;

    let mut behaviours: Vec<String> = declared.map(|d| d.to_vec()).unwrap_or_default();
    let mut records = Vec::new();
    for (row, rec) in rows.enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != VALUE_CELLS + 1 {
            return Err(Error::format(
                format!("data row {row}"),
                format!("expected {} cells, found {}", VALUE_CELLS + 1, rec.len()),
            ));
        }
        let ts_cell = rec.get(0).unwrap_or("");
        let timestamp: u64 = ts_cell
            .trim()
            .parse()
            .map_err(|_| Error::value(Some(row), format!("bad timestamp {ts_cell:?}")))?;
        let mut acc = [[0.0; SAMPLES_PER_SECOND]; 3];
        let mut gyro = [[0.0; SAMPLES_PER_SECOND]; 3];
        for (g, group) in AXIS_GROUPS.iter().enumerate() {
            let burst = if g < 3 { &mut acc[g] } else { &mut gyro[g - 3] };
            for (i, slot) in burst.iter_mut().enumerate() {
                let cell = rec.get(1 + g * SAMPLES_PER_SECOND + i).unwrap_or("");
                let v: f64 = cell.trim().parse().map_err(|_| {
                    Error::value(Some(row), format!("{group}_{i:02}: bad number {cell:?}"))
                })?;
                if !v.is_finite() {
                    return Err(Error::value(
                        Some(row),
                        format!("{group}_{i:02}: non-finite value {cell:?}"),
                    ));
                }
                *slot = v;
            }
        }
        let name = rec.get(VALUE_CELLS).unwrap_or("");
        validate_behaviour_name(name).map_err(|e| match e {
            Error::Label(m) => Error::Label(format!("row {row}: {m}")),
            other => other,
        })?;
        let label = match behaviours.iter().position(|b| b == name) {
            Some(i) => i,
            None if declared.is_some() => {
                return Err(Error::Label(format!(
                    "row {row}: unknown behaviour {name:?}"
                )))
            }
            None => {
                behaviours.push(name.to_string());
                behaviours.len() - 1
            }
        };
        records.push(SensorRecord {
            timestamp,
            acc,
            gyro,
            label,
        });
    }

    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(source_id, behaviours, records)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let location = match e.position() {
        Some(p) => format!("{} line {}", path.display(), p.line()),
        None => path.display().to_string(),
    };
    Error::format(location, e.to_string())
}

fn check_header(header: &csv::StringRecord) -> Result<()> {
    let expected = csv_header();
    for (col, want) in expected.iter().enumerate() {
        let got = header.get(col);
        if got.map(str::trim) != Some(want.as_str()) {
            let group = if col == 0 {
                "timestamp"
            } else if col == VALUE_CELLS {
                "label"
            } else {
                AXIS_GROUPS[(col - 1) / SAMPLES_PER_SECOND]
            };
            return Err(Error::format(
                format!("header column {col}"),
                format!(
                    "column group {group}: expected {want:?}, found {:?}",
                    got.unwrap_or("<end of row>")
                ),
            ));
        }
    }
    if header.len() != expected.len() {
        return Err(Error::format(
            "header",
            format!(
                "{} extra columns after label",
                header.len() - expected.len()
            ),
        ));
    }
    Ok(())
}

/// Writes `ds` as burst CSV. Samples are printed with up to six fraction
/// digits; [`quantize`] describes the resulting precision.
pub fn export_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_csv(ds, &mut buf).map_err(|e| Error::io(path, e))?;
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_csv<W: Write>(ds: &Dataset, out: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(csv_header())?;
    let mut row: Vec<String> = Vec::with_capacity(VALUE_CELLS + 1);
    for r in ds.records() {
        row.clear();
        row.push(r.timestamp.to_string());
        for burst in r.acc.iter().chain(r.gyro.iter()) {
            row.extend(burst.iter().map(|&v| format_sample(v)));
        }
        row.push(ds.behaviours()[r.label].clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Signal model for one behaviour of a synthetic recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviourSpec {
    pub name: String,
    /// Total seconds of this behaviour across the whole sequence.
    pub duration_s: u64,
    /// Static (gravity + posture) acceleration, m/s².
    pub acc_mean: [f64; 3],
    pub acc_noise: f64,
    pub gyro_noise: [f64; 3],
    /// Gait oscillation amplitude on the vertical axis, m/s².
    #[serde(default)]
    pub gait_amplitude: f64,
    #[serde(default)]
    pub gait_frequency: f64,
    /// Per-second posture wobble added to `acc_mean`, stddev in m/s².
    #[serde(default)]
    pub posture_jitter: f64,
    /// Per-second lognormal spread of the gyroscope noise level.
    #[serde(default)]
    pub gyro_variability: f64,
    /// Per-second lognormal spread of the gait amplitude.
    #[serde(default)]
    pub gait_variability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthProtocol {
    pub source_id: String,
    pub seed: u64,
    pub behaviours: Vec<BehaviourSpec>,
    /// Task order. A behaviour listed several times has its duration split
    /// evenly across its occurrences.
    pub sequence: Vec<String>,
    #[serde(default)]
    pub start_timestamp: u64,
    /// Seconds skipped between tasks (trimmed transitions).
    #[serde(default)]
    pub transition_gap_s: u64,
}

pub const PRESETS: [&str; 3] = ["paper-ea60", "paper-ebf8", "paper-ed3c"];

const PRESET_BEHAVIOURS: [&str; 5] = ["lying", "sitting", "standing", "walking", "running"];

/// Splits `total` into integer parts proportional to `percent` using
/// largest remainders; ties go to the lower index.
pub fn apportion(total: u64, percent: &[f64]) -> Vec<u64> {
    let sum: f64 = percent.iter().sum();
    let exact: Vec<f64> = percent.iter().map(|p| total as f64 * p / sum).collect();
    let mut parts: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
    let assigned: u64 = parts.iter().sum();
    let mut order: Vec<usize> = (0..percent.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take((total - assigned) as usize) {
        parts[i] += 1;
    }
    parts
}

impl SynthProtocol {
    /// Built-in protocols mirroring the behaviour mix of the three
    /// head-mounted recordings (lying, sitting, standing, walking, running).
    pub fn preset(name: &str) -> Result<Self> {
        let (id, total, pct, seed): (&str, u64, [f64; 5], u64) = match name {
            "paper-ea60" => ("EA60", 2350, [21.97, 11.58, 17.62, 41.51, 7.32], 0xEA60),
            "paper-ebf8" => ("EBF8", 2320, [21.3, 11.82, 17.9, 41.57, 7.42], 0xEBF8),
            // 2340 is the tabulated count; the narrative gives 2240.
            "paper-ed3c" => ("ED3C", 2340, [21.98, 11.93, 12.44, 46.47, 7.18], 0xED3C),
            _ => {
                return Err(Error::Protocol(format!(
                    "unknown preset {name:?} (known: {})",
                    PRESETS.join(", ")
                )))
            }
        };
        let durations = apportion(total, &pct);
        let spec = |i: usize,
                    acc_mean: [f64; 3],
                    acc_noise: f64,
                    gyro_noise: [f64; 3],
                    gait: (f64, f64),
                    posture_jitter: f64,
                    variability: (f64, f64)| BehaviourSpec {
            name: PRESET_BEHAVIOURS[i].to_string(),
            duration_s: durations[i],
            acc_mean,
            acc_noise,
            gyro_noise,
            gait_amplitude: gait.0,
            gait_frequency: gait.1,
            posture_jitter,
            gyro_variability: variability.0,
            gait_variability: variability.1,
        };
        let behaviours = vec![
            spec(
                0,
                [9.3, 0.8, 2.9],
                0.05,
                [0.03, 0.03, 0.03],
                (0.0, 0.0),
                0.8,
                (0.5, 0.0),
            ),
            spec(
                1,
                [1.6, 0.4, 9.6],
                0.08,
                [0.08, 0.07, 0.09],
                (0.1, 0.5),
                0.6,
                (0.6, 0.5),
            ),
            spec(
                2,
                [1.0, 0.3, 9.7],
                0.12,
                [0.18, 0.14, 0.2],
                (0.3, 0.8),
                0.6,
                (0.6, 0.5),
            ),
            spec(
                3,
                [1.1, 0.3, 9.7],
                0.3,
                [0.3, 0.25, 0.35],
                (1.8, 1.9),
                0.6,
                (0.5, 0.35),
            ),
            spec(
                4,
                [1.3, 0.4, 9.5],
                0.8,
                [0.9, 0.8, 1.0],
                (5.0, 2.7),
                0.7,
                (0.3, 0.3),
            ),
        ];
        let sequence = [
            "lying", "sitting", "standing", "walking", "running", "walking", "standing", "sitting",
            "walking", "lying", "standing", "walking", "running", "standing", "walking",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        Ok(SynthProtocol {
            source_id: id.to_string(),
            seed,
            behaviours,
            sequence,
            start_timestamp: 0,
            transition_gap_s: 4,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.sequence.is_empty() {
            return Err(Error::Protocol("zero-length behaviour sequence".into()));
        }
        if self.behaviours.is_empty() {
            return Err(Error::Protocol("no behaviours declared".into()));
        }
        let mut names = HashSet::new();
        for b in &self.behaviours {
            validate_behaviour_name(&b.name).map_err(|e| Error::Protocol(e.to_string()))?;
            if !names.insert(b.name.as_str()) {
                return Err(Error::Protocol(format!("duplicate behaviour {:?}", b.name)));
            }
            if b.duration_s == 0 {
                return Err(Error::Protocol(format!("{}: duration must be > 0", b.name)));
            }
            let stddevs = [
                b.acc_noise,
                b.posture_jitter,
                b.gyro_variability,
                b.gait_variability,
            ]
            .into_iter()
            .chain(b.gyro_noise);
            for s in stddevs {
                if !(s.is_finite() && s >= 0.0) {
                    return Err(Error::Protocol(format!(
                        "{}: noise levels must be finite and >= 0",
                        b.name
                    )));
                }
            }
            let other = b
                .acc_mean
                .iter()
                .chain([&b.gait_amplitude, &b.gait_frequency]);
            if other.into_iter().any(|v| !v.is_finite()) {
                return Err(Error::Protocol(format!("{}: non-finite parameter", b.name)));
            }
            let occurrences = self.sequence.iter().filter(|s| **s == b.name).count() as u64;
            if occurrences == 0 {
                return Err(Error::Protocol(format!(
                    "{} is declared but never appears in the sequence",
                    b.name
                )));
            }
            if occurrences > b.duration_s {
                return Err(Error::Protocol(format!(
                    "{}: {} occurrences cannot share {} s",
                    b.name, occurrences, b.duration_s
                )));
            }
        }
        for s in &self.sequence {
            if !names.contains(s.as_str()) {
                return Err(Error::Protocol(format!(
                    "sequence names undeclared behaviour {s:?}"
                )));
            }
        }
        Ok(())
    }

    /// Seconds allotted to each entry of `sequence`.
    pub fn segment_durations(&self) -> Vec<u64> {
        let mut seen = vec![0u64; self.behaviours.len()];
        self.sequence
            .iter()
            .map(|name| {
                let b = self
                    .behaviours
                    .iter()
                    .position(|b| &b.name == name)
                    .unwrap();
                let m = self.sequence.iter().filter(|s| *s == name).count() as u64;
                let d = self.behaviours[b].duration_s;
                let k = seen[b];
                seen[b] += 1;
                d / m + u64::from(k < d % m)
            })
            .collect()
    }
}

/// Generates a dataset from `proto`. Pure function of the protocol: the same
/// protocol yields a bit-identical dataset. All samples are pre-quantized so
/// the result survives a CSV round trip unchanged.
pub fn synthesize(proto: &SynthProtocol) -> Result<Dataset> {
    proto.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(proto.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    // Behaviours are indexed by first appearance in the sequence, which is
    // also how ingest_csv infers them.
    let mut behaviours: Vec<String> = Vec::new();
    for s in &proto.sequence {
        if !behaviours.contains(s) {
            behaviours.push(s.clone());
        }
    }

    let durations = proto.segment_durations();
    let mut records = Vec::new();
    let mut ts = proto.start_timestamp;
    for (seg, (name, &dur)) in proto.sequence.iter().zip(&durations).enumerate() {
        if seg > 0 {
            ts += proto.transition_gap_s;
        }
        let spec = proto.behaviours.iter().find(|b| &b.name == name).unwrap();
        let label = behaviours.iter().position(|b| b == name).unwrap();
        for _ in 0..dur {
            records.push(synth_record(spec, ts, label, &mut rng, &std_normal));
            ts += 1;
        }
    }
    Dataset::new(proto.source_id.clone(), behaviours, records)
}

fn synth_record(
    spec: &BehaviourSpec,
    timestamp: u64,
    label: usize,
    rng: &mut ChaCha8Rng,
    n: &Normal<f64>,
) -> SensorRecord {
    let mut wobble = [0.0; 3];
    for w in &mut wobble {
        *w = spec.posture_jitter * n.sample(rng);
    }
    let gyro_level = (spec.gyro_variability * n.sample(rng)).exp();
    let amp = spec.gait_amplitude * (spec.gait_variability * n.sample(rng)).exp();
    let mut acc = [[0.0; SAMPLES_PER_SECOND]; 3];
    let mut gyro = [[0.0; SAMPLES_PER_SECOND]; 3];
    for i in 0..SAMPLES_PER_SECOND {
        let t = timestamp as f64 + i as f64 / SAMPLES_PER_SECOND as f64;
        let phase = 2.0 * PI * spec.gait_frequency * t;
        let motion_acc = [
            0.4 * amp * (0.5 * phase).sin(),
            0.25 * amp * phase.cos(),
            amp * phase.sin(),
        ];
        let motion_gyro = [
            0.12 * amp * phase.cos(),
            0.08 * amp * (0.5 * phase).sin(),
            0.05 * amp * phase.sin(),
        ];
        for a in 0..3 {
            acc[a][i] = quantize(
                spec.acc_mean[a] + wobble[a] + motion_acc[a] + spec.acc_noise * n.sample(rng),
            );
            gyro[a][i] = quantize(motion_gyro[a] + gyro_level * spec.gyro_noise[a] * n.sample(rng));
        }
    }
    SensorRecord {
        timestamp,
        acc,
        gyro,
        label,
    }
}
