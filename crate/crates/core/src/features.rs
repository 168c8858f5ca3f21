//! Per-second feature extraction.
//!
//! Each record becomes eight scalars: accelerometer means (AX, AY, AZ),
//! VeDBA over the accelerometer burst, gyroscope population variances
//! (GX, GY, GZ) and the same VeDBA formula applied to the gyroscope (GVeDBA).
//!
//! VeDBA here uses the one-second burst as its window: the static component
//! of each axis is the burst mean. Longer running means are common elsewhere
//! and give different numbers.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::datamodel::{validate_behaviour_name, Dataset, SensorRecord, SAMPLES_PER_SECOND};
use crate::error::{Error, Result};

pub const N_FEATURES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureId {
    Ax = 0,
    Ay = 1,
    Az = 2,
    Vedba = 3,
    Gx = 4,
    Gy = 5,
    Gz = 6,
    Gvedba = 7,
}

impl FeatureId {
    pub const ALL: [FeatureId; N_FEATURES] = [
        FeatureId::Ax,
        FeatureId::Ay,
        FeatureId::Az,
        FeatureId::Vedba,
        FeatureId::Gx,
        FeatureId::Gy,
        FeatureId::Gz,
        FeatureId::Gvedba,
    ];

    /// Order used when rendering masks for people: gyroscope axes first.
    pub const DISPLAY_ORDER: [FeatureId; N_FEATURES] = [
        FeatureId::Gx,
        FeatureId::Gy,
        FeatureId::Gz,
        FeatureId::Ax,
        FeatureId::Ay,
        FeatureId::Az,
        FeatureId::Vedba,
        FeatureId::Gvedba,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Column name in feature CSVs and model files.
    pub fn name(self) -> &'static str {
        match self {
            FeatureId::Ax => "AX",
            FeatureId::Ay => "AY",
            FeatureId::Az => "AZ",
            FeatureId::Vedba => "VEDBA",
            FeatureId::Gx => "GX",
            FeatureId::Gy => "GY",
            FeatureId::Gz => "GZ",
            FeatureId::Gvedba => "GVEDBA",
        }
    }

    /// Name used in ranking tables.
    pub fn display_name(self) -> &'static str {
        match self {
            FeatureId::Vedba => "VeDBA",
            FeatureId::Gvedba => "GVeDBA",
            other => other.name(),
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let up = s.trim().to_ascii_uppercase();
        FeatureId::ALL
            .into_iter()
            .find(|f| f.name() == up)
            .ok_or_else(|| Error::Config(format!("unknown feature {s:?}")))
    }
}

/// A subset of features; bit `i` is `FeatureId::ALL[i]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureMask(u8);

impl FeatureMask {
    pub const FULL: FeatureMask = FeatureMask(0xFF);
    pub const EMPTY: FeatureMask = FeatureMask(0);
    /// The six raw-axis features, without the VeDBA-style magnitudes.
    pub const RAW_AXES: FeatureMask = FeatureMask(0b0111_0111);

    pub fn from_bits(bits: u8) -> Self {
        FeatureMask(bits)
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn from_features(fs: impl IntoIterator<Item = FeatureId>) -> Self {
        FeatureMask(fs.into_iter().fold(0, |m, f| m | 1 << f.index()))
    }

    pub fn contains(self, f: FeatureId) -> bool {
        self.0 & (1 << f.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in `FeatureId` order.
    pub fn features(self) -> impl Iterator<Item = FeatureId> {
        FeatureId::ALL
            .into_iter()
            .filter(move |f| self.contains(*f))
    }

    /// Every non-empty subset, in ascending bit order.
    pub fn all_nonempty() -> impl Iterator<Item = FeatureMask> {
        (1..=u8::MAX).map(FeatureMask)
    }

    /// `GX;GZ;AX;`-style rendering in [`FeatureId::DISPLAY_ORDER`].
    pub fn render(self) -> String {
        FeatureId::DISPLAY_ORDER
            .into_iter()
            .filter(|f| self.contains(*f))
            .map(|f| format!("{};", f.display_name()))
            .collect()
    }

    /// Parses names separated by `;` or `,`, or the word `all`.
    pub fn parse(s: &str) -> Result<Self> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(Self::FULL);
        }
        let mut m = 0u8;
        for tok in s.split([';', ',']).map(str::trim).filter(|t| !t.is_empty()) {
            m |= 1 << tok.parse::<FeatureId>()?.index();
        }
        if m == 0 {
            return Err(Error::Config(format!("empty feature mask {s:?}")));
        }
        Ok(FeatureMask(m))
    }
}

impl fmt::Display for FeatureMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; N_FEATURES],
    pub label: usize,
    pub timestamp: u64,
}

impl FeatureVector {
    pub fn get(&self, f: FeatureId) -> f64 {
        self.values[f.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<FeatureVector>,
    behaviours: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(behaviours: Vec<String>, rows: Vec<FeatureVector>) -> Result<Self> {
        for b in &behaviours {
            validate_behaviour_name(b)?;
        }
        for (i, r) in rows.iter().enumerate() {
            if r.label >= behaviours.len() {
                return Err(Error::Label(format!(
                    "row {i}: label index {} outside {} behaviours",
                    r.label,
                    behaviours.len()
                )));
            }
            if let Some(f) = r.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::value(
                    Some(i),
                    format!("{} is not finite", FeatureId::ALL[f]),
                ));
            }
            for f in [
                FeatureId::Vedba,
                FeatureId::Gx,
                FeatureId::Gy,
                FeatureId::Gz,
                FeatureId::Gvedba,
            ] {
                if r.get(f) < 0.0 {
                    return Err(Error::value(Some(i), format!("{f} must be >= 0")));
                }
            }
        }
        Ok(FeatureMatrix { rows, behaviours })
    }

    pub fn rows(&self) -> &[FeatureVector] {
        &self.rows
    }

    pub fn behaviours(&self) -> &[String] {
        &self.behaviours
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.behaviours.len()
    }

    pub fn behaviour_index(&self, name: &str) -> Result<usize> {
        self.behaviours
            .iter()
            .position(|b| b == name)
            .ok_or_else(|| Error::Label(format!("unknown behaviour {name:?}")))
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.behaviours.len()];
        for r in &self.rows {
            c[r.label] += 1;
        }
        c
    }

    /// Same behaviours, rows picked by index.
    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            behaviours: self.behaviours.clone(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let mut header = vec!["timestamp".to_string()];
        header.extend(FeatureId::ALL.iter().map(|f| f.name().to_string()));
        header.push("label".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut row = vec![r.timestamp.to_string()];
            // Display for f64 is the shortest string that parses back exactly.
            row.extend(r.values.iter().map(|v| v.to_string()));
            row.push(self.behaviours[r.label].clone());
            w.write_record(&row)?;
        }
        w.flush()
    }

    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::io(path, e))?;
        File::create(path)
            .and_then(|mut f| f.write_all(&buf))
            .map_err(|e| Error::io(path, e))
    }

    /// Reads a feature CSV; behaviours are inferred in appearance order.
    pub fn ingest_csv(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(BufReader::new(file));
        let header = rdr
            .headers()
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))?
            .clone();
        let mut expected = vec!["timestamp"];
        expected.extend(FeatureId::ALL.iter().map(|f| f.name()));
        expected.push("label");
        if header.iter().map(str::trim).ne(expected.iter().copied()) {
            return Err(Error::format(
                "header",
                format!("expected {:?}", expected.join(",")),
            ));
        }
        let mut behaviours: Vec<String> = Vec::new();
        let mut rows = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::format(format!("data row {i}"), e.to_string()))?;
            if rec.len() != N_FEATURES + 2 {
                return Err(Error::format(
                    format!("data row {i}"),
                    format!("expected {} cells, found {}", N_FEATURES + 2, rec.len()),
                ));
            }
            let timestamp = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::value(Some(i), format!("bad timestamp {:?}", &rec[0])))?;
            let mut values = [0.0; N_FEATURES];
            for (k, v) in values.iter_mut().enumerate() {
                let cell = &rec[k + 1];
                *v = cell.trim().parse().map_err(|_| {
                    Error::value(
                        Some(i),
                        format!("{}: bad number {cell:?}", FeatureId::ALL[k]),
                    )
                })?;
            }
            let name = rec[N_FEATURES + 1].trim();
            validate_behaviour_name(name)?;
            let label = match behaviours.iter().position(|b| b == name) {
                Some(l) => l,
                None => {
                    behaviours.push(name.to_string());
                    behaviours.len() - 1
                }
            };
            rows.push(FeatureVector {
                values,
                label,
                timestamp,
            });
        }
        FeatureMatrix::new(behaviours, rows)
    }
}

fn check_len(burst: &[f64]) -> Result<()> {
    if burst.len() != SAMPLES_PER_SECOND {
        return Err(Error::Shape {
            expected: SAMPLES_PER_SECOND,
            got: burst.len(),
        });
    }
    Ok(())
}

pub fn segment_mean(burst: &[f64]) -> Result<f64> {
    check_len(burst)?;
    // Shifted by the first sample so constant bursts give their value exactly.
    let base = burst[0];
    let shift: f64 = burst.iter().map(|x| x - base).sum();
    Ok(base + shift / burst.len() as f64)
}

/// Population variance (divides by N), Welford's single pass.
pub fn segment_var(burst: &[f64]) -> Result<f64> {
    check_len(burst)?;
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &x) in burst.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (x - mean);
    }
    Ok((m2 / burst.len() as f64).max(0.0))
}

/// Vectorial dynamic body acceleration over one burst per axis.
pub fn vedba(bursts: [&[f64]; 3]) -> Result<f64> {
    let mut statics = [0.0; 3];
    for (s, b) in statics.iter_mut().zip(bursts) {
        *s = segment_mean(b)?;
    }
    let n = bursts[0].len();
    let total: f64 = (0..n)
        .map(|i| {
            let dx = bursts[0][i] - statics[0];
            let dy = bursts[1][i] - statics[1];
            let dz = bursts[2][i] - statics[2];
            (dx * dx + dy * dy + dz * dz).sqrt()
        })
        .sum();
    Ok(total / n as f64)
}

/// VeDBA applied to gyroscope bursts.
pub fn gvedba(bursts: [&[f64]; 3]) -> Result<f64> {
    vedba(bursts)
}

pub fn featurize_record(r: &SensorRecord) -> Result<FeatureVector> {
    let acc = [&r.acc[0][..], &r.acc[1][..], &r.acc[2][..]];
    let gyr = [&r.gyro[0][..], &r.gyro[1][..], &r.gyro[2][..]];
    let values = [
        segment_mean(acc[0])?,
        segment_mean(acc[1])?,
        segment_mean(acc[2])?,
        vedba(acc)?,
        segment_var(gyr[0])?,
        segment_var(gyr[1])?,
        segment_var(gyr[2])?,
        gvedba(gyr)?,
    ];
    Ok(FeatureVector {
        values,
        label: r.label,
        timestamp: r.timestamp,
    })
}

/// One feature row per record, same order.
pub fn featurize(ds: &Dataset) -> Result<FeatureMatrix> {
    let rows = ds
        .records()
        .par_iter()
        .map(featurize_record)
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::new(ds.behaviours().to_vec(), rows)
}
