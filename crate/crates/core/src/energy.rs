//! Analytic transmission and compute energy model.
//!
//! Transmission time is `T = L / R` for a payload of `L` bytes at radio rate
//! `R`; energy is `E = V * I_tx * T`. Charge is reported in mA·s because at a
//! fixed supply voltage it is the quantity battery budgets are quoted in.
//! Connection and handshake overheads are not modelled. 1 kB = 1000 B.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::cart::TreeModel;
use crate::datamodel::SAMPLES_PER_SECOND;
use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureMask};

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceProfile {
    /// Radio throughput, bytes per second.
    pub tx_rate: f64,
    /// Average current while transmitting, amperes.
    pub tx_current: f64,
    pub supply_voltage: f64,
    pub clock_hz: f64,
    /// MCU current at full clock, amperes.
    pub active_current: f64,
    pub bytes_per_sample: f64,
    /// 9-axis IMU recording rate, bytes per second.
    pub imu_rate: f64,
    /// Environmental sensor recording rate, bytes per second.
    pub env_rate: f64,
}

const PROFILE_KEYS: [&str; 8] = [
    "tx_rate",
    "tx_current",
    "supply_voltage",
    "clock_hz",
    "active_current",
    "bytes_per_sample",
    "imu_rate",
    "env_rate",
];

impl DeviceProfile {
    /// WildFi tag: 230 kB/s WiFi at 108 mA, 3.75 V, ESP32 at 240 MHz drawing
    /// 240 mA, 50 Hz 9-axis IMU at 900 B/s and a 10 B/s environmental sensor.
    pub fn wildfi() -> Self {
        DeviceProfile {
            tx_rate: 230_000.0,
            tx_current: 0.108,
            supply_voltage: 3.75,
            clock_hz: 240e6,
            active_current: 0.24,
            bytes_per_sample: 2.0,
            imu_rate: 900.0,
            env_rate: 10.0,
        }
    }

    fn fields(&self) -> [f64; 8] {
        [
            self.tx_rate,
            self.tx_current,
            self.supply_voltage,
            self.clock_hz,
            self.active_current,
            self.bytes_per_sample,
            self.imu_rate,
            self.env_rate,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in PROFILE_KEYS.iter().zip(self.fields()) {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!(
                    "device profile {k} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Transmit power, watts.
    pub fn tx_power(&self) -> f64 {
        self.supply_voltage * self.tx_current
    }

    /// MCU power at full clock, watts.
    pub fn active_power(&self) -> f64 {
        self.supply_voltage * self.active_current
    }

    /// Parses `key = value` lines; `#` starts a comment. Every key is required.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 8] = [None; 8];
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let loc = format!("line {}", n + 1);
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format(&loc, "expected key = value"))?;
            let k = k.trim();
            let slot = PROFILE_KEYS
                .iter()
                .position(|p| *p == k)
                .ok_or_else(|| Error::format(&loc, format!("unknown key {k:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::format(&loc, format!("bad number for {k}")))?;
            vals[slot] = Some(v);
        }
        let mut out = [0.0; 8];
        for (i, v) in vals.iter().enumerate() {
            out[i] = v.ok_or_else(|| {
                Error::format("device profile", format!("missing key {}", PROFILE_KEYS[i]))
            })?;
        }
        let dp = DeviceProfile {
            tx_rate: out[0],
            tx_current: out[1],
            supply_voltage: out[2],
            clock_hz: out[3],
            active_current: out[4],
            bytes_per_sample: out[5],
            imu_rate: out[6],
            env_rate: out[7],
        };
        dp.validate()?;
        Ok(dp)
    }

    pub fn to_kv(&self) -> String {
        PROFILE_KEYS
            .iter()
            .zip(self.fields())
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Payload per second for sending the given features: a raw-axis feature
/// streams its whole burst, a derived magnitude is one sample.
pub fn payload_bytes_per_second(mask: FeatureMask, dp: &DeviceProfile) -> f64 {
    mask.features()
        .map(|f| match f {
            FeatureId::Vedba | FeatureId::Gvedba => dp.bytes_per_sample,
            _ => SAMPLES_PER_SECOND as f64 * dp.bytes_per_sample,
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Every data point, whole.
    Regular,
    /// Whole data points, only when the target behaviour is detected.
    Conditional,
    /// Every data point, reduced to selected fields.
    Selected,
    /// Conditional and selected together.
    Both,
    /// A fixed small token per detection.
    SignalOnly,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Regular,
        Strategy::Conditional,
        Strategy::Selected,
        Strategy::Both,
        Strategy::SignalOnly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Regular => "regular",
            Strategy::Conditional => "conditional",
            Strategy::Selected => "selected",
            Strategy::Both => "both",
            Strategy::SignalOnly => "signal_only",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == norm)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionPlan {
    pub strategy: Strategy,
    /// Fraction of data points in which the target behaviour is detected.
    pub detection_fraction: f64,
    pub selected_bytes_per_point: u64,
    pub full_bytes_per_point: u64,
    pub n_points: u64,
    pub signal_bytes: u64,
}

impl TransmissionPlan {
    pub fn new(
        strategy: Strategy,
        detection_fraction: f64,
        n_points: u64,
        full_bytes: u64,
    ) -> Self {
        TransmissionPlan {
            strategy,
            detection_fraction,
            selected_bytes_per_point: full_bytes,
            full_bytes_per_point: full_bytes,
            n_points,
            signal_bytes: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.detection_fraction) {
            return Err(Error::Config(format!(
                "detection fraction {} outside [0, 1]",
                self.detection_fraction
            )));
        }
        if self.selected_bytes_per_point > self.full_bytes_per_point {
            return Err(Error::Config(format!(
                "selected bytes ({}) exceed full bytes ({})",
                self.selected_bytes_per_point, self.full_bytes_per_point
            )));
        }
        Ok(())
    }

    /// Detected points, `p * n` rounded half up.
    pub fn detected_points(&self) -> u64 {
        (self.detection_fraction * self.n_points as f64 + 0.5).floor() as u64
    }

    /// Data points (or signals) actually sent.
    pub fn points_sent(&self) -> u64 {
        match self.strategy {
            Strategy::Regular | Strategy::Selected => self.n_points,
            _ => self.detected_points(),
        }
    }

    pub fn with_strategy(&self, strategy: Strategy) -> Self {
        TransmissionPlan {
            strategy,
            ..self.clone()
        }
    }
}

pub fn plan_bytes(plan: &TransmissionPlan) -> u64 {
    let per_point = match plan.strategy {
        Strategy::Regular | Strategy::Conditional => plan.full_bytes_per_point,
        Strategy::Selected | Strategy::Both => plan.selected_bytes_per_point,
        Strategy::SignalOnly => plan.signal_bytes,
    };
    plan.points_sent() * per_point
}

fn check_bytes(bytes: f64) -> Result<()> {
    if !(bytes.is_finite() && bytes >= 0.0) {
        return Err(Error::value(
            None,
            format!("byte count must be >= 0, got {bytes}"),
        ));
    }
    Ok(())
}

pub fn tx_time(bytes: f64, dp: &DeviceProfile) -> Result<f64> {
    check_bytes(bytes)?;
    Ok(bytes / dp.tx_rate)
}

/// Joules to transmit `bytes`.
pub fn tx_energy(bytes: f64, dp: &DeviceProfile) -> Result<f64> {
    Ok(dp.tx_power() * tx_time(bytes, dp)?)
}

/// Charge drawn while transmitting `bytes`, mA·s.
pub fn tx_charge(bytes: f64, dp: &DeviceProfile) -> Result<f64> {
    Ok(1000.0 * dp.tx_current * tx_time(bytes, dp)?)
}

/// Joules for `cycles` MCU clock cycles at full clock.
pub fn compute_energy(cycles: i64, dp: &DeviceProfile) -> Result<f64> {
    if cycles < 0 {
        return Err(Error::value(
            None,
            format!("cycle count must be >= 0, got {cycles}"),
        ));
    }
    Ok(cycles as f64 / dp.clock_hz * dp.active_power())
}

/// Worst-case energy of one classification: one comparison per tree level.
pub fn classifier_cost(
    m: &TreeModel,
    dp: &DeviceProfile,
    cycles_per_comparison: u32,
) -> Result<f64> {
    if cycles_per_comparison == 0 {
        return Err(Error::value(None, "cycles per comparison must be >= 1"));
    }
    compute_energy(m.depth() as i64 * i64::from(cycles_per_comparison), dp)
}

/// Device runtime once transmission shrinks to `transmitted_fraction` of its
/// full volume. Transmission is modelled as a fractional overhead
/// `overhead_full` on top of the remaining consumption, scaling linearly
/// with the bytes sent.
pub fn runtime_extension(
    base_days: f64,
    overhead_full: f64,
    transmitted_fraction: f64,
) -> Result<f64> {
    if !(base_days.is_finite() && base_days > 0.0) {
        return Err(Error::value(None, "base runtime must be > 0 days"));
    }
    if !(overhead_full.is_finite() && overhead_full >= 0.0) {
        return Err(Error::value(None, "transmission overhead must be >= 0"));
    }
    if !(0.0..=1.0).contains(&transmitted_fraction) {
        return Err(Error::value(None, "transmitted fraction outside [0, 1]"));
    }
    Ok(base_days * (1.0 + overhead_full)
        / (1.0 + residual_overhead(overhead_full, transmitted_fraction)))
}

/// Transmission overhead left after the reduction.
pub fn residual_overhead(overhead_full: f64, transmitted_fraction: f64) -> f64 {
    overhead_full * transmitted_fraction
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub strategy: Strategy,
    pub points_sent: u64,
    pub bytes_total: u64,
    pub regular_bytes: u64,
    pub tx_time_s: f64,
    pub energy_j: f64,
    pub charge_mas: f64,
    /// bytes_total / regular_bytes.
    pub fraction_of_regular: f64,
    pub reduction_vs_regular: f64,
}

pub fn report(plan: &TransmissionPlan, dp: &DeviceProfile) -> Result<EnergyReport> {
    plan.validate()?;
    dp.validate()?;
    let bytes = plan_bytes(plan);
    let regular = plan_bytes(&plan.with_strategy(Strategy::Regular));
    let fraction = if regular == 0 {
        0.0
    } else {
        bytes as f64 / regular as f64
    };
    Ok(EnergyReport {
        strategy: plan.strategy,
        points_sent: plan.points_sent(),
        bytes_total: bytes,
        regular_bytes: regular,
        tx_time_s: tx_time(bytes as f64, dp)?,
        energy_j: tx_energy(bytes as f64, dp)?,
        charge_mas: tx_charge(bytes as f64, dp)?,
        fraction_of_regular: fraction,
        reduction_vs_regular: if regular == 0 { 0.0 } else { 1.0 - fraction },
    })
}

impl EnergyReport {
    pub fn render(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in rows {
            let _ = writeln!(s, "{k:width$}  {v}");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        format!(
            "strategy,points_sent,bytes_total,regular_bytes,tx_time_s,energy_j,charge_mAs,fraction_of_regular,reduction_vs_regular\n\
             {},{},{},{},{},{},{},{},{}\n",
            self.strategy,
            self.points_sent,
            self.bytes_total,
            self.regular_bytes,
            self.tx_time_s,
            self.energy_j,
            self.charge_mas,
            self.fraction_of_regular,
            self.reduction_vs_regular
        )
    }

    fn rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("strategy", self.strategy.to_string()),
            ("points sent", self.points_sent.to_string()),
            ("bytes", format!("{} B", self.bytes_total)),
            ("regular bytes", format!("{} B", self.regular_bytes)),
            (
                "of regular",
                format!("{:.2} %", 100.0 * self.fraction_of_regular),
            ),
            (
                "reduction",
                format!("{:.4} %", 100.0 * self.reduction_vs_regular),
            ),
            ("tx time", format!("{:.6} s", self.tx_time_s)),
            ("energy", format!("{:.6e} J", self.energy_j)),
            ("charge", format!("{:.2} mA·s", self.charge_mas)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn wildfi_transmission_figures() {
        let dp = DeviceProfile::wildfi();
        assert!((dp.tx_power() - 0.405).abs() < 1e-12);
        assert!(rel(tx_energy(20.0, &dp).unwrap(), 3.52e-5) < 0.005);
        assert_eq!(tx_energy(0.0, &dp).unwrap(), 0.0);
        assert!(rel(tx_energy(230_000.0, &dp).unwrap(), 0.405) < 1e-12);
        assert!(rel(tx_charge(1_410_000.0, &dp).unwrap(), 662.1) < 0.002);
        assert!(rel(tx_charge(248_400.0, &dp).unwrap(), 116.64) < 0.002);
        assert!(rel(tx_charge(1_175_000.0, &dp).unwrap(), 551.74) < 0.002);
        assert!(matches!(tx_energy(-1.0, &dp), Err(Error::Value { .. })));
        assert!(tx_charge(-1.0, &dp).is_err());
    }

    #[test]
    fn compute_figures() {
        let dp = DeviceProfile::wildfi();
        assert!((dp.active_power() - 0.9).abs() < 1e-12);
        assert!(rel(compute_energy(1000, &dp).unwrap(), 3.753e-6) < 0.001);
        assert!(rel(compute_energy(3200, &dp).unwrap(), 1.2e-5) < 0.01);
        assert_eq!(compute_energy(0, &dp).unwrap(), 0.0);
        assert!(compute_energy(-5, &dp).is_err());
    }

    #[test]
    fn strategy_bytes() {
        let mut plan = TransmissionPlan::new(Strategy::Conditional, 0.1762, 2350, 600);
        assert_eq!(plan.detected_points(), 414);
        assert_eq!(plan_bytes(&plan), 248_400);
        plan.selected_bytes_per_point = 500;
        plan.strategy = Strategy::Both;
        let frac =
            plan_bytes(&plan) as f64 / plan_bytes(&plan.with_strategy(Strategy::Regular)) as f64;
        assert!((frac - 0.1468).abs() < 1e-4);
        plan.strategy = Strategy::SignalOnly;
        assert_eq!(plan_bytes(&plan), 828);
        plan.strategy = Strategy::Selected;
        assert_eq!(plan_bytes(&plan), 1_175_000);
    }

    #[test]
    fn half_up_rounding() {
        let plan = TransmissionPlan::new(Strategy::Conditional, 0.5, 3, 1);
        assert_eq!(plan.detected_points(), 2);
        let plan = TransmissionPlan::new(Strategy::Conditional, 0.0, 3, 1);
        assert_eq!(plan_bytes(&plan), 0);
    }

    #[test]
    fn runtime_figures() {
        let days = runtime_extension(94.0, 0.58, 0.1468).unwrap();
        assert!((days - 136.87).abs() < 0.01, "{days}");
        assert!((residual_overhead(0.58, 0.1468) - 0.0851).abs() < 1e-4);
        assert_eq!(runtime_extension(94.0, 0.58, 1.0).unwrap(), 94.0);
        assert!((runtime_extension(94.0, 0.58, 0.0).unwrap() - 94.0 * 1.58).abs() < 1e-12);
        assert!(runtime_extension(0.0, 0.58, 0.5).is_err());
        assert!(runtime_extension(10.0, 0.58, 1.5).is_err());
    }

    #[test]
    fn plan_validation() {
        let mut plan = TransmissionPlan::new(Strategy::Both, 1.2, 10, 600);
        assert!(plan.validate().is_err());
        plan.detection_fraction = 0.5;
        plan.selected_bytes_per_point = 700;
        assert!(plan.validate().is_err());
        assert!(report(&plan, &DeviceProfile::wildfi()).is_err());
    }

    #[test]
    fn report_for_both_strategy() {
        let mut plan = TransmissionPlan::new(Strategy::Both, 0.1762, 2350, 600);
        plan.selected_bytes_per_point = 500;
        let r = report(&plan, &DeviceProfile::wildfi()).unwrap();
        assert_eq!(r.bytes_total, 207_000);
        assert!((r.charge_mas - 97.2).abs() < 0.01);
        assert!((r.reduction_vs_regular - 0.8532).abs() < 1e-4);
        let text = r.render();
        assert!(text.contains("14.68 %"), "{text}");
        assert!(text.contains("97.20 mA·s"), "{text}");
        let regular = report(
            &plan.with_strategy(Strategy::Regular),
            &DeviceProfile::wildfi(),
        )
        .unwrap();
        assert_eq!(regular.reduction_vs_regular, 0.0);
    }

    #[test]
    fn profile_kv_round_trip() {
        let dp = DeviceProfile::wildfi();
        assert_eq!(DeviceProfile::from_kv(&dp.to_kv()).unwrap(), dp);
        let missing = dp.to_kv().replace("env_rate = 10\n", "");
        assert!(matches!(
            DeviceProfile::from_kv(&missing),
            Err(Error::Format { .. })
        ));
        let bad = format!("{}\nwarp = 9\n", dp.to_kv());
        assert!(DeviceProfile::from_kv(&bad).is_err());
        let zero = dp.to_kv().replace("tx_rate = 230000", "tx_rate = 0");
        assert!(matches!(
            DeviceProfile::from_kv(&zero),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn payload_sizes() {
        let dp = DeviceProfile::wildfi();
        assert_eq!(payload_bytes_per_second(FeatureMask::RAW_AXES, &dp), 600.0);
        let best = FeatureMask::parse("GX;GY;GZ;AX;AZ").unwrap();
        assert_eq!(payload_bytes_per_second(best, &dp), 500.0);
        assert_eq!(payload_bytes_per_second(FeatureMask::FULL, &dp), 604.0);
        assert_eq!(
            Strategy::from_str("signal-only").unwrap(),
            Strategy::SignalOnly
        );
    }
}
