//! Experiment configuration, read from and written to TOML.
//!
//! Fields ending in `_db` are in decibels; everything else is linear.

use std::path::{Path, PathBuf};

use irs_core::channel::{LinkGeometry, Links, SystemConfig};
use irs_core::optimize::OptimizerSettings;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ExpError, Result};
use crate::methods::Method;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// One value per link: direct (`sd`), BS-IRS (`sr`) and IRS-user (`rd`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkTriple {
    pub sd: f64,
    pub sr: f64,
    pub rd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub bs: [f64; 2],
    pub irs: [f64; 2],
    pub user: [f64; 2],
    pub pathloss: LinkTriple,
    pub rice: LinkTriple,
    pub amplitude: f64,
    pub antennas: usize,
    pub elements: usize,
    /// Quantization used by methods that do not name their own.
    pub bits: u32,
    pub snr_tx_db: f64,
    pub threshold_db: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            bs: [0.0, 0.0],
            irs: [0.0, 10.0],
            user: [90.0, 0.0],
            pathloss: LinkTriple {
                sd: 4.0,
                sr: 4.0,
                rd: 4.0,
            },
            rice: LinkTriple {
                sd: 5.0,
                sr: 10.0,
                rd: 20.0,
            },
            amplitude: 1.0,
            antennas: 4,
            elements: 20,
            bits: 2,
            snr_tx_db: 73.0,
            threshold_db: 0.0,
        }
    }
}

impl Scenario {
    pub fn system(&self) -> Result<SystemConfig> {
        let links = Links::from_geometry(
            &LinkGeometry::between(self.user, self.bs, self.pathloss.sd, self.rice.sd)?,
            &LinkGeometry::between(self.bs, self.irs, self.pathloss.sr, self.rice.sr)?,
            &LinkGeometry::between(self.irs, self.user, self.pathloss.rd, self.rice.rd)?,
        )?;
        Ok(SystemConfig::new(
            self.antennas,
            self.elements,
            self.bits,
            self.amplitude,
            db_to_linear(self.snr_tx_db),
            links,
        )?)
    }

    pub fn threshold(&self) -> f64 {
        db_to_linear(self.threshold_db)
    }

    /// Copy with the swept parameter set to `value`.
    pub fn at(&self, axis: Axis, value: f64) -> Result<Self> {
        let mut s = self.clone();
        let count = |what: &str| -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(ExpError::Config(format!("{what} sweep value {value} is not a positive integer")))
            }
        };
        match axis {
            Axis::SnrTxDb => s.snr_tx_db = value,
            Axis::ThresholdDb => s.threshold_db = value,
            Axis::Elements => s.elements = count("elements")?,
            Axis::Antennas => s.antennas = count("antennas")?,
            Axis::Bits => s.bits = count("bits")? as u32,
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    SnrTxDb,
    Elements,
    Antennas,
    ThresholdDb,
    Bits,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Self::SnrTxDb => "snr_tx_db",
            Self::Elements => "elements",
            Self::Antennas => "antennas",
            Self::ThresholdDb => "threshold_db",
            Self::Bits => "bits",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Op,
    Rate,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Self::Op => "op",
            Self::Rate => "rate",
        }
    }
}

/// Mirror of [`OptimizerSettings`] with TOML-friendly field types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub particles: usize,
    pub iterations: usize,
    pub mpso_spread: f64,
    pub mpso_inertia: [f64; 2],
    pub mpso_attraction: f64,
    pub pso_inertia: [f64; 2],
    pub pso_accel: [f64; 2],
    pub pso_velocity_clamp: f64,
    pub wrap_angles: bool,
    pub per_dimension_coefficients: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let s = OptimizerSettings::default();
        Self {
            particles: s.particles,
            iterations: s.iterations,
            mpso_spread: s.mpso_spread,
            mpso_inertia: [s.mpso_inertia.0, s.mpso_inertia.1],
            mpso_attraction: s.mpso_attraction,
            pso_inertia: [s.pso_inertia.0, s.pso_inertia.1],
            pso_accel: [s.pso_accel.0, s.pso_accel.1],
            pso_velocity_clamp: s.pso_velocity_clamp,
            wrap_angles: s.wrap_angles,
            per_dimension_coefficients: s.per_dimension_coefficients,
        }
    }
}

impl OptimizerConfig {
    pub fn settings(&self, seed: u64) -> OptimizerSettings {
        OptimizerSettings {
            particles: self.particles,
            iterations: self.iterations,
            mpso_spread: self.mpso_spread,
            mpso_inertia: (self.mpso_inertia[0], self.mpso_inertia[1]),
            mpso_attraction: self.mpso_attraction,
            pso_inertia: (self.pso_inertia[0], self.pso_inertia[1]),
            pso_accel: (self.pso_accel[0], self.pso_accel[1]),
            pso_velocity_clamp: self.pso_velocity_clamp,
            wrap_angles: self.wrap_angles,
            per_dimension_coefficients: self.per_dimension_coefficients,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarlo {
    pub samples: usize,
    pub seed: u64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overhead {
    /// Small-scale coherence intervals per large-scale interval.
    pub x: Vec<u32>,
    pub bits: u32,
    pub continuous_bits: u32,
    /// Element counts for the bit-budget columns.
    pub elements: Vec<usize>,
}

impl Default for Overhead {
    fn default() -> Self {
        Self {
            x: vec![10, 20, 30, 40, 50],
            bits: 5,
            continuous_bits: 32,
            elements: vec![40],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub metric: Metric,
    pub methods: Vec<String>,
    pub output_dir: PathBuf,
    pub scenario: Scenario,
    pub sweep: Sweep,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarlo,
    #[serde(default)]
    pub overhead: Overhead,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| ExpError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ExpError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            ExpError::Config(msg) => ExpError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form without the output directory,
    /// as 16 hex digits.
    pub fn fingerprint(&self) -> String {
        let content = Self {
            output_dir: PathBuf::new(),
            ..self.clone()
        };
        let digest = Sha256::digest(content.to_toml().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn parsed_methods(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ExpError::Config(msg));
        if self.methods.is_empty() {
            return bad("at least one method is required".into());
        }
        self.parsed_methods()?;
        if self.sweep.values.is_empty() {
            return bad(format!("sweep over {} has no values", self.sweep.axis.name()));
        }
        if let Some(v) = self.sweep.values.iter().find(|v| !v.is_finite()) {
            return bad(format!("non-finite sweep value {v}"));
        }
        for &v in &self.sweep.values {
            self.scenario.at(self.sweep.axis, v)?.system()?;
        }
        if self.monte_carlo.seed > i64::MAX as u64 {
            return bad(format!("seed {} does not fit a TOML integer (max {})", self.monte_carlo.seed, i64::MAX));
        }
        if self.monte_carlo.samples == 0 {
            return bad("monte_carlo.samples must be >= 1".into());
        }
        if self.overhead.x.contains(&0) || self.overhead.bits == 0 || self.overhead.continuous_bits == 0 {
            return bad("overhead x, bits and continuous_bits must be >= 1".into());
        }
        self.optimizer.settings(0).validate()?;
        Ok(())
    }
}
