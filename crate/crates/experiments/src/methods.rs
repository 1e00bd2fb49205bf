//! Phase-design methods named in experiment configs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use irs_core::channel::SystemConfig;
use irs_core::optimize::{build_op_objective, build_rate_objective, mpso_optimize, pso_optimize, Objective, OptimizationResult};
use irs_core::optimize::OptimizerSettings;
use irs_core::phases::PhaseVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Metric;
use crate::error::{ExpError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// MPSO with the given bits, or the scenario's bits when `None`.
    Mpso(Option<u32>),
    Pso,
    /// Uniform random levels at the scenario's bits.
    Random,
    ZeroPhase,
    /// Per-realization greedy coordinate ascent with instantaneous CSI;
    /// `None` searches continuous angles.
    InstantaneousGreedy(Option<u32>),
    Fixed(PathBuf),
}

impl Method {
    /// Whether the method yields one phase vector for all realizations.
    pub fn is_statistical(&self) -> bool {
        !matches!(self, Self::InstantaneousGreedy(_))
    }
}

fn parse_bits(s: &str, text: &str) -> Result<u32> {
    match s.parse::<u32>() {
        Ok(b) if (1..=16).contains(&b) => Ok(b),
        _ => Err(ExpError::Config(format!("bad bit count in method `{text}`"))),
    }
}

impl FromStr for Method {
    type Err = ExpError;

    fn from_str(text: &str) -> Result<Self> {
        Ok(match text {
            "mpso" => Self::Mpso(None),
            "pso" => Self::Pso,
            "random" => Self::Random,
            "zero-phase" => Self::ZeroPhase,
            "instantaneous-greedy" => Self::InstantaneousGreedy(None),
            _ => {
                if let Some(b) = text.strip_prefix("mpso-b") {
                    Self::Mpso(Some(parse_bits(b, text)?))
                } else if let Some(b) = text.strip_prefix("instantaneous-greedy-b") {
                    Self::InstantaneousGreedy(Some(parse_bits(b, text)?))
                } else if let Some(path) = text.strip_prefix("fixed:") {
                    if path.is_empty() {
                        return Err(ExpError::Config("`fixed:` needs a phase file path".into()));
                    }
                    Self::Fixed(PathBuf::from(path))
                } else {
                    return Err(ExpError::Config(format!(
                        "unknown method `{text}` (expected mpso, mpso-bN, pso, random, zero-phase, \
                         instantaneous-greedy[-bN] or fixed:PATH)"
                    )));
                }
            }
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mpso(None) => write!(f, "mpso"),
            Self::Mpso(Some(b)) => write!(f, "mpso-b{b}"),
            Self::Pso => write!(f, "pso"),
            Self::Random => write!(f, "random"),
            Self::ZeroPhase => write!(f, "zero-phase"),
            Self::InstantaneousGreedy(None) => write!(f, "instantaneous-greedy"),
            Self::InstantaneousGreedy(Some(b)) => write!(f, "instantaneous-greedy-b{b}"),
            Self::Fixed(p) => write!(f, "fixed:{}", p.display()),
        }
    }
}

/// Metric objective for `config`; the threshold is linear.
pub fn objective(config: &SystemConfig, metric: Metric, threshold: f64) -> Result<Box<dyn Objective>> {
    Ok(match metric {
        Metric::Op => Box::new(build_op_objective(config, threshold)?),
        Metric::Rate => Box::new(build_rate_objective(config)?),
    })
}

/// Phase vector chosen by a statistical method, with the optimizer run if
/// there was one. Greedy methods have no single design and are rejected.
pub fn design(
    method: &Method,
    config: &SystemConfig,
    objective: &dyn Objective,
    settings: &OptimizerSettings,
) -> Result<(PhaseVector, Option<OptimizationResult>)> {
    let n = config.elements;
    match method {
        Method::Mpso(bits) => {
            let r = mpso_optimize(objective, n, bits.unwrap_or(config.bits), settings)?;
            Ok((r.phases.clone(), Some(r)))
        }
        Method::Pso => {
            let r = pso_optimize(objective, n, settings)?;
            Ok((r.phases.clone(), Some(r)))
        }
        Method::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            let levels = (0..n).map(|_| rng.random_range(0..1u32 << config.bits)).collect();
            Ok((PhaseVector::quantized(config.bits, levels)?, None))
        }
        Method::ZeroPhase => Ok((PhaseVector::zeros(n), None)),
        Method::Fixed(path) => {
            let p = PhaseFile::load(path)?.phases()?;
            if p.len() != n {
                return Err(ExpError::Config(format!(
                    "{}: phase file has {} elements, scenario has {n}",
                    path.display(),
                    p.len()
                )));
            }
            Ok((p, None))
        }
        Method::InstantaneousGreedy(_) => Err(ExpError::Config(format!("{method} has no fixed phase design"))),
    }
}

/// On-disk phase vector: `levels` with `bits`, or continuous `angles`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<u32>>,
    pub angles: Vec<f64>,
}

impl PhaseFile {
    pub fn new(phases: &PhaseVector) -> Self {
        match phases {
            PhaseVector::Quantized { bits, levels } => Self {
                bits: Some(*bits),
                levels: Some(levels.clone()),
                angles: phases.angles(),
            },
            PhaseVector::Continuous { angles } => Self {
                bits: None,
                levels: None,
                angles: angles.clone(),
            },
        }
    }

    /// Levels take precedence over angles when both are present.
    pub fn phases(&self) -> Result<PhaseVector> {
        match (self.bits, &self.levels) {
            (Some(bits), Some(levels)) => Ok(PhaseVector::quantized(bits, levels.clone())?),
            (None, None) => Ok(PhaseVector::continuous(self.angles.clone())?),
            _ => Err(ExpError::Config("phase file needs both `bits` and `levels`, or neither".into())),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ExpError::io(path, e))?;
        toml::from_str(&text).map_err(|e| ExpError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("phase file serializes")
    }
}
