//! IRS phase vectors.
//!
//! Quantized vectors store integer levels; the angle of level `l` with `b` bits
//! is `l * 2pi / 2^b`. Continuous vectors store angles in `[0, 2pi]`.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{IrsError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PhaseVector {
    Quantized { bits: u32, levels: Vec<u32> },
    Continuous { angles: Vec<f64> },
}

impl PhaseVector {
    pub fn quantized(bits: u32, levels: Vec<u32>) -> Result<Self> {
        if bits == 0 || bits > 16 {
            return Err(IrsError::InvalidPhases(format!("bits must be in 1..=16, got {bits}")));
        }
        let count = 1u32 << bits;
        if let Some((n, &l)) = levels.iter().enumerate().find(|(_, &l)| l >= count) {
            return Err(IrsError::InvalidPhases(format!(
                "element {n} has level {l}, outside 0..{count}"
            )));
        }
        Ok(Self::Quantized { bits, levels })
    }

    pub fn continuous(angles: Vec<f64>) -> Result<Self> {
        if let Some((n, &a)) = angles
            .iter()
            .enumerate()
            .find(|(_, a)| !(a.is_finite() && **a >= 0.0 && **a <= TAU))
        {
            return Err(IrsError::InvalidPhases(format!(
                "element {n} has angle {a}, outside [0, 2pi]"
            )));
        }
        Ok(Self::Continuous { angles })
    }

    pub fn zeros(elements: usize) -> Self {
        Self::Continuous {
            angles: vec![0.0; elements],
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Quantized { levels, .. } => levels.len(),
            Self::Continuous { angles } => angles.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bits(&self) -> Option<u32> {
        match self {
            Self::Quantized { bits, .. } => Some(*bits),
            Self::Continuous { .. } => None,
        }
    }

    pub fn angle(&self, element: usize) -> f64 {
        match self {
            Self::Quantized { bits, levels } => level_angle(levels[element], *bits),
            Self::Continuous { angles } => angles[element],
        }
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.angle(n)).collect()
    }

    /// Reflection coefficients `nu_n = alpha * exp(j theta_n)`.
    pub fn coefficients(&self, amplitude: f64) -> Vec<Complex64> {
        (0..self.len())
            .map(|n| Complex64::from_polar(amplitude, self.angle(n)))
            .collect()
    }

    /// Adds `offset` to every angle, wrapping into `[0, 2pi)`. The result is
    /// always continuous.
    pub fn rotated(&self, offset: f64) -> Self {
        Self::Continuous {
            angles: self
                .angles()
                .into_iter()
                .map(|a| (a + offset).rem_euclid(TAU))
                .collect(),
        }
    }
}

pub fn level_angle(level: u32, bits: u32) -> f64 {
    level as f64 * TAU / (1u64 << bits) as f64
}

/// The `2^b` admissible phase shifts, ascending.
pub fn phase_set(bits: u32) -> Result<Vec<f64>> {
    if bits == 0 || bits > 16 {
        return Err(IrsError::Domain {
            function: "phase_set",
            detail: format!("bits must be in 1..=16, got {bits}"),
        });
    }
    Ok((0..1u32 << bits).map(|l| level_angle(l, bits)).collect())
}
