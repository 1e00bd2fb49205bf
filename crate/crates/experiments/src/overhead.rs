//! BS-to-IRS-controller signaling budget: statistical designs send `b N`
//! bits per large-scale interval, instantaneous ones `c x N` bits for `x`
//! coherence intervals at `c` bits per continuous phase.

use serde::Serialize;

use crate::error::{ExpError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverheadRow {
    pub x: u32,
    pub elements: usize,
    pub bits_instantaneous: u64,
    pub bits_statistical: u64,
    /// Percent, rounded to two decimals.
    pub reduction_percent: f64,
}

pub fn reduction_percent(x: u32, bits: u32, continuous_bits: u32) -> f64 {
    let raw = (1.0 - bits as f64 / (continuous_bits as f64 * x as f64)) * 100.0;
    (raw * 100.0).round() / 100.0
}

pub fn run_overhead(x_list: &[u32], bits: u32, continuous_bits: u32, elements: &[usize]) -> Result<Vec<OverheadRow>> {
    if x_list.contains(&0) || bits == 0 || continuous_bits == 0 || elements.contains(&0) {
        return Err(ExpError::Config("overhead inputs must all be >= 1".into()));
    }
    let mut rows = Vec::new();
    for &x in x_list {
        for &n in elements {
            rows.push(OverheadRow {
                x,
                elements: n,
                bits_instantaneous: continuous_bits as u64 * x as u64 * n as u64,
                bits_statistical: bits as u64 * n as u64,
                reduction_percent: reduction_percent(x, bits, continuous_bits),
            });
        }
    }
    Ok(rows)
}
