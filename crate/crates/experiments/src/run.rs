//! Experiment drivers. Each returns its rows; [`crate::output`] writes them.

use irs_core::channel::{ChannelSampler, SystemConfig};
use irs_core::metrics::{ergodic_rate, outage_probability};
use irs_core::moments::fit_snr;
use irs_core::montecarlo::{
    empirical_outage, empirical_rate, instantaneous_baseline, ks_distance, outage_stderr, rate_stderr, simulate_snr,
    Resolution, SnrSampleSet,
};
use irs_core::optimize::{brute_force, OptimizationResult};
use irs_core::phases::PhaseVector;
use irs_core::special::regularized_lower_gamma;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{linear_to_db, Axis, ExperimentConfig, Metric};
use crate::error::{ExpError, Result};
use crate::methods::{design, objective, Method};

/// Largest analytic/Monte Carlo rate gap accepted, in bits.
pub const RATE_GATE_BITS: f64 = 0.03;
/// Largest OP gap accepted, in Monte Carlo standard errors.
pub const OP_GATE_STDERRS: f64 = 3.0;
/// Largest KS distance accepted by `validate`.
pub const KS_GATE: f64 = 0.03;
/// Sample counts below this get a low-sample warning.
pub const LOW_SAMPLE_COUNT: usize = 1000;

/// SplitMix64 finalizer over a seed and two indices, for per-cell seeds.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xbf58_476d_1ce4_e5b9).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Realizations are shared by every method at one sweep point.
fn mc_seed(config: &ExperimentConfig, point: usize) -> u64 {
    derive_seed(config.monte_carlo.seed, point as u64, u64::MAX)
}

fn optimizer_seed(config: &ExperimentConfig, point: usize, method: usize) -> u64 {
    derive_seed(config.monte_carlo.seed, point as u64, method as u64)
}

/// Empirical metric and its standard error. The OP error uses `1/n` in
/// place of an empirical probability of exactly 0 or 1.
pub fn mc_metric(samples: &SnrSampleSet, metric: Metric, threshold: f64) -> (f64, f64) {
    match metric {
        Metric::Op => {
            let p = empirical_outage(samples, threshold);
            let floor = 1.0 / samples.count as f64;
            (p, outage_stderr(p.clamp(floor, 1.0 - floor), samples.count))
        }
        Metric::Rate => (empirical_rate(samples), rate_stderr(samples)),
    }
}

pub fn analytic_metric(config: &SystemConfig, phases: &PhaseVector, metric: Metric, threshold: f64) -> Result<f64> {
    let fit = fit_snr(config, phases)?;
    Ok(match metric {
        Metric::Op => outage_probability(&fit, threshold)?,
        Metric::Rate => ergodic_rate(&fit)?,
    })
}

pub fn gate_passes(metric: Metric, analytic: f64, mc: f64, stderr: f64) -> bool {
    match metric {
        Metric::Op => (analytic - mc).abs() <= OP_GATE_STDERRS * stderr,
        Metric::Rate => (analytic - mc).abs() <= RATE_GATE_BITS,
    }
}

/// SNR of the greedy baseline on each of `n` realizations.
pub fn greedy_samples(config: &SystemConfig, bits: Option<u32>, n: usize, seed: u64) -> Result<SnrSampleSet> {
    let sampler = ChannelSampler::new(config, seed)?;
    let resolution = bits.map_or(Resolution::Continuous, Resolution::Bits);
    let samples = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let r = sampler.realization(i);
            instantaneous_baseline(&r, resolution, config.amplitude, config.snr_tx).map(|(_, snr)| snr)
        })
        .collect::<std::result::Result<Vec<f64>, _>>()?;
    Ok(SnrSampleSet::from_samples(samples))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub method: String,
    pub analytic_metric: Option<f64>,
    pub mc_metric: Option<f64>,
    pub mc_stderr: Option<f64>,
    /// `ok`, `gate_fail`, `mc_only` (no analytic value) or `error: ...`.
    pub status: String,
}

impl SweepRow {
    pub fn is_gate_failure(&self) -> bool {
        self.status == "gate_fail"
    }
}

fn sweep_cell(config: &ExperimentConfig, point: usize, method_index: usize, method: &Method) -> Result<SweepRow> {
    let value = config.sweep.values[point];
    let scenario = config.scenario.at(config.sweep.axis, value)?;
    let system = scenario.system()?;
    let threshold = scenario.threshold();
    let n = config.monte_carlo.samples;
    let seed = mc_seed(config, point);
    let (analytic, samples) = if let Method::InstantaneousGreedy(bits) = method {
        (None, greedy_samples(&system, *bits, n, seed)?)
    } else {
        let obj = objective(&system, config.metric, threshold)?;
        let settings = config.optimizer.settings(optimizer_seed(config, point, method_index));
        let (phases, _) = design(method, &system, obj.as_ref(), &settings)?;
        let analytic = analytic_metric(&system, &phases, config.metric, threshold)?;
        (Some(analytic), simulate_snr(&system, &phases, n, seed)?)
    };
    let (mc, stderr) = mc_metric(&samples, config.metric, threshold);
    let status = match analytic {
        None => "mc_only",
        Some(a) if gate_passes(config.metric, a, mc, stderr) => "ok",
        Some(_) => "gate_fail",
    };
    Ok(SweepRow {
        axis_value: value,
        method: method.to_string(),
        analytic_metric: analytic,
        mc_metric: Some(mc),
        mc_stderr: Some(stderr),
        status: status.into(),
    })
}

/// One row per (sweep value, method), in axis order then method order.
/// A failing cell becomes an `error` row and the sweep continues.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let methods = config.parsed_methods()?;
    let cells: Vec<(usize, usize)> = (0..config.sweep.values.len())
        .flat_map(|p| (0..methods.len()).map(move |m| (p, m)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(p, m)| {
            sweep_cell(config, p, m, &methods[m]).unwrap_or_else(|e| {
                log::warn!("{} = {}, {}: {e}", config.sweep.axis.name(), config.sweep.values[p], methods[m]);
                SweepRow {
                    axis_value: config.sweep.values[p],
                    method: methods[m].to_string(),
                    analytic_metric: None,
                    mc_metric: None,
                    mc_stderr: None,
                    status: format!("error: {e}"),
                }
            })
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfPoint {
    pub elements: usize,
    pub method: String,
    pub snr_db: f64,
    pub empirical_cdf: f64,
    pub gamma_cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsRow {
    pub elements: usize,
    pub method: String,
    pub samples: usize,
    pub ks: f64,
    pub low_sample_warning: bool,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validation {
    pub cdf: Vec<CdfPoint>,
    pub ks: Vec<KsRow>,
}

const CDF_GRID: usize = 101;

/// Empirical SNR CDF against the fitted gamma CDF, per element count and
/// statistical method.
pub fn run_validate(config: &ExperimentConfig) -> Result<Validation> {
    config.validate()?;
    if config.sweep.axis != Axis::Elements {
        return Err(ExpError::Config(format!(
            "validate sweeps the element count; got axis {}",
            config.sweep.axis.name()
        )));
    }
    let methods = config.parsed_methods()?;
    if let Some(m) = methods.iter().find(|m| !m.is_statistical()) {
        return Err(ExpError::Config(format!("validate needs statistical methods, got {m}")));
    }
    let cells: Vec<(usize, usize)> = (0..config.sweep.values.len())
        .flat_map(|p| (0..methods.len()).map(move |m| (p, m)))
        .collect();
    let results = cells
        .into_par_iter()
        .map(|(p, mi)| validate_cell(config, p, mi, &methods[mi]))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Validation { cdf: Vec::new(), ks: Vec::new() };
    for (points, ks) in results {
        out.cdf.extend(points);
        out.ks.push(ks);
    }
    Ok(out)
}

fn validate_cell(
    config: &ExperimentConfig,
    point: usize,
    method_index: usize,
    method: &Method,
) -> Result<(Vec<CdfPoint>, KsRow)> {
    let scenario = config.scenario.at(Axis::Elements, config.sweep.values[point])?;
    let system = scenario.system()?;
    let obj = objective(&system, config.metric, scenario.threshold())?;
    let settings = config.optimizer.settings(optimizer_seed(config, point, method_index));
    let (phases, _) = design(method, &system, obj.as_ref(), &settings)?;
    let fit = fit_snr(&system, &phases)?;
    let cdf = |x: f64| regularized_lower_gamma(fit.shape, x / fit.scale).unwrap_or(f64::NAN);
    let n = config.monte_carlo.samples;
    let sorted = simulate_snr(&system, &phases, n, mc_seed(config, point))?.sorted();
    let ks = ks_distance(&sorted, cdf);
    let low = n < LOW_SAMPLE_COUNT;
    if low {
        log::warn!("N = {}, {method}: only {n} samples, KS distance is not meaningful", system.elements);
    }
    let quantile = |q: f64| sorted[((q * (n - 1) as f64).round() as usize).min(n - 1)];
    let (lo, hi) = (linear_to_db(quantile(0.001)), linear_to_db(quantile(0.999)));
    let points = (0..CDF_GRID)
        .map(|i| {
            let snr_db = if CDF_GRID > 1 && hi > lo {
                lo + (hi - lo) * i as f64 / (CDF_GRID - 1) as f64
            } else {
                lo
            };
            let x = 10f64.powf(snr_db / 10.0);
            CdfPoint {
                elements: system.elements,
                method: method.to_string(),
                snr_db,
                empirical_cdf: sorted.partition_point(|&g| g <= x) as f64 / n as f64,
                gamma_cdf: cdf(x),
            }
        })
        .collect();
    let status = if ks < KS_GATE { "ok" } else { "gate_fail" };
    Ok((
        points,
        KsRow {
            elements: system.elements,
            method: method.to_string(),
            samples: n,
            ks,
            low_sample_warning: low,
            status: status.into(),
        },
    ))
}

/// Exhaustive search is attempted when `bits * N` is at most this.
pub const BRUTE_FORCE_MAX_LOG2: u32 = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizeReport {
    pub method: String,
    pub metric: String,
    pub elements: usize,
    pub objective_value: f64,
    pub evaluations: usize,
    /// The convergence trace never moved, as for phase-blind objectives.
    pub phase_independent: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub brute_force_relative_gap: Option<f64>,
    pub mc_samples: usize,
    pub mc_metric: f64,
    pub mc_stderr: f64,
    pub gate_passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub phases: PhaseVector,
    pub result: OptimizationResult,
    pub report: OptimizeReport,
}

/// Runs the first configured method, which must be an optimizer, at the
/// single sweep value.
pub fn run_optimize(config: &ExperimentConfig) -> Result<OptimizeOutcome> {
    config.validate()?;
    let [value] = config.sweep.values[..] else {
        return Err(ExpError::Config(format!(
            "optimize runs at a single point; sweep has {} values",
            config.sweep.values.len()
        )));
    };
    let method = config.parsed_methods()?.remove(0);
    if !matches!(method, Method::Mpso(_) | Method::Pso) {
        return Err(ExpError::Config(format!("optimize needs mpso[-bN] or pso first in methods, got {method}")));
    }
    let scenario = config.scenario.at(config.sweep.axis, value)?;
    let system = scenario.system()?;
    let threshold = scenario.threshold();
    let obj = objective(&system, config.metric, threshold)?;
    let settings = config.optimizer.settings(optimizer_seed(config, 0, 0));
    let (phases, result) = design(&method, &system, obj.as_ref(), &settings)?;
    let result = result.expect("optimizers return a trace");
    let first = result.trace[0];
    let phase_independent = result.trace.iter().all(|&t| (t - first).abs() <= 1e-12 * first.abs().max(1e-300));
    let brute = match &phases {
        PhaseVector::Quantized { bits, .. } if bits * system.elements as u32 <= BRUTE_FORCE_MAX_LOG2 => {
            Some(brute_force(obj.as_ref(), system.elements, *bits)?.1)
        }
        _ => None,
    };
    let n = config.monte_carlo.samples;
    let samples = simulate_snr(&system, &phases, n, mc_seed(config, 0))?;
    let (mc, stderr) = mc_metric(&samples, config.metric, threshold);
    let report = OptimizeReport {
        method: method.to_string(),
        metric: config.metric.name().into(),
        elements: system.elements,
        objective_value: result.value,
        evaluations: result.evaluations,
        phase_independent,
        brute_force_value: brute,
        brute_force_relative_gap: brute.map(|b| (result.value - b).abs() / b.abs().max(f64::MIN_POSITIVE)),
        mc_samples: n,
        mc_metric: mc,
        mc_stderr: stderr,
        gate_passed: gate_passes(config.metric, result.value, mc, stderr),
    };
    Ok(OptimizeOutcome { phases, result, report })
}
