//! Phase-shift optimizers: multi-valued PSO over quantized levels, continuous
//! PSO over angles, and exhaustive search for small instances.
//!
//! Objective evaluations inside one iteration run in parallel; the random
//! draws that drive the swarm are consumed sequentially from one seeded
//! stream, so results do not depend on the worker count.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::SystemConfig;
use crate::error::{IrsError, Result};
use crate::metrics::{ergodic_rate, outage_probability};
use crate::moments::fit_snr;
use crate::phases::PhaseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Sense {
    pub fn worst(self) -> f64 {
        match self {
            Sense::Minimize => f64::INFINITY,
            Sense::Maximize => f64::NEG_INFINITY,
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }
}

pub trait Objective: Sync {
    fn name(&self) -> &str;
    fn sense(&self) -> Sense;
    fn evaluate(&self, phases: &PhaseVector) -> Result<f64>;

    /// Objective value, with failures and NaN mapped to the worst fitness.
    fn fitness(&self, phases: &PhaseVector) -> f64 {
        match self.evaluate(phases) {
            Ok(v) if !v.is_nan() => v,
            _ => self.sense().worst(),
        }
    }
}

/// Outage probability of the gamma-approximated SNR at a fixed threshold.
#[derive(Debug, Clone)]
pub struct OutageObjective {
    pub config: SystemConfig,
    pub threshold: f64,
}

impl Objective for OutageObjective {
    fn name(&self) -> &str {
        "outage-probability"
    }

    fn sense(&self) -> Sense {
        Sense::Minimize
    }

    fn evaluate(&self, phases: &PhaseVector) -> Result<f64> {
        let fit = fit_snr(&self.config, phases)?;
        outage_probability(&fit, self.threshold)
    }
}

/// Ergodic rate of the gamma-approximated SNR, bits per channel use.
#[derive(Debug, Clone)]
pub struct RateObjective {
    pub config: SystemConfig,
}

impl Objective for RateObjective {
    fn name(&self) -> &str {
        "ergodic-rate"
    }

    fn sense(&self) -> Sense {
        Sense::Maximize
    }

    fn evaluate(&self, phases: &PhaseVector) -> Result<f64> {
        ergodic_rate(&fit_snr(&self.config, phases)?)
    }
}

/// Wraps a closure as an objective.
pub struct FnObjective<F> {
    name: String,
    sense: Sense,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&PhaseVector) -> Result<f64> + Sync,
{
    pub fn new(name: impl Into<String>, sense: Sense, f: F) -> Self {
        Self {
            name: name.into(),
            sense,
            f,
        }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&PhaseVector) -> Result<f64> + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn sense(&self) -> Sense {
        self.sense
    }

    fn evaluate(&self, phases: &PhaseVector) -> Result<f64> {
        (self.f)(phases)
    }
}

pub fn build_op_objective(config: &SystemConfig, threshold: f64) -> Result<OutageObjective> {
    config.validate()?;
    if !(threshold >= 0.0) {
        return Err(IrsError::Domain {
            function: "build_op_objective",
            detail: format!("threshold must be nonnegative, got {threshold}"),
        });
    }
    Ok(OutageObjective {
        config: *config,
        threshold,
    })
}

pub fn build_rate_objective(config: &SystemConfig) -> Result<RateObjective> {
    config.validate()?;
    Ok(RateObjective { config: *config })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    /// Swarm size `T`.
    pub particles: usize,
    /// Iterations `I_max`.
    pub iterations: usize,
    /// MPSO position noise, as a fraction of the level range.
    pub mpso_spread: f64,
    /// MPSO inertia, decreased linearly from `.0` to `.1` over the run.
    pub mpso_inertia: (f64, f64),
    /// Upper bound of the uniform MPSO attraction coefficients.
    pub mpso_attraction: f64,
    /// PSO inertia schedule.
    pub pso_inertia: (f64, f64),
    /// PSO cognitive and social accelerations `(c1, c2)`.
    pub pso_accel: (f64, f64),
    /// PSO velocity limit as a fraction of `2pi`.
    pub pso_velocity_clamp: f64,
    /// Wrap PSO angles modulo `2pi` instead of clamping to `[0, 2pi]`.
    pub wrap_angles: bool,
    /// Draw the random attraction coefficients per dimension rather than per particle.
    pub per_dimension_coefficients: bool,
    pub seed: u64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            particles: 200,
            iterations: 100,
            mpso_spread: 0.2,
            mpso_inertia: (0.9, 0.2),
            mpso_attraction: 2.0,
            pso_inertia: (0.9, 0.4),
            pso_accel: (2.0, 2.0),
            pso_velocity_clamp: 0.5,
            wrap_angles: false,
            per_dimension_coefficients: false,
            seed: 0,
        }
    }
}

impl OptimizerSettings {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IrsError::InvalidSettings(msg));
        if self.particles < 2 {
            return bad(format!("need at least 2 particles, got {}", self.particles));
        }
        if self.iterations < 1 {
            return bad("need at least 1 iteration".into());
        }
        if !(self.mpso_spread > 0.0 && self.mpso_spread.is_finite()) {
            return bad(format!("MPSO spread must be positive, got {}", self.mpso_spread));
        }
        if !(self.pso_accel.0 > 0.0 && self.pso_accel.1 > 0.0) {
            return bad(format!("PSO accelerations must be positive, got {:?}", self.pso_accel));
        }
        if !(self.mpso_attraction > 0.0) {
            return bad(format!("MPSO attraction bound must be positive, got {}", self.mpso_attraction));
        }
        if !(self.pso_velocity_clamp > 0.0) {
            return bad(format!("velocity clamp must be positive, got {}", self.pso_velocity_clamp));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub phases: PhaseVector,
    pub value: f64,
    /// Best value found up to and including each iteration.
    pub trace: Vec<f64>,
    pub evaluations: usize,
}

fn linear_schedule((start, end): (f64, f64), iteration: usize, total: usize) -> f64 {
    start - iteration as f64 * (start - end) / total as f64
}

/// Personal and global best bookkeeping shared by both swarms.
struct Bests<P> {
    personal: Vec<P>,
    personal_value: Vec<f64>,
    global: usize,
    sense: Sense,
}

impl<P: Clone> Bests<P> {
    fn new(positions: &[P], values: &[f64], sense: Sense) -> Self {
        let mut bests = Self {
            personal: positions.to_vec(),
            personal_value: values.to_vec(),
            global: 0,
            sense,
        };
        bests.refresh_global();
        bests
    }

    fn update(&mut self, positions: &[P], values: &[f64]) {
        for (j, (&v, p)) in values.iter().zip(positions).enumerate() {
            if self.sense.better(v, self.personal_value[j]) {
                self.personal_value[j] = v;
                self.personal[j] = p.clone();
            }
        }
        self.refresh_global();
    }

    fn refresh_global(&mut self) {
        for j in 0..self.personal_value.len() {
            if self.sense.better(self.personal_value[j], self.personal_value[self.global]) {
                self.global = j;
            }
        }
    }

    fn global_value(&self) -> f64 {
        self.personal_value[self.global]
    }
}

fn attraction_pair(rng: &mut ChaCha8Rng, upper: (f64, f64)) -> (f64, f64) {
    (rng.random::<f64>() * upper.0, rng.random::<f64>() * upper.1)
}

/// Multi-valued PSO over integer phase levels.
///
/// Each iteration evaluates the swarm, refreshes the personal and global
/// bests, and moves particle `j` by
///
/// ```text
/// V <- W V + psi1 (local - x) + psi2 (global - x)      psi ~ U[0, 2]
/// S  = (2^b - 1) / (1 + e^-V)
/// x  = clamp(round(Normal(S, spread (2^b - 1))), 0, 2^b - 1)
/// ```
///
/// with inertia `W` decreasing linearly over the run. Positions, bests and
/// velocities live in level units.
pub fn mpso_optimize<O: Objective + ?Sized>(
    objective: &O,
    elements: usize,
    bits: u32,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult> {
    settings.validate()?;
    if elements == 0 {
        return Err(IrsError::InvalidSettings("need at least one element".into()));
    }
    if bits == 0 || bits > 16 {
        return Err(IrsError::InvalidSettings(format!("bits must be in 1..=16, got {bits}")));
    }
    let sense = objective.sense();
    let top = ((1u32 << bits) - 1) as f64;
    let noise = settings.mpso_spread * top;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    let mut positions: Vec<Vec<u32>> = (0..settings.particles)
        .map(|_| (0..elements).map(|_| rng.random_range(0..=top as u32)).collect())
        .collect();
    let mut velocities = vec![vec![0.0f64; elements]; settings.particles];
    let evaluate = |positions: &[Vec<u32>]| -> Vec<f64> {
        positions
            .par_iter()
            .map(|levels| objective.fitness(&PhaseVector::Quantized { bits, levels: levels.clone() }))
            .collect()
    };

    let mut bests: Option<Bests<Vec<u32>>> = None;
    let mut trace = Vec::with_capacity(settings.iterations);
    let upper = (settings.mpso_attraction, settings.mpso_attraction);
    for iteration in 1..=settings.iterations {
        let values = evaluate(&positions);
        let b = match bests.as_mut() {
            Some(b) => {
                b.update(&positions, &values);
                b
            }
            None => bests.insert(Bests::new(&positions, &values, sense)),
        };
        trace.push(b.global_value());

        let inertia = linear_schedule(settings.mpso_inertia, iteration, settings.iterations);
        let global = b.personal[b.global].clone();
        for (j, (x, v)) in positions.iter_mut().zip(velocities.iter_mut()).enumerate() {
            let local = &b.personal[j];
            let (mut psi1, mut psi2) = attraction_pair(&mut rng, upper);
            for n in 0..elements {
                if settings.per_dimension_coefficients && n > 0 {
                    (psi1, psi2) = attraction_pair(&mut rng, upper);
                }
                let here = x[n] as f64;
                v[n] = inertia * v[n] + psi1 * (local[n] as f64 - here) + psi2 * (global[n] as f64 - here);
                let centre = top / (1.0 + (-v[n]).exp());
                let z: f64 = rng.sample(StandardNormal);
                x[n] = (centre + noise * z).round().clamp(0.0, top) as u32;
            }
        }
    }

    let b = bests.expect("at least one iteration");
    Ok(OptimizationResult {
        phases: PhaseVector::Quantized {
            bits,
            levels: b.personal[b.global].clone(),
        },
        value: b.global_value(),
        trace,
        evaluations: settings.particles * settings.iterations,
    })
}

/// Continuous-phase PSO over `[0, 2pi]^N` with linearly decreasing inertia.
pub fn pso_optimize<O: Objective + ?Sized>(
    objective: &O,
    elements: usize,
    settings: &OptimizerSettings,
) -> Result<OptimizationResult> {
    settings.validate()?;
    if elements == 0 {
        return Err(IrsError::InvalidSettings("need at least one element".into()));
    }
    let sense = objective.sense();
    let vmax = settings.pso_velocity_clamp * TAU;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    let mut positions: Vec<Vec<f64>> = (0..settings.particles)
        .map(|_| (0..elements).map(|_| rng.random::<f64>() * TAU).collect())
        .collect();
    let mut velocities = vec![vec![0.0f64; elements]; settings.particles];
    let evaluate = |positions: &[Vec<f64>]| -> Vec<f64> {
        positions
            .par_iter()
            .map(|angles| objective.fitness(&PhaseVector::Continuous { angles: angles.clone() }))
            .collect()
    };

    let mut bests: Option<Bests<Vec<f64>>> = None;
    let mut trace = Vec::with_capacity(settings.iterations);
    for iteration in 1..=settings.iterations {
        let values = evaluate(&positions);
        let b = match bests.as_mut() {
            Some(b) => {
                b.update(&positions, &values);
                b
            }
            None => bests.insert(Bests::new(&positions, &values, sense)),
        };
        trace.push(b.global_value());

        let inertia = linear_schedule(settings.pso_inertia, iteration, settings.iterations);
        let global = b.personal[b.global].clone();
        for (j, (x, v)) in positions.iter_mut().zip(velocities.iter_mut()).enumerate() {
            let local = &b.personal[j];
            let (mut r1, mut r2) = attraction_pair(&mut rng, settings.pso_accel);
            for n in 0..elements {
                if settings.per_dimension_coefficients && n > 0 {
                    (r1, r2) = attraction_pair(&mut rng, settings.pso_accel);
                }
                v[n] = (inertia * v[n] + r1 * (local[n] - x[n]) + r2 * (global[n] - x[n])).clamp(-vmax, vmax);
                let moved = x[n] + v[n];
                x[n] = if settings.wrap_angles {
                    moved.rem_euclid(TAU)
                } else {
                    moved.clamp(0.0, TAU)
                };
            }
        }
    }

    let b = bests.expect("at least one iteration");
    Ok(OptimizationResult {
        phases: PhaseVector::Continuous {
            angles: b.personal[b.global].clone(),
        },
        value: b.global_value(),
        trace,
        evaluations: settings.particles * settings.iterations,
    })
}

const BRUTE_FORCE_LOG2_LIMIT: u64 = 20;

/// Exhaustive search over all `2^(bN)` level vectors. Element 0 is the
/// fastest-varying digit; ties keep the first candidate in that order.
pub fn brute_force<O: Objective + ?Sized>(objective: &O, elements: usize, bits: u32) -> Result<(PhaseVector, f64)> {
    let log2 = bits as u64 * elements as u64;
    if log2 > BRUTE_FORCE_LOG2_LIMIT {
        return Err(IrsError::SearchTooLarge { log2_candidates: log2 });
    }
    if elements == 0 || bits == 0 {
        return Err(IrsError::InvalidSettings("need at least one element and one bit".into()));
    }
    let base = 1u64 << bits;
    let total = 1u64 << log2;
    let sense = objective.sense();
    let decode = |mut index: u64| -> Vec<u32> {
        (0..elements)
            .map(|_| {
                let digit = (index % base) as u32;
                index /= base;
                digit
            })
            .collect()
    };
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| objective.fitness(&PhaseVector::Quantized { bits, levels: decode(i) }))
        .collect();
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate() {
        if sense.better(v, values[best]) {
            best = i;
        }
    }
    Ok((
        PhaseVector::Quantized {
            bits,
            levels: decode(best as u64),
        },
        values[best],
    ))
}
