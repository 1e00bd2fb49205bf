//! Monte Carlo reference simulator for the instantaneous SNR.
//!
//! Realization `i` is generated from its own substream of the seed, and
//! samples are produced in fixed-size chunks whose results are assembled in
//! index order. Output is therefore identical for any number of worker
//! threads.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{ChannelRealization, ChannelSampler, SystemConfig};
use crate::error::{IrsError, Result};
use crate::moments::TERM_LABELS;
use crate::phases::PhaseVector;

const CHUNK: u64 = 4096;

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// FNV-1a over the bit patterns of every configuration field.
pub fn config_fingerprint(config: &SystemConfig) -> u64 {
    let mut words = vec![config.antennas as u64, config.elements as u64, config.bits as u64];
    words.extend([config.amplitude, config.snr_tx].map(f64::to_bits));
    for link in [&config.links.sd, &config.links.sr, &config.links.rd] {
        words.extend([link.mean, link.variance, link.rice_factor].map(f64::to_bits));
    }
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in words.iter().flat_map(|w| w.to_le_bytes()) {
        hash ^= byte as u64;
        hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
    hash
}

fn check_dimensions(realization: &ChannelRealization, elements: usize) -> Result<()> {
    if realization.elements != elements {
        return Err(IrsError::DimensionMismatch {
            expected: realization.elements,
            got: elements,
        });
    }
    Ok(())
}

/// Effective channel `h_sd + H_sr diag(nu) h_rd`.
fn effective_channel(realization: &ChannelRealization, coefficients: &[Complex64]) -> Vec<Complex64> {
    let n = realization.elements;
    let cascade: Vec<Complex64> = coefficients.iter().zip(&realization.h_rd).map(|(nu, g)| nu * g).collect();
    realization
        .h_sd
        .iter()
        .enumerate()
        .map(|(j, &direct)| {
            let row = &realization.h_sr[j * n..(j + 1) * n];
            direct + row.iter().zip(&cascade).map(|(h, c)| h * c).sum::<Complex64>()
        })
        .collect()
}

fn snr_from_coefficients(realization: &ChannelRealization, coefficients: &[Complex64], snr_tx: f64) -> f64 {
    snr_tx * effective_channel(realization, coefficients).iter().map(|e| e.norm_sqr()).sum::<f64>()
}

/// `snr_tx * ||h_sd + H_sr Theta h_rd||^2` with `Theta = diag(alpha e^{j theta_n})`,
/// the SNR after maximum-ratio combining.
pub fn instantaneous_snr(
    realization: &ChannelRealization,
    phases: &PhaseVector,
    amplitude: f64,
    snr_tx: f64,
) -> Result<f64> {
    check_dimensions(realization, phases.len())?;
    Ok(snr_from_coefficients(realization, &phases.coefficients(amplitude), snr_tx))
}

/// Applies `f` to realizations `0..n` in parallel chunks; results come back
/// in index order.
fn map_chunks<T, F>(sampler: &ChannelSampler, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&ChannelRealization, &mut T) + Sync,
    T: Default,
{
    let config = sampler.config();
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut buffer = ChannelRealization::zeros(config.antennas, config.elements);
            let mut acc = T::default();
            for index in c * CHUNK..((c + 1) * CHUNK).min(n) {
                sampler.fill(index, &mut buffer);
                f(&buffer, &mut acc);
            }
            acc
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnrSampleSet {
    /// Linear-scale SNR draws in realization order.
    pub samples: Vec<f64>,
    pub fingerprint: u64,
    pub seed: u64,
    pub count: usize,
}

impl SnrSampleSet {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        Self {
            count: samples.len(),
            samples,
            fingerprint: 0,
            seed: 0,
        }
    }

    pub fn mean(&self) -> f64 {
        compensated_sum(self.samples.iter().copied()) / self.count as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        sample_variance(&self.samples)
    }

    pub fn mean_stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn second_moment(&self) -> f64 {
        compensated_sum(self.samples.iter().map(|g| g * g)) / self.count as f64
    }

    pub fn second_moment_stderr(&self) -> f64 {
        let squares: Vec<f64> = self.samples.iter().map(|g| g * g).collect();
        (sample_variance(&squares) / self.count as f64).sqrt()
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut s = self.samples.clone();
        s.sort_by(f64::total_cmp);
        s
    }
}

fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    compensated_sum(values.iter().map(|v| (v - mean).powi(2))) / (n - 1) as f64
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(IrsError::InvalidSettings("need at least one Monte Carlo sample".into()));
    }
    Ok(())
}

/// `n` SNR draws over fresh channel realizations.
pub fn simulate_snr(config: &SystemConfig, phases: &PhaseVector, n: usize, seed: u64) -> Result<SnrSampleSet> {
    Ok(simulate_many(config, std::slice::from_ref(phases), n, seed)?.remove(0))
}

/// SNR draws for several phase vectors evaluated on the same realizations.
pub fn simulate_many(
    config: &SystemConfig,
    phases: &[PhaseVector],
    n: usize,
    seed: u64,
) -> Result<Vec<SnrSampleSet>> {
    check_count(n)?;
    let sampler = ChannelSampler::new(config, seed)?;
    for p in phases {
        if p.len() != config.elements {
            return Err(IrsError::DimensionMismatch {
                expected: config.elements,
                got: p.len(),
            });
        }
    }
    let coefficients: Vec<Vec<Complex64>> = phases.iter().map(|p| p.coefficients(config.amplitude)).collect();
    let chunks: Vec<Vec<Vec<f64>>> = map_chunks(&sampler, n as u64, |r, acc: &mut Vec<Vec<f64>>| {
        if acc.is_empty() {
            acc.resize(coefficients.len(), Vec::new());
        }
        for (out, nu) in acc.iter_mut().zip(&coefficients) {
            out.push(snr_from_coefficients(r, nu, config.snr_tx));
        }
    });
    let fingerprint = config_fingerprint(config);
    Ok((0..phases.len())
        .map(|k| {
            let samples: Vec<f64> = chunks.iter().flat_map(|c| c[k].iter().copied()).collect();
            SnrSampleSet {
                count: samples.len(),
                samples,
                fingerprint,
                seed,
            }
        })
        .collect())
}

/// Fraction of samples at or below `threshold`.
pub fn empirical_outage(set: &SnrSampleSet, threshold: f64) -> f64 {
    set.samples.iter().filter(|&&g| g <= threshold).count() as f64 / set.count as f64
}

/// Binomial standard error of an empirical probability.
pub fn outage_stderr(probability: f64, n: usize) -> f64 {
    (probability * (1.0 - probability) / n as f64).sqrt()
}

/// Sample mean of `log2(1 + g)`.
pub fn empirical_rate(set: &SnrSampleSet) -> f64 {
    compensated_sum(set.samples.iter().map(|g| g.ln_1p())) / set.count as f64 / std::f64::consts::LN_2
}

pub fn rate_stderr(set: &SnrSampleSet) -> f64 {
    let rates: Vec<f64> = set.samples.iter().map(|g| g.ln_1p() / std::f64::consts::LN_2).collect();
    (sample_variance(&rates) / set.count as f64).sqrt()
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `sorted` (ascending) and the continuous CDF `cdf`.
pub fn ks_distance(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Monte Carlo estimate of one moment term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermEstimate {
    pub label: &'static str,
    pub mean: Complex64,
    /// Standard errors of the real and imaginary parts.
    pub stderr: Complex64,
}

/// Running sums of the 15 terms and of their squared parts.
#[derive(Clone)]
struct TermAccumulator {
    count: u64,
    sum: [Complex64; 15],
    sq: [Complex64; 15],
}

impl Default for TermAccumulator {
    fn default() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            count: 0,
            sum: [zero; 15],
            sq: [zero; 15],
        }
    }
}

/// The random SNR building blocks `(A, B, C1, C2)` of one realization,
/// unscaled by the transmit SNR.
pub fn snr_blocks(realization: &ChannelRealization, coefficients: &[Complex64]) -> (f64, Complex64, f64, f64) {
    let n = realization.elements;
    let mut a = 0.0;
    let mut b = Complex64::new(0.0, 0.0);
    let mut c1 = 0.0;
    let mut c2 = 0.0;
    for (j, &direct) in realization.h_sd.iter().enumerate() {
        let row = &realization.h_sr[j * n..(j + 1) * n];
        let mut c = Complex64::new(0.0, 0.0);
        let mut own = 0.0;
        for i in 0..n {
            let z = row[i] * realization.h_rd[i] * coefficients[i];
            c += z;
            own += z.norm_sqr();
        }
        a += direct.norm_sqr();
        b += direct.conj() * c;
        c1 += own;
        c2 += c.norm_sqr() - own;
    }
    (a, b, c1, c2)
}

/// Term-by-term Monte Carlo estimates, in the order of [`TERM_LABELS`].
pub fn estimate_terms(config: &SystemConfig, phases: &PhaseVector, n: usize, seed: u64) -> Result<Vec<TermEstimate>> {
    check_count(n)?;
    if phases.len() != config.elements {
        return Err(IrsError::DimensionMismatch {
            expected: config.elements,
            got: phases.len(),
        });
    }
    let sampler = ChannelSampler::new(config, seed)?;
    let nu = phases.coefficients(config.amplitude);
    let chunks = map_chunks(&sampler, n as u64, |r, acc: &mut TermAccumulator| {
        let (a, b, c1, c2) = snr_blocks(r, &nu);
        let re = |x: f64| Complex64::new(x, 0.0);
        let values = [
            re(a),
            b,
            re(c1),
            re(c2),
            re(a * a),
            b * b,
            re(c1 * c1),
            re(c2 * c2),
            b * a,
            re(a * c1),
            re(a * c2),
            re(b.norm_sqr()),
            b * c1,
            b * c2,
            re(c1 * c2),
        ];
        acc.count += 1;
        for (k, v) in values.iter().enumerate() {
            acc.sum[k] += v;
            acc.sq[k] += Complex64::new(v.re * v.re, v.im * v.im);
        }
    });
    let total = n as f64;
    let labels = TERM_LABELS;
    Ok((0..15)
        .map(|k| {
            let sum_re = compensated_sum(chunks.iter().map(|c| c.sum[k].re));
            let sum_im = compensated_sum(chunks.iter().map(|c| c.sum[k].im));
            let sq_re = compensated_sum(chunks.iter().map(|c| c.sq[k].re));
            let sq_im = compensated_sum(chunks.iter().map(|c| c.sq[k].im));
            let mean = Complex64::new(sum_re / total, sum_im / total);
            let spread = |sq: f64, m: f64| ((sq / total - m * m).max(0.0) / (total - 1.0).max(1.0)).sqrt();
            TermEstimate {
                label: labels[k],
                mean,
                stderr: Complex64::new(spread(sq_re, mean.re), spread(sq_im, mean.im)),
            }
        })
        .collect())
}

/// Phase resolution available to the instantaneous-CSI baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Bits(u32),
    Continuous,
}

const BASELINE_MAX_PASSES: usize = 1000;

/// Instantaneous-CSI greedy baseline: coordinate ascent on the SNR of one
/// known realization, starting from zero phases.
///
/// Element `n` is set to the phase maximizing the SNR with the others held
/// fixed. Writing the effective channel as `e = e_rest + nu_n r_n`, the SNR
/// depends on `theta_n` only through `Re(e^{j theta_n} w)` with
/// `w = alpha sum_j conj(e_rest_j) r_nj`, so continuous phases take
/// `theta_n = -arg(w)` and quantized phases take the best level for that
/// expression. Passes repeat until one makes no change.
pub fn instantaneous_baseline(
    realization: &ChannelRealization,
    resolution: Resolution,
    amplitude: f64,
    snr_tx: f64,
) -> Result<(PhaseVector, f64)> {
    let n = realization.elements;
    let m = realization.antennas;
    if realization.h_sd.len() != m || realization.h_sr.len() != m * n || realization.h_rd.len() != n {
        return Err(IrsError::DimensionMismatch {
            expected: m * n,
            got: realization.h_sr.len(),
        });
    }
    let candidates: Option<Vec<f64>> = match resolution {
        Resolution::Bits(bits) => Some(crate::phases::phase_set(bits)?),
        Resolution::Continuous => None,
    };
    // Column n of H_sr scaled by h_rd[n].
    let columns: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..m).map(|j| realization.sr(j, i) * realization.h_rd[i]).collect())
        .collect();
    let mut levels = vec![0u32; n];
    let mut angles = vec![0.0f64; n];
    let mut effective = effective_channel(realization, &vec![Complex64::new(amplitude, 0.0); n]);

    for _ in 0..BASELINE_MAX_PASSES {
        let mut changed = false;
        for i in 0..n {
            let current = Complex64::from_polar(amplitude, angles[i]);
            for (e, r) in effective.iter_mut().zip(&columns[i]) {
                *e -= current * r;
            }
            let w: Complex64 = effective.iter().zip(&columns[i]).map(|(e, r)| e.conj() * r).sum();
            let gain = |theta: f64| (Complex64::from_polar(1.0, theta) * w).re;
            let (new_angle, new_level) = match &candidates {
                None => ((-w.arg()).rem_euclid(TAU), 0),
                Some(set) => {
                    let mut best = levels[i] as usize;
                    for (l, &theta) in set.iter().enumerate() {
                        if gain(theta) > gain(set[best]) {
                            best = l;
                        }
                    }
                    (set[best], best as u32)
                }
            };
            let old = gain(angles[i]);
            if gain(new_angle) > old + 1e-12 * old.abs() {
                angles[i] = new_angle;
                levels[i] = new_level;
                changed = true;
            }
            let updated = Complex64::from_polar(amplitude, angles[i]);
            for (e, r) in effective.iter_mut().zip(&columns[i]) {
                *e += updated * r;
            }
        }
        if !changed {
            break;
        }
    }
    let phases = match resolution {
        Resolution::Bits(bits) => PhaseVector::Quantized { bits, levels },
        Resolution::Continuous => PhaseVector::Continuous { angles },
    };
    let snr = instantaneous_snr(realization, &phases, amplitude, snr_tx)?;
    Ok((phases, snr))
}

const MAGIC: &[u8; 8] = b"IRSSNR01";

/// Writes samples as a 16-byte header (magic, u32 count, u32 reserved)
/// followed by little-endian f64 values.
pub fn write_samples(path: &Path, samples: &[f64]) -> io::Result<()> {
    let count = u32::try_from(samples.len())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "too many samples for a u32 count"))?;
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&count.to_le_bytes())?;
    out.write_all(&0u32.to_le_bytes())?;
    for s in samples {
        out.write_all(&s.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_samples(path: &Path) -> io::Result<Vec<f64>> {
    let mut input = BufReader::new(File::open(path)?);
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if &header[..8] != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not an SNR sample dump"));
    }
    let count = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != count * 8 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("header announces {count} samples but payload has {} bytes", bytes.len()),
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect())
}
