//! Closed-form first and second moments of the end-to-end SNR and the
//! moment-matched gamma approximation.
//!
//! With `a_j = [h_sd]_j`, `z_ji = [H_sr]_ji [h_rd]_i nu_i` and
//! `c_j = sum_i z_ji`, the normalized SNR `g / g_s = sum_j |a_j + c_j|^2`
//! splits as `A + 2 Re(B) + C1 + C2` where
//!
//! * `A  = sum_j |a_j|^2`
//! * `B  = sum_j conj(a_j) c_j`
//! * `C1 = sum_j sum_i |z_ji|^2`
//! * `C2 = sum_j sum_{i != k} conj(z_ji) z_jk`
//!
//! Every expectation below depends on the phases only through the phase sums
//! `s1..s5`. See `docs/moment-derivations.md` for the derivations.

use num_complex::Complex64;

use crate::channel::SystemConfig;
use crate::error::{IrsError, Result};
use crate::phases::PhaseVector;

/// Phase-dependent sums over the reflection coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseSums {
    /// `sum_i nu_i`
    pub s1: Complex64,
    /// `sum_i sum_{k != i} conj(nu_i) nu_k`
    pub s2: f64,
    /// `sum_i sum_{k != i} sum_{w != k} conj(nu_i) nu_w`
    pub s3: f64,
    /// `sum_i sum_{k != i} sum_{v != i} nu_k conj(nu_v)`
    pub s4: f64,
    /// `sum_i sum_{w != i} nu_w`
    pub s5: Complex64,
}

/// Evaluates the phase sums in O(N) through their closed identities:
/// `s2 = |s1|^2 - P`, `s3 = s4 = (N - 2)|s1|^2 + P`, `s5 = (N - 1) s1`, with
/// `P = sum_i |nu_i|^2`.
pub fn phase_sums(coefficients: &[Complex64]) -> PhaseSums {
    let n = coefficients.len() as f64;
    let s1: Complex64 = coefficients.iter().sum();
    let power: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
    let s1_sq = s1.norm_sqr();
    let triple = (n - 2.0) * s1_sq + power;
    PhaseSums {
        s1,
        s2: s1_sq - power,
        s3: triple,
        s4: triple,
        s5: s1 * (n - 1.0),
    }
}

/// Expectations of the SNR building blocks, normalized by the transmit SNR
/// (multiply first-order terms by `g_s` and second-order terms by `g_s^2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTerms {
    pub a: f64,
    pub b: Complex64,
    pub c1: f64,
    pub c2: f64,

    pub a_sq: f64,
    pub b_sq: Complex64,
    pub c1_sq: f64,
    pub c2_sq: f64,
    pub a_b: Complex64,
    pub a_c1: f64,
    pub a_c2: f64,
    pub b_abs_sq: f64,
    pub b_c1: Complex64,
    pub b_c2: Complex64,
    pub c1_c2: f64,
}

impl MomentTerms {
    /// `E[g] / g_s`.
    pub fn first_moment(&self) -> f64 {
        self.a + 2.0 * self.b.re + self.c1 + self.c2
    }

    /// `E[g^2] / g_s^2`.
    pub fn second_moment(&self) -> f64 {
        self.a_sq
            + 2.0 * self.b_sq.re
            + self.c1_sq
            + self.c2_sq
            + 4.0 * self.a_b.re
            + 2.0 * self.a_c1
            + 2.0 * self.a_c2
            + 2.0 * self.b_abs_sq
            + 4.0 * self.b_c1.re
            + 4.0 * self.b_c2.re
            + 2.0 * self.c1_c2
    }

    /// All terms with their labels, first-order terms first.
    pub fn named(&self) -> [(&'static str, Complex64); 15] {
        let r = |x: f64| Complex64::new(x, 0.0);
        let values = [
            r(self.a),
            self.b,
            r(self.c1),
            r(self.c2),
            r(self.a_sq),
            self.b_sq,
            r(self.c1_sq),
            r(self.c2_sq),
            self.a_b,
            r(self.a_c1),
            r(self.a_c2),
            r(self.b_abs_sq),
            self.b_c1,
            self.b_c2,
            r(self.c1_c2),
        ];
        std::array::from_fn(|k| (TERM_LABELS[k], values[k]))
    }
}

/// Labels of the moment terms in [`MomentTerms::named`] order.
pub const TERM_LABELS: [&str; 15] = [
    "A", "B", "C1", "C2", "A^2", "B^2", "C1^2", "C2^2", "AB", "AC1", "AC2", "|B|^2", "BC1", "BC2", "C1C2",
];

fn coefficients_for(config: &SystemConfig, phases: &PhaseVector) -> Result<Vec<Complex64>> {
    config.validate()?;
    if phases.len() != config.elements {
        return Err(IrsError::DimensionMismatch {
            expected: config.elements,
            got: phases.len(),
        });
    }
    Ok(phases.coefficients(config.amplitude))
}

pub fn moment_terms(config: &SystemConfig, phases: &PhaseVector) -> Result<MomentTerms> {
    let coefficients = coefficients_for(config, phases)?;
    Ok(terms_from_sums(config, &phase_sums(&coefficients)))
}

pub(crate) fn terms_from_sums(config: &SystemConfig, s: &PhaseSums) -> MomentTerms {
    let m = config.antennas as f64;
    let n = config.elements as f64;
    let a2 = config.amplitude * config.amplitude;
    let (sd, sr, rd) = (&config.links.sd, &config.links.sr, &config.links.rd);

    let (p_sd, p_sr, p_rd) = (sd.power(), sr.power(), rd.power());
    let (mu_sd2, mu_sr2, mu_rd2) = (sd.mean * sd.mean, sr.mean * sr.mean, rd.mean * rd.mean);
    let (f_sd, f_sr, f_rd) = (sd.scattered_fraction(), sr.scattered_fraction(), rd.scattered_fraction());
    let (k_sd, k_sr, k_rd) = (sd.power_dispersion(), sr.power_dispersion(), rd.power_dispersion());
    let mu3 = sd.mean * sr.mean * rd.mean;
    let cascade = mu_sr2 * mu_rd2;
    let pairs = n * (n - 1.0);

    let a = m * p_sd;
    let b = s.s1 * (m * mu3);
    let c1 = m * n * a2 * p_sr * p_rd;
    let c2 = m * cascade * s.s2;

    // C2^2: conditioned on h_rd the rows of H_sr are independent; `rho` and
    // `scatter` are the power and scattered power of nu_i [h_rd]_i.
    let rho = a2 * p_rd;
    let scatter = a2 * rd.variance;
    let s34 = s.s3 + s.s4;
    let cross_rows = mu_rd2 * mu_rd2 * s.s2 * s.s2 + scatter * mu_rd2 * s34 + scatter * scatter * pairs;
    let c2_sq = m * m * mu_sr2 * mu_sr2 * cross_rows
        + m * (sr.variance * mu_sr2 * rho * (mu_rd2 * s34 + 2.0 * scatter * pairs)
            + sr.variance * sr.variance * rho * rho * pairs);

    MomentTerms {
        a,
        b,
        c1,
        c2,
        a_sq: m * p_sd * p_sd * (k_sd + m),
        b_sq: (s.s1 * mu3).powu(2) * (m * m),
        c1_sq: a2 * a2 * m * n * p_sr * p_sr * p_rd * p_rd * (k_sr * (k_rd + 1.0) + m * (k_rd + n)),
        c2_sq,
        a_b: s.s1 * (m * p_sd * mu3 * (m + f_sd)),
        a_c1: a * c1,
        a_c2: a * c2,
        b_abs_sq: m * n * a2 * p_rd * (p_sd * p_sr + (m - 1.0) * mu_sd2 * mu_sr2)
            + m * cascade * s.s2 * (p_sd + (m - 1.0) * mu_sd2),
        b_c1: s.s1 * (a2 * m * p_sr * p_rd * mu3 * (f_sr + f_sr * f_rd + m * f_rd + m * n)),
        b_c2: (s.s1 * (m * mu_sr2 * mu_rd2 * s.s2)
            + s.s5 * (m * mu_sr2 * a2 * rd.variance + sr.variance * a2 * p_rd))
            * (m * mu3),
        c1_c2: m * a2 * cascade * s.s2 * p_sr * p_rd * (m * n + 2.0 * m * f_rd + 2.0 * f_sr + 2.0 * f_sr * f_rd),
    }
}

/// `E[g]` in linear SNR units.
pub fn mean_snr(config: &SystemConfig, phases: &PhaseVector) -> Result<f64> {
    let coefficients = coefficients_for(config, phases)?;
    let s = phase_sums(&coefficients);
    let m = config.antennas as f64;
    let n = config.elements as f64;
    let a2 = config.amplitude * config.amplitude;
    let l = &config.links;
    let bracket = l.sd.power()
        + 2.0 * l.sd.mean * l.sr.mean * l.rd.mean * s.s1.re
        + n * a2 * l.sr.power() * l.rd.power()
        + (l.sr.mean * l.rd.mean).powi(2) * s.s2;
    Ok(config.snr_tx * m * bracket)
}

/// `E[g^2]` in squared linear SNR units.
pub fn second_moment_snr(config: &SystemConfig, phases: &PhaseVector) -> Result<f64> {
    let terms = moment_terms(config, phases)?;
    Ok(config.snr_tx * config.snr_tx * terms.second_moment())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrMoments {
    pub mean: f64,
    pub second: f64,
}

impl SnrMoments {
    pub fn variance(&self) -> f64 {
        self.second - self.mean * self.mean
    }
}

/// Both moments from one pass over the phases.
pub fn snr_moments(config: &SystemConfig, phases: &PhaseVector) -> Result<SnrMoments> {
    let terms = moment_terms(config, phases)?;
    let g = config.snr_tx;
    Ok(SnrMoments {
        mean: g * terms.first_moment(),
        second: g * g * terms.second_moment(),
    })
}

/// Gamma distribution with shape `k` and scale `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
}

impl GammaFit {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0 && scale.is_finite() && scale > 0.0) {
            return Err(IrsError::Domain {
                function: "GammaFit::new",
                detail: format!("shape {shape} and scale {scale} must be positive and finite"),
            });
        }
        Ok(Self { shape, scale })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }
}

/// Matches a gamma distribution to the first two moments.
pub fn gamma_fit(m1: f64, m2: f64) -> Result<GammaFit> {
    if !(m1.is_finite() && m2.is_finite() && m1 > 0.0) {
        return Err(IrsError::Domain {
            function: "gamma_fit",
            detail: format!("moments must be finite with a positive mean (m1={m1}, m2={m2})"),
        });
    }
    let variance = m2 - m1 * m1;
    // Below a few ulps of m2 the difference is rounding noise.
    if !(variance > 8.0 * f64::EPSILON * m2) {
        return Err(IrsError::DegenerateVariance { m1, m2 });
    }
    Ok(GammaFit {
        shape: m1 * m1 / variance,
        scale: variance / m1,
    })
}

/// Moment-matched gamma approximation of the SNR for the given phases.
pub fn fit_snr(config: &SystemConfig, phases: &PhaseVector) -> Result<GammaFit> {
    let moments = snr_moments(config, phases)?;
    gamma_fit(moments.mean, moments.second)
}
