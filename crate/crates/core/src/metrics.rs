//! Outage probability and ergodic rate under the gamma approximation.

use std::f64::consts::LN_2;

use crate::error::{IrsError, Result};
use crate::moments::GammaFit;
use crate::special::{laguerre_cached, legendre_24, regularized_lower_gamma, LAGUERRE_LEVELS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricRequest {
    pub fit: GammaFit,
    /// SNR threshold, linear scale.
    pub threshold: f64,
}

/// `P[g <= threshold]` for `g ~ Gamma(k, theta)`.
pub fn outage_probability(fit: &GammaFit, threshold: f64) -> Result<f64> {
    if !(threshold >= 0.0) {
        return Err(IrsError::Domain {
            function: "outage_probability",
            detail: format!("threshold must be nonnegative, got {threshold}"),
        });
    }
    regularized_lower_gamma(fit.shape, threshold / fit.scale)
}

pub fn outage_for(request: &MetricRequest) -> Result<f64> {
    outage_probability(&request.fit, request.threshold)
}

/// Stop doubling the Laguerre rule once two successive estimates agree this well.
const LAGUERRE_TOL: f64 = 1e-9;
/// Split point between the composite Legendre head and the Laguerre tail.
const SPLIT: f64 = 2.0;

/// `E[log2(1 + g)]` for `g ~ Gamma(k, theta)`, in bits per channel use.
///
/// Evaluated through the Laplace-transform form of the logarithm,
///
/// ```text
/// E[ln(1 + g)] = int_0^inf e^-s (1 - (1 + theta s)^-k) / s ds,
/// ```
///
/// whose integrand is bounded and smooth on `[0, inf)`. The integrand varies
/// on the scale `1 / (k theta)` near the origin, so `[0, SPLIT]` is covered by
/// 24-point Gauss-Legendre panels that double in width from that scale. The
/// tail `[SPLIT, inf)` uses Gauss-Laguerre with 64, 128, ... nodes until two
/// successive estimates agree to `LAGUERRE_TOL`.
pub fn ergodic_rate(fit: &GammaFit) -> Result<f64> {
    let (k, theta) = (fit.shape, fit.scale);
    if !(k.is_finite() && k > 0.0 && theta.is_finite() && theta > 0.0) {
        return Err(IrsError::Domain {
            function: "ergodic_rate",
            detail: format!("shape {k} and scale {theta} must be positive and finite"),
        });
    }
    let integrand = |s: f64| {
        if s == 0.0 {
            k * theta
        } else {
            -(-k * (theta * s).ln_1p()).exp_m1() / s
        }
    };

    let legendre = legendre_24();
    let mut head = 0.0;
    let mut lo = 0.0;
    let mut width = (0.25 / (theta * k.max(1.0))).min(SPLIT);
    while lo < SPLIT {
        let hi = (lo + width).min(SPLIT);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        head += half * legendre.integrate(|t| {
            let s = mid + half * t;
            (-s).exp() * integrand(s)
        });
        lo = hi;
        width = lo;
    }

    let mut previous = f64::NAN;
    let mut tail = f64::NAN;
    for level in 0..LAGUERRE_LEVELS {
        tail = laguerre_cached(level).integrate(|u| integrand(SPLIT + u));
        if (tail - previous).abs() < LAGUERRE_TOL {
            break;
        }
        previous = tail;
    }
    Ok((head + (-SPLIT).exp() * tail) / LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_threshold_is_zero_outage() {
        let fit = GammaFit::new(3.0, 2.0).unwrap();
        assert_eq!(outage_probability(&fit, 0.0).unwrap(), 0.0);
        assert!(outage_probability(&fit, -1.0).is_err());
    }

    #[test]
    fn exponential_median() {
        let fit = GammaFit::new(1.0, 2.0).unwrap();
        let p = outage_probability(&fit, 2.0 * 2f64.ln()).unwrap();
        assert!((p - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rate_vanishes_with_scale() {
        let fit = GammaFit::new(1.0, 1e-12).unwrap();
        assert!(ergodic_rate(&fit).unwrap() < 1e-10);
    }

    #[test]
    fn rate_of_degenerate_ish_gamma_is_log_of_mean() {
        // Large shape concentrates the distribution at its mean.
        let fit = GammaFit::new(1e6, 3e-6).unwrap();
        let r = ergodic_rate(&fit).unwrap();
        assert!((r - (1.0 + 3.0f64).log2()).abs() < 1e-5);
    }
}
