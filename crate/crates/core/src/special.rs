//! Gamma-family special functions and Gauss quadrature rules.

use std::sync::OnceLock;

use crate::error::{IrsError, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln |Gamma(x)|` via the Lanczos approximation (g = 7, 9 terms), with the
/// reflection formula below 1/2.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        let s = (std::f64::consts::PI * x).sin();
        return (std::f64::consts::PI / s.abs()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const MAX_ITER: usize = 100_000;
const TINY: f64 = 1e-300;

/// Regularized lower incomplete gamma function `P(k, x) = gamma(k, x) / Gamma(k)`.
///
/// Series expansion for `x < k + 1`, Lentz continued fraction for the upper
/// tail otherwise.
pub fn regularized_lower_gamma(k: f64, x: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(IrsError::Domain {
            function: "regularized_lower_gamma",
            detail: format!("shape must be positive and finite, got {k}"),
        });
    }
    if !(x >= 0.0) {
        return Err(IrsError::Domain {
            function: "regularized_lower_gamma",
            detail: format!("argument must be nonnegative, got {x}"),
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let log_prefactor = k * x.ln() - x - ln_gamma(k);
    if x < k + 1.0 {
        let mut ap = k;
        let mut term = 1.0 / k;
        let mut sum = term;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                return Ok((sum.ln() + log_prefactor).exp().min(1.0));
            }
        }
        Err(IrsError::NoConvergence {
            function: "regularized_lower_gamma (series)",
            iterations: MAX_ITER,
        })
    } else {
        let mut b = x + 1.0 - k;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=MAX_ITER {
            let an = -(i as f64) * (i as f64 - k);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                let upper = (h.ln() + log_prefactor).exp();
                return Ok((1.0 - upper).max(0.0));
            }
        }
        Err(IrsError::NoConvergence {
            function: "regularized_lower_gamma (continued fraction)",
            iterations: MAX_ITER,
        })
    }
}

/// Nodes and weights of an `n`-point quadrature rule.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gauss-Legendre rule on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> QuadratureRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    QuadratureRule { nodes, weights }
}

/// Gauss-Laguerre rule for `int_0^inf e^-x f(x) dx` via the Golub-Welsch
/// eigenproblem of the Jacobi matrix (diagonal `2i + 1`, off-diagonal `i`).
pub fn gauss_laguerre(n: usize) -> QuadratureRule {
    let mut diag: Vec<f64> = (0..n).map(|i| (2 * i + 1) as f64).collect();
    // off[i] couples rows i and i + 1; off[n - 1] is scratch.
    let mut off: Vec<f64> = (0..n).map(|i| (i + 1) as f64).collect();
    if n > 0 {
        off[n - 1] = 0.0;
    }
    // First components of the eigenvectors, starting from the identity.
    let mut first = vec![0.0; n];
    if n > 0 {
        first[0] = 1.0;
    }
    tridiagonal_ql(&mut diag, &mut off, &mut first);
    let mut pairs: Vec<(f64, f64)> = diag.into_iter().zip(first.into_iter().map(|v| v * v)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nodes, weights) = pairs.into_iter().unzip();
    QuadratureRule { nodes, weights }
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix,
/// tracking only the first row of the eigenvector matrix.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

static LEGENDRE_24: OnceLock<QuadratureRule> = OnceLock::new();
static LAGUERRE: [OnceLock<QuadratureRule>; 5] = [const { OnceLock::new() }; 5];

pub(crate) fn legendre_24() -> &'static QuadratureRule {
    LEGENDRE_24.get_or_init(|| gauss_legendre(24))
}

/// Cached Gauss-Laguerre rules with 64, 128, ..., 1024 nodes.
pub(crate) fn laguerre_cached(level: usize) -> &'static QuadratureRule {
    LAGUERRE[level].get_or_init(|| gauss_laguerre(64 << level))
}

pub(crate) const LAGUERRE_LEVELS: usize = 5;
