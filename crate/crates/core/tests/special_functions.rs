use std::f64::consts::{E, LN_2, PI};

use irs_core::metrics::{ergodic_rate, outage_probability};
use irs_core::moments::GammaFit;
use irs_core::special::{gauss_laguerre, ln_gamma, regularized_lower_gamma};
use proptest::prelude::*;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `erf(z)` from the all-positive series `2/sqrt(pi) e^{-z^2} sum 2^n z^{2n+1} / (2n+1)!!`.
fn erf_series(z: f64) -> f64 {
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term > 1e-18 * sum {
        n += 1.0;
        term *= 2.0 * z * z / (2.0 * n + 1.0);
        sum += term;
    }
    2.0 / PI.sqrt() * (-z * z).exp() * sum
}

/// `E1(1) = -gamma - sum_{k>=1} (-1)^k / (k k!)`.
fn e1_at_one() -> f64 {
    let mut sum = 0.0;
    let mut factorial = 1.0;
    for k in 1..40 {
        factorial *= k as f64;
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        sum += sign / (k as f64 * factorial);
    }
    -EULER_GAMMA - sum
}

/// `ln Gamma` by upward recurrence to 30 and the Stirling series there.
fn ln_gamma_stirling(mut x: f64) -> f64 {
    let mut shift = 0.0;
    while x < 30.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    shift + (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)))
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Adaptive 7/15-point Gauss-Kronrod; `density` is the allowed error per
/// unit length, on top of a roundoff floor.
fn adaptive_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, density: f64, depth: u32) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let centre = f(mid);
    let mut kronrod = GK_WEIGHTS[7] * centre;
    let mut gauss = GAUSS_WEIGHTS[3] * centre;
    let mut magnitude = GK_WEIGHTS[7] * centre.abs();
    for i in 0..7 {
        let (l, r) = (f(mid - half * GK_NODES[i]), f(mid + half * GK_NODES[i]));
        magnitude += GK_WEIGHTS[i] * (l.abs() + r.abs());
        kronrod += GK_WEIGHTS[i] * (l + r);
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * (l + r);
        }
    }
    let (kronrod, gauss) = (kronrod * half, gauss * half);
    let roundoff = 100.0 * f64::EPSILON * magnitude * half;
    if (kronrod - gauss).abs() <= density * (b - a) + roundoff || depth == 0 {
        kronrod
    } else {
        adaptive_gk(f, a, mid, density, depth - 1) + adaptive_gk(f, mid, b, density, depth - 1)
    }
}

/// `E[log2(1 + X)]` for `X ~ Gamma(k, theta)`, integrated over `v` with
/// `X = k theta e^v`. The log-density is then
/// `k (ln k - 1) - ln Gamma(k) - k (e^v - 1 - v)`, which keeps the
/// `v`-dependent part free of cancellation for large `k`.
fn rate_oracle(k: f64, theta: f64) -> f64 {
    let constant = k * (k.ln() - 1.0) - ln_gamma_stirling(k);
    let f = |v: f64| {
        let x = k * theta * v.exp();
        (constant - k * (v.exp_m1() - v)).exp() * x.ln_1p() / LN_2
    };
    let lo = -60.0 / k.min(1.0) - k.ln();
    let hi = ((k + 60.0 + 20.0 * k.sqrt()) / k).ln();
    // Panels narrower than the peak width 1/sqrt(k) so none can miss it.
    let panels = ((hi - lo) * k.sqrt().max(1.0) * 4.0).ceil() as usize;
    let width = (hi - lo) / panels as f64;
    (0..panels)
        .map(|i| {
            let a = lo + i as f64 * width;
            adaptive_gk(&f, a, a + width, 1e-11 / (hi - lo), 20)
        })
        .sum()
}

#[test]
fn shape_one_is_exponential_cdf() {
    for i in 1..=50 {
        let x = 0.05 * i as f64 * i as f64 / 5.0;
        let p = regularized_lower_gamma(1.0, x).unwrap();
        assert!((p - (1.0 - (-x).exp())).abs() < 1e-10, "x={x}");
    }
}

#[test]
fn half_shape_is_error_function() {
    for i in 1..=50 {
        let x = 0.05 * i as f64 * i as f64 / 5.0;
        let p = regularized_lower_gamma(0.5, x).unwrap();
        let want = erf_series(x.sqrt());
        assert!((p - want).abs() < 1e-10, "x={x}: {p} vs {want}");
    }
}

#[test]
fn ln_gamma_agrees_with_stirling_recurrence() {
    for x in [0.1, 0.5, 1.5, 3.3, 7.0, 25.0, 140.0, 1e4] {
        let (a, b) = (ln_gamma(x), ln_gamma_stirling(x));
        assert!((a - b).abs() < 1e-12 * b.abs().max(1.0), "x={x}: {a} vs {b}");
    }
}

#[test]
fn unit_exponential_rate_is_exponential_integral() {
    let fit = GammaFit::new(1.0, 1.0).unwrap();
    let want = E * e1_at_one() / LN_2;
    let got = ergodic_rate(&fit).unwrap();
    assert!((want - 0.860_347_382_270_886).abs() < 1e-13);
    assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn rate_matches_adaptive_integration_over_grid() {
    for k in [0.5, 1.0, 2.5, 10.0, 50.0, 200.0, 1000.0] {
        for theta in [1e-4, 1e-2, 1.0, 100.0, 1e4] {
            let fit = GammaFit::new(k, theta).unwrap();
            let got = ergodic_rate(&fit).unwrap();
            let want = rate_oracle(k, theta);
            assert!((got - want).abs() < 1e-7, "k={k} theta={theta}: {got} vs {want}");
        }
    }
}

#[test]
fn laguerre_rule_integrates_exponential_moments() {
    let rule = gauss_laguerre(64);
    // int_0^inf e^-x e^{-x} dx = 1/2 and int x^5 e^-x = 120
    assert!((rule.integrate(|x| (-x).exp()) - 0.5).abs() < 1e-12);
    assert!((rule.integrate(|x| x.powi(5)) - 120.0).abs() < 1e-9);
    assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    assert!(rule.weights.iter().all(|&w| w >= 0.0));
}

#[test]
fn outage_of_exponential_fit() {
    let fit = GammaFit::new(1.0, 4.0).unwrap();
    for th in [0.1, 1.0, 4.0, 40.0] {
        let p = outage_probability(&fit, th).unwrap();
        assert!((p - (1.0 - (-th / 4.0f64).exp())).abs() < 1e-12);
    }
}

proptest! {
    #[test]
    fn lower_gamma_is_a_cdf(k in 0.05f64..500.0, x in 0.0f64..2000.0, dx in 0.0f64..50.0) {
        let p = regularized_lower_gamma(k, x).unwrap();
        let q = regularized_lower_gamma(k, x + dx).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(q >= p - 1e-14);
    }

    #[test]
    fn integer_shape_matches_poisson_tail(j in 1u32..40, x in 0.01f64..80.0) {
        // P(j, x) = 1 - e^-x sum_{i<j} x^i / i!
        let mut term = (-x).exp();
        let mut partial = 0.0;
        for i in 0..j {
            partial += term;
            term *= x / (i + 1) as f64;
        }
        let p = regularized_lower_gamma(j as f64, x).unwrap();
        prop_assert!((p - (1.0 - partial)).abs() < 1e-10);
    }

    #[test]
    fn rate_bounded_by_jensen(k in 0.2f64..300.0, log_theta in -6.0f64..6.0) {
        let fit = GammaFit::new(k, 10f64.powf(log_theta)).unwrap();
        let r = ergodic_rate(&fit).unwrap();
        prop_assert!(r > 0.0);
        prop_assert!(r <= (1.0 + fit.mean()).log2() * (1.0 + 1e-12));
    }
}
