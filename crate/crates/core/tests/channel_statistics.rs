use irs_core::channel::{link_stats, ChannelSampler, LinkGeometry, Links, SystemConfig};
use irs_core::moments::mean_snr;
use irs_core::montecarlo::{compensated_sum, ks_distance};
use irs_core::phases::PhaseVector;
use num_complex::Complex64;

fn sampler(k: [f64; 3], d: [f64; 3], m: usize, n: usize) -> ChannelSampler {
    let g = |i: usize| LinkGeometry::new(d[i], 2.0, k[i]).unwrap();
    let links = Links::from_geometry(&g(0), &g(1), &g(2)).unwrap();
    let config = SystemConfig::new(m, n, 1, 1.0, 1.0, links).unwrap();
    ChannelSampler::new(&config, 2024).unwrap()
}

/// CDF of `|h|^2` for `h ~ CN(mu, sigma^2)` as a Poisson mixture of
/// integer-shape gamma laws.
fn rician_power_cdf(x: f64, mu: f64, variance: f64) -> f64 {
    let half_lambda = mu * mu / variance;
    let y = x / variance;
    let mut total = 0.0;
    let mut weight = (-half_lambda).exp();
    // P(j + 1, y) = 1 - e^-y sum_{i <= j} y^i / i!
    let mut partial = 0.0;
    let mut term = (-y).exp();
    for j in 0..400 {
        partial += term;
        total += weight * (1.0 - partial).max(0.0);
        weight *= half_lambda / (j + 1) as f64;
        term *= y / (j + 1) as f64;
        if weight < 1e-18 && j as f64 > half_lambda {
            break;
        }
    }
    total
}

#[test]
fn geometry_maps_to_link_statistics() {
    let g = LinkGeometry::new(10.0, 4.0, 10.0).unwrap();
    let s = link_stats(&g).unwrap();
    assert!((s.variance - 1e-4 / 11.0).abs() < 1e-18);
    assert!((s.mean - 0.01 * (10.0f64 / 11.0).sqrt()).abs() < 1e-17);
    assert!((s.power() - 1e-4).abs() < 1e-18);
    let rayleigh = link_stats(&LinkGeometry::new(2.0, 3.0, 0.0).unwrap()).unwrap();
    assert_eq!(rayleigh.mean, 0.0);
    assert!((rayleigh.variance - 0.125).abs() < 1e-16);
    assert!(LinkGeometry::new(0.0, 2.0, 1.0).is_err());
    assert!(LinkGeometry::new(1.0, 2.0, -1.0).is_err());
    assert!(LinkGeometry::between([0.0, 0.0], [0.0, 0.0], 2.0, 1.0).is_err());
    let between = LinkGeometry::between([0.0, 10.0], [90.0, 0.0], 4.0, 20.0).unwrap();
    assert!((between.distance - 8200f64.sqrt()).abs() < 1e-12);
}

#[test]
fn entry_moments_over_many_draws() {
    let s = sampler([5.0, 0.0, 20.0], [1.0, 0.8, 1.3], 1, 1);
    let stats = s.config().links;
    let draws = 1_000_000u64;
    let samples: Vec<[Complex64; 3]> = (0..draws)
        .map(|i| {
            let r = s.realization(i);
            [r.h_sd[0], r.h_sr[0], r.h_rd[0]]
        })
        .collect();
    for (link, st) in [stats.sd, stats.sr, stats.rd].iter().enumerate() {
        let re = compensated_sum(samples.iter().map(|x| x[link].re)) / draws as f64;
        let im = compensated_sum(samples.iter().map(|x| x[link].im)) / draws as f64;
        let var = compensated_sum(samples.iter().map(|x| (x[link] - Complex64::new(re, im)).norm_sqr()))
            / (draws - 1) as f64;
        let se = (st.variance / draws as f64).sqrt();
        assert!((re - st.mean).abs() < 5.0 * se, "link {link}: mean {re} vs {}", st.mean);
        assert!(im.abs() < 5.0 * se, "link {link}: imaginary mean {im}");
        assert!((var / st.variance - 1.0).abs() < 0.005, "link {link}: variance {var} vs {}", st.variance);
    }
}

#[test]
fn entry_power_follows_noncentral_chi_square() {
    let s = sampler([5.0, 0.0, 20.0], [1.0, 0.8, 1.3], 2, 3);
    let stats = s.config().links;
    let n = 100_000u64;
    let mut powers = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..n {
        let r = s.realization(i);
        powers[0].push(r.h_sd[1].norm_sqr());
        powers[1].push(r.h_sr[4].norm_sqr());
        powers[2].push(r.h_rd[2].norm_sqr());
    }
    // 99.9% Kolmogorov critical value.
    let critical = 1.95 / (n as f64).sqrt();
    for (p, st) in powers.iter_mut().zip([stats.sd, stats.sr, stats.rd]) {
        p.sort_by(f64::total_cmp);
        let d = ks_distance(p, |x| rician_power_cdf(x, st.mean, st.variance));
        assert!(d < critical, "KS {d} above {critical}");
    }
}

#[test]
fn entries_within_a_realization_are_uncorrelated() {
    let s = sampler([0.0, 0.0, 0.0], [1.0, 1.0, 1.0], 2, 2);
    let n = 200_000u64;
    let mut cross = Complex64::new(0.0, 0.0);
    let mut cross_links = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let r = s.realization(i);
        cross += r.h_sr[0] * r.h_sr[1].conj();
        cross_links += r.h_sd[0] * r.h_rd[0].conj();
    }
    let bound = 5.0 / (n as f64).sqrt();
    assert!((cross / n as f64).norm() < bound);
    assert!((cross_links / n as f64).norm() < bound);
}

#[test]
fn different_indices_and_seeds_differ() {
    let s = sampler([1.0; 3], [1.0; 3], 2, 2);
    assert_ne!(s.realization(0), s.realization(1));
    assert_eq!(s.realization(7), s.realization(7));
    let other = ChannelSampler::new(s.config(), 2025).unwrap();
    assert_ne!(s.realization(0), other.realization(0));
}

#[test]
fn realization_dimensions() {
    let s = sampler([1.0; 3], [1.0; 3], 3, 5);
    let r = s.realization(0);
    assert_eq!((r.h_sd.len(), r.h_sr.len(), r.h_rd.len()), (3, 15, 5));
    assert_eq!(r.sr(2, 4), r.h_sr[14]);
    assert!(mean_snr(s.config(), &PhaseVector::zeros(5)).unwrap() > 0.0);
}
