//! Rician link statistics and channel sampling.
//!
//! Every entry of `h_sd` (M), `H_sr` (M x N) and `h_rd` (N) is an independent
//! circularly-symmetric complex Gaussian `CN(mu, sigma^2)`: the mean sits on the
//! real axis and the variance is split equally between the real and imaginary
//! parts, so `E|h|^2 = mu^2 + sigma^2 = d^-beta`.
//!
//! Sampling uses one ChaCha8 stream per `(sample index, link)` pair, derived
//! from a single seed. A realization therefore depends only on
//! `(config, seed, index)`, and any partition of the index range across
//! threads reproduces the serial output bit for bit.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{IrsError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// Link distance in meters.
    pub distance: f64,
    pub pathloss_exponent: f64,
    /// Ratio of line-of-sight to scattered power (0 is Rayleigh).
    pub rice_factor: f64,
}

impl LinkGeometry {
    pub fn new(distance: f64, pathloss_exponent: f64, rice_factor: f64) -> Result<Self> {
        let geometry = Self {
            distance,
            pathloss_exponent,
            rice_factor,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Geometry of the link between two points in the plane.
    pub fn between(a: [f64; 2], b: [f64; 2], pathloss_exponent: f64, rice_factor: f64) -> Result<Self> {
        let distance = (a[0] - b[0]).hypot(a[1] - b[1]);
        Self::new(distance, pathloss_exponent, rice_factor)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return Err(IrsError::InvalidGeometry(format!(
                "distance must be positive, got {}",
                self.distance
            )));
        }
        if !(self.pathloss_exponent.is_finite() && self.pathloss_exponent > 0.0) {
            return Err(IrsError::InvalidGeometry(format!(
                "path-loss exponent must be positive, got {}",
                self.pathloss_exponent
            )));
        }
        if !(self.rice_factor.is_finite() && self.rice_factor >= 0.0) {
            return Err(IrsError::InvalidGeometry(format!(
                "Rice factor must be nonnegative, got {}",
                self.rice_factor
            )));
        }
        Ok(())
    }

    /// Large-scale power gain `d^-beta`.
    pub fn power_gain(&self) -> f64 {
        self.distance.powf(-self.pathloss_exponent)
    }
}

/// First and second order statistics of one Rician link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStats {
    /// Line-of-sight amplitude (real).
    pub mean: f64,
    /// Scattered power `sigma^2`.
    pub variance: f64,
    pub rice_factor: f64,
}

impl LinkStats {
    /// Total power `mu^2 + sigma^2 = d^-beta`.
    pub fn power(&self) -> f64 {
        self.mean * self.mean + self.variance
    }

    /// `1 / (K + 1)`, the scattered fraction of the link power.
    pub fn scattered_fraction(&self) -> f64 {
        1.0 / (self.rice_factor + 1.0)
    }

    /// `(2K + 1) / (K + 1)^2`, the normalized variance of `|h|^2`.
    pub fn power_dispersion(&self) -> f64 {
        let k = self.rice_factor;
        (2.0 * k + 1.0) / ((k + 1.0) * (k + 1.0))
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        let scale = (0.5 * self.variance).sqrt();
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(self.mean + scale * re, scale * im)
    }
}

pub fn link_stats(geometry: &LinkGeometry) -> Result<LinkStats> {
    geometry.validate()?;
    let power = geometry.power_gain();
    let k = geometry.rice_factor;
    Ok(LinkStats {
        mean: (power * k / (k + 1.0)).sqrt(),
        variance: power / (k + 1.0),
        rice_factor: k,
    })
}

/// The three links of the uplink: BS-user (direct), BS-IRS and IRS-user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Links {
    pub sd: LinkStats,
    pub sr: LinkStats,
    pub rd: LinkStats,
}

impl Links {
    pub fn from_geometry(sd: &LinkGeometry, sr: &LinkGeometry, rd: &LinkGeometry) -> Result<Self> {
        Ok(Self {
            sd: link_stats(sd)?,
            sr: link_stats(sr)?,
            rd: link_stats(rd)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    /// Base-station antennas `M`.
    pub antennas: usize,
    /// IRS elements `N`.
    pub elements: usize,
    /// Phase quantization bits `b`.
    pub bits: u32,
    /// IRS reflection amplitude `alpha` in (0, 1].
    pub amplitude: f64,
    /// Transmit SNR `p / sigma^2`, linear scale.
    pub snr_tx: f64,
    pub links: Links,
}

impl SystemConfig {
    pub fn new(
        antennas: usize,
        elements: usize,
        bits: u32,
        amplitude: f64,
        snr_tx: f64,
        links: Links,
    ) -> Result<Self> {
        let config = Self {
            antennas,
            elements,
            bits,
            amplitude,
            snr_tx,
            links,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 || self.elements == 0 || self.bits == 0 {
            return Err(IrsError::InvalidConfig(format!(
                "antennas, elements and bits must be >= 1 (got M={}, N={}, b={})",
                self.antennas, self.elements, self.bits
            )));
        }
        if self.bits > 16 {
            return Err(IrsError::InvalidConfig(format!(
                "at most 16 quantization bits are supported, got {}",
                self.bits
            )));
        }
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(IrsError::InvalidConfig(format!(
                "amplitude must lie in (0, 1], got {}",
                self.amplitude
            )));
        }
        if !(self.snr_tx.is_finite() && self.snr_tx > 0.0) {
            return Err(IrsError::InvalidConfig(format!(
                "transmit SNR must be positive, got {}",
                self.snr_tx
            )));
        }
        for (name, link) in [("sd", &self.links.sd), ("sr", &self.links.sr), ("rd", &self.links.rd)] {
            if !(link.variance.is_finite() && link.variance > 0.0 && link.mean.is_finite() && link.mean >= 0.0)
            {
                return Err(IrsError::InvalidConfig(format!(
                    "link {name} has invalid statistics (mean {}, variance {})",
                    link.mean, link.variance
                )));
            }
        }
        Ok(())
    }

    pub fn with_elements(mut self, elements: usize) -> Self {
        self.elements = elements;
        self
    }

    pub fn with_antennas(mut self, antennas: usize) -> Self {
        self.antennas = antennas;
        self
    }

    pub fn with_snr_tx(mut self, snr_tx: f64) -> Self {
        self.snr_tx = snr_tx;
        self
    }

    pub fn with_bits(mut self, bits: u32) -> Self {
        self.bits = bits;
        self
    }
}

/// One draw of the small-scale fading.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub antennas: usize,
    pub elements: usize,
    /// Direct link, length `M`.
    pub h_sd: Vec<Complex64>,
    /// BS-IRS matrix, row-major `M x N` (`h_sr[j * N + i]`).
    pub h_sr: Vec<Complex64>,
    /// IRS-user link, length `N`.
    pub h_rd: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn zeros(antennas: usize, elements: usize) -> Self {
        Self {
            antennas,
            elements,
            h_sd: vec![Complex64::new(0.0, 0.0); antennas],
            h_sr: vec![Complex64::new(0.0, 0.0); antennas * elements],
            h_rd: vec![Complex64::new(0.0, 0.0); elements],
        }
    }

    pub fn sr(&self, antenna: usize, element: usize) -> Complex64 {
        self.h_sr[antenna * self.elements + element]
    }
}

const LINK_SD: u64 = 0;
const LINK_SR: u64 = 1;
const LINK_RD: u64 = 2;

/// Deterministic channel generator keyed by a seed.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    config: SystemConfig,
    base: ChaCha8Rng,
}

impl ChannelSampler {
    pub fn new(config: &SystemConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: *config,
            base: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    fn stream(&self, index: u64, link: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        // Two low bits select the link; the rest is the sample index.
        rng.set_stream((index << 2) | link);
        rng
    }

    /// Overwrites `out` with realization number `index`.
    pub fn fill(&self, index: u64, out: &mut ChannelRealization) {
        let (m, n) = (self.config.antennas, self.config.elements);
        if out.antennas != m || out.elements != n {
            *out = ChannelRealization::zeros(m, n);
        }
        let links = &self.config.links;
        let mut rng = self.stream(index, LINK_SD);
        for h in &mut out.h_sd {
            *h = links.sd.sample(&mut rng);
        }
        let mut rng = self.stream(index, LINK_SR);
        for h in &mut out.h_sr {
            *h = links.sr.sample(&mut rng);
        }
        let mut rng = self.stream(index, LINK_RD);
        for h in &mut out.h_rd {
            *h = links.rd.sample(&mut rng);
        }
    }

    pub fn realization(&self, index: u64) -> ChannelRealization {
        let mut out = ChannelRealization::zeros(self.config.antennas, self.config.elements);
        self.fill(index, &mut out);
        out
    }
}

/// The first realization of the stream keyed by `seed`.
pub fn sample_realization(config: &SystemConfig, seed: u64) -> Result<ChannelRealization> {
    Ok(ChannelSampler::new(config, seed)?.realization(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    pub(crate) fn unit_links(k: f64) -> Links {
        let g = LinkGeometry::new(1.0, 2.0, k).unwrap();
        Links::from_geometry(&g, &g, &g).unwrap()
    }

    #[test]
    fn rayleigh_unit_link() {
        let s = link_stats(&LinkGeometry::new(1.0, 4.0, 0.0).unwrap()).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.variance, 1.0);
    }

    #[test]
    fn rician_unit_link() {
        let s = link_stats(&LinkGeometry::new(1.0, 4.0, 3.0).unwrap()).unwrap();
        assert!(close(s.mean, 0.75f64.sqrt(), 1e-15));
        assert!(close(s.variance, 0.25, 1e-15));
    }

    #[test]
    fn irs_to_user_link_of_reference_layout() {
        let g = LinkGeometry::between([0.0, 10.0], [90.0, 0.0], 4.0, 20.0).unwrap();
        assert!(close(g.distance, 8200f64.sqrt(), 1e-15));
        let s = link_stats(&g).unwrap();
        let d = 8200f64.sqrt();
        assert!((s.variance - d.powi(-4) / 21.0).abs() <= 1e-15 * s.variance);
        assert!((s.mean - d.powi(-2) * (20.0f64 / 21.0).sqrt()).abs() <= 1e-15 * s.mean);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        assert!(matches!(LinkGeometry::new(0.0, 4.0, 1.0), Err(IrsError::InvalidGeometry(_))));
        assert!(matches!(LinkGeometry::new(-3.0, 4.0, 1.0), Err(IrsError::InvalidGeometry(_))));
        assert!(matches!(LinkGeometry::new(3.0, 0.0, 1.0), Err(IrsError::InvalidGeometry(_))));
        assert!(matches!(LinkGeometry::new(3.0, 2.0, -1.0), Err(IrsError::InvalidGeometry(_))));
    }

    #[test]
    fn power_identity_holds() {
        for &(d, beta, k) in &[(1.0, 2.0, 0.0), (10.0, 4.0, 10.0), (90.554, 4.0, 20.0), (3.3, 2.7, 0.01)] {
            let g = LinkGeometry::new(d, beta, k).unwrap();
            let s = link_stats(&g).unwrap();
            let rel = (s.power() - g.power_gain()).abs() / g.power_gain();
            assert!(rel < 1e-12, "d={d} beta={beta} K={k}: rel err {rel}");
        }
    }

    #[test]
    fn config_validation() {
        let links = unit_links(1.0);
        assert!(SystemConfig::new(0, 4, 1, 1.0, 1.0, links).is_err());
        assert!(SystemConfig::new(1, 0, 1, 1.0, 1.0, links).is_err());
        assert!(SystemConfig::new(1, 4, 0, 1.0, 1.0, links).is_err());
        assert!(SystemConfig::new(1, 4, 1, 0.0, 1.0, links).is_err());
        assert!(SystemConfig::new(1, 4, 1, 1.5, 1.0, links).is_err());
        assert!(SystemConfig::new(1, 4, 1, 1.0, -1.0, links).is_err());
        assert!(SystemConfig::new(2, 4, 3, 0.5, 10.0, links).is_ok());
    }

    #[test]
    fn sampling_is_deterministic_and_shaped() {
        let config = SystemConfig::new(3, 5, 2, 1.0, 1.0, unit_links(2.0)).unwrap();
        let a = sample_realization(&config, 42).unwrap();
        let b = sample_realization(&config, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.h_sd.len(), 3);
        assert_eq!(a.h_sr.len(), 15);
        assert_eq!(a.h_rd.len(), 5);
        let c = sample_realization(&config, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn realization_depends_only_on_index() {
        let config = SystemConfig::new(2, 3, 1, 1.0, 1.0, unit_links(1.0)).unwrap();
        let sampler = ChannelSampler::new(&config, 7).unwrap();
        let direct = sampler.realization(12_345);
        let mut buf = ChannelRealization::zeros(2, 3);
        for i in 0..20 {
            sampler.fill(i, &mut buf);
        }
        sampler.fill(12_345, &mut buf);
        assert_eq!(direct, buf);
        assert_ne!(sampler.realization(0).h_sd, sampler.realization(1).h_sd);
    }
}
