//! Constellations, input distributions, bit labelings and the two channel
//! laws of an intensity-modulated direct-detection link.
//!
//! All amplitudes are dimensionless intensities. Every constellation used for
//! comparison shares the same peak point (3), which is what makes the peak
//! power constraint implicit in the alphabet.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Error, Result};

/// Largest point of every constellation compared at equal peak power.
pub const PEAK: f64 = 3.0;

/// Tolerance on pmf normalization and on symmetry checks.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// Ordered, non-negative amplitude levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PamAlphabet {
    points: Vec<f64>,
}

impl PamAlphabet {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(domain("alphabet must contain at least one point"));
        }
        if points[0] != 0.0 {
            return Err(domain(format!(
                "minimum point must be 0, got {}",
                points[0]
            )));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) || points.iter().any(|p| !p.is_finite()) {
            return Err(domain(
                "alphabet points must be finite and strictly increasing",
            ));
        }
        Ok(Self { points })
    }

    /// Unipolar 4-PAM, `{0, 1, 2, 3}`.
    pub fn pam4() -> Self {
        Self {
            points: alloc::vec![0.0, 1.0, 2.0, 3.0],
        }
    }

    /// On-off keying at the same peak, `{0, 3}`.
    pub fn ook() -> Self {
        Self {
            points: alloc::vec![0.0, PEAK],
        }
    }

    /// Equally spaced 3-PAM at the same peak, `{0, 1.5, 3}`.
    pub fn pam3() -> Self {
        Self {
            points: alloc::vec![0.0, PEAK / 2.0, PEAK],
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn cardinality(&self) -> usize {
        self.points.len()
    }

    pub fn peak(&self) -> f64 {
        *self.points.last().expect("alphabet is never empty")
    }

    /// Every point multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(domain("scale factor must be positive"));
        }
        Ok(Self {
            points: self.points.iter().map(|p| p * factor).collect(),
        })
    }

    /// Maps symbol indices to amplitudes.
    pub fn amplitudes(&self, indices: &[u8]) -> Result<Vec<f64>> {
        indices
            .iter()
            .map(|&i| {
                self.points
                    .get(i as usize)
                    .copied()
                    .ok_or_else(|| domain(format!("symbol index {i} outside alphabet")))
            })
            .collect()
    }
}

/// Probability mass function aligned with the points of a [`PamAlphabet`].
#[derive(Debug, Clone, PartialEq)]
pub struct InputDistribution {
    pmf: Vec<f64>,
}

impl InputDistribution {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidDistribution("empty pmf".into()));
        }
        if pmf.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "negative or non-finite entry in {pmf:?}"
            )));
        }
        let total: f64 = pmf.iter().sum();
        if libm::fabs(total - 1.0) > PMF_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "entries sum to {total}"
            )));
        }
        Ok(Self { pmf })
    }

    pub fn uniform(cardinality: usize) -> Self {
        Self {
            pmf: alloc::vec![1.0 / cardinality as f64; cardinality],
        }
    }

    /// `(p0, 1/2 - p0, 1/2 - p0, p0)` on 4-PAM.
    pub fn symmetric_pam4(p0: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&p0) {
            return Err(Error::InvalidDistribution(format!(
                "p0 = {p0} outside [0, 0.5]"
            )));
        }
        let inner = 0.5 - p0;
        Ok(Self {
            pmf: alloc::vec![p0, inner, inner, p0],
        })
    }

    /// Geometric pmf `p_i ∝ exp(-λ x_i)` on the given alphabet.
    pub fn exponential(alphabet: &PamAlphabet, lambda: f64) -> Result<Self> {
        if !lambda.is_finite() {
            return Err(domain("lambda must be finite"));
        }
        let w: Vec<f64> = alphabet
            .points()
            .iter()
            .map(|x| libm::exp(-lambda * x))
            .collect();
        let z: f64 = w.iter().sum();
        Self::new(w.into_iter().map(|v| v / z).collect())
    }

    /// Exponential pmf whose mean amplitude equals `mean`; λ is found by bisection.
    pub fn exponential_with_mean(alphabet: &PamAlphabet, mean: f64) -> Result<Self> {
        let lambda = exponential_lambda_for_mean(alphabet, mean)?;
        Self::exponential(alphabet, lambda)
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn len(&self) -> usize {
        self.pmf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pmf.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.pmf.len();
        (0..n / 2).all(|i| libm::fabs(self.pmf[i] - self.pmf[n - 1 - i]) <= PMF_TOLERANCE)
    }

    pub fn entropy(&self) -> f64 {
        entropy(self)
    }

    pub fn mean(&self, alphabet: &PamAlphabet) -> f64 {
        self.pmf
            .iter()
            .zip(alphabet.points())
            .map(|(p, x)| p * x)
            .sum()
    }

    pub(crate) fn check_alphabet(&self, alphabet: &PamAlphabet) -> Result<()> {
        if self.len() != alphabet.cardinality() {
            return Err(Error::LengthMismatch {
                expected: alphabet.cardinality(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// λ such that the exponential pmf on `alphabet` has the requested mean.
pub fn exponential_lambda_for_mean(alphabet: &PamAlphabet, mean: f64) -> Result<f64> {
    let peak = alphabet.peak();
    if !(mean > 0.0 && mean < peak) {
        return Err(domain(format!(
            "mean {mean} must lie strictly inside (0, {peak})"
        )));
    }
    // The mean is strictly decreasing in λ.
    let mean_of = |lambda: f64| -> f64 {
        let w: Vec<f64> = alphabet
            .points()
            .iter()
            .map(|x| libm::exp(-lambda * x))
            .collect();
        let z: f64 = w.iter().sum();
        w.iter()
            .zip(alphabet.points())
            .map(|(w, x)| w * x)
            .sum::<f64>()
            / z
    };
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_of(mid) > mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn entropy(d: &InputDistribution) -> f64 {
    -d.pmf
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * libm::log2(p))
        .sum::<f64>()
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * libm::log2(p) - (1.0 - p) * libm::log2(1.0 - p)
}

/// Bijection from symbol index to an `m`-bit label. Bit 0 is the most
/// significant label bit (`b1`), bit `m-1` the least significant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitLabeling {
    labels: Vec<u32>,
    bits: usize,
}

impl BitLabeling {
    pub fn new(labels: Vec<u32>) -> Result<Self> {
        let n = labels.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(domain(format!(
                "labeling needs a power-of-two alphabet, got {n} points"
            )));
        }
        let bits = n.trailing_zeros() as usize;
        let mut seen = alloc::vec![false; n];
        for &l in &labels {
            if l as usize >= n || seen[l as usize] {
                return Err(domain(format!(
                    "labels {labels:?} are not a bijection onto {bits}-bit strings"
                )));
            }
            seen[l as usize] = true;
        }
        Ok(Self { labels, bits })
    }

    /// Binary reflected Gray code; for 4 points `00, 01, 11, 10`.
    pub fn gray(cardinality: usize) -> Result<Self> {
        Self::new((0..cardinality as u32).map(|i| i ^ (i >> 1)).collect())
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits
    }

    pub fn cardinality(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, index: usize) -> u32 {
        self.labels[index]
    }

    /// Bit `k` (0 = `b1`) of the label of `index`.
    pub fn bit(&self, index: usize, k: usize) -> u8 {
        ((self.labels[index] >> (self.bits - 1 - k)) & 1) as u8
    }

    pub fn unlabel(&self, label: u32) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// True when labels of neighbouring points differ in exactly one bit.
    pub fn is_gray(&self) -> bool {
        self.labels
            .windows(2)
            .all(|w| (w[0] ^ w[1]).count_ones() == 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// `Y = |sqrt(X) + N_opt|^2 + N_el`.
    FullImdd,
    /// `Y = X + N_el`.
    LinearAwgn,
}

/// Additive noise model of the link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    kind: ChannelKind,
    sigma_opt: f64,
    sigma_el: f64,
}

impl ChannelModel {
    pub fn linear_awgn(sigma_el: f64) -> Result<Self> {
        if !(sigma_el > 0.0) || !sigma_el.is_finite() {
            return Err(domain(format!("sigma_el must be positive, got {sigma_el}")));
        }
        Ok(Self {
            kind: ChannelKind::LinearAwgn,
            sigma_opt: 0.0,
            sigma_el,
        })
    }

    /// `sigma_opt` is the per-component standard deviation of the circular
    /// optical noise, `sigma_el` that of the electrical noise.
    pub fn full_imdd(sigma_opt: f64, sigma_el: f64) -> Result<Self> {
        if !(sigma_opt >= 0.0 && sigma_el >= 0.0) || !sigma_opt.is_finite() || !sigma_el.is_finite()
        {
            return Err(domain("noise deviations must be finite and non-negative"));
        }
        Ok(Self {
            kind: ChannelKind::FullImdd,
            sigma_opt,
            sigma_el,
        })
    }

    /// Linear AWGN channel at the given PSNR.
    pub fn at_psnr_db(psnr: f64) -> Result<Self> {
        Self::linear_awgn(sigma_from_psnr_db(psnr))
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    pub fn sigma_opt(&self) -> f64 {
        self.sigma_opt
    }

    pub fn sigma_el(&self) -> f64 {
        self.sigma_el
    }

    pub fn psnr_db(&self) -> Result<f64> {
        psnr_db(self.sigma_el)
    }

    /// Passes amplitudes through the channel.
    ///
    /// Per symbol three standard normals are drawn in the order optical real,
    /// optical imaginary, electrical, for both channel kinds. The linear model
    /// discards the optical pair, so the full model with `sigma_opt = 0`
    /// reproduces it sample for sample.
    pub fn transmit(&self, symbols: &[f64], seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        symbols
            .iter()
            .map(|&x| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                let el: f64 = StandardNormal.sample(&mut rng);
                match self.kind {
                    ChannelKind::LinearAwgn => x + self.sigma_el * el,
                    ChannelKind::FullImdd => {
                        // |sqrt(x) + n|^2 expanded so that n = 0 returns x exactly.
                        let a = libm::sqrt(libm::fabs(x));
                        let (nr, ni) = (self.sigma_opt * re, self.sigma_opt * im);
                        let optical = 2.0 * a * nr + nr * nr + ni * ni;
                        libm::fabs(x) + optical + self.sigma_el * el
                    }
                }
            })
            .collect()
    }
}

/// Peak signal-to-noise ratio `10 log10(3^2 / sigma^2)` in dB.
pub fn psnr_db(sigma_el: f64) -> Result<f64> {
    if !(sigma_el > 0.0) {
        return Err(domain(format!("sigma_el must be positive, got {sigma_el}")));
    }
    Ok(10.0 * libm::log10(PEAK * PEAK / (sigma_el * sigma_el)))
}

/// Inverse of [`psnr_db`].
pub fn sigma_from_psnr_db(psnr: f64) -> f64 {
    PEAK / libm::pow(10.0, psnr / 20.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_examples() {
        assert!(libm::fabs(psnr_db(3.0).unwrap()).abs() < 1e-12);
        assert!((psnr_db(1.0).unwrap() - 10.0 * libm::log10(9.0)).abs() < 1e-12);
        assert!((psnr_db(0.3).unwrap() - 20.0).abs() < 1e-12);
        assert!(psnr_db(0.0).is_err());
        assert!(psnr_db(-1.0).is_err());
        assert!((sigma_from_psnr_db(20.0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn alphabets() {
        assert_eq!(PamAlphabet::pam4().points(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(PamAlphabet::ook().points(), &[0.0, 3.0]);
        assert_eq!(PamAlphabet::pam3().points(), &[0.0, 1.5, 3.0]);
        assert!(PamAlphabet::new(alloc::vec![0.0, 2.0, 1.0]).is_err());
        assert!(PamAlphabet::new(alloc::vec![0.5, 1.0]).is_err());
        assert!(PamAlphabet::new(alloc::vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn distribution_validation() {
        assert!(InputDistribution::new(alloc::vec![0.5, 0.6]).is_err());
        assert!(InputDistribution::new(alloc::vec![1.2, -0.2]).is_err());
        assert!(InputDistribution::new(alloc::vec![0.25; 4]).is_ok());
        assert!(InputDistribution::symmetric_pam4(0.6).is_err());
        let d = InputDistribution::symmetric_pam4(0.35).unwrap();
        assert!(d.is_symmetric());
        assert!(!InputDistribution::new(alloc::vec![0.4, 0.1, 0.2, 0.3])
            .unwrap()
            .is_symmetric());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(InputDistribution::uniform(4).entropy(), 2.0);
        let ook = InputDistribution::new(alloc::vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((ook.entropy() - 1.0).abs() < 1e-15);
        let fixed = InputDistribution::symmetric_pam4(0.35).unwrap();
        // -2(0.35 log2 0.35 + 0.15 log2 0.15)
        assert!((fixed.entropy() - 1.8813).abs() < 1e-4);
    }

    #[test]
    fn gray_labeling() {
        let g = BitLabeling::gray(4).unwrap();
        assert_eq!(
            (0..4).map(|i| g.label(i)).collect::<Vec<_>>(),
            [0b00, 0b01, 0b11, 0b10]
        );
        assert!(g.is_gray());
        assert_eq!((g.bit(2, 0), g.bit(2, 1)), (1, 1));
        assert_eq!((g.bit(3, 0), g.bit(3, 1)), (1, 0));
        for i in 0..4 {
            assert_eq!(g.unlabel(g.label(i)), Some(i));
        }
        assert!(BitLabeling::new(alloc::vec![0, 1, 1, 2]).is_err());
        assert!(BitLabeling::gray(3).is_err());
    }

    #[test]
    fn exponential_mean() {
        let a = PamAlphabet::pam4();
        let d = InputDistribution::exponential_with_mean(&a, 1.0).unwrap();
        assert!((d.mean(&a) - 1.0).abs() < 1e-12);
        assert!(d.pmf().windows(2).all(|w| w[0] > w[1]));
        assert!(InputDistribution::exponential_with_mean(&a, 3.0).is_err());
    }

    #[test]
    fn noiseless_full_model_is_identity() {
        let ch = ChannelModel::full_imdd(0.0, 0.0).unwrap();
        assert_eq!(ch.transmit(&[0.0, 1.0, 2.0, 3.0], 7), [0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn full_model_reduces_to_linear() {
        let x: Vec<f64> = (0..1000).map(|i| (i % 4) as f64).collect();
        let lin = ChannelModel::linear_awgn(0.4).unwrap().transmit(&x, 11);
        let full = ChannelModel::full_imdd(0.0, 0.4).unwrap().transmit(&x, 11);
        assert_eq!(lin, full);
    }

    #[test]
    fn transmit_is_deterministic() {
        let ch = ChannelModel::full_imdd(0.05, 0.3).unwrap();
        let x = [3.0, 0.0, 1.0, 2.0, 2.0];
        assert_eq!(ch.transmit(&x, 5), ch.transmit(&x, 5));
        assert_ne!(ch.transmit(&x, 5), ch.transmit(&x, 6));
    }
}
