//! Peak-power-constrained input shaping for 4-PAM.
//!
//! The rate-optimal pmf on `{0, 1, 2, 3}` is symmetric about its mean, which
//! leaves a single free parameter `p0 = P(0) = P(3)`. The optimizer runs a
//! golden-section search over `p0 ∈ [0, 1/2]`; `p0 = 1/2` is on-off keying.

use alloc::vec::Vec;

use crate::error::{domain, Result};
use crate::pam::{BitLabeling, InputDistribution, PamAlphabet};
use crate::rates::{required_psnr_by, Metric, RateEngine};

/// Bracket width at which the golden-section search stops.
pub const P0_TOLERANCE: f64 = 1e-5;

/// Rates closer than this are ties, resolved toward the larger `p0`.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// The experiment's shaped distribution `(0.35, 0.15, 0.15, 0.35)`.
pub fn fixed_distribution() -> InputDistribution {
    InputDistribution::new(alloc::vec![0.35, 0.15, 0.15, 0.35]).expect("constant pmf is valid")
}

/// Exponential reference pmf on 4-PAM with mean amplitude `mean` (default 1.0).
pub fn exponential_reference(mean: f64) -> Result<InputDistribution> {
    InputDistribution::exponential_with_mean(&PamAlphabet::pam4(), mean)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapingSolution {
    pub p0: f64,
    pub distribution: InputDistribution,
    pub rate: f64,
    pub metric: Metric,
    pub psnr_db: f64,
    /// 2 for on-off keying (`p0 = 1/2`), else 4.
    pub effective_cardinality: usize,
}

/// Result of a PSNR sweep of the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct P0Sweep {
    pub solutions: Vec<ShapingSolution>,
    /// Largest swept PSNR at which on-off keying is optimal.
    pub transition_psnr_db: Option<f64>,
}

/// Optimizer over symmetric pmfs of a four-point alphabet.
#[derive(Debug, Clone)]
pub struct ShapingOptimizer {
    engine: RateEngine,
    alphabet: PamAlphabet,
    labeling: BitLabeling,
}

impl Default for ShapingOptimizer {
    fn default() -> Self {
        Self {
            engine: RateEngine::default(),
            alphabet: PamAlphabet::pam4(),
            labeling: BitLabeling::gray(4).expect("4 is a power of two"),
        }
    }
}

impl ShapingOptimizer {
    pub fn new(alphabet: PamAlphabet, labeling: BitLabeling) -> Result<Self> {
        if alphabet.cardinality() != 4 || labeling.cardinality() != 4 {
            return Err(domain(
                "symmetric shaping optimizer needs a four-point alphabet",
            ));
        }
        Ok(Self {
            engine: RateEngine::default(),
            alphabet,
            labeling,
        })
    }

    pub fn alphabet(&self) -> &PamAlphabet {
        &self.alphabet
    }

    pub fn labeling(&self) -> &BitLabeling {
        &self.labeling
    }

    pub fn engine(&self) -> &RateEngine {
        &self.engine
    }

    fn psnr_of(&self, sigma: f64) -> f64 {
        let peak = self.alphabet.peak();
        10.0 * libm::log10(peak * peak / (sigma * sigma))
    }

    fn sigma_of(&self, psnr: f64) -> f64 {
        self.alphabet.peak() / libm::pow(10.0, psnr / 20.0)
    }

    /// Rate of `(p0, 1/2-p0, 1/2-p0, p0)` at noise deviation `sigma`.
    pub fn rate_at(&self, p0: f64, sigma: f64, metric: Metric) -> Result<f64> {
        let d = InputDistribution::symmetric_pam4(p0)?;
        self.engine
            .rate(&d, &self.alphabet, &self.labeling, sigma, metric)
    }

    pub fn optimize(&self, sigma: f64, metric: Metric) -> Result<ShapingSolution> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(domain("sigma must be positive"));
        }
        let f = |p0: f64| self.rate_at(p0, sigma, metric);
        let inv_phi = (libm::sqrt(5.0) - 1.0) / 2.0;
        let (mut a, mut b) = (0.0, 0.5);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let (mut fc, mut fd) = (f(c)?, f(d)?);
        while b - a >= P0_TOLERANCE {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = f(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = f(d)?;
            }
        }
        let interior = 0.5 * (a + b);
        // Candidates in increasing p0; a later candidate wins unless strictly worse.
        let mut best = (0.0, f(0.0)?);
        for p0 in [interior, 0.5] {
            let r = f(p0)?;
            if r >= best.1 - TIE_TOLERANCE {
                best = (p0, r);
            }
        }
        let (p0, rate) = best;
        Ok(ShapingSolution {
            p0,
            distribution: InputDistribution::symmetric_pam4(p0)?,
            rate,
            metric,
            psnr_db: self.psnr_of(sigma),
            effective_cardinality: if p0 == 0.5 { 2 } else { 4 },
        })
    }

    pub fn optimize_at_psnr(&self, psnr: f64, metric: Metric) -> Result<ShapingSolution> {
        let mut s = self.optimize(self.sigma_of(psnr), metric)?;
        s.psnr_db = psnr;
        Ok(s)
    }

    pub fn sweep(&self, psnr_grid: &[f64], metric: Metric) -> Result<P0Sweep> {
        if psnr_grid.is_empty() {
            return Err(domain("PSNR grid is empty"));
        }
        let solutions = psnr_grid
            .iter()
            .map(|&p| self.optimize_at_psnr(p, metric))
            .collect::<Result<Vec<_>>>()?;
        Ok(P0Sweep {
            transition_psnr_db: transition_psnr(&solutions),
            solutions,
        })
    }

    /// PSNR at which the optimally shaped input reaches `target`.
    pub fn required_psnr(&self, target: f64, metric: Metric) -> Result<f64> {
        required_psnr_by(|p| Ok(self.optimize_at_psnr(p, metric)?.rate), target)
    }
}

/// Largest PSNR among `solutions` whose optimum is on-off keying.
pub fn transition_psnr(solutions: &[ShapingSolution]) -> Option<f64> {
    solutions
        .iter()
        .filter(|s| s.effective_cardinality == 2)
        .map(|s| s.psnr_db)
        .fold(None, |acc: Option<f64>, p| {
            Some(acc.map_or(p, |a| a.max(p)))
        })
}

/// Rate-maximizing symmetric 4-PAM pmf at electrical noise deviation `sigma_el`.
pub fn optimize_distribution(sigma_el: f64, metric: Metric) -> Result<ShapingSolution> {
    ShapingOptimizer::default().optimize(sigma_el, metric)
}

/// Optimal `p0` over a PSNR grid (dB).
pub fn sweep_optimal_p0(psnr_grid: &[f64], metric: Metric) -> Result<P0Sweep> {
    ShapingOptimizer::default().sweep(psnr_grid, metric)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_noise_approaches_uniform() {
        let s = optimize_distribution(0.05, Metric::Smd).unwrap();
        assert!((s.p0 - 0.25).abs() < 0.01, "p0 = {}", s.p0);
        assert_eq!(s.effective_cardinality, 4);
    }

    #[test]
    fn high_noise_is_ook() {
        for m in [Metric::Smd, Metric::Bmd] {
            let s = optimize_distribution(3.0, m).unwrap();
            assert_eq!(s.p0, 0.5);
            assert_eq!(s.effective_cardinality, 2);
            assert!(s.distribution.is_symmetric());
        }
    }

    #[test]
    fn fixed_distribution_is_constant() {
        let d = fixed_distribution();
        assert_eq!(d.pmf(), &[0.35, 0.15, 0.15, 0.35]);
        assert!(d.is_symmetric());
        assert!((d.entropy() - 1.8813).abs() < 1e-4);
    }

    #[test]
    fn empty_sweep_rejected() {
        assert!(sweep_optimal_p0(&[], Metric::Smd).is_err());
    }

    #[test]
    fn rejects_wrong_alphabet() {
        assert!(ShapingOptimizer::new(PamAlphabet::pam3(), BitLabeling::gray(4).unwrap()).is_err());
    }
}
