//! Achievable rates of discrete inputs over `Y = X + N(0, σ²)`.
//!
//! Symbol-metric decoding achieves the mutual information `I(X;Y)`;
//! bit-metric decoding achieves `[H(X) - Σ_k H(B_k|Y)]⁺`. Both are evaluated
//! as expectations over the Gaussian noise with a Gauss–Hermite rule centred
//! on each constellation point, using log-sum-exp for the posteriors.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::pam::{sigma_from_psnr_db, BitLabeling, InputDistribution, PamAlphabet};
use crate::quadrature::GaussHermite;

/// Default number of Gauss–Hermite nodes per constellation point.
pub const DEFAULT_NODES: usize = 160;

/// Rate tolerance of the PSNR inversion, bpcu.
pub const RATE_TOLERANCE: f64 = 1e-5;

/// PSNR bracket searched when inverting rate curves, dB.
pub const PSNR_BRACKET_DB: (f64, f64) = (-30.0, 40.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Smd,
    Bmd,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Smd => "smd",
            Metric::Bmd => "bmd",
        }
    }
}

impl core::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smd" => Ok(Metric::Smd),
            "bmd" => Ok(Metric::Bmd),
            other => Err(Error::Config(format!(
                "unknown metric `{other}` (expected smd or bmd)"
            ))),
        }
    }
}

/// Rates of one distribution at one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub psnr_db: f64,
    pub rate_smd: f64,
    /// `None` when the alphabet has no binary labeling (e.g. 3-PAM).
    pub rate_bmd: Option<f64>,
    pub distribution: InputDistribution,
}

/// Quadrature-backed rate evaluator. Construction computes the node table
/// once; evaluations are cheap and side-effect free.
#[derive(Debug, Clone)]
pub struct RateEngine {
    quadrature: GaussHermite,
}

impl Default for RateEngine {
    fn default() -> Self {
        Self::new(DEFAULT_NODES)
    }
}

struct Rates {
    smd: f64,
    bmd: Option<f64>,
}

impl RateEngine {
    pub fn new(nodes: usize) -> Self {
        Self {
            quadrature: GaussHermite::new(nodes),
        }
    }

    pub fn rate_smd(&self, d: &InputDistribution, a: &PamAlphabet, sigma: f64) -> Result<f64> {
        Ok(self.evaluate(d, a, None, sigma)?.smd)
    }

    pub fn rate_bmd(
        &self,
        d: &InputDistribution,
        a: &PamAlphabet,
        labeling: &BitLabeling,
        sigma: f64,
    ) -> Result<f64> {
        Ok(self
            .evaluate(d, a, Some(labeling), sigma)?
            .bmd
            .expect("labeling supplied"))
    }

    pub fn rate(
        &self,
        d: &InputDistribution,
        a: &PamAlphabet,
        labeling: &BitLabeling,
        sigma: f64,
        metric: Metric,
    ) -> Result<f64> {
        match metric {
            Metric::Smd => self.rate_smd(d, a, sigma),
            Metric::Bmd => self.rate_bmd(d, a, labeling, sigma),
        }
    }

    /// Both rates in one pass; BMD only when a labeling is given.
    pub fn rate_point(
        &self,
        d: &InputDistribution,
        a: &PamAlphabet,
        labeling: Option<&BitLabeling>,
        psnr: f64,
    ) -> Result<RatePoint> {
        let r = self.evaluate(d, a, labeling, sigma_from_psnr_db(psnr))?;
        Ok(RatePoint {
            psnr_db: psnr,
            rate_smd: r.smd,
            rate_bmd: r.bmd,
            distribution: d.clone(),
        })
    }

    fn evaluate(
        &self,
        d: &InputDistribution,
        a: &PamAlphabet,
        labeling: Option<&BitLabeling>,
        sigma: f64,
    ) -> Result<Rates> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(domain(format!("sigma must be positive, got {sigma}")));
        }
        d.check_alphabet(a)?;
        if let Some(l) = labeling {
            if l.cardinality() != a.cardinality() {
                return Err(Error::LengthMismatch {
                    expected: a.cardinality(),
                    got: l.cardinality(),
                });
            }
        }
        let pts = a.points();
        let pmf = d.pmf();
        let support: Vec<usize> = (0..pts.len()).filter(|&i| pmf[i] > 0.0).collect();
        let ln_p: Vec<f64> = pmf
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    libm::log(p)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let bits = labeling.map_or(0, |l| l.bits_per_symbol());
        let inv_2s2 = 1.0 / (2.0 * sigma * sigma);

        let mut logs = Vec::with_capacity(support.len());
        // E_x E_z[ln Σ_x' p(x') f(y|x')/f(y|x)], and the per-bit analogue.
        let mut joint = 0.0;
        let mut bit_cond = 0.0;
        for &x in &support {
            let mut joint_x = 0.0;
            let mut bit_x = 0.0;
            for (z, w) in self.quadrature.standard_normal_pairs() {
                logs.clear();
                for &xp in &support {
                    let diff = pts[x] - pts[xp];
                    logs.push(ln_p[xp] - (diff * diff + 2.0 * sigma * z * diff) * inv_2s2);
                }
                let all = log_sum_exp(&logs);
                joint_x += w * all;
                if let Some(l) = labeling {
                    for k in 0..bits {
                        let bx = l.bit(x, k);
                        let same = log_sum_exp_filtered(
                            &logs,
                            support.iter().map(|&xp| l.bit(xp, k) == bx),
                        );
                        bit_x += w * (all - same);
                    }
                }
            }
            joint += pmf[x] * joint_x;
            bit_cond += pmf[x] * bit_x;
        }
        let ln2 = core::f64::consts::LN_2;
        let smd = libm::fmax(-joint / ln2, 0.0);
        let bmd = labeling.map(|_| libm::fmax(d.entropy() - bit_cond / ln2, 0.0));
        Ok(Rates { smd, bmd })
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(v.iter().map(|x| libm::exp(x - m)).sum::<f64>())
}

fn log_sum_exp_filtered(v: &[f64], keep: impl Iterator<Item = bool>) -> f64 {
    let mut m = f64::NEG_INFINITY;
    let mut sel: [f64; 16] = [0.0; 16];
    let mut n = 0;
    for (x, k) in v.iter().zip(keep) {
        if k {
            sel[n] = *x;
            n += 1;
            m = m.max(*x);
        }
    }
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(sel[..n].iter().map(|x| libm::exp(x - m)).sum::<f64>())
}

/// `I(X;Y)` in bits per channel use for `Y = X + N(0, σ²)`.
pub fn rate_smd(d: &InputDistribution, a: &PamAlphabet, sigma_el: f64) -> Result<f64> {
    RateEngine::default().rate_smd(d, a, sigma_el)
}

/// Bit-metric decoding rate `[H(X) - Σ_k H(B_k|Y)]⁺`.
pub fn rate_bmd(
    d: &InputDistribution,
    a: &PamAlphabet,
    labeling: &BitLabeling,
    sigma_el: f64,
) -> Result<f64> {
    RateEngine::default().rate_bmd(d, a, labeling, sigma_el)
}

/// PSNR (dB) at which a PSNR-monotone rate function reaches `target`.
///
/// Bisection over [`PSNR_BRACKET_DB`] stops once the rate is within
/// [`RATE_TOLERANCE`] of the target. Targets that the rate at the top of the
/// bracket does not exceed by more than the tolerance are unreachable.
pub fn required_psnr_by(
    mut rate_at_psnr: impl FnMut(f64) -> Result<f64>,
    target: f64,
) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::Unreachable {
            target,
            reason: "target must be positive".into(),
        });
    }
    let (mut lo, mut hi) = PSNR_BRACKET_DB;
    let top = rate_at_psnr(hi)?;
    if top - target <= RATE_TOLERANCE {
        return Err(Error::Unreachable {
            target,
            reason: format!("rate at {hi} dB is only {top}"),
        });
    }
    let bottom = rate_at_psnr(lo)?;
    if bottom >= target {
        return Err(Error::Unreachable {
            target,
            reason: format!("rate at {lo} dB already {bottom}"),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = rate_at_psnr(mid)?;
        if libm::fabs(r - target) <= RATE_TOLERANCE && hi - lo < 1e-6 {
            return Ok(mid);
        }
        if r < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// PSNR in dB at which distribution `d` reaches `target_rate` under `metric`.
pub fn required_psnr(
    d: &InputDistribution,
    a: &PamAlphabet,
    labeling: &BitLabeling,
    target_rate: f64,
    metric: Metric,
) -> Result<f64> {
    let h = d.entropy();
    if target_rate >= h {
        return Err(Error::Unreachable {
            target: target_rate,
            reason: format!("entropy is {h}"),
        });
    }
    let engine = RateEngine::default();
    required_psnr_by(
        |p| engine.rate(d, a, labeling, sigma_from_psnr_db(p), metric),
        target_rate,
    )
}

/// Rate curve of a fixed distribution over a PSNR grid.
pub fn rate_curve(
    d: &InputDistribution,
    a: &PamAlphabet,
    labeling: Option<&BitLabeling>,
    psnr_grid: &[f64],
) -> Result<Vec<RatePoint>> {
    let engine = RateEngine::default();
    psnr_grid
        .iter()
        .map(|&p| engine.rate_point(d, a, labeling, p))
        .collect()
}

/// PSNR grid `lo, lo+step, ..., <= hi` (inclusive within a small slack).
pub fn psnr_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(domain(format!("invalid grid {lo}:{hi}:{step}")));
    }
    let n = libm::floor((hi - lo) / step + 1e-9) as usize + 1;
    Ok((0..n).map(|i| lo + i as f64 * step).collect())
}
