//! Achievable information rate estimates from transmit/receive sample pairs.
//!
//! The receiver metric is an auxiliary Gaussian channel fitted to the data:
//! one mean per transmit point and a pooled variance (or one variance per
//! point). Rates are `H(d) - E[-log2 q(x|y)]` for symbol decoding and the
//! bitwise analogue for bit decoding, both lower bounds on the true rates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{domain, Error, Result};
use crate::pam::{BitLabeling, InputDistribution, PamAlphabet};

/// Fewer samples than this are rejected.
pub const MIN_SAMPLES: usize = 1000;

/// Points with positive probability but fewer samples raise a warning.
pub const LOW_COUNT: usize = 30;

pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Per-point running sums; accumulators of disjoint data merge exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct AirAccumulator {
    count: Vec<usize>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl AirAccumulator {
    pub fn new(cardinality: usize) -> Self {
        Self {
            count: vec![0; cardinality],
            sum: vec![0.0; cardinality],
            sum_sq: vec![0.0; cardinality],
        }
    }

    pub fn push(&mut self, x: u8, y: f64) {
        let i = x as usize;
        self.count[i] += 1;
        self.sum[i] += y;
        self.sum_sq[i] += y * y;
    }

    pub fn extend(&mut self, x: &[u8], y: &[f64]) -> Result<()> {
        check_pairs(x, y, self.count.len())?;
        for (&xi, &yi) in x.iter().zip(y) {
            self.push(xi, yi);
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.count.len() != self.count.len() {
            return Err(Error::LengthMismatch {
                expected: self.count.len(),
                got: other.count.len(),
            });
        }
        for i in 0..self.count.len() {
            self.count[i] += other.count[i];
            self.sum[i] += other.sum[i];
            self.sum_sq[i] += other.sum_sq[i];
        }
        Ok(())
    }

    pub fn counts(&self) -> &[usize] {
        &self.count
    }

    pub fn samples(&self) -> usize {
        self.count.iter().sum()
    }

    /// Maximum-likelihood Gaussian fit; empty points keep their nominal amplitude.
    pub fn fit(&self, alphabet: &PamAlphabet, heteroskedastic: bool) -> GaussianFit {
        let k = self.count.len();
        let means: Vec<f64> = (0..k)
            .map(|i| {
                if self.count[i] > 0 {
                    self.sum[i] / self.count[i] as f64
                } else {
                    alphabet.points()[i]
                }
            })
            .collect();
        let scatter: Vec<f64> = (0..k)
            .map(|i| (self.sum_sq[i] - self.count[i] as f64 * means[i] * means[i]).max(0.0))
            .collect();
        let variances = if heteroskedastic {
            let pooled = pooled(&scatter, &self.count);
            (0..k)
                .map(|i| {
                    if self.count[i] > 1 {
                        scatter[i] / self.count[i] as f64
                    } else {
                        pooled
                    }
                })
                .map(|v| v.max(VARIANCE_FLOOR))
                .collect()
        } else {
            vec![pooled(&scatter, &self.count).max(VARIANCE_FLOOR); k]
        };
        GaussianFit { means, variances }
    }
}

fn pooled(scatter: &[f64], count: &[usize]) -> f64 {
    let n: usize = count.iter().sum();
    if n == 0 {
        0.0
    } else {
        scatter.iter().sum::<f64>() / n as f64
    }
}

fn check_pairs(x: &[u8], y: &[f64], cardinality: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if let Some(&bad) = x.iter().find(|&&v| v as usize >= cardinality) {
        return Err(domain(format!(
            "symbol index {bad} outside alphabet of {cardinality}"
        )));
    }
    Ok(())
}

/// Auxiliary channel `q(y|x) = N(y; mean_x, var_x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl GaussianFit {
    /// `ln d(x) + ln q(y|x)` up to a constant shared by all `x`.
    fn log_joint(&self, log_prior: &[f64], y: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let r = y - self.means[i];
            *o = log_prior[i]
                - 0.5 * libm::log(self.variances[i])
                - r * r / (2.0 * self.variances[i]);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AirOptions {
    /// One variance per transmit point instead of a pooled one.
    pub heteroskedastic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AirEstimate {
    pub rate_smd_hat: f64,
    pub rate_bmd_hat: f64,
    pub samples: usize,
    /// A point with positive probability has fewer than [`LOW_COUNT`] samples.
    pub low_count_warning: bool,
    pub fit: GaussianFit,
}

/// Rate estimates for the pairs `(x_i, y_i)` with the prior `d`.
pub fn air_estimate(
    x: &[u8],
    y: &[f64],
    d: &InputDistribution,
    alphabet: &PamAlphabet,
    labeling: &BitLabeling,
    options: AirOptions,
) -> Result<AirEstimate> {
    let k = alphabet.cardinality();
    if d.len() != k || labeling.cardinality() != k {
        return Err(domain("distribution, alphabet and labeling sizes differ"));
    }
    if x.len() < MIN_SAMPLES {
        return Err(domain(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            x.len()
        )));
    }
    let mut acc = AirAccumulator::new(k);
    acc.extend(x, y)?;
    if let Some(i) = x.iter().find(|&&v| d.pmf()[v as usize] == 0.0) {
        return Err(domain(format!("symbol {i} has zero prior probability")));
    }
    let fit = acc.fit(alphabet, options.heteroskedastic);
    let low_count_warning = (0..k).any(|i| d.pmf()[i] > 0.0 && acc.counts()[i] < LOW_COUNT);
    let log_prior: Vec<f64> = d
        .pmf()
        .iter()
        .map(|&p| {
            if p > 0.0 {
                libm::log(p)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let m = labeling.bits_per_symbol();
    let mut joint = vec![0.0; k];
    let (mut smd_loss, mut bmd_loss) = (0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        fit.log_joint(&log_prior, yi, &mut joint);
        let total = log_sum_exp(joint.iter().copied());
        smd_loss += total - joint[xi as usize];
        for b in 0..m {
            let bit = labeling.bit(xi as usize, b);
            let same = log_sum_exp(
                (0..k)
                    .filter(|&j| labeling.bit(j, b) == bit)
                    .map(|j| joint[j]),
            );
            bmd_loss += total - same;
        }
    }
    let n = x.len() as f64;
    let h = d.entropy();
    let ln2 = core::f64::consts::LN_2;
    Ok(AirEstimate {
        rate_smd_hat: h - smd_loss / (n * ln2),
        rate_bmd_hat: (h - bmd_loss / (n * ln2)).max(0.0),
        samples: x.len(),
        low_count_warning,
        fit,
    })
}

fn log_sum_exp(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = v.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + libm::log(v.map(|t| libm::exp(t - max)).sum::<f64>())
}
