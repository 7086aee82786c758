//! Offline receiver chain: least-squares feed-forward equalizer, conditional
//! histograms and rate evaluation of sample records.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::air::{air_estimate, AirEstimate, AirOptions};
use crate::error::{domain, Error, Result};
use crate::fer::splitmix64;
use crate::pam::{BitLabeling, ChannelModel, InputDistribution, PamAlphabet};
use crate::rates::Metric;

/// Ridge term added to the diagonal of the normalized normal equations.
pub const RIDGE: f64 = 1e-8;

/// Training needs this many samples per tap.
pub const SAMPLES_PER_TAP: usize = 100;

pub const MIN_BINS: usize = 10;
pub const DEFAULT_BINS: usize = 100;

/// FIR taps; output `n` is `sum_k taps[k] y[n + delay - k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerTaps {
    taps: Vec<f64>,
    delay: usize,
}

impl EqualizerTaps {
    /// Odd number of finite taps, centred on the reference sample.
    pub fn new(taps: Vec<f64>) -> Result<Self> {
        if taps.len() % 2 == 0 {
            return Err(domain(format!(
                "equalizer needs an odd tap count, got {}",
                taps.len()
            )));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(domain("equalizer taps must be finite"));
        }
        let delay = taps.len() / 2;
        Ok(Self { taps, delay })
    }

    /// Single unit tap at the centre.
    pub fn identity(n_taps: usize) -> Result<Self> {
        let mut taps = vec![0.0; n_taps];
        if n_taps > 0 {
            taps[n_taps / 2] = 1.0;
        }
        Self::new(taps)
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Descriptive tags of a capture.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RecordMeta {
    pub baudrate: String,
    pub distribution: String,
    pub source: String,
}

/// Transmit indices and received samples, one sample per symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    x: Vec<u8>,
    y: Vec<f64>,
    pub meta: RecordMeta,
}

impl SampleRecord {
    pub fn new(x: Vec<u8>, y: Vec<f64>, cardinality: usize, meta: RecordMeta) -> Result<Self> {
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
        Ok(Self { x, y, meta })
    }

    pub fn x(&self) -> &[u8] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Splits at `at`; both halves keep the metadata.
    pub fn split_at(&self, at: usize) -> (Self, Self) {
        let (x0, x1) = self.x.split_at(at);
        let (y0, y1) = self.y.split_at(at);
        (
            Self {
                x: x0.to_vec(),
                y: y0.to_vec(),
                meta: self.meta.clone(),
            },
            Self {
                x: x1.to_vec(),
                y: y1.to_vec(),
                meta: self.meta.clone(),
            },
        )
    }
}

/// Draws `n` symbols from `d` and passes them through `channel`.
pub fn simulate_record(
    d: &InputDistribution,
    alphabet: &PamAlphabet,
    channel: &ChannelModel,
    n: usize,
    seed: u64,
) -> Result<SampleRecord> {
    if d.len() != alphabet.cardinality() {
        return Err(domain("distribution and alphabet sizes differ"));
    }
    let picker =
        WeightedIndex::new(d.pmf()).map_err(|e| Error::InvalidDistribution(format!("{e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<u8> = (0..n).map(|_| picker.sample(&mut rng) as u8).collect();
    let y = channel.transmit(&alphabet.amplitudes(&x)?, splitmix64(seed));
    let meta = RecordMeta {
        source: format!("simulated seed={seed}"),
        ..RecordMeta::default()
    };
    SampleRecord::new(x, y, alphabet.cardinality(), meta)
}

fn tap_input(y: &[f64], n: usize, delay: usize, k: usize) -> f64 {
    (n + delay)
        .checked_sub(k)
        .and_then(|i| y.get(i))
        .copied()
        .unwrap_or(0.0)
}

pub fn apply_ffe(y: &[f64], taps: &EqualizerTaps) -> Vec<f64> {
    (0..y.len())
        .map(|n| {
            taps.taps
                .iter()
                .enumerate()
                .map(|(k, &t)| t * tap_input(y, n, taps.delay, k))
                .sum()
        })
        .collect()
}

/// Data-aided least-squares taps driving the output towards the transmitted amplitudes.
pub fn train_ffe(
    record: &SampleRecord,
    alphabet: &PamAlphabet,
    n_taps: usize,
) -> Result<EqualizerTaps> {
    if n_taps == 0 || n_taps % 2 == 0 {
        return Err(domain(format!(
            "equalizer needs an odd tap count, got {n_taps}"
        )));
    }
    if record.len() < SAMPLES_PER_TAP * n_taps {
        return Err(domain(format!(
            "{} samples are too few to train {n_taps} taps",
            record.len()
        )));
    }
    let delay = n_taps / 2;
    let target = alphabet.amplitudes(record.x())?;
    let y = record.y();
    let mut r = DMatrix::<f64>::zeros(n_taps, n_taps);
    let mut p = DVector::<f64>::zeros(n_taps);
    let mut row = vec![0.0; n_taps];
    for n in 0..y.len() {
        for (k, v) in row.iter_mut().enumerate() {
            *v = tap_input(y, n, delay, k);
        }
        for i in 0..n_taps {
            p[i] += row[i] * target[n];
            for j in 0..=i {
                r[(i, j)] += row[i] * row[j];
            }
        }
    }
    let scale = 1.0 / y.len() as f64;
    for i in 0..n_taps {
        p[i] *= scale;
        for j in 0..=i {
            r[(i, j)] *= scale;
            r[(j, i)] = r[(i, j)];
        }
        r[(i, i)] += RIDGE;
    }
    let chol = r.cholesky().ok_or(Error::IllConditioned)?;
    let w = chol.solve(&p);
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::IllConditioned);
    }
    EqualizerTaps::new(w.iter().copied().collect())
}

/// Per-transmit-point counts over a common grid of equal-width bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    /// `counts[x][b]`.
    pub counts: Vec<Vec<usize>>,
    /// Points that never occurred; their rows are zero.
    pub empty: Vec<bool>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }
}

pub fn histogram(x: &[u8], y: &[f64], cardinality: usize, bins: usize) -> Result<Histogram> {
    if bins < MIN_BINS {
        return Err(domain(format!("need at least {MIN_BINS} bins, got {bins}")));
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.is_empty() {
        return Err(domain("empty record"));
    }
    if let Some(&bad) = x.iter().find(|&&v| v as usize >= cardinality) {
        return Err(domain(format!(
            "symbol index {bad} outside alphabet of {cardinality}"
        )));
    }
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(domain("samples must be finite"));
    }
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let edges = (0..=bins).map(|b| lo + b as f64 * width).collect();
    let mut counts = vec![vec![0usize; bins]; cardinality];
    let mut sum = vec![0.0; cardinality];
    let mut sum_sq = vec![0.0; cardinality];
    for (&xi, &yi) in x.iter().zip(y) {
        let b = (((yi - lo) / width) as usize).min(bins - 1);
        let i = xi as usize;
        counts[i][b] += 1;
        sum[i] += yi;
        sum_sq[i] += yi * yi;
    }
    let n: Vec<usize> = counts.iter().map(|c| c.iter().sum()).collect();
    let means: Vec<f64> = (0..cardinality)
        .map(|i| {
            if n[i] > 0 {
                sum[i] / n[i] as f64
            } else {
                f64::NAN
            }
        })
        .collect();
    let variances = (0..cardinality)
        .map(|i| {
            if n[i] > 0 {
                (sum_sq[i] / n[i] as f64 - means[i] * means[i]).max(0.0)
            } else {
                f64::NAN
            }
        })
        .collect();
    Ok(Histogram {
        edges,
        counts,
        empty: n.iter().map(|&c| c == 0).collect(),
        means,
        variances,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordReport {
    pub rate_smd_hat: f64,
    pub rate_bmd_hat: f64,
    pub taps: EqualizerTaps,
    pub histogram: Histogram,
    pub air: AirEstimate,
    pub meta: RecordMeta,
}

/// Equalize, estimate rates and histogram the equalized samples.
pub fn evaluate_recording(
    record: &SampleRecord,
    d: &InputDistribution,
    alphabet: &PamAlphabet,
    labeling: &BitLabeling,
    n_taps: usize,
) -> Result<RecordReport> {
    let taps = train_ffe(record, alphabet, n_taps)?;
    let z = apply_ffe(record.y(), &taps);
    let air = air_estimate(record.x(), &z, d, alphabet, labeling, AirOptions::default())?;
    let histogram = histogram(record.x(), &z, alphabet.cardinality(), DEFAULT_BINS)?;
    Ok(RecordReport {
        rate_smd_hat: air.rate_smd_hat,
        rate_bmd_hat: air.rate_bmd_hat,
        taps,
        histogram,
        air,
        meta: record.meta.clone(),
    })
}

/// Noise deviation after `attenuation_db` of optical loss: the electrical
/// signal falls with optical power, so relative noise grows as `10^(A/10)`.
pub fn attenuated_sigma(sigma_ref: f64, attenuation_db: f64) -> f64 {
    sigma_ref * libm::pow(10.0, attenuation_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct B2bPoint {
    pub attenuation_db: f64,
    pub sigma: f64,
    pub rate_smd_hat: f64,
    pub rate_bmd_hat: f64,
}

impl B2bPoint {
    pub fn rate(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Smd => self.rate_smd_hat,
            Metric::Bmd => self.rate_bmd_hat,
        }
    }
}

/// Simulated back-to-back measurement: linear AWGN records over an attenuation grid.
#[allow(clippy::too_many_arguments)]
pub fn b2b_sweep(
    d: &InputDistribution,
    alphabet: &PamAlphabet,
    labeling: &BitLabeling,
    sigma_ref: f64,
    attenuations_db: &[f64],
    samples: usize,
    n_taps: usize,
    seed: u64,
) -> Result<Vec<B2bPoint>> {
    if attenuations_db.is_empty() {
        return Err(domain("attenuation grid is empty"));
    }
    attenuations_db
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let sigma = attenuated_sigma(sigma_ref, a);
            let channel = ChannelModel::linear_awgn(sigma)?;
            let record =
                simulate_record(d, alphabet, &channel, samples, splitmix64(seed ^ i as u64))?;
            let report = evaluate_recording(&record, d, alphabet, labeling, n_taps)?;
            Ok(B2bPoint {
                attenuation_db: a,
                sigma,
                rate_smd_hat: report.rate_smd_hat,
                rate_bmd_hat: report.rate_bmd_hat,
            })
        })
        .collect()
}

/// Largest attenuation at which the rate still reaches `target`, linearly
/// interpolated between the grid points around the first crossing.
pub fn attenuation_at_rate(points: &[B2bPoint], target: f64, metric: Metric) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (w[0].rate(metric), w[1].rate(metric));
        (a >= target && b < target).then(|| {
            w[0].attenuation_db
                + (a - target) / (a - b) * (w[1].attenuation_db - w[0].attenuation_db)
        })
    })
}

/// Rate of a sweep at `attenuation_db`, linearly interpolated.
pub fn rate_at_attenuation(
    points: &[B2bPoint],
    attenuation_db: f64,
    metric: Metric,
) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a0, a1) = (w[0].attenuation_db, w[1].attenuation_db);
        (a0 <= attenuation_db && attenuation_db <= a1).then(|| {
            let t = if a1 > a0 {
                (attenuation_db - a0) / (a1 - a0)
            } else {
                0.0
            };
            w[0].rate(metric) + t * (w[1].rate(metric) - w[0].rate(metric))
        })
    })
}
