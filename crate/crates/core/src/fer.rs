//! Monte-Carlo frame error rate estimation.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Frame errors collected before a grid point stops.
pub const DEFAULT_MIN_ERRORS: usize = 50;

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// A single simulated frame; `Ok(true)` is a frame error.
pub trait FrameTrial {
    fn run(&mut self, psnr_db: f64, seed: u64) -> Result<bool>;
}

impl<F: FnMut(f64, u64) -> Result<bool>> FrameTrial for F {
    fn run(&mut self, psnr_db: f64, seed: u64) -> Result<bool> {
        self(psnr_db, seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FerConfig {
    pub psnr_grid: Vec<f64>,
    pub min_errors: usize,
    pub max_frames: usize,
    pub seed: u64,
}

impl FerConfig {
    pub fn new(psnr_grid: Vec<f64>, max_frames: usize, seed: u64) -> Self {
        Self {
            psnr_grid,
            min_errors: DEFAULT_MIN_ERRORS,
            max_frames,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.psnr_grid.is_empty() {
            return Err(Error::Config("PSNR grid is empty".into()));
        }
        if self.max_frames == 0 {
            return Err(Error::Config("max_frames must be positive".into()));
        }
        if self.min_errors == 0 {
            return Err(Error::Config("min_errors must be positive".into()));
        }
        if let Some(p) = self.psnr_grid.iter().find(|p| !p.is_finite()) {
            return Err(Error::Config(format!("non-finite PSNR {p}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FerPoint {
    pub psnr_db: f64,
    pub frames: usize,
    pub errors: usize,
    pub fer: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl FerPoint {
    pub fn new(psnr_db: f64, frames: usize, errors: usize) -> Self {
        let (ci_lo, ci_hi) = wilson_interval(errors, frames);
        Self {
            psnr_db,
            frames,
            errors,
            fer: errors as f64 / frames as f64,
            ci_lo,
            ci_hi,
        }
    }
}

/// 95% Wilson score interval for `errors` out of `frames`.
pub fn wilson_interval(errors: usize, frames: usize) -> (f64, f64) {
    if frames == 0 {
        return (0.0, 1.0);
    }
    let n = frames as f64;
    let p = errors as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * libm::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    let lo = if errors == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if errors == frames {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo, hi)
}

/// SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of frame `frame` at grid point `point`; independent of evaluation order.
pub fn frame_seed(seed: u64, point: usize, frame: usize) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(point as u64)) ^ frame as u64)
}

/// Runs each grid point until `min_errors` errors or `max_frames` frames.
pub fn simulate_fer(trial: &mut impl FrameTrial, config: &FerConfig) -> Result<Vec<FerPoint>> {
    config.validate()?;
    let mut points = Vec::with_capacity(config.psnr_grid.len());
    for (p, &psnr) in config.psnr_grid.iter().enumerate() {
        let (mut frames, mut errors) = (0, 0);
        while frames < config.max_frames && errors < config.min_errors {
            errors += trial.run(psnr, frame_seed(config.seed, p, frames))? as usize;
            frames += 1;
        }
        points.push(FerPoint::new(psnr, frames, errors));
    }
    Ok(points)
}

/// PSNR where the FER curve crosses `target`, by linear interpolation of
/// `log10 FER` between the first bracketing pair of grid points.
pub fn fer_crossing(points: &[FerPoint], target: f64) -> Option<f64> {
    points.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.fer >= target && b.fer <= target && b.fer > 0.0 {
            let (la, lb, lt) = (libm::log10(a.fer), libm::log10(b.fer), libm::log10(target));
            if la == lb {
                return Some(a.psnr_db);
            }
            Some(a.psnr_db + (la - lt) / (la - lb) * (b.psnr_db - a.psnr_db))
        } else {
            None
        }
    })
}
