//! Multi-threaded frame error simulation with results identical to the
//! sequential [`ps4pam_core::fer::simulate_fer`].

use ps4pam_core::fer::{frame_seed, FerConfig, FerPoint, FrameTrial};
use ps4pam_core::Result;
use rayon::prelude::*;

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "PS4PAM_WORKERS";

/// Frames are simulated in batches; the stopping rule is then replayed in
/// frame order, so the counts do not depend on scheduling.
pub fn simulate_fer_parallel<T, F>(
    make_trial: F,
    config: &FerConfig,
    batch: usize,
) -> Result<Vec<FerPoint>>
where
    F: Fn() -> T + Sync + Send,
    T: FrameTrial + Send,
{
    config.validate()?;
    let batch = batch.max(1);
    let mut points = Vec::with_capacity(config.psnr_grid.len());
    for (p, &psnr) in config.psnr_grid.iter().enumerate() {
        let (mut frames, mut errors) = (0usize, 0usize);
        'point: while frames < config.max_frames && errors < config.min_errors {
            let end = (frames + batch).min(config.max_frames);
            let outcomes = (frames..end)
                .into_par_iter()
                .map_init(&make_trial, |trial, f| {
                    trial.run(psnr, frame_seed(config.seed, p, f))
                })
                .collect::<Result<Vec<bool>>>()?;
            for e in outcomes {
                errors += e as usize;
                frames += 1;
                if errors >= config.min_errors {
                    break 'point;
                }
            }
        }
        points.push(FerPoint::new(psnr, frames, errors));
    }
    Ok(points)
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}
