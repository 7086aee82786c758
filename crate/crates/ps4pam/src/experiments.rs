//! Experiment drivers. Each takes a resolved configuration and returns the
//! artifact bytes, so the binary and the tests share one code path.

use std::fmt::Write as _;
use std::path::Path;

use ps4pam_core::ccdm::Composition;
use ps4pam_core::dsp::{
    attenuation_at_rate, b2b_sweep, evaluate_recording, simulate_record, Histogram, RecordMeta,
    SampleRecord,
};
use ps4pam_core::fer::{FerConfig, FerPoint, DEFAULT_MIN_ERRORS};
use ps4pam_core::ldpc::{construct_ldpc, ParityCheckMatrix};
use ps4pam_core::pam::sigma_from_psnr_db;
use ps4pam_core::pas::{PasSystem, PasTrial};
use ps4pam_core::rates::psnr_grid;
use ps4pam_core::shaping::{
    exponential_reference, fixed_distribution, sweep_optimal_p0, ShapingOptimizer,
};
use ps4pam_core::spa::DEFAULT_MAX_ITERATIONS;
use ps4pam_core::{BitLabeling, ChannelModel, InputDistribution, Metric, PamAlphabet, RateEngine};

use crate::config::{parse_grid, ExperimentConfig};
use crate::error::{CliError, CliResult};
use crate::formats::{self, csv_header, RecordFormat};
use crate::parallel::simulate_fer_parallel;

pub const DEFAULT_BLOCKLENGTH: usize = 10_000;
pub const DEFAULT_TAPS: usize = 5;
pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_BINS: usize = 100;
/// Frames handed to the worker pool at once.
pub const FER_BATCH: usize = 64;

fn grid(cfg_value: &Option<String>, what: &str) -> CliResult<Vec<f64>> {
    let text = cfg_value
        .as_deref()
        .ok_or_else(|| CliError::Config(format!("{what} is required")))?;
    let (lo, hi, step) = parse_grid(text)?;
    Ok(psnr_grid(lo, hi, step)?)
}

pub fn metric(cfg: &ExperimentConfig) -> CliResult<Metric> {
    cfg.metric
        .as_deref()
        .unwrap_or("smd")
        .parse::<Metric>()
        .map_err(CliError::Core)
}

/// Named input distributions over their alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistTag {
    Uniform,
    Fixed,
    Optimal,
    Exp,
    Ook,
    Pam3,
}

impl DistTag {
    pub fn parse(text: &str) -> CliResult<Self> {
        Ok(match text {
            "uniform" => Self::Uniform,
            "fixed" => Self::Fixed,
            "optimal" => Self::Optimal,
            "exp" => Self::Exp,
            "ook" => Self::Ook,
            "3pam" => Self::Pam3,
            other => {
                return Err(CliError::Config(format!(
                    "unknown distribution {other:?} (uniform|fixed|optimal|exp|ook|3pam)"
                )))
            }
        })
    }

    pub fn alphabet(self) -> PamAlphabet {
        match self {
            Self::Ook => PamAlphabet::ook(),
            Self::Pam3 => PamAlphabet::pam3(),
            _ => PamAlphabet::pam4(),
        }
    }

    pub fn labeling(self) -> Option<BitLabeling> {
        match self {
            Self::Pam3 => None,
            Self::Ook => BitLabeling::gray(2).ok(),
            _ => BitLabeling::gray(4).ok(),
        }
    }

    /// Fixed distribution; `None` for the PSNR-dependent optimum.
    pub fn distribution(self) -> CliResult<Option<InputDistribution>> {
        Ok(match self {
            Self::Uniform => Some(InputDistribution::uniform(4)),
            Self::Fixed => Some(fixed_distribution()),
            Self::Exp => Some(exponential_reference(1.0)?),
            Self::Ook => Some(InputDistribution::uniform(2)),
            Self::Pam3 => Some(InputDistribution::uniform(3)),
            Self::Optimal => None,
        })
    }
}

fn dist_tag(cfg: &ExperimentConfig, default: &str) -> CliResult<DistTag> {
    DistTag::parse(cfg.dist.as_deref().unwrap_or(default))
}

fn fixed_dist(cfg: &ExperimentConfig, default: &str) -> CliResult<(DistTag, InputDistribution)> {
    let tag = dist_tag(cfg, default)?;
    if !matches!(tag, DistTag::Uniform | DistTag::Fixed | DistTag::Exp) {
        return Err(CliError::Config(format!(
            "{tag:?} is not a fixed 4-PAM distribution here"
        )));
    }
    Ok((tag, tag.distribution()?.expect("fixed tags carry a pmf")))
}

/// `psnr_db,rate_smd,rate_bmd,p0`; `rate_bmd` is empty without a labeling.
pub fn run_rates(cfg: &ExperimentConfig) -> CliResult<String> {
    let tag = dist_tag(cfg, "uniform")?;
    let metric = metric(cfg)?;
    let grid = grid(&cfg.psnr_grid, "psnr_grid")?;
    let alphabet = tag.alphabet();
    let labeling = tag.labeling();
    let engine = RateEngine::default();
    let optimizer = ShapingOptimizer::default();
    let mut out = csv_header(cfg);
    out.push_str("psnr_db,rate_smd,rate_bmd,p0\n");
    for psnr in grid {
        let d = match tag.distribution()? {
            Some(d) => d,
            None => optimizer.optimize_at_psnr(psnr, metric)?.distribution,
        };
        let point = engine.rate_point(&d, &alphabet, labeling.as_ref(), psnr)?;
        let bmd = point.rate_bmd.map_or(String::new(), |r| format!("{r:.6}"));
        writeln!(
            out,
            "{psnr:.6},{:.6},{bmd},{:.6}",
            point.rate_smd,
            d.pmf()[0]
        )
        .unwrap();
    }
    Ok(out)
}

/// `psnr_db,metric,p0,rate`.
pub fn run_optimize(cfg: &ExperimentConfig) -> CliResult<String> {
    let metric = metric(cfg)?;
    let sweep = sweep_optimal_p0(&grid(&cfg.psnr_grid, "psnr_grid")?, metric)?;
    let mut out = csv_header(cfg);
    out.push_str("psnr_db,metric,p0,rate\n");
    for s in &sweep.solutions {
        writeln!(
            out,
            "{:.6},{},{:.6},{:.6}",
            s.psnr_db,
            metric.as_str(),
            s.p0,
            s.rate
        )
        .unwrap();
    }
    Ok(out)
}

fn composition(cfg: &ExperimentConfig) -> CliResult<Composition> {
    let counts = cfg
        .counts
        .ok_or_else(|| CliError::Config("counts are required".into()))?;
    if let Some(n) = cfg.n {
        if n != counts[0] + counts[1] {
            return Err(CliError::Config(format!(
                "n = {n} but counts sum to {}",
                counts[0] + counts[1]
            )));
        }
    }
    Ok(Composition::new(counts)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcdmMode {
    Encode,
    Decode,
}

/// Maps blocks of bits to class sequences or back; ASCII lines or packed bytes.
pub fn run_ccdm(cfg: &ExperimentConfig, mode: CcdmMode, input: &[u8]) -> CliResult<Vec<u8>> {
    let c = composition(cfg)?;
    let packed = cfg.packed.unwrap_or(false);
    let in_len = if mode == CcdmMode::Encode {
        c.k()
    } else {
        c.n()
    };
    let blocks = if packed {
        formats::decode_packed_blocks(input, in_len)?
    } else {
        formats::decode_ascii_blocks(
            std::str::from_utf8(input).map_err(|e| CliError::Parse(e.to_string()))?,
        )?
    };
    let out = blocks
        .iter()
        .map(|b| match mode {
            CcdmMode::Encode => c.encode(b),
            CcdmMode::Decode => c.decode(b),
        })
        .collect::<ps4pam_core::Result<Vec<_>>>()?;
    Ok(if packed {
        formats::encode_packed_blocks(&out)
    } else {
        formats::encode_ascii_blocks(&out).into_bytes()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemTag {
    Shaped,
    Uniform,
}

impl SystemTag {
    pub fn parse(text: &str) -> CliResult<Self> {
        match text {
            "shaped" => Ok(Self::Shaped),
            "uniform" => Ok(Self::Uniform),
            other => Err(CliError::Config(format!(
                "unknown system {other:?} (shaped|uniform)"
            ))),
        }
    }

    pub fn default_rate(self) -> f64 {
        match self {
            Self::Shaped => 0.56,
            Self::Uniform => 0.5,
        }
    }
}

fn system_tag(cfg: &ExperimentConfig) -> CliResult<SystemTag> {
    SystemTag::parse(cfg.system.as_deref().unwrap_or("shaped"))
}

/// Parity-check matrix from `matrix` if given, else constructed.
pub fn code(cfg: &ExperimentConfig, rate: f64) -> CliResult<ParityCheckMatrix> {
    match &cfg.matrix {
        Some(path) => formats::read_matrix(Path::new(path)),
        None => Ok(construct_ldpc(
            cfg.blocklength.unwrap_or(DEFAULT_BLOCKLENGTH),
            rate,
            cfg.code_seed.unwrap_or(1),
        )?),
    }
}

pub fn run_ldpc(cfg: &ExperimentConfig) -> CliResult<String> {
    let rate = cfg.code_rate.unwrap_or(system_tag(cfg)?.default_rate());
    Ok(formats::encode_matrix(&code(cfg, rate)?))
}

/// PAS system of the configuration; the shaped one uses the fixed class split.
pub fn pas_system(cfg: &ExperimentConfig) -> CliResult<PasSystem> {
    let tag = system_tag(cfg)?;
    let h = code(cfg, cfg.code_rate.unwrap_or(tag.default_rate()))?;
    let gray = BitLabeling::gray(4)?;
    Ok(match tag {
        SystemTag::Shaped => {
            let d = fixed_distribution();
            let outer = d.pmf()[0] + d.pmf()[3];
            let c = Composition::from_target([outer, 1.0 - outer], h.n_cols() / 2)?;
            PasSystem::shaped(&h, c, gray)?
        }
        SystemTag::Uniform => PasSystem::uniform(&h, gray)?,
    })
}

pub fn fer_points(cfg: &ExperimentConfig) -> CliResult<Vec<FerPoint>> {
    let system = pas_system(cfg)?;
    let fer_cfg = FerConfig {
        psnr_grid: grid(&cfg.psnr_grid, "psnr_grid")?,
        min_errors: cfg.min_errors.unwrap_or(DEFAULT_MIN_ERRORS),
        max_frames: cfg.max_frames.unwrap_or(100_000),
        seed: cfg.seed(),
    };
    let max_iter = cfg.max_iter.unwrap_or(DEFAULT_MAX_ITERATIONS);
    Ok(simulate_fer_parallel(
        || PasTrial::new(&system, max_iter),
        &fer_cfg,
        FER_BATCH,
    )?)
}

/// `psnr_db,fer,frames,errors,ci_lo,ci_hi`.
pub fn fer_csv(cfg: &ExperimentConfig, points: &[FerPoint]) -> String {
    let mut out = csv_header(cfg);
    out.push_str("psnr_db,fer,frames,errors,ci_lo,ci_hi\n");
    for p in points {
        writeln!(
            out,
            "{:.6},{:.6e},{},{},{:.6e},{:.6e}",
            p.psnr_db, p.fer, p.frames, p.errors, p.ci_lo, p.ci_hi
        )
        .unwrap();
    }
    out
}

pub fn run_fer(cfg: &ExperimentConfig) -> CliResult<String> {
    Ok(fer_csv(cfg, &fer_points(cfg)?))
}

pub fn record_format(cfg: &ExperimentConfig) -> RecordFormat {
    if cfg.binary.unwrap_or(false) {
        RecordFormat::Binary
    } else {
        RecordFormat::Csv
    }
}

/// Linear AWGN record at `psnr` drawn from `dist`.
pub fn run_simulate(cfg: &ExperimentConfig) -> CliResult<SampleRecord> {
    let (tag, d) = fixed_dist(cfg, "fixed")?;
    let psnr = cfg
        .psnr
        .ok_or_else(|| CliError::Config("psnr is required".into()))?;
    let channel = ChannelModel::at_psnr_db(psnr)?;
    let mut rec = simulate_record(
        &d,
        &tag.alphabet(),
        &channel,
        cfg.samples.unwrap_or(DEFAULT_SAMPLES),
        cfg.seed(),
    )?;
    rec.meta = RecordMeta {
        baudrate: cfg.baudrate.clone().unwrap_or_default(),
        distribution: format!("{tag:?}").to_lowercase(),
        source: format!("simulated linear AWGN psnr={psnr} seed={}", cfg.seed()),
    };
    Ok(rec)
}

/// Report of `field,value` rows; the histogram is returned separately.
pub fn run_eval(cfg: &ExperimentConfig, record: &SampleRecord) -> CliResult<(String, Histogram)> {
    let (_, d) = fixed_dist(cfg, "fixed")?;
    let alphabet = PamAlphabet::pam4();
    let n_taps = cfg.taps.unwrap_or(DEFAULT_TAPS);
    let rep = evaluate_recording(record, &d, &alphabet, &BitLabeling::gray(4)?, n_taps)?;
    let hist = if cfg.bins.is_some_and(|b| b != rep.histogram.bins()) {
        let z = ps4pam_core::dsp::apply_ffe(record.y(), &rep.taps);
        ps4pam_core::dsp::histogram(record.x(), &z, 4, cfg.bins.unwrap_or(DEFAULT_BINS))?
    } else {
        rep.histogram.clone()
    };
    let mut out = csv_header(cfg);
    out.push_str("field,value\n");
    writeln!(out, "source,{}", rep.meta.source).unwrap();
    writeln!(out, "distribution,{}", rep.meta.distribution).unwrap();
    writeln!(out, "baudrate,{}", rep.meta.baudrate).unwrap();
    writeln!(out, "samples,{}", record.len()).unwrap();
    writeln!(out, "rate_smd_hat,{:.6}", rep.rate_smd_hat).unwrap();
    writeln!(out, "rate_bmd_hat,{:.6}", rep.rate_bmd_hat).unwrap();
    writeln!(out, "low_count_warning,{}", rep.air.low_count_warning).unwrap();
    for (k, t) in rep.taps.taps().iter().enumerate() {
        writeln!(out, "tap_{k},{t:.9}").unwrap();
    }
    Ok((out, hist))
}

/// `bin_lo,bin_hi,x0,x1,...` with a trailing `empty` row flagging absent points.
pub fn histogram_csv(cfg: &ExperimentConfig, h: &Histogram) -> String {
    let mut out = csv_header(cfg);
    let cols: Vec<String> = (0..h.counts.len()).map(|i| format!("x{i}")).collect();
    writeln!(out, "bin_lo,bin_hi,{}", cols.join(",")).unwrap();
    for b in 0..h.bins() {
        let row: Vec<String> = h.counts.iter().map(|c| c[b].to_string()).collect();
        writeln!(
            out,
            "{:.6},{:.6},{}",
            h.edges[b],
            h.edges[b + 1],
            row.join(",")
        )
        .unwrap();
    }
    if h.empty.iter().any(|&e| e) {
        let flags: Vec<&str> = h
            .empty
            .iter()
            .map(|&e| if e { "empty" } else { "" })
            .collect();
        writeln!(out, ",,{}", flags.join(",")).unwrap();
    }
    out
}

/// `attenuation_db,sigma,rate_smd_hat,rate_bmd_hat` plus commented 1-bpcu crossings.
pub fn run_b2b(cfg: &ExperimentConfig) -> CliResult<String> {
    let (tag, d) = fixed_dist(cfg, "fixed")?;
    let grid = grid(&cfg.att_grid, "att_grid")?;
    let sigma_ref = sigma_from_psnr_db(cfg.psnr_ref.unwrap_or(20.0));
    let pts = b2b_sweep(
        &d,
        &tag.alphabet(),
        &BitLabeling::gray(4)?,
        sigma_ref,
        &grid,
        cfg.samples.unwrap_or(DEFAULT_SAMPLES),
        cfg.taps.unwrap_or(DEFAULT_TAPS),
        cfg.seed(),
    )?;
    let mut out = csv_header(cfg);
    out.push_str("attenuation_db,sigma,rate_smd_hat,rate_bmd_hat\n");
    for p in &pts {
        writeln!(
            out,
            "{:.6},{:.6},{:.6},{:.6}",
            p.attenuation_db, p.sigma, p.rate_smd_hat, p.rate_bmd_hat
        )
        .unwrap();
    }
    for m in [Metric::Smd, Metric::Bmd] {
        if let Some(a) = attenuation_at_rate(&pts, 1.0, m) {
            writeln!(out, "# {} reaches 1 bpcu up to {a:.4} dB", m.as_str()).unwrap();
        }
    }
    Ok(out)
}
