use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ps4pam::config::{parse_counts, ExperimentConfig};
use ps4pam::error::{CliError, CliResult};
use ps4pam::experiments::{self, CcdmMode};
use ps4pam::formats;
use ps4pam::parallel::{workers_from_env, WORKERS_ENV};

#[derive(Parser)]
#[command(
    name = "ps4pam",
    version,
    about = "Probabilistic shaping experiments for 4-PAM IM/DD links"
)]
struct Cli {
    /// JSON configuration file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default stdout).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Achievable rates of a distribution over a PSNR grid.
    Rates(RatesArgs),
    /// Optimal symmetric distribution over a PSNR grid.
    Optimize(OptimizeArgs),
    /// Constant composition distribution matcher.
    Ccdm(CcdmArgs),
    /// Construct an LDPC parity-check matrix.
    Ldpc(CodeArgs),
    /// Coded frame error rate campaign.
    Fer(FerArgs),
    /// Write a synthetic transmit/receive record.
    Simulate(SimulateArgs),
    /// Equalize a record and estimate achievable rates.
    Eval(EvalArgs),
    /// Simulated back-to-back attenuation sweep.
    B2b(B2bArgs),
}

#[derive(Args)]
struct RatesArgs {
    #[arg(long)]
    metric: Option<String>,
    /// uniform|fixed|optimal|exp|ook|3pam
    #[arg(long)]
    dist: Option<String>,
    /// lo:hi:step in dB
    #[arg(long)]
    psnr_grid: Option<String>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    metric: Option<String>,
    #[arg(long)]
    psnr_grid: Option<String>,
}

#[derive(Args)]
struct CcdmArgs {
    #[arg(value_parser = ["encode", "decode"])]
    mode: String,
    #[arg(long)]
    n: Option<usize>,
    /// Class counts `n0,n1`.
    #[arg(long, value_parser = parse_counts_arg)]
    counts: Option<[usize; 2]>,
    /// Bit-packed blocks instead of ASCII lines.
    #[arg(long)]
    packed: bool,
    /// Input file (default stdin).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct CodeArgs {
    /// shaped (rate 0.56) or uniform (rate 1/2)
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    blocklength: Option<usize>,
    #[arg(long)]
    code_rate: Option<f64>,
    #[arg(long)]
    code_seed: Option<u64>,
}

#[derive(Args)]
struct FerArgs {
    #[command(flatten)]
    code: CodeArgs,
    /// Parity-check matrix file instead of constructing one.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    psnr_grid: Option<String>,
    #[arg(long)]
    min_errors: Option<usize>,
    #[arg(long)]
    max_frames: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    /// uniform|fixed|exp
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    psnr: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    baudrate: Option<String>,
    /// Binary record instead of CSV.
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Record file; its `.json` sidecar supplies the metadata.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    taps: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    /// Histogram CSV destination.
    #[arg(long)]
    hist_output: Option<PathBuf>,
    /// Read the record as binary when it has no sidecar.
    #[arg(long)]
    binary: bool,
}

#[derive(Args)]
struct B2bArgs {
    #[arg(long)]
    dist: Option<String>,
    /// lo:hi:step attenuation in dB
    #[arg(long)]
    att_grid: Option<String>,
    /// PSNR at zero attenuation.
    #[arg(long)]
    psnr_ref: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    taps: Option<usize>,
}

fn parse_counts_arg(s: &str) -> Result<[usize; 2], String> {
    parse_counts(s).map_err(|e| e.to_string())
}

fn path_str(p: &Option<PathBuf>) -> Option<String> {
    p.as_ref().map(|p| p.display().to_string())
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

impl Cli {
    fn flags(&self) -> ExperimentConfig {
        let mut f = ExperimentConfig {
            seed: self.seed,
            output: path_str(&self.output),
            ..Default::default()
        };
        let code = |f: &mut ExperimentConfig, c: &CodeArgs| {
            f.system = c.system.clone();
            f.blocklength = c.blocklength;
            f.code_rate = c.code_rate;
            f.code_seed = c.code_seed;
        };
        match &self.command {
            Command::Rates(a) => {
                f.metric = a.metric.clone();
                f.dist = a.dist.clone();
                f.psnr_grid = a.psnr_grid.clone();
            }
            Command::Optimize(a) => {
                f.metric = a.metric.clone();
                f.psnr_grid = a.psnr_grid.clone();
            }
            Command::Ccdm(a) => {
                f.n = a.n;
                f.counts = a.counts;
                f.packed = flag(a.packed);
                f.input = path_str(&a.input);
            }
            Command::Ldpc(a) => code(&mut f, a),
            Command::Fer(a) => {
                code(&mut f, &a.code);
                f.matrix = path_str(&a.matrix);
                f.psnr_grid = a.psnr_grid.clone();
                f.min_errors = a.min_errors;
                f.max_frames = a.max_frames;
                f.max_iter = a.max_iter;
            }
            Command::Simulate(a) => {
                f.dist = a.dist.clone();
                f.psnr = a.psnr;
                f.samples = a.samples;
                f.baudrate = a.baudrate.clone();
                f.binary = flag(a.binary);
            }
            Command::Eval(a) => {
                f.input = path_str(&a.input);
                f.dist = a.dist.clone();
                f.taps = a.taps;
                f.bins = a.bins;
                f.hist_output = path_str(&a.hist_output);
                f.binary = flag(a.binary);
            }
            Command::B2b(a) => {
                f.dist = a.dist.clone();
                f.att_grid = a.att_grid.clone();
                f.psnr_ref = a.psnr_ref;
                f.samples = a.samples;
                f.taps = a.taps;
            }
        }
        f
    }
}

fn write_out(cfg: &ExperimentConfig, bytes: &[u8]) -> CliResult<()> {
    match &cfg.output {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(Path::new(p), e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn read_input(cfg: &ExperimentConfig) -> CliResult<Vec<u8>> {
    match &cfg.input {
        Some(p) => std::fs::read(p).map_err(|e| CliError::io(Path::new(p), e)),
        None => {
            let mut buf = Vec::new();
            std::io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| CliError::io(Path::new("<stdin>"), e))?;
            Ok(buf)
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let base = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    let cfg = base.overlay(&cli.flags());
    eprintln!("config {}", cfg.to_json());
    if let Some(n) = workers_from_env() {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("{WORKERS_ENV}: {e}")))?;
    }
    match &cli.command {
        Command::Rates(_) => write_out(&cfg, experiments::run_rates(&cfg)?.as_bytes()),
        Command::Optimize(_) => write_out(&cfg, experiments::run_optimize(&cfg)?.as_bytes()),
        Command::Ccdm(a) => {
            let mode = if a.mode == "encode" {
                CcdmMode::Encode
            } else {
                CcdmMode::Decode
            };
            let out = experiments::run_ccdm(&cfg, mode, &read_input(&cfg)?)?;
            write_out(&cfg, &out)
        }
        Command::Ldpc(_) => write_out(&cfg, experiments::run_ldpc(&cfg)?.as_bytes()),
        Command::Fer(_) => write_out(&cfg, experiments::run_fer(&cfg)?.as_bytes()),
        Command::Simulate(_) => {
            let rec = experiments::run_simulate(&cfg)?;
            let path = cfg
                .output
                .as_deref()
                .ok_or_else(|| CliError::Config("simulate needs --output".into()))?;
            formats::write_record(Path::new(path), &rec, experiments::record_format(&cfg))
        }
        Command::Eval(_) => {
            let input = cfg
                .input
                .as_deref()
                .ok_or_else(|| CliError::Config("eval needs --input".into()))?;
            let rec = formats::read_record(Path::new(input), experiments::record_format(&cfg), 4)?;
            let (report, hist) = experiments::run_eval(&cfg, &rec)?;
            if let Some(p) = &cfg.hist_output {
                std::fs::write(p, experiments::histogram_csv(&cfg, &hist))
                    .map_err(|e| CliError::io(Path::new(p), e))?;
            }
            write_out(&cfg, report.as_bytes())
        }
        Command::B2b(_) => write_out(&cfg, experiments::run_b2b(&cfg)?.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
