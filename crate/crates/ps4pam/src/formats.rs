//! On-disk formats: CSV headers, sample records, parity-check matrices and
//! bit streams.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ps4pam_core::dsp::{RecordMeta, SampleRecord};
use ps4pam_core::ldpc::ParityCheckMatrix;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::VERSION;

/// Comment line opening every CSV artifact.
pub fn csv_header(cfg: &ExperimentConfig) -> String {
    format!(
        "# ps4pam {VERSION} config={} seed={}\n",
        cfg.hash(),
        cfg.seed()
    )
}

/// Bytes per sample in the packed record format.
pub const BINARY_SAMPLE_BYTES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    Csv,
    Binary,
}

/// Metadata stored next to a record as `<file>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub version: u32,
    pub format: RecordFormat,
    pub length: usize,
    pub baudrate: String,
    pub distribution: String,
    pub source: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn encode_record_csv(rec: &SampleRecord) -> String {
    let mut out = String::with_capacity(rec.len() * 24);
    out.push_str("x,y\n");
    for (&x, &y) in rec.x().iter().zip(rec.y()) {
        writeln!(out, "{x},{y:?}").expect("writing to a String");
    }
    out
}

/// Little-endian `u8` index followed by `f64` sample, per symbol.
pub fn encode_record_binary(rec: &SampleRecord) -> Vec<u8> {
    let mut out = Vec::with_capacity(rec.len() * BINARY_SAMPLE_BYTES);
    for (&x, &y) in rec.x().iter().zip(rec.y()) {
        out.push(x);
        out.extend_from_slice(&y.to_le_bytes());
    }
    out
}

pub fn decode_record_csv(text: &str) -> CliResult<(Vec<u8>, Vec<f64>)> {
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next().map(str::trim) {
        Some("x,y") => {}
        other => {
            return Err(CliError::Parse(format!(
                "record header must be \"x,y\", found {other:?}"
            )))
        }
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let (x, y) = line
            .split_once(',')
            .ok_or_else(|| CliError::Parse(format!("record line {}: expected x,y", i + 2)))?;
        xs.push(
            x.trim()
                .parse::<u8>()
                .map_err(|e| CliError::Parse(format!("record line {}: {e}", i + 2)))?,
        );
        ys.push(
            y.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Parse(format!("record line {}: {e}", i + 2)))?,
        );
    }
    Ok((xs, ys))
}

pub fn decode_record_binary(bytes: &[u8]) -> CliResult<(Vec<u8>, Vec<f64>)> {
    if bytes.len() % BINARY_SAMPLE_BYTES != 0 {
        return Err(CliError::Parse(format!(
            "binary record of {} bytes is not a multiple of {BINARY_SAMPLE_BYTES}",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(BINARY_SAMPLE_BYTES)
        .map(|c| {
            (
                c[0],
                f64::from_le_bytes(c[1..].try_into().expect("8-byte slice")),
            )
        })
        .unzip())
}

pub fn write_record(path: &Path, rec: &SampleRecord, format: RecordFormat) -> CliResult<()> {
    match format {
        RecordFormat::Csv => write(path, encode_record_csv(rec).as_bytes())?,
        RecordFormat::Binary => write(path, &encode_record_binary(rec))?,
    }
    let side = Sidecar {
        version: 1,
        format,
        length: rec.len(),
        baudrate: rec.meta.baudrate.clone(),
        distribution: rec.meta.distribution.clone(),
        source: rec.meta.source.clone(),
    };
    let json = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    write(&sidecar_path(path), json.as_bytes())
}

/// Reads a record; the sidecar, when present, supplies metadata and format,
/// otherwise `fallback` decides the format and metadata stays empty.
pub fn read_record(
    path: &Path,
    fallback: RecordFormat,
    cardinality: usize,
) -> CliResult<SampleRecord> {
    let side_path = sidecar_path(path);
    let side: Option<Sidecar> = if side_path.exists() {
        let text =
            String::from_utf8(read(&side_path)?).map_err(|e| CliError::Parse(e.to_string()))?;
        Some(
            serde_json::from_str(&text)
                .map_err(|e| CliError::Parse(format!("{}: {e}", side_path.display())))?,
        )
    } else {
        None
    };
    let format = side.as_ref().map_or(fallback, |s| s.format);
    let bytes = read(path)?;
    let (x, y) = match format {
        RecordFormat::Csv => decode_record_csv(
            &String::from_utf8(bytes).map_err(|e| CliError::Parse(e.to_string()))?,
        )?,
        RecordFormat::Binary => decode_record_binary(&bytes)?,
    };
    let meta = match &side {
        Some(s) => {
            if s.length != x.len() {
                return Err(CliError::Parse(format!(
                    "sidecar length {} but {} samples",
                    s.length,
                    x.len()
                )));
            }
            RecordMeta {
                baudrate: s.baudrate.clone(),
                distribution: s.distribution.clone(),
                source: s.source.clone(),
            }
        }
        None => RecordMeta {
            source: path.display().to_string(),
            ..RecordMeta::default()
        },
    };
    Ok(SampleRecord::new(x, y, cardinality, meta)?)
}

const MATRIX_MAGIC: &str = "# ps4pam-ldpc 1";

/// One line of space-separated column indices per check, after a header
/// recording size, seed, lifting and girth.
pub fn encode_matrix(h: &ParityCheckMatrix) -> String {
    let mut out = String::new();
    writeln!(out, "{MATRIX_MAGIC}").unwrap();
    writeln!(
        out,
        "# n={} m={} seed={} lifting={} girth={} rank={}",
        h.n_cols(),
        h.n_rows(),
        h.seed(),
        h.lifting(),
        h.girth().map_or("none".to_string(), |g| g.to_string()),
        h.rank()
    )
    .unwrap();
    for row in h.rows() {
        let cols: Vec<String> = row.iter().map(u32::to_string).collect();
        writeln!(out, "{}", cols.join(" ")).unwrap();
    }
    out
}

pub fn decode_matrix(text: &str) -> CliResult<ParityCheckMatrix> {
    let mut lines = text.lines();
    if lines.next() != Some(MATRIX_MAGIC) {
        return Err(CliError::Parse("missing matrix header".into()));
    }
    let fields = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or_else(|| CliError::Parse("missing matrix parameters".into()))?;
    let get = |key: &str| -> CliResult<&str> {
        fields
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| CliError::Parse(format!("matrix header lacks {key}")))
    };
    let num = |key: &str| -> CliResult<u64> {
        get(key)?
            .parse()
            .map_err(|e| CliError::Parse(format!("{key}: {e}")))
    };
    let (n, m, seed, lifting) = (
        num("n")? as usize,
        num("m")? as usize,
        num("seed")?,
        num("lifting")? as usize,
    );
    let girth = get("girth")?;
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split_whitespace()
                .map(|c| {
                    c.parse::<u32>()
                        .map_err(|e| CliError::Parse(format!("matrix entry {c:?}: {e}")))
                })
                .collect::<CliResult<Vec<u32>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    if rows.len() != m {
        return Err(CliError::Parse(format!(
            "header says {m} checks, found {}",
            rows.len()
        )));
    }
    let h = ParityCheckMatrix::from_rows(n, rows, seed, lifting)?;
    let found = h.girth().map_or("none".to_string(), |g| g.to_string());
    if found != girth {
        return Err(CliError::Parse(format!(
            "header girth {girth} but matrix has girth {found}"
        )));
    }
    Ok(h)
}

pub fn read_matrix(path: &Path) -> CliResult<ParityCheckMatrix> {
    let bytes = read(path)?;
    decode_matrix(&String::from_utf8(bytes).map_err(|e| CliError::Parse(e.to_string()))?)
}

/// ASCII bit blocks: one block per line, characters `0`/`1`.
pub fn decode_ascii_blocks(text: &str) -> CliResult<Vec<Vec<u8>>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.bytes()
                .map(|b| match b {
                    b'0' => Ok(0),
                    b'1' => Ok(1),
                    _ => Err(CliError::Parse(format!(
                        "unexpected character {:?} in bit stream",
                        b as char
                    ))),
                })
                .collect()
        })
        .collect()
}

pub fn encode_ascii_blocks(blocks: &[Vec<u8>]) -> String {
    let mut out = String::new();
    for b in blocks {
        out.extend(b.iter().map(|&v| if v == 1 { '1' } else { '0' }));
        out.push('\n');
    }
    out
}

/// Packed bit blocks: each block of `len` bits padded to whole bytes, MSB first.
pub fn decode_packed_blocks(bytes: &[u8], len: usize) -> CliResult<Vec<Vec<u8>>> {
    let stride = len.div_ceil(8);
    if stride == 0 {
        return Ok(Vec::new());
    }
    if bytes.len() % stride != 0 {
        return Err(CliError::Parse(format!(
            "{} bytes is not a whole number of {stride}-byte blocks",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(stride)
        .map(|c| ps4pam_core::ccdm::unpack_bits(c, len))
        .collect())
}

pub fn encode_packed_blocks(blocks: &[Vec<u8>]) -> Vec<u8> {
    blocks
        .iter()
        .flat_map(|b| ps4pam_core::ccdm::pack_bits(b))
        .collect()
}
