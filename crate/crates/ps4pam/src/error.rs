use std::path::Path;

use ps4pam_core::Error as CoreError;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit status; 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Core(CoreError::Config(_)) => 3,
            Self::Parse(_) => 4,
            Self::Io { .. } => 5,
            Self::Core(e) => match e {
                CoreError::Domain(_)
                | CoreError::InvalidDistribution(_)
                | CoreError::LengthMismatch { .. } => 6,
                CoreError::CompositionMismatch { .. } | CoreError::NotInImage => 7,
                CoreError::Unreachable { .. } => 8,
                CoreError::CodeParameters(_) | CoreError::GirthUnreachable { .. } => 9,
                CoreError::IllConditioned => 10,
                CoreError::Config(_) => 3,
            },
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            3 => "config",
            4 => "parse",
            5 => "io",
            6 => "domain",
            7 => "matcher",
            8 => "unreachable",
            9 => "code",
            10 => "ill_conditioned",
            _ => "internal",
        }
    }

    /// One-line JSON report for stderr.
    pub fn machine_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            code: i32,
            message: String,
        }
        serde_json::to_string(&Line {
            error: self.kind(),
            code: self.exit_code(),
            message: self.to_string(),
        })
        .expect("plain struct serializes")
    }
}
