use std::path::PathBuf;

use crate::scene::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("invalid scene: {}", format_violations(.0))]
    InvalidScene(Vec<Violation>),

    #[error("invalid {what}: {message}")]
    Invalid { what: &'static str, message: String },

    #[error("unknown paint code `{0}`")]
    UnknownPaint(String),

    #[error("duplicate panel_code `{0}`")]
    DuplicatePaint(String),

    #[error("no points in ROI")]
    EmptyRoi,

    #[error("error-record set is empty")]
    NoRecords,

    #[error("ground-truth object `{id}` falls outside every populated bin and fallback is disabled")]
    NoBin { id: String },

    #[error("malformed CSV in {origin}")]
    Csv {
        origin: String,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(origin: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Error::Parse {
            origin: origin.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn csv(origin: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv {
            origin: origin.into(),
            source,
        }
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
