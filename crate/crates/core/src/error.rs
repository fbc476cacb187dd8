use std::path::PathBuf;

use crate::time::SimTime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("failed to parse config: {0}")]
    ConfigParse(String),

    #[error("event scheduled in the past: at {at}, clock is {now}")]
    ScheduledInPast { at: SimTime, now: SimTime },

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("radar query across lanes ({ego} vs {front})")]
    LaneMismatch { ego: u32, front: u32 },

    #[error("vehicle {0} started a transmission while already transmitting")]
    HalfDuplex(u32),

    #[error("CACC evaluated before {0} view was populated")]
    UnpopulatedView(&'static str),

    #[error("CBR window {window} has not elapsed (clock {now})")]
    WindowNotElapsed { window: usize, now: SimTime },

    #[error("busy interval recorded out of order: start {start} precedes {last}")]
    OutOfOrderInterval { start: u64, last: u64 },

    #[error("string-stability window [{from}, {to}] lies outside the trace")]
    WindowOutsideTrace { from: f64, to: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Configuration problems are user errors; everything else points at a
    /// broken simulation invariant.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::ConfigParse(_) | Error::Io { .. } | Error::Csv { .. }
        )
    }
}
