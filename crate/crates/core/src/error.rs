use std::io;

use crate::label::UnknownBehavior;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("projection is singular (w = {w:e})")]
    SingularProjection { w: f64 },

    #[error("homography is singular (|det| = {det:e})")]
    SingularHomography { det: f64 },

    #[error("stale event `{name}` at t={t}; window starts at {window_start}")]
    StaleEvent { name: String, t: u64, window_start: u64 },

    #[error("time {t} is outside the window [{start},{end})")]
    OutOfWindow { t: u64, start: u64, end: u64 },

    #[error("undeclared symbol `{0}`")]
    Undeclared(String),

    #[error("rule syntax error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("rule set is not stratifiable: cycle through {0}")]
    Unstratifiable(String),

    #[error("frame index not increasing for {series}: {prev} then {next}")]
    NonMonotonicFrames { series: String, prev: u64, next: u64 },

    #[error("snapshot has no value for `{0}`")]
    MissingSnapshot(String),

    #[error("formula has no clauses")]
    EmptyFormula,

    #[error("unknown micro-behavior `{0}`")]
    UnknownMicroBehavior(String),

    #[error("ground truth and estimates share no frames")]
    NoOverlap,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Behavior(#[from] UnknownBehavior),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

/// Adds a context message to the error side of a result.
pub trait ResultExt<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context(self, f: impl FnOnce() -> String) -> Result<T> {
        self.map_err(|e| e.context(f()))
    }
}
