use std::fmt;

use thiserror::Error;

/// Which side of a peak a half-maximum crossing was searched on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("outside formula domain: {0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("no interior peak: {0}")]
    NoPeak(String),
    #[error("half-maximum crossing on the {side} side not bracketed in [0, {t_end}]")]
    Window { side: Side, t_end: f64 },
}

impl Error {
    /// True for errors caused by bad user input rather than by the numerics.
    pub fn is_parameter_error(&self) -> bool {
        matches!(self, Error::Parameter(_) | Error::Domain(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
