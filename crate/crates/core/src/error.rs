use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution field `{field}`: {reason}")]
    InvalidDistribution { field: String, reason: String },

    #[error("target is not absolutely continuous w.r.t. proposal at atom {index} (p = 0, q = {q})")]
    NotAbsolutelyContinuous { index: usize, q: f64 },

    #[error("normalizer unknown: {0} needs a normalized density ratio")]
    NormalizerUnknown(&'static str),

    #[error("`{name}` = {value} is outside its domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("`{name}` = {value} is outside the attainable range [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("rejection requires bounded ratio")]
    UnboundedRatio,

    #[error("{0} is only available for finite-alphabet pairs")]
    FiniteOnly(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("symbol {symbol} outside alphabet of size {size}")]
    SymbolOutOfAlphabet { symbol: usize, size: usize },

    #[error("malformed codeword at bit offset {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error("unknown suite group `{0}`")]
    UnknownGroup(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("spec file: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        name,
        value,
        domain,
    }
}
