use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row {row}: {message}")]
    MalformedRow { row: u64, message: String },

    #[error("need at least 2 distinct class labels, found {0}")]
    TooFewClasses(usize),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("feature {feature} is constant; cannot fit a scaler")]
    DegenerateFeature { feature: usize },

    #[error("non-finite coordinate")]
    NonFinite,

    #[error("empty class label")]
    EmptyLabel,

    #[error("unknown class label {0:?}")]
    UnknownLabel(String),

    #[error("class {label:?} has {count} point(s); need at least {needed}")]
    ClassTooSmall {
        label: String,
        count: usize,
        needed: usize,
    },

    #[error("expected {expected} noise sigmas, got {got}")]
    NoiseArity { expected: usize, got: usize },

    #[error("mesh size {0} must be a power of two and at least 8")]
    InvalidMesh(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field dimensions do not match ({0} vs {1})")]
    GridMismatch(usize, usize),

    #[error("inverse transform left an imaginary residue of {residue:e} (threshold {threshold:e})")]
    ImaginaryResidue { residue: f64, threshold: f64 },

    #[error("correlation undefined: field has zero variance")]
    ZeroVariance,
}
