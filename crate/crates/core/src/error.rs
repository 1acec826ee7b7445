use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value in {what} at index {index}")]
    NonFinite { what: String, index: usize },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: String,
        left: usize,
        right: usize,
    },

    #[error("empty contrast group: attribute `{attribute}`, group {group}")]
    EmptyGroup { attribute: String, group: String },

    #[error("unknown protected attribute `{0}`")]
    UnknownAttribute(String),

    #[error("{what} = {value} is outside {range}")]
    OutOfRange {
        what: String,
        value: f64,
        range: String,
    },

    #[error("{0}")]
    InvalidInput(String),

    #[error(
        "no perfectly fair model (fairness == 1) in the model set; \
         add the constant (intercept-only) model or enable append_constant_model"
    )]
    NoPerfectlyFairModel,

    #[error("weight function has zero total mass on [0, 1]")]
    ZeroNormalizer,

    #[error("the point mass at zero has no segment mass; evaluate it as TAF(0)")]
    PointMassSegment,

    #[error("singular stacking system: {0}")]
    Singular(String),

    #[error("gradient descent diverged (objective increased at iteration {iteration}); reduce the step size")]
    Diverged { iteration: usize },

    #[error("all cross-validation folds were skipped: {0}")]
    AllFoldsSkipped(String),

    #[error("config key `{key}`: {msg}")]
    Config { key: String, msg: String },

    #[error("{file}: row {row}, column {column}: {msg}")]
    Parse {
        file: String,
        row: usize,
        column: String,
        msg: String,
    },

    #[error("{file}: {msg}")]
    Format { file: String, msg: String },

    #[error("oracle disagreement: {0}")]
    OracleMismatch(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Input and validation errors, as opposed to I/O or internal failures.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::Json(_) | Error::OracleMismatch(_) | Error::Diverged { .. } => false,
            _ => true,
        }
    }

    /// Short machine-readable code used in diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "non_finite",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::EmptyGroup { .. } => "empty_group",
            Error::UnknownAttribute(_) => "unknown_attribute",
            Error::OutOfRange { .. } => "out_of_range",
            Error::InvalidInput(_) => "invalid_input",
            Error::NoPerfectlyFairModel => "no_fair_model",
            Error::ZeroNormalizer => "zero_normalizer",
            Error::PointMassSegment => "point_mass_segment",
            Error::Singular(_) => "singular",
            Error::Diverged { .. } => "diverged",
            Error::AllFoldsSkipped(_) => "all_folds_skipped",
            Error::Config { .. } => "config",
            Error::Parse { .. } => "parse",
            Error::Format { .. } => "format",
            Error::OracleMismatch(_) => "oracle_mismatch",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn out_of_range(what: impl Into<String>, value: f64, range: &str) -> Self {
        Error::OutOfRange {
            what: what.into(),
            value,
            range: range.to_string(),
        }
    }
}

pub(crate) fn check_len(what: &str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch {
            what: what.to_string(),
            left,
            right,
        });
    }
    Ok(())
}
