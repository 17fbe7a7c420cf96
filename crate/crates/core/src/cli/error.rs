use std::fmt::Debug;

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::decoder::DecodeError;
use crate::encoder::EncodeError;
use crate::eval::EvalError;
use crate::flow::FlowError;
use crate::mask::MaskError;
use crate::metrics::MetricError;
use crate::store::StoreError;
use crate::types::ParamErrors;

/// A failed command: invalid input (exit 2) or an I/O failure (exit 3).
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input{}: {kind}: {message}", .path.as_ref().map(|p| format!(" at `{p}`")).unwrap_or_default())]
    Validation {
        path: Option<String>,
        kind: String,
        message: String,
    },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn invalid(path: impl Into<String>, kind: &str, message: impl ToString) -> Self {
        CliError::Validation {
            path: Some(path.into()),
            kind: kind.to_string(),
            message: message.to_string(),
        }
    }

    /// The same error reported under `path` when it carries none yet.
    pub fn at(self, path: &str) -> Self {
        match self {
            CliError::Validation { path: None, kind, message } => CliError::Validation {
                path: Some(path.to_string()),
                kind,
                message,
            },
            other => other,
        }
    }
}

/// The variant name of an error enum, e.g. `DegenerateShape`.
fn kind_of<E: Debug>(e: &E) -> String {
    let debug = format!("{e:?}");
    debug
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .next()
        .unwrap_or_default()
        .to_string()
}

fn unplaced<E: Debug + ToString>(e: E) -> CliError {
    CliError::Validation {
        path: None,
        kind: kind_of(&e),
        message: e.to_string(),
    }
}

impl From<StoreError> for CliError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io { .. } => CliError::Io(e.to_string()),
            StoreError::SchemaViolation { path, message } => CliError::invalid(path, "SchemaViolation", message),
            other => unplaced(other),
        }
    }
}

impl From<MaskError> for CliError {
    fn from(e: MaskError) -> Self {
        match e {
            MaskError::Io(_) => CliError::Io(e.to_string()),
            other => unplaced(other),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidResponse { path, reason } => CliError::invalid(path, "InvalidResponse", reason),
            other => unplaced(other),
        }
    }
}

impl From<ParamErrors> for CliError {
    fn from(e: ParamErrors) -> Self {
        CliError::invalid("params", "InvalidParams", e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Params(p) => p.into(),
            DatasetError::Mask(m) => CliError::from(m).at("source"),
            DatasetError::Encode(x) => x.into(),
            DatasetError::Store(s) => s.into(),
            DatasetError::Labels(l) => CliError::from(l).at("labels"),
            DatasetError::MissingLabels(_) => CliError::invalid("labels", "MissingLabels", e),
            DatasetError::Metric { video_id, source } => CliError::from(source).at(&video_id),
        }
    }
}

macro_rules! unplaced_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                unplaced(e)
            }
        })*
    };
}

unplaced_from!(MetricError, DecodeError, FlowError, EncodeError);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Wraps an I/O error with the path it concerns.
pub(crate) fn io_at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", path.display()))
}
