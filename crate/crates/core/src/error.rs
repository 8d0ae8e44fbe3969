use std::fmt;

use serde::Serialize;

/// Pipeline stage an error surfaced from. Carried through to API payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Parse,
    Translate,
    Plan,
    Execute,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Parse => "parse",
            Stage::Translate => "translate",
            Stage::Plan => "plan",
            Stage::Execute => "execute",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("lex error at byte {offset}: {message}")]
    Lex { offset: usize, message: String },

    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("cannot translate `{utterance}`: {reason}")]
    Untranslatable { utterance: String, reason: String },

    #[error("translator error: {0}")]
    Translator(String),

    #[error("{kind} not found: {name}")]
    NotFound { kind: &'static str, name: String },

    #[error("catalog error: {0}")]
    Catalog(String),

    #[error("planning error: {0}")]
    Plan(String),

    #[error("access denied: principal `{principal}` may not read `{table}`")]
    AccessDenied { principal: String, table: String },

    #[error("predicate dialect {got} not accepted by {source_name} (expects {expected})")]
    DialectMismatch {
        source_name: String,
        expected: String,
        got: String,
    },

    #[error("source `{source_name}` failed: {message}")]
    Source { source_name: String, message: String },

    #[error("source `{source_name}` returned a partial result: {message}")]
    PartialResult { source_name: String, message: String },

    #[error("source `{source_name}` does not support enumeration")]
    EnumerationUnsupported { source_name: String },

    #[error("probe for value {value} failed: {cause}")]
    Probe { value: String, cause: Box<Error> },

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("workspace error: {0}")]
    Workspace(String),

    #[error("fixture error in {path}: {message}")]
    Fixture { path: String, message: String },

    #[error("benchmark query {query}: {message}")]
    Bench { query: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn not_found(kind: &'static str, name: impl Into<String>) -> Self {
        Error::NotFound {
            kind,
            name: name.into(),
        }
    }

    pub fn source_failure(source_name: &str, message: impl Into<String>) -> Self {
        Error::Source {
            source_name: source_name.to_string(),
            message: message.into(),
        }
    }

    pub fn stage(&self) -> Stage {
        match self {
            Error::Lex { .. } | Error::Parse { .. } => Stage::Parse,
            Error::Untranslatable { .. } | Error::Translator(_) => Stage::Translate,
            Error::NotFound { .. } | Error::Plan(_) | Error::Catalog(_) => Stage::Plan,
            Error::Probe { cause, .. } => match cause.stage() {
                Stage::Execute => Stage::Execute,
                other => other,
            },
            _ => Stage::Execute,
        }
    }

    /// Byte offset into the statement text, for positioned errors.
    pub fn offset(&self) -> Option<usize> {
        match self {
            Error::Lex { offset, .. } | Error::Parse { offset, .. } => Some(*offset),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
