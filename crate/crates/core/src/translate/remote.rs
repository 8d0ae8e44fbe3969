//! Model-backed translation behind a transport, plus a recorded-response
//! transport for tests.
//!
//! Recorded files are newline-delimited JSON, one object per line:
//! `{"key": <sha256 hex of the canonical request>, "request": {...}, "response": {...}}`.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::predicate::PredExpr;
use crate::table::ColumnSchema;

use super::{
    Dialect, NativePredicate, TokenUsage, TranslationTrace, Translator, TranslatorColumn,
    TranslatorIdentity,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub utterance: String,
    pub columns: Vec<String>,
    pub dialect: Dialect,
}

impl RemoteRequest {
    /// Hex sha256 over the request's compact JSON encoding.
    pub fn key(&self) -> String {
        let canonical = serde_json::to_string(self).expect("request serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteResponse {
    pub body: PredExpr,
    pub token_in: u64,
    pub token_out: u64,
    pub cost: f64,
}

pub trait Transport: Send + Sync {
    fn send(&self, request: &RemoteRequest) -> Result<RemoteResponse>;
}

#[derive(Debug, Serialize, Deserialize)]
struct Recorded {
    key: String,
    request: RemoteRequest,
    response: RemoteResponse,
}

/// Replays responses captured earlier; unknown requests are errors.
#[derive(Debug, Default)]
pub struct RecordedTransport {
    entries: HashMap<String, RemoteResponse>,
}

impl RecordedTransport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| Error::Fixture {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let r: Recorded = serde_json::from_str(line)?;
            if r.request.key() != r.key {
                return Err(Error::Translator(format!(
                    "recorded key {} does not match its request",
                    r.key
                )));
            }
            entries.insert(r.key, r.response);
        }
        Ok(RecordedTransport { entries })
    }

    pub fn record_line(request: &RemoteRequest, response: &RemoteResponse) -> String {
        serde_json::to_string(&Recorded {
            key: request.key(),
            request: request.clone(),
            response: response.clone(),
        })
        .expect("record serializes")
    }
}

impl Transport for RecordedTransport {
    fn send(&self, request: &RemoteRequest) -> Result<RemoteResponse> {
        self.entries
            .get(&request.key())
            .cloned()
            .ok_or_else(|| Error::Translator(format!("no recorded response for `{}`", request.utterance)))
    }
}

pub struct RemoteTranslator {
    model: String,
    transport: Box<dyn Transport>,
}

impl RemoteTranslator {
    pub fn new(model: impl Into<String>, transport: Box<dyn Transport>) -> Self {
        RemoteTranslator {
            model: model.into(),
            transport,
        }
    }
}

impl Translator for RemoteTranslator {
    fn identity(&self) -> TranslatorIdentity {
        TranslatorIdentity::Remote {
            model: self.model.clone(),
        }
    }

    fn translate(
        &self,
        utterance: &str,
        columns: &[TranslatorColumn],
        dialect: Dialect,
    ) -> Result<NativePredicate> {
        let utterance = utterance.trim();
        if utterance.is_empty() {
            return Err(Error::Untranslatable {
                utterance: String::new(),
                reason: "empty utterance".into(),
            });
        }
        let request = RemoteRequest {
            utterance: utterance.to_string(),
            columns: columns.iter().map(|c| c.name.clone()).collect(),
            dialect,
        };
        let response = self.transport.send(&request)?;
        let schema: Vec<ColumnSchema> = columns
            .iter()
            .map(|c| ColumnSchema::new(c.name.clone(), c.ty))
            .collect();
        response
            .body
            .bind(&schema)
            .map_err(|e| Error::Translator(format!("model returned an invalid predicate: {e}")))?;
        let mut trace = TranslationTrace::new(utterance, dialect, self.identity());
        trace.patterns.push("remote model translation".into());
        trace.token_usage = TokenUsage {
            input: response.token_in,
            output: response.token_out,
        };
        trace.provider_cost = response.cost;
        Ok(NativePredicate {
            dialect,
            body: response.body,
            trace,
        })
    }
}
