//! WHERE-utterance translation into a wrapper's native predicate dialect.
//!
//! The built-in [`PatternTranslator`] is deterministic. A model-backed
//! translator plugs in through [`Translator`]; see [`remote`].

mod dialect;
mod pattern;
pub mod remote;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::catalog::{TableSchema, WrapperKind};
use crate::error::Result;
use crate::predicate::PredExpr;
use crate::value::SemanticType;

pub use dialect::render_native;
pub use pattern::PatternTranslator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dialect {
    BooleanExpression,
    KeywordQuery,
    MailFilter,
    FactLookup,
}

impl Dialect {
    pub fn name(self) -> &'static str {
        match self {
            Dialect::BooleanExpression => "boolean-expression",
            Dialect::KeywordQuery => "keyword-query",
            Dialect::MailFilter => "mail-filter",
            Dialect::FactLookup => "fact-lookup",
        }
    }

    pub fn for_wrapper(kind: WrapperKind) -> Dialect {
        match kind {
            WrapperKind::RelationalFixture => Dialect::BooleanExpression,
            WrapperKind::DocumentCorpus | WrapperKind::HttpApi => Dialect::KeywordQuery,
            WrapperKind::Mailbox => Dialect::MailFilter,
            WrapperKind::KnowledgeStub => Dialect::FactLookup,
        }
    }

    /// Dialects whose fallback is a conjunctive keyword query rather than a
    /// column-bound filter.
    pub fn is_keyword_like(self) -> bool {
        !matches!(self, Dialect::BooleanExpression)
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What the translator sees of a column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslatorColumn {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SemanticType,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vocabulary: Vec<String>,
}

impl TranslatorColumn {
    pub fn from_table(t: &TableSchema) -> Vec<TranslatorColumn> {
        t.columns
            .iter()
            .map(|c| TranslatorColumn {
                name: c.name.clone(),
                ty: c.ty,
                vocabulary: c.vocabulary.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TranslatorIdentity {
    Deterministic,
    Remote { model: String },
}

impl fmt::Display for TranslatorIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TranslatorIdentity::Deterministic => f.write_str("deterministic"),
            TranslatorIdentity::Remote { model } => write!(f, "remote model {model}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input: u64,
    pub output: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnBinding {
    pub phrase: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationTrace {
    pub utterance: String,
    pub dialect: Dialect,
    pub translator: TranslatorIdentity,
    pub literals: Vec<String>,
    /// Number of OR branches and total AND clauses after splitting.
    pub or_branches: usize,
    pub and_clauses: usize,
    pub patterns: Vec<String>,
    pub bindings: Vec<ColumnBinding>,
    pub fallback: Option<String>,
    pub residual: Vec<String>,
    pub token_usage: TokenUsage,
    pub provider_cost: f64,
}

impl TranslationTrace {
    pub fn new(utterance: &str, dialect: Dialect, translator: TranslatorIdentity) -> Self {
        TranslationTrace {
            utterance: utterance.to_string(),
            dialect,
            translator,
            literals: Vec::new(),
            or_branches: 1,
            and_clauses: 1,
            patterns: Vec::new(),
            bindings: Vec::new(),
            fallback: None,
            residual: Vec::new(),
            token_usage: TokenUsage::default(),
            provider_cost: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NativePredicate {
    pub dialect: Dialect,
    pub body: PredExpr,
    pub trace: TranslationTrace,
}

impl NativePredicate {
    pub fn native_text(&self) -> String {
        render_native(&self.body, self.dialect)
    }

    /// Same body addressed to another dialect. Only meaningful when the
    /// target wrapper evaluates every node kind in the body; the planner checks.
    pub fn retarget(&self, dialect: Dialect) -> NativePredicate {
        NativePredicate {
            dialect,
            body: self.body.clone(),
            trace: self.trace.clone(),
        }
    }
}

pub trait Translator: Send + Sync {
    fn identity(&self) -> TranslatorIdentity;

    fn translate(
        &self,
        utterance: &str,
        columns: &[TranslatorColumn],
        dialect: Dialect,
    ) -> Result<NativePredicate>;
}

pub fn explain_translation(pred: &NativePredicate) -> String {
    let t = &pred.trace;
    let mut out = Vec::new();
    out.push(format!("utterance: {}", t.utterance));
    out.push(format!("translator: {}", t.translator));
    out.push(format!("dialect: {}", t.dialect));
    if !t.literals.is_empty() {
        let quoted: Vec<String> = t.literals.iter().map(|l| format!("'{l}'")).collect();
        out.push(format!(
            "quoted literals: {} ({})",
            t.literals.len(),
            quoted.join(", ")
        ));
    }
    if t.or_branches > 1 {
        out.push(format!("split: OR into {} branches", t.or_branches));
    }
    if t.and_clauses > t.or_branches {
        out.push(format!("split: AND into {} clauses", t.and_clauses));
    }
    for p in &t.patterns {
        out.push(format!("pattern: {p}"));
    }
    for b in &t.bindings {
        out.push(format!("binding: '{}' -> {}", b.phrase, b.columns.join(" | ")));
    }
    if let Some(f) = &t.fallback {
        out.push(format!("fallback: {f}"));
    }
    if !t.residual.is_empty() {
        out.push(format!("residual terms: {}", t.residual.join(", ")));
    }
    out.push(format!("native: {}", pred.native_text()));
    out.push(format!(
        "tokens: in={} out={} cost={}",
        t.token_usage.input, t.token_usage.output, t.provider_cost
    ));
    out.join("\n")
}
