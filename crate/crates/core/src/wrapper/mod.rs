//! Wrapper contract. A [`SourceRuntime`] hosts one wrapper and enforces the
//! parts of the contract every wrapper shares: access checks before any
//! native call, request validation, dialect checks, residual filtering,
//! projection, and exact call accounting.

pub mod access;
pub mod fixture;
pub mod http;
mod index;
pub mod local;

use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use crate::catalog::{SourceDescriptor, TableSchema, WrapperKind};
use crate::error::{Error, Result};
use crate::predicate::{coerce_literal, compare, CmpOp, PredExpr, PredKind};
use crate::table::{ColumnSchema, ProvenanceEntry, ResultTable, SourceRef};
use crate::text::normalize_entity;
use crate::translate::{render_native, Dialect, NativePredicate};
use crate::value::{Row, Value};

pub use access::{AccessRule, AccessRules, Decision};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    Exact,
    /// Normalized person/entity names: case, punctuation, honorifics ignored.
    Entity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub column: String,
    pub value: Value,
    pub mode: MatchMode,
}

impl Binding {
    /// Reference semantics for a binding against one cell of type `ty`.
    pub fn matches(&self, cell: &Value, ty: crate::value::SemanticType) -> bool {
        let Some(lit) = coerce_literal(&self.value, ty) else {
            return false;
        };
        match (self.mode, cell, &lit) {
            (MatchMode::Entity, Value::Text(a), Value::Text(b)) => {
                normalize_entity(a) == normalize_entity(b)
            }
            _ => compare(cell, CmpOp::Eq, &lit),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FindRequest {
    pub table: TableSchema,
    /// `None` projects every declared column.
    pub projections: Option<Vec<String>>,
    pub predicate: Option<NativePredicate>,
    pub bindings: Vec<Binding>,
    pub limit: Option<usize>,
    pub principal: String,
}

impl FindRequest {
    pub fn new(table: TableSchema, principal: impl Into<String>) -> Self {
        FindRequest {
            table,
            projections: None,
            predicate: None,
            bindings: Vec::new(),
            limit: None,
            principal: principal.into(),
        }
    }

    pub fn project(mut self, columns: &[&str]) -> Self {
        self.projections = Some(columns.iter().map(|c| c.to_string()).collect());
        self
    }

    pub fn filter(mut self, predicate: NativePredicate) -> Self {
        self.predicate = Some(predicate);
        self
    }

    pub fn bind(mut self, column: &str, value: Value, mode: MatchMode) -> Self {
        self.bindings.push(Binding {
            column: column.into(),
            value,
            mode,
        });
        self
    }

    pub fn limit(mut self, n: usize) -> Self {
        self.limit = Some(n);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Capabilities {
    pub enumerate: bool,
    pub kinds: BTreeSet<PredKind>,
    pub disjunction: bool,
    pub batch_probe: bool,
}

impl Capabilities {
    pub fn full() -> Self {
        Capabilities {
            enumerate: true,
            kinds: [PredKind::Compare, PredKind::Contains, PredKind::Keyword].into(),
            disjunction: true,
            batch_probe: false,
        }
    }

    pub fn accepts(&self, p: &PredExpr) -> bool {
        match p {
            PredExpr::Or(xs) => self.disjunction && xs.iter().all(|x| self.accepts(x)),
            PredExpr::And(xs) => xs.iter().all(|x| self.accepts(x)),
            leaf => leaf.kinds().is_subset(&self.kinds),
        }
    }

    /// Split a predicate into the part evaluated natively and a residual.
    pub fn split(&self, p: &PredExpr) -> (Option<PredExpr>, Option<PredExpr>) {
        if self.accepts(p) {
            return (Some(p.clone()), None);
        }
        let (push, keep): (Vec<_>, Vec<_>) = p.conjuncts().into_iter().partition(|c| self.accepts(c));
        let wrap = |v: Vec<PredExpr>| (!v.is_empty()).then(|| PredExpr::and(v));
        (wrap(push), wrap(keep))
    }
}

/// Counts native invocations made on behalf of one request.
#[derive(Debug, Default)]
pub struct Meter(AtomicU64);

impl Meter {
    pub fn tick(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// What a wrapper is asked to do natively.
pub struct NativeCall<'a> {
    pub predicate: Option<&'a PredExpr>,
    pub bindings: &'a [Binding],
    pub limit: Option<usize>,
}

pub trait Wrapper: Send + Sync {
    fn kind(&self) -> WrapperKind;

    fn capabilities(&self) -> Capabilities;

    /// Full-width rows in declared column order. Every native invocation is
    /// reported through `meter`.
    fn fetch(&self, table: &TableSchema, call: &NativeCall<'_>, meter: &Meter) -> Result<Vec<Row>>;

    /// Invocations served by the native layer since construction. Counted
    /// independently of any meter.
    fn native_invocations(&self) -> u64;
}

pub struct SourceRuntime {
    name: String,
    kind: WrapperKind,
    wrapper: Box<dyn Wrapper>,
    access: AccessRules,
}

fn native_text(table: &TableSchema, pred: Option<&NativePredicate>, pushed: Option<&PredExpr>, bindings: &[Binding], limit: Option<usize>) -> String {
    let mut parts = vec![table.short_name().to_string()];
    if let (Some(np), Some(p)) = (pred, pushed) {
        parts.push(render_native(p, np.dialect));
    }
    for b in bindings {
        let op = if b.mode == MatchMode::Entity { "~" } else { "=" };
        parts.push(format!("{} {op} '{}'", b.column, b.value));
    }
    if let Some(n) = limit {
        parts.push(format!("limit {n}"));
    }
    parts.join(" | ")
}

impl SourceRuntime {
    pub fn new(name: impl Into<String>, wrapper: Box<dyn Wrapper>, access: AccessRules) -> Self {
        SourceRuntime {
            name: name.into(),
            kind: wrapper.kind(),
            wrapper,
            access,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> WrapperKind {
        self.kind
    }

    pub fn dialect(&self) -> Dialect {
        Dialect::for_wrapper(self.kind)
    }

    pub fn capabilities(&self) -> Capabilities {
        self.wrapper.capabilities()
    }

    pub fn native_invocations(&self) -> u64 {
        self.wrapper.native_invocations()
    }

    pub fn authorize(&self, principal: &str, table: &str) -> Decision {
        self.access.decide(principal, table)
    }

    fn check_access(&self, principal: &str, table: &str) -> Result<()> {
        match self.authorize(principal, table) {
            Decision::Allow => Ok(()),
            Decision::Deny => Err(Error::AccessDenied {
                principal: principal.to_string(),
                table: table.to_string(),
            }),
        }
    }

    fn validate(&self, req: &FindRequest) -> Result<Vec<usize>> {
        let t = &req.table;
        if t.source_name() != self.name {
            return Err(Error::InvalidRequest(format!(
                "table `{}` does not belong to source `{}`",
                t.name, self.name
            )));
        }
        let index = |c: &str| {
            t.columns.iter().position(|d| d.name == c).ok_or_else(|| {
                Error::InvalidRequest(format!("`{}` has no column `{c}`", t.name))
            })
        };
        for b in &req.bindings {
            index(&b.column)?;
        }
        if req.limit == Some(0) {
            return Err(Error::InvalidRequest("limit must be positive".into()));
        }
        if let Some(p) = &req.predicate {
            if p.dialect != self.dialect() {
                return Err(Error::DialectMismatch {
                    source_name: self.name.clone(),
                    expected: self.dialect().to_string(),
                    got: p.dialect.to_string(),
                });
            }
            p.body
                .bind(&t.column_schemas())
                .map_err(|e| Error::InvalidRequest(e.to_string()))?;
        }
        match &req.projections {
            None => Ok((0..t.columns.len()).collect()),
            Some(cols) => cols.iter().map(|c| index(c)).collect(),
        }
    }

    fn wrap_failure(&self, e: Error) -> Error {
        match e {
            e @ (Error::Source { .. }
            | Error::PartialResult { .. }
            | Error::EnumerationUnsupported { .. }
            | Error::InvalidRequest(_)) => e,
            other => Error::source_failure(&self.name, other.to_string()),
        }
    }

    pub fn execute_find(&self, req: &FindRequest) -> Result<ResultTable> {
        self.check_access(&req.principal, &req.table.name)?;
        let projection = self.validate(req)?;
        let caps = self.capabilities();
        let (pushed, residual) = match &req.predicate {
            Some(p) => caps.split(&p.body),
            None => (None, None),
        };
        if !caps.enumerate && pushed.is_none() && req.bindings.is_empty() {
            return Err(Error::EnumerationUnsupported {
                source_name: self.name.clone(),
            });
        }
        let native_limit = if residual.is_some() { None } else { req.limit };
        let meter = Meter::default();
        let started = Instant::now();
        let call = NativeCall {
            predicate: pushed.as_ref(),
            bindings: &req.bindings,
            limit: native_limit,
        };
        let mut rows = self
            .wrapper
            .fetch(&req.table, &call, &meter)
            .map_err(|e| self.wrap_failure(e))?;
        let schema = req.table.column_schemas();
        if let Some(r) = &residual {
            let bound = r.bind(&schema)?;
            rows.retain(|row| bound.eval(row));
        }
        if let Some(n) = req.limit {
            rows.truncate(n);
        }
        let out_schema: Vec<ColumnSchema> = projection.iter().map(|&i| schema[i].clone()).collect();
        let rows: Vec<Row> = rows
            .into_iter()
            .map(|r| projection.iter().map(|&i| r[i].clone()).collect())
            .collect();
        let mut entry = ProvenanceEntry::new(
            SourceRef::Catalog(self.name.clone()),
            native_text(&req.table, req.predicate.as_ref(), pushed.as_ref(), &req.bindings, native_limit),
            meter.get(),
        );
        entry.duration = started.elapsed();
        entry.timestamp = Utc::now();
        let table = ResultTable::new(out_schema, rows).with_provenance(entry);
        table
            .validate()
            .map_err(|e| Error::source_failure(&self.name, e.to_string()))?;
        Ok(table)
    }

    /// One find per value with a binding on `column`; results are unioned
    /// in value order.
    pub fn execute_probe_batch(
        &self,
        req: &FindRequest,
        column: &str,
        mode: MatchMode,
        values: &[Value],
        parallel: bool,
    ) -> Result<ResultTable> {
        if values.is_empty() {
            return Err(Error::InvalidRequest("probe batch needs at least one value".into()));
        }
        self.check_access(&req.principal, &req.table.name)?;
        if !req.table.has_column(column) {
            return Err(Error::InvalidRequest(format!(
                "`{}` has no column `{column}`",
                req.table.name
            )));
        }
        let started = Instant::now();
        let results = crate::par::map(values, parallel, |v| {
            let mut r = req.clone();
            r.bindings.push(Binding {
                column: column.to_string(),
                value: v.clone(),
                mode,
            });
            self.execute_find(&r).map_err(|e| Error::Probe {
                value: v.to_string(),
                cause: Box::new(e),
            })
        });
        let mut schema = None;
        let mut rows = Vec::new();
        let mut calls = 0;
        let mut first_native = String::new();
        for r in results {
            let t = r?;
            calls += t.call_count();
            if schema.is_none() {
                first_native = t.provenance[0].native_query.clone();
                schema = Some(t.schema);
            }
            rows.extend(t.rows);
        }
        let mut entry = ProvenanceEntry::new(
            SourceRef::Catalog(self.name.clone()),
            format!("{first_native} [probe x {}]", values.len()),
            calls,
        );
        entry.duration = started.elapsed();
        Ok(ResultTable::new(schema.unwrap_or_default(), rows).with_provenance(entry))
    }

    pub fn full_scan(&self, table: &TableSchema, principal: &str) -> Result<ResultTable> {
        if !self.capabilities().enumerate {
            return Err(Error::EnumerationUnsupported {
                source_name: self.name.clone(),
            });
        }
        self.execute_find(&FindRequest::new(table.clone(), principal))
    }
}

/// Open the wrapper described by `desc`. Fixture-backed kinds read their
/// tables from `connection.path` (relative to `base`); the returned
/// descriptor lists them.
pub fn open_source(desc: &SourceDescriptor, base: &Path) -> Result<(SourceRuntime, SourceDescriptor)> {
    let mut desc = desc.clone();
    let dir = desc.connection.get("path").map(|p| base.join(p));
    let access = match &dir {
        Some(d) => AccessRules::load_dir(d)?,
        None => AccessRules::allow_all(),
    };
    let wrapper: Box<dyn Wrapper> = match desc.wrapper_kind {
        WrapperKind::HttpApi => {
            let url = desc.connection.get("base_url").ok_or_else(|| {
                Error::Catalog(format!("http-api source `{}` needs connection.base_url", desc.name))
            })?;
            let max = desc
                .connection
                .get("max_results")
                .map(|m| m.parse::<usize>())
                .transpose()
                .map_err(|e| Error::Catalog(format!("bad max_results: {e}")))?
                .unwrap_or(100);
            if desc.tables.is_empty() {
                desc.tables.push(http::page_schema());
            }
            Box::new(http::HttpWrapper::new(url.clone(), max))
        }
        kind => {
            let dir = dir.ok_or_else(|| {
                Error::Catalog(format!("source `{}` needs connection.path", desc.name))
            })?;
            let tables = fixture::load_dir(&dir)?;
            desc.tables = tables.iter().map(|(t, _)| t.clone()).collect();
            for t in &mut desc.tables {
                t.name = format!("{}.{}", desc.name, t.short_name());
            }
            let tables = desc.tables.iter().cloned().zip(tables.into_iter().map(|(_, r)| r)).collect();
            let latency = desc
                .connection
                .get("latency_ms")
                .map(|m| m.parse::<u64>())
                .transpose()
                .map_err(|e| Error::Catalog(format!("bad latency_ms: {e}")))?
                .unwrap_or(0);
            Box::new(local::LocalWrapper::new(kind, tables)?.with_latency(Duration::from_millis(latency)))
        }
    };
    Ok((SourceRuntime::new(desc.name.clone(), wrapper, access), desc))
}
