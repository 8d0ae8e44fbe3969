//! Fixture-backed wrappers: relational, document corpus, mailbox, and
//! knowledge stub. They share one in-memory store; the corpus and mailbox
//! kinds add a positional inverted index and tf ranking.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use crate::catalog::{TableSchema, WrapperKind};
use crate::error::{Error, Result};
use crate::value::Row;

use super::index::{query_terms, IndexedTable};
use super::{Capabilities, Meter, NativeCall, Wrapper};

pub const MAILBOX_COLUMNS: &[&str] = &["from", "to", "subject", "date", "body"];
pub const FACT_COLUMNS: &[&str] = &["entity", "attribute", "value"];

pub struct LocalWrapper {
    kind: WrapperKind,
    tables: HashMap<String, IndexedTable>,
    served: AtomicU64,
    latency: Duration,
}

impl LocalWrapper {
    pub fn new(kind: WrapperKind, tables: Vec<(TableSchema, Vec<Row>)>) -> Result<Self> {
        if kind == WrapperKind::HttpApi {
            return Err(Error::Catalog("http-api is not fixture-backed".into()));
        }
        let required = match kind {
            WrapperKind::Mailbox => MAILBOX_COLUMNS,
            WrapperKind::KnowledgeStub => FACT_COLUMNS,
            _ => &[],
        };
        let positional = matches!(kind, WrapperKind::DocumentCorpus | WrapperKind::Mailbox);
        let mut map = HashMap::new();
        for (schema, rows) in tables {
            if let Some(missing) = required.iter().find(|c| !schema.has_column(c)) {
                return Err(Error::Catalog(format!(
                    "{kind} table `{}` lacks required column `{missing}`",
                    schema.name
                )));
            }
            let cols = schema.column_schemas();
            for (i, row) in rows.iter().enumerate() {
                let ok = row.len() == cols.len()
                    && row.iter().zip(&cols).all(|(v, c)| v.conforms_to(c.ty));
                if !ok {
                    return Err(Error::Catalog(format!(
                        "row {i} of `{}` does not conform to its schema",
                        schema.name
                    )));
                }
            }
            map.insert(schema.name.clone(), IndexedTable::new(cols, rows, positional));
        }
        Ok(LocalWrapper {
            kind,
            tables: map,
            served: AtomicU64::new(0),
            latency: Duration::ZERO,
        })
    }

    /// Sleep this long on every native call, to stand in for a remote round trip.
    pub fn with_latency(mut self, latency: Duration) -> Self {
        self.latency = latency;
        self
    }

    fn ranked(&self) -> bool {
        matches!(self.kind, WrapperKind::DocumentCorpus | WrapperKind::Mailbox)
    }
}

impl Wrapper for LocalWrapper {
    fn kind(&self) -> WrapperKind {
        self.kind
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::full()
    }

    fn fetch(&self, table: &TableSchema, call: &NativeCall<'_>, meter: &Meter) -> Result<Vec<Row>> {
        let t = self
            .tables
            .get(&table.name)
            .ok_or_else(|| Error::not_found("table", table.name.clone()))?;
        let mut ids = t.select(call.predicate, call.bindings)?;
        if self.ranked() {
            if let Some(p) = call.predicate {
                let mut terms = Vec::new();
                query_terms(p, &mut terms);
                let mut scored: Vec<(u64, u32)> =
                    ids.iter().map(|&i| (t.score(i, &terms), i)).collect();
                scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
                ids = scored.into_iter().map(|(_, i)| i).collect();
            }
        }
        if let Some(n) = call.limit {
            ids.truncate(n);
        }
        let page = table.page_size.map_or(ids.len().max(1), |p| p as usize);
        let mut rows = Vec::with_capacity(ids.len());
        let mut offset = 0;
        loop {
            self.served.fetch_add(1, Ordering::Relaxed);
            meter.tick();
            if !self.latency.is_zero() {
                std::thread::sleep(self.latency);
            }
            let end = (offset + page).min(ids.len());
            rows.extend(ids[offset..end].iter().map(|&i| t.rows[i as usize].clone()));
            offset = end;
            if offset >= ids.len() {
                break;
            }
        }
        Ok(rows)
    }

    fn native_invocations(&self) -> u64 {
        self.served.load(Ordering::Relaxed)
    }
}
