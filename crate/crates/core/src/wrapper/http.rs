//! REST keyword-search wrapper for a wiki-like service.
//!
//! `GET /search?q=<terms>&limit=<n>` returns a JSON list of Page records;
//! `GET /page?title=<t>` returns one record or 404. The service cannot be
//! enumerated, and a search that would return more than `max_results`
//! records is a partial-result error.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use crate::catalog::{ColumnDef, TableSchema, WrapperKind};
use crate::error::{Error, Result};
use crate::predicate::{PredExpr, PredKind};
use crate::text::tokenize;
use crate::value::{Row, SemanticType, Value};

use super::{Capabilities, MatchMode, Meter, NativeCall, Wrapper};

pub fn page_schema() -> TableSchema {
    let t = |n: &str| ColumnDef::new(n, SemanticType::Text);
    let mut s = TableSchema::new(
        "Page",
        vec![t("title"), t("url"), t("snippet"), t("text"), t("categories")],
    );
    s.row_estimate = 1000;
    s.per_call_cost = 2.0;
    s
}

pub struct HttpWrapper {
    base_url: String,
    max_results: usize,
    agent: ureq::Agent,
    served: AtomicU64,
}

impl HttpWrapper {
    pub fn new(base_url: impl Into<String>, max_results: usize) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(20)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpWrapper {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            max_results,
            agent,
            served: AtomicU64::new(0),
        }
    }

    fn get(&self, path_and_query: &str, meter: &Meter) -> Result<Option<serde_json::Value>> {
        self.served.fetch_add(1, Ordering::Relaxed);
        meter.tick();
        let url = format!("{}{path_and_query}", self.base_url);
        let mut resp = self
            .agent
            .get(&url)
            .call()
            .map_err(|e| Error::Source {
                source_name: url.clone(),
                message: e.to_string(),
            })?;
        let status = resp.status().as_u16();
        if status == 404 {
            return Ok(None);
        }
        let body = resp.body_mut().read_to_string().map_err(|e| Error::Source {
            source_name: url.clone(),
            message: e.to_string(),
        })?;
        if status != 200 {
            return Err(Error::Source {
                source_name: url,
                message: format!("HTTP {status}: {body}"),
            });
        }
        Ok(Some(serde_json::from_str(&body)?))
    }

    fn to_row(table: &TableSchema, v: &serde_json::Value) -> Row {
        table
            .columns
            .iter()
            .map(|c| v.get(&c.name).map_or(Value::Null, |f| Value::from_json(f, c.ty)))
            .collect()
    }
}

fn keyword_terms(p: &PredExpr, out: &mut BTreeSet<String>) {
    match p {
        PredExpr::Keyword { terms, .. } => out.extend(terms.iter().flat_map(|t| tokenize(t))),
        PredExpr::And(xs) => xs.iter().for_each(|x| keyword_terms(x, out)),
        _ => {}
    }
}

impl Wrapper for HttpWrapper {
    fn kind(&self) -> WrapperKind {
        WrapperKind::HttpApi
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            enumerate: false,
            kinds: [PredKind::Keyword].into(),
            disjunction: false,
            batch_probe: false,
        }
    }

    fn fetch(&self, table: &TableSchema, call: &NativeCall<'_>, meter: &Meter) -> Result<Vec<Row>> {
        let schema = table.column_schemas();
        let mut records = Vec::new();
        match (call.predicate, call.bindings) {
            (None, [b]) if b.column == "title" && b.mode == MatchMode::Exact => {
                let q = format!("/page?title={}", urlencoding::encode(&b.value.to_string()));
                if let Some(v) = self.get(&q, meter)? {
                    if !v.is_null() {
                        records.push(v);
                    }
                }
            }
            _ => {
                let mut terms = BTreeSet::new();
                if let Some(p) = call.predicate {
                    keyword_terms(p, &mut terms);
                }
                for b in call.bindings {
                    terms.extend(tokenize(&b.value.to_string()));
                }
                if terms.is_empty() {
                    return Err(Error::EnumerationUnsupported {
                        source_name: self.base_url.clone(),
                    });
                }
                let q = terms.into_iter().collect::<Vec<_>>().join(" ");
                let path = format!(
                    "/search?q={}&limit={}",
                    urlencoding::encode(&q),
                    self.max_results + 1
                );
                let list = self.get(&path, meter)?.unwrap_or(serde_json::Value::Array(vec![]));
                let serde_json::Value::Array(items) = list else {
                    return Err(Error::Source {
                        source_name: self.base_url.clone(),
                        message: "search did not return a list".into(),
                    });
                };
                if items.len() > self.max_results {
                    return Err(Error::PartialResult {
                        source_name: self.base_url.clone(),
                        message: format!(
                            "more than {} results for `{q}`; narrow the predicate",
                            self.max_results
                        ),
                    });
                }
                records = items;
            }
        }
        let bound = call.predicate.map(|p| p.bind(&schema)).transpose()?;
        let mut rows: Vec<Row> = records
            .iter()
            .map(|r| Self::to_row(table, r))
            .filter(|row| bound.as_ref().is_none_or(|b| b.eval(row)))
            .filter(|row| {
                call.bindings.iter().all(|b| {
                    let i = schema.iter().position(|c| c.name == b.column).unwrap();
                    b.matches(&row[i], schema[i].ty)
                })
            })
            .collect();
        if let Some(n) = call.limit {
            rows.truncate(n);
        }
        Ok(rows)
    }

    fn native_invocations(&self) -> u64 {
        self.served.load(Ordering::Relaxed)
    }
}
