//! Multi-source benchmark: run each workload script in compiled mode on a
//! fresh session, score the answer, and check which sources it consulted.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::aql::{self, Statement};
use crate::error::{Error, Result};
use crate::exec::{Engine, MetricsRecord};
use crate::table::{ColumnSchema, ResultTable, SourceRef};
use crate::value::{cmp_rows, Row, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relevance {
    Required,
    Optional,
    Irrelevant,
}

/// Source name -> label, for one query.
pub type RelevanceRow = BTreeMap<String, Relevance>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<serde_json::Value>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkloadQuery {
    pub id: String,
    pub description: String,
    pub script: String,
    pub relevance: RelevanceRow,
    pub answer: AnswerTable,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Workload {
    #[serde(default = "default_principal")]
    pub principal: String,
    #[serde(default)]
    pub reference_date: Option<String>,
    pub queries: Vec<WorkloadQuery>,
}

fn default_principal() -> String {
    "bench".into()
}

impl Workload {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Fixture {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Every query labels every registered source and has exactly two
    /// Required ones.
    pub fn validate(&self, sources: &[String]) -> Result<()> {
        for q in &self.queries {
            let fail = |m: String| Err(Error::Bench { query: q.id.clone(), message: m });
            for s in sources {
                if !q.relevance.contains_key(s) {
                    return fail(format!("no relevance label for source `{s}`"));
                }
            }
            if let Some(extra) = q.relevance.keys().find(|k| !sources.contains(k)) {
                return fail(format!("relevance names unknown source `{extra}`"));
            }
            let required = q.relevance.values().filter(|r| **r == Relevance::Required).count();
            if required != 2 {
                return fail(format!("{required} Required sources, expected 2"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageVerdict {
    pub pass: bool,
    /// Native calls per source, every labelled source listed.
    pub calls: BTreeMap<String, u64>,
    pub missing_required: Vec<String>,
    pub irrelevant_consulted: Vec<String>,
    pub optional_consulted: Vec<String>,
}

/// Pass iff every Required source was called and no Irrelevant one was.
pub fn coverage_check(calls: &BTreeMap<String, u64>, relevance: &RelevanceRow) -> CoverageVerdict {
    let mut v = CoverageVerdict {
        pass: true,
        calls: BTreeMap::new(),
        missing_required: Vec::new(),
        irrelevant_consulted: Vec::new(),
        optional_consulted: Vec::new(),
    };
    for (source, label) in relevance {
        let n = calls.get(source).copied().unwrap_or(0);
        v.calls.insert(source.clone(), n);
        match label {
            Relevance::Required if n == 0 => v.missing_required.push(source.clone()),
            Relevance::Irrelevant if n > 0 => v.irrelevant_consulted.push(source.clone()),
            Relevance::Optional if n > 0 => v.optional_consulted.push(source.clone()),
            _ => {}
        }
    }
    for (source, &n) in calls {
        if !relevance.contains_key(source) {
            v.calls.insert(source.clone(), n);
            if n > 0 {
                v.irrelevant_consulted.push(source.clone());
            }
        }
    }
    v.pass = v.missing_required.is_empty() && v.irrelevant_consulted.is_empty();
    v
}

/// Compare a result against the expected answer: same column names, same
/// rows as a multiset after canonical sorting.
pub fn answer_matches(table: &ResultTable, answer: &AnswerTable) -> bool {
    if table.column_names() != answer.columns.iter().map(String::as_str).collect::<Vec<_>>() {
        return false;
    }
    let expected: Option<Vec<Row>> = answer
        .rows
        .iter()
        .map(|r| {
            (r.len() == table.schema.len()).then(|| {
                r.iter()
                    .zip(&table.schema)
                    .map(|(v, c): (&serde_json::Value, &ColumnSchema)| Value::from_json(v, c.ty))
                    .collect()
            })
        })
        .collect();
    let Some(mut expected) = expected else {
        return false;
    };
    expected.sort_by(|a, b| cmp_rows(a, b));
    table.sorted_rows() == expected
}

#[derive(Debug, Clone, Serialize)]
pub struct QueryReport {
    pub id: String,
    pub correct: bool,
    pub rows: usize,
    pub coverage: CoverageVerdict,
    pub metrics: MetricsRecord,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub queries: Vec<QueryReport>,
    pub accuracy: f64,
    pub coverage_pass: bool,
    pub mean_k: f64,
    pub mean_t_in: f64,
    pub mean_t_out: f64,
    pub mean_cost: f64,
    pub mean_ttft_s: f64,
    pub elapsed_s: f64,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl BenchReport {
    fn new(queries: Vec<QueryReport>, elapsed_s: f64) -> Self {
        let m = |f: fn(&QueryReport) -> f64| mean(queries.iter().map(f));
        let correct = queries.iter().filter(|q| q.correct).count();
        BenchReport {
            accuracy: if queries.is_empty() {
                0.0
            } else {
                100.0 * correct as f64 / queries.len() as f64
            },
            coverage_pass: queries.iter().all(|q| q.coverage.pass),
            mean_k: m(|q| q.metrics.k as f64),
            mean_t_in: m(|q| q.metrics.t_in as f64),
            mean_t_out: m(|q| q.metrics.t_out as f64),
            mean_cost: m(|q| q.metrics.cost),
            mean_ttft_s: m(|q| q.metrics.ttft_s),
            queries,
            elapsed_s,
        }
    }

    pub fn correct(&self) -> usize {
        self.queries.iter().filter(|q| q.correct).count()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let sources: Vec<&String> = self
            .queries
            .first()
            .map(|q| q.coverage.calls.keys().collect())
            .unwrap_or_default();
        let _ = write!(out, "{:<4} {:<3} {:>3} {:>6} {:>6} {:>8} {:>9}  coverage", "id", "C/I", "k", "T_in", "T_out", "C", "TTFT(s)");
        for s in &sources {
            let _ = write!(out, " {s}");
        }
        out.push('\n');
        for q in &self.queries {
            let _ = write!(
                out,
                "{:<4} {:<3} {:>3} {:>6} {:>6} {:>8.4} {:>9.4}  {:<8}",
                q.id,
                if q.correct { "C" } else { "I" },
                q.metrics.k,
                q.metrics.t_in,
                q.metrics.t_out,
                q.metrics.cost,
                q.metrics.ttft_s,
                if q.coverage.pass { "pass" } else { "FAIL" },
            );
            for s in &sources {
                let _ = write!(out, " {}", q.coverage.calls.get(*s).copied().unwrap_or(0));
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "accuracy {:.2}% ({}/{})  mean k {:.2}  mean T_in {:.2}  mean T_out {:.2}  mean C {:.4}  mean TTFT {:.4} s",
            self.accuracy,
            self.correct(),
            self.queries.len(),
            self.mean_k,
            self.mean_t_in,
            self.mean_t_out,
            self.mean_cost,
            self.mean_ttft_s
        );
        let _ = writeln!(
            out,
            "coverage {}  total {:.3} s",
            if self.coverage_pass { "pass" } else { "FAIL" },
            self.elapsed_s
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn run_query(engine: &Arc<Engine>, principal: &str, q: &WorkloadQuery) -> Result<QueryReport> {
    let wrap = |e: Error| Error::Bench {
        query: q.id.clone(),
        message: e.to_string(),
    };
    let started = Instant::now();
    let script = aql::parse_script(&q.script).map_err(wrap)?;
    let mut session = engine.session(principal);
    let outcome = session.run_compiled(&script).map_err(wrap)?;
    let mut calls: BTreeMap<String, u64> = BTreeMap::new();
    for (stmt, o) in script.iter().zip(&outcome.outcomes) {
        if !matches!(stmt, Statement::Find(_) | Statement::Save { .. }) {
            continue;
        }
        for p in o.table.iter().flat_map(|t| &t.provenance) {
            if let SourceRef::Catalog(s) = &p.source {
                *calls.entry(s.clone()).or_default() += p.call_count;
            }
        }
    }
    let table = outcome.final_table().ok_or_else(|| Error::Bench {
        query: q.id.clone(),
        message: "script produced no table".into(),
    })?;
    Ok(QueryReport {
        id: q.id.clone(),
        correct: answer_matches(table, &q.answer),
        rows: table.len(),
        coverage: coverage_check(&calls, &q.relevance),
        metrics: outcome.metrics,
        elapsed_s: started.elapsed().as_secs_f64(),
    })
}

/// Run every query; `parallel` runs the sessions concurrently.
pub fn run_benchmark(engine: &Arc<Engine>, workload: &Workload, parallel: bool) -> Result<BenchReport> {
    let sources: Vec<String> = engine.catalog().sources().into_iter().map(|s| s.name).collect();
    workload.validate(&sources)?;
    let started = Instant::now();
    let reports = crate::par::map(&workload.queries, parallel, |q| run_query(engine, &workload.principal, q));
    let queries = reports.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(BenchReport::new(queries, started.elapsed().as_secs_f64()))
}
