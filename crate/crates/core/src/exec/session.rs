//! Sessions: a workspace of named result tables plus an append-only log.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::aql::{self, FindQuery, SchemaQuery, Statement};
use crate::catalog::Catalog;
use crate::error::{Error, Result};
use crate::plan::{self, BindEnv, LocalRelation, LocalSource, LogicalPlan, PhysicalPlan, QueryGraph, Sink};
use crate::table::{ColumnSchema, ProvenanceEntry, ResultTable};
use crate::translate::{Dialect, Translator};
use crate::value::{SemanticType, Value};

use super::run::{execute_physical, ExecContext, Execution};
use super::Engine;

static SESSION_SEQ: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct MetricsRecord {
    /// Translator input tokens.
    pub t_in: u64,
    /// Translator output tokens.
    pub t_out: u64,
    /// Native source invocations.
    pub k: u64,
    /// Provider-reported monetary cost.
    pub cost: f64,
    /// Seconds from statement acceptance to the first materialized row.
    pub ttft_s: f64,
}

impl MetricsRecord {
    pub fn add(&mut self, other: &MetricsRecord) {
        self.t_in += other.t_in;
        self.t_out += other.t_out;
        self.k += other.k;
        self.cost += other.cost;
    }

    pub(crate) fn from_graph(graph: &QueryGraph) -> Self {
        let mut m = MetricsRecord::default();
        for p in graph.leaves.iter().filter_map(|l| l.predicate.as_ref()) {
            m.t_in += p.trace.token_usage.input;
            m.t_out += p.trace.token_usage.output;
            m.cost += p.trace.provider_cost;
        }
        m
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LogEntry {
    /// 1-based position in the session log.
    pub index: usize,
    pub text: String,
    #[serde(skip)]
    pub statement: Statement,
    pub mode: &'static str,
    pub result: Option<String>,
    pub plan: Option<String>,
    pub provenance: Vec<ProvenanceEntry>,
    pub metrics: MetricsRecord,
}

#[derive(Debug, Clone, Default)]
pub struct Workspace {
    pub id: String,
    pub principal: String,
    pub(crate) tables: BTreeMap<String, Arc<ResultTable>>,
    pub(crate) log: Vec<LogEntry>,
}

impl Workspace {
    pub fn tables(&self) -> &BTreeMap<String, Arc<ResultTable>> {
        &self.tables
    }

    pub fn table(&self, name: &str) -> Option<&Arc<ResultTable>> {
        self.tables.get(name)
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    /// `log.aql` with every logged statement, and one file pair per table.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let stmts: Vec<Statement> = self.log.iter().map(|e| e.statement.clone()).collect();
        std::fs::write(dir.join("log.aql"), aql::render_script(&stmts))?;
        for (name, t) in &self.tables {
            t.write_files(dir, name)?;
        }
        Ok(())
    }
}

/// What one statement produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub index: usize,
    pub name: Option<String>,
    pub table: Option<Arc<ResultTable>>,
    pub plan: Option<String>,
    pub metrics: MetricsRecord,
    pub message: String,
    /// Serialized table for `OUTPUT` without a destination.
    pub output: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ScriptOutcome {
    pub outcomes: Vec<Outcome>,
    pub plan: String,
    pub metrics: MetricsRecord,
}

impl ScriptOutcome {
    /// The last statement that produced a table.
    pub fn final_table(&self) -> Option<&Arc<ResultTable>> {
        self.outcomes.iter().rev().find_map(|o| o.table.as_ref())
    }
}

pub(crate) struct Env<'a> {
    pub engine: &'a Engine,
    pub locals: HashMap<String, LocalRelation>,
}

impl BindEnv for Env<'_> {
    fn catalog(&self) -> &Catalog {
        self.engine.catalog()
    }

    fn dialect_of(&self, source: &str) -> Option<Dialect> {
        self.engine.dialect_of(source)
    }

    fn local(&self, name: &str) -> Option<LocalRelation> {
        self.locals.get(name).cloned()
    }

    fn translator(&self) -> &dyn Translator {
        self.engine.translator()
    }
}

pub(crate) fn workspace_relation(name: &str, t: &Arc<ResultTable>) -> LocalRelation {
    LocalRelation {
        name: name.to_string(),
        schema: t.schema.clone(),
        rows: t.len() as f64,
        source: LocalSource::Workspace(t.clone()),
        merge: None,
    }
}

/// `?` over the catalog, falling back to workspace tables by name.
pub(crate) fn introspect(
    catalog: &Catalog,
    query: &SchemaQuery,
    local_schema: impl Fn(&str) -> Option<Vec<ColumnSchema>>,
) -> Result<ResultTable> {
    let name = match query {
        SchemaQuery::AllSources => return catalog.introspect(query),
        SchemaQuery::OneSource(n) | SchemaQuery::OneTable(n) => n,
    };
    if catalog.is_source(name) || catalog.table(name).is_some() {
        return catalog.introspect(query);
    }
    let schema = local_schema(name).ok_or_else(|| Error::not_found("source or table", name.clone()))?;
    let text = |s: &str| Value::Text(s.to_string());
    Ok(ResultTable::new(
        vec![
            ColumnSchema::new("column", SemanticType::Text),
            ColumnSchema::new("type", SemanticType::Text),
        ],
        schema.iter().map(|c| vec![text(&c.name), text(c.ty.name())]).collect(),
    ))
}

pub(crate) fn check_new_name(engine: &Engine, name: &str, exists: bool) -> Result<()> {
    if engine.catalog().is_source(name) || engine.catalog().table(name).is_some() {
        return Err(Error::Workspace(format!("`{name}` already names a catalog source or table")));
    }
    if exists {
        return Err(Error::Workspace(format!("workspace table `{name}` already exists")));
    }
    if auto_name_shape(name) {
        return Err(Error::Workspace(format!("`{name}` is reserved for unnamed results")));
    }
    Ok(())
}

fn auto_name_shape(name: &str) -> bool {
    name.strip_prefix("_r")
        .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

pub(crate) fn auto_name(index: usize) -> String {
    format!("_r{index}")
}

pub(crate) fn check_delete(engine: &Engine, name: &str, exists: bool) -> Result<()> {
    if engine.catalog().is_source(name) || engine.catalog().table(name).is_some() {
        return Err(Error::Plan(format!("cannot delete source table `{name}`")));
    }
    if !exists {
        return Err(Error::not_found("workspace table", name));
    }
    Ok(())
}

/// Header line with the schema, then rows sorted by all columns.
pub fn output_text(t: &ResultTable) -> String {
    let header = serde_json::json!({ "columns": t.schema });
    format!("{header}\n{}", t.to_ndjson(true))
}

pub(crate) fn write_output(t: &ResultTable, destination: Option<&str>) -> Result<(String, Option<String>)> {
    let text = output_text(t);
    match destination {
        Some(path) => {
            std::fs::write(path, &text)?;
            Ok((format!("wrote {} rows to {path}", t.len()), None))
        }
        None => Ok((format!("{} rows", t.len()), Some(text))),
    }
}

pub struct Session {
    engine: Arc<Engine>,
    ws: Workspace,
}

impl Session {
    pub fn new(engine: Arc<Engine>, principal: impl Into<String>) -> Self {
        let id = format!("s{}", SESSION_SEQ.fetch_add(1, Ordering::Relaxed));
        Self::with_id(engine, id, principal)
    }

    pub fn with_id(engine: Arc<Engine>, id: impl Into<String>, principal: impl Into<String>) -> Self {
        Session {
            engine,
            ws: Workspace {
                id: id.into(),
                principal: principal.into(),
                ..Workspace::default()
            },
        }
    }

    pub fn engine(&self) -> &Arc<Engine> {
        &self.engine
    }

    pub fn id(&self) -> &str {
        &self.ws.id
    }

    pub fn principal(&self) -> &str {
        &self.ws.principal
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    pub fn table(&self, name: &str) -> Option<&Arc<ResultTable>> {
        self.ws.tables.get(name)
    }

    pub(crate) fn env(&self) -> Env<'_> {
        Env {
            engine: &self.engine,
            locals: self
                .ws
                .tables
                .iter()
                .map(|(n, t)| (n.clone(), workspace_relation(n, t)))
                .collect(),
        }
    }

    pub fn bind(&self, q: &FindQuery) -> Result<Arc<QueryGraph>> {
        Ok(Arc::new(plan::bind_query(q, &self.env())?))
    }

    pub fn optimize(&self, graph: &Arc<QueryGraph>) -> Result<PhysicalPlan> {
        plan::optimize(graph, self.engine.cost_model(), self.engine.parallel())
    }

    pub fn execute_plan(&self, plan: &PhysicalPlan) -> Result<Execution> {
        let defs = HashMap::new();
        execute_physical(&self.context(&defs), plan)
    }

    pub(crate) fn context<'a>(&'a self, defs: &'a HashMap<usize, Arc<ResultTable>>) -> ExecContext<'a> {
        ExecContext {
            engine: &self.engine,
            principal: &self.ws.principal,
            parallel: self.engine.parallel(),
            definitions: defs,
        }
    }

    /// Logical and physical plan of a query statement, without running it.
    pub fn explain(&self, stmt: &Statement) -> Result<String> {
        let (q, sink) = match stmt {
            Statement::Find(q) => (q, Sink::Output(None)),
            Statement::Save { query, name } => (query, Sink::Save(name.clone())),
            other => return Ok(format!("{} (no plan)", aql::render(other).replace('\n', " "))),
        };
        let graph = self.bind(q)?;
        let physical = self.optimize(&graph)?;
        let logical = LogicalPlan::from_graph((*graph).clone(), Some(sink));
        Ok(format!(
            "logical:\n{}\nphysical:\n{}",
            plan::explain_logical(&logical),
            plan::explain(&physical)
        ))
    }

    /// Parse and run each statement interactively; stops at the first error.
    /// Statements before it stay committed.
    pub fn execute(&mut self, text: &str) -> Result<Vec<Outcome>> {
        let stmts = aql::parse_script(text)?;
        stmts.iter().map(|s| self.run(s)).collect()
    }

    /// One statement in interactive mode. The workspace is untouched on error.
    pub fn run(&mut self, stmt: &Statement) -> Result<Outcome> {
        let started = Instant::now();
        let index = self.ws.log.len() + 1;
        let mut out = Outcome {
            index,
            name: None,
            table: None,
            plan: None,
            metrics: MetricsRecord::default(),
            message: String::new(),
            output: None,
        };
        let mut provenance = Vec::new();
        match stmt {
            Statement::Find(q) | Statement::Save { query: q, .. } => {
                let name = match stmt {
                    Statement::Save { name, .. } => {
                        check_new_name(&self.engine, name, self.ws.tables.contains_key(name))?;
                        name.clone()
                    }
                    _ => auto_name(index),
                };
                let graph = self.bind(q)?;
                let physical = self.optimize(&graph)?;
                let exec = self.execute_plan(&physical)?;
                out.metrics = MetricsRecord::from_graph(&graph);
                out.metrics.k = exec.table.call_count();
                out.metrics.ttft_s = started.elapsed().as_secs_f64();
                out.plan = Some(plan::explain(&physical));
                out.message = format!("{name}: {} rows", exec.table.len());
                provenance = exec.table.provenance.clone();
                let t = Arc::new(exec.table);
                self.ws.tables.insert(name.clone(), t.clone());
                out.table = Some(t);
                out.name = Some(name);
            }
            Statement::Schema(sq) => {
                let t = introspect(self.engine.catalog(), sq, |n| self.ws.tables.get(n).map(|t| t.schema.clone()))?;
                let name = auto_name(index);
                out.metrics.ttft_s = started.elapsed().as_secs_f64();
                out.message = format!("{name}: {} rows", t.len());
                let t = Arc::new(t);
                self.ws.tables.insert(name.clone(), t.clone());
                out.table = Some(t);
                out.name = Some(name);
            }
            Statement::Output { table, destination } => {
                let t = self
                    .ws
                    .tables
                    .get(table)
                    .ok_or_else(|| Error::not_found("workspace table", table.clone()))?;
                let (message, text) = write_output(t, destination.as_deref())?;
                out.message = message;
                out.output = text;
                out.table = Some(t.clone());
                out.name = Some(table.clone());
            }
            Statement::Delete { table } => {
                check_delete(&self.engine, table, self.ws.tables.contains_key(table))?;
                self.ws.tables.remove(table);
                out.message = format!("deleted {table}");
            }
        }
        self.ws.log.push(LogEntry {
            index,
            text: aql::render(stmt),
            statement: stmt.clone(),
            mode: "interactive",
            result: out.name.clone().filter(|_| !matches!(stmt, Statement::Output { .. })),
            plan: out.plan.clone(),
            provenance,
            metrics: out.metrics,
        });
        Ok(out)
    }

    /// Whole script as one composite plan; all-or-nothing.
    pub fn run_compiled(&mut self, script: &[Statement]) -> Result<ScriptOutcome> {
        super::compiled::run(self, script)
    }

    /// Plans for every statement of a script, as compiled mode would run it.
    pub fn explain_script(&self, text: &str) -> Result<String> {
        let stmts = aql::parse_script(text)?;
        super::compiled::explain(self, &stmts)
    }

    pub fn run_compiled_text(&mut self, text: &str) -> Result<ScriptOutcome> {
        let stmts = aql::parse_script(text)?;
        self.run_compiled(&stmts)
    }

    pub(crate) fn workspace_mut(&mut self) -> &mut Workspace {
        &mut self.ws
    }

    /// Re-run a saved `log.aql` statement by statement on a fresh session.
    pub fn replay(engine: Arc<Engine>, dir: &Path, principal: impl Into<String>) -> Result<Session> {
        let text = std::fs::read_to_string(dir.join("log.aql"))?;
        let mut s = Session::new(engine, principal);
        s.execute(&text)?;
        Ok(s)
    }
}
