//! Compiled mode: a script becomes one set of plans, optimized together and
//! committed at once.
//!
//! Every FIND and SAVE is a definition. A definition read exactly once, by
//! a single-block FIND, that is neither kept at the end of the script nor
//! OUTPUT, is folded into its reader: the reader fetches the definition's
//! table directly with both predicates pushed down. Other definitions run
//! once and are read locally.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use crate::aql::{self, FindQuery, Statement};
use crate::error::{Error, Result};
use crate::plan::{self, LeafInput, LocalRelation, LocalSource, MergeInfo, OutputSpec, PhysicalPlan};
use crate::table::{ColumnSchema, ResultTable};

use super::run::execute_physical;
use super::session::{
    auto_name, check_delete, check_new_name, introspect, workspace_relation, write_output, Env, LogEntry,
    MetricsRecord, Outcome, ScriptOutcome, Session,
};

#[derive(Clone)]
enum Slot {
    Existing(Arc<ResultTable>),
    Def(usize),
}

#[derive(Default)]
struct Usage {
    reads: usize,
    single_block_reader: bool,
    output: bool,
    live: bool,
}

fn sources(q: &FindQuery) -> impl Iterator<Item = &str> {
    q.blocks().map(|b| b.source.as_str())
}

/// Name resolution over the script alone: which definition each FROM,
/// OUTPUT, and DELETE refers to, and which definitions survive.
fn usage(session: &Session, script: &[Statement]) -> Result<HashMap<usize, Usage>> {
    let engine = session.engine();
    let base = session.workspace().log.len();
    let mut names: HashMap<String, Slot> = session
        .workspace()
        .tables
        .iter()
        .map(|(n, t)| (n.clone(), Slot::Existing(t.clone())))
        .collect();
    let mut usage: HashMap<usize, Usage> = HashMap::new();
    for (i, stmt) in script.iter().enumerate() {
        match stmt {
            Statement::Find(q) | Statement::Save { query: q, .. } => {
                for src in sources(q) {
                    if let Some(Slot::Def(d)) = names.get(src) {
                        let u = usage.entry(*d).or_default();
                        u.reads += 1;
                        u.single_block_reader = q.joins.is_empty();
                    }
                }
                let name = match stmt {
                    Statement::Save { name, .. } => {
                        check_new_name(engine, name, names.contains_key(name))?;
                        name.clone()
                    }
                    _ => auto_name(base + i + 1),
                };
                names.insert(name, Slot::Def(i));
                usage.entry(i).or_default();
            }
            Statement::Schema(_) => {
                names.insert(auto_name(base + i + 1), Slot::Existing(Arc::default()));
            }
            Statement::Output { table, .. } => match names.get(table) {
                Some(Slot::Def(d)) => usage.entry(*d).or_default().output = true,
                Some(Slot::Existing(_)) => {}
                None => return Err(Error::not_found("workspace table", table.clone())),
            },
            Statement::Delete { table } => {
                check_delete(engine, table, names.contains_key(table))?;
                names.remove(table);
            }
        }
    }
    for slot in names.values() {
        if let Slot::Def(d) = slot {
            usage.entry(*d).or_default().live = true;
        }
    }
    Ok(usage)
}

struct Definition {
    schema: Vec<ColumnSchema>,
    plan: PhysicalPlan,
    merge: Option<MergeInfo>,
}

fn merge_candidate(plan: &PhysicalPlan) -> Option<MergeInfo> {
    let g = &plan.graph;
    match (g.leaves.as_slice(), &g.output) {
        ([leaf], OutputSpec::Columns(_)) => match &leaf.input {
            LeafInput::Catalog { table, source } => Some(MergeInfo {
                table: table.clone(),
                source: source.clone(),
                predicate: leaf.predicate.clone(),
            }),
            LeafInput::Local { .. } => None,
        },
        _ => None,
    }
}

struct Planned {
    outcomes: Vec<Outcome>,
    defs: HashMap<usize, Definition>,
    merged_into: HashMap<usize, usize>,
}

/// Bind and optimize every statement against the staged namespace.
fn plan_script(session: &Session, script: &[Statement]) -> Result<Planned> {
    if script.is_empty() {
        return Err(Error::Plan("empty script".into()));
    }
    let usage = usage(session, script)?;
    let foldable =
        |d: usize| usage.get(&d).is_some_and(|u| u.reads == 1 && u.single_block_reader && !u.live && !u.output);

    let engine = session.engine().clone();
    let base = session.workspace().log.len();
    let mut names: BTreeMap<String, Slot> = session
        .workspace()
        .tables
        .iter()
        .map(|(n, t)| (n.clone(), Slot::Existing(t.clone())))
        .collect();
    let mut defs: HashMap<usize, Definition> = HashMap::new();
    let mut merged_into: HashMap<usize, usize> = HashMap::new();
    let mut outcomes: Vec<Outcome> = Vec::new();

    for (i, stmt) in script.iter().enumerate() {
        let index = base + i + 1;
        let mut out = Outcome {
            index,
            name: None,
            table: None,
            plan: None,
            metrics: MetricsRecord::default(),
            message: String::new(),
            output: None,
        };
        match stmt {
            Statement::Find(q) | Statement::Save { query: q, .. } => {
                let locals = names
                    .iter()
                    .map(|(n, slot)| {
                        let rel = match slot {
                            Slot::Existing(t) => workspace_relation(n, t),
                            Slot::Def(d) => {
                                let def = &defs[d];
                                LocalRelation {
                                    name: n.clone(),
                                    schema: def.schema.clone(),
                                    rows: def.plan.estimate.rows,
                                    source: LocalSource::Definition(*d),
                                    merge: if foldable(*d) { def.merge.clone() } else { None },
                                }
                            }
                        };
                        (n.clone(), rel)
                    })
                    .collect();
                let env = Env {
                    engine: &engine,
                    locals,
                };
                let graph = Arc::new(plan::bind_query(q, &env)?);
                for src in sources(q) {
                    if let Some(Slot::Def(d)) = names.get(src) {
                        if foldable(*d) && defs[d].merge.is_some() {
                            merged_into.insert(*d, index);
                        }
                    }
                }
                let physical = plan::optimize(&graph, engine.cost_model(), engine.parallel())?;
                out.metrics = MetricsRecord::from_graph(&graph);
                let name = match stmt {
                    Statement::Save { name, .. } => name.clone(),
                    _ => auto_name(index),
                };
                defs.insert(
                    i,
                    Definition {
                        schema: graph.output.schema(),
                        merge: merge_candidate(&physical),
                        plan: physical,
                    },
                );
                names.insert(name.clone(), Slot::Def(i));
                out.name = Some(name);
            }
            Statement::Schema(sq) => {
                let t = introspect(engine.catalog(), sq, |n| match names.get(n)? {
                    Slot::Existing(t) => Some(t.schema.clone()),
                    Slot::Def(d) => Some(defs[d].schema.clone()),
                })?;
                let name = auto_name(index);
                let t = Arc::new(t);
                names.insert(name.clone(), Slot::Existing(t.clone()));
                out.table = Some(t);
                out.name = Some(name);
            }
            Statement::Output { table, .. } => {
                out.name = Some(table.clone());
            }
            Statement::Delete { table } => {
                names.remove(table);
                out.message = format!("deleted {table}");
            }
        }
        outcomes.push(out);
    }
    Ok(Planned {
        outcomes,
        defs,
        merged_into,
    })
}

/// Plans for a whole script, without touching any source.
pub(super) fn explain(session: &Session, script: &[Statement]) -> Result<String> {
    let Planned {
        outcomes,
        defs,
        merged_into,
    } = plan_script(session, script)?;
    let mut text = Vec::new();
    for (i, (stmt, out)) in script.iter().zip(&outcomes).enumerate() {
        let label = out.name.clone().unwrap_or_default();
        match (defs.get(&i), merged_into.get(&i)) {
            (Some(_), Some(j)) => text.push(format!("-- statement {} ({label}): merged into statement {j}", out.index)),
            (Some(def), None) => text.push(format!("-- statement {} ({label})\n{}", out.index, plan::explain(&def.plan))),
            (None, _) => text.push(format!(
                "-- statement {}: {} (no plan)",
                out.index,
                aql::render(stmt).replace('\n', " ")
            )),
        }
    }
    Ok(text.join("\n"))
}

pub(super) fn run(session: &mut Session, script: &[Statement]) -> Result<ScriptOutcome> {
    let started = Instant::now();
    let Planned {
        mut outcomes,
        defs,
        merged_into,
    } = plan_script(session, script)?;

    // Execute every definition that was not folded away, in script order.
    let mut results: HashMap<usize, Arc<ResultTable>> = HashMap::new();
    let mut plan_text = Vec::new();
    let mut first_row: Option<f64> = None;
    for (i, out) in outcomes.iter_mut().enumerate() {
        let Some(def) = defs.get(&i) else { continue };
        let label = out.name.clone().unwrap_or_default();
        if let Some(j) = merged_into.get(&i) {
            let text = format!("merged into statement {j}");
            plan_text.push(format!("-- statement {} ({label}): {text}", out.index));
            out.plan = Some(text);
            out.message = format!("{label}: {}", out.plan.as_deref().unwrap());
            continue;
        }
        let exec = {
            let ctx = session.context(&results);
            execute_physical(&ctx, &def.plan)?
        };
        let explained = plan::explain(&def.plan);
        plan_text.push(format!("-- statement {} ({label})\n{explained}", out.index));
        out.plan = Some(explained);
        out.metrics.k = exec.table.call_count();
        out.metrics.ttft_s = started.elapsed().as_secs_f64();
        if first_row.is_none() && !exec.table.is_empty() {
            first_row = Some(out.metrics.ttft_s);
        }
        out.message = format!("{label}: {} rows", exec.table.len());
        let t = Arc::new(exec.table);
        out.table = Some(t.clone());
        results.insert(i, t);
    }

    // Commit: outputs in order, then the final namespace.
    let resolve = |slot: &Slot| match slot {
        Slot::Existing(t) => t.clone(),
        Slot::Def(d) => results[d].clone(),
    };
    let mut staged: BTreeMap<String, Slot> = session
        .workspace()
        .tables
        .iter()
        .map(|(n, t)| (n.clone(), Slot::Existing(t.clone())))
        .collect();
    let mut pending_outputs = Vec::new();
    for (i, stmt) in script.iter().enumerate() {
        match stmt {
            Statement::Find(_) | Statement::Save { .. } | Statement::Schema(_) => {
                let name = outcomes[i].name.clone().unwrap();
                let slot = if defs.contains_key(&i) {
                    Slot::Def(i)
                } else {
                    Slot::Existing(outcomes[i].table.clone().unwrap())
                };
                staged.insert(name, slot);
            }
            Statement::Output { table, destination } => {
                let t = resolve(&staged[table]);
                pending_outputs.push((i, t, destination.clone()));
            }
            Statement::Delete { table } => {
                staged.remove(table);
            }
        }
    }
    for (i, t, dest) in pending_outputs {
        let (message, text) = write_output(&t, dest.as_deref())?;
        outcomes[i].message = message;
        outcomes[i].output = text;
        outcomes[i].table = Some(t);
    }
    let final_tables: BTreeMap<String, Arc<ResultTable>> =
        staged.iter().map(|(n, s)| (n.clone(), resolve(s))).collect();

    let mut total = MetricsRecord::default();
    for o in &outcomes {
        total.add(&o.metrics);
    }
    total.ttft_s = first_row.unwrap_or_else(|| started.elapsed().as_secs_f64());
    let ws = session.workspace_mut();
    ws.tables = final_tables;
    for (stmt, o) in script.iter().zip(&outcomes) {
        ws.log.push(LogEntry {
            index: o.index,
            text: aql::render(stmt),
            statement: stmt.clone(),
            mode: "compiled",
            result: o.name.clone().filter(|_| !matches!(stmt, Statement::Output { .. } | Statement::Delete { .. })),
            plan: o.plan.clone(),
            provenance: o.table.as_ref().map(|t| t.provenance.clone()).unwrap_or_default(),
            metrics: o.metrics,
        });
    }
    Ok(ScriptOutcome {
        outcomes,
        plan: plan_text.join("\n"),
        metrics: total,
    })
}
