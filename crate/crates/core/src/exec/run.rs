//! Physical and reference execution of bound query graphs.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::aql::AggregateFunction;
use crate::catalog::TableSchema;
use crate::error::{Error, Result};
use crate::par;
use crate::plan::{
    AggregateSpec, ColKey, JoinStrategy, Leaf, LeafInput, LocalSource, OutputSpec, PhysicalPlan, QueryGraph,
};
use crate::table::{ProvenanceEntry, ResultTable, SourceRef};
use crate::text::{normalize_entity, normalize_text};
use crate::translate::NativePredicate;
use crate::value::{Row, SemanticType, Value};
use crate::wrapper::{FindRequest, MatchMode};

use super::Engine;

/// Hash-join probe sides larger than this are split across threads.
const PARALLEL_JOIN_ROWS: usize = 2048;

pub struct ExecContext<'a> {
    pub engine: &'a Engine,
    pub principal: &'a str,
    pub parallel: bool,
    /// Tables produced earlier in the same compiled script.
    pub definitions: &'a HashMap<usize, Arc<ResultTable>>,
}

#[derive(Debug)]
pub struct Execution {
    pub table: ResultTable,
    /// Wall time until the result was complete.
    pub elapsed: Duration,
}

#[derive(Debug, Clone, Default)]
struct Relation {
    keys: Vec<ColKey>,
    types: Vec<SemanticType>,
    rows: Vec<Row>,
}

impl Relation {
    fn empty(leaf: &Leaf) -> Self {
        Relation {
            keys: leaf.keys(),
            types: leaf.columns.iter().map(|c| c.ty).collect(),
            rows: Vec::new(),
        }
    }

    fn position(&self, key: &ColKey) -> Result<usize> {
        self.keys
            .iter()
            .position(|k| k == key)
            .ok_or_else(|| Error::Plan(format!("column {}.{} is not available", key.leaf, key.name)))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum KeyClass {
    Text,
    Number,
    Date,
    Boolean,
}

fn class_of(ty: SemanticType) -> KeyClass {
    match ty {
        SemanticType::Text => KeyClass::Text,
        SemanticType::Integer | SemanticType::Real => KeyClass::Number,
        SemanticType::Date => KeyClass::Date,
        SemanticType::Boolean => KeyClass::Boolean,
    }
}

/// Equality key with the same semantics as a wrapper binding: text is
/// compared normalized, numbers across integer and real. Nulls never match.
fn join_key(v: &Value, mode: MatchMode) -> Option<String> {
    Some(match v {
        Value::Null => return None,
        Value::Text(s) if mode == MatchMode::Entity => format!("e:{}", normalize_entity(s)),
        Value::Text(s) => format!("t:{}", normalize_text(s)),
        Value::Integer(_) | Value::Real(_) => {
            let x = v.as_f64().unwrap();
            format!("n:{:?}", if x == 0.0 { 0.0 } else { x })
        }
        Value::Date(d) => format!("d:{d}"),
        Value::Boolean(b) => format!("b:{b}"),
    })
}

fn composite_key(row: &[Value], cols: &[(usize, MatchMode)]) -> Option<String> {
    let mut key = String::new();
    for &(i, mode) in cols {
        key.push_str(&join_key(&row[i], mode)?);
        key.push('\u{1f}');
    }
    Some(key)
}

/// Inner equi-join; output keeps left order, then right order per left row.
fn hash_join(left: Relation, right: Relation, on: &[(ColKey, ColKey, MatchMode)], parallel: bool) -> Result<Relation> {
    let mut lcols = Vec::new();
    let mut rcols = Vec::new();
    for (l, r, mode) in on {
        lcols.push((left.position(l)?, *mode));
        rcols.push((right.position(r)?, *mode));
    }
    let mut index: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, row) in right.rows.iter().enumerate() {
        if let Some(k) = composite_key(row, &rcols) {
            index.entry(k).or_default().push(i);
        }
    }
    let probe = |rows: &[Row]| -> Vec<Row> {
        let mut out = Vec::new();
        for lrow in rows {
            let Some(k) = composite_key(lrow, &lcols) else { continue };
            for &ri in index.get(&k).map(Vec::as_slice).unwrap_or(&[]) {
                let mut row = lrow.clone();
                row.extend(right.rows[ri].iter().cloned());
                out.push(row);
            }
        }
        out
    };
    let rows = if parallel && left.rows.len() > PARALLEL_JOIN_ROWS {
        let chunks: Vec<&[Row]> = left.rows.chunks(PARALLEL_JOIN_ROWS).collect();
        par::map(&chunks, true, |c| probe(c)).into_iter().flatten().collect()
    } else {
        probe(&left.rows)
    };
    let mut keys = left.keys;
    keys.extend(right.keys);
    let mut types = left.types;
    types.extend(right.types);
    Ok(Relation { keys, types, rows })
}

fn cross_join(left: Relation, right: Relation) -> Relation {
    let mut rows = Vec::with_capacity(left.rows.len() * right.rows.len());
    for l in &left.rows {
        for r in &right.rows {
            let mut row = l.clone();
            row.extend(r.iter().cloned());
            rows.push(row);
        }
    }
    let mut keys = left.keys;
    keys.extend(right.keys);
    let mut types = left.types;
    types.extend(right.types);
    Relation { keys, types, rows }
}

fn join_on(graph: &QueryGraph, prefix: u64, leaf: usize) -> Vec<(ColKey, ColKey, MatchMode)> {
    graph
        .edges_between(prefix, leaf)
        .into_iter()
        .map(|i| {
            let e = &graph.edges[i];
            let (mine, other) = e.oriented(leaf);
            (other.clone(), mine.clone(), e.mode)
        })
        .collect()
}

fn join(graph: &QueryGraph, prefix: u64, left: Relation, right: Relation, leaf: usize, parallel: bool) -> Result<Relation> {
    let on = join_on(graph, prefix, leaf);
    if on.is_empty() {
        Ok(cross_join(left, right))
    } else {
        hash_join(left, right, &on, parallel)
    }
}

/// Keep rows satisfying `pred` (if any) and project `leaf`'s columns.
fn filter_project(
    leaf: &Leaf,
    schema: &[crate::table::ColumnSchema],
    rows: Vec<Row>,
    pred: Option<&NativePredicate>,
) -> Result<Relation> {
    let bound = pred.map(|p| p.body.bind(schema)).transpose()?;
    let idx: Vec<usize> = leaf
        .columns
        .iter()
        .map(|c| {
            schema
                .iter()
                .position(|s| s.name == c.name)
                .ok_or_else(|| Error::Plan(format!("`{}` has no column `{}`", leaf.label, c.name)))
        })
        .collect::<Result<_>>()?;
    let rows = rows
        .into_iter()
        .filter(|r| bound.as_ref().is_none_or(|b| b.eval(r)))
        .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
        .collect();
    Ok(Relation {
        rows,
        ..Relation::empty(leaf)
    })
}

fn column_names(leaf: &Leaf) -> Vec<&str> {
    leaf.columns.iter().map(|c| c.name.as_str()).collect()
}

impl ExecContext<'_> {
    fn local_table(&self, source: &LocalSource) -> Result<Arc<ResultTable>> {
        match source {
            LocalSource::Workspace(t) => Ok(t.clone()),
            LocalSource::Definition(id) => self
                .definitions
                .get(id)
                .cloned()
                .ok_or_else(|| Error::Plan(format!("definition {id} has not been executed"))),
        }
    }

    /// Fetch one leaf in bulk. Without pushdown, catalog leaves are read
    /// unfiltered and filtered here; sources that cannot enumerate always
    /// receive the predicate, since they have no other access path.
    fn fetch(&self, leaf: &Leaf, pushdown: bool) -> Result<(Relation, Vec<ProvenanceEntry>)> {
        match &leaf.input {
            LeafInput::Local { name, source, .. } => {
                let t = self.local_table(source)?;
                let rel = filter_project(leaf, &t.schema, t.rows.clone(), leaf.predicate.as_ref())?;
                let native = match &leaf.predicate {
                    Some(p) => format!("{name} | {}", p.native_text()),
                    None => name.clone(),
                };
                Ok((rel, vec![ProvenanceEntry::new(SourceRef::Workspace(name.clone()), native, 0)]))
            }
            LeafInput::Catalog { table, source } => {
                let rt = self.engine.runtime(source)?;
                let push = pushdown || !rt.capabilities().enumerate;
                let mut req = FindRequest::new(table.clone(), self.principal);
                if push {
                    req = req.project(&column_names(leaf));
                    if let Some(p) = &leaf.predicate {
                        req = req.filter(p.clone());
                    }
                    let t = rt.execute_find(&req)?;
                    Ok((
                        Relation {
                            rows: t.rows,
                            ..Relation::empty(leaf)
                        },
                        t.provenance,
                    ))
                } else {
                    let t = rt.execute_find(&req)?;
                    let rel = filter_project(leaf, &t.schema, t.rows, leaf.predicate.as_ref())?;
                    Ok((rel, t.provenance))
                }
            }
        }
    }

    /// One native call per distinct outer value of `edge`'s far column.
    fn probe(
        &self,
        leaf: &Leaf,
        table: &TableSchema,
        source: &str,
        edge: usize,
        graph: &QueryGraph,
        outer: &Relation,
        pushdown: bool,
    ) -> Result<(Relation, Vec<ProvenanceEntry>)> {
        let e = &graph.edges[edge];
        let (mine, other) = e.oriented(leaf.id);
        let inner_ty = leaf
            .columns
            .iter()
            .find(|c| c.name == mine.name)
            .map(|c| c.ty)
            .ok_or_else(|| Error::Plan(format!("probe column `{}` is not fetched", mine.name)))?;
        let oi = outer.position(other)?;
        let mut seen = HashSet::new();
        let mut values = Vec::new();
        for row in &outer.rows {
            let v = &row[oi];
            if v.is_null() || class_of(outer.types[oi]) != class_of(inner_ty) {
                continue;
            }
            if let Some(k) = join_key(v, e.mode) {
                if seen.insert(k) {
                    values.push(v.clone());
                }
            }
        }
        if values.is_empty() {
            return Ok((Relation::empty(leaf), Vec::new()));
        }
        let rt = self.engine.runtime(source)?;
        let mut req = FindRequest::new(table.clone(), self.principal);
        if pushdown {
            req = req.project(&column_names(leaf));
            if let Some(p) = &leaf.predicate {
                req = req.filter(p.clone());
            }
            let t = rt.execute_probe_batch(&req, &mine.name, e.mode, &values, self.parallel)?;
            Ok((
                Relation {
                    rows: t.rows,
                    ..Relation::empty(leaf)
                },
                t.provenance,
            ))
        } else {
            let t = rt.execute_probe_batch(&req, &mine.name, e.mode, &values, self.parallel)?;
            let rel = filter_project(leaf, &t.schema, t.rows, leaf.predicate.as_ref())?;
            Ok((rel, t.provenance))
        }
    }
}

fn sum_sorted(mut xs: Vec<f64>) -> f64 {
    // Row order differs between plans; a fixed summation order keeps
    // floating-point results identical.
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum()
}

fn aggregate(spec: &AggregateSpec, rel: &Relation) -> Result<Value> {
    let Some(key) = &spec.key else {
        return Ok(Value::Integer(rel.rows.len() as i64));
    };
    let i = rel.position(key)?;
    let vals: Vec<&Value> = rel.rows.iter().map(|r| &r[i]).filter(|v| !v.is_null()).collect();
    Ok(match spec.function {
        AggregateFunction::Count => Value::Integer(vals.len() as i64),
        _ if vals.is_empty() => Value::Null,
        AggregateFunction::Sum if spec.schema.ty == SemanticType::Integer => {
            let mut acc: i64 = 0;
            for v in &vals {
                if let Value::Integer(x) = v {
                    acc = acc
                        .checked_add(*x)
                        .ok_or_else(|| Error::Plan(format!("{} overflows", spec.schema.name)))?;
                }
            }
            Value::Integer(acc)
        }
        AggregateFunction::Sum => Value::Real(sum_sorted(vals.iter().filter_map(|v| v.as_f64()).collect())),
        AggregateFunction::Avg => {
            let xs: Vec<f64> = vals.iter().filter_map(|v| v.as_f64()).collect();
            let n = xs.len() as f64;
            Value::Real(sum_sorted(xs) / n)
        }
        AggregateFunction::Min => (*vals.iter().min_by(|a, b| a.total_cmp(b)).unwrap()).clone(),
        AggregateFunction::Max => (*vals.iter().max_by(|a, b| a.total_cmp(b)).unwrap()).clone(),
    })
}

fn finish(graph: &QueryGraph, rel: Relation, provenance: Vec<ProvenanceEntry>) -> Result<ResultTable> {
    let (schema, rows) = match &graph.output {
        OutputSpec::Columns(cols) => {
            let idx: Vec<usize> = cols.iter().map(|c| rel.position(&c.key)).collect::<Result<_>>()?;
            let rows = rel
                .rows
                .into_iter()
                .map(|r| idx.iter().map(|&i| r[i].clone()).collect())
                .collect();
            (graph.output.schema(), rows)
        }
        OutputSpec::Aggregates(specs) => {
            let row = specs.iter().map(|s| aggregate(s, &rel)).collect::<Result<Row>>()?;
            (graph.output.schema(), vec![row])
        }
    };
    let mut t = ResultTable::new(schema, rows);
    t.provenance = provenance;
    t.validate()?;
    Ok(t)
}

/// Run `plan`: bulk leaves are fetched concurrently up front, then joined
/// in plan order; probe steps fetch once their outer side is known.
pub fn execute_physical(ctx: &ExecContext<'_>, plan: &PhysicalPlan) -> Result<Execution> {
    let started = Instant::now();
    let g = &plan.graph;
    let bulk: Vec<usize> = plan
        .steps
        .iter()
        .filter(|s| s.strategy == JoinStrategy::Bulk)
        .map(|s| s.leaf)
        .collect();
    let fetched = par::map(&bulk, ctx.parallel, |&l| ctx.fetch(&g.leaves[l], plan.pushdown));
    let mut bulk_results: HashMap<usize, (Relation, Vec<ProvenanceEntry>)> = HashMap::new();
    for (l, r) in bulk.iter().zip(fetched) {
        bulk_results.insert(*l, r?);
    }
    let mut provenance = Vec::new();
    let mut rel: Option<Relation> = None;
    let mut prefix = 0u64;
    for st in &plan.steps {
        let leaf = &g.leaves[st.leaf];
        let (right, prov) = match st.strategy {
            JoinStrategy::Bulk => bulk_results.remove(&st.leaf).expect("fetched above"),
            JoinStrategy::Probe(e) => {
                let LeafInput::Catalog { table, source } = &leaf.input else {
                    return Err(Error::Plan(format!("cannot probe local table `{}`", leaf.label)));
                };
                let outer = rel.as_ref().ok_or_else(|| Error::Plan("probe without an outer side".into()))?;
                ctx.probe(leaf, table, source, e, g, outer, plan.pushdown)?
            }
        };
        provenance.extend(prov);
        rel = Some(match rel {
            None => right,
            Some(left) => join(g, prefix, left, right, st.leaf, ctx.parallel)?,
        });
        prefix |= 1 << st.leaf;
    }
    let table = finish(g, rel.unwrap_or_default(), provenance)?;
    Ok(Execution {
        table,
        elapsed: started.elapsed(),
    })
}

/// Reference semantics: every leaf read unfiltered (where the source
/// allows), filtered locally, joined left to right as written.
pub fn execute_naive(ctx: &ExecContext<'_>, graph: &QueryGraph) -> Result<Execution> {
    let started = Instant::now();
    let mut provenance = Vec::new();
    let mut rel: Option<Relation> = None;
    let mut prefix = 0u64;
    for leaf in &graph.leaves {
        let (right, prov) = ctx.fetch(leaf, false)?;
        provenance.extend(prov);
        rel = Some(match rel {
            None => right,
            Some(left) => join(graph, prefix, left, right, leaf.id, false)?,
        });
        prefix |= 1 << leaf.id;
    }
    let table = finish(graph, rel.unwrap_or_default(), provenance)?;
    Ok(Execution {
        table,
        elapsed: started.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(leaf: usize, col: &str, ty: SemanticType, vals: Vec<Value>) -> Relation {
        Relation {
            keys: vec![ColKey::new(leaf, col)],
            types: vec![ty],
            rows: vals.into_iter().map(|v| vec![v]).collect(),
        }
    }

    #[test]
    fn hash_join_matches_normalized_text_and_skips_nulls() {
        let t = |s: &str| Value::Text(s.into());
        let l = rel(0, "a", SemanticType::Text, vec![t("Ada Lovelace"), Value::Null, t("Bob")]);
        let r = rel(1, "b", SemanticType::Text, vec![t("ada  lovelace"), t("ADA LOVELACE"), Value::Null]);
        let on = [(ColKey::new(0, "a"), ColKey::new(1, "b"), MatchMode::Exact)];
        let out = hash_join(l, r, &on, false).unwrap();
        assert_eq!(out.rows.len(), 2);
        assert_eq!(out.rows[0][1], t("ada  lovelace"));
    }

    #[test]
    fn entity_mode_ignores_honorifics() {
        let t = |s: &str| Value::Text(s.into());
        let l = rel(0, "a", SemanticType::Text, vec![t("Dr. Grace Hopper")]);
        let r = rel(1, "b", SemanticType::Text, vec![t("grace hopper")]);
        let on = [(ColKey::new(0, "a"), ColKey::new(1, "b"), MatchMode::Entity)];
        assert_eq!(hash_join(l.clone(), r.clone(), &on, false).unwrap().rows.len(), 1);
        let exact = [(ColKey::new(0, "a"), ColKey::new(1, "b"), MatchMode::Exact)];
        assert!(hash_join(l, r, &exact, false).unwrap().rows.is_empty());
    }

    #[test]
    fn numbers_join_across_integer_and_real() {
        let l = rel(0, "a", SemanticType::Integer, vec![Value::Integer(3), Value::Integer(0)]);
        let r = rel(1, "b", SemanticType::Real, vec![Value::Real(3.0), Value::Real(-0.0)]);
        let on = [(ColKey::new(0, "a"), ColKey::new(1, "b"), MatchMode::Exact)];
        assert_eq!(hash_join(l, r, &on, false).unwrap().rows.len(), 2);
    }

    #[test]
    fn parallel_join_preserves_order() {
        let l = rel(0, "a", SemanticType::Integer, (0..10_000).map(|i| Value::Integer(i % 97)).collect());
        let r = rel(1, "b", SemanticType::Integer, (0..97).map(Value::Integer).collect());
        let on = [(ColKey::new(0, "a"), ColKey::new(1, "b"), MatchMode::Exact)];
        let a = hash_join(l.clone(), r.clone(), &on, false).unwrap();
        let b = hash_join(l, r, &on, true).unwrap();
        assert_eq!(a.rows, b.rows);
    }
}
