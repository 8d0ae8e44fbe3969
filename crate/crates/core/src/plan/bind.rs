//! Name resolution and translation: FIND chain -> QueryGraph.

use std::collections::HashSet;
use std::sync::Arc;

use crate::aql::{AggregateFunction, FindQuery, JoinCondition, Projection};
use crate::catalog::{Catalog, TableSchema};
use crate::error::{Error, Result};
use crate::predicate::PredExpr;
use crate::table::{ColumnSchema, ResultTable};
use crate::translate::{Dialect, NativePredicate, Translator, TranslatorColumn};
use crate::value::SemanticType;
use crate::wrapper::MatchMode;

use super::{AggregateSpec, ColKey, JoinEdge, Leaf, LeafInput, OutputColumn, OutputSpec, QueryGraph};

#[derive(Debug, Clone)]
pub enum LocalSource {
    Workspace(Arc<ResultTable>),
    /// A table defined earlier in a compiled script.
    Definition(usize),
}

/// A single-table definition the consumer may fold into its own fetch.
#[derive(Debug, Clone)]
pub struct MergeInfo {
    pub table: TableSchema,
    pub source: String,
    pub predicate: Option<NativePredicate>,
}

#[derive(Debug, Clone)]
pub struct LocalRelation {
    pub name: String,
    pub schema: Vec<ColumnSchema>,
    pub rows: f64,
    pub source: LocalSource,
    pub merge: Option<MergeInfo>,
}

pub trait BindEnv {
    fn catalog(&self) -> &Catalog;
    fn dialect_of(&self, source: &str) -> Option<Dialect>;
    fn local(&self, name: &str) -> Option<LocalRelation>;
    fn translator(&self) -> &dyn Translator;
}

/// Translator view of derived columns: vocabulary comes from the catalog
/// column each one was read from.
pub fn translator_columns(catalog: &Catalog, schema: &[ColumnSchema]) -> Vec<TranslatorColumn> {
    schema
        .iter()
        .map(|c| TranslatorColumn {
            name: c.name.clone(),
            ty: c.ty,
            vocabulary: c
                .origin
                .as_ref()
                .and_then(|o| catalog.table(&o.table)?.column(&o.column).map(|d| d.vocabulary.clone()))
                .unwrap_or_default(),
        })
        .collect()
}

struct Resolved {
    label: String,
    input: LeafInput,
    visible: Vec<ColumnSchema>,
    predicate: Option<NativePredicate>,
}

/// Keyword nodes with no column list search every text column of the
/// table they were translated against; pin them to that table's columns
/// before the predicate moves to a wider one.
fn scope_keywords(p: &PredExpr, text_columns: &[String]) -> PredExpr {
    match p {
        PredExpr::Keyword { terms, columns } if columns.is_empty() => PredExpr::Keyword {
            terms: terms.clone(),
            columns: text_columns.to_vec(),
        },
        PredExpr::And(xs) => PredExpr::And(xs.iter().map(|x| scope_keywords(x, text_columns)).collect()),
        PredExpr::Or(xs) => PredExpr::Or(xs.iter().map(|x| scope_keywords(x, text_columns)).collect()),
        other => other.clone(),
    }
}

fn merge_predicates(
    def: Option<NativePredicate>,
    own: Option<NativePredicate>,
    dialect: Dialect,
    local_schema: &[ColumnSchema],
) -> Option<NativePredicate> {
    let text_columns: Vec<String> = local_schema
        .iter()
        .filter(|c| c.ty == SemanticType::Text)
        .map(|c| c.name.clone())
        .collect();
    let own = own.map(|mut o| {
        o.body = scope_keywords(&o.body, &text_columns);
        o
    });
    match (def, own) {
        (None, None) => None,
        (Some(d), None) => Some(d.retarget(dialect)),
        (None, Some(o)) => Some(o.retarget(dialect)),
        (Some(d), Some(o)) => {
            let mut merged = o.retarget(dialect);
            merged.body = PredExpr::And(vec![d.body, o.body]);
            merged.trace.patterns.push("merged with the saved definition's predicate".into());
            Some(merged)
        }
    }
}

fn resolve_block(
    env: &dyn BindEnv,
    source: &str,
    referenced: &[&str],
    utterance: Option<&str>,
) -> Result<Resolved> {
    if let Some(local) = env.local(source) {
        let own = match utterance {
            Some(u) => Some(env.translator().translate(
                u,
                &translator_columns(env.catalog(), &local.schema),
                Dialect::BooleanExpression,
            )?),
            None => None,
        };
        if let Some(m) = local.merge {
            let dialect = env
                .dialect_of(&m.source)
                .ok_or_else(|| Error::not_found("source", m.source.clone()))?;
            return Ok(Resolved {
                label: local.name.clone(),
                predicate: merge_predicates(m.predicate, own, dialect, &local.schema),
                visible: local.schema,
                input: LeafInput::Catalog {
                    source: m.source,
                    table: m.table,
                },
            });
        }
        return Ok(Resolved {
            label: local.name.clone(),
            visible: local.schema,
            predicate: own,
            input: LeafInput::Local {
                name: local.name,
                rows: local.rows,
                source: local.source,
            },
        });
    }
    let table = env.catalog().resolve_from(source, referenced)?;
    let src = table.source_name().to_string();
    let dialect = env
        .dialect_of(&src)
        .ok_or_else(|| Error::not_found("source", src.clone()))?;
    let predicate = match utterance {
        Some(u) => Some(env.translator().translate(
            u,
            &TranslatorColumn::from_table(&table),
            dialect,
        )?),
        None => None,
    };
    Ok(Resolved {
        label: table.name.clone(),
        visible: table.column_schemas(),
        predicate,
        input: LeafInput::Catalog { table, source: src },
    })
}

fn aggregate_type(f: AggregateFunction, col: Option<&ColumnSchema>) -> SemanticType {
    match (f, col) {
        (AggregateFunction::Count, _) | (_, None) => SemanticType::Integer,
        (AggregateFunction::Avg, _) => SemanticType::Real,
        (AggregateFunction::Sum, Some(c)) if c.ty == SemanticType::Integer => SemanticType::Integer,
        (AggregateFunction::Sum, _) => SemanticType::Real,
        (_, Some(c)) => c.ty,
    }
}

pub fn bind_query(q: &FindQuery, env: &dyn BindEnv) -> Result<QueryGraph> {
    let blocks: Vec<_> = q.blocks().collect();
    if blocks.len() > 64 {
        return Err(Error::Plan("at most 64 FIND blocks per statement".into()));
    }
    let mut resolved = Vec::with_capacity(blocks.len());
    for (i, b) in blocks.iter().enumerate() {
        let mut referenced: Vec<&str> = Vec::new();
        for p in &b.projections {
            match p {
                Projection::Column(c) | Projection::Aggregate { column: Some(c), .. } => {
                    referenced.push(c)
                }
                _ => {}
            }
        }
        if i > 0 {
            match &q.joins[i - 1].condition {
                JoinCondition::Explicit(pairs) => referenced.extend(pairs.iter().map(|(_, r)| r.as_str())),
                JoinCondition::EntityName { right, .. } => referenced.push(right),
                JoinCondition::NaturalByName => {}
            }
        }
        resolved.push(resolve_block(env, &b.source, &referenced, b.predicate.as_deref())?);
    }

    let has = |i: usize, c: &str| resolved[i].visible.iter().any(|v| v.name == c);
    let lookup = |i: usize, c: &str| -> Result<ColumnSchema> {
        resolved[i]
            .visible
            .iter()
            .find(|v| v.name == c)
            .cloned()
            .ok_or_else(|| Error::Plan(format!("unknown column `{c}` in `{}`", resolved[i].label)))
    };

    // projected plain columns and aggregates per block
    let mut plain: Vec<Vec<ColumnSchema>> = Vec::new();
    let mut aggs: Vec<AggregateSpec> = Vec::new();
    for (i, b) in blocks.iter().enumerate() {
        let mut cols = Vec::new();
        for p in &b.projections {
            match p {
                Projection::Star => cols.extend(resolved[i].visible.iter().cloned()),
                Projection::Column(c) => cols.push(lookup(i, c)?),
                Projection::Aggregate { function, column } => {
                    let col = column.as_deref().map(|c| lookup(i, c)).transpose()?;
                    if let Some(c) = &col {
                        if function.requires_numeric() && !c.ty.is_numeric() {
                            return Err(Error::Plan(format!(
                                "{function} needs a numeric column; `{}` is {}",
                                c.name, c.ty
                            )));
                        }
                    }
                    let name = match &col {
                        Some(c) => format!("{}_{}", function.keyword().to_lowercase(), c.name),
                        None => "count".to_string(),
                    };
                    aggs.push(AggregateSpec {
                        function: *function,
                        key: col.as_ref().map(|c| ColKey::new(i, c.name.clone())),
                        schema: ColumnSchema {
                            name,
                            ty: aggregate_type(*function, col.as_ref()),
                            origin: None,
                        },
                    });
                }
            }
        }
        plain.push(cols);
    }

    let mut edges = Vec::new();
    let mut dropped: HashSet<ColKey> = HashSet::new();
    for (j, clause) in q.joins.iter().enumerate() {
        let r = j + 1;
        let left_of = |c: &str| -> Result<usize> {
            (0..r)
                .find(|&k| has(k, c))
                .ok_or_else(|| Error::Plan(format!("join column `{c}` not found on the left side")))
        };
        let mut explicit = |pairs: Vec<(&String, &String)>, mode: MatchMode| -> Result<()> {
            for (l, rc) in pairs {
                let k = left_of(l)?;
                lookup(r, rc)?;
                edges.push(JoinEdge {
                    left: ColKey::new(k, l.clone()),
                    right: ColKey::new(r, rc.clone()),
                    mode,
                });
            }
            Ok(())
        };
        match &clause.condition {
            JoinCondition::Explicit(pairs) => {
                explicit(pairs.iter().map(|(a, b)| (a, b)).collect(), MatchMode::Exact)?
            }
            JoinCondition::EntityName { left, right } => explicit(vec![(left, right)], MatchMode::Entity)?,
            JoinCondition::NaturalByName => {
                for c in &plain[r] {
                    if let Some(k) = (0..r).find(|&k| plain[k].iter().any(|p| p.name == c.name)) {
                        let key = ColKey::new(r, c.name.clone());
                        if dropped.insert(key.clone()) {
                            edges.push(JoinEdge {
                                left: ColKey::new(k, c.name.clone()),
                                right: key,
                                mode: MatchMode::Exact,
                            });
                        }
                    }
                }
            }
        }
    }

    let output = if q.has_aggregates() {
        OutputSpec::Aggregates(aggs)
    } else {
        let mut used = HashSet::new();
        let mut out = Vec::new();
        for (i, cols) in plain.iter().enumerate() {
            for c in cols {
                let key = ColKey::new(i, c.name.clone());
                if dropped.contains(&key) {
                    continue;
                }
                let short = resolved[i].label.rsplit('.').next().unwrap_or_default();
                let mut name = c.name.clone();
                if used.contains(&name) {
                    name = format!("{short}.{}", c.name);
                }
                let base = name.clone();
                let mut n = 2;
                while used.contains(&name) {
                    name = format!("{base}_{n}");
                    n += 1;
                }
                used.insert(name.clone());
                out.push(OutputColumn {
                    key,
                    schema: ColumnSchema {
                        name,
                        ty: c.ty,
                        origin: c.origin.clone(),
                    },
                });
            }
        }
        OutputSpec::Columns(out)
    };

    // Fetch what the output, aggregates, and joins need, in declared order.
    let mut needed: Vec<HashSet<String>> = vec![HashSet::new(); blocks.len()];
    for (i, cols) in plain.iter().enumerate() {
        needed[i].extend(cols.iter().map(|c| c.name.clone()));
    }
    if let OutputSpec::Aggregates(a) = &output {
        for s in a.iter().filter_map(|s| s.key.as_ref()) {
            needed[s.leaf].insert(s.name.clone());
        }
    }
    for e in &edges {
        needed[e.left.leaf].insert(e.left.name.clone());
        needed[e.right.leaf].insert(e.right.name.clone());
    }
    let leaves = resolved
        .into_iter()
        .enumerate()
        .map(|(i, r)| Leaf {
            id: i,
            label: r.label,
            columns: r
                .visible
                .into_iter()
                .filter(|c| needed[i].contains(&c.name))
                .collect(),
            input: r.input,
            predicate: r.predicate,
        })
        .collect();
    Ok(QueryGraph {
        leaves,
        edges,
        output,
    })
}
