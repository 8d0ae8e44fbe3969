//! In-memory native store for the fixture wrappers. Predicates are answered
//! by set algebra over row ids, driven by hash indexes on text columns and,
//! for corpus-style tables, a positional inverted index.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::predicate::{coerce_literal, compare, CmpOp, PredExpr};
use crate::table::ColumnSchema;
use crate::text::{contains_phrase, normalize_entity, normalize_text, tokenize};
use crate::value::{Row, SemanticType, Value};

use super::{Binding, MatchMode};

type Ids = BTreeSet<u32>;
/// term -> row -> ascending positions
type Postings = HashMap<String, BTreeMap<u32, Vec<u32>>>;

pub(crate) struct IndexedTable {
    pub schema: Vec<ColumnSchema>,
    pub rows: Vec<Row>,
    exact: Vec<Option<HashMap<String, Vec<u32>>>>,
    entity: Vec<Option<HashMap<String, Vec<u32>>>>,
    postings: Option<Vec<Postings>>,
}

fn bad(msg: String) -> Error {
    Error::InvalidRequest(msg)
}

impl IndexedTable {
    pub fn new(schema: Vec<ColumnSchema>, rows: Vec<Row>, positional: bool) -> Self {
        let text_index = |key: fn(&str) -> String| -> Vec<Option<HashMap<String, Vec<u32>>>> {
            schema
                .iter()
                .enumerate()
                .map(|(c, col)| {
                    (col.ty == SemanticType::Text).then(|| {
                        let mut m: HashMap<String, Vec<u32>> = HashMap::new();
                        for (r, row) in rows.iter().enumerate() {
                            if let Value::Text(s) = &row[c] {
                                m.entry(key(s)).or_default().push(r as u32);
                            }
                        }
                        m
                    })
                })
                .collect()
        };
        let exact = text_index(normalize_text);
        let entity = text_index(normalize_entity);
        let postings = positional.then(|| {
            (0..schema.len())
                .map(|c| {
                    let mut p: Postings = HashMap::new();
                    for (r, row) in rows.iter().enumerate() {
                        if row[c].is_null() {
                            continue;
                        }
                        for (pos, term) in tokenize(&row[c].to_string()).into_iter().enumerate() {
                            p.entry(term)
                                .or_default()
                                .entry(r as u32)
                                .or_default()
                                .push(pos as u32);
                        }
                    }
                    p
                })
                .collect()
        });
        IndexedTable {
            schema,
            rows,
            exact,
            entity,
            postings,
        }
    }

    fn column(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| bad(format!("unknown column `{name}`")))
    }

    fn all(&self) -> Ids {
        (0..self.rows.len() as u32).collect()
    }

    fn scan(&self, f: impl Fn(&Row) -> bool) -> Ids {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, r)| f(r))
            .map(|(i, _)| i as u32)
            .collect()
    }

    fn lookup(index: &Option<HashMap<String, Vec<u32>>>, key: &str) -> Option<Ids> {
        index
            .as_ref()
            .map(|m| m.get(key).map(|v| v.iter().copied().collect()).unwrap_or_default())
    }

    /// Row ids, ascending, satisfying the predicate and every binding.
    pub fn select(&self, pred: Option<&PredExpr>, bindings: &[Binding]) -> Result<Vec<u32>> {
        let mut ids = match pred {
            Some(p) => self.eval(p)?,
            None => self.all(),
        };
        for b in bindings {
            let hits = self.binding(b)?;
            ids = ids.intersection(&hits).copied().collect();
        }
        Ok(ids.into_iter().collect())
    }

    fn binding(&self, b: &Binding) -> Result<Ids> {
        let c = self.column(&b.column)?;
        let ty = self.schema[c].ty;
        let Some(lit) = coerce_literal(&b.value, ty) else {
            return Ok(Ids::new());
        };
        if b.mode == MatchMode::Entity {
            if let Some(hit) = Self::lookup(&self.entity[c], &normalize_entity(&lit.to_string())) {
                return Ok(hit);
            }
        }
        Ok(self.compare_leaf(c, CmpOp::Eq, &lit))
    }

    fn compare_leaf(&self, c: usize, op: CmpOp, lit: &Value) -> Ids {
        if let (CmpOp::Eq, Value::Text(s)) = (op, lit) {
            if let Some(hit) = Self::lookup(&self.exact[c], &normalize_text(s)) {
                return hit;
            }
        }
        self.scan(|r| compare(&r[c], op, lit))
    }

    fn text_columns(&self) -> Vec<usize> {
        (0..self.schema.len())
            .filter(|&i| self.schema[i].ty == SemanticType::Text)
            .collect()
    }

    fn eval(&self, p: &PredExpr) -> Result<Ids> {
        Ok(match p {
            PredExpr::Compare { column, op, value } => {
                let c = self.column(column)?;
                let ty = self.schema[c].ty;
                let lit = coerce_literal(value, ty)
                    .ok_or_else(|| bad(format!("literal `{value}` is not a valid {ty}")))?;
                self.compare_leaf(c, *op, &lit)
            }
            PredExpr::Contains { column, phrase } => {
                let c = self.column(column)?;
                let needle = tokenize(phrase);
                match (&self.postings, needle.split_first()) {
                    (_, None) => self.scan(|r| !r[c].is_null()),
                    (Some(post), Some((first, rest))) => {
                        let col = &post[c];
                        let mut out = Ids::new();
                        if let Some(rows) = col.get(first) {
                            for (&row, starts) in rows {
                                let hit = starts.iter().any(|&p| {
                                    rest.iter().enumerate().all(|(k, t)| {
                                        col.get(t)
                                            .and_then(|m| m.get(&row))
                                            .is_some_and(|ps| ps.binary_search(&(p + 1 + k as u32)).is_ok())
                                    })
                                });
                                if hit {
                                    out.insert(row);
                                }
                            }
                        }
                        out
                    }
                    (None, Some(_)) => self.scan(|r| {
                        !r[c].is_null() && contains_phrase(&tokenize(&r[c].to_string()), &needle)
                    }),
                }
            }
            PredExpr::Keyword { terms, columns } => {
                let cols = if columns.is_empty() {
                    self.text_columns()
                } else {
                    columns.iter().map(|c| self.column(c)).collect::<Result<_>>()?
                };
                let terms: Vec<String> = terms.iter().flat_map(|t| tokenize(t)).collect();
                match &self.postings {
                    Some(post) => {
                        let mut ids = self.all();
                        for t in &terms {
                            let hits: Ids = cols
                                .iter()
                                .filter_map(|&c| post[c].get(t))
                                .flat_map(|m| m.keys().copied())
                                .collect();
                            ids = ids.intersection(&hits).copied().collect();
                        }
                        ids
                    }
                    None => self.scan(|r| {
                        let bag: BTreeSet<String> = cols
                            .iter()
                            .filter(|&&c| !r[c].is_null())
                            .flat_map(|&c| tokenize(&r[c].to_string()))
                            .collect();
                        terms.iter().all(|t| bag.contains(t))
                    }),
                }
            }
            PredExpr::And(xs) => {
                let mut ids = self.all();
                for x in xs {
                    ids = ids.intersection(&self.eval(x)?).copied().collect();
                }
                ids
            }
            PredExpr::Or(xs) => {
                let mut ids = Ids::new();
                for x in xs {
                    ids.extend(self.eval(x)?);
                }
                ids
            }
        })
    }

    /// Term-frequency score over text columns; no length normalization.
    pub fn score(&self, row: u32, terms: &[String]) -> u64 {
        let Some(post) = &self.postings else { return 0 };
        terms
            .iter()
            .map(|t| {
                self.text_columns()
                    .iter()
                    .filter_map(|&c| post[c].get(t).and_then(|m| m.get(&row)))
                    .map(|ps| ps.len() as u64)
                    .sum::<u64>()
            })
            .sum()
    }
}

/// Terms a ranked search scores against: every Keyword term and Contains phrase term.
pub(crate) fn query_terms(p: &PredExpr, out: &mut Vec<String>) {
    match p {
        PredExpr::Keyword { terms, .. } => out.extend(terms.iter().flat_map(|t| tokenize(t))),
        PredExpr::Contains { phrase, .. } => out.extend(tokenize(phrase)),
        PredExpr::Compare { .. } => {}
        PredExpr::And(xs) | PredExpr::Or(xs) => xs.iter().for_each(|x| query_terms(x, out)),
    }
}
