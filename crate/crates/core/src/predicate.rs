//! Dialect-neutral predicate tree and its reference semantics.
//!
//! Every wrapper that accepts a predicate natively must select exactly the
//! rows [`BoundPredicate::eval`] selects on the same stored rows. The
//! wrappers use their own access paths (hash indexes, inverted indexes,
//! remote search), so this evaluator doubles as their conformance oracle.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::ColumnSchema;
use crate::text::{contains_phrase, normalize_text, tokenize};
use crate::value::{SemanticType, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CmpOp {
    Eq,
    Gt,
    Lt,
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Gt => ">",
            CmpOp::Lt => "<",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredExpr {
    /// `column op value`; null cells never match.
    Compare {
        column: String,
        op: CmpOp,
        value: Value,
    },
    /// The column's terms contain the phrase's terms as a contiguous run.
    Contains { column: String, phrase: String },
    /// Every term occurs somewhere across the listed columns.
    Keyword {
        terms: Vec<String>,
        columns: Vec<String>,
    },
    And(Vec<PredExpr>),
    Or(Vec<PredExpr>),
}

/// Node families, used to declare which predicates a wrapper evaluates natively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PredKind {
    Compare,
    Contains,
    Keyword,
}

impl PredExpr {
    pub fn and(mut parts: Vec<PredExpr>) -> PredExpr {
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PredExpr::And(parts)
        }
    }

    pub fn or(mut parts: Vec<PredExpr>) -> PredExpr {
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            PredExpr::Or(parts)
        }
    }

    pub fn columns(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns(&self, out: &mut BTreeSet<String>) {
        match self {
            PredExpr::Compare { column, .. } | PredExpr::Contains { column, .. } => {
                out.insert(column.clone());
            }
            PredExpr::Keyword { columns, .. } => out.extend(columns.iter().cloned()),
            PredExpr::And(xs) | PredExpr::Or(xs) => xs.iter().for_each(|x| x.collect_columns(out)),
        }
    }

    pub fn kinds(&self) -> BTreeSet<PredKind> {
        let mut out = BTreeSet::new();
        self.collect_kinds(&mut out);
        out
    }

    fn collect_kinds(&self, out: &mut BTreeSet<PredKind>) {
        match self {
            PredExpr::Compare { .. } => {
                out.insert(PredKind::Compare);
            }
            PredExpr::Contains { .. } => {
                out.insert(PredKind::Contains);
            }
            PredExpr::Keyword { .. } => {
                out.insert(PredKind::Keyword);
            }
            PredExpr::And(xs) | PredExpr::Or(xs) => xs.iter().for_each(|x| x.collect_kinds(out)),
        }
    }

    pub fn rename_columns(&self, f: &impl Fn(&str) -> String) -> PredExpr {
        match self {
            PredExpr::Compare { column, op, value } => PredExpr::Compare {
                column: f(column),
                op: *op,
                value: value.clone(),
            },
            PredExpr::Contains { column, phrase } => PredExpr::Contains {
                column: f(column),
                phrase: phrase.clone(),
            },
            PredExpr::Keyword { terms, columns } => PredExpr::Keyword {
                terms: terms.clone(),
                columns: columns.iter().map(|c| f(c)).collect(),
            },
            PredExpr::And(xs) => PredExpr::And(xs.iter().map(|x| x.rename_columns(f)).collect()),
            PredExpr::Or(xs) => PredExpr::Or(xs.iter().map(|x| x.rename_columns(f)).collect()),
        }
    }

    /// Split a top-level conjunction into its conjuncts.
    pub fn conjuncts(&self) -> Vec<PredExpr> {
        match self {
            PredExpr::And(xs) => xs.iter().flat_map(PredExpr::conjuncts).collect(),
            other => vec![other.clone()],
        }
    }

    pub fn bind(&self, schema: &[ColumnSchema]) -> Result<BoundPredicate> {
        let idx = |name: &str| -> Result<(usize, SemanticType)> {
            schema
                .iter()
                .position(|c| c.name == name)
                .map(|i| (i, schema[i].ty))
                .ok_or_else(|| Error::Plan(format!("predicate references unknown column `{name}`")))
        };
        Ok(match self {
            PredExpr::Compare { column, op, value } => {
                let (i, ty) = idx(column)?;
                let lit = coerce_literal(value, ty).ok_or_else(|| {
                    Error::Plan(format!("literal `{value}` is not a valid {ty} for `{column}`"))
                })?;
                BoundPredicate::Compare {
                    index: i,
                    op: *op,
                    value: lit,
                }
            }
            PredExpr::Contains { column, phrase } => BoundPredicate::Contains {
                index: idx(column)?.0,
                phrase: tokenize(phrase),
            },
            PredExpr::Keyword { terms, columns } => {
                let indices = if columns.is_empty() {
                    (0..schema.len())
                        .filter(|&i| schema[i].ty == SemanticType::Text)
                        .collect()
                } else {
                    columns
                        .iter()
                        .map(|c| idx(c).map(|p| p.0))
                        .collect::<Result<Vec<_>>>()?
                };
                BoundPredicate::Keyword {
                    indices,
                    terms: terms.iter().flat_map(|t| tokenize(t)).collect(),
                }
            }
            PredExpr::And(xs) => BoundPredicate::And(
                xs.iter().map(|x| x.bind(schema)).collect::<Result<_>>()?,
            ),
            PredExpr::Or(xs) => BoundPredicate::Or(
                xs.iter().map(|x| x.bind(schema)).collect::<Result<_>>()?,
            ),
        })
    }
}

/// Coerce a decoded literal to the column type; text literals are parsed.
pub fn coerce_literal(value: &Value, ty: SemanticType) -> Option<Value> {
    match (value, ty) {
        (Value::Text(s), t) => Value::parse_as(s, t),
        (Value::Integer(i), SemanticType::Real) => Some(Value::Real(*i as f64)),
        (Value::Integer(i), SemanticType::Text) => Some(Value::Text(i.to_string())),
        (v, t) if v.conforms_to(t) && !v.is_null() => Some(v.clone()),
        _ => None,
    }
}

impl fmt::Display for PredExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredExpr::Compare { column, op, value } => write!(f, "{column} {op} '{value}'"),
            PredExpr::Contains { column, phrase } => write!(f, "{column} CONTAINS '{phrase}'"),
            PredExpr::Keyword { terms, columns } => {
                write!(f, "KEYWORDS({}) IN ({})", terms.join(" "), columns.join(", "))
            }
            PredExpr::And(xs) | PredExpr::Or(xs) => {
                let sep = if matches!(self, PredExpr::And(_)) { " AND " } else { " OR " };
                let parts: Vec<String> = xs.iter().map(|x| format!("({x})")).collect();
                f.write_str(&parts.join(sep))
            }
        }
    }
}

/// A predicate resolved against a concrete schema.
#[derive(Debug, Clone)]
pub enum BoundPredicate {
    Compare {
        index: usize,
        op: CmpOp,
        value: Value,
    },
    Contains {
        index: usize,
        phrase: Vec<String>,
    },
    Keyword {
        indices: Vec<usize>,
        terms: Vec<String>,
    },
    And(Vec<BoundPredicate>),
    Or(Vec<BoundPredicate>),
}

impl BoundPredicate {
    pub fn eval(&self, row: &[Value]) -> bool {
        match self {
            BoundPredicate::Compare { index, op, value } => compare(&row[*index], *op, value),
            BoundPredicate::Contains { index, phrase } => match &row[*index] {
                Value::Null => false,
                v => contains_phrase(&tokenize(&v.to_string()), phrase),
            },
            BoundPredicate::Keyword { indices, terms } => {
                let bag: BTreeSet<String> = indices
                    .iter()
                    .filter(|&&i| !row[i].is_null())
                    .flat_map(|&i| tokenize(&row[i].to_string()))
                    .collect();
                terms.iter().all(|t| bag.contains(t))
            }
            BoundPredicate::And(xs) => xs.iter().all(|x| x.eval(row)),
            BoundPredicate::Or(xs) => xs.iter().any(|x| x.eval(row)),
        }
    }
}

pub fn compare(cell: &Value, op: CmpOp, lit: &Value) -> bool {
    use std::cmp::Ordering;
    let ord = match (cell, lit) {
        (Value::Null, _) | (_, Value::Null) => return false,
        (Value::Text(a), Value::Text(b)) => normalize_text(a).cmp(&normalize_text(b)),
        (a, b) => {
            if a.rank() != b.rank() {
                return false;
            }
            a.total_cmp(b)
        }
    };
    match op {
        CmpOp::Eq => ord == Ordering::Equal,
        CmpOp::Gt => ord == Ordering::Greater,
        CmpOp::Lt => ord == Ordering::Less,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Vec<ColumnSchema> {
        vec![
            ColumnSchema::new("title", SemanticType::Text),
            ColumnSchema::new("hired", SemanticType::Date),
            ColumnSchema::new("n", SemanticType::Integer),
        ]
    }

    fn row(title: &str, hired: &str, n: i64) -> Vec<Value> {
        vec![
            Value::Text(title.into()),
            Value::parse_as(hired, SemanticType::Date).unwrap(),
            Value::Integer(n),
        ]
    }

    #[test]
    fn compare_coerces_text_literals() {
        let p = PredExpr::Compare {
            column: "hired".into(),
            op: CmpOp::Gt,
            value: Value::Text("2020-01-01".into()),
        }
        .bind(&schema())
        .unwrap();
        assert!(p.eval(&row("x", "2021-05-01", 1)));
        assert!(!p.eval(&row("x", "2019-05-01", 1)));
    }

    #[test]
    fn text_equality_is_case_and_space_insensitive() {
        let p = PredExpr::Compare {
            column: "title".into(),
            op: CmpOp::Eq,
            value: Value::Text("associate  professor".into()),
        }
        .bind(&schema())
        .unwrap();
        assert!(p.eval(&row("Associate Professor", "2020-01-01", 0)));
    }

    #[test]
    fn null_operands_never_match() {
        let p = PredExpr::Contains {
            column: "title".into(),
            phrase: "x".into(),
        }
        .bind(&schema())
        .unwrap();
        assert!(!p.eval(&[Value::Null, Value::Null, Value::Null]));
        let c = PredExpr::Compare {
            column: "n".into(),
            op: CmpOp::Lt,
            value: Value::Integer(5),
        }
        .bind(&schema())
        .unwrap();
        assert!(!c.eval(&[Value::Null, Value::Null, Value::Null]));
    }

    #[test]
    fn bad_literal_is_rejected_at_bind() {
        let p = PredExpr::Compare {
            column: "n".into(),
            op: CmpOp::Eq,
            value: Value::Text("many".into()),
        };
        assert!(p.bind(&schema()).is_err());
    }

    #[test]
    fn keyword_terms_may_come_from_different_columns() {
        let schema = vec![
            ColumnSchema::new("a", SemanticType::Text),
            ColumnSchema::new("b", SemanticType::Text),
        ];
        let p = PredExpr::Keyword {
            terms: vec!["turing".into(), "award".into()],
            columns: vec![],
        }
        .bind(&schema)
        .unwrap();
        assert!(p.eval(&[Value::Text("Turing".into()), Value::Text("award 1999".into())]));
        assert!(!p.eval(&[Value::Text("Turing".into()), Value::Null]));
    }

    #[test]
    fn json_round_trip() {
        let p = PredExpr::Or(vec![
            PredExpr::Keyword {
                terms: vec!["nobel".into(), "prize".into()],
                columns: vec!["text".into()],
            },
            PredExpr::Compare {
                column: "n".into(),
                op: CmpOp::Eq,
                value: Value::Integer(3),
            },
        ]);
        let s = serde_json::to_string(&p).unwrap();
        let back: PredExpr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
    }
}
