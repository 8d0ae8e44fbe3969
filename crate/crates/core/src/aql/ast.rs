use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statement {
    Find(FindQuery),
    Schema(SchemaQuery),
    Save { query: FindQuery, name: String },
    Output {
        table: String,
        destination: Option<String>,
    },
    Delete { table: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemaQuery {
    AllSources,
    /// `? NAME` where NAME has no dot. Resolved against sources first, then tables.
    OneSource(String),
    /// `? SOURCE.table`
    OneTable(String),
}

/// A left-deep chain of FIND blocks: `head JOIN b1 JOIN b2 ...` = `((head ⋈ b1) ⋈ b2)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindQuery {
    pub head: FindBlock,
    pub joins: Vec<JoinClause>,
}

impl FindQuery {
    pub fn blocks(&self) -> impl Iterator<Item = &FindBlock> {
        std::iter::once(&self.head).chain(self.joins.iter().map(|j| &j.block))
    }

    pub fn has_aggregates(&self) -> bool {
        self.blocks()
            .flat_map(|b| &b.projections)
            .any(|p| matches!(p, Projection::Aggregate { .. }))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindBlock {
    pub projections: Vec<Projection>,
    pub source: String,
    /// Raw natural-language predicate, verbatim (trimmed).
    pub predicate: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinClause {
    pub condition: JoinCondition,
    pub block: FindBlock,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    Star,
    Column(String),
    Aggregate {
        function: AggregateFunction,
        /// `None` for `COUNT(*)`.
        column: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AggregateFunction {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggregateFunction {
    pub const ALL: [AggregateFunction; 5] = [
        AggregateFunction::Count,
        AggregateFunction::Sum,
        AggregateFunction::Avg,
        AggregateFunction::Min,
        AggregateFunction::Max,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            AggregateFunction::Count => "COUNT",
            AggregateFunction::Sum => "SUM",
            AggregateFunction::Avg => "AVG",
            AggregateFunction::Min => "MIN",
            AggregateFunction::Max => "MAX",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.keyword().eq_ignore_ascii_case(s))
    }

    pub fn requires_numeric(self) -> bool {
        matches!(self, AggregateFunction::Sum | AggregateFunction::Avg)
    }
}

impl fmt::Display for AggregateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum JoinCondition {
    /// Equality on every identically named projected column.
    NaturalByName,
    /// `ON l1 = r1, l2 = r2`
    Explicit(Vec<(String, String)>),
    /// `ON ENTITY l = r`: equality of normalized person/entity names.
    EntityName { left: String, right: String },
}
