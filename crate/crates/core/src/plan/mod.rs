//! Logical and physical plans.
//!
//! A FIND chain is bound into a [`QueryGraph`]: one [`Leaf`] per FIND block,
//! join edges between leaf columns, and an output spec. The logical plan is
//! the chain as written; the optimizer turns it into a left-deep
//! [`PhysicalPlan`] with a strategy per join step.

mod bind;
pub mod cost;
mod explain;
mod optimize;

use std::sync::Arc;

use serde::Serialize;

use crate::aql::AggregateFunction;
use crate::catalog::TableSchema;
use crate::table::{ColumnSchema, ResultTable};
use crate::translate::NativePredicate;
use crate::wrapper::MatchMode;

pub use bind::{bind_query, BindEnv, LocalRelation, LocalSource, MergeInfo};
pub use cost::{CostModel, Estimate, StepEstimate, TableCost};
pub use explain::{explain, explain_logical};
pub use optimize::{brute_force_minimum, enumerate_plans, optimize, plan_with, DP_LEAF_LIMIT};

/// Column `name` of leaf `leaf`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ColKey {
    pub leaf: usize,
    pub name: String,
}

impl ColKey {
    pub fn new(leaf: usize, name: impl Into<String>) -> Self {
        ColKey {
            leaf,
            name: name.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum LeafInput {
    Catalog { table: TableSchema, source: String },
    Local { name: String, rows: f64, source: LocalSource },
}

#[derive(Debug, Clone)]
pub struct Leaf {
    pub id: usize,
    /// Resolved table name (qualified for catalog tables).
    pub label: String,
    pub input: LeafInput,
    /// Columns fetched from the input, in declared order.
    pub columns: Vec<ColumnSchema>,
    pub predicate: Option<NativePredicate>,
}

impl Leaf {
    pub fn is_catalog(&self) -> bool {
        matches!(self.input, LeafInput::Catalog { .. })
    }

    pub fn keys(&self) -> Vec<ColKey> {
        self.columns.iter().map(|c| ColKey::new(self.id, c.name.clone())).collect()
    }

    pub fn short_label(&self) -> &str {
        self.label.rsplit_once('.').map_or(&self.label, |(_, t)| t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JoinEdge {
    pub left: ColKey,
    pub right: ColKey,
    pub mode: MatchMode,
}

impl JoinEdge {
    pub fn touches(&self, leaf: usize) -> bool {
        self.left.leaf == leaf || self.right.leaf == leaf
    }

    /// The endpoint on `leaf` and the other endpoint.
    pub fn oriented(&self, leaf: usize) -> (&ColKey, &ColKey) {
        if self.right.leaf == leaf {
            (&self.right, &self.left)
        } else {
            (&self.left, &self.right)
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutputColumn {
    pub key: ColKey,
    pub schema: ColumnSchema,
}

#[derive(Debug, Clone)]
pub struct AggregateSpec {
    pub function: AggregateFunction,
    /// `None` for `COUNT(*)`.
    pub key: Option<ColKey>,
    pub schema: ColumnSchema,
}

#[derive(Debug, Clone)]
pub enum OutputSpec {
    Columns(Vec<OutputColumn>),
    Aggregates(Vec<AggregateSpec>),
}

impl OutputSpec {
    pub fn schema(&self) -> Vec<ColumnSchema> {
        match self {
            OutputSpec::Columns(cs) => cs.iter().map(|c| c.schema.clone()).collect(),
            OutputSpec::Aggregates(a) => a.iter().map(|c| c.schema.clone()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryGraph {
    pub leaves: Vec<Leaf>,
    pub edges: Vec<JoinEdge>,
    pub output: OutputSpec,
}

impl QueryGraph {
    pub fn edges_between(&self, set: u64, leaf: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                let (mine, other) = e.oriented(leaf);
                mine.leaf == leaf && other.leaf != leaf && set & (1 << other.leaf) != 0
            })
            .map(|(i, _)| i)
            .collect()
    }

    pub fn connected(&self, set: u64, leaf: usize) -> bool {
        !self.edges_between(set, leaf).is_empty()
    }
}

#[derive(Debug, Clone)]
pub enum Sink {
    Save(String),
    Output(Option<String>),
}

/// Operator tree as written: filters above unfiltered fetches, joins left
/// to right, output on top.
#[derive(Debug, Clone)]
pub enum LogicalNode {
    SourceFind { leaf: usize },
    Filter { leaf: usize, input: Box<LogicalNode> },
    Join { left: Box<LogicalNode>, right: Box<LogicalNode>, edges: Vec<usize> },
    Aggregate { input: Box<LogicalNode> },
    Project { input: Box<LogicalNode> },
    Sink { sink: Sink, input: Box<LogicalNode> },
}

#[derive(Debug, Clone)]
pub struct LogicalPlan {
    pub graph: Arc<QueryGraph>,
    pub root: LogicalNode,
}

impl LogicalPlan {
    pub fn from_graph(graph: QueryGraph, sink: Option<Sink>) -> Self {
        let leaf = |l: &Leaf| {
            let scan = LogicalNode::SourceFind { leaf: l.id };
            if l.predicate.is_some() {
                LogicalNode::Filter {
                    leaf: l.id,
                    input: Box::new(scan),
                }
            } else {
                scan
            }
        };
        let mut root = leaf(&graph.leaves[0]);
        let mut joined: u64 = 1;
        for l in &graph.leaves[1..] {
            let edges = graph.edges_between(joined, l.id);
            root = LogicalNode::Join {
                left: Box::new(root),
                right: Box::new(leaf(l)),
                edges,
            };
            joined |= 1 << l.id;
        }
        root = match graph.output {
            OutputSpec::Aggregates(_) => LogicalNode::Aggregate { input: Box::new(root) },
            OutputSpec::Columns(_) => LogicalNode::Project { input: Box::new(root) },
        };
        if let Some(sink) = sink {
            root = LogicalNode::Sink {
                sink,
                input: Box::new(root),
            };
        }
        LogicalPlan {
            graph: Arc::new(graph),
            root,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(tag = "strategy", content = "edge", rename_all = "snake_case")]
pub enum JoinStrategy {
    /// First leaf, or bulk fetch followed by a local hash join.
    Bulk,
    /// One native call per distinct value of the outer side of `edge`.
    Probe(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Step {
    pub leaf: usize,
    pub strategy: JoinStrategy,
}

#[derive(Debug, Clone)]
pub struct PhysicalPlan {
    pub graph: Arc<QueryGraph>,
    /// Left-deep join order; `steps[0]` is always `Bulk`.
    pub steps: Vec<Step>,
    /// Catalog leaves evaluate their predicate natively when true.
    pub pushdown: bool,
    pub estimate: Estimate,
}

/// Result tables available to a statement by name.
pub type LocalTables = std::collections::HashMap<String, Arc<ResultTable>>;
