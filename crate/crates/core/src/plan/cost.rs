//! Cost model and estimation.
//!
//! Costs are abstract units. A bulk fetch costs one call setup per page plus
//! a per-row transfer cost; a probe join costs one call setup per outer
//! binding value plus the rows each probe returns; a hash join adds a
//! per-row local cost over both inputs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predicate::{CmpOp, PredExpr};
use crate::text::tokenize;

use super::{JoinStrategy, LeafInput, PhysicalPlan, QueryGraph, Step};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableCost {
    pub per_call_cost: Option<f64>,
    pub per_row_cost: Option<f64>,
    pub row_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModel {
    pub join_row_cost: f64,
    pub eq_selectivity: f64,
    pub keyword_term_selectivity: f64,
    pub contains_selectivity: f64,
    pub range_selectivity: f64,
    /// Per-table overrides of catalog statistics, keyed by qualified name.
    pub tables: BTreeMap<String, TableCost>,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            join_row_cost: 0.0001,
            eq_selectivity: 0.1,
            keyword_term_selectivity: 0.05,
            contains_selectivity: 0.3,
            range_selectivity: 0.3,
            tables: BTreeMap::new(),
        }
    }
}

fn non_negative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Plan(format!("cost parameter `{name}` must be non-negative, got {v}")))
    }
}

impl CostModel {
    pub fn load(path: &Path) -> Result<Self> {
        let m: CostModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        non_negative("join_row_cost", self.join_row_cost)?;
        for (n, v) in [
            ("eq_selectivity", self.eq_selectivity),
            ("keyword_term_selectivity", self.keyword_term_selectivity),
            ("contains_selectivity", self.contains_selectivity),
            ("range_selectivity", self.range_selectivity),
        ] {
            non_negative(n, v)?;
            if v > 1.0 {
                return Err(Error::Plan(format!("selectivity `{n}` exceeds 1")));
            }
        }
        for (t, c) in &self.tables {
            for v in [c.per_call_cost, c.per_row_cost, c.row_estimate].into_iter().flatten() {
                non_negative(t, v)?;
            }
        }
        Ok(())
    }

    pub fn selectivity(&self, p: &PredExpr) -> f64 {
        match p {
            PredExpr::Compare { op: CmpOp::Eq, .. } => self.eq_selectivity,
            PredExpr::Compare { .. } => self.range_selectivity,
            PredExpr::Contains { .. } => self.contains_selectivity,
            PredExpr::Keyword { terms, .. } => {
                let n = terms.iter().map(|t| tokenize(t).len()).sum::<usize>();
                (self.keyword_term_selectivity * n as f64).min(1.0)
            }
            PredExpr::And(xs) => xs.iter().map(|x| self.selectivity(x)).product(),
            PredExpr::Or(xs) => xs.iter().map(|x| self.selectivity(x)).sum::<f64>().min(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepEstimate {
    pub leaf: usize,
    pub strategy: JoinStrategy,
    /// Estimated rows after this step.
    pub rows: f64,
    pub calls: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Estimate {
    pub cost: f64,
    pub calls: f64,
    pub rows: f64,
    pub steps: Vec<StepEstimate>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LeafStats {
    pub catalog: bool,
    pub base_rows: f64,
    pub selectivity: f64,
    pub setup: f64,
    pub row_cost: f64,
    pub page: Option<f64>,
}

impl LeafStats {
    pub fn rows_out(&self) -> f64 {
        self.base_rows * self.selectivity
    }

    fn transfer(&self, pushdown: bool) -> f64 {
        if pushdown {
            self.rows_out()
        } else {
            self.base_rows
        }
    }

    fn pages(&self, rows: f64) -> f64 {
        match self.page {
            Some(p) if p > 0.0 => (rows / p).ceil().max(1.0),
            _ => 1.0,
        }
    }
}

/// Everything step costs depend on, precomputed per graph.
pub(crate) struct CostContext<'a> {
    pub graph: &'a QueryGraph,
    pub model: &'a CostModel,
    pub stats: Vec<LeafStats>,
    pub pushdown: bool,
}

impl<'a> CostContext<'a> {
    pub fn new(graph: &'a QueryGraph, model: &'a CostModel, pushdown: bool) -> Self {
        let stats = graph
            .leaves
            .iter()
            .map(|l| {
                let sel = l.predicate.as_ref().map_or(1.0, |p| model.selectivity(&p.body));
                match &l.input {
                    LeafInput::Catalog { table, .. } => {
                        let o = model.tables.get(&table.name).cloned().unwrap_or_default();
                        LeafStats {
                            catalog: true,
                            base_rows: o.row_estimate.unwrap_or(table.row_estimate as f64),
                            selectivity: sel,
                            setup: o.per_call_cost.unwrap_or(table.per_call_cost),
                            row_cost: o.per_row_cost.unwrap_or(table.per_row_cost),
                            page: table.page_size.map(|p| p as f64),
                        }
                    }
                    LeafInput::Local { rows, .. } => LeafStats {
                        catalog: false,
                        base_rows: *rows,
                        selectivity: sel,
                        setup: 0.0,
                        row_cost: 0.0,
                        page: None,
                    },
                }
            })
            .collect();
        CostContext {
            graph,
            model,
            stats,
            pushdown,
        }
    }

    /// Estimated rows of joining the leaves in `set`. Depends only on the
    /// set: each connected component contributes its smallest leaf,
    /// discounted by equality selectivity for every edge beyond a spanning
    /// tree; components multiply.
    pub fn card(&self, set: u64) -> f64 {
        let n = self.graph.leaves.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            p[x] = r;
            r
        }
        let mut extra = vec![0i32; n];
        for e in &self.graph.edges {
            let (a, b) = (e.left.leaf, e.right.leaf);
            if set & (1 << a) == 0 || set & (1 << b) == 0 {
                continue;
            }
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                extra[ra] += 1;
            } else {
                parent[rb] = ra;
                extra[ra] += extra[rb];
                extra[rb] = 0;
            }
        }
        let mut mins: BTreeMap<usize, f64> = BTreeMap::new();
        for i in (0..n).filter(|i| set & (1 << i) != 0) {
            let r = find(&mut parent, i);
            let rows = self.stats[i].rows_out();
            mins.entry(r).and_modify(|m| *m = m.min(rows)).or_insert(rows);
        }
        mins.iter()
            .map(|(r, m)| m * self.model.eq_selectivity.powi(extra[*r]))
            .product()
    }

    pub fn scan(&self, leaf: usize) -> (f64, f64) {
        let s = &self.stats[leaf];
        if !s.catalog {
            return (0.0, 0.0);
        }
        let transfer = s.transfer(self.pushdown);
        let calls = s.pages(transfer);
        (calls * s.setup + transfer * s.row_cost, calls)
    }

    /// (cost, calls) of adding `step` after the leaves in `prefix`.
    pub fn step(&self, prefix: u64, step: Step) -> (f64, f64) {
        let j = step.leaf;
        if prefix == 0 {
            return self.scan(j);
        }
        let outer = self.card(prefix);
        let s = &self.stats[j];
        match step.strategy {
            JoinStrategy::Bulk => {
                let (cost, calls) = self.scan(j);
                (cost + (outer + s.rows_out()) * self.model.join_row_cost, calls)
            }
            JoinStrategy::Probe(_) => {
                let per_probe = s.transfer(self.pushdown) * self.model.eq_selectivity;
                let calls = outer * s.pages(per_probe);
                (calls * s.setup + outer * per_probe * s.row_cost, calls)
            }
        }
    }

    pub fn can_probe(&self, prefix: u64, leaf: usize, edge: usize) -> bool {
        self.stats[leaf].catalog
            && prefix != 0
            && self.graph.edges.get(edge).is_some_and(|e| {
                let (mine, other) = e.oriented(leaf);
                mine.leaf == leaf && other.leaf != leaf && prefix & (1 << other.leaf) != 0
            })
    }
}

/// Fold step costs along a left-deep order.
pub(crate) fn estimate_steps(ctx: &CostContext<'_>, steps: &[Step]) -> Result<Estimate> {
    let mut est = Estimate::default();
    let mut prefix = 0u64;
    for (i, &st) in steps.iter().enumerate() {
        if st.leaf >= ctx.graph.leaves.len() || prefix & (1 << st.leaf) != 0 {
            return Err(Error::Plan(format!("invalid join order at step {i}")));
        }
        if let JoinStrategy::Probe(e) = st.strategy {
            if !ctx.can_probe(prefix, st.leaf, e) {
                return Err(Error::Plan(format!(
                    "leaf {} cannot be probed through edge {e} at step {i}",
                    st.leaf
                )));
            }
        }
        let (cost, calls) = ctx.step(prefix, st);
        est.cost += cost;
        est.calls += calls;
        prefix |= 1 << st.leaf;
        est.steps.push(StepEstimate {
            leaf: st.leaf,
            strategy: st.strategy,
            rows: ctx.card(prefix),
            calls,
            cost,
        });
    }
    if steps.len() != ctx.graph.leaves.len() {
        return Err(Error::Plan("join order does not cover every leaf".into()));
    }
    est.rows = ctx.card(prefix);
    Ok(est)
}

/// Re-estimate a physical plan under `model`.
pub fn estimate(plan: &PhysicalPlan, model: &CostModel) -> Result<Estimate> {
    estimate_steps(&CostContext::new(&plan.graph, model, plan.pushdown), &plan.steps)
}
