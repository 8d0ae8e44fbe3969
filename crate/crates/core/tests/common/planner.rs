//! Exhaustive plan search written from the cost formulas alone.

use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rubicon_core::catalog::{ColumnDef, TableSchema};
use rubicon_core::plan::{
    brute_force_minimum, optimize, plan_with, ColKey, CostModel, JoinEdge, JoinStrategy, Leaf, LeafInput,
    LocalSource, OutputColumn, OutputSpec, QueryGraph, Step,
};
use rubicon_core::predicate::{CmpOp, PredExpr};
use rubicon_core::translate::Dialect;
use rubicon_core::value::SemanticType;
use rubicon_core::wrapper::MatchMode;

use super::{native, random_predicate, rng};

const EQ: f64 = 0.1;
const JOIN_ROW: f64 = 0.0001;

fn sel(p: &PredExpr) -> f64 {
    match p {
        PredExpr::Compare { op: CmpOp::Eq, .. } => EQ,
        PredExpr::Compare { .. } | PredExpr::Contains { .. } => 0.3,
        PredExpr::Keyword { terms, .. } => (0.05 * terms.len() as f64).min(1.0),
        PredExpr::And(xs) => xs.iter().map(sel).product(),
        PredExpr::Or(xs) => xs.iter().map(sel).sum::<f64>().min(1.0),
    }
}

#[derive(Clone, Copy)]
pub struct Stat {
    catalog: bool,
    rows: f64,
    sel: f64,
    setup: f64,
    per_row: f64,
    page: Option<f64>,
}

pub struct Oracle {
    pub stats: Vec<Stat>,
    pub edges: Vec<(usize, usize)>,
    pub pushdown: bool,
}

impl Oracle {
    fn out(&self, i: usize) -> f64 {
        self.stats[i].rows * self.stats[i].sel
    }

    fn transfer(&self, i: usize) -> f64 {
        if self.pushdown {
            self.out(i)
        } else {
            self.stats[i].rows
        }
    }

    fn pages(&self, i: usize, rows: f64) -> f64 {
        self.stats[i].page.map_or(1.0, |p| (rows / p).ceil().max(1.0))
    }

    /// Components found by flood fill; each is its smallest member times
    /// EQ for every edge past a spanning tree.
    fn card(&self, set: &[usize]) -> f64 {
        let mut seen: Vec<usize> = Vec::new();
        let mut total = 1.0;
        for &s in set {
            if seen.contains(&s) {
                continue;
            }
            let mut comp = vec![s];
            let mut k = 0;
            while k < comp.len() {
                for &(a, b) in &self.edges {
                    for (x, y) in [(a, b), (b, a)] {
                        if x == comp[k] && set.contains(&y) && !comp.contains(&y) {
                            comp.push(y);
                        }
                    }
                }
                k += 1;
            }
            let inner = self.edges.iter().filter(|(a, b)| comp.contains(a) && comp.contains(b)).count();
            let min = comp.iter().map(|&i| self.out(i)).fold(f64::INFINITY, f64::min);
            total *= min * EQ.powi((inner + 1 - comp.len()) as i32);
            seen.extend(comp);
        }
        total
    }

    fn scan(&self, i: usize) -> (f64, f64) {
        let s = self.stats[i];
        if !s.catalog {
            return (0.0, 0.0);
        }
        let t = self.transfer(i);
        let calls = self.pages(i, t);
        (calls * s.setup + t * s.per_row, calls)
    }

    fn linked(&self, prefix: &[usize], j: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| (a == j && prefix.contains(&b)) || (b == j && prefix.contains(&a)))
            .map(|(e, _)| e)
            .collect()
    }

    fn step(&self, prefix: &[usize], j: usize, probe: bool) -> (f64, f64) {
        if prefix.is_empty() {
            return self.scan(j);
        }
        let outer = self.card(prefix);
        let s = self.stats[j];
        if probe {
            let per = self.transfer(j) * EQ;
            let calls = outer * self.pages(j, per);
            (calls * s.setup + outer * per * s.per_row, calls)
        } else {
            let (c, calls) = self.scan(j);
            (c + (outer + self.out(j)) * JOIN_ROW, calls)
        }
    }

    pub fn cost_of(&self, steps: &[Step]) -> f64 {
        let mut prefix = Vec::new();
        let mut total = 0.0;
        for s in steps {
            total += self.step(&prefix, s.leaf, matches!(s.strategy, JoinStrategy::Probe(_))).0;
            prefix.push(s.leaf);
        }
        total
    }

    /// Minimum cost over every admissible order and strategy.
    fn minimum(&self) -> f64 {
        fn rec(o: &Oracle, prefix: &mut Vec<usize>, acc: f64, best: &mut f64) {
            let n = o.stats.len();
            if prefix.len() == n {
                *best = best.min(acc);
                return;
            }
            let rest: Vec<usize> = (0..n).filter(|i| !prefix.contains(i)).collect();
            let linked: Vec<usize> = rest.iter().copied().filter(|&j| !o.linked(prefix, j).is_empty()).collect();
            let next = if prefix.is_empty() || linked.is_empty() { rest } else { linked };
            for j in next {
                let mut options = vec![false];
                if !prefix.is_empty() && o.stats[j].catalog && !o.linked(prefix, j).is_empty() {
                    options.push(true);
                }
                for probe in options {
                    let c = o.step(prefix, j, probe).0;
                    prefix.push(j);
                    rec(o, prefix, acc + c, best);
                    prefix.pop();
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(self, &mut Vec::new(), 0.0, &mut best);
        best
    }
}

pub fn random_graph(r: &mut ChaCha8Rng, n: usize) -> (QueryGraph, Vec<Stat>, Vec<(usize, usize)>) {
    let mut leaves = Vec::new();
    let mut stats = Vec::new();
    for i in 0..n {
        let cols = vec![
            ColumnDef::new(format!("k{i}"), SemanticType::Text),
            ColumnDef::new(format!("n{i}"), SemanticType::Integer),
        ];
        let mut t = TableSchema::new(format!("S.t{i}"), cols);
        t.row_estimate = r.random_range(1..5000);
        t.per_call_cost = r.random_range(0..40) as f64 / 4.0;
        t.per_row_cost = r.random_range(0..20) as f64 / 1000.0;
        t.page_size = r.random_bool(0.5).then(|| r.random_range(1..600));
        let pred = r.random_bool(0.7).then(|| random_predicate(r, &t, 1));
        let catalog = r.random_bool(0.85) || i == 0 && n == 1;
        let s = pred.as_ref().map_or(1.0, sel);
        let columns = t.column_schemas();
        let (input, stat) = if catalog {
            let st = Stat {
                catalog: true,
                rows: t.row_estimate as f64,
                sel: s,
                setup: t.per_call_cost,
                per_row: t.per_row_cost,
                page: t.page_size.map(|p| p as f64),
            };
            (LeafInput::Catalog { table: t.clone(), source: "S".into() }, st)
        } else {
            let rows = r.random_range(0..300) as f64;
            let st = Stat { catalog: false, rows, sel: s, setup: 0.0, per_row: 0.0, page: None };
            (LeafInput::Local { name: format!("w{i}"), rows, source: LocalSource::Definition(0) }, st)
        };
        leaves.push(Leaf {
            id: i,
            label: t.name.clone(),
            input,
            columns,
            predicate: pred.map(|p| native(Dialect::BooleanExpression, p)),
        });
        stats.push(stat);
    }
    let mut edges = Vec::new();
    let mut pairs = Vec::new();
    for j in 1..n {
        for _ in 0..r.random_range(0..3) {
            let i = r.random_range(0..j);
            let (a, b) = if r.random_bool(0.5) { (i, j) } else { (j, i) };
            pairs.push((a, b));
            edges.push(JoinEdge {
                left: ColKey::new(a, format!("k{a}")),
                right: ColKey::new(b, format!("k{b}")),
                mode: *[MatchMode::Exact, MatchMode::Entity].choose(r).unwrap(),
            });
        }
    }
    let output = OutputSpec::Columns(vec![OutputColumn {
        key: ColKey::new(0, "k0"),
        schema: leaves[0].columns[0].clone(),
    }]);
    (QueryGraph { leaves, edges, output }, stats, pairs)
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

pub fn optimizer_case(seed: u64, leaves: std::ops::RangeInclusive<usize>) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.random_range(leaves);
    let (graph, stats, pairs) = random_graph(&mut r, n);
    let graph = Arc::new(graph);
    let model = CostModel::default();
    let oracle = Oracle { stats, edges: pairs, pushdown: true };
    let want = oracle.minimum();
    for parallel in [false, true] {
        let plan = optimize(&graph, &model, parallel).map_err(|e| e.to_string())?;
        if !close(plan.estimate.cost, want) {
            return Err(format!("optimizer {} vs exhaustive {want}", plan.estimate.cost));
        }
        let own = oracle.cost_of(&plan.steps);
        if !close(own, plan.estimate.cost) {
            return Err(format!("reported {} but steps cost {own}", plan.estimate.cost));
        }
    }
    let (_, brute) = brute_force_minimum(&graph, &model).ok_or("no plan enumerated")?;
    if !close(brute.cost, want) {
        return Err(format!("brute force {} vs exhaustive {want}", brute.cost));
    }
    Ok(())
}

pub fn monotone_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let n = r.random_range(1..=4);
    let (graph, stats, pairs) = random_graph(&mut r, n);
    let graph = Arc::new(graph);
    let model = CostModel::default();
    let steps = optimize(&graph, &model, false).map_err(|e| e.to_string())?.steps;
    let on = plan_with(&graph, &model, steps.clone(), true).map_err(|e| e.to_string())?;
    let off = plan_with(&graph, &model, steps.clone(), false).map_err(|e| e.to_string())?;
    if on.estimate.cost > off.estimate.cost * (1.0 + 1e-12) {
        return Err(format!("pushdown {} > no pushdown {}", on.estimate.cost, off.estimate.cost));
    }
    let oracle = Oracle { stats, edges: pairs, pushdown: false };
    if !close(oracle.cost_of(&steps), off.estimate.cost) {
        return Err("no-pushdown estimate disagrees with oracle".into());
    }
    Ok(())
}
