//! Join ordering and strategy selection.
//!
//! Exhaustive dynamic programming over leaf subsets up to
//! [`DP_LEAF_LIMIT`] leaves, greedy beyond. Candidates are left-deep; the
//! next leaf must share an edge with the prefix unless no remaining leaf
//! does. Ties break on fewer calls, then on the leaf order closest to the
//! order written.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::par;

use super::cost::{estimate_steps, CostContext};
use super::{Estimate, JoinStrategy, PhysicalPlan, QueryGraph, Step};
use super::CostModel;

pub const DP_LEAF_LIMIT: usize = 6;

#[derive(Debug, Clone)]
struct Partial {
    cost: f64,
    calls: f64,
    steps: Vec<Step>,
}

/// Costs within this relative distance are ties; summation order alone
/// must not pick the plan.
const COST_EPSILON: f64 = 1e-9;

fn cmp_cost(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= COST_EPSILON * a.abs().max(b.abs()) {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

fn better(a: &Partial, b: &Partial) -> Ordering {
    cmp_cost(a.cost, b.cost)
        .then(cmp_cost(a.calls, b.calls))
        .then_with(|| a.steps.iter().map(|s| s.leaf).cmp(b.steps.iter().map(|s| s.leaf)))
        .then_with(|| a.steps.cmp(&b.steps))
}

fn full(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Leaves that may follow `prefix`.
fn allowed(graph: &QueryGraph, prefix: u64) -> Vec<usize> {
    let rest: Vec<usize> = (0..graph.leaves.len()).filter(|i| prefix & (1 << i) == 0).collect();
    if prefix == 0 {
        return rest;
    }
    let connected: Vec<usize> = rest.iter().copied().filter(|&j| graph.connected(prefix, j)).collect();
    if connected.is_empty() {
        rest
    } else {
        connected
    }
}

fn strategies(ctx: &CostContext<'_>, prefix: u64, leaf: usize) -> Vec<JoinStrategy> {
    let mut out = vec![JoinStrategy::Bulk];
    if prefix != 0 {
        out.extend(
            ctx.graph
                .edges_between(prefix, leaf)
                .into_iter()
                .filter(|&e| ctx.can_probe(prefix, leaf, e))
                .map(JoinStrategy::Probe),
        );
    }
    out
}

fn extend(ctx: &CostContext<'_>, prefix: u64, p: &Partial, step: Step) -> Partial {
    let (cost, calls) = ctx.step(prefix, step);
    let mut steps = p.steps.clone();
    steps.push(step);
    Partial {
        cost: p.cost + cost,
        calls: p.calls + calls,
        steps,
    }
}

fn dp(ctx: &CostContext<'_>, parallel: bool) -> Partial {
    let n = ctx.graph.leaves.len();
    let mut best: Vec<Option<Partial>> = vec![None; 1 << n];
    best[0] = Some(Partial {
        cost: 0.0,
        calls: 0.0,
        steps: vec![],
    });
    for size in 1..=n {
        let level: Vec<u64> = (1..(1u64 << n)).filter(|s| s.count_ones() as usize == size).collect();
        let results = par::map(&level, parallel, |&set| {
            let mut winner: Option<Partial> = None;
            for j in (0..n).filter(|j| set & (1 << j) != 0) {
                let prefix = set & !(1 << j);
                let Some(p) = &best[prefix as usize] else { continue };
                if !allowed(ctx.graph, prefix).contains(&j) {
                    continue;
                }
                for strategy in strategies(ctx, prefix, j) {
                    let cand = extend(ctx, prefix, p, Step { leaf: j, strategy });
                    if winner.as_ref().is_none_or(|w| better(&cand, w) == Ordering::Less) {
                        winner = Some(cand);
                    }
                }
            }
            winner
        });
        for (set, r) in level.into_iter().zip(results) {
            best[set as usize] = r;
        }
    }
    best[full(n) as usize].take().expect("some order always exists")
}

fn greedy(ctx: &CostContext<'_>) -> Partial {
    let n = ctx.graph.leaves.len();
    let mut cur = Partial {
        cost: 0.0,
        calls: 0.0,
        steps: vec![],
    };
    let mut prefix = 0u64;
    while prefix != full(n) {
        let mut winner: Option<(Partial, Partial)> = None;
        for j in allowed(ctx.graph, prefix) {
            for strategy in strategies(ctx, prefix, j) {
                let step = Step { leaf: j, strategy };
                let (cost, calls) = ctx.step(prefix, step);
                let local = Partial {
                    cost,
                    calls,
                    steps: vec![step],
                };
                if winner.as_ref().is_none_or(|(w, _)| better(&local, w) == Ordering::Less) {
                    winner = Some((local, extend(ctx, prefix, &cur, step)));
                }
            }
        }
        let (_, next) = winner.expect("allowed is never empty while leaves remain");
        prefix |= 1 << next.steps.last().unwrap().leaf;
        cur = next;
    }
    cur
}

fn finish(graph: &Arc<QueryGraph>, model: &CostModel, pushdown: bool, steps: Vec<Step>) -> Result<PhysicalPlan> {
    let ctx = CostContext::new(graph, model, pushdown);
    let estimate = estimate_steps(&ctx, &steps)?;
    Ok(PhysicalPlan {
        graph: graph.clone(),
        steps,
        pushdown,
        estimate,
    })
}

fn check_size(graph: &QueryGraph) -> Result<()> {
    match graph.leaves.len() {
        0 => Err(Error::Plan("query has no FIND blocks".into())),
        n if n > 64 => Err(Error::Plan("at most 64 FIND blocks per statement".into())),
        _ => Ok(()),
    }
}

/// Cheapest left-deep plan under `model`, with predicates pushed down.
pub fn optimize(graph: &Arc<QueryGraph>, model: &CostModel, parallel: bool) -> Result<PhysicalPlan> {
    check_size(graph)?;
    let ctx = CostContext::new(graph, model, true);
    let best = if graph.leaves.len() <= DP_LEAF_LIMIT {
        dp(&ctx, parallel)
    } else {
        greedy(&ctx)
    };
    finish(graph, model, true, best.steps)
}

/// A plan with a caller-chosen order and strategies.
pub fn plan_with(
    graph: &Arc<QueryGraph>,
    model: &CostModel,
    steps: Vec<Step>,
    pushdown: bool,
) -> Result<PhysicalPlan> {
    check_size(graph)?;
    if steps.first().is_some_and(|s| s.strategy != JoinStrategy::Bulk) {
        return Err(Error::Plan("the first step cannot be a probe".into()));
    }
    finish(graph, model, pushdown, steps)
}

/// Every candidate the optimizer considers: all admissible orders with all
/// strategy choices. Exponential; meant for small graphs.
pub fn enumerate_plans(graph: &QueryGraph, model: &CostModel) -> Vec<(Vec<Step>, Estimate)> {
    let ctx = CostContext::new(graph, model, true);
    let mut out = Vec::new();
    fn rec(ctx: &CostContext<'_>, prefix: u64, steps: &mut Vec<Step>, out: &mut Vec<(Vec<Step>, Estimate)>) {
        if steps.len() == ctx.graph.leaves.len() {
            if let Ok(e) = estimate_steps(ctx, steps) {
                out.push((steps.clone(), e));
            }
            return;
        }
        for j in allowed(ctx.graph, prefix) {
            for strategy in strategies(ctx, prefix, j) {
                steps.push(Step { leaf: j, strategy });
                rec(ctx, prefix | (1 << j), steps, out);
                steps.pop();
            }
        }
    }
    rec(&ctx, 0, &mut Vec::new(), &mut out);
    out
}

/// Minimum over [`enumerate_plans`], with the optimizer's tie-break.
pub fn brute_force_minimum(graph: &QueryGraph, model: &CostModel) -> Option<(Vec<Step>, Estimate)> {
    enumerate_plans(graph, model).into_iter().min_by(|a, b| {
        let pa = Partial {
            cost: a.1.cost,
            calls: a.1.calls,
            steps: a.0.clone(),
        };
        let pb = Partial {
            cost: b.1.cost,
            calls: b.1.calls,
            steps: b.0.clone(),
        };
        better(&pa, &pb)
    })
}
