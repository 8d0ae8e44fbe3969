//! Indented plan trees for EXPLAIN.

use std::fmt::Write;

use crate::wrapper::MatchMode;

use super::{JoinStrategy, Leaf, LeafInput, LogicalNode, LogicalPlan, OutputSpec, PhysicalPlan, QueryGraph, Sink};

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn fetch(leaf: &Leaf, pushdown: bool) -> String {
    let mut s = match &leaf.input {
        LeafInput::Catalog { table, .. } => format!("Fetch {}", table.name),
        LeafInput::Local { name, .. } => format!("Scan local {name}"),
    };
    let cols: Vec<&str> = leaf.columns.iter().map(|c| c.name.as_str()).collect();
    let _ = write!(s, " [{}]", cols.join(", "));
    if let Some(p) = &leaf.predicate {
        if pushdown || !leaf.is_catalog() {
            let _ = write!(s, " where {} ({})", p.native_text(), p.dialect);
        } else {
            let _ = write!(s, " then filter {}", p.native_text());
        }
    }
    s
}

fn edge_text(graph: &QueryGraph, edges: &[usize]) -> String {
    edges
        .iter()
        .map(|&i| {
            let e = &graph.edges[i];
            let op = if e.mode == MatchMode::Entity { "~" } else { "=" };
            format!(
                "{}.{} {op} {}.{}",
                graph.leaves[e.left.leaf].short_label(),
                e.left.name,
                graph.leaves[e.right.leaf].short_label(),
                e.right.name
            )
        })
        .collect::<Vec<_>>()
        .join(" and ")
}

fn output_line(graph: &QueryGraph) -> String {
    match &graph.output {
        OutputSpec::Columns(cs) => {
            let names: Vec<&str> = cs.iter().map(|c| c.schema.name.as_str()).collect();
            format!("Project [{}]", names.join(", "))
        }
        OutputSpec::Aggregates(a) => {
            let names: Vec<&str> = a.iter().map(|c| c.schema.name.as_str()).collect();
            format!("Aggregate [{}]", names.join(", "))
        }
    }
}

/// One line per operator; join lines carry that step's estimate.
pub fn explain(plan: &PhysicalPlan) -> String {
    let g = &plan.graph;
    let e = &plan.estimate;
    let mut lines = vec![format!(
        "{} (est rows {}, total cost {}, calls {})",
        output_line(g),
        num(e.rows),
        num(e.cost),
        num(e.calls)
    )];
    let mut prefixes = Vec::with_capacity(plan.steps.len());
    let mut prefix = 0u64;
    for st in &plan.steps {
        prefixes.push(prefix);
        prefix |= 1 << st.leaf;
    }
    // Left-deep: step k joins the subtree of steps 0..k with leaf k.
    fn node(plan: &PhysicalPlan, prefixes: &[u64], k: usize, depth: usize, out: &mut Vec<String>) {
        let g = &plan.graph;
        let st = plan.steps[k];
        let est = &plan.estimate.steps[k];
        let pad = "  ".repeat(depth);
        let tail = format!("(est rows {}, cost {}, calls {})", num(est.rows), num(est.cost), num(est.calls));
        let leaf = &g.leaves[st.leaf];
        if k == 0 {
            out.push(format!("{pad}{} {tail}", fetch(leaf, plan.pushdown)));
            return;
        }
        let edges = g.edges_between(prefixes[k], st.leaf);
        let head = match st.strategy {
            JoinStrategy::Bulk if edges.is_empty() => "Cross join".to_string(),
            JoinStrategy::Bulk => format!("Hash join on {}", edge_text(g, &edges)),
            JoinStrategy::Probe(p) => format!("Probe join via {} (probe × {})", edge_text(g, &[p]), num(est.calls)),
        };
        out.push(format!("{pad}{head} {tail}"));
        node(plan, prefixes, k - 1, depth + 1, out);
        out.push(format!("{pad}  {}", fetch(leaf, plan.pushdown)));
    }
    if !plan.steps.is_empty() {
        node(plan, &prefixes, plan.steps.len() - 1, 1, &mut lines);
    }
    lines.join("\n")
}

/// The statement as written, before ordering and strategy choice.
pub fn explain_logical(plan: &LogicalPlan) -> String {
    fn go(g: &QueryGraph, n: &LogicalNode, depth: usize, out: &mut Vec<String>) {
        let pad = "  ".repeat(depth);
        match n {
            LogicalNode::SourceFind { leaf } => {
                let l = &g.leaves[*leaf];
                let cols: Vec<&str> = l.columns.iter().map(|c| c.name.as_str()).collect();
                out.push(format!("{pad}Find {} [{}]", l.label, cols.join(", ")));
            }
            LogicalNode::Filter { leaf, input } => {
                let p = g.leaves[*leaf].predicate.as_ref().unwrap();
                out.push(format!("{pad}Filter \"{}\" => {}", p.trace.utterance, p.native_text()));
                go(g, input, depth + 1, out);
            }
            LogicalNode::Join { left, right, edges } => {
                if edges.is_empty() {
                    out.push(format!("{pad}Cross join"));
                } else {
                    out.push(format!("{pad}Join on {}", edge_text(g, edges)));
                }
                go(g, left, depth + 1, out);
                go(g, right, depth + 1, out);
            }
            LogicalNode::Aggregate { input } | LogicalNode::Project { input } => {
                out.push(format!("{pad}{}", output_line(g)));
                go(g, input, depth + 1, out);
            }
            LogicalNode::Sink { sink, input } => {
                out.push(match sink {
                    Sink::Save(name) => format!("{pad}Save as {name}"),
                    Sink::Output(None) => format!("{pad}Output"),
                    Sink::Output(Some(p)) => format!("{pad}Output to '{p}'"),
                });
                go(g, input, depth + 1, out);
            }
        }
    }
    let mut out = Vec::new();
    go(&plan.graph, &plan.root, 0, &mut out);
    out.join("\n")
}
