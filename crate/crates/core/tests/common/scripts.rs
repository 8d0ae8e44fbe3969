//! Generated scripts over the fixture catalog and the execution checks
//! built on them.

use std::path::Path;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rubicon_core::aql::{parse_script, Statement};
use rubicon_core::exec::{Engine, Session};
use rubicon_core::plan::{plan_with, JoinStrategy, Step};

use super::{rng, workload};

struct Block {
    table: &'static str,
    columns: &'static [&'static str],
    predicates: &'static [&'static str],
}

const BLOCKS: &[Block] = &[
    Block {
        table: "UNIVERSITY_DW.faculty",
        columns: &["full_name", "title"],
        predicates: &["", "the person is a professor in the research lab", "title is Associate Professor"],
    },
    Block {
        table: "PILE.facts",
        columns: &["entity", "value"],
        predicates: &["attribute is promoted to full professor", "attribute is field"],
    },
    Block {
        table: "UNIVERSITY_DW.buildings",
        columns: &["building_name", "campus"],
        predicates: &["", "floors greater than 3"],
    },
    Block {
        table: "WIKIPEDIA.building_infobox",
        columns: &["title", "address"],
        predicates: &["", "title is Halvorsen Hall"],
    },
    Block {
        table: "LAB_SITE.events",
        columns: &["event_name", "location"],
        predicates: &["", "event date is after 2026-09-15", "event date is before 2026-10-17"],
    },
    Block {
        table: "UNIVERSITY_DW.rooms",
        columns: &["room_id", "building_name"],
        predicates: &["", "building name is Halvorsen Hall"],
    },
    Block {
        table: "LAB_SITE.projects",
        columns: &["room_id", "project_name"],
        predicates: &["", "the project is active", "status is completed"],
    },
    Block {
        table: "UNIVERSITY_DW.newsletters",
        columns: &["newsletter_name", "list_address"],
        predicates: &["", "frequency is weekly"],
    },
    Block {
        table: "EMAIL.Message",
        columns: &["\"from\"", "subject"],
        predicates: &["the subject says 'subscription confirmed'", "the subject mentions 'benchmark queries'"],
    },
];

/// (left block, right block, join clause)
const LINKS: &[(usize, usize, &str)] = &[
    (0, 1, "JOIN ON ENTITY full_name = entity"),
    (2, 3, "JOIN ON building_name = title"),
    (3, 4, "JOIN ON address = location"),
    (5, 6, "JOIN"),
    (5, 3, "JOIN ON building_name = title"),
    (7, 8, "JOIN ON list_address = \"from\""),
];

fn block(r: &mut ChaCha8Rng, i: usize) -> String {
    let b = &BLOCKS[i];
    let mut s = format!("FIND {} FROM {}", b.columns.join(", "), b.table);
    let p = b.predicates.choose(r).unwrap();
    if !p.is_empty() {
        s.push_str(&format!(" WHERE {p}"));
    }
    s
}

/// A chain of one to three linked blocks.
fn query(r: &mut ChaCha8Rng) -> String {
    let mut cur = r.random_range(0..BLOCKS.len());
    let mut s = block(r, cur);
    for _ in 0..r.random_range(0..3) {
        let next: Vec<_> = LINKS.iter().filter(|(a, _, _)| *a == cur).collect();
        let Some(&&(_, b, clause)) = next.choose(r) else { break };
        s.push_str(&format!(" {clause} {}", block(r, b)));
        cur = b;
    }
    s
}

pub fn script(r: &mut ChaCha8Rng) -> String {
    match r.random_range(0..4) {
        0 => format!("{};", query(r)),
        1 => format!("SAVE ( {} ) AS s1; FIND COUNT(*) FROM s1;", query(r)),
        2 => format!("SAVE ( {} ) AS s1; FIND * FROM s1; {};", query(r), query(r)),
        _ => format!(
            "SAVE ( {} ) AS s1; SAVE ( FIND * FROM s1 ) AS s2; FIND COUNT(*) FROM s2;",
            query(r)
        ),
    }
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// Compiled and interactive runs of one generated script agree table by
/// table, and the compiled run makes no more native calls.
pub fn mode_case(engine: &Arc<Engine>, seed: u64) -> Result<(), String> {
    let text = script(&mut rng(seed));
    let stmts = parse_script(&text).map_err(|e| e.to_string())?;
    let mut inter = Session::new(engine.clone(), "jordan");
    let mut inter_k = 0;
    let mut inter_tables = Vec::new();
    for s in &stmts {
        let o = inter.run(s).map_err(|e| format!("{text}: {e}"))?;
        inter_k += o.metrics.k;
        inter_tables.push(o.table);
    }
    let mut comp = Session::new(engine.clone(), "jordan");
    let out = comp.run_compiled(&stmts).map_err(|e| format!("{text}: {e}"))?;
    if out.outcomes.len() != stmts.len() {
        return Err(format!("{text}: {} outcomes", out.outcomes.len()));
    }
    for ((s, o), t) in stmts.iter().zip(&out.outcomes).zip(&inter_tables) {
        if matches!(s, Statement::Find(_) | Statement::Save { .. }) {
            let (Some(a), Some(b)) = (o.table.as_ref(), t.as_ref()) else {
                return Err(format!("{text}: missing table"));
            };
            if a.column_names() != b.column_names() || !a.multiset_eq(b) {
                return Err(format!("{text}: tables differ"));
            }
        }
    }
    if out.metrics.k > inter_k {
        return Err(format!("{text}: compiled k {} > interactive k {inter_k}", out.metrics.k));
    }
    Ok(())
}

/// A saved session replayed on a fresh session saves to identical files.
pub fn replay_case(engine: &Arc<Engine>, seed: u64) -> Result<(), String> {
    let mut s = Session::new(engine.clone(), "jordan");
    let text = script(&mut rng(seed)).replace("s1", "t1").replace("s2", "t2");
    s.execute(&text).map_err(|e| e.to_string())?;
    s.execute("DELETE t1; ?; ? EMAIL;").ok();
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    s.workspace().save(a.path()).map_err(|e| e.to_string())?;
    let replayed = Session::replay(engine.clone(), a.path(), "jordan").map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    replayed.workspace().save(b.path()).map_err(|e| e.to_string())?;
    if files(a.path()) != files(b.path()) {
        return Err(format!("{text}: replayed workspace differs"));
    }
    Ok(())
}

pub struct Sensitivity {
    pub award_first_cost: f64,
    pub faculty_first_cost: f64,
    pub award_first_calls: u64,
    pub faculty_first_probes: u64,
    pub same_rows: bool,
    pub rows: usize,
    pub award_first_shape: bool,
}

/// Q3 under the optimizer's plan and under a forced faculty-first probe plan.
pub fn q3_sensitivity(engine: &Arc<Engine>) -> Result<Sensitivity, String> {
    let w = workload();
    let q3 = w.queries.iter().find(|q| q.id == "Q3").ok_or("no Q3")?;
    let stmts = parse_script(&q3.script).map_err(|e| e.to_string())?;
    let Statement::Find(q) = &stmts[0] else { return Err("Q3 is not a FIND".into()) };
    let s = Session::new(engine.clone(), "jordan");
    let graph = s.bind(q).map_err(|e| e.to_string())?;
    let award_first = s.optimize(&graph).map_err(|e| e.to_string())?;
    let faculty_first = plan_with(
        &graph,
        engine.cost_model(),
        vec![
            Step { leaf: 1, strategy: JoinStrategy::Bulk },
            Step { leaf: 0, strategy: JoinStrategy::Probe(0) },
        ],
        true,
    )
    .map_err(|e| e.to_string())?;
    let a = s.execute_plan(&award_first).map_err(|e| e.to_string())?.table;
    let b = s.execute_plan(&faculty_first).map_err(|e| e.to_string())?.table;
    Ok(Sensitivity {
        award_first_cost: award_first.estimate.cost,
        faculty_first_cost: faculty_first.estimate.cost,
        award_first_calls: a.call_count(),
        faculty_first_probes: b
            .provenance
            .iter()
            .filter(|p| p.source.name() == "WIKIPEDIA")
            .map(|p| p.call_count)
            .sum(),
        same_rows: a.sorted_rows() == b.sorted_rows(),
        rows: a.len(),
        award_first_shape: award_first.steps[0].leaf == 0
            && award_first.steps.iter().all(|s| s.strategy == JoinStrategy::Bulk),
    })
}

impl Sensitivity {
    pub fn holds(&self) -> bool {
        self.award_first_cost < self.faculty_first_cost
            && self.same_rows
            && self.faculty_first_probes == 50
            && self.award_first_calls <= 2
    }
}
