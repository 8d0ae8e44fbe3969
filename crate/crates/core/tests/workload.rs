mod common;

use std::collections::BTreeMap;

use rubicon_core::bench::{coverage_check, run_benchmark, Relevance};
use rubicon_core::text::{contains_phrase, tokenize};

use common::{fixture_engine, workload};

#[test]
fn shipped_workload_runs() {
    let engine = fixture_engine();
    let r = run_benchmark(&engine, &workload(), false).unwrap();
    println!("{}", r.render_text());
    assert_eq!(r.correct(), 7);
    assert_eq!(r.accuracy, 100.0);
    assert_eq!(r.mean_k, 2.0);
    assert!(r.coverage_pass);
    for q in &r.queries {
        assert_eq!(q.metrics.k, 2, "{}", q.id);
        assert_eq!((q.metrics.t_in, q.metrics.t_out, q.metrics.cost), (0, 0, 0.0));
    }
}

#[test]
fn corrupted_answer_is_scored_incorrect() {
    let engine = fixture_engine();
    let mut w = workload();
    let q2 = w.queries.iter_mut().find(|q| q.id == "Q2").unwrap();
    q2.answer.rows[0][0] = serde_json::json!(6);
    let r = run_benchmark(&engine, &w, true).unwrap();
    assert_eq!(r.correct(), 6);
    assert!(!r.queries.iter().find(|q| q.id == "Q2").unwrap().correct);
    assert!((r.accuracy - 600.0 / 7.0).abs() < 1e-9);
}

#[test]
fn reports_are_deterministic() {
    let engine = fixture_engine();
    let w = workload();
    let shape = |parallel| {
        run_benchmark(&engine, &w, parallel)
            .unwrap()
            .queries
            .into_iter()
            .map(|q| (q.id, q.correct, q.rows, q.coverage.calls, q.metrics.k))
            .collect::<Vec<_>>()
    };
    assert_eq!(shape(false), shape(true));
    assert_eq!(shape(true), shape(true));
}

fn relevance(pairs: &[(&str, Relevance)]) -> BTreeMap<String, Relevance> {
    pairs.iter().map(|(s, r)| (s.to_string(), *r)).collect()
}

#[test]
fn coverage_verdicts() {
    use Relevance::*;
    let q4 = relevance(&[
        ("WIKIPEDIA", Irrelevant),
        ("UNIVERSITY_DW", Irrelevant),
        ("LAB_SITE", Irrelevant),
        ("PILE", Required),
        ("EMAIL", Required),
    ]);
    let calls = |xs: &[(&str, u64)]| xs.iter().map(|(s, n)| (s.to_string(), *n)).collect::<BTreeMap<_, _>>();
    assert!(coverage_check(&calls(&[("PILE", 1), ("EMAIL", 1)]), &q4).pass);
    let bad = coverage_check(&calls(&[("PILE", 1), ("EMAIL", 1), ("LAB_SITE", 1)]), &q4);
    assert!(!bad.pass);
    assert_eq!(bad.irrelevant_consulted, vec!["LAB_SITE".to_string()]);
    let empty = coverage_check(&BTreeMap::new(), &q4);
    assert!(!empty.pass);
    assert_eq!(empty.missing_required.len(), 2);
}

#[test]
fn workload_validation_requires_two_required_sources() {
    let engine = fixture_engine();
    let names: Vec<String> = engine.catalog().sources().into_iter().map(|s| s.name).collect();
    let mut w = workload();
    w.validate(&names).unwrap();
    w.queries[0].relevance.insert("LAB_SITE".into(), Relevance::Required);
    assert!(w.validate(&names).is_err());
    let mut w = workload();
    w.queries[0].relevance.remove("EMAIL");
    assert!(w.validate(&names).is_err());
}

/// No record of an Irrelevant source holds every value of an answer row,
/// so none of them could answer a query alone.
#[test]
fn irrelevant_sources_cannot_answer_alone() {
    let engine = fixture_engine();
    let w = workload();
    for q in &w.queries {
        // Aggregate answers are numbers, not records a source could hold.
        let wanted: Vec<Vec<Vec<String>>> = q
            .answer
            .rows
            .iter()
            .filter(|row| !row.iter().all(|v| v.is_number()))
            .map(|row| {
                row.iter()
                    .map(|v| tokenize(&v.as_str().map_or_else(|| v.to_string(), str::to_string)))
                    .collect()
            })
            .collect();
        for (source, label) in &q.relevance {
            if *label != Relevance::Irrelevant {
                continue;
            }
            let rt = engine.runtime(source).unwrap();
            let desc = engine.catalog().sources().into_iter().find(|s| &s.name == source).unwrap();
            for t in &desc.tables {
                let Ok(scan) = rt.full_scan(t, &w.principal) else { continue };
                for row in &scan.rows {
                    let tokens = tokenize(&row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
                    for answer in &wanted {
                        assert!(
                            !answer.iter().all(|v| contains_phrase(&tokens, v)),
                            "{} answer row {answer:?} found in irrelevant {}",
                            q.id,
                            t.name
                        );
                    }
                }
            }
        }
    }
}
