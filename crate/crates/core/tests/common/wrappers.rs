//! Randomized wrapper cases checked against a full scan and the reference
//! evaluator.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use rubicon_core::translate::Dialect;
use rubicon_core::value::{cmp_rows, Row, Value};
use rubicon_core::wrapper::{AccessRule, AccessRules, Decision, FindRequest, MatchMode};
use rubicon_core::Error;

use super::*;

pub fn sorted(mut rows: Vec<Row>) -> Vec<Row> {
    rows.sort_by(|a, b| cmp_rows(a, b));
    rows
}

fn pages(n: usize, page: Option<u64>) -> u64 {
    match page {
        Some(p) => (n as u64).div_ceil(p).max(1),
        None => 1,
    }
}

/// One randomized soundness case. Returns a description on failure.
pub fn soundness_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let kind = *fixture_kinds().choose(&mut r).unwrap();
    let (t, rows) = random_table(&mut r, kind);
    let rt = runtime(kind, vec![(t.clone(), rows.clone())], AccessRules::allow_all());
    let dialect = Dialect::for_wrapper(kind);
    let pred = random_predicate(&mut r, &t, 2);

    let scan = rt.full_scan(&t, "alice").map_err(|e| e.to_string())?;
    if sorted(scan.rows.clone()) != sorted(rows.clone()) {
        return Err("full scan differs from stored rows".into());
    }
    let bound = pred.bind(&t.column_schemas()).map_err(|e| e.to_string())?;
    let expected: Vec<Row> = scan.rows.iter().filter(|row| bound.eval(row)).cloned().collect();

    let before = rt.native_invocations();
    let got = rt
        .execute_find(&FindRequest::new(t.clone(), "alice").filter(native(dialect, pred.clone())))
        .map_err(|e| e.to_string())?;
    let served = rt.native_invocations() - before;
    got.validate().map_err(|e| format!("schema conformance: {e}"))?;
    if sorted(got.rows.clone()) != sorted(expected.clone()) {
        return Err(format!("{kind} {pred}: got {} rows, expected {}", got.len(), expected.len()));
    }
    if got.call_count() != served || served != pages(expected.len(), t.page_size) {
        return Err(format!(
            "call accounting: provenance {}, served {served}, pages {}",
            got.call_count(),
            pages(expected.len(), t.page_size)
        ));
    }

    // Projection keeps declared order of the requested columns.
    let cols: Vec<&str> = t.columns.iter().filter(|_| r.random_bool(0.6)).map(|c| c.name.as_str()).collect();
    if !cols.is_empty() {
        let p = rt
            .execute_find(&FindRequest::new(t.clone(), "alice").project(&cols).filter(native(dialect, pred.clone())))
            .map_err(|e| e.to_string())?;
        p.validate().map_err(|e| e.to_string())?;
        let idx: Vec<usize> = cols.iter().map(|c| t.columns.iter().position(|d| d.name == *c).unwrap()).collect();
        let want: Vec<Row> = expected.iter().map(|row| idx.iter().map(|&i| row[i].clone()).collect()).collect();
        if p.column_names() != cols || sorted(p.rows.clone()) != sorted(want) {
            return Err("projection mismatch".into());
        }
    }

    // A limit returns that many of the matching rows, never others.
    let k = r.random_range(1..5);
    let l = rt
        .execute_find(&FindRequest::new(t.clone(), "alice").filter(native(dialect, pred)).limit(k))
        .map_err(|e| e.to_string())?;
    if l.len() != k.min(expected.len()) || !l.rows.iter().all(|row| expected.contains(row)) {
        return Err("limit mismatch".into());
    }
    Ok(())
}

/// Probe batches equal the union of single finds, one call per value.
pub fn probe_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let kind = *fixture_kinds().choose(&mut r).unwrap();
    let (mut t, rows) = random_table(&mut r, kind);
    t.page_size = None;
    let rt = runtime(kind, vec![(t.clone(), rows.clone())], AccessRules::allow_all());
    let col = t.columns.choose(&mut r).unwrap().clone();
    let pool: Vec<Value> = rows.iter().map(|row| row[t.columns.iter().position(|c| c.name == col.name).unwrap()].clone()).filter(|v| !v.is_null()).collect();
    let mut values: Vec<Value> = (0..r.random_range(1..5))
        .map(|_| match pool.choose(&mut r) {
            Some(v) if r.random_bool(0.7) => v.clone(),
            _ => random_literal(&mut r, col.ty),
        })
        .collect();
    let mut seen = HashSet::new();
    values.retain(|v| seen.insert(v.to_string()));
    let mode = if col.ty == rubicon_core::value::SemanticType::Text && r.random_bool(0.5) {
        MatchMode::Entity
    } else {
        MatchMode::Exact
    };
    let req = FindRequest::new(t.clone(), "alice");
    let batch = rt
        .execute_probe_batch(&req, &col.name, mode, &values, r.random_bool(0.5))
        .map_err(|e| e.to_string())?;
    let mut union = Vec::new();
    for v in &values {
        let one = rt
            .execute_find(&req.clone().bind(&col.name, v.clone(), mode))
            .map_err(|e| e.to_string())?;
        union.extend(one.rows);
    }
    // Oracle: per-key full scan and filter.
    let i = t.columns.iter().position(|c| c.name == col.name).unwrap();
    let oracle: Vec<Row> = values
        .iter()
        .flat_map(|v| {
            let b = rubicon_core::wrapper::Binding { column: col.name.clone(), value: v.clone(), mode };
            rows.iter().filter(move |row| b.matches(&row[i], col.ty)).cloned().collect::<Vec<_>>()
        })
        .collect();
    if sorted(batch.rows.clone()) != sorted(union) || sorted(batch.rows.clone()) != sorted(oracle) {
        return Err("probe batch differs from per-value finds".into());
    }
    if batch.call_count() != values.len() as u64 {
        return Err(format!("{} calls for {} values", batch.call_count(), values.len()));
    }
    Ok(())
}

/// A denied principal gets an access error from every entry point and the
/// native layer is never reached.
pub fn denied_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let kind = *fixture_kinds().choose(&mut r).unwrap();
    let (t, rows) = random_table(&mut r, kind);
    let rules = AccessRules::from_rules(&[
        AccessRule { principal: "guest".into(), table: "S.*".into(), decision: Decision::Deny },
        AccessRule { principal: "*".into(), table: "*".into(), decision: Decision::Allow },
    ])
    .map_err(|e| e.to_string())?;
    let rt = runtime(kind, vec![(t.clone(), rows)], rules);
    let pred = random_predicate(&mut r, &t, 1);
    let req = FindRequest::new(t.clone(), "guest").filter(native(Dialect::for_wrapper(kind), pred));
    if !matches!(rt.execute_find(&req), Err(Error::AccessDenied { .. })) {
        return Err("find was not denied".into());
    }
    let probe = rt.execute_probe_batch(&req, &t.columns[0].name, MatchMode::Exact, &[Value::Text("alpha".into())], false);
    if !matches!(probe, Err(Error::AccessDenied { .. })) {
        return Err("probe batch was not denied".into());
    }
    if rt.full_scan(&t, "guest").is_ok() {
        return Err("full scan was not denied".into());
    }
    if rt.native_invocations() != 0 {
        return Err(format!("{} native calls while denied", rt.native_invocations()));
    }
    rt.full_scan(&t, "alice").map_err(|e| e.to_string())?;
    if rt.native_invocations() == 0 {
        return Err("allowed scan was not counted".into());
    }
    Ok(())
}
