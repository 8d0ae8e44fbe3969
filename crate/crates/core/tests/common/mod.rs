#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rubicon_core::bench::Workload;
use rubicon_core::catalog::{ColumnDef, SourceDescriptor, TableSchema, WrapperKind};
use rubicon_core::exec::Engine;
use rubicon_core::predicate::{CmpOp, PredExpr};
use rubicon_core::translate::{Dialect, NativePredicate, TranslationTrace, TranslatorIdentity};
use rubicon_core::value::{Row, SemanticType, Value};
use rubicon_core::wrapper::local::{LocalWrapper, FACT_COLUMNS, MAILBOX_COLUMNS};
use rubicon_core::wrapper::{AccessRules, SourceRuntime};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_engine() -> Arc<Engine> {
    Arc::new(Engine::load(&fixtures().join("catalog.json")).expect("fixture catalog loads"))
}

pub fn workload() -> Workload {
    Workload::load(&fixtures().join("workload.json")).expect("workload loads")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const WORDS: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "turing", "award", "nobel", "prize", "hall", "lab",
];

pub fn native(dialect: Dialect, body: PredExpr) -> NativePredicate {
    NativePredicate {
        dialect,
        body,
        trace: TranslationTrace::new("generated", dialect, TranslatorIdentity::Deterministic),
    }
}

fn phrase(r: &mut ChaCha8Rng, max: usize) -> String {
    let n = r.random_range(1..=max);
    (0..n).map(|_| *WORDS.choose(r).unwrap()).collect::<Vec<_>>().join(" ")
}

fn date(r: &mut ChaCha8Rng) -> Value {
    let d = format!("2026-0{}-1{}", r.random_range(1..=9), r.random_range(0..=9));
    Value::parse_as(&d, SemanticType::Date).unwrap()
}

pub fn random_value(r: &mut ChaCha8Rng, ty: SemanticType) -> Value {
    if r.random_bool(0.15) {
        return Value::Null;
    }
    match ty {
        SemanticType::Text => Value::Text(phrase(r, 4)),
        SemanticType::Integer => Value::Integer(r.random_range(-3..10)),
        SemanticType::Real => Value::Real(r.random_range(-6..12) as f64 / 2.0),
        SemanticType::Date => date(r),
        SemanticType::Boolean => Value::Boolean(r.random_bool(0.5)),
    }
}

/// Non-null literal of the column's type, sometimes written as text.
pub fn random_literal(r: &mut ChaCha8Rng, ty: SemanticType) -> Value {
    let v = loop {
        let v = random_value(r, ty);
        if !v.is_null() {
            break v;
        }
    };
    if ty != SemanticType::Text && r.random_bool(0.3) {
        Value::Text(v.to_string())
    } else if ty == SemanticType::Text {
        Value::Text(phrase(r, 2))
    } else {
        v
    }
}

const TYPES: [SemanticType; 5] = [
    SemanticType::Text,
    SemanticType::Integer,
    SemanticType::Real,
    SemanticType::Date,
    SemanticType::Boolean,
];

/// A random table for a fixture wrapper of `kind`, named `S.t`.
pub fn random_table(r: &mut ChaCha8Rng, kind: WrapperKind) -> (TableSchema, Vec<Row>) {
    let mut cols: Vec<ColumnDef> = match kind {
        WrapperKind::Mailbox => MAILBOX_COLUMNS
            .iter()
            .map(|c| ColumnDef::new(*c, if *c == "date" { SemanticType::Date } else { SemanticType::Text }))
            .collect(),
        WrapperKind::KnowledgeStub => FACT_COLUMNS.iter().map(|c| ColumnDef::new(*c, SemanticType::Text)).collect(),
        _ => vec![ColumnDef::new("c0", SemanticType::Text)],
    };
    for i in 0..r.random_range(0..4) {
        cols.push(ColumnDef::new(format!("x{i}"), *TYPES.choose(r).unwrap()));
    }
    let mut t = TableSchema::new("S.t", cols);
    if r.random_bool(0.4) {
        t.page_size = Some(r.random_range(1..8));
    }
    let n = r.random_range(0..40);
    let rows: Vec<Row> = (0..n)
        .map(|_| t.columns.iter().map(|c| random_value(r, c.ty)).collect())
        .collect();
    t.row_estimate = rows.len() as u64;
    (t, rows)
}

pub fn random_predicate(r: &mut ChaCha8Rng, t: &TableSchema, depth: u32) -> PredExpr {
    let text: Vec<&ColumnDef> = t.columns.iter().filter(|c| c.ty == SemanticType::Text).collect();
    if depth > 0 && r.random_bool(0.4) {
        let parts = (0..r.random_range(2..4)).map(|_| random_predicate(r, t, depth - 1)).collect();
        return if r.random_bool(0.5) { PredExpr::And(parts) } else { PredExpr::Or(parts) };
    }
    match r.random_range(0..3) {
        0 => {
            let c = t.columns.choose(r).unwrap();
            let op = *[CmpOp::Eq, CmpOp::Gt, CmpOp::Lt].choose(r).unwrap();
            PredExpr::Compare {
                column: c.name.clone(),
                op,
                value: random_literal(r, c.ty),
            }
        }
        1 => PredExpr::Contains {
            column: text.choose(r).unwrap().name.clone(),
            phrase: phrase(r, 2),
        },
        _ => {
            let columns = if r.random_bool(0.5) {
                Vec::new()
            } else {
                text.iter().filter(|_| r.random_bool(0.6)).map(|c| c.name.clone()).collect()
            };
            PredExpr::Keyword {
                terms: (0..r.random_range(1..3)).map(|_| WORDS.choose(r).unwrap().to_string()).collect(),
                columns,
            }
        }
    }
}

pub fn fixture_kinds() -> [WrapperKind; 4] {
    [
        WrapperKind::RelationalFixture,
        WrapperKind::DocumentCorpus,
        WrapperKind::Mailbox,
        WrapperKind::KnowledgeStub,
    ]
}

pub fn runtime(kind: WrapperKind, tables: Vec<(TableSchema, Vec<Row>)>, access: AccessRules) -> SourceRuntime {
    SourceRuntime::new("S", Box::new(LocalWrapper::new(kind, tables).unwrap()), access)
}

/// An engine over one relational source with the given tables.
pub fn engine_with(source: &str, kind: WrapperKind, tables: Vec<(TableSchema, Vec<Row>)>) -> Engine {
    let desc = SourceDescriptor {
        name: source.into(),
        wrapper_kind: kind,
        connection: Default::default(),
        tables: tables.iter().map(|(t, _)| t.clone()).collect(),
    };
    let rt = SourceRuntime::new(
        source,
        Box::new(LocalWrapper::new(kind, tables).unwrap()),
        AccessRules::allow_all(),
    );
    let mut e = Engine::default();
    e.add_source(rt, desc).unwrap();
    e
}

pub mod planner;
pub mod wrappers;
pub mod scripts;
pub mod statements;
