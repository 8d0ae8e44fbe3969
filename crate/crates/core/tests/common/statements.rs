//! Statement generators and parser checks.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use rubicon_core::aql::*;
use rubicon_core::{Error, Stage};

use super::rng;

const NAMES: &[&str] = &[
    "full_name", "title", "from", "Join", "entity", "to", "my col", "a\"b", "count", "x1", "_y", "where",
];
const TABLES: &[&str] = &["UNIVERSITY_DW.faculty", "EMAIL.Message", "WIKIPEDIA", "saved", "\"odd name\"", "S.t"];
const UTTER: &[&str] = &[
    "the person is a professor",
    "subject mentions 'benchmark queries'",
    "people associated with 'Turing Award' or 'Nobel Prize'",
    "event date is after 2026-09-15",
    "x = 3",
    "it's (roughly) balanced",
    "the rows joined yesterday",
    "title is \"Halvorsen Hall\"",
    "n > 5 and n < 9",
    "O'Brien's page",
];

fn name(r: &mut ChaCha8Rng) -> String {
    NAMES.choose(r).unwrap().to_string()
}

fn table(r: &mut ChaCha8Rng) -> String {
    TABLES.choose(r).unwrap().trim_matches('"').to_string()
}

fn projection(r: &mut ChaCha8Rng) -> Projection {
    match r.random_range(0..5) {
        0 => Projection::Aggregate {
            function: AggregateFunction::Count,
            column: None,
        },
        1 => Projection::Aggregate {
            function: *AggregateFunction::ALL.choose(r).unwrap(),
            column: Some(name(r)),
        },
        _ => Projection::Column(name(r)),
    }
}

fn block(r: &mut ChaCha8Rng) -> FindBlock {
    let projections = if r.random_bool(0.15) {
        vec![Projection::Star]
    } else {
        (0..r.random_range(1..4)).map(|_| projection(r)).collect()
    };
    let predicate = r.random_bool(0.7).then(|| {
        (0..r.random_range(1..3))
            .map(|_| *UTTER.choose(r).unwrap())
            .collect::<Vec<_>>()
            .join(" and ")
    });
    FindBlock {
        projections,
        source: table(r),
        predicate,
    }
}

fn query(r: &mut ChaCha8Rng) -> FindQuery {
    let head = block(r);
    let joins = (0..r.random_range(0..3))
        .map(|_| JoinClause {
            condition: match r.random_range(0..3) {
                0 => JoinCondition::NaturalByName,
                1 => JoinCondition::Explicit((0..r.random_range(1..3)).map(|_| (name(r), name(r))).collect()),
                _ => JoinCondition::EntityName {
                    left: name(r),
                    right: name(r),
                },
            },
            block: block(r),
        })
        .collect();
    FindQuery { head, joins }
}

pub fn statement(r: &mut ChaCha8Rng) -> Statement {
    match r.random_range(0..8) {
        0 => Statement::Schema(SchemaQuery::AllSources),
        1 => Statement::Schema(SchemaQuery::OneSource("EMAIL".into())),
        2 => Statement::Schema(SchemaQuery::OneTable(table(r) + ".x")),
        3 => {
            let q = query(r);
            let mut name = "result".to_string();
            while q.blocks().any(|b| b.source == name) {
                name.push('_');
            }
            Statement::Save { query: q, name }
        }
        4 => Statement::Output {
            table: table(r),
            destination: r.random_bool(0.5).then(|| "out/it's.ndjson".to_string()),
        },
        5 => Statement::Delete { table: table(r) },
        _ => Statement::Find(query(r)),
    }
}

/// A rendered statement and a rendered script both parse back unchanged.
pub fn roundtrip_case(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let stmt = statement(&mut r);
    let text = render(&stmt);
    if parse(&text).map_err(|e| e.to_string())? != stmt {
        return Err(format!("statement changed: {text}"));
    }
    let script: Vec<Statement> = (0..r.random_range(1..4)).map(|_| statement(&mut r)).collect();
    let text = render_script(&script);
    if parse_script(&text).map_err(|e| e.to_string())? != script {
        return Err(format!("script changed: {text}"));
    }
    Ok(())
}

pub const PRODUCTIONS: &[&str] = &[
    "?",
    "? EMAIL",
    "? EMAIL.Message",
    "? \"odd source\"",
    "FIND * FROM t",
    "FIND a FROM t",
    "find a, b from S.t where x is y",
    "FIND COUNT(*) FROM t",
    "FIND COUNT(a), SUM(b), AVG(c), MIN(d), MAX(e) FROM t",
    "FIND a FROM t JOIN FIND a FROM u",
    "FIND a FROM t JOIN ON a = b FIND b FROM u",
    "FIND a, c FROM t JOIN ON a = b, c = d FIND b, d FROM u",
    "FIND a FROM t JOIN ON ENTITY a = b FIND b FROM u",
    "FIND a FROM t WHERE p JOIN FIND a FROM u WHERE q JOIN ON a = c FIND c FROM v",
    "FIND \"from\" FROM EMAIL.Message WHERE subject says 'hi'",
    "SAVE ( FIND a FROM t ) AS s",
    "SAVE (FIND a FROM t WHERE x (y)) AS s",
    "OUTPUT s",
    "OUTPUT s TO 'dir/s.ndjson'",
    "DELETE s",
    "FIND a FROM t -- trailing comment",
    "FIND a FROM t WHERE about 'it''s' -- comment\n",
];

/// Every production parses and survives a render round trip.
pub fn productions_case() -> Result<(), String> {
    for src in PRODUCTIONS {
        let stmt = parse(src).map_err(|e| format!("{src}: {e}"))?;
        if parse(&render(&stmt)).map_err(|e| e.to_string())? != stmt {
            return Err(format!("{src}: render round trip changed the statement"));
        }
    }
    let script = "SAVE (FIND a FROM t) AS s; FIND COUNT(*) FROM s; OUTPUT s;";
    match parse_script(script) {
        Ok(s) if s.len() == 3 => Ok(()),
        other => Err(format!("script: {other:?}")),
    }
}

/// Arbitrary bytes and mutations of valid scripts. Each input either
/// parses to something that round-trips or fails at the parse stage.
/// A panic propagates.
pub fn fuzz_case(inputs: u32) -> Result<(), String> {
    let mut r = rng(7);
    let seeds: Vec<String> = (0..64).map(|_| render_script(&[statement(&mut r)])).collect();
    let alphabet: Vec<char> = "FINDfromWHEREjoinON()=,*;?'\"-. \n\tÅé".chars().collect();
    for i in 0..inputs {
        let text: String = if i % 2 == 0 {
            let n = r.random_range(0..64);
            let bytes: Vec<u8> = (0..n).map(|_| r.random()).collect();
            String::from_utf8_lossy(&bytes).into_owned()
        } else {
            let mut chars: Vec<char> = seeds.choose(&mut r).unwrap().chars().collect();
            for _ in 0..r.random_range(1..6) {
                let at = r.random_range(0..=chars.len());
                match r.random_range(0..3) {
                    0 if at < chars.len() => {
                        chars.remove(at);
                    }
                    1 if at < chars.len() => chars[at] = *alphabet.choose(&mut r).unwrap(),
                    _ => chars.insert(at, *alphabet.choose(&mut r).unwrap()),
                }
            }
            chars.into_iter().collect()
        };
        match parse_script(&text) {
            Ok(stmts) => {
                let again = parse_script(&render_script(&stmts)).map_err(|e| format!("{text:?}: {e}"))?;
                if again != stmts {
                    return Err(format!("{text:?}: round trip changed the script"));
                }
            }
            Err(e) if e.stage() == Stage::Parse => {}
            Err(e) => return Err(format!("{text:?}: {e}")),
        }
    }
    Ok(())
}

pub fn error_offset(e: &Error) -> Option<usize> {
    match e {
        Error::Parse { offset, .. } | Error::Lex { offset, .. } => Some(*offset),
        _ => None,
    }
}
