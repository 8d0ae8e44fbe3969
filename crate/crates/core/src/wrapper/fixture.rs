//! Fixture directories: `schema.json` plus one `<table>.ndjson` per table.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Deserialize;

use crate::catalog::{ColumnDef, TableSchema};
use crate::error::{Error, Result};
use crate::text::normalize_text;
use crate::value::{Row, SemanticType, Value};

/// Low-cardinality text columns get a vocabulary when the schema gives none.
pub const VOCABULARY_LIMIT: usize = 64;

#[derive(Deserialize)]
struct SchemaFile {
    tables: Vec<TableEntry>,
}

#[derive(Deserialize)]
struct TableEntry {
    name: String,
    columns: Vec<ColumnDef>,
    row_estimate: Option<u64>,
    per_call_cost: Option<f64>,
    per_row_cost: Option<f64>,
    page_size: Option<u64>,
}

fn fixture_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Fixture {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub fn read_rows(path: &Path, columns: &[ColumnDef]) -> Result<Vec<Row>> {
    let text = std::fs::read_to_string(path).map_err(|e| fixture_err(path, e.to_string()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let obj: serde_json::Map<String, serde_json::Value> = serde_json::from_str(line)
                .map_err(|e| fixture_err(path, format!("line {}: {e}", n + 1)))?;
            Ok(columns
                .iter()
                .map(|c| obj.get(&c.name).map_or(Value::Null, |v| Value::from_json(v, c.ty)))
                .collect())
        })
        .collect()
}

/// Distinct normalized values of a text column, when it looks categorical:
/// at most [`VOCABULARY_LIMIT`] values, each repeated on average.
pub fn infer_vocabulary(rows: &[Row], column: usize) -> Vec<String> {
    let values: BTreeSet<String> = rows
        .iter()
        .filter_map(|r| r[column].as_text())
        .map(normalize_text)
        .filter(|s| !s.is_empty())
        .collect();
    if values.len() <= VOCABULARY_LIMIT && values.len() * 2 <= rows.len() {
        values.into_iter().collect()
    } else {
        Vec::new()
    }
}

pub fn load_dir(dir: &Path) -> Result<Vec<(TableSchema, Vec<Row>)>> {
    let schema_path = dir.join("schema.json");
    let text =
        std::fs::read_to_string(&schema_path).map_err(|e| fixture_err(&schema_path, e.to_string()))?;
    let file: SchemaFile =
        serde_json::from_str(&text).map_err(|e| fixture_err(&schema_path, e.to_string()))?;
    let mut out = Vec::new();
    for entry in file.tables {
        let mut t = TableSchema::new(entry.name, entry.columns);
        let rows = read_rows(&dir.join(format!("{}.ndjson", t.short_name())), &t.columns)?;
        t.row_estimate = entry.row_estimate.unwrap_or(rows.len() as u64);
        if let Some(c) = entry.per_call_cost {
            t.per_call_cost = c;
        }
        if let Some(c) = entry.per_row_cost {
            t.per_row_cost = c;
        }
        t.page_size = entry.page_size;
        for (i, c) in t.columns.iter_mut().enumerate() {
            if c.ty == SemanticType::Text && c.vocabulary.is_empty() {
                c.vocabulary = infer_vocabulary(&rows, i);
            }
        }
        out.push((t, rows));
    }
    Ok(out)
}
