//! Result tables: the materialized, inspectable artifact every statement yields.

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{cmp_rows, Row, SemanticType, Value};

/// Catalog column a derived column was read from. Lets workspace tables
/// inherit column statistics from their origin.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnOrigin {
    pub table: String,
    pub column: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SemanticType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<ColumnOrigin>,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, ty: SemanticType) -> Self {
        ColumnSchema {
            name: name.into(),
            ty,
            origin: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "name", rename_all = "lowercase")]
pub enum SourceRef {
    Catalog(String),
    Workspace(String),
}

impl SourceRef {
    pub fn name(&self) -> &str {
        match self {
            SourceRef::Catalog(n) | SourceRef::Workspace(n) => n,
        }
    }
}

impl fmt::Display for SourceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceRef::Catalog(n) => write!(f, "{n}"),
            SourceRef::Workspace(n) => write!(f, "workspace:{n}"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProvenanceEntry {
    pub source: SourceRef,
    pub native_query: String,
    pub call_count: u64,
    #[serde(skip, default)]
    pub duration: Duration,
    #[serde(skip, default = "Utc::now")]
    pub timestamp: DateTime<Utc>,
}

impl ProvenanceEntry {
    pub fn new(source: SourceRef, native_query: impl Into<String>, call_count: u64) -> Self {
        ProvenanceEntry {
            source,
            native_query: native_query.into(),
            call_count,
            duration: Duration::ZERO,
            timestamp: Utc::now(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ResultTable {
    pub schema: Vec<ColumnSchema>,
    pub rows: Vec<Row>,
    pub provenance: Vec<ProvenanceEntry>,
}

impl ResultTable {
    pub fn new(schema: Vec<ColumnSchema>, rows: Vec<Row>) -> Self {
        ResultTable {
            schema,
            rows,
            provenance: Vec::new(),
        }
    }

    pub fn with_provenance(mut self, entry: ProvenanceEntry) -> Self {
        self.provenance.push(entry);
        self
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|c| c.name == name)
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.schema.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Total native invocations recorded in provenance.
    pub fn call_count(&self) -> u64 {
        self.provenance.iter().map(|p| p.call_count).sum()
    }

    /// Arity and type conformance of every row against the schema.
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.schema.len() {
                return Err(Error::Workspace(format!(
                    "row {i} has arity {} but schema has {} columns",
                    row.len(),
                    self.schema.len()
                )));
            }
            for (v, col) in row.iter().zip(&self.schema) {
                if !v.conforms_to(col.ty) {
                    return Err(Error::Workspace(format!(
                        "row {i}: value `{v}` does not conform to {} column `{}`",
                        col.ty, col.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sorted_rows(&self) -> Vec<Row> {
        let mut rows = self.rows.clone();
        rows.sort_by(|a, b| cmp_rows(a, b));
        rows
    }

    /// Same column names and types and the same rows as a multiset.
    pub fn multiset_eq(&self, other: &ResultTable) -> bool {
        let same_schema = self.schema.len() == other.schema.len()
            && self
                .schema
                .iter()
                .zip(&other.schema)
                .all(|(a, b)| a.name == b.name && a.ty == b.ty);
        same_schema && self.sorted_rows() == other.sorted_rows()
    }

    pub fn row_to_json(&self, row: &[Value]) -> serde_json::Value {
        let map: serde_json::Map<String, serde_json::Value> = self
            .schema
            .iter()
            .zip(row)
            .map(|(c, v)| (c.name.clone(), v.to_json()))
            .collect();
        serde_json::Value::Object(map)
    }

    /// One flat JSON object per line, keys in column order.
    pub fn to_ndjson(&self, sorted: bool) -> String {
        let rows = if sorted {
            self.sorted_rows()
        } else {
            self.rows.clone()
        };
        let mut out = String::new();
        for row in &rows {
            out.push_str(&self.row_to_json(row).to_string());
            out.push('\n');
        }
        out
    }

    pub fn schema_json(&self) -> String {
        let doc = TableFileSchema {
            columns: self.schema.clone(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("schema serializes") + "\n"
    }

    /// Parse ndjson rows against a known schema.
    pub fn rows_from_ndjson(schema: &[ColumnSchema], text: &str) -> Result<Vec<Row>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let obj: serde_json::Value = serde_json::from_str(line)?;
                Ok(schema
                    .iter()
                    .map(|c| {
                        obj.get(&c.name)
                            .map_or(Value::Null, |v| Value::from_json(v, c.ty))
                    })
                    .collect())
            })
            .collect()
    }

    /// Write `<dir>/<name>.schema.json` and `<dir>/<name>.ndjson`.
    pub fn write_files(&self, dir: &Path, name: &str) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{name}.schema.json")), self.schema_json())?;
        fs::write(dir.join(format!("{name}.ndjson")), self.to_ndjson(false))?;
        Ok(())
    }

    pub fn read_files(dir: &Path, name: &str) -> Result<ResultTable> {
        let schema_path = dir.join(format!("{name}.schema.json"));
        let doc: TableFileSchema = serde_json::from_str(&fs::read_to_string(&schema_path)?)?;
        let rows = Self::rows_from_ndjson(
            &doc.columns,
            &fs::read_to_string(dir.join(format!("{name}.ndjson")))?,
        )?;
        Ok(ResultTable {
            schema: doc.columns,
            rows,
            provenance: doc.provenance,
        })
    }
}

impl fmt::Display for ResultTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut widths: Vec<usize> = self.schema.iter().map(|c| c.name.len()).collect();
        let cells: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| v.to_string()).collect())
            .collect();
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count().min(60));
            }
        }
        let line = |f: &mut fmt::Formatter<'_>, vals: &[String]| -> fmt::Result {
            let parts: Vec<String> = vals
                .iter()
                .zip(&widths)
                .map(|(v, w)| {
                    let v: String = v.chars().take(60).collect();
                    format!("{v:<w$}")
                })
                .collect();
            writeln!(f, "| {} |", parts.join(" | "))
        };
        let header: Vec<String> = self.schema.iter().map(|c| c.name.clone()).collect();
        line(f, &header)?;
        let sep: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        writeln!(f, "|-{}-|", sep.join("-|-"))?;
        for row in &cells {
            line(f, row)?;
        }
        write!(f, "({} rows)", self.rows.len())
    }
}

#[derive(Serialize, Deserialize)]
struct TableFileSchema {
    columns: Vec<ColumnSchema>,
    #[serde(default)]
    provenance: Vec<ProvenanceEntry>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ResultTable {
        ResultTable::new(
            vec![
                ColumnSchema::new("name", SemanticType::Text),
                ColumnSchema::new("n", SemanticType::Integer),
            ],
            vec![
                vec![Value::Text("b".into()), Value::Integer(2)],
                vec![Value::Text("a".into()), Value::Null],
            ],
        )
    }

    #[test]
    fn validate_rejects_type_mismatch() {
        let mut t = sample();
        assert!(t.validate().is_ok());
        t.rows[0][1] = Value::Text("x".into());
        assert!(t.validate().is_err());
        t.rows[0].pop();
        assert!(t.validate().is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = sample().with_provenance(ProvenanceEntry::new(
            SourceRef::Catalog("DW".into()),
            "SELECT *",
            1,
        ));
        t.write_files(dir.path(), "x").unwrap();
        let back = ResultTable::read_files(dir.path(), "x").unwrap();
        assert!(back.multiset_eq(&t));
        assert_eq!(back.call_count(), 1);
        assert_eq!(back.to_ndjson(false), t.to_ndjson(false));
    }

    #[test]
    fn empty_table_serializes_header_only() {
        let t = ResultTable::new(vec![ColumnSchema::new("a", SemanticType::Text)], vec![]);
        assert_eq!(t.to_ndjson(true), "");
        assert!(t.schema_json().contains("\"a\""));
    }
}
