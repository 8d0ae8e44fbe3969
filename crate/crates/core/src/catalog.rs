//! Registry of sources, their tables, column schemas, and the statistics the
//! planner reads. Answers the `?` introspection forms.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::aql::SchemaQuery;
use crate::error::{Error, Result};
use crate::table::{ColumnOrigin, ColumnSchema, ResultTable};
use crate::value::{SemanticType, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WrapperKind {
    RelationalFixture,
    DocumentCorpus,
    Mailbox,
    KnowledgeStub,
    HttpApi,
}

impl WrapperKind {
    pub fn name(self) -> &'static str {
        match self {
            WrapperKind::RelationalFixture => "relational-fixture",
            WrapperKind::DocumentCorpus => "document-corpus",
            WrapperKind::Mailbox => "mailbox",
            WrapperKind::KnowledgeStub => "knowledge-stub",
            WrapperKind::HttpApi => "http-api",
        }
    }
}

impl fmt::Display for WrapperKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDef {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: SemanticType,
    /// Known values of a low-cardinality text column, normalized. Lets the
    /// translator bind content words to the column they describe.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vocabulary: Vec<String>,
}

impl ColumnDef {
    pub fn new(name: impl Into<String>, ty: SemanticType) -> Self {
        ColumnDef {
            name: name.into(),
            ty,
            vocabulary: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableSchema {
    /// `SOURCE.table` once registered; fixture files may give the short name.
    pub name: String,
    pub columns: Vec<ColumnDef>,
    #[serde(default)]
    pub row_estimate: u64,
    #[serde(default = "default_call_cost")]
    pub per_call_cost: f64,
    #[serde(default = "default_row_cost")]
    pub per_row_cost: f64,
    /// Rows returned per native invocation; `None` = unpaged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub page_size: Option<u64>,
}

fn default_call_cost() -> f64 {
    1.0
}

fn default_row_cost() -> f64 {
    0.001
}

impl TableSchema {
    pub fn new(name: impl Into<String>, columns: Vec<ColumnDef>) -> Self {
        TableSchema {
            name: name.into(),
            columns,
            row_estimate: 0,
            per_call_cost: default_call_cost(),
            per_row_cost: default_row_cost(),
            page_size: None,
        }
    }

    pub fn short_name(&self) -> &str {
        self.name.rsplit_once('.').map_or(&self.name, |(_, t)| t)
    }

    pub fn source_name(&self) -> &str {
        self.name.split_once('.').map_or("", |(s, _)| s)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnDef> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.column(name).is_some()
    }

    /// Column schemas carrying their catalog origin.
    pub fn column_schemas(&self) -> Vec<ColumnSchema> {
        self.columns
            .iter()
            .map(|c| ColumnSchema {
                name: c.name.clone(),
                ty: c.ty,
                origin: Some(ColumnOrigin {
                    table: self.name.clone(),
                    column: c.name.clone(),
                }),
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for c in &self.columns {
            if !seen.insert(&c.name) {
                return Err(Error::Catalog(format!(
                    "duplicate column `{}` in table `{}`",
                    c.name, self.name
                )));
            }
        }
        if !(self.per_call_cost >= 0.0 && self.per_row_cost >= 0.0) {
            return Err(Error::Catalog(format!("negative cost in table `{}`", self.name)));
        }
        if self.page_size == Some(0) {
            return Err(Error::Catalog(format!("page_size 0 in table `{}`", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceDescriptor {
    pub name: String,
    pub wrapper_kind: WrapperKind,
    #[serde(default)]
    pub connection: BTreeMap<String, String>,
    #[serde(default)]
    pub tables: Vec<TableSchema>,
}

/// Document listing source descriptors; loaded via `--catalog`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CatalogFile {
    pub sources: Vec<SourceDescriptor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceHandle(pub usize);

#[derive(Default)]
struct Inner {
    sources: Vec<SourceDescriptor>,
    /// qualified name -> (source index, table index)
    tables: HashMap<String, (usize, usize)>,
    /// short name -> qualified name
    short: HashMap<String, String>,
}

/// Read-mostly catalog. Writers (registration, statistics) are serialized;
/// readers get cloned snapshots.
#[derive(Default)]
pub struct Catalog {
    inner: RwLock<Inner>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_source(&self, mut desc: SourceDescriptor) -> Result<SourceHandle> {
        if desc.tables.is_empty() {
            return Err(Error::Catalog(format!("source `{}` declares no tables", desc.name)));
        }
        let mut inner = self.inner.write().unwrap();
        if inner.sources.iter().any(|s| s.name == desc.name) {
            return Err(Error::Catalog(format!("duplicate source name `{}`", desc.name)));
        }
        let prefix = format!("{}.", desc.name);
        let mut fresh = std::collections::HashSet::new();
        for t in &mut desc.tables {
            if !t.name.starts_with(&prefix) {
                t.name = format!("{prefix}{}", t.name);
            }
            t.validate()?;
            let short = t.short_name().to_string();
            if inner.short.contains_key(&short) || !fresh.insert(short.clone()) {
                return Err(Error::Catalog(format!(
                    "table name collision: `{short}` is already registered"
                )));
            }
            if inner.sources.iter().any(|s| s.name == short) {
                return Err(Error::Catalog(format!(
                    "table name collision: `{short}` is a source name"
                )));
            }
        }
        if inner.short.contains_key(&desc.name) {
            return Err(Error::Catalog(format!(
                "source name `{}` collides with a table name",
                desc.name
            )));
        }
        let si = inner.sources.len();
        for (ti, t) in desc.tables.iter().enumerate() {
            inner.tables.insert(t.name.clone(), (si, ti));
            inner.short.insert(t.short_name().to_string(), t.name.clone());
        }
        inner.sources.push(desc);
        Ok(SourceHandle(si))
    }

    pub fn sources(&self) -> Vec<SourceDescriptor> {
        self.inner.read().unwrap().sources.clone()
    }

    pub fn source(&self, name: &str) -> Option<SourceDescriptor> {
        self.inner
            .read()
            .unwrap()
            .sources
            .iter()
            .find(|s| s.name == name)
            .cloned()
    }

    pub fn is_source(&self, name: &str) -> bool {
        self.inner.read().unwrap().sources.iter().any(|s| s.name == name)
    }

    /// Look a table up by qualified or short name.
    pub fn table(&self, name: &str) -> Option<TableSchema> {
        let inner = self.inner.read().unwrap();
        let qualified = if inner.tables.contains_key(name) {
            name
        } else {
            inner.short.get(name)?.as_str()
        };
        let &(si, ti) = inner.tables.get(qualified)?;
        Some(inner.sources[si].tables[ti].clone())
    }

    /// Resolve a FROM reference. A bare source name resolves to the single
    /// table of that source whose schema covers every referenced column.
    pub fn resolve_from(&self, name: &str, columns: &[&str]) -> Result<TableSchema> {
        if let Some(t) = self.table(name) {
            return Ok(t);
        }
        let Some(src) = self.source(name) else {
            return Err(Error::not_found("table", name));
        };
        let covering: Vec<&TableSchema> = src
            .tables
            .iter()
            .filter(|t| columns.iter().all(|c| t.has_column(c)))
            .collect();
        match covering.as_slice() {
            [one] => Ok((*one).clone()),
            [] => Err(Error::Plan(format!(
                "no table of source `{name}` has columns [{}]",
                columns.join(", ")
            ))),
            many => Err(Error::Plan(format!(
                "source `{name}` is ambiguous for columns [{}]: candidates {}",
                columns.join(", "),
                many.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    pub fn introspect(&self, query: &SchemaQuery) -> Result<ResultTable> {
        let text = |s: &str| Value::Text(s.to_string());
        match query {
            SchemaQuery::AllSources => Ok(ResultTable::new(
                vec![
                    ColumnSchema::new("source", SemanticType::Text),
                    ColumnSchema::new("wrapper_kind", SemanticType::Text),
                ],
                self.sources()
                    .iter()
                    .map(|s| vec![text(&s.name), text(s.wrapper_kind.name())])
                    .collect(),
            )),
            SchemaQuery::OneSource(name) if self.is_source(name) => {
                let src = self.source(name).unwrap();
                Ok(ResultTable::new(
                    vec![ColumnSchema::new("table", SemanticType::Text)],
                    src.tables.iter().map(|t| vec![text(&t.name)]).collect(),
                ))
            }
            SchemaQuery::OneSource(name) | SchemaQuery::OneTable(name) => {
                let t = self
                    .table(name)
                    .ok_or_else(|| Error::not_found("source or table", name.clone()))?;
                Ok(ResultTable::new(
                    vec![
                        ColumnSchema::new("column", SemanticType::Text),
                        ColumnSchema::new("type", SemanticType::Text),
                    ],
                    t.columns
                        .iter()
                        .map(|c| vec![text(&c.name), text(c.ty.name())])
                        .collect(),
                ))
            }
        }
    }

    pub fn set_statistics(
        &self,
        table: &str,
        row_estimate: i64,
        per_call_cost: f64,
        per_row_cost: f64,
    ) -> Result<TableSchema> {
        if row_estimate < 0 || !(per_call_cost >= 0.0) || !(per_row_cost >= 0.0) {
            return Err(Error::Catalog(format!(
                "statistics for `{table}` must be non-negative"
            )));
        }
        let mut inner = self.inner.write().unwrap();
        let qualified = if inner.tables.contains_key(table) {
            table.to_string()
        } else {
            inner
                .short
                .get(table)
                .cloned()
                .ok_or_else(|| Error::not_found("table", table))?
        };
        let (si, ti) = inner.tables[&qualified];
        let t = &mut inner.sources[si].tables[ti];
        t.row_estimate = row_estimate as u64;
        t.per_call_cost = per_call_cost;
        t.per_row_cost = per_row_cost;
        Ok(t.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn source(name: &str, tables: &[&str]) -> SourceDescriptor {
        SourceDescriptor {
            name: name.into(),
            wrapper_kind: WrapperKind::RelationalFixture,
            connection: BTreeMap::new(),
            tables: tables
                .iter()
                .map(|t| TableSchema::new(*t, vec![ColumnDef::new("id", SemanticType::Integer)]))
                .collect(),
        }
    }

    #[test]
    fn empty_catalog_lists_nothing() {
        let c = Catalog::new();
        assert!(c.introspect(&SchemaQuery::AllSources).unwrap().is_empty());
    }

    #[test]
    fn sources_listed_in_registration_order() {
        let c = Catalog::new();
        for (i, n) in ["E", "D", "C", "B", "A"].iter().enumerate() {
            c.register_source(source(n, &[&format!("t{i}")])).unwrap();
        }
        let t = c.introspect(&SchemaQuery::AllSources).unwrap();
        let names: Vec<String> = t.rows.iter().map(|r| r[0].to_string()).collect();
        assert_eq!(names, ["E", "D", "C", "B", "A"]);
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let c = Catalog::new();
        c.register_source(source("DW", &["faculty"])).unwrap();
        let err = c.register_source(source("LAB", &["faculty"])).unwrap_err();
        assert!(err.to_string().contains("table name collision"), "{err}");
        assert!(c.register_source(source("DW", &["other"])).is_err());
        assert!(c.table("LAB.faculty").is_none());
    }

    #[test]
    fn introspection_scopes() {
        let c = Catalog::new();
        c.register_source(source("DW", &["faculty", "buildings"])).unwrap();
        let tables = c.introspect(&SchemaQuery::OneSource("DW".into())).unwrap();
        assert_eq!(tables.len(), 2);
        assert_eq!(tables.rows[0][0], Value::Text("DW.faculty".into()));
        let cols = c.introspect(&SchemaQuery::OneTable("DW.faculty".into())).unwrap();
        assert_eq!(cols.rows, vec![vec![Value::Text("id".into()), Value::Text("integer".into())]]);
        let err = c.introspect(&SchemaQuery::OneSource("nonexistent".into())).unwrap_err();
        assert!(err.to_string().contains("nonexistent"));
    }

    #[test]
    fn statistics_updates_are_visible_and_validated() {
        let c = Catalog::new();
        c.register_source(source("DW", &["faculty"])).unwrap();
        c.set_statistics("faculty", 50, 1.0, 0.01).unwrap();
        assert_eq!(c.table("DW.faculty").unwrap().row_estimate, 50);
        assert!(c.set_statistics("faculty", -1, 1.0, 0.01).is_err());
        assert!(c.set_statistics("faculty", 1, -1.0, 0.01).is_err());
        assert!(matches!(
            c.set_statistics("nope", 1, 1.0, 0.01),
            Err(Error::NotFound { .. })
        ));
    }

    #[test]
    fn bare_source_resolves_to_covering_table() {
        let c = Catalog::new();
        let mut desc = source("WIKI", &["Page", "laureates"]);
        desc.tables[0].columns.push(ColumnDef::new("title", SemanticType::Text));
        desc.tables[1].columns.push(ColumnDef::new("award_name", SemanticType::Text));
        c.register_source(desc).unwrap();
        assert_eq!(c.resolve_from("WIKI", &["award_name"]).unwrap().name, "WIKI.laureates");
        assert_eq!(c.resolve_from("WIKI", &["title"]).unwrap().name, "WIKI.Page");
        assert!(c.resolve_from("WIKI", &["id"]).is_err());
        assert!(c.resolve_from("WIKI", &["nothing"]).is_err());
    }
}
