//! Result tables persisted as CSV (header row, period decimals, LF, UTF-8)
//! and JSON (column arrays plus a metadata object). Floats are written in
//! the shortest representation that parses back bit-exactly, so emit → read
//! is lossless.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("row has {got} values, table has {expected} columns")]
    Arity { got: usize, expected: usize },
    #[error("column `{column}` expects {expected}, got `{got}`")]
    Type { column: String, expected: &'static str, got: String },
    #[error("non-finite float in column `{0}`")]
    NonFinite(String),
    #[error("csv parse error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("json parse error: {0}")]
    Json(String),
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnType {
    Int,
    Float,
    Text,
}

impl ColumnType {
    fn name(&self) -> &'static str {
        match self {
            ColumnType::Int => "int",
            ColumnType::Float => "float",
            ColumnType::Text => "text",
        }
    }

    fn parse_name(text: &str) -> Option<ColumnType> {
        match text {
            "int" => Some(ColumnType::Int),
            "float" => Some(ColumnType::Float),
            "text" => Some(ColumnType::Text),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Value {
    fn column_type(&self) -> ColumnType {
        match self {
            Value::Int(_) => ColumnType::Int,
            Value::Float(_) => ColumnType::Float,
            Value::Text(_) => ColumnType::Text,
        }
    }

    fn render(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            // Debug form keeps the decimal point ("5.0"), so the column type
            // survives a CSV round trip; it is also shortest-round-trip.
            Value::Float(v) => format!("{v:?}"),
            Value::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Column {
    pub name: String,
    pub kind: ColumnType,
}

/// Run metadata carried by the JSON output only; the CSV stays byte-stable
/// across reruns (wall time would break that).
#[derive(Clone, Debug, Default)]
pub struct Metadata {
    pub config_hash: String,
    pub tool_version: String,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct ResultTable {
    columns: Vec<Column>,
    rows: Vec<Vec<Value>>,
    pub metadata: Metadata,
}

impl ResultTable {
    pub fn new(columns: Vec<(&str, ColumnType)>) -> Self {
        Self {
            columns: columns
                .into_iter()
                .map(|(name, kind)| Column { name: name.to_string(), kind })
                .collect(),
            rows: Vec::new(),
            metadata: Metadata::default(),
        }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn push_row(&mut self, row: Vec<Value>) -> Result<(), TableError> {
        if row.len() != self.columns.len() {
            return Err(TableError::Arity { got: row.len(), expected: self.columns.len() });
        }
        for (value, col) in row.iter().zip(&self.columns) {
            if value.column_type() != col.kind {
                return Err(TableError::Type {
                    column: col.name.clone(),
                    expected: col.kind.name(),
                    got: value.render(),
                });
            }
            match value {
                Value::Float(v) if !v.is_finite() => {
                    return Err(TableError::NonFinite(col.name.clone()));
                }
                Value::Text(s) if s.contains([',', '\n', '\r']) => {
                    return Err(TableError::Type {
                        column: col.name.clone(),
                        expected: "text without separators",
                        got: s.clone(),
                    });
                }
                _ => {}
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Header row plus data rows; LF endings; values never contain commas.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{}:{}", c.name, c.kind.name()))
            .collect();
        let _ = writeln!(out, "{}", header.join(","));
        for row in &self.rows {
            let rendered: Vec<String> = row.iter().map(Value::render).collect();
            let _ = writeln!(out, "{}", rendered.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, TableError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(TableError::Csv { line: 1, message: "empty input".into() })?;
        let mut columns = Vec::new();
        for field in header.split(',') {
            let (name, kind_text) = field.rsplit_once(':').ok_or(TableError::Csv {
                line: 1,
                message: format!("header field `{field}` lacks a `:type` suffix"),
            })?;
            let kind = ColumnType::parse_name(kind_text).ok_or(TableError::Csv {
                line: 1,
                message: format!("unknown column type `{kind_text}`"),
            })?;
            columns.push(Column { name: name.to_string(), kind });
        }
        let mut table = ResultTable { columns, rows: Vec::new(), metadata: Metadata::default() };
        for (idx, line) in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != table.columns.len() {
                return Err(TableError::Csv {
                    line: idx + 1,
                    message: format!(
                        "expected {} fields, got {}",
                        table.columns.len(),
                        fields.len()
                    ),
                });
            }
            let mut row = Vec::with_capacity(fields.len());
            for (field, col) in fields.iter().zip(&table.columns) {
                let value = match col.kind {
                    ColumnType::Int => Value::Int(field.parse().map_err(|e| TableError::Csv {
                        line: idx + 1,
                        message: format!("column `{}`: {e}", col.name),
                    })?),
                    ColumnType::Float => {
                        Value::Float(field.parse().map_err(|e| TableError::Csv {
                            line: idx + 1,
                            message: format!("column `{}`: {e}", col.name),
                        })?)
                    }
                    ColumnType::Text => Value::Text(field.to_string()),
                };
                row.push(value);
            }
            table.push_row(row).map_err(|e| TableError::Csv {
                line: idx + 1,
                message: e.to_string(),
            })?;
        }
        Ok(table)
    }

    /// Columns as arrays keyed by name, plus the metadata object.
    pub fn to_json(&self) -> Json {
        let mut data = Map::new();
        for (c, col) in self.columns.iter().enumerate() {
            let values: Vec<Json> = self
                .rows
                .iter()
                .map(|row| match &row[c] {
                    Value::Int(v) => json!(v),
                    Value::Float(v) => json!(v),
                    Value::Text(s) => json!(s),
                })
                .collect();
            data.insert(col.name.clone(), Json::Array(values));
        }
        json!({
            "columns": self.columns.iter().map(|c| json!({
                "name": c.name,
                "type": c.kind.name(),
            })).collect::<Vec<_>>(),
            "data": data,
            "metadata": {
                "config_hash": self.metadata.config_hash,
                "tool_version": self.metadata.tool_version,
                "wall_time_s": self.metadata.wall_time_s,
            },
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self, TableError> {
        let value: Json = serde_json::from_str(text).map_err(|e| TableError::Json(e.to_string()))?;
        Self::from_json(&value)
    }

    pub fn from_json(value: &Json) -> Result<Self, TableError> {
        let columns_json = value
            .get("columns")
            .and_then(Json::as_array)
            .ok_or_else(|| TableError::Json("missing `columns` array".into()))?;
        let mut columns = Vec::new();
        for c in columns_json {
            let name = c
                .get("name")
                .and_then(Json::as_str)
                .ok_or_else(|| TableError::Json("column lacks `name`".into()))?;
            let kind = c
                .get("type")
                .and_then(Json::as_str)
                .and_then(ColumnType::parse_name)
                .ok_or_else(|| TableError::Json(format!("column `{name}` lacks a valid type")))?;
            columns.push(Column { name: name.to_string(), kind });
        }
        let data = value
            .get("data")
            .and_then(Json::as_object)
            .ok_or_else(|| TableError::Json("missing `data` object".into()))?;
        let mut column_values: Vec<&Vec<Json>> = Vec::new();
        let mut n_rows = None;
        for col in &columns {
            let arr = data
                .get(&col.name)
                .and_then(Json::as_array)
                .ok_or_else(|| TableError::Json(format!("missing data for column `{}`", col.name)))?;
            if let Some(n) = n_rows {
                if arr.len() != n {
                    return Err(TableError::Json(format!(
                        "column `{}` has {} values, expected {n}",
                        col.name,
                        arr.len()
                    )));
                }
            }
            n_rows = Some(arr.len());
            column_values.push(arr);
        }
        let mut table = ResultTable { columns, rows: Vec::new(), metadata: Metadata::default() };
        #[allow(clippy::needless_range_loop)]
        for r in 0..n_rows.unwrap_or(0) {
            let mut row = Vec::with_capacity(table.columns.len());
            for (c, col) in table.columns.iter().enumerate() {
                let v = &column_values[c][r];
                let value = match col.kind {
                    ColumnType::Int => Value::Int(v.as_i64().ok_or_else(|| {
                        TableError::Json(format!("column `{}` row {r}: expected int", col.name))
                    })?),
                    ColumnType::Float => Value::Float(v.as_f64().ok_or_else(|| {
                        TableError::Json(format!("column `{}` row {r}: expected float", col.name))
                    })?),
                    ColumnType::Text => Value::Text(
                        v.as_str()
                            .ok_or_else(|| {
                                TableError::Json(format!(
                                    "column `{}` row {r}: expected text",
                                    col.name
                                ))
                            })?
                            .to_string(),
                    ),
                };
                row.push(value);
            }
            let columns_len = table.columns.len();
            debug_assert_eq!(row.len(), columns_len);
            table.rows.push(row);
        }
        if let Some(meta) = value.get("metadata").and_then(Json::as_object) {
            table.metadata = Metadata {
                config_hash: meta
                    .get("config_hash")
                    .and_then(Json::as_str)
                    .unwrap_or_default()
                    .to_string(),
                tool_version: meta
                    .get("tool_version")
                    .and_then(Json::as_str)
                    .unwrap_or_default()
                    .to_string(),
                wall_time_s: meta.get("wall_time_s").and_then(Json::as_f64).unwrap_or(0.0),
            };
        }
        Ok(table)
    }

    /// Write atomically: to a temporary sibling, then rename into place.
    pub fn write_atomic(&self, path: &Path, contents: &str) -> Result<(), TableError> {
        let tmp = path.with_extension("tmp");
        let io_err = |source: std::io::Error| TableError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut file = std::fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(contents.as_bytes()).map_err(io_err)?;
        file.sync_all().map_err(io_err)?;
        std::fs::rename(&tmp, path).map_err(io_err)
    }
}

/// Collect per-experiment summary statistics keyed by name.
pub type SummaryMap = BTreeMap<String, f64>;
