//! Column-oriented table storage.
//!
//! A [`ColumnTable`] is an immutable set of equally long, named, typed
//! columns. Tables come from CSV ([`load_csv`]) or from the PWCT columnar
//! binary format ([`save_columnar`] / [`load_columnar`]), and are shared
//! between sessions through a [`TableRegistry`].

mod csv;
mod pwct;
mod registry;

use std::fmt;
use std::io;

pub use self::csv::{load_csv, load_csv_bytes};
pub use self::pwct::{load_columnar, save_columnar, write_columnar, ColumnDescriptor, PwctReader};
pub use self::registry::{RegisteredTable, TableRegistry};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("CSV parse error at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("format error at byte {offset}{}: {message}", column.as_ref().map(|c| format!(" in column '{c}'")).unwrap_or_default())]
    Format {
        offset: u64,
        column: Option<String>,
        message: String,
    },
    #[error("unknown {what} '{name}'")]
    Name { what: &'static str, name: String },
    #[error("column '{0}' is not numeric")]
    NotNumeric(String),
    #[error("path '{0}' is outside the data directory")]
    PathEscape(String),
}

impl TableError {
    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        TableError::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn unknown_column(name: &str) -> Self {
        TableError::Name {
            what: "column",
            name: name.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Float64,
    Int64,
    Bool,
    Text,
}

impl ColumnKind {
    /// Kind tag used in the PWCT format.
    pub fn code(self) -> u8 {
        match self {
            ColumnKind::Float64 => 0,
            ColumnKind::Int64 => 1,
            ColumnKind::Bool => 2,
            ColumnKind::Text => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => ColumnKind::Float64,
            1 => ColumnKind::Int64,
            2 => ColumnKind::Bool,
            3 => ColumnKind::Text,
            _ => return None,
        })
    }

    pub fn is_numeric(self) -> bool {
        matches!(self, ColumnKind::Float64 | ColumnKind::Int64)
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnKind::Float64 => "float64",
            ColumnKind::Int64 => "int64",
            ColumnKind::Bool => "bool",
            ColumnKind::Text => "text",
        })
    }
}

/// Cell storage for one column. Null cells hold a placeholder value
/// (NaN, 0, false or the empty string) and are flagged in the null mask.
#[derive(Debug, Clone)]
pub enum ColumnData {
    Float64(Vec<f64>),
    Int64(Vec<i64>),
    Bool(Vec<bool>),
    Text(Vec<String>),
}

impl ColumnData {
    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Float64(_) => ColumnKind::Float64,
            ColumnData::Int64(_) => ColumnKind::Int64,
            ColumnData::Bool(_) => ColumnKind::Bool,
            ColumnData::Text(_) => ColumnKind::Text,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ColumnData::Float64(v) => v.len(),
            ColumnData::Int64(v) => v.len(),
            ColumnData::Bool(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

// Float payloads compare bitwise so that NaN cells round-trip as equal.
impl PartialEq for ColumnData {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ColumnData::Float64(a), ColumnData::Float64(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (ColumnData::Int64(a), ColumnData::Int64(b)) => a == b,
            (ColumnData::Bool(a), ColumnData::Bool(b)) => a == b,
            (ColumnData::Text(a), ColumnData::Text(b)) => a == b,
            _ => false,
        }
    }
}

/// A single cell value, as handed out for row identification.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Null,
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    name: String,
    data: ColumnData,
    nulls: Vec<bool>,
}

impl Column {
    pub fn new(name: impl Into<String>, data: ColumnData, nulls: Vec<bool>) -> Result<Self, TableError> {
        let name = name.into();
        if nulls.len() != data.len() {
            return Err(TableError::Schema(format!(
                "column '{}': null mask has {} entries for {} values",
                name,
                nulls.len(),
                data.len()
            )));
        }
        Ok(Column { name, data, nulls })
    }

    /// Column without nulls.
    pub fn dense(name: impl Into<String>, data: ColumnData) -> Self {
        let nulls = vec![false; data.len()];
        Column {
            name: name.into(),
            data,
            nulls,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.data.kind()
    }

    pub fn data(&self) -> &ColumnData {
        &self.data
    }

    pub fn nulls(&self) -> &[bool] {
        &self.nulls
    }

    pub fn len(&self) -> usize {
        self.nulls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nulls.is_empty()
    }

    /// True when the cell is null or, for float columns, NaN.
    pub fn is_missing(&self, row: usize) -> bool {
        self.nulls[row] || matches!(&self.data, ColumnData::Float64(v) if v[row].is_nan())
    }

    pub fn cell(&self, row: usize) -> CellValue {
        if self.nulls[row] {
            return CellValue::Null;
        }
        match &self.data {
            ColumnData::Float64(v) => CellValue::Float(v[row]),
            ColumnData::Int64(v) => CellValue::Int(v[row]),
            ColumnData::Bool(v) => CellValue::Bool(v[row]),
            ColumnData::Text(v) => CellValue::Text(v[row].clone()),
        }
    }

    /// Numeric value of a cell, `None` when missing or non-numeric.
    pub fn numeric(&self, row: usize) -> Option<f64> {
        if self.nulls[row] {
            return None;
        }
        match &self.data {
            ColumnData::Float64(v) if !v[row].is_nan() => Some(v[row]),
            ColumnData::Int64(v) => Some(v[row] as f64),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnTable {
    name: String,
    columns: Vec<Column>,
    row_count: usize,
}

impl ColumnTable {
    /// Builds a table, taking the row count from the first column (0 if none).
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Self, TableError> {
        let rows = columns.first().map_or(0, Column::len);
        Self::with_row_count(name, rows, columns)
    }

    pub fn with_row_count(
        name: impl Into<String>,
        row_count: usize,
        columns: Vec<Column>,
    ) -> Result<Self, TableError> {
        let name = name.into();
        for (i, col) in columns.iter().enumerate() {
            if col.len() != row_count {
                return Err(TableError::Schema(format!(
                    "column '{}' has {} rows, expected {}",
                    col.name,
                    col.len(),
                    row_count
                )));
            }
            if columns[..i].iter().any(|c| c.name == col.name) {
                return Err(TableError::Schema(format!("duplicate column name '{}'", col.name)));
            }
        }
        Ok(ColumnTable {
            name,
            columns,
            row_count,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Approximate in-memory payload size, used for cache accounting.
    pub fn byte_size(&self) -> usize {
        self.columns
            .iter()
            .map(|c| {
                c.len()
                    + match &c.data {
                        ColumnData::Float64(v) => v.len() * 8,
                        ColumnData::Int64(v) => v.len() * 8,
                        ColumnData::Bool(v) => v.len(),
                        ColumnData::Text(v) => v.iter().map(|s| s.len() + 24).sum(),
                    }
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub count_valid: usize,
}

/// Min, max and count over the non-null, non-NaN cells of a numeric column.
pub fn column_stats(table: &ColumnTable, column: &str) -> Result<ColumnStats, TableError> {
    let col = table
        .column(column)
        .ok_or_else(|| TableError::unknown_column(column))?;
    if !col.kind().is_numeric() {
        return Err(TableError::NotNumeric(column.to_string()));
    }
    let mut stats = ColumnStats {
        min: None,
        max: None,
        count_valid: 0,
    };
    for v in (0..col.len()).filter_map(|i| col.numeric(i)) {
        stats.count_valid += 1;
        stats.min = Some(stats.min.map_or(v, |m| m.min(v)));
        stats.max = Some(stats.max.map_or(v, |m| m.max(v)));
    }
    Ok(stats)
}
