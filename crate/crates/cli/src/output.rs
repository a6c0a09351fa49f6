//! Tables written as `#`-headed CSV or as JSON with the same schema.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    B(bool),
    S(String),
    Missing,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::I(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::I(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

impl Cell {
    fn csv(&self, precision: usize) -> String {
        match self {
            Cell::F(v) if *v == 0.0 => format!("{:.*e}", precision - 1, 0.0),
            Cell::F(v) if v.is_finite() => format!("{:.*e}", precision - 1, v),
            Cell::F(v) if v.is_nan() => "nan".into(),
            Cell::F(v) => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::I(v) => v.to_string(),
            Cell::B(v) => v.to_string(),
            Cell::S(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(v) if v.is_finite() => json!(v),
            Cell::F(v) => json!(v.to_string()),
            Cell::I(v) => json!(v),
            Cell::B(v) => json!(v),
            Cell::S(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

/// Result of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    /// Scalar results, echoed as `# key = value` header lines.
    pub summary: Map<String, Value>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(command: &str, columns: &[(&str, &str)]) -> Self {
        Self {
            command: command.into(),
            columns: columns
                .iter()
                .map(|(n, u)| Column {
                    name: (*n).into(),
                    unit: (*u).into(),
                })
                .collect(),
            rows: Vec::new(),
            summary: Map::new(),
            warnings: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl Serialize) {
        self.summary
            .insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn to_csv(&self, precision: usize) -> String {
        let mut out = format!("# resolab {}\n", self.command);
        for (k, v) in &self.summary {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        let header: Vec<String> = self
            .columns
            .iter()
            .map(|c| format!("{} [{}]", c.name, c.unit))
            .collect();
        out.push_str(&format!("# {}\n", header.join(",")));
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        for r in &self.rows {
            w.write_record(r.iter().map(|c| c.csv(precision)))
                .expect("in-memory csv write");
        }
        out.push_str(std::str::from_utf8(&w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv"));
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
            .collect();
        let doc = json!({
            "command": self.command,
            "summary": self.summary,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json serialization");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format, precision: usize) -> String {
        match format {
            Format::Csv => self.to_csv(precision),
            Format::Json => self.to_json(),
        }
    }
}

/// `<path>.meta.json` next to the data file.
pub fn sidecar_path(data: &Path) -> PathBuf {
    let mut name = data.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    data.with_file_name(name)
}

/// Writes the data file and its metadata sidecar.
pub fn write_files(data: &Path, body: &str, meta: &Value) -> std::io::Result<()> {
    if let Some(dir) = data.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::File::create(data)?.write_all(body.as_bytes())?;
    let mut m = serde_json::to_string_pretty(meta).expect("json serialization");
    m.push('\n');
    std::fs::write(sidecar_path(data), m)
}

/// Reads back the numeric columns of a CSV written by [`Report::to_csv`].
pub fn read_csv(text: &str) -> Result<Vec<Vec<String>>, csv::Error> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.map(|r| r.iter().map(str::to_string).collect()))
        .collect()
}
