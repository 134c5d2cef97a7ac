//! Output tables and their on-disk forms.
//!
//! CSV output starts with `# key: value` comment lines carrying the schema
//! version, the command, parameter echoes (`param.*`) and metadata
//! (`meta.*`), followed by an RFC 4180 table with a header row. JSON output
//! is one object with `schema_version`, `command`, `params`, `metadata` and
//! `rows`, the last being an array of objects keyed by column name.

use std::fmt;

use serde_json::{Map, Value};
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(i) => Value::from(*i),
            Cell::Float(x) if x.is_finite() => Value::from(*x),
            Cell::Float(x) => Value::from(x.to_string()),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Number(n) => n
                .as_i64()
                .map(Cell::Int)
                .or_else(|| n.as_f64().map(Cell::Float)),
            Value::String(s) => Some(Cell::Text(s.clone())),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            Cell::Text(s) => s.parse().ok(),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            // same shortest round-trip form as the JSON output
            Cell::Float(x) if x.is_finite() => f.write_str(&Value::from(*x).to_string()),
            Cell::Float(x) => write!(f, "{x}"),
            Cell::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputRecord {
    pub schema_version: String,
    pub command: String,
    pub params: Vec<(String, String)>,
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemaError {
    #[error("malformed {0} input: {1}")]
    Malformed(&'static str, String),
    #[error("missing field {0}")]
    Missing(String),
    #[error("unsupported schema version {0:?}")]
    Version(String),
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
    #[error("command {command} requires column {column}")]
    MissingColumn { command: String, column: String },
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("table has no rows")]
    NoRows,
}

fn required_columns(command: &str) -> Option<&'static [&'static str]> {
    Some(match command {
        "exact" => &["n", "p_exact", "f_exact", "f_catalan", "p_from_convolution"],
        "sweep" => &["lambda", "rho", "regime", "return_probability"],
        "asymptote" => &["n", "f_exact", "f_asym", "ratio_f"],
        "simulate" => &[
            "quantity",
            "step",
            "estimate",
            "std_error",
            "exact",
            "z_score",
        ],
        "series" => &["n", "u_coefficient", "g_coefficient"],
        _ => return None,
    })
}

impl OutputRecord {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        OutputRecord {
            schema_version: SCHEMA_VERSION.to_string(),
            command: command.to_string(),
            params: Vec::new(),
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta(&mut self, key: &str, value: impl fmt::Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn validate(&self) -> Result<(), SchemaError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(SchemaError::Version(self.schema_version.clone()));
        }
        let required = required_columns(&self.command)
            .ok_or_else(|| SchemaError::UnknownCommand(self.command.clone()))?;
        for column in required {
            if self.column_index(column).is_none() {
                return Err(SchemaError::MissingColumn {
                    command: self.command.clone(),
                    column: column.to_string(),
                });
            }
        }
        if self.rows.is_empty() {
            return Err(SchemaError::NoRows);
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(SchemaError::RaggedRow {
                    row: i,
                    found: row.len(),
                    expected: self.columns.len(),
                });
            }
        }
        Ok(())
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let single_line = |s: &str| s.replace(['\n', '\r'], " ");
        out.push_str(&format!("# schema_version: {}\n", self.schema_version));
        out.push_str(&format!("# command: {}\n", self.command));
        for (k, v) in &self.params {
            out.push_str(&format!("# param.{k}: {}\n", single_line(v)));
        }
        for (k, v) in &self.metadata {
            out.push_str(&format!("# meta.{k}: {}\n", single_line(v)));
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            writer
                .write_record(row.iter().map(|c| c.to_string()))
                .expect("in-memory write");
        }
        let table = writer.into_inner().expect("in-memory flush");
        out.push_str(&String::from_utf8(table).expect("utf-8 cells"));
        out
    }

    pub fn to_json(&self) -> String {
        let pairs = |items: &[(String, String)]| {
            Value::Object(
                items
                    .iter()
                    .map(|(k, v)| (k.clone(), Value::from(v.as_str())))
                    .collect(),
            )
        };
        let rows = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .cloned()
                        .zip(row.iter().map(Cell::to_json))
                        .collect(),
                )
            })
            .collect();
        let mut obj = Map::new();
        obj.insert(
            "schema_version".into(),
            Value::from(self.schema_version.as_str()),
        );
        obj.insert("command".into(), Value::from(self.command.as_str()));
        obj.insert("params".into(), pairs(&self.params));
        obj.insert("metadata".into(), pairs(&self.metadata));
        obj.insert("rows".into(), Value::Array(rows));
        let mut text = serde_json::to_string_pretty(&Value::Object(obj)).expect("valid json");
        text.push('\n');
        text
    }

    /// Parses either format, detected from the first non-blank character.
    pub fn parse(text: &str) -> Result<Self, SchemaError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_csv(text)
        }
    }

    pub fn from_csv(text: &str) -> Result<Self, SchemaError> {
        let mut header: Vec<(String, String)> = Vec::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(comment) = line.strip_prefix("# ") else {
                break;
            };
            let (k, v) = comment
                .trim_end_matches(['\n', '\r'])
                .split_once(": ")
                .ok_or_else(|| {
                    SchemaError::Malformed("csv", format!("bad header line {line:?}"))
                })?;
            header.push((k.to_string(), v.to_string()));
            body_start += line.len();
        }
        let lookup = |key: &str| {
            header
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| SchemaError::Missing(key.to_string()))
        };
        let strip = |prefix: &str| -> Vec<(String, String)> {
            header
                .iter()
                .filter_map(|(k, v)| k.strip_prefix(prefix).map(|k| (k.to_string(), v.clone())))
                .collect()
        };
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .from_reader(&text.as_bytes()[body_start..]);
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| SchemaError::Malformed("csv", e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| SchemaError::Malformed("csv", e.to_string()))?;
            rows.push(record.iter().map(Cell::text).collect());
        }
        let record = OutputRecord {
            schema_version: lookup("schema_version")?,
            command: lookup("command")?,
            params: strip("param."),
            metadata: strip("meta."),
            columns,
            rows,
        };
        record.validate()?;
        Ok(record)
    }

    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| SchemaError::Malformed("json", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| SchemaError::Malformed("json", "top level is not an object".into()))?;
        let string = |key: &str| {
            obj.get(key)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| SchemaError::Missing(key.to_string()))
        };
        let pairs = |key: &str| -> Result<Vec<(String, String)>, SchemaError> {
            let map = obj
                .get(key)
                .and_then(Value::as_object)
                .ok_or_else(|| SchemaError::Missing(key.to_string()))?;
            map.iter()
                .map(|(k, v)| {
                    v.as_str()
                        .map(|s| (k.clone(), s.to_string()))
                        .ok_or_else(|| {
                            SchemaError::Malformed("json", format!("{key}.{k} is not a string"))
                        })
                })
                .collect()
        };
        let raw_rows = obj
            .get("rows")
            .and_then(Value::as_array)
            .ok_or_else(|| SchemaError::Missing("rows".into()))?;
        let mut columns: Vec<String> = Vec::new();
        let mut rows = Vec::with_capacity(raw_rows.len());
        for (i, raw) in raw_rows.iter().enumerate() {
            let map = raw.as_object().ok_or_else(|| {
                SchemaError::Malformed("json", format!("row {i} is not an object"))
            })?;
            if i == 0 {
                columns = map.keys().cloned().collect();
            }
            if map.len() != columns.len() || !map.keys().zip(&columns).all(|(a, b)| a == b) {
                return Err(SchemaError::RaggedRow {
                    row: i,
                    found: map.len(),
                    expected: columns.len(),
                });
            }
            let row = map
                .values()
                .map(|v| {
                    Cell::from_json(v).ok_or_else(|| {
                        SchemaError::Malformed("json", format!("row {i} has a non-scalar cell"))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        let record = OutputRecord {
            schema_version: string("schema_version")?,
            command: string("command")?,
            params: pairs("params")?,
            metadata: pairs("metadata")?,
            columns,
            rows,
        };
        record.validate()?;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> OutputRecord {
        let mut r = OutputRecord::new("sweep", &["lambda", "rho", "regime", "return_probability"])
            .param("d", 3)
            .param("lambda", "1/2..3");
        r.meta("note", "quoted, \"cell\"");
        r.push_row(vec![
            Cell::Float(0.5),
            Cell::Float(0.8),
            Cell::text("transient"),
            Cell::Float(0.25),
        ]);
        r.push_row(vec![
            Cell::Int(2),
            Cell::Float(1.0),
            Cell::text("a,b"),
            Cell::Float(1e-300),
        ]);
        r
    }

    #[test]
    fn csv_round_trip() {
        let text = sample().to_csv();
        assert!(text.starts_with("# schema_version: 1\n# command: sweep\n"));
        let parsed = OutputRecord::parse(&text).unwrap();
        assert_eq!(parsed.to_csv(), text);
        assert_eq!(parsed.params, sample().params);
    }

    #[test]
    fn json_round_trip() {
        let text = sample().to_json();
        let parsed = OutputRecord::parse(&text).unwrap();
        assert_eq!(parsed, sample());
        assert_eq!(parsed.to_json(), text);
    }

    #[test]
    fn validation_failures() {
        let mut r = sample();
        r.rows.clear();
        assert_eq!(r.validate(), Err(SchemaError::NoRows));
        let mut r = sample();
        r.columns[1] = "rho_typo".into();
        assert!(matches!(
            r.validate(),
            Err(SchemaError::MissingColumn { .. })
        ));
        let mut r = sample();
        r.schema_version = "0".into();
        assert!(matches!(r.validate(), Err(SchemaError::Version(_))));
        let mut r = sample();
        r.command = "plot".into();
        assert!(matches!(r.validate(), Err(SchemaError::UnknownCommand(_))));
        let text = sample().to_csv().replace("# command: sweep\n", "");
        assert_eq!(
            OutputRecord::parse(&text),
            Err(SchemaError::Missing("command".into()))
        );
        assert!(OutputRecord::parse("{ not json").is_err());
    }
}
