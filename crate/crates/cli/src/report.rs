//! Tabular results and their three renderings.
//!
//! A report is a list of named sections, each a small table. CSV output
//! writes one block per section (header row first) separated by blank lines;
//! JSON mirrors the same structure. Floats are written in shortest
//! round-trip form in CSV and JSON; the human table rounds them per column.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Table => "txt",
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Int(i64),
    /// A float and the number of decimals shown in tables.
    Num(f64, usize),
    Text(String),
    Bool(bool),
}

impl Value {
    fn table_cell(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Num(x, digits) => format!("{x:.digits$}"),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
        }
    }

    fn csv_cell(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Num(x, _) => format!("{x:?}"),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Value::Int(i) => json!(i),
            Value::Num(x, _) => json!(x),
            Value::Text(s) => json!(s),
            Value::Bool(b) => json!(b),
        }
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Int(x as i64)
    }
}

impl From<usize> for Value {
    fn from(x: usize) -> Self {
        Value::Int(x as i64)
    }
}

impl From<i64> for Value {
    fn from(x: i64) -> Self {
        Value::Int(x)
    }
}

impl From<bool> for Value {
    fn from(x: bool) -> Self {
        Value::Bool(x)
    }
}

impl From<&str> for Value {
    fn from(x: &str) -> Self {
        Value::Text(x.to_string())
    }
}

impl From<String> for Value {
    fn from(x: String) -> Self {
        Value::Text(x)
    }
}

pub fn num(x: f64, digits: usize) -> Value {
    Value::Num(x, digits)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Section {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Section {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Two-column `quantity, value` section.
    pub fn key_values(name: &str, pairs: Vec<(&str, Value)>) -> Self {
        let mut s = Section::new(name, &["quantity", "value"]);
        for (k, v) in pairs {
            s.push(vec![k.into(), v]);
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub sections: Vec<Section>,
}

#[derive(Serialize)]
struct JsonSection<'a> {
    name: &'a str,
    columns: &'a [String],
    rows: Vec<Vec<serde_json::Value>>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.to_string(), sections: Vec::new() }
    }

    pub fn with(mut self, section: Section) -> Self {
        self.sections.push(section);
        self
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.render_table(),
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_table(&self) -> String {
        let mut out = String::new();
        for (i, section) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "# {}", section.name);
            let cells: Vec<Vec<String>> =
                section.rows.iter().map(|r| r.iter().map(Value::table_cell).collect()).collect();
            let widths: Vec<usize> = section
                .columns
                .iter()
                .enumerate()
                .map(|(c, h)| cells.iter().map(|r| r[c].len()).chain([h.len()]).max().unwrap_or(0))
                .collect();
            let line = |items: &[String]| {
                items
                    .iter()
                    .zip(&widths)
                    .map(|(s, w)| format!("{s:<w$}"))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            let _ = writeln!(out, "{}", line(&section.columns));
            for r in &cells {
                let _ = writeln!(out, "{}", line(r));
            }
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = Vec::new();
        for (i, section) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push(b'\n');
            }
            let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
            w.write_record(&section.columns).expect("in-memory write");
            for row in &section.rows {
                w.write_record(row.iter().map(Value::csv_cell)).expect("in-memory write");
            }
            out.extend(w.into_inner().expect("in-memory flush"));
        }
        String::from_utf8(out).expect("csv output is utf-8")
    }

    fn render_json(&self) -> String {
        let sections: Vec<JsonSection> = self
            .sections
            .iter()
            .map(|s| JsonSection {
                name: &s.name,
                columns: &s.columns,
                rows: s.rows.iter().map(|r| r.iter().map(Value::json).collect()).collect(),
            })
            .collect();
        let doc = json!({ "command": self.command, "sections": sections });
        let mut s = serde_json::to_string_pretty(&doc).expect("json serialisation");
        s.push('\n');
        s
    }
}
