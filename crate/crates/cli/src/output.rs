// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV and JSON rendering. Every document embeds the toolkit version and the
//! resolved config.

use std::io::Write;

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::{CliError, VERSION};

/// Top-level key carrying the toolkit version in JSON documents.
pub const VERSION_KEY: &str = "srkit_version";

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(x: Option<T>) -> Self {
        x.map_or(Cell::Empty, Into::into)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => sig6(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// One CSV file: a header row and data rows.
#[derive(Clone, Debug)]
pub struct CsvTable {
    /// File stem used under `--out`.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(name: &str, header: &[&str]) -> Self {
        CsvTable {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// What a command produced.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub result: Value,
    pub tables: Vec<CsvTable>,
    pub warnings: Vec<String>,
}

/// Formats with 6 significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn json_document(report: &Report, cfg: &RunConfig) -> Value {
    json!({
        VERSION_KEY: VERSION,
        "command": report.command,
        "config": cfg,
        "warnings": report.warnings,
        "result": report.result,
    })
}

pub fn render_json(report: &Report, cfg: &RunConfig) -> String {
    let mut s = serde_json::to_string_pretty(&json_document(report, cfg)).expect("serializable");
    s.push('\n');
    s
}

pub fn render_csv(table: &CsvTable, command: &str, cfg: &RunConfig) -> Result<String, CliError> {
    let mut out = format!(
        "# srkit {VERSION}\n# command: {command}\n# config: {}\n",
        serde_json::to_string(cfg).expect("serializable")
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| CliError::Io(std::io::Error::other(e));
    w.write_record(&table.header).map_err(map)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render)).map_err(map)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?;
    out.push_str(&String::from_utf8(bytes).expect("utf-8"));
    Ok(out)
}

/// Writes the report to stdout, or to files under `cfg.out`. With CSV and
/// an output directory, the JSON document is written alongside the tables.
pub fn emit(report: &Report, cfg: &RunConfig) -> Result<(), CliError> {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    match &cfg.out {
        None => {
            let text = match cfg.format {
                Format::Json => render_json(report, cfg),
                Format::Csv => {
                    let parts: Result<Vec<_>, _> = report
                        .tables
                        .iter()
                        .map(|t| render_csv(t, report.command, cfg))
                        .collect();
                    parts?.join("\n")
                }
            };
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{}.json", report.command)), render_json(report, cfg))?;
            if cfg.format == Format::Csv {
                for t in &report.tables {
                    std::fs::write(
                        dir.join(format!("{}.csv", t.name)),
                        render_csv(t, report.command, cfg)?,
                    )?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(4.051234567), "4.05123");
        assert_eq!(sig6(99.832), "99.832");
        assert_eq!(sig6(9999.676), "9999.68");
        assert_eq!(sig6(123456789.0), "1.23457e8");
        assert_eq!(sig6(0.000012345678), "1.23457e-5");
        assert_eq!(sig6(0.00012345678), "0.000123457");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(999999.7), "1e6");
        assert_eq!(sig6(f64::NAN), "nan");
    }

    #[test]
    fn csv_has_comment_header_and_rows() {
        let mut t = CsvTable::new("curve", &["nu", "delay"]);
        t.push(vec![0usize.into(), 3.5.into()]);
        t.push(vec![1usize.into(), Cell::Empty]);
        let text = render_csv(&t, "oc", &RunConfig::default()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert!(lines[0].starts_with("# srkit "));
        assert_eq!(lines[1], "# command: oc");
        assert!(lines[2].starts_with("# config: {"));
        assert_eq!(&lines[3..], ["nu,delay", "0,3.5", "1,"]);
    }
}
