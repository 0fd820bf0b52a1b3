use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "true" } else { "false" }.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// A versioned CSV table with provenance comments.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Report {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_to(&self, mut w: impl Write, scenario: &str, config_hash: &str, seed: u64) -> Result<()> {
        write!(w, "# fbreg-csv v1\r\n")?;
        write!(w, "# scenario: {scenario}\r\n")?;
        write!(w, "# config-sha256: {config_hash}\r\n")?;
        write!(w, "# seed: {seed}\r\n")?;
        let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        csv.write_record(&self.columns)?;
        for row in &self.rows {
            csv.write_record(row.iter().map(Cell::render))?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path, scenario: &str, config_hash: &str, seed: u64) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf, scenario, config_hash, seed)?;
        std::fs::write(path, buf)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering() {
        let mut r = Report::new("t", &["a", "b"]);
        r.push(vec![0.1.into(), "x,y".into()]);
        let mut out = Vec::new();
        r.write_to(&mut out, "gamma", "abc", 7).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("# fbreg-csv v1\r\n"));
        assert!(text.contains("a,b\r\n1.0000000000000001e-1,\"x,y\"\r\n"));
        assert_eq!(format_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
