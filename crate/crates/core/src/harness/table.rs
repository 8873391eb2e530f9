//! Minimal CSV tables. Floats are written with Rust's shortest round-trip
//! formatting so that a table survives a write/read cycle exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
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

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(t) => t.parse().ok(),
        }
    }

    fn render(&self, out: &mut String) {
        match self {
            Cell::Num(v) => {
                let _ = write!(out, "{v:?}");
            }
            Cell::Int(v) => {
                let _ = write!(out, "{v}");
            }
            Cell::Text(t) => {
                if t.contains([',', '"', '\n']) {
                    out.push('"');
                    out.push_str(&t.replace('"', "\"\""));
                    out.push('"');
                } else {
                    out.push_str(t);
                }
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric column by name; non-numeric cells become NaN.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[c].as_f64().unwrap_or(f64::NAN)).collect())
    }

    pub fn text_column(&self, name: &str) -> Option<Vec<String>> {
        let c = self.column_index(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[c] {
                    Cell::Text(t) => t.clone(),
                    other => {
                        let mut s = String::new();
                        other.render(&mut s);
                        s
                    }
                })
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    /// Parses CSV written by [`Table::to_csv`]. Cells that parse as numbers
    /// become [`Cell::Num`], everything else text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
        let header: Vec<String> = split_line(header).into_iter().map(|h| h.trim().to_string()).collect();
        let mut table = Table {
            header,
            rows: Vec::new(),
        };
        for (lineno, line) in lines.enumerate() {
            let fields = split_line(line);
            if fields.len() != table.header.len() {
                return Err(Error::Parse(format!(
                    "CSV row {} has {} fields, header has {}",
                    lineno + 2,
                    fields.len(),
                    table.header.len()
                )));
            }
            table.rows.push(
                fields
                    .into_iter()
                    .map(|f| match f.trim().parse::<f64>() {
                        Ok(v) => Cell::Num(v),
                        Err(_) => Cell::Text(f),
                    })
                    .collect(),
            );
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn split_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_floats_and_text() {
        let mut t = Table::new(&["x", "label", "n"]);
        t.push(vec![0.1.into(), "a,b".into(), 3usize.into()]);
        t.push(vec![(1.0 / 3.0).into(), "plain".into(), 0usize.into()]);
        let back = Table::parse(&t.to_csv()).unwrap();
        assert_eq!(back.column("x").unwrap(), vec![0.1, 1.0 / 3.0]);
        assert_eq!(back.text_column("label").unwrap(), vec!["a,b", "plain"]);
        assert_eq!(back.column("n").unwrap(), vec![3.0, 0.0]);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(Table::parse("a,b\n1\n").is_err());
    }
}
