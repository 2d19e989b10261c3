//! Rectangular CSV tables with `#` provenance lines.

use std::fmt;

use crate::error::{Error, Result};

pub const LADDER_SCHEMA: &[&str] = &[
    "epsilon",
    "eta",
    "dist_transformed_simplified",
    "dist_simplified_reduced",
    "dist_total",
    "ratio_total_over_eta",
    "solver_iters",
];
pub const HOMOGENIZE_SCHEMA: &[&str] =
    &["regime", "method", "p0", "a0_11", "a0_12", "a0_22", "weight", "error_proxy", "quad_points"];
pub const SPECTRUM_SCHEMA: &[&str] = &["epsilon", "n", "lambda_eps", "lambda_0", "gap", "eigfun_dist"];
pub const RESOLVENT_SCHEMA: &[&str] = &["epsilon", "defect_max", "defect_mean", "probes", "seed"];
pub const DYNAMICS_SCHEMA: &[&str] = &[
    "epsilon",
    "t",
    "defect_H1",
    "defect_L2",
    "gamma_fit",
    "equilibria_count_eps",
    "equilibria_count_0",
    "semidist_equilibria",
    "semidist_attractor_surrogate",
    "dt",
    "seed_count",
];
pub const CHECKS_SCHEMA: &[&str] = &["check", "passed", "detail"];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            Cell::Text(t) => t.parse().ok(),
            Cell::Missing => None,
        }
    }

    fn parse(field: &str) -> Self {
        if field.starts_with('"') {
            Cell::Text(unquote(field))
        } else if field.is_empty() {
            Cell::Missing
        } else if let Ok(i) = field.parse::<i64>() {
            Cell::Int(i)
        } else if let Ok(v) = field.parse::<f64>() {
            Cell::Float(v)
        } else {
            Cell::Text(unquote(field))
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
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

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

/// Quotes text that would otherwise read back as a number, as missing or
/// as a provenance line.
fn quote(s: &str) -> String {
    if s.is_empty() || s.starts_with('#') || s.contains([',', '"', '\n']) || s.parse::<f64>().is_ok() {
        format!("\"{}\"", s.replace('"', "\"\"").replace('\n', " "))
    } else {
        s.to_string()
    }
}

fn unquote(s: &str) -> String {
    match s.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
        Some(inner) => inner.replace("\"\"", "\""),
        None => s.to_string(),
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // `{:e}` is the shortest representation that parses back exactly.
            Cell::Float(v) => write!(f, "{v:e}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(t) => f.write_str(&quote(t)),
            Cell::Missing => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// `(key, value)` pairs written as `# key = value` above the header.
    pub provenance: Vec<(String, String)>,
}

impl CsvTable {
    pub fn new(schema: &[&str]) -> Self {
        Self { header: schema.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), provenance: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::Argument(format!("row has {} cells, header has {}", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric values of a column; missing or non-numeric cells are `None`.
    pub fn column(&self, name: &str) -> Result<Vec<Option<f64>>> {
        let j = self.column_index(name).ok_or_else(|| Error::Plot(format!("no column `{name}` in {:?}", self.header)))?;
        Ok(self.rows.iter().map(|r| r[j].as_f64()).collect())
    }

    pub fn with_provenance(mut self, key: &str, value: impl ToString) -> Self {
        self.provenance.push((key.to_string(), value.to_string()));
        self
    }

    pub fn matches_schema(&self, schema: &[&str]) -> bool {
        self.header.len() == schema.len() && self.header.iter().zip(schema).all(|(a, b)| a == b)
    }

    /// Header and rows only, without the provenance block.
    pub fn body(&self) -> String {
        let mut out = self.header.iter().map(|h| quote(h)).collect::<Vec<_>>().join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.provenance {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out + &self.body()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut provenance = Vec::new();
        let mut lines = Vec::new();
        for line in text.lines() {
            if let Some(c) = line.strip_prefix('#') {
                if let Some((k, v)) = c.split_once('=') {
                    provenance.push((k.trim().to_string(), v.trim().to_string()));
                }
            } else if !line.is_empty() {
                lines.push(line);
            }
        }
        let Some((head, body)) = lines.split_first() else {
            return Err(Error::Argument("CSV text has no header".into()));
        };
        let mut table = CsvTable { header: split(head).iter().map(|s| unquote(s)).collect(), rows: Vec::new(), provenance };
        for (i, l) in body.iter().enumerate() {
            let row: Vec<Cell> = split(l).iter().map(|f| Cell::parse(f)).collect();
            table.push(row).map_err(|e| Error::Argument(format!("data row {}: {e}", i + 1)))?;
        }
        Ok(table)
    }
}

/// Splits on commas outside double quotes.
fn split(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    for ch in line.chars() {
        match ch {
            '"' => {
                quoted = !quoted;
                cur.push(ch);
            }
            ',' if !quoted => out.push(std::mem::take(&mut cur)),
            _ => cur.push(ch),
        }
    }
    out.push(cur);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rectangular_rows_only() {
        let mut t = CsvTable::new(RESOLVENT_SCHEMA);
        assert!(t.push(vec![0.1.into(), 0.2.into()]).is_err());
        t.push(vec![0.1.into(), 0.02.into(), 0.01.into(), 20usize.into(), 42u64.into()]).unwrap();
        assert!(t.matches_schema(RESOLVENT_SCHEMA));
    }

    #[test]
    fn provenance_is_kept_out_of_the_body() {
        let mut t = CsvTable::new(CHECKS_SCHEMA).with_provenance("timestamp", "2026-01-01T00:00:00Z");
        t.push(vec!["a, b".into(), true.into(), Cell::Missing]).unwrap();
        t.push(vec!["".into(), "42".into(), "1e-3".into()]).unwrap();
        let text = t.to_text();
        assert!(text.starts_with("# timestamp = 2026"));
        assert!(!t.body().contains('#'));
        let back = CsvTable::parse(&text).unwrap();
        assert_eq!(back, t);
    }

    proptest! {
        #[test]
        fn float_cells_round_trip(v in proptest::num::f64::NORMAL) {
            let mut t = CsvTable::new(&["x"]);
            t.push(vec![v.into()]).unwrap();
            let back = CsvTable::parse(&t.to_text()).unwrap();
            prop_assert_eq!(back.column("x").unwrap()[0], Some(v));
        }
    }
}
