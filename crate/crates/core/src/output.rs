//! CSV formatting shared by the trace writers: `#` metadata lines, a column
//! header, then rows. Floats carry 17 significant digits; non-finite values
//! are written as `inf`/`-inf`.

use std::fmt::Write as _;

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Num(x) => Some(*x),
            Cell::Int(n) => Some(*n as f64),
            _ => None,
        }
    }
}

pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        // callers never produce NaN; keep the output parseable if one slips through
        "nan".to_owned()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_owned()
    } else {
        format!("{x:.16e}")
    }
}

pub fn format_cell(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) => format_f64(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

pub fn render_csv(metadata: &[(String, String)], columns: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    for (k, v) in metadata {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(format_cell).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
