//! CSV output with fixed headers.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

/// Missing-value marker.
pub const NA: &str = "NA";

/// `x` with `digits` significant digits, printf `%g` style (shortest form,
/// trailing zeros dropped).
pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return NA.to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Round-trip precision for data files.
pub fn full(x: f64) -> String {
    sig(x, 17)
}

/// Four significant digits for console summaries.
pub fn short(x: f64) -> String {
    sig(x, 4)
}

pub fn opt_full(x: Option<f64>) -> String {
    x.map_or_else(|| NA.to_string(), full)
}

/// A header plus rows, written with LF endings.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width");
        self.rows.push(row);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in std::iter::once(&self.header).chain(&self.rows) {
            let cells: Vec<String> = line.iter().map(|c| quote(c)).collect();
            writeln!(out, "{}", cells.join(",")).expect("string write");
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        std::fs::write(path, self.render()).with_context(|| format!("writing {}", path.display()))
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(full(0.1), "0.10000000000000001");
        assert_eq!(full(1.0), "1");
        assert_eq!(full(1234.5), "1234.5");
        assert_eq!(full(1e-7), "9.9999999999999995e-8");
        assert_eq!(short(0.0030615123), "0.003062");
        assert_eq!(short(123456.0), "1.235e5");
        assert_eq!(short(-2.5), "-2.5");
        assert_eq!(full(f64::NAN), "NA");
        assert_eq!(full(0.0), "0");
    }

    #[test]
    fn full_precision_round_trips() {
        for x in [0.1, 1.0 / 3.0, 2f64.sqrt(), 6.02e23, -1e-300, 0.5 + f64::EPSILON] {
            assert_eq!(full(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn render_lf_and_quotes() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(t.render(), "a,b\n1,\"x,y\"\n");
    }
}
