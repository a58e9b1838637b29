//! Deterministic data-file emission.
//!
//! Every file is ASCII with LF line endings. Floats are written with 17
//! significant digits; exact values are written as their nearest float in the
//! same form, optionally followed by an extra `<column>_exact` column holding
//! the `p/q` string.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::IoError;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Rational(Rational),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Dat,
    Csv,
    Json,
}

impl TableFormat {
    pub fn from_path(path: &Path) -> TableFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => TableFormat::Csv,
            Some("json") => TableFormat::Json,
            _ => TableFormat::Dat,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// `x` with 17 significant digits, positional unless the exponent is extreme.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-6..21).contains(&exp) {
        return sci;
    }
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if exp < 0 {
        out.push_str("0.");
        for _ in 0..(-exp - 1) {
            out.push('0');
        }
        out.push_str(&digits);
    } else {
        let int_len = exp as usize + 1;
        if int_len >= digits.len() {
            out.push_str(&digits);
            for _ in digits.len()..int_len {
                out.push('0');
            }
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    }
    out
}

impl Table {
    pub fn new<I, S>(header: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
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

    fn rational_columns(&self) -> Vec<usize> {
        (0..self.header.len())
            .filter(|&c| self.rows.iter().any(|r| matches!(r.get(c), Some(Cell::Rational(_)))))
            .collect()
    }

    fn text_cell(cell: &Cell) -> String {
        match cell {
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => format_f64(*f),
            Cell::Rational(r) => format_f64(r.to_f64()),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json_cell(cell: &Cell) -> Value {
        match cell {
            Cell::Int(i) => json!(i),
            Cell::Float(f) => json!(f),
            Cell::Rational(r) => json!(r.to_string()),
            Cell::Text(s) => json!(s),
        }
    }

    pub fn render(&self, format: TableFormat, exact_columns: bool) -> String {
        let extra = if exact_columns { self.rational_columns() } else { Vec::new() };
        match format {
            TableFormat::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: serde_json::Map<String, Value> =
                            self.header.iter().cloned().zip(r.iter().map(Self::json_cell)).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).expect("serializable");
                s.push('\n');
                s
            }
            TableFormat::Dat | TableFormat::Csv => {
                let sep = if format == TableFormat::Csv { "," } else { " " };
                let mut header = self.header.clone();
                header.extend(extra.iter().map(|&c| format!("{}_exact", self.header[c])));
                let mut out = header.join(sep);
                out.push('\n');
                for row in &self.rows {
                    let mut fields: Vec<String> = row.iter().map(Self::text_cell).collect();
                    for &c in &extra {
                        fields.push(match &row[c] {
                            Cell::Rational(r) => r.to_string(),
                            other => Self::text_cell(other),
                        });
                    }
                    let _ = writeln!(out, "{}", fields.join(sep));
                }
                out
            }
        }
    }
}

/// Write via a temporary file in the destination directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let wrap = |source| IoError { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(wrap)?;
    tmp.write_all(bytes).map_err(wrap)?;
    tmp.flush().map_err(wrap)?;
    tmp.persist(path).map_err(|e| wrap(e.error))?;
    Ok(())
}

pub fn emit_table(table: &Table, format: TableFormat, exact_columns: bool, path: &Path) -> Result<(), IoError> {
    write_atomic(path, table.render(format, exact_columns).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_f64(27.0), "27.000000000000000");
        assert_eq!(format_f64(0.1), "0.10000000000000001");
        assert_eq!(format_f64(-1.5), "-1.5000000000000000");
        assert_eq!(format_f64(1e25), "1.0000000000000001e25");
        assert_eq!(format_f64(0.5e-7), "4.9999999999999998e-8");
        assert_eq!(format_f64(0.0), "0");
        for x in [1.0 / 3.0, 187.0 / 9.0, 1e-5, 123456.789] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(["x", "tof"]);
        assert_eq!(t.render(TableFormat::Dat, false), "x tof\n");
        assert_eq!(t.render(TableFormat::Csv, true), "x,tof\n");
    }

    #[test]
    fn exact_column_appended() {
        let mut t = Table::new(["x", "tof"]);
        t.push(vec![Cell::Int(0), Cell::Rational(Rational::frac_of(41, 27))]);
        let s = t.render(TableFormat::Dat, true);
        assert_eq!(s, "x tof tof_exact\n0 1.5185185185185186 41/27\n");
        let j = t.render(TableFormat::Json, false);
        assert!(j.contains("\"tof\": \"41/27\""));
    }

    #[test]
    fn emission_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new(["x", "y"]);
        for i in 0..10 {
            t.push(vec![Cell::Float(i as f64 / 7.0), Cell::Int(i)]);
        }
        let a = dir.path().join("a.dat");
        let b = dir.path().join("b.dat");
        emit_table(&t, TableFormat::Dat, false, &a).unwrap();
        emit_table(&t, TableFormat::Dat, false, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        assert!(!std::fs::read(&a).unwrap().contains(&b'\r'));
    }

    #[test]
    fn io_errors_carry_the_path() {
        let t = Table::new(["x"]);
        let err = emit_table(&t, TableFormat::Dat, false, Path::new("/nonexistent-dir/x.dat")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.dat"));
    }
}
