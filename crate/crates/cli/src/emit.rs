//! Byte-stable output: JSON with every float at 17 significant digits and
//! sorted keys, numeric CSV with a header row, LF line endings throughout.

use std::path::Path;

use curvelab::{Error, Result};
use serde::Serialize;
use serde_json::{Number, Value};
use sha2::{Digest, Sha256};

/// `x` with 17 significant digits in scientific notation.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.16e}");
        match s.split_once('e') {
            Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
            _ => s,
        }
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn normalise(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_u64() || n.is_i64()) => {
            if let Some(x) = n.as_f64() {
                if let Ok(m) = fmt_float(x).parse::<Number>() {
                    *n = m;
                }
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(normalise),
        Value::Object(m) => m.values_mut().for_each(normalise),
        _ => {}
    }
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Serialises to a normalised `Value`. Non-finite floats become `null`.
pub fn to_value<T: Serialize + ?Sized>(x: &T) -> Result<Value> {
    let mut v = serde_json::to_value(x).map_err(json_err)?;
    normalise(&mut v);
    Ok(v)
}

/// Pretty JSON followed by a single newline.
pub fn json<T: Serialize + ?Sized>(x: &T) -> Result<String> {
    let v = to_value(x)?;
    let mut s = serde_json::to_string_pretty(&v).map_err(json_err)?;
    s.push('\n');
    Ok(s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
}

impl From<u64> for Cell {
    fn from(x: u64) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Cell {
        Cell::Int(x)
    }
}

impl From<i32> for Cell {
    fn from(x: i32) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Cell {
        Cell::Int(x as i64)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Cell {
        Cell::Float(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Table {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Int(i) => i.to_string(),
                    Cell::Float(x) => fmt_float(*x),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

macro_rules! row {
    ($($x:expr),* $(,)?) => {
        vec![$($crate::emit::Cell::from($x)),*]
    };
}
pub(crate) use row;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_digits() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(-1.0 / 3.0), "-3.3333333333333331e-1");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
        for x in [0.1, 1e-300, 123456.789, -2.5e17] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn json_normalises_nested_floats_and_keeps_integers() {
        #[derive(Serialize)]
        struct R {
            b: Vec<f64>,
            a: u64,
            c: Option<(u32, f64)>,
        }
        let s = json(&R { b: vec![2.0, 0.25], a: 7, c: Some((3, f64::NAN)) }).unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": 7,\n  \"b\": [\n    2.0000000000000000e+0,\n    2.5000000000000000e-1\n  ],\n  \"c\": [\n    3,\n    null\n  ]\n}\n"
        );
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"][1].as_f64(), Some(0.25));
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["t", "fraction"]);
        t.push(row![3u32, 0.125]);
        t.push(row![-1i64, 1.0]);
        assert_eq!(t.to_csv(), "t,fraction\n3,1.2500000000000000e-1\n-1,1.0000000000000000e+0\n");
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
