//! Number formatting and the CSV/JSON writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::ser::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::CliError;

/// Significant digits of floats in JSON output.
pub const JSON_DIGITS: usize = 17;
/// Significant digits of floats in CSV output.
pub const CSV_DIGITS: usize = 12;

/// `v` with exactly `digits` significant digits: positional notation for
/// decimal exponents in `[-5, digits)`, scientific otherwise. Non-finite
/// values print as `nan`, `inf`, `-inf`.
pub fn significant(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.max(1);
    if v == 0.0 {
        return format!("{:.*}", digits - 1, 0.0);
    }
    // the exponent after rounding to `digits` places
    let sci = format!("{:.*e}", digits - 1, v);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..digits as i32).contains(&exp) {
        format!("{:.*}", (digits as i32 - 1 - exp) as usize, v)
    } else {
        sci
    }
}

/// A float serialized into JSON with [`JSON_DIGITS`] significant digits;
/// non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(significant(self.0, JSON_DIGITS)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

/// Same as [`Num`] for a list of floats.
pub fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().copied().map(Num).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// One CSV field.
pub enum Field {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Float(v) => significant(*v, CSV_DIGITS),
            Field::Text(s) => s.clone(),
            Field::Bool(b) => b.to_string(),
        }
    }
}

pub fn csv_string(header: &[&str], rows: &[Vec<Field>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(CliError::io)?;
    for row in rows {
        w.write_record(row.iter().map(Field::render)).map_err(CliError::io)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Resource(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Resource(e.to_string()))
}

pub fn json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Resource(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to standard output when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Resource(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(CliError::io)?;
            out.flush().map_err(CliError::io)
        }
    }
}

/// `name = value` lines for the standard-error summary.
pub fn summary(pairs: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}
