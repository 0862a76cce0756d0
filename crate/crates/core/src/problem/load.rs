//! Problem-definition file ingestion.
//!
//! The format is TOML: keys `n`, `r`, `a`, `b`, bracketed numeric lists `A`
//! and `B`, a quoted expression `L`, and quoted expressions `phi1..phin`.
//!
//! ```toml
//! n = 1
//! r = 1
//! a = 0.0
//! b = 1.0
//! A = [0.0]
//! B = [1.0]
//! L = "u1^2"
//! phi1 = "u1"
//! ```

use std::path::Path;

use toml::Value;

use super::{OCProblem, ProblemError};
use crate::expr::parse;

fn validation(key: &str, message: impl Into<String>) -> ProblemError {
    ProblemError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

fn get<'a>(table: &'a toml::Table, key: &str) -> Result<&'a Value, ProblemError> {
    table.get(key).ok_or_else(|| validation(key, "missing key"))
}

fn as_count(v: &Value, key: &str) -> Result<usize, ProblemError> {
    match v {
        Value::Integer(i) if *i >= 1 => Ok(*i as usize),
        _ => Err(validation(key, "expected a positive integer")),
    }
}

fn as_f64(v: &Value, key: &str) -> Result<f64, ProblemError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(validation(key, "expected a number")),
    }
}

fn as_vec(v: &Value, key: &str, len: usize) -> Result<Vec<f64>, ProblemError> {
    let Value::Array(items) = v else {
        return Err(validation(key, "expected a bracketed numeric list"));
    };
    if items.len() != len {
        return Err(validation(
            key,
            format!("expected {len} entries, found {}", items.len()),
        ));
    }
    items.iter().map(|item| as_f64(item, key)).collect()
}

fn as_str<'a>(v: &'a Value, key: &str) -> Result<&'a str, ProblemError> {
    match v {
        Value::String(s) => Ok(s),
        _ => Err(validation(key, "expected a quoted expression string")),
    }
}

/// Parse problem text (the file body) into an [`OCProblem`]. All
/// expressions are parsed and bounds-checked against the declared `n`, `r`.
pub fn parse_problem(text: &str) -> Result<OCProblem, ProblemError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        ProblemError::Validation {
            key: "<file>".into(),
            message: e.to_string(),
        }
    })?;
    let n = as_count(get(&table, "n")?, "n")?;
    let r = as_count(get(&table, "r")?, "r")?;
    let a = as_f64(get(&table, "a")?, "a")?;
    let b = as_f64(get(&table, "b")?, "b")?;
    let x_start = as_vec(get(&table, "A")?, "A", n)?;
    let x_end = as_vec(get(&table, "B")?, "B", n)?;
    let lagrangian = parse(as_str(get(&table, "L")?, "L")?, n, r)
        .map_err(|e| validation("L", e.to_string()))?;
    let mut dynamics = Vec::with_capacity(n);
    for i in 1..=n {
        let key = format!("phi{i}");
        let text = as_str(get(&table, &key)?, &key)?;
        dynamics.push(parse(text, n, r).map_err(|e| validation(&key, e.to_string()))?);
    }
    OCProblem::new(a, b, x_start, x_end, lagrangian, dynamics)
}

/// Load a problem-definition file from disk. Errors carry the offending key
/// name; TOML syntax errors carry line/column information.
pub fn load_problem(path: impl AsRef<Path>) -> Result<OCProblem, ProblemError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ProblemError::File {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_problem(&text).map_err(|e| match e {
        ProblemError::Validation { key, message } => ProblemError::File {
            path: path.display().to_string(),
            message: format!("key `{key}`: {message}"),
        },
        other => other,
    })
}
