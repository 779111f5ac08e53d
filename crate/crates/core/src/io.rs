//! Truth-table text files.
//!
//! ```text
//! n=3
//! +1 +1 +1 -1 +1 -1 -1 -1
//! ```
//!
//! Line 1 is `n=<arity>`; the remaining lines hold `2^n` whitespace-separated
//! values in index order, written `+1`/`-1` or as decimal reals.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, ParseError, Result};
use crate::scalar::Scalar;
use crate::table::{check_arity, TruthTable};

const VALUES_PER_LINE: usize = 16;

pub fn parse_table<T: Scalar>(text: &str) -> Result<TruthTable<T>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| ParseError::new("", 0, "empty table file"))?;
    let arity_text = header
        .trim()
        .strip_prefix("n=")
        .ok_or_else(|| ParseError::new(header, 0, "expected header `n=<int>`"))?;
    let arity: usize = arity_text
        .trim()
        .parse()
        .map_err(|_| ParseError::new(header, 2, "arity is not a non-negative integer"))?;
    check_arity(arity)?;

    let mut values = Vec::with_capacity(1 << arity);
    for line in lines {
        let mut offset = 0;
        for token in line.split_whitespace() {
            let col = line[offset..].find(token).map_or(offset, |p| p + offset);
            offset = col + token.len();
            let v: f64 = token
                .parse()
                .map_err(|_| ParseError::new(line, col, format!("bad value `{token}`")))?;
            values.push(T::from_f64_lossy(v));
        }
    }
    TruthTable::new(arity, values)
}

pub fn format_table<T: Scalar>(f: &TruthTable<T>) -> String {
    let mut out = format!("n={}\n", f.arity());
    for chunk in f.values().chunks(VALUES_PER_LINE) {
        let line: Vec<String> = chunk
            .iter()
            .map(|v| {
                if f.is_boolean() {
                    if *v > T::zero() { "+1" } else { "-1" }.to_string()
                } else {
                    // shortest representation that parses back to the same f64
                    let mut s = String::new();
                    write!(s, "{}", v.to_f64_lossy()).unwrap();
                    s
                }
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_table<T: Scalar>(path: &Path) -> Result<TruthTable<T>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_table(&text)
}

pub fn write_table<T: Scalar>(f: &TruthTable<T>, path: &Path) -> Result<()> {
    std::fs::write(path, format_table(f)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
