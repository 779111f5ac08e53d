//! CSV output with stable column sets. Numbers use 15 significant digits.

use std::io::Write;

use serde::Serialize;

use crate::bounds::BoundReport;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::spectrum::{subset_label, FourierSpectrum, LevelProfile};

pub const SPECTRUM_COLUMNS: [&str; 4] = ["mask", "subset", "level", "coefficient"];
pub const PROFILE_COLUMNS: [&str; 4] = ["level", "l1", "signed_sum", "weight"];
pub const REPORT_COLUMNS: [&str; 9] = [
    "bound_id", "params", "lhs", "rhs", "margin", "holds", "tolerance", "witness", "note",
];
pub const COIN_COLUMNS: [&str; 6] = [
    "function",
    "eps",
    "expectation_direct",
    "expectation_spectral",
    "uniform_expectation",
    "advantage",
];

/// Like C's `%.15g`: fixed notation for moderate exponents, scientific
/// otherwise, trailing zeros removed.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.14e}");
    // rounding can bump the exponent, so read it back
    let (mantissa, e) = sci.split_once('e').expect("scientific format");
    let e: i32 = e.parse().expect("integer exponent");
    if (-5..15).contains(&e) {
        let decimals = (14 - e).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), if e < 0 { '-' } else { '+' }, e.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Domain(format!("csv output failed: {e}"))
}

fn write_rows<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Domain(format!("csv output failed: {e}")))
}

pub fn write_spectrum_csv<T: Scalar, W: Write>(out: W, spec: &FourierSpectrum<T>) -> Result<()> {
    write_rows(
        out,
        &SPECTRUM_COLUMNS,
        spec.coeffs().iter().enumerate().map(|(mask, c)| {
            vec![
                mask.to_string(),
                subset_label(mask),
                mask.count_ones().to_string(),
                fmt_num(c.to_f64_lossy()),
            ]
        }),
    )
}

pub fn write_profile_csv<T: Scalar, W: Write>(out: W, profile: &LevelProfile<T>) -> Result<()> {
    write_rows(
        out,
        &PROFILE_COLUMNS,
        (0..=profile.arity()).map(|k| {
            vec![
                k.to_string(),
                fmt_num(profile.l1(k).to_f64_lossy()),
                fmt_num(profile.signed_sum(k).to_f64_lossy()),
                fmt_num(profile.weight(k).to_f64_lossy()),
            ]
        }),
    )
}

/// `name=value` pairs joined by `;`.
pub fn format_params(report: &BoundReport) -> String {
    report
        .params
        .iter()
        .map(|p| format!("{}={}", p.name, fmt_num(p.value)))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn report_row(r: &BoundReport) -> Vec<String> {
    vec![
        r.bound_id.clone(),
        format_params(r),
        fmt_num(r.lhs),
        fmt_num(r.rhs),
        fmt_num(r.margin),
        r.holds.to_string(),
        fmt_num(r.tolerance),
        r.witness.clone().unwrap_or_default(),
        r.note.clone().unwrap_or_default(),
    ]
}

pub fn write_reports_csv<W: Write>(out: W, reports: &[BoundReport]) -> Result<()> {
    write_rows(out, &REPORT_COLUMNS, reports.iter().map(report_row))
}

/// One row of a bias sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoinRow {
    pub function: String,
    pub eps: f64,
    pub expectation_direct: f64,
    pub expectation_spectral: f64,
    pub uniform_expectation: f64,
    pub advantage: f64,
}

pub fn write_coin_csv<W: Write>(out: W, rows: &[CoinRow]) -> Result<()> {
    write_rows(
        out,
        &COIN_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.function.clone(),
                fmt_num(r.eps),
                fmt_num(r.expectation_direct),
                fmt_num(r.expectation_spectral),
                fmt_num(r.uniform_expectation),
                fmt_num(r.advantage),
            ]
        }),
    )
}

/// Any serializable records, columns taken from the field names.
pub fn write_records_csv<W: Write, R: Serialize>(out: W, records: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::Domain(format!("csv output failed: {e}")))
}
