//! CSV emission and parsing of result rows.

use std::io::{Read, Write};
use std::path::Path;

use super::config::Method;
use super::runner::ResultRow;
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 16] = [
    "n",
    "L",
    "K",
    "M",
    "omega_scenario",
    "a",
    "b",
    "replicate",
    "seed",
    "method",
    "err_between",
    "r_wl",
    "m_tilde",
    "low_confidence",
    "wall_time_ms",
    "error",
];

/// Format like C's `%.9g`: nine significant digits, trailing zeros removed,
/// scientific notation outside `1e-4 <= |x| < 1e9`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn opt_float(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

/// Write the header and rows with LF line endings.
pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.layers.to_string(),
            r.communities.to_string(),
            r.groups.to_string(),
            r.omega_scenario.clone(),
            format_float(r.a),
            format_float(r.b),
            r.replicate.to_string(),
            r.seed.to_string(),
            r.method.to_string(),
            opt_float(r.err_between),
            opt_float(r.r_wl),
            r.m_tilde.map(|m| m.to_string()).unwrap_or_default(),
            r.low_confidence.to_string(),
            format_float(r.wall_time_ms),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_file(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_results(rows, std::io::BufWriter::new(file))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        file: "results".into(),
        line,
        message: format!("bad {} value {raw:?}", CSV_HEADER[i]),
    })
}

fn opt_field<T: std::str::FromStr>(
    rec: &csv::StringRecord,
    i: usize,
    line: usize,
) -> Result<Option<T>> {
    if rec.get(i).unwrap_or("").is_empty() {
        Ok(None)
    } else {
        field(rec, i, line).map(Some)
    }
}

/// Parse rows previously written by [`write_results`].
pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(Error::Parse {
            file: "results".into(),
            line: 1,
            message: "unexpected header".into(),
        });
    }
    let mut rows = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = idx + 2;
        let method: String = field(&rec, 9, line)?;
        rows.push(ResultRow {
            n: field(&rec, 0, line)?,
            layers: field(&rec, 1, line)?,
            communities: field(&rec, 2, line)?,
            groups: field(&rec, 3, line)?,
            omega_scenario: field(&rec, 4, line)?,
            a: field(&rec, 5, line)?,
            b: field(&rec, 6, line)?,
            replicate: field(&rec, 7, line)?,
            seed: field(&rec, 8, line)?,
            method: method.parse::<Method>().map_err(|message| Error::Parse {
                file: "results".into(),
                line,
                message,
            })?,
            err_between: opt_field(&rec, 10, line)?,
            r_wl: opt_field(&rec, 11, line)?,
            m_tilde: opt_field(&rec, 12, line)?,
            low_confidence: field(&rec, 13, line)?,
            wall_time_ms: field(&rec, 14, line)?,
            error: opt_field(&rec, 15, line)?,
        });
    }
    Ok(rows)
}

pub fn read_results_file(path: &Path) -> Result<Vec<ResultRow>> {
    read_results(std::fs::File::open(path)?)
}
