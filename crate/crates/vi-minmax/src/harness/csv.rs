//! Per-seed trace files: one CSV per run, fixed schema, floats printed
//! with 17 significant digits so every row parses back bit-faithfully.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::diagnostics::{IterationRecord, Trace};

pub const CSV_HEADER: &str = "k,r_eta_sq,t_norm_sq,h_inv_norm_sq,oracle_calls,growth_sum,x_norm";

#[derive(Debug, Error, PartialEq)]
pub enum CsvError {
    #[error("bad header: expected '{CSV_HEADER}', got '{0}'")]
    Header(String),
    #[error("row {line}: {msg}")]
    Row { line: usize, msg: String },
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn record_to_row(record: &IterationRecord) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        record.k,
        fmt_float(record.r_eta_sq),
        fmt_float(record.t_norm_sq),
        record.h_inv_norm_sq.map(fmt_float).unwrap_or_default(),
        record.oracle_calls,
        fmt_float(record.growth_sum),
        fmt_float(record.x_norm),
    )
}

pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for record in &trace.records {
        out.push_str(&record_to_row(record));
        out.push('\n');
    }
    out
}

pub fn write_trace_csv(trace: &Trace, path: &Path) -> std::io::Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    file.write_all(trace_to_csv(trace).as_bytes())
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<IterationRecord>, CsvError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => return Err(CsvError::Header(other.unwrap_or("").to_string())),
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(CsvError::Row {
                line: line_no,
                msg: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        let parse_f = |s: &str, name: &str| -> Result<f64, CsvError> {
            s.parse::<f64>().map_err(|_| CsvError::Row {
                line: line_no,
                msg: format!("bad {name}: '{s}'"),
            })
        };
        records.push(IterationRecord {
            k: fields[0].parse().map_err(|_| CsvError::Row {
                line: line_no,
                msg: format!("bad k: '{}'", fields[0]),
            })?,
            r_eta_sq: parse_f(fields[1], "r_eta_sq")?,
            t_norm_sq: parse_f(fields[2], "t_norm_sq")?,
            h_inv_norm_sq: if fields[3].is_empty() {
                None
            } else {
                Some(parse_f(fields[3], "h_inv_norm_sq")?)
            },
            oracle_calls: fields[4].parse().map_err(|_| CsvError::Row {
                line: line_no,
                msg: format!("bad oracle_calls: '{}'", fields[4]),
            })?,
            growth_sum: parse_f(fields[5], "growth_sum")?,
            x_norm: parse_f(fields[6], "x_norm")?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(k: usize, with_metric: bool) -> IterationRecord {
        IterationRecord {
            k,
            r_eta_sq: 0.1234567890123456 * k as f64,
            t_norm_sq: 1.0 / (k as f64 + 1.0),
            h_inv_norm_sq: with_metric.then_some(0.25 * k as f64),
            oracle_calls: 17 * k as u64,
            growth_sum: (k as f64).sqrt(),
            x_norm: 2.0_f64.powi(-(k as i32)),
        }
    }

    #[test]
    fn rows_round_trip_exactly() {
        let records: Vec<IterationRecord> =
            (0..50).map(|k| record(k, k % 2 == 0)).collect();
        let mut text = String::from(CSV_HEADER);
        text.push('\n');
        for r in &records {
            text.push_str(&record_to_row(r));
            text.push('\n');
        }
        let parsed = parse_trace_csv(&text).unwrap();
        assert_eq!(parsed, records);
    }

    #[test]
    fn bad_header_is_rejected() {
        let err = parse_trace_csv("k,r\n1,2\n").unwrap_err();
        assert!(matches!(err, CsvError::Header(_)));
    }

    #[test]
    fn bad_rows_are_located() {
        let text = format!("{CSV_HEADER}\n0,a,0,,0,0,0\n");
        let err = parse_trace_csv(&text).unwrap_err();
        assert_eq!(
            err,
            CsvError::Row { line: 2, msg: "bad r_eta_sq: 'a'".into() }
        );
    }

    proptest! {
        #[test]
        fn float_serialization_is_bit_faithful(
            bits in any::<u64>(),
        ) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = fmt_float(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
