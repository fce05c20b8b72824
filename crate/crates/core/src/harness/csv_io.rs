//! CSV contract of record.
//!
//! Columns, in order:
//!
//! | column          | content                                               |
//! |-----------------|-------------------------------------------------------|
//! | `experiment`    | `validate_pod` or `rate`                              |
//! | `variable`      | `power_budget_db` or `pod_threshold`                  |
//! | `value`         | grid value of the swept variable                      |
//! | `scheme`        | `ppa`, `epa` or `rpa`                                 |
//! | `feasible`      | `true` / `false`                                      |
//! | `sum_rate`      | bits/s/Hz, empty when infeasible                      |
//! | `rates`         | per-user rates joined by `;`, empty when infeasible   |
//! | `pod_closed`    | per-target closed-form detection probability, `;`     |
//! | `pod_empirical` | per-target Monte Carlo estimate, `;` (validation only)|
//! | `pod_stderr`    | per-target binomial standard error, `;`               |
//! | `iterations`    | outer iterations of the optimizer (0 for baselines)   |
//! | `wall_time_s`   | seconds, only when timing is requested                |
//!
//! Floats are written in scientific notation with 9 significant digits.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use super::ResultRow;
use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 12] = [
    "experiment",
    "variable",
    "value",
    "scheme",
    "feasible",
    "sum_rate",
    "rates",
    "pod_closed",
    "pod_empirical",
    "pod_stderr",
    "iterations",
    "wall_time_s",
];

fn float(x: f64) -> String {
    format!("{x:.8e}")
}

fn list(v: &Option<Vec<f64>>) -> String {
    v.as_ref()
        .map(|v| v.iter().map(|x| float(*x)).collect::<Vec<_>>().join(";"))
        .unwrap_or_default()
}

fn record(row: &ResultRow) -> [String; 12] {
    [
        row.experiment.to_string(),
        row.variable.to_string(),
        float(row.value),
        row.scheme.to_string(),
        row.feasible.to_string(),
        row.sum_rate.map(float).unwrap_or_default(),
        list(&row.rates),
        list(&row.pod_closed),
        list(&row.pod_empirical),
        list(&row.pod_stderr),
        row.iterations.to_string(),
        row.wall_time.map(float).unwrap_or_default(),
    ]
}

/// Header plus one line per row.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    write_csv(rows, &mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

/// Parse a file written by [`emit_csv`]. Errors carry the 1-based line.
pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parse_err = |line: u64, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(file);
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(h)) => h,
        Some(Err(e)) => return Err(parse_err(1, e.to_string())),
        None => return Err(parse_err(1, "empty file, expected a header".into())),
    };
    if header.iter().ne(CSV_COLUMNS) {
        return Err(parse_err(
            1,
            format!("unexpected header, expected `{}`", CSV_COLUMNS.join(",")),
        ));
    }
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push(parse_record(&rec).map_err(|msg| parse_err(line, msg))?);
    }
    Ok(rows)
}

fn parse_record(rec: &csv::StringRecord) -> std::result::Result<ResultRow, String> {
    if rec.len() != CSV_COLUMNS.len() {
        return Err(format!("expected {} fields, found {}", CSV_COLUMNS.len(), rec.len()));
    }
    let field = |i: usize| &rec[i];
    let num = |i: usize| -> std::result::Result<f64, String> {
        field(i)
            .parse::<f64>()
            .map_err(|_| format!("column `{}`: `{}` is not a number", CSV_COLUMNS[i], field(i)))
    };
    let opt_num = |i: usize| -> std::result::Result<Option<f64>, String> {
        if field(i).is_empty() {
            Ok(None)
        } else {
            num(i).map(Some)
        }
    };
    let opt_list = |i: usize| -> std::result::Result<Option<Vec<f64>>, String> {
        if field(i).is_empty() {
            return Ok(None);
        }
        field(i)
            .split(';')
            .map(|x| {
                x.parse::<f64>()
                    .map_err(|_| format!("column `{}`: `{x}` is not a number", CSV_COLUMNS[i]))
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(Some)
    };
    let named = |i: usize, e: Error| match e {
        Error::Config { msg, .. } => format!("column `{}`: {msg}", CSV_COLUMNS[i]),
        other => other.to_string(),
    };
    Ok(ResultRow {
        experiment: field(0).parse().map_err(|e| named(0, e))?,
        variable: field(1).parse().map_err(|e| named(1, e))?,
        value: num(2)?,
        scheme: field(3).parse().map_err(|e| named(3, e))?,
        feasible: field(4)
            .parse()
            .map_err(|_| format!("column `feasible`: `{}` is not true/false", field(4)))?,
        sum_rate: opt_num(5)?,
        rates: opt_list(6)?,
        pod_closed: opt_list(7)?,
        pod_empirical: opt_list(8)?,
        pod_stderr: opt_list(9)?,
        iterations: field(10)
            .parse()
            .map_err(|_| format!("column `iterations`: `{}` is not an integer", field(10)))?,
        wall_time: opt_num(11)?,
    })
}
