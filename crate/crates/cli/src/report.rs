//! Report rows, CSV emission/parsing, and the markdown rendering helper.
//!
//! Every float is printed with enough significant digits to round-trip (17
//! for binary64, 9 for binary32) and additionally as its raw IEEE encoding
//! in hex, so bit-identity between runs can be audited from the CSV alone.

use std::fmt::Write as _;
use std::path::Path;

use repromc_core::float::IeeeFloat;
use repromc_core::oracle::{error_report, ExactNumber};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// One report entry. Kept as pre-formatted strings so the CSV encoding is
/// exactly reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    /// Run index, or "avg" for the per-(algorithm, ordering, statistic)
    /// aggregate of absolute errors across runs.
    pub run: String,
    pub algorithm: String,
    pub ordering: String,
    /// One of S, M, V, Γ.
    pub statistic: String,
    /// Raw IEEE encoding of the computed statistic (empty on aggregates).
    pub bits_hex: String,
    /// Exact reference, correctly rounded to the working precision.
    pub exact: String,
    pub abs_err: String,
    pub rel_err: String,
    pub ulps: String,
}

pub fn fmt_binary64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_binary32(x: f32) -> String {
    format!("{x:.8e}")
}

fn fmt_value<F: IeeeFloat>(x: F) -> String {
    match F::MANTISSA_BITS {
        52 => fmt_binary64(x.to_f64()),
        _ => fmt_binary32(x.to_f64() as f32),
    }
}

/// Builds a row for a statistic with an exact rational reference.
#[allow(clippy::too_many_arguments)]
pub fn stat_row<F: IeeeFloat>(
    experiment: &str,
    run: u64,
    algorithm: &str,
    ordering: &str,
    statistic: &str,
    value: F,
    exact: &ExactNumber,
) -> ReportRow {
    let report = error_report(value, exact);
    ReportRow {
        experiment: experiment.to_string(),
        run: run.to_string(),
        algorithm: algorithm.to_string(),
        ordering: ordering.to_string(),
        statistic: statistic.to_string(),
        bits_hex: value.bits_hex(),
        exact: fmt_value(exact.round_to::<F>()),
        abs_err: fmt_binary64(report.absolute),
        rel_err: fmt_binary64(report.relative),
        ulps: fmt_binary64(report.ulps),
    }
}

/// Appends per-(algorithm, ordering, statistic) aggregate rows: the mean of
/// the per-run absolute/relative/ulp errors, mirroring tables that report
/// averages over runs.
pub fn append_aggregate_rows(rows: &mut Vec<ReportRow>) {
    let mut keys: Vec<(String, String, String, String)> = Vec::new();
    for r in rows.iter() {
        let key = (
            r.experiment.clone(),
            r.algorithm.clone(),
            r.ordering.clone(),
            r.statistic.clone(),
        );
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut aggregates = Vec::new();
    for (experiment, algorithm, ordering, statistic) in keys {
        let mut abs = Vec::new();
        let mut rel = Vec::new();
        let mut ulps = Vec::new();
        for r in rows.iter() {
            if r.experiment == experiment
                && r.algorithm == algorithm
                && r.ordering == ordering
                && r.statistic == statistic
                && r.run != "avg"
            {
                abs.push(r.abs_err.parse::<f64>().unwrap_or(f64::NAN));
                rel.push(r.rel_err.parse::<f64>().unwrap_or(f64::NAN));
                ulps.push(r.ulps.parse::<f64>().unwrap_or(f64::NAN));
            }
        }
        if abs.is_empty() {
            continue;
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        aggregates.push(ReportRow {
            experiment,
            run: "avg".to_string(),
            algorithm,
            ordering,
            statistic,
            bits_hex: String::new(),
            exact: String::new(),
            abs_err: fmt_binary64(mean(&abs)),
            rel_err: fmt_binary64(mean(&rel)),
            ulps: fmt_binary64(mean(&ulps)),
        });
    }
    rows.extend(aggregates);
}

pub const CSV_HEADER: [&str; 10] = [
    "experiment",
    "run",
    "algorithm",
    "ordering",
    "statistic",
    "bits_hex",
    "exact",
    "abs_err",
    "rel_err",
    "ulps",
];

pub fn write_csv<W: std::io::Write>(rows: &[ReportRow], writer: W) -> Result<(), CliError> {
    let mut csv = csv::Writer::from_writer(writer);
    if rows.is_empty() {
        // An empty report still carries its schema.
        csv.write_record(CSV_HEADER)
            .map_err(|e| CliError::Io(format!("writing csv header: {e}")))?;
    }
    for row in rows {
        csv.serialize(row)
            .map_err(|e| CliError::Io(format!("writing csv row: {e}")))?;
    }
    csv.flush()
        .map_err(|e| CliError::Io(format!("flushing csv: {e}")))?;
    Ok(())
}

pub fn write_csv_path(rows: &[ReportRow], path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("creating {}: {e}", path.display())))?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn read_csv_path(path: &Path) -> Result<Vec<ReportRow>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Io(format!("opening {}: {e}", path.display())))?;
    let mut reader = csv::Reader::from_reader(std::io::BufReader::new(file));
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record.map_err(|e| CliError::Io(format!("parsing {}: {e}", path.display())))?);
    }
    Ok(rows)
}

/// Pivots one run of a report into a markdown table: algorithms as rows,
/// (ordering, statistic) pairs as columns, absolute errors as cells.
pub fn render_markdown(rows: &[ReportRow], run: &str) -> String {
    let selected: Vec<&ReportRow> = rows.iter().filter(|r| r.run == run).collect();
    let mut algorithms: Vec<&str> = Vec::new();
    let mut columns: Vec<(String, String)> = Vec::new();
    for r in &selected {
        if !algorithms.contains(&r.algorithm.as_str()) {
            algorithms.push(&r.algorithm);
        }
        let col = (r.ordering.clone(), r.statistic.clone());
        if !columns.contains(&col) {
            columns.push(col);
        }
    }
    let mut out = String::new();
    let _ = write!(out, "| algorithm |");
    for (ordering, statistic) in &columns {
        let _ = write!(out, " {ordering} err {statistic} |");
    }
    let _ = writeln!(out);
    let _ = write!(out, "|---|");
    for _ in &columns {
        let _ = write!(out, "---|");
    }
    let _ = writeln!(out);
    for algo in algorithms {
        let _ = write!(out, "| {algo} |");
        for (ordering, statistic) in &columns {
            let cell = selected
                .iter()
                .find(|r| {
                    r.algorithm == algo && &r.ordering == ordering && &r.statistic == statistic
                })
                .map(|r| {
                    let err: f64 = r.abs_err.parse().unwrap_or(f64::NAN);
                    format!("{err:.2e}")
                })
                .unwrap_or_default();
            let _ = write!(out, " {cell} |");
        }
        let _ = writeln!(out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_round_trips() {
        let x = 287422.55518746964f64;
        assert_eq!(fmt_binary64(x).parse::<f64>().unwrap(), x);
        let y = 0.4999894f32;
        assert_eq!(fmt_binary32(y).parse::<f32>().unwrap(), y);
    }

    #[test]
    fn csv_round_trip() {
        let exact = ExactNumber::from_u64(2);
        let rows = vec![
            stat_row("normal", 0, "naive", "raw", "M", 2.0f64, &exact),
            stat_row("uniform32", 3, "kahan", "sorted", "S", 0.5f32, &exact),
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(
            "experiment,run,algorithm,ordering,statistic,bits_hex,exact,abs_err,rel_err,ulps"
        ));
        let mut reader = csv::Reader::from_reader(buf.as_slice());
        let back: Vec<ReportRow> = reader.deserialize().map(|r| r.unwrap()).collect();
        assert_eq!(back, rows);
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.trim_end(),
            "experiment,run,algorithm,ordering,statistic,bits_hex,exact,abs_err,rel_err,ulps"
        );
    }

    #[test]
    fn aggregates_average_absolute_errors() {
        let exact = ExactNumber::from_u64(1);
        let mut rows = vec![
            stat_row("e", 0, "a", "raw", "M", 1.5f64, &exact),
            stat_row("e", 1, "a", "raw", "M", 0.5f64, &exact),
        ];
        append_aggregate_rows(&mut rows);
        let avg = rows.iter().find(|r| r.run == "avg").unwrap();
        assert_eq!(avg.abs_err.parse::<f64>().unwrap(), 0.5);
        assert!(avg.bits_hex.is_empty());
    }

    #[test]
    fn markdown_has_header_and_cells() {
        let exact = ExactNumber::from_u64(2);
        let rows = vec![
            stat_row("normal", 0, "naive", "raw", "M", 2.5f64, &exact),
            stat_row("normal", 0, "naive", "sorted", "M", 2.25f64, &exact),
        ];
        let md = render_markdown(&rows, "0");
        assert!(md.contains("| algorithm |"));
        assert!(md.contains("raw err M"));
        assert!(md.contains("5.00e-1"));
    }
}
