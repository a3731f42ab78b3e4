use std::fmt::Write as _;
use std::io;

use super::experiment::ResultRow;
use super::fit::{summarise, ScalingReport};

pub const CSV_HEADER: [&str; 10] = [
    "protocol",
    "n",
    "k",
    "seed",
    "trial",
    "interactions",
    "parallel_time",
    "converged",
    "silence_verified",
    "extras",
];

/// `key=value` pairs joined by `;`, in key order.
pub fn format_extras(row: &ResultRow) -> String {
    row.extras
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_csv<W: io::Write>(rows: &[ResultRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.protocol.name().to_owned(),
            r.n.to_string(),
            r.k.to_string(),
            r.seed.to_string(),
            r.trial.to_string(),
            r.interactions.to_string(),
            r.parallel_time.to_string(),
            r.converged.to_string(),
            r.silence_verified.to_string(),
            format_extras(r),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Per-`n` table of trial counts, non-converged and aborted trials, medians
/// and 0.9-quantiles.
pub fn summary_table(rows: &[ResultRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:>8} {:>7} {:>9} {:>8} {:>7} {:>14} {:>14}",
        "n", "trials", "converged", "failed", "aborted", "median", "q90"
    );
    for size in summarise(rows) {
        let aborted = rows.iter().filter(|r| r.n == size.n && r.aborted()).count();
        let _ = writeln!(
            s,
            "{:>8} {:>7} {:>9} {:>8} {:>7} {:>14.4} {:>14.4}",
            size.n,
            size.trials,
            size.converged,
            size.trials - size.converged,
            aborted,
            size.median,
            size.q90
        );
    }
    s
}

pub fn report_text(report: &ScalingReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model: {:?}", report.model);
    let _ = writeln!(
        s,
        "slope: {:.4} (se {:.4}), intercept {:.4}, max relative residual {:.4}",
        report.slope, report.std_error, report.intercept, report.relative_residual
    );
    if let Some(t) = report.target {
        let _ = writeln!(s, "target: {t:.4} +/- {}", report.tolerance);
    }
    if let Some(pass) = report.pass {
        let _ = writeln!(s, "result: {}", if pass { "PASS" } else { "FAIL" });
    }
    s
}
