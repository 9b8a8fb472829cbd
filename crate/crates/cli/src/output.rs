use std::io::Write;

use serde_json::{json, Map, Value};

use crate::{
    config::{Job, SCHEMA_VERSION},
    experiments::{Cell, Report},
};

const GENERATOR: &str = concat!("qrmsim ", env!("CARGO_PKG_VERSION"));
const UNITS: &str = "results in rad/s and s; config frequencies in Hz";

/// Shortest round-trip text for a float; the same digits JSON output uses.
fn number(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite floats serialize")
    } else {
        x.to_string()
    }
}

fn cell_text(c: &Cell) -> String {
    match c {
        Cell::Num(x) => number(*x),
        Cell::Int(n) => n.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Num(x) => json!(x),
        Cell::Int(n) => json!(n),
        Cell::Text(s) => json!(s),
    }
}

/// `#`-prefixed metadata block, then a header row and the data.
pub fn write_csv<W: Write>(job: &Job, report: &Report, mut sink: W) -> WriteResult {
    let mut meta = Vec::new();
    writeln!(meta, "# generator: {GENERATOR}")?;
    writeln!(meta, "# schema_version: {SCHEMA_VERSION}")?;
    writeln!(meta, "# experiment: {}", job.experiment.name())?;
    writeln!(meta, "# units: {UNITS}")?;
    writeln!(meta, "# config:")?;
    for line in serde_json::to_string_pretty(&job.echo)?.lines() {
        writeln!(meta, "#   {line}")?;
    }
    for (key, value) in &report.summary {
        writeln!(meta, "# result.{key}: {value}")?;
    }
    sink.write_all(&meta)?;
    let mut out = csv::WriterBuilder::new().flexible(false).from_writer(sink);
    out.write_record(&report.columns)?;
    for row in &report.rows {
        out.write_record(row.iter().map(cell_text))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(job: &Job, report: &Report, mut out: W) -> WriteResult {
    let summary: Map<String, Value> = report.summary.iter().cloned().collect();
    let rows: Vec<Value> = report.rows.iter().map(|r| Value::Array(r.iter().map(cell_json).collect())).collect();
    let doc = json!({
        "generator": GENERATOR,
        "schema_version": SCHEMA_VERSION,
        "experiment": job.experiment.name(),
        "units": UNITS,
        "config": job.echo,
        "summary": summary,
        "columns": report.columns,
        "rows": rows,
    });
    serde_json::to_writer_pretty(&mut out, &doc)?;
    writeln!(out)?;
    Ok(())
}

/// Any I/O, CSV or JSON failure while writing.
pub type WriteResult = Result<(), Box<dyn std::error::Error + Send + Sync>>;
