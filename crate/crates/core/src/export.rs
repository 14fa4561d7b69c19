//! Trace files.
//!
//! The sample table has the frozen column order
//! `t,u,teaching,z1,...,zn,z,<strength>` where `<strength>` is `pf` for the
//! four-component model and `pr` otherwise. Numbers use Rust's shortest
//! round-trip formatting so identical runs produce identical bytes.

use std::io::{self, Read, Write};

use serde::Serialize;

use crate::trace::{Event, SimulationTrace, TraceMetadata};

pub const TRACE_CSV: &str = "trace.csv";
pub const TRACE_JSON: &str = "trace.json";
pub const EVENTS_JSON: &str = "events.json";
pub const METADATA_JSON: &str = "metadata.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const PLOT_SCRIPT: &str = "plot.gp";

pub fn header(trace: &SimulationTrace) -> Vec<String> {
    let mut cols = vec!["t".to_string(), "u".to_string(), "teaching".to_string()];
    cols.extend((1..=trace.dim()).map(|i| format!("z{i}")));
    cols.push("z".into());
    cols.push(trace.metadata.strength.label().into());
    cols
}

fn rows(trace: &SimulationTrace) -> impl Iterator<Item = Vec<f64>> + '_ {
    trace.samples.iter().map(move |s| {
        let mut row = Vec::with_capacity(s.z.len() + 5);
        row.push(s.t);
        row.push(s.u);
        row.push(if s.teaching { 1.0 } else { 0.0 });
        row.extend_from_slice(&s.z);
        row.push(s.total());
        row.push(trace.strength(s));
        row
    })
}

pub fn write_csv<W: Write>(trace: &SimulationTrace, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(trace))?;
    for row in rows(trace) {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()
}

pub fn csv_string(trace: &SimulationTrace) -> String {
    let mut buf = Vec::new();
    write_csv(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is ascii")
}

/// Reads a trace CSV back into its header and numeric rows.
pub fn read_csv<R: Read>(input: R) -> io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.iter().map(str::to_owned).collect();
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)))
            .collect::<io::Result<Vec<_>>>()?;
        out.push(row);
    }
    Ok((header, out))
}

#[derive(Serialize)]
struct JsonTrace<'a> {
    metadata: &'a TraceMetadata,
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

pub fn write_json<W: Write>(trace: &SimulationTrace, out: W) -> io::Result<()> {
    let doc = JsonTrace {
        metadata: &trace.metadata,
        columns: header(trace),
        rows: rows(trace).collect(),
    };
    serde_json::to_writer(out, &doc).map_err(io::Error::from)
}

pub fn write_events<W: Write>(events: &[Event], out: W) -> io::Result<()> {
    serde_json::to_writer_pretty(out, events).map_err(io::Error::from)
}

pub fn write_metadata<W: Write>(metadata: &TraceMetadata, out: W) -> io::Result<()> {
    serde_json::to_writer_pretty(out, metadata).map_err(io::Error::from)
}

/// gnuplot script drawing `U`, `Z`, every `Z_i` and the strength coefficient
/// from `data_file`.
pub fn gnuplot_script(trace: &SimulationTrace, data_file: &str) -> String {
    let cols = header(trace);
    let n = trace.dim();
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead outside\n");
    s.push_str(&format!("set xlabel 't ({})'\n", if trace.metadata.unit.is_empty() { "time" } else { &trace.metadata.unit }));
    s.push_str("set ylabel 'knowledge'\n");
    s.push_str("set y2label 'strength'\nset y2range [0:1]\nset y2tics\n");
    let mut plots = vec![format!("'{data_file}' using 1:2 with steps lw 2")];
    for i in 0..n {
        plots.push(format!("'' using 1:{} with lines", 4 + i));
    }
    plots.push(format!("'' using 1:{} with lines lw 2", 4 + n));
    plots.push(format!("'' using 1:{} axes x1y2 with lines dt 2", 5 + n));
    s.push_str(&format!("# columns: {}\n", cols.join(",")));
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}
