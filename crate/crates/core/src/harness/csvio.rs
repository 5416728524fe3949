//! CSV traces and aggregates. Floats are written with 17 significant
//! digits so that parsing reproduces them bit for bit.

use std::io::{Read, Write};

use crate::agents::{RegretRecord, RegretTrace};
use crate::error::{Error, Result};

pub const TRACE_HEADER: [&str; 7] = ["algorithm", "seed", "step", "episode", "regret", "cum_regret", "kind"];

pub const AGGREGATE_METRICS: [&str; 5] = [
    "final_regret_mean",
    "final_regret_stderr",
    "total_regret_mean",
    "total_regret_stderr",
    "seeds",
];

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(path: &str, msg: impl Into<String>) -> Error {
    Error::Csv {
        path: path.to_string(),
        msg: msg.into(),
    }
}

fn write_err(e: csv::Error) -> Error {
    csv_err("<output>", e.to_string())
}

/// Step rows in order; each episode row follows the step that ended it.
pub fn write_trace(trace: &RegretTrace, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(write_err)?;
    let seed = trace.seed.to_string();
    let row = |r: &RegretRecord, kind: &str| {
        [
            trace.algorithm.clone(),
            seed.clone(),
            r.step.to_string(),
            r.episode.to_string(),
            format_f64(r.regret),
            format_f64(r.cum_regret),
            kind.to_string(),
        ]
    };
    let mut episodes = trace.episodes.iter().peekable();
    // episode rows recorded before any step (never produced by the agents)
    while let Some(e) = episodes.next_if(|e| e.step == 0) {
        w.write_record(row(e, "episode")).map_err(write_err)?;
    }
    for s in &trace.steps {
        w.write_record(row(s, "step")).map_err(write_err)?;
        while let Some(e) = episodes.next_if(|e| e.step == s.step) {
            w.write_record(row(e, "episode")).map_err(write_err)?;
        }
    }
    for e in episodes {
        w.write_record(row(e, "episode")).map_err(write_err)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn trace_to_string(trace: &RegretTrace) -> String {
    let mut buf = Vec::new();
    write_trace(trace, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn parse_num<T: std::str::FromStr>(path: &str, line: u64, field: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| csv_err(path, format!("line {line}: bad {field} {raw:?}")))
}

fn check_header(path: &str, got: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    if got.iter().ne(expected.iter().copied()) {
        return Err(csv_err(
            path,
            format!("header {:?} does not match {:?}", got.iter().collect::<Vec<_>>(), expected),
        ));
    }
    Ok(())
}

/// Parse a trace written by [`write_trace`]. `path` only labels errors.
pub fn read_trace(input: impl Read, path: &str) -> Result<RegretTrace> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| csv_err(path, e.to_string()))?.clone();
    if header.is_empty() {
        return Err(csv_err(path, "empty file"));
    }
    check_header(path, &header, &TRACE_HEADER)?;
    let mut trace: Option<RegretTrace> = None;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let seed: u64 = parse_num(path, line, "seed", &rec[1])?;
        let t = trace.get_or_insert_with(|| RegretTrace::new(&rec[0], seed));
        if t.algorithm != rec[0] || t.seed != seed {
            return Err(csv_err(path, format!("line {line}: mixes runs")));
        }
        let record = RegretRecord {
            step: parse_num(path, line, "step", &rec[2])?,
            episode: parse_num(path, line, "episode", &rec[3])?,
            regret: parse_num(path, line, "regret", &rec[4])?,
            cum_regret: parse_num(path, line, "cum_regret", &rec[5])?,
        };
        match &rec[6] {
            "step" => t.steps.push(record),
            "episode" => t.episodes.push(record),
            other => return Err(csv_err(path, format!("line {line}: unknown kind {other:?}"))),
        }
    }
    trace.ok_or_else(|| csv_err(path, "no rows"))
}

/// One row of an aggregate CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateRow {
    pub config_id: String,
    /// `(axis, value)` in grid order.
    pub axes: Vec<(String, String)>,
    pub final_regret_mean: f64,
    pub final_regret_stderr: f64,
    pub total_regret_mean: f64,
    pub total_regret_stderr: f64,
    pub seeds: usize,
}

pub fn write_aggregates(rows: &[AggregateRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let axes: Vec<&str> = rows.first().map_or(Vec::new(), |r| r.axes.iter().map(|(k, _)| k.as_str()).collect());
    let mut header = vec!["config_id"];
    header.extend(&axes);
    header.extend(AGGREGATE_METRICS);
    w.write_record(&header).map_err(write_err)?;
    for r in rows {
        if r.axes.iter().map(|(k, _)| k.as_str()).ne(axes.iter().copied()) {
            return Err(csv_err("<output>", "rows disagree on axis columns"));
        }
        let mut rec = vec![r.config_id.clone()];
        rec.extend(r.axes.iter().map(|(_, v)| v.clone()));
        rec.extend([
            format_f64(r.final_regret_mean),
            format_f64(r.final_regret_stderr),
            format_f64(r.total_regret_mean),
            format_f64(r.total_regret_stderr),
            r.seeds.to_string(),
        ]);
        w.write_record(&rec).map_err(write_err)?;
    }
    w.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

pub fn read_aggregates(input: impl Read, path: &str) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(|e| csv_err(path, e.to_string()))?.clone();
    let n = header.len();
    if n < 1 + AGGREGATE_METRICS.len() || &header[0] != "config_id" {
        return Err(csv_err(path, "not an aggregate csv"));
    }
    let n_axes = n - 1 - AGGREGATE_METRICS.len();
    if header.iter().skip(1 + n_axes).ne(AGGREGATE_METRICS.iter().copied()) {
        return Err(csv_err(path, "not an aggregate csv"));
    }
    let axis_names: Vec<String> = header.iter().skip(1).take(n_axes).map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let m = 1 + n_axes;
        rows.push(AggregateRow {
            config_id: rec[0].to_string(),
            axes: axis_names
                .iter()
                .cloned()
                .zip(rec.iter().skip(1).take(n_axes).map(String::from))
                .collect(),
            final_regret_mean: parse_num(path, line, "final_regret_mean", &rec[m])?,
            final_regret_stderr: parse_num(path, line, "final_regret_stderr", &rec[m + 1])?,
            total_regret_mean: parse_num(path, line, "total_regret_mean", &rec[m + 2])?,
            total_regret_stderr: parse_num(path, line, "total_regret_stderr", &rec[m + 3])?,
            seeds: parse_num(path, line, "seeds", &rec[m + 4])?,
        });
    }
    Ok(rows)
}
