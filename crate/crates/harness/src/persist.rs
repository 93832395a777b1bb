use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use emob_core::PlannerKind;

use crate::comparison::{ComparisonResult, RunRecord, TraceRow};
use crate::sweep::SweepTable;
use crate::HarnessError;

pub const SUMMARY_COLUMNS: [&str; 11] = [
    "variant",
    "n",
    "ql_better_frac",
    "tie_frac",
    "aco_better_frac",
    "mean_cost_ql",
    "mean_cost_aco",
    "mean_exec_ql",
    "mean_exec_aco",
    "n_no_path",
    "n_invalid",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistedFiles {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub summary_json: PathBuf,
    pub trace_aco: PathBuf,
    pub trace_q: PathBuf,
}

fn unix_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Picks a suffix under which none of `names` exists yet in `dir`. The plain
/// names are used on the first run; later runs get a timestamp.
fn free_suffix(dir: &Path, names: &[(&str, &str)]) -> String {
    let taken = |suffix: &str| names.iter().any(|(stem, ext)| dir.join(format!("{stem}{suffix}.{ext}")).exists());
    if !taken("") {
        return String::new();
    }
    let ms = unix_ms();
    let mut k = 0;
    loop {
        let suffix = if k == 0 { format!("-{ms}") } else { format!("-{ms}-{k}") };
        if !taken(&suffix) {
            return suffix;
        }
        k += 1;
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, HarnessError> {
    OpenOptions::new()
        .write(true)
        .create_new(true)
        .open(path)
        .map(BufWriter::new)
        .map_err(|e| HarnessError::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), HarnessError> {
    w.flush().map_err(|e| HarnessError::io(path, e))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<(), HarnessError> {
    let mut w = create(path)?;
    for line in lines {
        writeln!(w, "{line}").map_err(|e| HarnessError::io(path, e))?;
    }
    finish(w, path)
}

fn trace_lines<'a>(traces: &'a [TraceRow], planner: PlannerKind) -> impl Iterator<Item = String> + 'a {
    std::iter::once("cell,variant,pair,repetition,step,best_cost".to_string()).chain(
        traces.iter().filter(move |t| t.planner == planner).map(|t| {
            format!("{},{},{},{},{},{}", t.cell, csv_field(&t.variant), t.pair, t.repetition, t.step, opt(t.cost))
        }),
    )
}

/// Writes records, summaries and convergence traces into `dir`. Existing
/// files are never overwritten; a rerun writes a new suffixed set.
pub fn persist_comparison(dir: &Path, result: &ComparisonResult) -> Result<PersistedFiles, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let names =
        [("records", "jsonl"), ("summary", "csv"), ("summary", "json"), ("trace_aco", "csv"), ("trace_q", "csv")];
    let sfx = free_suffix(dir, &names);
    let path = |i: usize| dir.join(format!("{}{sfx}.{}", names[i].0, names[i].1));
    let files = PersistedFiles {
        records: path(0),
        summary: path(1),
        summary_json: path(2),
        trace_aco: path(3),
        trace_q: path(4),
    };

    let mut w = create(&files.records)?;
    for rec in &result.records {
        let line = serde_json::to_string(rec).expect("records serialize");
        writeln!(w, "{line}").map_err(|e| HarnessError::io(&files.records, e))?;
    }
    finish(w, &files.records)?;

    let header = SUMMARY_COLUMNS.join(",");
    let rows = result.summary.cells.iter().map(|c| {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&c.variant),
            c.n,
            c.ql_better_frac,
            c.tie_frac,
            c.aco_better_frac,
            opt(c.mean_cost_ql),
            opt(c.mean_cost_aco),
            c.mean_exec_ql,
            c.mean_exec_aco,
            c.n_no_path,
            c.n_invalid
        )
    });
    write_lines(&files.summary, std::iter::once(header).chain(rows))?;
    let json = serde_json::to_string_pretty(&result.summary).expect("summary serializes");
    write_lines(&files.summary_json, [json])?;
    write_lines(&files.trace_aco, trace_lines(&result.traces, PlannerKind::Aco))?;
    write_lines(&files.trace_q, trace_lines(&result.traces, PlannerKind::Q))?;
    Ok(files)
}

/// Writes `sweep.csv` (or a suffixed sibling) into `dir`.
pub fn persist_sweep(dir: &Path, table: &SweepTable) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let sfx = free_suffix(dir, &[("sweep", "csv")]);
    let path = dir.join(format!("sweep{sfx}.csv"));
    let header = "planner,parameter,value,n,n_failed,mean_cost,std_cost,mean_exec_s,std_exec_s".to_string();
    let rows = table.rows.iter().map(|r| {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            r.planner,
            r.parameter,
            r.value,
            r.n,
            r.n_failed,
            opt(r.mean_cost),
            opt(r.std_cost),
            r.mean_exec_s,
            r.std_exec_s
        )
    });
    write_lines(&path, std::iter::once(header).chain(rows))?;
    Ok(path)
}

pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| HarnessError::Parse { path: path.into(), message: format!("line {}: {e}", i + 1) })?;
        out.push(rec);
    }
    Ok(out)
}
