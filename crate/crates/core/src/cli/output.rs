//! Result files: `events.csv`, `summary.json`, `manifest.json`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::AgentKind;
use crate::harness::{finish_series, summarize, MetricsSeries, RunConfig, RunSummary};
use crate::{Result, SimError};

pub const EVENTS_HEADER: &str = "run_id,event_idx,n_active,xi,epsilon,mse_sys,agent,n_devices,m_channels,lambda";
pub const EVENTS_SCHEMA: &str = "events/1";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const EVENTS_FILE: &str = "events.csv";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON formatter that writes every float with [`fmt_f64`].
struct ExactFloats(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats(Default::default()));
    value
        .serialize(&mut ser)
        .map_err(|e| SimError::invalid(format!("json: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| SimError::invalid(format!("json: {e}")))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| SimError::io(path, e))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SimError::io(path, e))
}

/// One row of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub cell: usize,
    pub agent: AgentKind,
    pub n_devices: usize,
    pub m_channels: usize,
    pub lambda: f64,
    pub hidden_layers: usize,
    pub hidden_size: usize,
    pub n_events: usize,
    pub runs: usize,
    pub converged_runs: usize,
    pub converged_fraction: f64,
    pub mean_success_rate: Option<f64>,
    pub ci95_low: Option<f64>,
    pub ci95_high: Option<f64>,
    pub convergence_event_mean: Option<f64>,
    pub mean_active: f64,
}

impl SummaryRow {
    pub fn new(cell: usize, config: &RunConfig, s: &RunSummary) -> Self {
        SummaryRow {
            cell,
            agent: config.agent,
            n_devices: config.n_devices,
            m_channels: config.m_channels,
            lambda: config.lambda,
            hidden_layers: config.hidden_layers,
            hidden_size: config.hidden_size,
            n_events: config.n_events,
            runs: s.runs,
            converged_runs: s.converged_runs,
            converged_fraction: s.converged_fraction,
            mean_success_rate: s.mean_success_rate,
            ci95_low: s.ci95_low,
            ci95_high: s.ci95_high,
            convergence_event_mean: s.convergence_event_mean,
            mean_active: s.mean_active,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestCell {
    pub cell: usize,
    pub config: RunConfig,
    /// Relative to the output directory.
    pub events_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub program: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub events_schema: String,
    pub cells: Vec<ManifestCell>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, cells: Vec<ManifestCell>) -> Self {
        Manifest {
            program: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            events_schema: EVENTS_SCHEMA.to_string(),
            cells,
        }
    }
}

pub fn write_events(path: &Path, config: &RunConfig, runs: &[MetricsSeries]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| SimError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let tail = format!(
        "{},{},{},{}",
        config.agent,
        config.n_devices,
        config.m_channels,
        fmt_f64(config.lambda)
    );
    let mut emit = || -> io::Result<()> {
        writeln!(w, "{EVENTS_HEADER}")?;
        for run in runs {
            for i in 0..run.success.len() {
                let mse = run.mse_sys[i].map(fmt_f64).unwrap_or_default();
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    run.run_id,
                    i,
                    run.n_active[i],
                    u8::from(run.success[i]),
                    fmt_f64(run.epsilon[i]),
                    mse,
                    tail
                )?;
            }
        }
        w.flush()
    };
    emit().map_err(|e| SimError::io(path, e))
}

/// Per-run traces read back from an events file.
pub fn read_events(path: &Path, config: &RunConfig) -> Result<Vec<MetricsSeries>> {
    let file = fs::File::open(path).map_err(|e| SimError::io(path, e))?;
    let bad = |line: usize, msg: String| SimError::Parse {
        path: path.display().to_string(),
        message: format!("line {line}: {msg}"),
    };
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(h)) if h == EVENTS_HEADER => {}
        _ => return Err(bad(1, "missing or unexpected header".into())),
    }
    struct Raw {
        success: Vec<bool>,
        n_active: Vec<usize>,
        epsilon: Vec<f64>,
        mse: Vec<Option<f64>>,
    }
    let mut by_run: BTreeMap<usize, Raw> = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| SimError::io(path, e))?;
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(bad(lineno, format!("expected 10 fields, got {}", f.len())));
        }
        let num = |k: usize| f[k].parse::<f64>().map_err(|e| bad(lineno, format!("field {k}: {e}")));
        let int = |k: usize| f[k].parse::<usize>().map_err(|e| bad(lineno, format!("field {k}: {e}")));
        let run_id = int(0)?;
        let raw = by_run.entry(run_id).or_insert_with(|| Raw {
            success: Vec::new(),
            n_active: Vec::new(),
            epsilon: Vec::new(),
            mse: Vec::new(),
        });
        if int(1)? != raw.success.len() {
            return Err(bad(lineno, "events out of order".into()));
        }
        raw.n_active.push(int(2)?);
        raw.success.push(match f[3] {
            "0" => false,
            "1" => true,
            other => return Err(bad(lineno, format!("xi must be 0 or 1, got '{other}'"))),
        });
        raw.epsilon.push(num(4)?);
        raw.mse.push(if f[5].is_empty() { None } else { Some(num(5)?) });
    }
    Ok(by_run
        .into_iter()
        .map(|(run_id, r)| finish_series(config, run_id, r.success, r.n_active, r.epsilon, r.mse))
        .collect())
}

/// Writes the three result files for a set of cells. `runs` is `None` for
/// cells whose traces were not kept.
pub fn write_results(
    out: &Path,
    command: &str,
    seed: u64,
    cells: &[(RunConfig, RunSummary, Option<&[MetricsSeries]>)],
    single: bool,
) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| SimError::io(out, e))?;
    let mut manifest_cells = Vec::new();
    let mut rows = Vec::new();
    for (i, (config, summary, runs)) in cells.iter().enumerate() {
        let events_file = match runs {
            Some(runs) => {
                let name = if single { EVENTS_FILE.to_string() } else { format!("events-cell{i:03}.csv") };
                write_events(&out.join(&name), config, runs)?;
                Some(name)
            }
            None => None,
        };
        manifest_cells.push(ManifestCell { cell: i, config: config.clone(), events_file });
        rows.push(SummaryRow::new(i, config, summary));
    }
    write_file(&out.join(SUMMARY_FILE), &to_json(&Summary { rows })?)?;
    write_file(&out.join(MANIFEST_FILE), &to_json(&Manifest::new(command, seed, manifest_cells))?)
}

pub fn read_manifest(out: &Path) -> Result<Manifest> {
    let path = out.join(MANIFEST_FILE);
    serde_json::from_str(&read_file(&path)?).map_err(|e| SimError::Parse { path: path.display().to_string(), message: e.to_string() })
}

pub fn read_summary(out: &Path) -> Result<Summary> {
    let path = out.join(SUMMARY_FILE);
    serde_json::from_str(&read_file(&path)?).map_err(|e| SimError::Parse { path: path.display().to_string(), message: e.to_string() })
}

/// Outcome of recomputing summary rows from their event files.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checked: usize,
    /// Cells without an event file.
    pub skipped: usize,
    pub mismatches: Vec<usize>,
}

pub fn verify(out: &Path) -> Result<VerifyReport> {
    let manifest = read_manifest(out)?;
    let summary = read_summary(out)?;
    let mut report = VerifyReport { checked: 0, skipped: 0, mismatches: Vec::new() };
    for cell in &manifest.cells {
        let Some(name) = &cell.events_file else {
            report.skipped += 1;
            continue;
        };
        let runs = read_events(&out.join(name), &cell.config)?;
        let expected = SummaryRow::new(cell.cell, &cell.config, &summarize(&runs));
        report.checked += 1;
        if summary.rows.iter().find(|r| r.cell == cell.cell) != Some(&expected) {
            report.mismatches.push(cell.cell);
        }
    }
    Ok(report)
}
