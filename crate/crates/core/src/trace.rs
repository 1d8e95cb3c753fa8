//! Trace files and experiment manifests.
//!
//! CSV rows carry `step, mode, arriving_player, s_1..s_m, total_load, cost,
//! converged_flag`; `arriving_player` is `-1` for simultaneous rounds and
//! `cost` is the summed cost of the step's arrivals. JSON-lines files hold one
//! serialized [`StepRecord`] per line. Floats are written in shortest
//! round-trip form, so both formats re-import bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamic::{self, DynamicRun, StepRecord, UpdateMode};
use crate::error::{GameError, Result};
use crate::experiments::{ExperimentReport, SettingSpec};
use crate::model::Instance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Csv => "csv",
            TraceFormat::Jsonl => "jsonl",
        }
    }
}

impl std::str::FromStr for TraceFormat {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(TraceFormat::Csv),
            "jsonl" | "json-lines" => Ok(TraceFormat::Jsonl),
            other => {
                Err(GameError::InvalidParameter(format!("unknown trace format `{other}` (expected csv or jsonl)")))
            }
        }
    }
}

fn io_error(path: &Path, err: impl std::fmt::Display) -> GameError {
    GameError::Io { path: path.display().to_string(), message: err.to_string() }
}

pub fn csv_header(m: usize) -> String {
    let mut header = String::from("step,mode,arriving_player");
    for j in 1..=m {
        let _ = write!(header, ",s_{j}");
    }
    header.push_str(",total_load,cost,converged_flag");
    header
}

fn csv_row(run: &DynamicRun, record: &StepRecord) -> String {
    let arriving: i64 = match run.mode() {
        UpdateMode::Simultaneous => -1,
        UpdateMode::Sequential => record.arrivals.first().map_or(-1, |&i| i as i64),
    };
    let converged = run.converged_at.is_some_and(|c| c <= record.t + 1);
    let mut row = format!("{},{},{}", record.t, run.mode().label(), arriving);
    for s in record.loads_after.as_slice() {
        let _ = write!(row, ",{s}");
    }
    let _ = write!(row, ",{},{},{}", record.total_load, record.total_cost(), u8::from(converged));
    row
}

/// Writes the trace of `run` to `out`.
pub fn write_trace<W: Write>(run: &DynamicRun, format: TraceFormat, out: &mut W) -> std::io::Result<()> {
    match format {
        TraceFormat::Csv => {
            writeln!(out, "{}", csv_header(run.instance.m()))?;
            for record in &run.trace {
                writeln!(out, "{}", csv_row(run, record))?;
            }
        }
        TraceFormat::Jsonl => {
            for record in &run.trace {
                serde_json::to_writer(&mut *out, record)?;
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// Writes the trace of `run` to `path`.
pub fn export_trace(run: &DynamicRun, path: &Path, format: TraceFormat) -> Result<()> {
    if run.trace.is_empty() {
        return Err(GameError::EmptyTrace);
    }
    let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = BufWriter::new(file);
    write_trace(run, format, &mut out).map_err(|e| io_error(path, e))?;
    out.flush().map_err(|e| io_error(path, e))
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<StepRecord>> {
    let mut records = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| GameError::TraceParse { line: k + 1, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let record =
            serde_json::from_str(&line).map_err(|e| GameError::TraceParse { line: k + 1, message: e.to_string() })?;
        records.push(record);
    }
    Ok(records)
}

/// Re-imports a JSON-lines trace.
pub fn import_jsonl(path: &Path) -> Result<Vec<StepRecord>> {
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    read_jsonl(BufReader::new(file))
}

/// One parsed CSV trace row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub step: usize,
    pub mode: UpdateMode,
    pub arriving_player: Option<usize>,
    pub loads: Vec<f64>,
    pub total_load: f64,
    pub cost: f64,
    pub converged: bool,
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<CsvRow>> {
    let mut lines = input.lines().enumerate();
    let columns = match lines.next() {
        Some((_, Ok(header))) => header.split(',').count(),
        Some((_, Err(e))) => return Err(GameError::TraceParse { line: 1, message: e.to_string() }),
        None => return Err(GameError::EmptyTrace),
    };
    if columns < 7 {
        return Err(GameError::TraceParse { line: 1, message: format!("expected at least 7 columns, got {columns}") });
    }
    let m = columns - 6;
    let mut rows = Vec::new();
    for (k, line) in lines {
        let line_no = k + 1;
        let bad = |message: String| GameError::TraceParse { line: line_no, message };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns {
            return Err(bad(format!("expected {columns} fields, got {}", fields.len())));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
        let mode = match fields[1] {
            "sequential" => UpdateMode::Sequential,
            "simultaneous" => UpdateMode::Simultaneous,
            other => return Err(bad(format!("unknown mode `{other}`"))),
        };
        let player: i64 = fields[2].parse().map_err(|e| bad(format!("`{}`: {e}", fields[2])))?;
        rows.push(CsvRow {
            step: fields[0].parse().map_err(|e| bad(format!("`{}`: {e}", fields[0])))?,
            mode,
            arriving_player: usize::try_from(player).ok(),
            loads: fields[3..3 + m].iter().map(|s| float(s)).collect::<Result<_>>()?,
            total_load: float(fields[3 + m])?,
            cost: float(fields[4 + m])?,
            converged: match fields[5 + m] {
                "0" => false,
                "1" => true,
                other => return Err(bad(format!("converged flag `{other}`"))),
            },
        });
    }
    Ok(rows)
}

pub fn import_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let file = fs::File::open(path).map_err(|e| io_error(path, e))?;
    read_csv(BufReader::new(file))
}

/// Per-mode entry of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub mode: String,
    pub file: String,
    pub steps: usize,
    pub converged_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub t_prime: u64,
    pub t_double_prime: Option<u64>,
    pub alternative: Option<u64>,
}

impl Bounds {
    pub fn of(inst: &Instance) -> Self {
        Bounds {
            t_prime: dynamic::bound_t_prime(inst),
            t_double_prime: dynamic::bound_t_double_prime(inst).ok(),
            alternative: dynamic::bound_alternative(inst).ok(),
        }
    }
}

/// Sidecar JSON describing how a set of trace files was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub code_version: String,
    pub seed: u64,
    pub spec: SettingSpec,
    pub instance: Instance,
    pub format: TraceFormat,
    pub bounds: Bounds,
    pub static_profile: Option<String>,
    pub runs: Vec<ManifestRun>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Writes every trace of `report` into `dir` plus a static profile file and
/// `manifest.json`; returns the manifest.
pub fn export_report(
    report: &ExperimentReport,
    spec: &SettingSpec,
    dir: &Path,
    format: TraceFormat,
) -> Result<Manifest> {
    if report.is_empty() {
        return Err(GameError::EmptyTrace);
    }
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let stem = format!("setting-{}", report.setting);

    let static_profile = match &report.static_pass {
        Some(st) => {
            let name = format!("{stem}-static.json");
            write_json(&dir.join(&name), st)?;
            Some(name)
        }
        None => None,
    };

    let mut runs = Vec::new();
    for dynamic in report.dynamic_runs() {
        let mode = dynamic.run.mode().label();
        let name = format!("{stem}-{mode}.{}", format.extension());
        export_trace(&dynamic.run, &dir.join(&name), format)?;
        runs.push(ManifestRun {
            mode: mode.to_string(),
            file: name,
            steps: dynamic.run.trace.len(),
            converged_at: dynamic.run.converged_at,
        });
    }

    let manifest = Manifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: report.seed,
        spec: spec.clone(),
        instance: report.instance.clone(),
        format,
        bounds: Bounds::of(&report.instance),
        static_profile,
        runs,
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Path of the manifest written next to a single trace file.
pub fn sidecar_manifest_path(trace_path: &Path) -> PathBuf {
    let mut name = trace_path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    trace_path.with_file_name(name)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    write_json(path, manifest)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| GameError::TraceParse { line: e.line(), message: e.to_string() })
}
