//! Point generation sweeps and their artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use fekete_core::design::{DesignProblem, Weights};
use fekete_core::interpolation::{p_greedy, PointSet};
use fekete_core::selection::{algorithm1, algorithm2, diagnostics_for, Diagnostics, SelectionOptions, SelectionResult, SolveSummary, Timings};
use fekete_core::socp::build_program;
use fekete_core::solver::Backend;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig, MethodConfig};
use crate::CliError;

pub const POINTS_FILE: &str = "points.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const RUN_FILE: &str = "run.json";

/// Command-line overrides applied on top of a configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub backend: Option<String>,
    pub tol: Option<f64>,
    pub output: Option<PathBuf>,
    pub dump_socp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Fewer local maxima than requested points.
    Failed,
    /// The solver or a numerical step broke down.
    Error,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Failed => "failed",
            RowStatus::Error => "error",
        }
    }
}

/// One `n` of a sweep or one stage of a nested run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub n: usize,
    pub status: RowStatus,
    pub chosen: Vec<usize>,
    pub diagnostics: Diagnostics,
    pub timings: Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_maxima: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plateau: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Weights>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Record {
    fn from_selection(r: SelectionResult) -> Self {
        Record {
            n: r.n,
            status: if r.succeeded() { RowStatus::Ok } else { RowStatus::Failed },
            chosen: r.chosen,
            diagnostics: r.diagnostics,
            timings: r.timings,
            local_maxima: Some(r.local_maxima),
            plateau: Some(r.plateau),
            solve: r.solve,
            weights: Some(r.weights),
            error: None,
        }
    }

    fn from_error(n: usize, msg: String) -> Self {
        Record {
            n,
            status: RowStatus::Error,
            chosen: Vec::new(),
            diagnostics: Diagnostics::default(),
            timings: Timings::default(),
            local_maxima: None,
            plateau: None,
            solve: None,
            weights: None,
            error: Some(msg),
        }
    }
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub kernel: String,
    pub domain: String,
    pub method: String,
    pub candidates: usize,
    pub backend: String,
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
}

impl RunReport {
    /// 0 on full success, 2 if any selection failed, 1 if anything broke down.
    pub fn exit_code(&self) -> i32 {
        if self.records.iter().any(|r| r.status == RowStatus::Error) {
            1
        } else if self.records.iter().any(|r| r.status == RowStatus::Failed) {
            2
        } else {
            0
        }
    }
}

fn backend_label(b: &Backend) -> String {
    match b {
        Backend::Builtin => "builtin".into(),
        Backend::External(cmd) => format!("external:{cmd}"),
    }
}

/// Loads, validates and runs a configuration, writing artifacts into its output
/// directory. Nothing is written when the configuration is invalid.
pub fn run_config(path: &Path, overrides: &Overrides) -> Result<RunReport, CliError> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(dir) = &overrides.output {
        config.output = dir.clone();
    }
    if let Some(tol) = overrides.tol {
        config.solver.tol = tol;
    }
    let env_backend = std::env::var("FEKETE_BACKEND").ok().filter(|s| !s.is_empty());
    if let Some(b) = overrides.backend.clone().or(env_backend) {
        config.solver.backend = b;
    }
    let exp = config.prepare()?;
    run_experiment(&exp, overrides.dump_socp)
}

pub fn run_experiment(exp: &Experiment, dump_socp: bool) -> Result<RunReport, CliError> {
    let cfg = &exp.config;
    let out = &cfg.output;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io {
        path: out.clone(),
        source: e,
    })?;
    let opts = SelectionOptions {
        solver: cfg.solver.options(),
        backend: exp.backend.clone(),
        tau: cfg.tau,
    };
    let kernel = exp.kernel.as_ref();
    let cands = &exp.candidates;

    let mut records = Vec::new();
    match &cfg.method {
        MethodConfig::Algorithm1 {} => {
            for &n in cfg.totals() {
                let rec = match algorithm1(kernel, cands, n, &opts) {
                    Ok(r) => Record::from_selection(r),
                    Err(e) => Record::from_error(n, format!("n = {n}: {e}")),
                };
                report_row(&rec);
                records.push(rec);
            }
        }
        MethodConfig::Algorithm2 { schedule } => match algorithm2(kernel, cands, schedule, &opts) {
            Ok(stages) => {
                for rec in stages.into_iter().map(Record::from_selection) {
                    report_row(&rec);
                    records.push(rec);
                }
            }
            Err(e) => {
                let rec = Record::from_error(schedule[0], e.to_string());
                report_row(&rec);
                records.push(rec);
            }
        },
        MethodConfig::PGreedy {} => {
            for &n in cfg.totals() {
                let rec = greedy_record(exp, n);
                report_row(&rec);
                records.push(rec);
            }
        }
    }

    let report = RunReport {
        kernel: cfg.kernel.to_string(),
        domain: cfg.domain.to_string(),
        method: cfg.method.to_string(),
        candidates: cands.len(),
        backend: backend_label(&exp.backend),
        config: cfg.clone(),
        records,
    };
    write_artifacts(exp, &report)?;
    if dump_socp {
        dump_programs(exp, &report)?;
    }
    Ok(report)
}

fn report_row(rec: &Record) {
    match rec.status {
        RowStatus::Ok => {}
        RowStatus::Failed => eprintln!(
            "n = {}: only {} local maxima; selection failed",
            rec.n,
            rec.local_maxima.as_ref().map_or(0, Vec::len)
        ),
        RowStatus::Error => eprintln!("{}", rec.error.as_deref().unwrap_or("unknown error")),
    }
    if rec.plateau == Some(true) {
        eprintln!("n = {}: more than half of the candidates are local maxima", rec.n);
    }
}

fn greedy_record(exp: &Experiment, n: usize) -> Record {
    let kernel = exp.kernel.as_ref();
    let start = Instant::now();
    let chosen = match p_greedy(kernel, &exp.candidates, n) {
        Ok(c) => c,
        Err(e) => return Record::from_error(n, format!("n = {n}: {e}")),
    };
    let solve_s = start.elapsed().as_secs_f64();
    let diagnostics = PointSet::from_indices(&exp.candidates, &chosen).and_then(|pts| diagnostics_for(kernel, &exp.candidates, &pts));
    match diagnostics {
        Ok(diagnostics) => Record {
            n,
            status: RowStatus::Ok,
            chosen,
            diagnostics,
            timings: Timings { build_s: 0.0, solve_s },
            local_maxima: None,
            plateau: None,
            solve: None,
            weights: None,
            error: None,
        },
        Err(e) => Record::from_error(n, format!("n = {n}: {e}")),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_artifacts(exp: &Experiment, report: &RunReport) -> Result<(), CliError> {
    let out = &exp.config.output;
    let dim = exp.config.domain.domain().dim();

    let path = out.join(POINTS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    let mut header = vec!["n".to_string(), "rank".into(), "index".into()];
    header.extend((1..=dim).map(|d| format!("x{d}")));
    w.write_record(&header).map_err(csv_err(&path))?;
    for rec in &report.records {
        for (rank, &j) in rec.chosen.iter().enumerate() {
            let mut row = vec![rec.n.to_string(), (rank + 1).to_string(), j.to_string()];
            row.extend(exp.candidates.points[j].iter().map(f64::to_string));
            w.write_record(&row).map_err(csv_err(&path))?;
        }
    }
    w.flush().map_err(io_err(&path))?;

    let path = out.join(METRICS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["n", "max_power", "cond", "status"]).map_err(csv_err(&path))?;
    for rec in &report.records {
        w.write_record([
            rec.n.to_string(),
            opt_cell(rec.diagnostics.max_power),
            opt_cell(rec.diagnostics.condition_number),
            rec.status.as_str().to_string(),
        ])
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = out.join(TIMINGS_FILE);
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["n", "build_s", "solve_s"]).map_err(csv_err(&path))?;
    for rec in &report.records {
        w.write_record([rec.n.to_string(), rec.timings.build_s.to_string(), rec.timings.solve_s.to_string()])
            .map_err(csv_err(&path))?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = out.join(RUN_FILE);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut file = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut file, report).map_err(|e| CliError::Io {
        path: path.clone(),
        source: e.into(),
    })?;
    file.write_all(b"\n").and_then(|_| file.flush()).map_err(io_err(&path))?;
    Ok(())
}

/// Writes the cone program solved for each `n` as `socp_n<n>.json`. Nested runs pin
/// the previous stage's points.
fn dump_programs(exp: &Experiment, report: &RunReport) -> Result<(), CliError> {
    if matches!(exp.config.method, MethodConfig::PGreedy {}) {
        return Ok(());
    }
    let nested = matches!(exp.config.method, MethodConfig::Algorithm2 { .. });
    let mut pinned: Vec<usize> = Vec::new();
    for rec in &report.records {
        let frozen = if nested { pinned.clone() } else { Vec::new() };
        let problem = DesignProblem::from_candidates(exp.kernel.as_ref(), &exp.candidates, rec.n, rec.n, frozen)?;
        if rec.n >= 2 {
            let (_, prog) = build_program(&problem.orthonormalized())?;
            let path = exp.config.output.join(format!("socp_n{}.json", rec.n));
            std::fs::write(&path, prog.to_json()).map_err(io_err(&path))?;
        }
        pinned = rec.chosen.clone();
    }
    Ok(())
}
