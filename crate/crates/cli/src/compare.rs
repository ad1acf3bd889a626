//! Joins the metrics of several runs into one table.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::run::{METRICS_FILE, RUN_FILE};
use crate::CliError;

#[derive(Deserialize)]
struct RunHeader {
    kernel: String,
    domain: String,
    method: String,
}

#[derive(Debug, Deserialize)]
struct MetricsRow {
    n: usize,
    max_power: String,
    cond: String,
    status: String,
}

struct Run {
    label: String,
    header: RunHeader,
    rows: Vec<MetricsRow>,
}

/// Comparison table keyed by `(kernel, domain, n)` with one column block per run.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Comparison {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn load(dir: &Path) -> Result<(RunHeader, Vec<MetricsRow>), CliError> {
    let path = dir.join(RUN_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
    let header: RunHeader = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let path = dir.join(METRICS_FILE);
    let mut r = csv::Reader::from_path(&path).map_err(|e| CliError::Csv { path: path.clone(), source: e })?;
    let rows = r
        .deserialize()
        .collect::<Result<Vec<MetricsRow>, _>>()
        .map_err(|e| CliError::Csv { path: path.clone(), source: e })?;
    Ok((header, rows))
}

/// Outer join of the metrics in `dirs`. Runs are labelled by method; repeated
/// methods are told apart by directory name.
pub fn compare(dirs: &[PathBuf]) -> Result<Comparison, CliError> {
    let gaps: Vec<PathBuf> = dirs
        .iter()
        .flat_map(|d| [d.join(RUN_FILE), d.join(METRICS_FILE)])
        .filter(|p| !p.is_file())
        .collect();
    if !gaps.is_empty() {
        return Err(CliError::MissingArtifacts(gaps));
    }

    let mut runs = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let (header, rows) = load(dir)?;
        runs.push(Run {
            label: header.method.clone(),
            header,
            rows,
        });
    }
    let repeated: Vec<bool> = runs
        .iter()
        .map(|r| runs.iter().filter(|o| o.header.method == r.header.method).count() > 1)
        .collect();
    for i in 0..runs.len() {
        if repeated[i] {
            let name = dirs[i].file_name().map_or_else(|| dirs[i].display().to_string(), |s| s.to_string_lossy().into_owned());
            runs[i].label = format!("{}@{name}", runs[i].header.method);
        }
    }

    let mut keys = BTreeSet::new();
    let mut cells: BTreeMap<(String, String, usize), Vec<Option<[String; 3]>>> = BTreeMap::new();
    for (i, run) in runs.iter().enumerate() {
        for row in &run.rows {
            let key = (run.header.kernel.clone(), run.header.domain.clone(), row.n);
            keys.insert(key.clone());
            let slot = cells.entry(key).or_insert_with(|| vec![None; runs.len()]);
            slot[i] = Some([row.max_power.clone(), row.cond.clone(), row.status.clone()]);
        }
    }

    let mut header = vec!["kernel".to_string(), "domain".into(), "n".into()];
    for run in &runs {
        for col in ["max_power", "cond", "status"] {
            header.push(format!("{}_{col}", run.label));
        }
    }
    let rows = keys
        .into_iter()
        .map(|key| {
            let mut row = vec![key.0.clone(), key.1.clone(), key.2.to_string()];
            for cell in &cells[&key] {
                match cell {
                    Some(c) => row.extend(c.iter().cloned()),
                    None => row.extend(std::iter::repeat_n(String::new(), 3)),
                }
            }
            row
        })
        .collect();
    Ok(Comparison { header, rows })
}
