//! CSV and JSON artifacts of a run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::controller::{StepRecord, StepSink, Termination, Tolerances};
use crate::fem::FeFunction;

pub const STEPS_FILE: &str = "steps.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";
pub const EFFICIENCY_FILE: &str = "efficiency.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

pub const STEPS_HEADER: [&str; 10] = [
    "n",
    "t_n",
    "k_n",
    "newton_iters",
    "refinements",
    "elements",
    "eta",
    "theta",
    "upsilon",
    "E_sqrt",
];

/// 17 significant digits, enough to read back the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

/// Collects `steps.csv` in memory and writes snapshots as the run goes.
pub struct RunWriter {
    steps: csv::Writer<Vec<u8>>,
    snapshot_dir: Option<PathBuf>,
    pending: Vec<f64>,
    last_snapshot: Option<f64>,
}

impl RunWriter {
    /// `snapshot_dir = None` disables snapshots.
    pub fn new(snapshot_dir: Option<PathBuf>, mut times: Vec<f64>) -> Result<Self, CliError> {
        if let Some(dir) = &snapshot_dir {
            fs::create_dir_all(dir)?;
        }
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut steps = csv::Writer::from_writer(Vec::new());
        steps.write_record(STEPS_HEADER).map_err(csv_err)?;
        Ok(RunWriter {
            steps,
            snapshot_dir,
            pending: times,
            last_snapshot: None,
        })
    }

    fn snapshot(&mut self, time: f64, u: &FeFunction) -> std::io::Result<()> {
        let Some(dir) = &self.snapshot_dir else {
            return Ok(());
        };
        if self.last_snapshot == Some(time) {
            return Ok(());
        }
        let mut w = csv::Writer::from_path(dir.join(format!("t_{time:.9}.csv")))?;
        w.write_record(["x", "u"])?;
        for (x, v) in u.mesh().nodes().iter().zip(u.values()) {
            w.write_record([num(*x), num(*v)])?;
        }
        w.flush()?;
        self.last_snapshot = Some(time);
        Ok(())
    }

    /// Writes the final snapshot and returns the bytes of `steps.csv`.
    pub fn finish(mut self, time: f64, solution: &FeFunction) -> Result<Vec<u8>, CliError> {
        self.snapshot(time, solution)?;
        self.steps.into_inner().map_err(|e| CliError::Io(e.into_error()))
    }
}

pub fn step_row(r: &StepRecord) -> [String; 10] {
    [
        r.n.to_string(),
        num(r.time),
        num(r.step),
        r.newton_iterations.to_string(),
        r.refinements.to_string(),
        r.elements.to_string(),
        num(r.eta),
        num(r.theta),
        num(r.upsilon),
        num(r.bound_sqrt),
    ]
}

impl StepSink for RunWriter {
    fn on_start(&mut self, initial: &FeFunction) -> std::io::Result<()> {
        self.snapshot(0.0, initial)?;
        self.pending.retain(|&t| t > 0.0);
        Ok(())
    }

    fn on_accept(&mut self, record: &StepRecord, _: &FeFunction, current: &FeFunction) -> std::io::Result<()> {
        self.steps.write_record(step_row(record))?;
        if self.pending.first().is_some_and(|&t| record.time >= t) {
            self.pending.retain(|&t| t > record.time);
            self.snapshot(record.time, current)?;
        }
        Ok(())
    }
}

/// One row of `steps.csv`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct StepRow {
    pub n: usize,
    pub t_n: f64,
    pub k_n: f64,
    pub newton_iters: usize,
    pub refinements: usize,
    pub elements: usize,
    pub eta: f64,
    pub theta: f64,
    pub upsilon: f64,
    #[serde(rename = "E_sqrt")]
    pub e_sqrt: f64,
}

pub fn read_steps(path: &Path) -> Result<Vec<StepRow>, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    if header.iter().ne(STEPS_HEADER) {
        return Err(CliError::Validation(format!("{}: unexpected header", path.display())));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<StepRow>, _>>()
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub problem: String,
    pub eps: f64,
    pub tolerances: Tolerances,
    /// `ε_T`
    pub total_tolerance: f64,
    /// `ε²_loc,η + ε²_loc,ϑ + ε²_loc,Υ`
    pub local_budget: f64,
    /// `η₀`
    pub initial_error: f64,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub time_reached: f64,
    pub steps: usize,
    /// `E^M`
    pub bound: f64,
    pub bound_sqrt: f64,
    pub final_elements: usize,
    pub wall_time_seconds: f64,
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(summary).expect("summary serializes");
    fs::write(dir.join(SUMMARY_FILE), text + "\n")?;
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<Summary, CliError> {
    let path = dir.join(SUMMARY_FILE);
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Writes `(columns, rows)` as CSV; `None` cells stay empty.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<Option<String>>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|c| c.as_deref().unwrap_or("")))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
