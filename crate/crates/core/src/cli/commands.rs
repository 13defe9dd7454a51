//! The `run`, `sweep`, `compare` and `validate` operations.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::RunConfig;
use super::output::{
    num, read_steps, read_summary, write_summary, write_table, RunWriter, Summary, CONFIG_FILE,
    EFFICIENCY_FILE, SNAPSHOT_DIR, STEPS_FILE,
};
use super::CliError;
use crate::controller::{run, ControllerError, RunOutcome, StepSink, Tee, Termination, FINAL_TIME_SLACK};
use crate::estimators::squared_total;
use crate::mesh::Mesh;
use crate::problems::ProblemSpec;
use crate::reference::{
    ratio, reference_solve, time_averaged, FourierSeries, Keep, Oracle, TrueError, TrueErrorAccumulator,
};

/// What the true error of a run is measured against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleChoice {
    /// The problem's closed-form solution.
    Exact,
    /// Truncated Fourier series of the linear example; `tail` bounds the
    /// pointwise truncation error.
    Fourier { tail: f64 },
    /// A uniform backward Euler solve.
    Reference { elements: usize, steps: usize },
    /// The run itself: every index is absent.
    SelfRun,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyRow {
    pub n: usize,
    pub time: f64,
    /// `E^n`
    pub estimate: f64,
    pub true_error: TrueError,
    pub index: Option<f64>,
}

#[derive(Debug)]
pub struct RunReport {
    pub dir: PathBuf,
    pub outcome: RunOutcome,
    pub efficiency: Option<Vec<EfficiencyRow>>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        termination_exit_code(self.outcome.termination)
    }
}

pub fn termination_exit_code(t: Termination) -> i32 {
    match t {
        Termination::FinalTime => 0,
        Termination::StepUnderflow | Termination::Breakdown => 3,
        Termination::NewtonLimit | Termination::RefinementLimit => 5,
    }
}

fn map_controller(e: ControllerError) -> CliError {
    match e {
        ControllerError::InfeasibleInitialDatum { .. } => CliError::InfeasibleInitialDatum(e.to_string()),
        ControllerError::InvalidConfig(_)
        | ControllerError::InvalidTolerances(_)
        | ControllerError::DomainMismatch(..) => CliError::Config(e.to_string()),
        ControllerError::Sink(io) => CliError::Io(io),
        other => CliError::Run(other.to_string()),
    }
}

fn build_problem(config: &RunConfig) -> Result<ProblemSpec, CliError> {
    config
        .problem
        .build()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn make_oracle(choice: OracleChoice, problem: &ProblemSpec) -> Result<Option<Box<dyn Oracle>>, CliError> {
    Ok(match choice {
        OracleChoice::SelfRun => None,
        OracleChoice::Exact => {
            let exact = problem.exact().cloned().ok_or_else(|| {
                CliError::Config(format!("{} has no closed-form solution", problem.name()))
            })?;
            Some(Box::new(exact))
        }
        OracleChoice::Fourier { tail } => {
            if problem.name() != "example1" || problem.domain() != (0.0, 1.0) {
                return Err(CliError::Config("the Fourier oracle only exists for example1".into()));
            }
            Some(Box::new(FourierSeries::with_tail(problem.eps(), problem.final_time(), tail)))
        }
        OracleChoice::Reference { elements, steps } => {
            let traj = reference_solve(problem, elements, steps, 1e-11, Keep::All)
                .map_err(|e| CliError::Run(e.to_string()))?;
            Some(Box::new(traj))
        }
    })
}

/// Outcome, bytes of `steps.csv`, and efficiency rows when an oracle was given.
type Execution = (RunOutcome, Vec<u8>, Option<Vec<EfficiencyRow>>);

/// Runs once; `dir = None` keeps everything in memory.
fn execute(
    config: &RunConfig,
    dir: Option<&Path>,
    oracle: Option<OracleChoice>,
) -> Result<Execution, CliError> {
    let problem = build_problem(config)?;
    let tolerances = config.tolerances.resolve(problem.final_time())?;
    let (a, b) = problem.domain();
    let mesh = Mesh::uniform(a, b, config.mesh.elements).map_err(|e| CliError::Config(e.to_string()))?;

    let snapshots = dir.map(|d| d.join(SNAPSHOT_DIR));
    let mut writer = RunWriter::new(snapshots, config.output.snapshots.clone())?;
    let oracle_box = match oracle {
        Some(choice) => make_oracle(choice, &problem)?,
        None => None,
    };
    let mut accumulator = oracle_box
        .as_deref()
        .map(|o| TrueErrorAccumulator::new(o, problem.eps()));

    let outcome = {
        let mut sinks: Vec<&mut dyn StepSink> = vec![&mut writer];
        if let Some(acc) = accumulator.as_mut() {
            sinks.push(acc);
        }
        run(&problem, &config.controller, &tolerances, mesh, &mut Tee(sinks)).map_err(map_controller)?
    };
    let steps = writer.finish(outcome.time, &outcome.solution)?;

    let efficiency = match (oracle, accumulator) {
        (Some(OracleChoice::SelfRun), _) => Some(
            outcome
                .ledger
                .entries()
                .iter()
                .enumerate()
                .map(|(i, e)| EfficiencyRow {
                    n: i + 1,
                    time: e.time,
                    estimate: e.bound,
                    true_error: TrueError::default(),
                    index: None,
                })
                .collect(),
        ),
        (_, Some(acc)) => {
            if let Some(e) = acc.failure() {
                return Err(CliError::Run(format!("oracle evaluation failed: {e}")));
            }
            Some(
                outcome
                    .ledger
                    .entries()
                    .iter()
                    .zip(&acc.history)
                    .enumerate()
                    .map(|(i, (entry, (_, err)))| EfficiencyRow {
                        n: i + 1,
                        time: entry.time,
                        estimate: entry.bound,
                        true_error: *err,
                        index: ratio(entry.bound, err.total()),
                    })
                    .collect(),
            )
        }
        _ => None,
    };
    Ok((outcome, steps, efficiency))
}

fn summary(config: &RunConfig, outcome: &RunOutcome) -> Summary {
    Summary {
        problem: config.problem.name.clone(),
        eps: config.problem.eps,
        tolerances: outcome.tolerances,
        total_tolerance: outcome.tolerances.total(),
        local_budget: outcome.tolerances.local_budget(),
        initial_error: outcome.ledger.initial_error(),
        termination: outcome.termination,
        detail: outcome.detail.clone(),
        time_reached: outcome.time,
        steps: outcome.records.len(),
        bound: outcome.ledger.bound(),
        bound_sqrt: outcome.ledger.sqrt_bound(),
        final_elements: outcome.solution.mesh().num_elements(),
        wall_time_seconds: outcome.wall_time,
    }
}

fn write_efficiency(path: &Path, rows: &[EfficiencyRow]) -> Result<(), CliError> {
    let table: Vec<Vec<Option<String>>> = rows
        .iter()
        .map(|r| {
            vec![
                Some(r.n.to_string()),
                Some(num(r.time)),
                Some(num(r.estimate)),
                Some(num(r.true_error.total())),
                r.index.map(num),
            ]
        })
        .collect();
    write_table(path, &["n", "t_n", "estimate", "true_error", "index"], &table)
}

/// `run`: solves and writes `steps.csv`, snapshots, `summary.json` and the
/// normalized `config.toml` into `dir`.
pub fn run_to_dir(config: &RunConfig, dir: &Path, oracle: Option<OracleChoice>) -> Result<RunReport, CliError> {
    fs::create_dir_all(dir)?;
    let mut stored = config.clone();
    stored.output.directory = dir.to_path_buf();
    fs::write(dir.join(CONFIG_FILE), stored.to_toml())?;
    let (outcome, steps, efficiency) = execute(config, Some(dir), oracle)?;
    fs::write(dir.join(STEPS_FILE), steps)?;
    write_summary(dir, &summary(config, &outcome))?;
    if let Some(rows) = &efficiency {
        write_efficiency(&dir.join(EFFICIENCY_FILE), rows)?;
    }
    log::info!(
        "{} (ε = {:e}): {:?} at t = {} after {} steps, √E = {:.4e} (ε_T = {:.4e})",
        config.problem.name,
        config.problem.eps,
        outcome.termination,
        outcome.time,
        outcome.records.len(),
        outcome.ledger.sqrt_bound(),
        outcome.tolerances.total()
    );
    Ok(RunReport {
        dir: dir.to_path_buf(),
        outcome,
        efficiency,
    })
}

pub fn eps_dir_name(eps: f64) -> String {
    format!("eps_{eps:e}")
}

#[derive(Debug)]
pub struct SweepReport {
    pub runs: Vec<(f64, RunReport)>,
}

impl SweepReport {
    /// Worst exit code among the runs.
    pub fn exit_code(&self) -> i32 {
        self.runs.iter().map(|(_, r)| r.exit_code()).max().unwrap_or(0)
    }

    /// Time-averaged efficiency index per ε, where an oracle was available.
    pub fn averaged_indices(&self) -> Vec<(f64, Option<f64>)> {
        self.runs
            .iter()
            .map(|(eps, r)| {
                let avg = r.efficiency.as_ref().and_then(|rows| {
                    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|e| Some((e.time, e.index?))).collect();
                    time_averaged(&pts)
                });
                (*eps, avg)
            })
            .collect()
    }
}

/// `sweep`: one run per ε in `<dir>/eps_<ε>/`, in parallel, plus
/// `<dir>/efficiency.csv` when the problem has a closed-form solution.
pub fn sweep(config: &RunConfig, eps_list: &[f64], dir: &Path) -> Result<SweepReport, CliError> {
    if eps_list.is_empty() {
        return Err(CliError::Config("sweep needs at least one ε".into()));
    }
    fs::create_dir_all(dir)?;
    let has_exact = build_problem(config)?.exact().is_some();
    let oracle = has_exact.then_some(OracleChoice::Exact);
    let results: Vec<Result<RunReport, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = eps_list
            .iter()
            .map(|&eps| {
                let mut cfg = config.clone();
                cfg.problem.eps = eps;
                let sub = dir.join(eps_dir_name(eps));
                scope.spawn(move || run_to_dir(&cfg, &sub, oracle))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Run("sweep worker panicked".into()))))
            .collect()
    });
    let mut runs = Vec::with_capacity(results.len());
    for (eps, r) in eps_list.iter().zip(results) {
        runs.push((*eps, r?));
    }
    if has_exact {
        let mut table = Vec::new();
        for (eps, report) in &runs {
            for row in report.efficiency.iter().flatten() {
                table.push(vec![Some(num(*eps)), Some(num(row.time)), row.index.map(num)]);
            }
        }
        write_table(&dir.join(EFFICIENCY_FILE), &["eps", "t_n", "index"], &table)?;
    }
    Ok(SweepReport { runs })
}

/// `compare`: re-runs the stored configuration, insists on identical
/// `steps.csv`, and writes the efficiency series against `oracle`.
pub fn compare(run_dir: &Path, oracle: OracleChoice) -> Result<Vec<EfficiencyRow>, CliError> {
    let config_path = run_dir.join(CONFIG_FILE);
    if !config_path.is_file() {
        return Err(CliError::Validation(format!("{} is missing", config_path.display())));
    }
    let config = RunConfig::load(&config_path).map_err(|e| CliError::Validation(e.to_string()))?;
    let stored = fs::read(run_dir.join(STEPS_FILE))
        .map_err(|e| CliError::Validation(format!("cannot read {STEPS_FILE}: {e}")))?;
    let (_, steps, rows) = execute(&config, None, Some(oracle))?;
    if steps != stored {
        return Err(CliError::Validation(format!(
            "{} does not match a fresh run of {}",
            STEPS_FILE,
            config_path.display()
        )));
    }
    let rows = rows.unwrap_or_default();
    write_efficiency(&run_dir.join(EFFICIENCY_FILE), &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub steps: usize,
    /// Largest `(η² + ϑ² + Υ²) / budget` over the steps.
    pub worst_ratio: f64,
    pub bound_sqrt: f64,
    pub total_tolerance: f64,
    pub complete: bool,
}

/// `validate`: checks `steps.csv` against `summary.json` only.
///
/// Every step must pass the acceptance test, the `E_sqrt` column must be the
/// running bound recomputed from `η₀` and the rows, times must increase with
/// `t_n = t_{n-1} + k_n`, and a completed run must end at `T` with
/// `√E^M ≤ ε_T`.
pub fn validate(run_dir: &Path) -> Result<Validation, CliError> {
    let summary = read_summary(run_dir)?;
    let rows = read_steps(&run_dir.join(STEPS_FILE))?;
    let budget = summary.tolerances.local_budget();
    let fail = |msg: String| Err(CliError::Validation(msg));

    let mut bound = summary.initial_error * summary.initial_error;
    let mut time = 0.0;
    let mut worst = 0.0f64;
    for (i, r) in rows.iter().enumerate() {
        if r.n != i + 1 {
            return fail(format!("row {} has n = {}", i + 1, r.n));
        }
        let total = squared_total(r.eta, r.theta, r.upsilon);
        worst = worst.max(total / budget);
        if !(total <= budget) {
            return fail(format!("step {}: η²+ϑ²+Υ² = {total:e} exceeds {budget:e}", r.n));
        }
        if !(r.k_n > 0.0 && r.t_n > time) {
            return fail(format!("step {}: time does not advance", r.n));
        }
        let expected = time + r.k_n;
        let last_step = i + 1 == rows.len();
        if r.t_n != expected && !(last_step && (r.t_n - expected).abs() <= FINAL_TIME_SLACK * r.t_n) {
            return fail(format!("step {}: t_n = {} but t_(n-1) + k_n = {expected}", r.n, r.t_n));
        }
        bound += r.k_n * total;
        if bound.sqrt() != r.e_sqrt {
            return fail(format!("step {}: E_sqrt {} differs from recomputed {}", r.n, r.e_sqrt, bound.sqrt()));
        }
        time = r.t_n;
    }
    if rows.len() != summary.steps {
        return fail(format!("summary lists {} steps, csv has {}", summary.steps, rows.len()));
    }
    let complete = summary.termination == Termination::FinalTime;
    if complete {
        if time != summary.tolerances.final_time {
            return fail(format!("run marked complete but ends at t = {time}"));
        }
        if !(bound.sqrt() <= summary.total_tolerance) {
            return fail(format!("√E^M = {:e} exceeds ε_T = {:e}", bound.sqrt(), summary.total_tolerance));
        }
    }
    Ok(Validation {
        steps: rows.len(),
        worst_ratio: worst,
        bound_sqrt: bound.sqrt(),
        total_tolerance: summary.total_tolerance,
        complete,
    })
}
