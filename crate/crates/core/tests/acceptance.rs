//! Acceptance gate: runs every criterion in order and prints one PASS/FAIL
//! line for each. Exits with status 1 if any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod common;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use parabolic_adapt::cli::commands::{eps_dir_name, run_to_dir, sweep, validate, RunReport};
use parabolic_adapt::cli::config::RunConfig;
use parabolic_adapt::cli::output::{read_steps, read_summary, StepRow};
use parabolic_adapt::controller::Termination;
use parabolic_adapt::reference::time_averaged;
use tempfile::TempDir;

type Verdict = Result<String, String>;

fn config(name: &str) -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Least-squares slope of `log √E^n` against `log t_n` over `lo ≤ t_n ≤ hi`.
fn growth_slope(steps: &[StepRow], lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = steps
        .iter()
        .filter(|s| s.t_n >= lo && s.t_n <= hi && s.e_sqrt > 0.0)
        .map(|s| (s.t_n.ln(), s.e_sqrt.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

fn check(ok: bool, pass: String, fail: String) -> Verdict {
    if ok {
        Ok(pass)
    } else {
        Err(fail)
    }
}

struct Gate {
    root: TempDir,
    /// Run directories of criteria 1-3, for the certificate and determinism checks.
    runs: Vec<PathBuf>,
}

impl Gate {
    fn efficiency(&mut self) -> Verdict {
        let cfg = config("example1.toml");
        let eps_list = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
        let dir = self.root.path().join("example1");
        let started = Instant::now();
        let report = sweep(&cfg, &eps_list, &dir).map_err(|e| e.to_string())?;
        let elapsed = started.elapsed().as_secs_f64();
        let mut averages = Vec::new();
        for (eps, run) in &report.runs {
            self.runs.push(run.dir.clone());
            if run.outcome.termination != Termination::FinalTime {
                return Err(format!("eps = {eps:e} stopped with {:?}", run.outcome.termination));
            }
            let rows = run.efficiency.as_ref().ok_or("no efficiency rows")?;
            let mut indexed = Vec::new();
            for row in rows {
                match row.index {
                    Some(i) if i.is_finite() && (0.1..=1e3).contains(&i) => indexed.push((row.time, i)),
                    other => return Err(format!("eps = {eps:e}, n = {}: index {other:?}", row.n)),
                }
            }
            averages.push(time_averaged(&indexed).ok_or("empty run")?);
        }
        let max = averages.iter().copied().fold(f64::MIN, f64::max);
        let min = averages.iter().copied().fold(f64::MAX, f64::min);
        let spread = max / min;
        let shown: Vec<String> = averages.iter().map(|a| format!("{a:.2}")).collect();
        check(
            spread <= 10.0 && elapsed < 300.0,
            format!("time-averaged indices [{}], max/min {spread:.2}, {elapsed:.1} s", shown.join(", ")),
            format!("max/min {spread:.2} (limit 10) in {elapsed:.1} s (limit 300)"),
        )
    }

    fn single(&mut self, name: &str, file: &str) -> Result<(RunReport, f64), String> {
        let cfg = config(file);
        let dir = self.root.path().join(name);
        let started = Instant::now();
        let report = run_to_dir(&cfg, &dir, None).map_err(|e| e.to_string())?;
        self.runs.push(dir);
        Ok((report, started.elapsed().as_secs_f64()))
    }

    fn growth(&mut self) -> Verdict {
        let (report, elapsed) = self.single("example2", "example2.toml")?;
        if report.outcome.termination != Termination::FinalTime {
            return Err(format!("stopped with {:?}", report.outcome.termination));
        }
        let steps = read_steps(&report.dir.join("steps.csv")).map_err(|e| e.to_string())?;
        let slope = growth_slope(&steps, 0.5, 2.0).ok_or("too few steps in [0.5, 2]")?;
        let mesh = report.outcome.solution.mesh();
        let near = |lo: f64, hi: f64| {
            (0..mesh.num_elements())
                .filter(|&e| {
                    let (l, r) = mesh.element(e);
                    r > lo && l < hi
                })
                .map(|e| mesh.element_len(e))
                .fold(f64::INFINITY, f64::min)
        };
        let (a, b) = mesh.bounds();
        let limit = 10.0 * 1e-5f64.sqrt();
        let (left, right) = (near(a, a + 0.05), near(b - 0.05, b));
        check(
            (slope - 0.5).abs() <= 0.1 && left <= limit && right <= limit && elapsed < 180.0,
            format!("slope {slope:.3}, boundary elements {left:.2e} / {right:.2e} (limit {limit:.2e}), {elapsed:.1} s"),
            format!("slope {slope:.3}, boundary elements {left:.2e} / {right:.2e} (limit {limit:.2e}), {elapsed:.1} s"),
        )
    }

    fn spike(&mut self) -> Verdict {
        let (report, elapsed) = self.single("example3", "example3.toml")?;
        let termination = report.outcome.termination;
        if !matches!(termination, Termination::FinalTime | Termination::StepUnderflow) {
            return Err(format!("stopped with {termination:?}"));
        }
        // the snapshot written at the last accepted time
        let t_m = report.outcome.time;
        let snapshot = report.dir.join("snapshots").join(format!("t_{t_m:.9}.csv"));
        let mut reader = csv::Reader::from_path(&snapshot).map_err(|e| format!("{}: {e}", snapshot.display()))?;
        let (mut argmax, mut max) = (f64::NAN, f64::MIN);
        for rec in reader.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let (x, u): (f64, f64) = (rec[0].parse().unwrap(), rec[1].parse().unwrap());
            if u > max {
                (argmax, max) = (x, u);
            }
        }
        let steps = read_steps(&report.dir.join("steps.csv")).map_err(|e| e.to_string())?;
        let slope = growth_slope(&steps, 0.1 * t_m, 0.9 * t_m).ok_or("too few steps in the window")?;
        check(
            (1.8..=2.2).contains(&argmax) && (slope - 0.5).abs() <= 0.15 && elapsed < 180.0,
            format!("{termination:?} at t = {t_m:.4}, max {max:.3e} at x = {argmax:.4}, slope {slope:.3}, {elapsed:.1} s"),
            format!("argmax x = {argmax:.4}, slope {slope:.3}, {elapsed:.1} s"),
        )
    }

    fn oracles(&mut self) -> Verdict {
        let coarse = common::oracle_gap(512, 8192);
        let fine = common::oracle_gap(1024, 16384);
        let ratio = fine / coarse;
        check(
            coarse <= 1e-4 && (ratio - 0.5).abs() <= 0.15,
            format!("gap {coarse:.3e} at 512 x 8192, {fine:.3e} at 1024 x 16384, ratio {ratio:.3}"),
            format!("gap {coarse:.3e} (limit 1e-4), ratio {ratio:.3} (want 0.5 within 30%)"),
        )
    }

    fn certificates(&mut self) -> Verdict {
        let mut total_steps = 0;
        let mut worst = 0.0f64;
        for dir in &self.runs {
            let summary = read_summary(dir).map_err(|e| e.to_string())?;
            let steps = read_steps(&dir.join("steps.csv")).map_err(|e| e.to_string())?;
            for s in &steps {
                let total = s.eta * s.eta + s.theta * s.theta + s.upsilon * s.upsilon;
                if !(total <= summary.local_budget) {
                    return Err(format!("{}: step {} fails {total:e} <= {:e}", dir.display(), s.n, summary.local_budget));
                }
                worst = worst.max(total / summary.local_budget);
            }
            let v = validate(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            if summary.termination.is_complete() && !(v.bound_sqrt <= v.total_tolerance) {
                return Err(format!("{}: sqrt(E^M) = {:e} > {:e}", dir.display(), v.bound_sqrt, v.total_tolerance));
            }
            total_steps += steps.len();
        }
        Ok(format!("{} runs, {total_steps} accepted steps, worst ratio {worst:.4}", self.runs.len()))
    }

    fn affine(&mut self) -> Verdict {
        let detail = common::check_affine_newton(6, 50)?;
        for dir in &self.runs[..5] {
            let steps = read_steps(&dir.join("steps.csv")).map_err(|e| e.to_string())?;
            if let Some(s) = steps.iter().find(|s| s.upsilon != 0.0) {
                return Err(format!("{}: upsilon {:e} at step {}", dir.display(), s.upsilon, s.n));
            }
        }
        Ok(format!("{detail}; Υ = 0 on every Example 1 step"))
    }

    fn determinism(&mut self) -> Verdict {
        let mut compared = 0;
        // a single run against the same ε computed inside the threaded sweep
        let mut cfg = config("example1.toml");
        cfg.problem.eps = 1e-1;
        let again = self.root.path().join("repeat-example1");
        run_to_dir(&cfg, &again, None).map_err(|e| e.to_string())?;
        let sweep_dir = self.root.path().join("example1").join(eps_dir_name(1e-1));
        let mut pairs = vec![(sweep_dir, again)];
        for (name, file) in [("example2", "example2.toml"), ("example3", "example3.toml")] {
            let again = self.root.path().join(format!("repeat-{name}"));
            run_to_dir(&config(file), &again, None).map_err(|e| e.to_string())?;
            pairs.push((self.root.path().join(name), again));
        }
        for (a, b) in pairs {
            let (x, y) = (fs::read(a.join("steps.csv")), fs::read(b.join("steps.csv")));
            let (x, y) = (x.map_err(|e| e.to_string())?, y.map_err(|e| e.to_string())?);
            if x != y {
                return Err(format!("{} and {} differ", a.display(), b.display()));
            }
            compared += 1;
        }
        Ok(format!("{compared} repeated runs byte-identical"))
    }
}

fn main() {
    let mut gate = Gate {
        root: TempDir::new().expect("temporary directory"),
        runs: Vec::new(),
    };
    type Criterion = fn(&mut Gate) -> Verdict;
    let criteria: [(&str, Criterion); 9] = [
        ("eps-robust efficiency (Example 1)", Gate::efficiency),
        ("growth slope and boundary layers (Example 2)", Gate::growth),
        ("spike resolution (Example 3)", Gate::spike),
        ("Fourier series vs reference solver", Gate::oracles),
        ("step certificates from CSV", Gate::certificates),
        ("affine Newton exactness", Gate::affine),
        ("residual decomposition identity", |_| common::check_decomposition(7, 20)),
        ("assembly and quadrature oracles", |_| {
            let a = common::check_uniform_assembly()?;
            let b = common::check_gauss_monomials(8)?;
            let c = common::check_jacobian_fd(9, 40)?;
            Ok(format!("{a}; Gauss-3 {b}; Jacobian {c}"))
        }),
        ("byte-identical steps.csv", Gate::determinism),
    ];
    let mut failed = 0;
    for (i, (name, criterion)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(|| criterion(&mut gate)))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                Err(format!("panicked: {msg}"))
            });
        match verdict {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
