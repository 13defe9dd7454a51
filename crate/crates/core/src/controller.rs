//! The fully adaptive Newton-Galerkin time stepping loop.
//!
//! Each time step carries the previous mesh forward, optionally coarsens it,
//! and then iterates solve/estimate until the combined indicator test passes.
//! A failing test refines the mesh when the spatial indicator dominates,
//! shrinks the step when the temporal indicator beats the nonlinear one, and
//! otherwise performs another Newton iteration.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{evaluate, Candidate, ErrorLedger, EstimatorError, IndicatorSet};
use crate::fem::{common_refinement, l2_error_by_element, l2_project, l2_project_fn, FeFunction, FemError};
use crate::mesh::{ElementId, Mesh, MeshError};
use crate::newton::{newton_step, NewtonError, NewtonState};
use crate::problems::ProblemSpec;
use crate::quadrature::GaussLegendre;

/// Relative slack of the final-time test.
pub const FINAL_TIME_SLACK: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("invalid controller configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),
    #[error("initial datum cannot be resolved to {tolerance:e}: projection error {error:e} after {rounds} refinement rounds")]
    InfeasibleInitialDatum {
        error: f64,
        tolerance: f64,
        rounds: usize,
    },
    #[error("initial mesh covers ({0}, {1}), problem domain differs")]
    DomainMismatch(f64, f64),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("step sink failed: {0}")]
    Sink(#[from] std::io::Error),
}

/// Split of the total tolerance `ε_T` with `ε_T² = ε₀² + T (ε²_η + ε²_ϑ + ε²_Υ)`
/// where the stored `ε_η, ε_ϑ, ε_Υ` are the local (per unit time) values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub initial: f64,
    pub local_eta: f64,
    pub local_theta: f64,
    pub local_upsilon: f64,
    pub final_time: f64,
}

impl Tolerances {
    pub fn from_local(
        initial: f64,
        local_eta: f64,
        local_theta: f64,
        local_upsilon: f64,
        final_time: f64,
    ) -> Result<Self, ControllerError> {
        let tol = Tolerances {
            initial,
            local_eta,
            local_theta,
            local_upsilon,
            final_time,
        };
        tol.validate()?;
        Ok(tol)
    }

    /// Equal split of `ε_T² - ε₀²` among the three indicator families.
    pub fn split_equal(total: f64, initial: f64, final_time: f64) -> Result<Self, ControllerError> {
        if !(total > initial && initial > 0.0) {
            return Err(ControllerError::InvalidTolerances(format!(
                "need 0 < ε₀ < ε_T, got ε₀ = {initial}, ε_T = {total}"
            )));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(ControllerError::InvalidTolerances(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        let each = ((total * total - initial * initial) / 3.0).sqrt();
        let local = each / final_time.sqrt();
        Self::from_local(initial, local, local, local, final_time)
    }

    fn validate(&self) -> Result<(), ControllerError> {
        let values = [
            self.initial,
            self.local_eta,
            self.local_theta,
            self.local_upsilon,
            self.final_time,
        ];
        if values.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(ControllerError::InvalidTolerances(format!(
                "all tolerances and T must be positive and finite: {self:?}"
            )))
        }
    }

    /// `ε²_loc,η + ε²_loc,ϑ + ε²_loc,Υ`, the right-hand side of the step test.
    pub fn local_budget(&self) -> f64 {
        self.local_eta * self.local_eta
            + self.local_theta * self.local_theta
            + self.local_upsilon * self.local_upsilon
    }

    pub fn eta(&self) -> f64 {
        self.local_eta * self.final_time.sqrt()
    }

    pub fn theta(&self) -> f64 {
        self.local_theta * self.final_time.sqrt()
    }

    pub fn upsilon(&self) -> f64 {
        self.local_upsilon * self.final_time.sqrt()
    }

    /// `ε_T`
    pub fn total(&self) -> f64 {
        (self.initial * self.initial + self.final_time * self.local_budget()).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub initial_step: f64,
    pub min_step: f64,
    /// `κ`
    pub growth: f64,
    /// `σ`
    pub shrink: f64,
    /// Fraction `θ` of the largest `η²_K` that gets an element refined.
    pub marking: f64,
    /// Elements with `η_K` below this multiple of the mean are coarsened.
    pub coarsening: f64,
    /// Plain Newton iterations allowed for one step size.
    pub max_newton: usize,
    pub max_refinements: usize,
    /// Refinement rounds allowed for resolving the initial datum.
    pub initial_refinements: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            initial_step: 0.1,
            min_step: 1e-8,
            growth: 2.0,
            shrink: 0.5,
            marking: 0.5,
            coarsening: 0.1,
            max_newton: 50,
            max_refinements: 30,
            initial_refinements: 40,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let bad = |msg: String| Err(ControllerError::InvalidConfig(msg));
        if !(self.growth > 1.0 && self.growth.is_finite()) {
            return bad(format!("growth factor must exceed 1, got {}", self.growth));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad(format!("shrink factor must lie in (0, 1), got {}", self.shrink));
        }
        if !(self.min_step > 0.0 && self.initial_step >= self.min_step && self.initial_step.is_finite()) {
            return bad(format!(
                "need 0 < min_step <= initial_step, got {} and {}",
                self.min_step, self.initial_step
            ));
        }
        if !(self.marking > 0.0 && self.marking <= 1.0) {
            return bad(format!("marking fraction must lie in (0, 1], got {}", self.marking));
        }
        if !(self.coarsening >= 0.0 && self.coarsening.is_finite()) {
            return bad(format!("coarsening factor must be nonnegative, got {}", self.coarsening));
        }
        if self.max_newton == 0 {
            return bad("max_newton must be at least 1".into());
        }
        Ok(())
    }
}

/// One accepted time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: usize,
    pub time: f64,
    pub step: f64,
    /// Linear solves spent on this time step, including rejected step sizes.
    pub newton_iterations: usize,
    pub refinements: usize,
    pub elements: usize,
    pub eta: f64,
    pub theta: f64,
    pub upsilon: f64,
    /// `√E^n`
    pub bound_sqrt: f64,
    /// Seconds since the run started.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    FinalTime,
    StepUnderflow,
    NewtonLimit,
    RefinementLimit,
    /// The linearized system or the nonlinearity failed at the smallest step.
    Breakdown,
}

impl Termination {
    pub fn is_complete(self) -> bool {
        self == Termination::FinalTime
    }
}

/// Receives every accepted step together with `u^{n-1}` and `u^n`.
pub trait StepSink {
    fn on_start(&mut self, _initial: &FeFunction) -> std::io::Result<()> {
        Ok(())
    }

    fn on_accept(
        &mut self,
        record: &StepRecord,
        previous: &FeFunction,
        current: &FeFunction,
    ) -> std::io::Result<()>;
}

/// Sink that ignores everything.
pub struct NoSink;

impl StepSink for NoSink {
    fn on_accept(&mut self, _: &StepRecord, _: &FeFunction, _: &FeFunction) -> std::io::Result<()> {
        Ok(())
    }
}

/// Forwards every event to several sinks in order.
pub struct Tee<'a>(pub Vec<&'a mut dyn StepSink>);

impl StepSink for Tee<'_> {
    fn on_start(&mut self, initial: &FeFunction) -> std::io::Result<()> {
        self.0.iter_mut().try_for_each(|s| s.on_start(initial))
    }

    fn on_accept(
        &mut self,
        record: &StepRecord,
        previous: &FeFunction,
        current: &FeFunction,
    ) -> std::io::Result<()> {
        self.0.iter_mut().try_for_each(|s| s.on_accept(record, previous, current))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub termination: Termination,
    /// Human readable reason when the run did not reach `T`.
    pub detail: Option<String>,
    pub records: Vec<StepRecord>,
    pub ledger: ErrorLedger,
    pub tolerances: Tolerances,
    pub initial: FeFunction,
    pub solution: FeFunction,
    pub time: f64,
    pub wall_time: f64,
}

/// Maximum strategy: every element with `η²_K ≥ θ max η²`.
pub fn mark_for_refinement(eta_sq: &[f64], theta: f64) -> Vec<ElementId> {
    let max = eta_sq.iter().copied().fold(0.0, f64::max);
    let cut = theta * max;
    eta_sq
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= cut)
        .map(|(i, _)| i)
        .collect()
}

/// Elements with `η_K < c · mean(η)`.
pub fn mark_for_coarsening(eta: &[f64], factor: f64) -> Vec<ElementId> {
    if eta.is_empty() {
        return Vec::new();
    }
    let mean = eta.iter().sum::<f64>() / eta.len() as f64;
    let cut = factor * mean;
    eta.iter()
        .enumerate()
        .filter(|(_, &v)| v < cut)
        .map(|(i, _)| i)
        .collect()
}

/// Limits a coarsening pass may not exceed; see [`guarded_coarsening`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoarseningGuard {
    /// `ε₀`, the bound on `‖Πu^{n-1} - u^{n-1}‖₀`.
    pub projection: f64,
    /// Bound on `Σ α_K² ‖Πu^{n-1} - u^{n-1}‖²_K / k²`.
    pub spatial: f64,
    /// Bound on `‖f(Πu^{n-1}) - f(u^{n-1})‖₀² + ε/3 ‖(Πu^{n-1} - u^{n-1})'‖₀²`.
    pub temporal: f64,
    pub step: f64,
    pub time: f64,
}

/// Outcome of a coarsening pass on the mesh of `previous`.
#[derive(Debug, Clone)]
pub struct CoarseningPass {
    pub mesh: Arc<Mesh>,
    pub projected: FeFunction,
    pub merged: usize,
    pub rolled_back: bool,
}

/// Coarsens the mesh of `previous` where `η_K < c · mean(η)` and keeps the
/// result only if projecting `previous` onto it stays within `guard`.
pub fn guarded_coarsening(
    previous: &FeFunction,
    eta: &[f64],
    factor: f64,
    guard: &CoarseningGuard,
    problem: &ProblemSpec,
) -> Result<CoarseningPass, ControllerError> {
    let mesh = previous.mesh().clone();
    let keep = |rolled_back| CoarseningPass {
        mesh: mesh.clone(),
        projected: previous.clone(),
        merged: 0,
        rolled_back,
    };
    if eta.len() != mesh.num_elements() {
        return Ok(keep(false));
    }
    let marks = mark_for_coarsening(eta, factor);
    if marks.is_empty() {
        return Ok(keep(false));
    }
    let coarse = mesh.coarsen(&marks)?;
    let merged = mesh.num_elements() - coarse.mesh.num_elements();
    if merged == 0 {
        return Ok(keep(false));
    }
    let coarse_mesh = Arc::new(coarse.mesh);
    let projected = l2_project(previous, &coarse_mesh)?;

    let weights = coarse_mesh.weights(problem.eps())?;
    let rule = GaussLegendre::three();
    let (mut l2, mut spatial, mut source, mut flux) = (0.0, 0.0, 0.0, 0.0);
    for p in common_refinement(&coarse_mesh, &mesh)? {
        let diff = rule.integrate(p.lo, p.hi, |x| {
            (projected.eval_in(p.first, x) - previous.eval_in(p.second, x)).powi(2)
        });
        l2 += diff;
        spatial += weights.element[p.first].powi(2) * diff;
        source += rule.integrate(p.lo, p.hi, |x| {
            let a = problem.f(projected.eval_in(p.first, x), x, guard.time);
            let b = problem.f(previous.eval_in(p.second, x), x, guard.time);
            (a - b).powi(2)
        });
        let ds = projected.slope(p.first) - previous.slope(p.second);
        flux += ds * ds * (p.hi - p.lo);
    }
    let spatial = spatial / (guard.step * guard.step);
    let temporal = source + problem.eps() / 3.0 * flux;
    let ok = l2.sqrt() <= guard.projection
        && spatial <= guard.spatial
        && temporal <= guard.temporal
        && temporal.is_finite();
    if !ok {
        log::debug!(
            "coarsening of {merged} elements rolled back (l2 {:.3e}, spatial {spatial:.3e}, temporal {temporal:.3e})",
            l2.sqrt()
        );
        return Ok(keep(true));
    }
    Ok(CoarseningPass {
        mesh: coarse_mesh,
        projected,
        merged,
        rolled_back: false,
    })
}

/// Projects the initial datum and refines until `‖g - Π⁰g‖₀ ≤ ε₀`.
///
/// Returns the projection and the achieved `η₀`.
pub fn prepare_initial_state(
    problem: &ProblemSpec,
    mesh: Mesh,
    tolerance: f64,
    marking: f64,
    max_rounds: usize,
) -> Result<(FeFunction, f64), ControllerError> {
    let (a, b) = problem.domain();
    if mesh.bounds() != (a, b) {
        let (l, r) = mesh.bounds();
        return Err(ControllerError::DomainMismatch(l, r));
    }
    let g = |x| problem.initial(x);
    let mut mesh = Arc::new(mesh);
    let mut rounds = 0;
    loop {
        let projected = l2_project_fn(g, &mesh, 2)?;
        let local = l2_error_by_element(&projected, g, 2);
        let error = local.iter().sum::<f64>().sqrt();
        if error <= tolerance {
            return Ok((projected, error));
        }
        if rounds >= max_rounds {
            return Err(ControllerError::InfeasibleInitialDatum {
                error,
                tolerance,
                rounds,
            });
        }
        let marks = mark_for_refinement(&local, marking);
        let (fine, _) = mesh.refine(&marks)?;
        mesh = Arc::new(fine);
        rounds += 1;
    }
}

enum Branch {
    Refine,
    Shrink,
    Iterate,
}

fn branch(set: &IndicatorSet) -> Branch {
    let (eta, theta, upsilon) = (set.eta(), set.theta(), set.upsilon());
    if theta * theta + upsilon * upsilon < eta * eta {
        Branch::Refine
    } else if upsilon < theta {
        Branch::Shrink
    } else {
        Branch::Iterate
    }
}

/// Runs the adaptive method from `t = 0` to the problem's final time.
///
/// `initial_mesh` is refined until the projected initial datum meets `ε₀`
/// (at most `config.initial_refinements` rounds). Failures of the time loop
/// are reported through [`Termination`]; `Err` is reserved for invalid
/// input, an unresolvable initial datum and sink failures.
pub fn run(
    problem: &ProblemSpec,
    config: &ControllerConfig,
    tolerances: &Tolerances,
    initial_mesh: Mesh,
    sink: &mut dyn StepSink,
) -> Result<RunOutcome, ControllerError> {
    config.validate()?;
    tolerances.validate()?;
    let final_time = problem.final_time();
    if tolerances.final_time != final_time {
        return Err(ControllerError::InvalidTolerances(format!(
            "tolerances were split for T = {}, problem has T = {final_time}",
            tolerances.final_time
        )));
    }
    let started = Instant::now();
    let (initial, eta0) = prepare_initial_state(
        problem,
        initial_mesh,
        tolerances.initial,
        config.marking,
        config.initial_refinements,
    )?;
    log::info!(
        "{}: initial datum resolved on {} elements, η₀ = {eta0:.3e}",
        problem.name(),
        initial.mesh().num_elements()
    );
    sink.on_start(&initial)?;

    let budget = tolerances.local_budget();
    let mut ledger = ErrorLedger::new(eta0);
    let mut records = Vec::new();
    let mut previous = initial.clone();
    let mut last_eta: Vec<f64> = Vec::new();
    let mut time = 0.0;
    let mut step = config.initial_step;

    let finish = |termination, detail: Option<String>, records, ledger, previous: FeFunction, time| {
        Ok(RunOutcome {
            termination,
            detail,
            records,
            ledger,
            tolerances: *tolerances,
            initial: initial.clone(),
            solution: previous,
            time,
            wall_time: started.elapsed().as_secs_f64(),
        })
    };

    'steps: loop {
        let remaining = final_time - time;
        if remaining <= FINAL_TIME_SLACK * final_time {
            return finish(Termination::FinalTime, None, records, ledger, previous, final_time);
        }
        // a short last step caused only by the clamp to T is allowed
        step = step.min(remaining);
        if step < config.min_step && step != remaining {
            let detail = format!("step {step:e} below k_min at t = {time}");
            return finish(Termination::StepUnderflow, Some(detail), records, ledger, previous, time);
        }

        let guard = CoarseningGuard {
            projection: tolerances.initial,
            spatial: 0.1 * tolerances.local_eta.powi(2),
            temporal: 0.1 * tolerances.local_theta.powi(2),
            step,
            time,
        };
        let pass = if config.coarsening > 0.0 {
            guarded_coarsening(&previous, &last_eta, config.coarsening, &guard, problem)?
        } else {
            CoarseningPass {
                mesh: previous.mesh().clone(),
                projected: previous.clone(),
                merged: 0,
                rolled_back: false,
            }
        };
        let mut mesh = pass.mesh;
        let mut start = pass.projected;
        let mut newton_total = 0;
        let mut refinements = 0;

        'size: loop {
            let mut current = start.clone();
            let mut plain_iterations = 0;
            loop {
                let t_next = time + step;
                let state = NewtonState {
                    iteration: plain_iterations,
                    current: current.clone(),
                    previous: &previous,
                    step,
                    time: t_next,
                };
                newton_total += 1;
                let outcome = newton_step(&state, problem).map_err(Failure::Newton).and_then(|update| {
                    let candidate = Candidate {
                        current: &current,
                        increment: &update.increment,
                        next: &update.next,
                        previous: &previous,
                        step,
                        time: t_next,
                        prev_time: time,
                    };
                    evaluate(&candidate, problem)
                        .map(|set| (update, set))
                        .map_err(Failure::Estimator)
                });
                let (update, set) = match outcome {
                    Ok(v) => v,
                    Err(failure) => {
                        // treated like a temporal failure: retry with a smaller step
                        let shrunk = config.shrink * step;
                        log::debug!("t = {time}: {failure}; shrinking step to {shrunk:e}");
                        if shrunk < config.min_step {
                            let detail = format!("{failure} at t = {time} with step {step:e}");
                            return finish(Termination::Breakdown, Some(detail), records, ledger, previous, time);
                        }
                        step = shrunk;
                        start = l2_project(&previous, &mesh)?;
                        continue 'size;
                    }
                };

                if set.total() <= budget {
                    let reached = (t_next - final_time).abs() <= FINAL_TIME_SLACK * final_time;
                    let accepted_time = if reached { final_time } else { t_next };
                    ledger.push(accepted_time, step, set.eta(), set.theta(), set.upsilon());
                    let record = StepRecord {
                        n: records.len() + 1,
                        time: accepted_time,
                        step,
                        newton_iterations: newton_total,
                        refinements,
                        elements: mesh.num_elements(),
                        eta: set.eta(),
                        theta: set.theta(),
                        upsilon: set.upsilon(),
                        bound_sqrt: ledger.sqrt_bound(),
                        wall_time: started.elapsed().as_secs_f64(),
                    };
                    log::debug!(
                        "step {} t = {:.6e} k = {:.3e} elements {} newton {} refinements {} √E = {:.3e}",
                        record.n,
                        record.time,
                        step,
                        record.elements,
                        newton_total,
                        refinements,
                        record.bound_sqrt
                    );
                    sink.on_accept(&record, &previous, &update.next)?;
                    records.push(record);
                    last_eta = set.spatial_norms();
                    previous = update.next;
                    time = accepted_time;
                    if reached {
                        return finish(Termination::FinalTime, None, records, ledger, previous, time);
                    }
                    step *= config.growth;
                    continue 'steps;
                }

                match branch(&set) {
                    Branch::Refine => {
                        if refinements >= config.max_refinements {
                            let detail = format!("{refinements} refinements at t = {time} without passing");
                            return finish(Termination::RefinementLimit, Some(detail), records, ledger, previous, time);
                        }
                        let marks = mark_for_refinement(&set.spatial, config.marking);
                        let (fine, map) = match mesh.refine(&marks) {
                            Ok(v) => v,
                            Err(err @ MeshError::MaxLevel(_)) => {
                                let detail = format!("{err} at t = {time}");
                                return finish(Termination::RefinementLimit, Some(detail), records, ledger, previous, time);
                            }
                            Err(err) => return Err(err.into()),
                        };
                        mesh = Arc::new(fine);
                        current = FeFunction::new(mesh.clone(), map.transfer(update.next.values()))?;
                        refinements += 1;
                    }
                    Branch::Shrink => {
                        step *= config.shrink;
                        if step < config.min_step {
                            let detail = format!("step {step:e} below k_min at t = {time}");
                            return finish(Termination::StepUnderflow, Some(detail), records, ledger, previous, time);
                        }
                        start = l2_project(&previous, &mesh)?;
                        continue 'size;
                    }
                    Branch::Iterate => {
                        plain_iterations += 1;
                        if plain_iterations >= config.max_newton {
                            let detail = format!("{plain_iterations} Newton iterations at t = {time}, step {step:e}");
                            return finish(Termination::NewtonLimit, Some(detail), records, ledger, previous, time);
                        }
                        current = update.next;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Error)]
enum Failure {
    #[error(transparent)]
    Newton(NewtonError),
    #[error(transparent)]
    Estimator(EstimatorError),
}
