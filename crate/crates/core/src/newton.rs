//! One Newton-Galerkin backward Euler update.
//!
//! Given the iterate `u_N` on the current mesh and the previous time-node
//! solution `u^{n-1}` (possibly on another mesh), the increment `δ` solves
//!
//! ```text
//! (M/k + εA - R(u_N)) δ = -M u_N/k + m(u^{n-1})/k - εA u_N + b(f^n(u_N))
//! ```
//!
//! where `R` is the mass matrix weighted by `∂_u f^n(u_N)` and
//! `m(u^{n-1})_i = ∫ u^{n-1} φ_i` is evaluated on the common refinement of
//! both meshes. Nonlinear terms are frozen at `t = t_n`.

use thiserror::Error;

use crate::fem::{
    assemble_cross_load, assemble_load_by_element, assemble_mass, assemble_stiffness,
    assemble_weighted_mass_by_element, FeFunction, FemError,
};
pub use crate::linalg::solve_banded;
use crate::linalg::{BandedSystem, LinalgError, SymTridiagonal};
use crate::problems::ProblemSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NewtonError {
    #[error("linearized system is not solvable: {0}")]
    NonSolvableLinearization(#[from] LinalgError),
    #[error("nonlinearity evaluation failed: {0}")]
    NonlinearityEvaluation(FemError),
    #[error("invalid Newton state: {0}")]
    InvalidState(String),
}

impl From<FemError> for NewtonError {
    fn from(err: FemError) -> Self {
        match err {
            FemError::Linalg(e) => NewtonError::NonSolvableLinearization(e),
            other => NewtonError::NonlinearityEvaluation(other),
        }
    }
}

/// Inputs of one Newton update on time interval `(t_{n-1}, t_n]`.
#[derive(Debug, Clone)]
pub struct NewtonState<'a> {
    pub iteration: usize,
    pub current: FeFunction,
    pub previous: &'a FeFunction,
    pub step: f64,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub struct NewtonUpdate {
    pub next: FeFunction,
    pub increment: FeFunction,
}

impl NewtonState<'_> {
    fn validate(&self) -> Result<(), NewtonError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(NewtonError::InvalidState(format!(
                "time step must be positive, got {}",
                self.step
            )));
        }
        if !self.current.has_zero_trace() {
            return Err(NewtonError::InvalidState(
                "iterate must vanish on the boundary".into(),
            ));
        }
        Ok(())
    }
}

/// Jacobian `M/k + εA - R(u)` of the discrete backward Euler residual.
pub fn jacobian(
    u: &FeFunction,
    step: f64,
    time: f64,
    problem: &ProblemSpec,
) -> Result<SymTridiagonal, NewtonError> {
    let mesh = u.mesh();
    let mass = assemble_mass(mesh);
    let stiffness = assemble_stiffness(mesh);
    let reaction = assemble_weighted_mass_by_element(mesh, |e, x| {
        problem.df(u.eval_in(e, x), x, time)
    })?;
    Ok(mass
        .scaled(step.recip())
        .add_scaled(problem.eps(), &stiffness)
        .add_scaled(-1.0, &reaction))
}

/// Discrete residual `M u/k - m(u^{n-1})/k + εA u - b(f^n(u))` on interior nodes.
pub fn discrete_residual(
    u: &FeFunction,
    previous: &FeFunction,
    step: f64,
    time: f64,
    problem: &ProblemSpec,
) -> Result<Vec<f64>, NewtonError> {
    let mesh = u.mesh();
    let mass = assemble_mass(mesh);
    let stiffness = assemble_stiffness(mesh);
    let carried = assemble_cross_load(mesh, previous)?;
    let source = assemble_load_by_element(mesh, |e, x| problem.f(u.eval_in(e, x), x, time))?;
    let mu = mass.mul_vec(u.interior());
    let au = stiffness.mul_vec(u.interior());
    let inv_k = step.recip();
    Ok((0..mesh.num_interior())
        .map(|i| inv_k * (mu[i] - carried[i]) + problem.eps() * au[i] - source[i])
        .collect())
}

/// Solves the linearized problem once: the `solve(k, T_h, u_N)` of the method.
pub fn newton_step(state: &NewtonState, problem: &ProblemSpec) -> Result<NewtonUpdate, NewtonError> {
    state.validate()?;
    let u = &state.current;
    let mesh = u.mesh();
    let matrix = jacobian(u, state.step, state.time, problem)?;
    let rhs: Vec<f64> = discrete_residual(u, state.previous, state.step, state.time, problem)?
        .into_iter()
        .map(|r| -r)
        .collect();
    let system = BandedSystem::new(matrix, rhs);
    let delta = solve_banded(&system)?;

    let scale = system.matrix.norm_inf() * delta.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        + system.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residual = system.residual_inf(&delta);
    if residual > 1e-11 * scale {
        return Err(NewtonError::NonSolvableLinearization(LinalgError::Breakdown {
            row: 0,
            pivot: residual,
            threshold: 1e-11 * scale,
        }));
    }
    if let Some(pos) = delta.iter().position(|d| !d.is_finite()) {
        return Err(NewtonError::NonlinearityEvaluation(FemError::NonFinite {
            what: "Newton increment",
            x: mesh.nodes()[pos + 1],
        }));
    }
    let increment = FeFunction::from_interior(mesh.clone(), &delta)?;
    let next = u.axpy(1.0, &increment);
    Ok(NewtonUpdate { next, increment })
}
