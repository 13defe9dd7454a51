//! Residual indicators for one Newton-Galerkin candidate step and the
//! accumulated error bound.
//!
//! Three element-wise indicators are computed for the candidate
//! `u_{N+1} = u_N + δ` on interval `I_n = (t_{n-1}, t_n]`:
//!
//! * spatial `η²_K`: weighted element residual of the linearized equation
//!   plus half of the ε-scaled gradient jumps at the interior end points,
//! * temporal `ϑ²_K`: change of the source over the step (trapezoidal
//!   surrogate) plus the change of the diffusive flux,
//! * nonlinear `Υ²_K`: the linearization remainder of `f`.
//!
//! Terms involving `u^{n-1}` are integrated on the common refinement of the
//! current and the previous mesh.

use thiserror::Error;

use crate::fem::{common_refinement, FeFunction, FemError};
use crate::mesh::MeshError;
use crate::problems::ProblemSpec;
use crate::quadrature::GaussLegendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("non-finite {what} indicator on element {element}")]
    NonFinite { what: &'static str, element: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Everything the indicators need about one candidate step.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    /// `u_N`, the iterate the update was computed from.
    pub current: &'a FeFunction,
    /// `δ_N`
    pub increment: &'a FeFunction,
    /// `u_{N+1} = u_N + δ_N`
    pub next: &'a FeFunction,
    /// `u^{n-1}` on the previous mesh.
    pub previous: &'a FeFunction,
    pub step: f64,
    pub time: f64,
    pub prev_time: f64,
}

/// Indicator squares of one candidate, per element and summed.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSet {
    pub spatial: Vec<f64>,
    pub temporal: Vec<f64>,
    pub nonlinear: Vec<f64>,
    pub eta_sq: f64,
    pub theta_sq: f64,
    pub upsilon_sq: f64,
    pub step: f64,
    pub time: f64,
}

impl IndicatorSet {
    pub fn new(
        spatial: Vec<f64>,
        temporal: Vec<f64>,
        nonlinear: Vec<f64>,
        step: f64,
        time: f64,
    ) -> Self {
        let eta_sq = spatial.iter().sum();
        let theta_sq = temporal.iter().sum();
        let upsilon_sq = nonlinear.iter().sum();
        IndicatorSet {
            spatial,
            temporal,
            nonlinear,
            eta_sq,
            theta_sq,
            upsilon_sq,
            step,
            time,
        }
    }

    /// `η_{n,Ω,N}`
    pub fn eta(&self) -> f64 {
        self.eta_sq.sqrt()
    }

    /// `ϑ_{n,Ω,N}`
    pub fn theta(&self) -> f64 {
        self.theta_sq.sqrt()
    }

    /// `Υ_{n,Ω,N}`
    pub fn upsilon(&self) -> f64 {
        self.upsilon_sq.sqrt()
    }

    /// `η² + ϑ² + Υ²`, evaluated from the rounded global norms so that a
    /// reader holding only `η`, `ϑ`, `Υ` reproduces it bit for bit.
    pub fn total(&self) -> f64 {
        squared_total(self.eta(), self.theta(), self.upsilon())
    }

    /// Element-wise `η_K`.
    pub fn spatial_norms(&self) -> Vec<f64> {
        self.spatial.iter().map(|v| v.sqrt()).collect()
    }
}

/// `a² + b² + c²` in the one evaluation order used for every certificate check.
pub fn squared_total(a: f64, b: f64, c: f64) -> f64 {
    a * a + b * b + c * c
}

fn finite(values: Vec<f64>, what: &'static str) -> Result<Vec<f64>, EstimatorError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(element) => Err(EstimatorError::NonFinite { what, element }),
        None => Ok(values),
    }
}

/// Spatial indicators `η²_K`.
pub fn spatial_indicators(
    c: &Candidate,
    problem: &ProblemSpec,
) -> Result<Vec<f64>, EstimatorError> {
    let mesh = c.next.mesh();
    let eps = problem.eps();
    let weights = mesh.weights(eps)?;
    let rule = GaussLegendre::three();
    let inv_k = c.step.recip();
    let t = c.time;

    let mut residual = vec![0.0; mesh.num_elements()];
    for p in common_refinement(mesh, c.previous.mesh())? {
        let e = p.first;
        residual[e] += rule.integrate(p.lo, p.hi, |x| {
            let un = c.current.eval_in(e, x);
            let linearized = problem.f(un, x, t) + problem.df(un, x, t) * c.increment.eval_in(e, x);
            // εΔu_{N+1} vanishes inside P1 elements
            let dt = inv_k * (c.next.eval_in(e, x) - c.previous.eval_in(p.second, x));
            (linearized - dt).powi(2)
        });
    }
    let mut out: Vec<f64> = residual
        .iter()
        .zip(&weights.element)
        .map(|(r, a)| a * a * r)
        .collect();

    let edge_scale = eps.sqrt().recip() * eps * eps;
    for node in 1..mesh.num_nodes() - 1 {
        let jump = c.next.gradient_jump(node)?;
        let contribution = edge_scale * weights.node[node - 1] * jump * jump;
        out[node - 1] += 0.5 * contribution;
        out[node] += 0.5 * contribution;
    }
    finite(out, "spatial")
}

/// Temporal indicators `ϑ²_K`, with the source term replaced by
/// `‖f^n(u_{N+1}) - f^{n-1}(u^{n-1})‖²_{0,K}`.
pub fn temporal_indicators(
    c: &Candidate,
    problem: &ProblemSpec,
) -> Result<Vec<f64>, EstimatorError> {
    let mesh = c.next.mesh();
    let eps = problem.eps();
    let rule = GaussLegendre::three();
    let mut out = vec![0.0; mesh.num_elements()];
    for p in common_refinement(mesh, c.previous.mesh())? {
        let e = p.first;
        let source = rule.integrate(p.lo, p.hi, |x| {
            let now = problem.f(c.next.eval_in(e, x), x, c.time);
            let before = problem.f(c.previous.eval_in(p.second, x), x, c.prev_time);
            (now - before).powi(2)
        });
        let dslope = c.previous.slope(p.second) - c.next.slope(e);
        out[e] += source + eps / 3.0 * dslope * dslope * (p.hi - p.lo);
    }
    finite(out, "temporal")
}

/// Nonlinear indicators `Υ²_K`.
pub fn nonlinear_indicators(
    c: &Candidate,
    problem: &ProblemSpec,
) -> Result<Vec<f64>, EstimatorError> {
    let mesh = c.next.mesh();
    let rule = GaussLegendre::three();
    let t = c.time;
    let out = (0..mesh.num_elements())
        .map(|e| {
            let (l, r) = mesh.element(e);
            rule.integrate(l, r, |x| {
                let un = c.current.eval_in(e, x);
                let remainder = problem.f(un, x, t) + problem.df(un, x, t) * c.increment.eval_in(e, x)
                    - problem.f(c.next.eval_in(e, x), x, t);
                remainder * remainder
            })
        })
        .collect();
    finite(out, "nonlinear")
}

/// All three indicator families for one candidate.
pub fn evaluate(c: &Candidate, problem: &ProblemSpec) -> Result<IndicatorSet, EstimatorError> {
    Ok(IndicatorSet::new(
        spatial_indicators(c, problem)?,
        temporal_indicators(c, problem)?,
        nonlinear_indicators(c, problem)?,
        c.step,
        c.time,
    ))
}

/// One accepted step in the ledger.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub time: f64,
    pub step: f64,
    pub eta: f64,
    pub theta: f64,
    pub upsilon: f64,
    /// Running bound after this step.
    pub bound: f64,
}

/// Running value of `η₀² + Σ_j k_j (η_j² + ϑ_j² + Υ_j²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorLedger {
    initial_error: f64,
    entries: Vec<LedgerEntry>,
    bound: f64,
}

impl ErrorLedger {
    /// Starts the ledger with `η₀ = ‖g - Π⁰g‖₀`.
    pub fn new(initial_error: f64) -> Self {
        ErrorLedger {
            initial_error,
            entries: Vec::new(),
            bound: initial_error * initial_error,
        }
    }

    pub fn initial_error(&self) -> f64 {
        self.initial_error
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn sqrt_bound(&self) -> f64 {
        self.bound.sqrt()
    }

    pub fn accumulate(mut self, accepted: &IndicatorSet) -> Self {
        self.push(accepted.time, accepted.step, accepted.eta(), accepted.theta(), accepted.upsilon());
        self
    }

    /// Appends a step given its global indicator norms.
    pub fn push(&mut self, time: f64, step: f64, eta: f64, theta: f64, upsilon: f64) {
        self.bound += step * squared_total(eta, theta, upsilon);
        self.entries.push(LedgerEntry {
            time,
            step,
            eta,
            theta,
            upsilon,
            bound: self.bound,
        });
    }
}

/// Defect of the splitting `⟨F⟩ = ⟨F¹⟩ + ⟨F²⟩ + ⟨F³⟩`, tested against one function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionDefect {
    /// `max_t |⟨F(u_I(t)), v⟩ - Σ_i ⟨F^i(u_I(t)), v⟩|`
    pub defect: f64,
    /// Largest absolute size of the integrals involved.
    pub scale: f64,
}

/// Evaluates the residual and its three parts directly by quadrature at the
/// given times in `I_n`, with `v` a P1 function (any boundary values).
pub fn decomposition_check(
    c: &Candidate,
    v: &FeFunction,
    problem: &ProblemSpec,
    times: &[f64],
) -> Result<DecompositionDefect, EstimatorError> {
    let mut breaks: Vec<f64> = c
        .next
        .mesh()
        .nodes()
        .iter()
        .chain(c.previous.mesh().nodes())
        .chain(v.mesh().nodes())
        .copied()
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let rule = GaussLegendre::new(5);
    let eps = problem.eps();
    let (k, tn) = (c.step, c.time);
    let mut out = DecompositionDefect {
        defect: 0.0,
        scale: 0.0,
    };
    for &t in times {
        let q = (tn - t) / k;
        let (mut full, mut parts, mut scale) = (0.0, [0.0; 3], 0.0f64);
        for w in breaks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let (en, ep, ev) = (
                c.next.mesh().locate(mid),
                c.previous.mesh().locate(mid),
                v.mesh().locate(mid),
            );
            let dnext = c.next.slope(en);
            let dprev = c.previous.slope(ep);
            let dv = v.slope(ev);
            let d_interp = q * dprev + (1.0 - q) * dnext;
            for (x, wq) in rule.on(w[0], w[1]) {
                let vn = v.eval_in(ev, x);
                let next = c.next.eval_in(en, x);
                let prev = c.previous.eval_in(ep, x);
                let cur = c.current.eval_in(en, x);
                let interp = q * prev + (1.0 - q) * next;
                let dt = (next - prev) / k;
                let linearized = problem.f(cur, x, tn) + problem.df(cur, x, tn) * c.increment.eval_in(en, x);
                let f_next = problem.f(next, x, tn);
                let f_interp = problem.f(interp, x, t);

                let terms_full = [vn * dt, eps * d_interp * dv, -f_interp * vn];
                let f1 = vn * dt + eps * dnext * dv - linearized * vn;
                let f2 = eps * (d_interp - dnext) * dv + (f_next - f_interp) * vn;
                let f3 = (linearized - f_next) * vn;
                full += wq * terms_full.iter().sum::<f64>();
                parts[0] += wq * f1;
                parts[1] += wq * f2;
                parts[2] += wq * f3;
                scale = scale.max(wq * terms_full.iter().map(|t| t.abs()).sum::<f64>());
                scale = scale.max(wq * (f1.abs() + f2.abs() + f3.abs()));
            }
        }
        let magnitude = full.abs().max(parts.iter().map(|p| p.abs()).fold(0.0, f64::max));
        out.scale = out.scale.max(magnitude).max(scale);
        out.defect = out.defect.max((full - parts.iter().sum::<f64>()).abs());
    }
    Ok(out)
}
