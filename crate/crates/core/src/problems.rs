//! Semilinear problem data `∂_t u - ε u'' = f(u, x, t)` on an interval with
//! homogeneous Dirichlet conditions, plus the built-in experiments.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type ScalarField = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type SpaceField = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceTimeField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("diffusion coefficient must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid interval ({0}, {1})")]
    InvalidDomain(f64, f64),
    #[error("final time must be positive, got {0}")]
    InvalidFinalTime(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown problem {0:?} (expected example1, example2, example3 or zero)")]
    UnknownProblem(String),
    #[error("∂u f disagrees with finite differences at (u={u}, x={x}, t={t}): {analytic} vs {numeric}")]
    DerivativeMismatch {
        u: f64,
        x: f64,
        t: f64,
        analytic: f64,
        numeric: f64,
    },
}

/// Closed-form solution `u(x, t)` together with `∂_x u`.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: SpaceTimeField,
    pub dx: SpaceTimeField,
}

#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    eps: f64,
    domain: (f64, f64),
    final_time: f64,
    f: ScalarField,
    df: ScalarField,
    initial: SpaceField,
    exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("eps", &self.eps)
            .field("domain", &self.domain)
            .field("final_time", &self.final_time)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        name: impl Into<String>,
        eps: f64,
        domain: (f64, f64),
        final_time: f64,
        f: ScalarField,
        df: ScalarField,
        initial: SpaceField,
    ) -> Result<Self, ProblemError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(ProblemError::InvalidEpsilon(eps));
        }
        let (a, b) = domain;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(ProblemError::InvalidDomain(a, b));
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(ProblemError::InvalidFinalTime(final_time));
        }
        Ok(ProblemSpec {
            name: name.into(),
            eps,
            domain,
            final_time,
            f,
            df,
            initial,
            exact: None,
        })
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_final_time(mut self, final_time: f64) -> Result<Self, ProblemError> {
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(ProblemError::InvalidFinalTime(final_time));
        }
        self.final_time = final_time;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    #[inline]
    pub fn f(&self, u: f64, x: f64, t: f64) -> f64 {
        (self.f)(u, x, t)
    }

    #[inline]
    pub fn df(&self, u: f64, x: f64, t: f64) -> f64 {
        (self.df)(u, x, t)
    }

    pub fn initial(&self, x: f64) -> f64 {
        (self.initial)(x)
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    /// Checks `∂_u f` against central differences at the given `(u, x, t)`;
    /// returns the largest relative defect.
    pub fn audit_derivative(&self, samples: &[(f64, f64, f64)]) -> Result<f64, ProblemError> {
        let mut worst: f64 = 0.0;
        for &(u, x, t) in samples {
            let h = 1e-6 * u.abs().max(1.0);
            let numeric = (self.f(u + h, x, t) - self.f(u - h, x, t)) / (2.0 * h);
            let analytic = self.df(u, x, t);
            let defect = (numeric - analytic).abs() / analytic.abs().max(1.0);
            if !(defect <= 1e-6) {
                return Err(ProblemError::DerivativeMismatch {
                    u,
                    x,
                    t,
                    analytic,
                    numeric,
                });
            }
            worst = worst.max(defect);
        }
        Ok(worst)
    }
}

/// Solution of `-ε g'' + g = 1` on `(0, 1)` with `g(0) = g(1) = 0`, written
/// with decaying exponentials only.
pub fn layer_profile(eps: f64, x: f64) -> f64 {
    let s = eps.sqrt();
    1.0 - ((-x / s).exp() + (-(1.0 - x) / s).exp()) / (1.0 + (-1.0 / s).exp())
}

pub fn layer_profile_dx(eps: f64, x: f64) -> f64 {
    let s = eps.sqrt();
    ((-x / s).exp() - (-(1.0 - x) / s).exp()) / (s * (1.0 + (-1.0 / s).exp()))
}

/// Initial data choices for the nonlinear experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialDatum {
    Zero,
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

impl InitialDatum {
    /// The default bump for the blow-up experiment.
    pub fn default_bump() -> Self {
        InitialDatum::Gaussian {
            amplitude: 1.5,
            center: 2.0,
            width: 0.5,
        }
    }

    fn field(self, domain: (f64, f64)) -> Result<SpaceField, ProblemError> {
        match self {
            InitialDatum::Zero => Ok(Arc::new(|_| 0.0)),
            InitialDatum::Gaussian {
                amplitude,
                center,
                width,
            } => {
                if !(amplitude >= 0.0 && amplitude.is_finite()) || !(width > 0.0) {
                    return Err(ProblemError::InvalidParameter(format!(
                        "gaussian needs amplitude >= 0 and width > 0, got {amplitude}, {width}"
                    )));
                }
                let (a, b) = domain;
                let edge = move |x: f64| amplitude * (-((x - center) / width).powi(2)).exp();
                let largest = edge(a).max(edge(b));
                if largest > 0.0 {
                    log::info!("initial gaussian is clipped to 0 on the boundary (was {largest:e})");
                }
                Ok(Arc::new(move |x| {
                    if x <= a || x >= b {
                        0.0
                    } else {
                        edge(x)
                    }
                }))
            }
        }
    }
}

/// Linear problem with source `exp(t)` and layer-shaped initial data
/// `g_ε`; the exact solution is `exp(t) g_ε(x)`.
pub fn example1(eps: f64) -> Result<ProblemSpec, ProblemError> {
    let spec = ProblemSpec::new(
        "example1",
        eps,
        (0.0, 1.0),
        1.0,
        Arc::new(|_, _, t: f64| t.exp()),
        Arc::new(|_, _, _| 0.0),
        Arc::new(move |x| layer_profile(eps, x)),
    )?;
    Ok(spec.with_exact(ExactSolution {
        value: Arc::new(move |x, t: f64| t.exp() * layer_profile(eps, x)),
        dx: Arc::new(move |x, t: f64| t.exp() * layer_profile_dx(eps, x)),
    }))
}

/// `f = -u⁴ + sin t` on `(0, 1)` up to `T = 2`.
pub fn example2(eps: f64, initial: InitialDatum) -> Result<ProblemSpec, ProblemError> {
    ProblemSpec::new(
        "example2",
        eps,
        (0.0, 1.0),
        2.0,
        Arc::new(|u: f64, _, t: f64| -u.powi(4) + t.sin()),
        Arc::new(|u: f64, _, _| -4.0 * u.powi(3)),
        initial.field((0.0, 1.0))?,
    )
}

/// Power nonlinearity `f = u^β` on `(0, 4)`, which blows up in finite time.
pub fn example3(eps: f64, beta: f64, initial: InitialDatum) -> Result<ProblemSpec, ProblemError> {
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(ProblemError::InvalidParameter(format!(
            "exponent must exceed 1, got {beta}"
        )));
    }
    if let InitialDatum::Gaussian { amplitude, .. } = initial {
        if amplitude < 0.0 {
            return Err(ProblemError::InvalidParameter(
                "initial datum must be nonnegative".into(),
            ));
        }
    }
    let (f, df): (ScalarField, ScalarField) = if beta.fract() == 0.0 && beta <= 64.0 {
        let p = beta as i32;
        (
            Arc::new(move |u: f64, _, _| u.powi(p)),
            Arc::new(move |u: f64, _, _| beta * u.powi(p - 1)),
        )
    } else {
        (
            Arc::new(move |u: f64, _, _| u.max(0.0).powf(beta)),
            Arc::new(move |u: f64, _, _| beta * u.max(0.0).powf(beta - 1.0)),
        )
    };
    ProblemSpec::new(
        "example3",
        eps,
        (0.0, 4.0),
        0.1,
        f,
        df,
        initial.field((0.0, 4.0))?,
    )
}

/// Trivial dynamics: `f ≡ 0`, `g ≡ 0`.
pub fn zero_problem(eps: f64) -> Result<ProblemSpec, ProblemError> {
    ProblemSpec::new(
        "zero",
        eps,
        (0.0, 1.0),
        1.0,
        Arc::new(|_, _, _| 0.0),
        Arc::new(|_, _, _| 0.0),
        Arc::new(|_| 0.0),
    )
    .map(|p| {
        p.with_exact(ExactSolution {
            value: Arc::new(|_, _| 0.0),
            dx: Arc::new(|_, _| 0.0),
        })
    })
}

/// Problem parameters selectable by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub name: String,
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialDatum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_time: Option<f64>,
}

impl ProblemParams {
    pub fn build(&self) -> Result<ProblemSpec, ProblemError> {
        let spec = match self.name.as_str() {
            "example1" => example1(self.eps)?,
            "example2" => example2(self.eps, self.initial.unwrap_or(InitialDatum::Zero))?,
            "example3" => example3(
                self.eps,
                self.beta.unwrap_or(4.0),
                self.initial.unwrap_or_else(InitialDatum::default_bump),
            )?,
            "zero" => zero_problem(self.eps)?,
            other => return Err(ProblemError::UnknownProblem(other.to_string())),
        };
        match self.final_time {
            Some(t) => spec.with_final_time(t),
            None => Ok(spec),
        }
    }
}
