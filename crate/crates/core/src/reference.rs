//! Validation oracles: a brute-force uniform solver, the Fourier series of
//! the linear example, true errors of adaptive runs and efficiency indices.
//!
//! The uniform solver deliberately shares no code with the adaptive path: it
//! has its own assembly, its own quadrature constants and its own tridiagonal
//! elimination.

use std::f64::consts::PI;

use thiserror::Error;

use crate::controller::{StepRecord, StepSink};
use crate::estimators::ErrorLedger;
use crate::fem::{common_refinement, FeFunction, FemError};
use crate::problems::{ExactSolution, ProblemSpec};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceError {
    #[error("Newton did not reach {tol:e} within {iterations} iterations at step {step}")]
    NoConvergence {
        step: usize,
        iterations: usize,
        tol: f64,
    },
    #[error("singular reference system at step {0}")]
    Singular(usize),
    #[error("invalid reference resolution: {0}")]
    InvalidResolution(String),
    #[error("reference covers [0, {covered}], asked for t = {requested}")]
    OutOfRange { covered: f64, requested: f64 },
    #[error(transparent)]
    Fem(#[from] FemError),
}

const MAX_NEWTON: usize = 200;

/// Which time levels [`reference_solve`] keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    All,
    Final,
    Every(usize),
}

/// Nodal values on a uniform grid at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Grid nodes including both end points.
    pub grid: Vec<f64>,
    /// `values[i][j]` is the solution at `times[i]`, `grid[j]`.
    pub values: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn final_values(&self) -> &[f64] {
        self.values.last().expect("trajectory holds at least t = 0")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds at least t = 0")
    }

    fn h(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    fn cell(&self, x: f64) -> usize {
        let m = self.grid.len() - 1;
        (((x - self.grid[0]) / self.h()).floor().max(0.0) as usize).min(m - 1)
    }

    fn time_slot(&self, t: f64) -> Result<(usize, f64), ReferenceError> {
        let last = self.final_time();
        if t < 0.0 || t > last * (1.0 + 1e-12) || (self.times.len() < 2 && t != self.times[0]) {
            return Err(ReferenceError::OutOfRange {
                covered: last,
                requested: t,
            });
        }
        if self.times.len() == 1 {
            return Ok((0, 0.0));
        }
        let i = self.times.partition_point(|&s| s < t).clamp(1, self.times.len() - 1);
        let (a, b) = (self.times[i - 1], self.times[i]);
        Ok((i - 1, ((t - a) / (b - a)).clamp(0.0, 1.0)))
    }

    /// Piecewise linear in space and time.
    pub fn value(&self, x: f64, t: f64) -> Result<f64, ReferenceError> {
        let (i, q) = self.time_slot(t)?;
        let j = self.cell(x);
        let s = (x - self.grid[j]) / self.h();
        let at = |row: &[f64]| (1.0 - s) * row[j] + s * row[j + 1];
        let a = at(&self.values[i]);
        if q == 0.0 {
            return Ok(a);
        }
        Ok((1.0 - q) * a + q * at(&self.values[i + 1]))
    }

    pub fn dx(&self, x: f64, t: f64) -> Result<f64, ReferenceError> {
        let (i, q) = self.time_slot(t)?;
        let j = self.cell(x);
        let slope = |row: &[f64]| (row[j + 1] - row[j]) / self.h();
        let a = slope(&self.values[i]);
        if q == 0.0 {
            return Ok(a);
        }
        Ok((1.0 - q) * a + q * slope(&self.values[i + 1]))
    }

    /// `(h Σ_j (u_j - v(x_j))²)^½` at the final time.
    pub fn final_discrete_l2(&self, v: impl Fn(f64) -> f64) -> f64 {
        let h = self.h();
        (h * self
            .grid
            .iter()
            .zip(self.final_values())
            .map(|(&x, &u)| (u - v(x)).powi(2))
            .sum::<f64>())
            .sqrt()
    }

    /// Exact `L²` distance at the final time to a function, by 4-point Gauss
    /// per grid cell.
    pub fn final_l2(&self, v: impl Fn(f64) -> f64) -> f64 {
        let (nodes, weights) = gauss4();
        let h = self.h();
        let u = self.final_values();
        let mut sum = 0.0;
        for j in 0..self.grid.len() - 1 {
            for (s, w) in nodes.iter().zip(weights) {
                let r = 0.5 * (1.0 + s);
                let x = self.grid[j] + r * h;
                let uh = (1.0 - r) * u[j] + r * u[j + 1];
                sum += 0.5 * h * w * (uh - v(x)).powi(2);
            }
        }
        sum.sqrt()
    }
}

fn gauss4() -> ([f64; 4], [f64; 4]) {
    let a = (3.0 / 7.0 - 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let b = (3.0 / 7.0 + 2.0 / 7.0 * (6.0f64 / 5.0).sqrt()).sqrt();
    let wa = (18.0 + 30.0f64.sqrt()) / 36.0;
    let wb = (18.0 - 30.0f64.sqrt()) / 36.0;
    ([-b, -a, a, b], [wb, wa, wa, wb])
}

/// Uniform-grid backward Euler with full Newton iteration, for validation.
///
/// P1 in space on `m_elements` cells; nonlinear terms with 4-point Gauss per
/// cell; initial values interpolated at the nodes.
pub fn reference_solve(
    problem: &ProblemSpec,
    m_elements: usize,
    m_steps: usize,
    newton_tol: f64,
    keep: Keep,
) -> Result<Trajectory, ReferenceError> {
    if m_elements < 2 || m_steps == 0 {
        return Err(ReferenceError::InvalidResolution(format!(
            "{m_elements} elements, {m_steps} steps"
        )));
    }
    if !(newton_tol > 0.0 && newton_tol <= 1e-10) {
        return Err(ReferenceError::InvalidResolution(format!(
            "Newton tolerance {newton_tol:e} must lie in (0, 1e-10]"
        )));
    }
    let (a, b) = problem.domain();
    let h = (b - a) / m_elements as f64;
    let grid: Vec<f64> = (0..=m_elements).map(|j| a + h * j as f64).collect();
    let k = problem.final_time() / m_steps as f64;
    let eps = problem.eps();
    let (gx, gw) = gauss4();
    let n = m_elements - 1;

    let mut u: Vec<f64> = grid.iter().map(|&x| problem.initial(x)).collect();
    u[0] = 0.0;
    u[m_elements] = 0.0;

    let mut times = vec![0.0];
    let mut values = vec![u.clone()];
    // consistent mass on a uniform grid: h/6 [1 4 1], stiffness 1/h [-1 2 -1]
    let (m_diag, m_off) = (4.0 * h / 6.0, h / 6.0);
    let (a_diag, a_off) = (2.0 / h, -1.0 / h);

    for step in 1..=m_steps {
        let t = k * step as f64;
        let prev = u.clone();
        let mut converged = false;
        for _ in 0..MAX_NEWTON {
            // element-wise f and ∂u f tested against the two hat functions
            let mut load = vec![0.0; m_elements + 1];
            let mut jd = vec![0.0; m_elements + 1];
            let mut jo = vec![0.0; m_elements];
            for e in 0..m_elements {
                for (s, w) in gx.iter().zip(&gw) {
                    let r = 0.5 * (1.0 + s);
                    let x = grid[e] + r * h;
                    let ux = (1.0 - r) * u[e] + r * u[e + 1];
                    let wq = 0.5 * h * w;
                    let fv = problem.f(ux, x, t);
                    let dv = problem.df(ux, x, t);
                    load[e] += wq * fv * (1.0 - r);
                    load[e + 1] += wq * fv * r;
                    jd[e] += wq * dv * (1.0 - r) * (1.0 - r);
                    jd[e + 1] += wq * dv * r * r;
                    jo[e] += wq * dv * r * (1.0 - r);
                }
            }
            let mut diag = vec![0.0; n];
            let mut off = vec![0.0; n.saturating_sub(1)];
            let mut rhs = vec![0.0; n];
            for i in 0..n {
                let node = i + 1;
                diag[i] = m_diag / k + eps * a_diag - jd[node];
                if i + 1 < n {
                    off[i] = m_off / k + eps * a_off - jo[node];
                }
                let du = |v: &[f64]| m_off * v[node - 1] + m_diag * v[node] + m_off * v[node + 1];
                let lap = a_off * u[node - 1] + a_diag * u[node] + a_off * u[node + 1];
                rhs[i] = -(du(&u) - du(&prev)) / k - eps * lap + load[node];
            }
            let delta = thomas(&diag, &off, &rhs).ok_or(ReferenceError::Singular(step))?;
            let mut norm = 0.0;
            for (i, d) in delta.iter().enumerate() {
                u[i + 1] += d;
                norm += d * d;
            }
            if (h * norm).sqrt() <= newton_tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(ReferenceError::NoConvergence {
                step,
                iterations: MAX_NEWTON,
                tol: newton_tol,
            });
        }
        let store = match keep {
            Keep::All => true,
            Keep::Final => step == m_steps,
            Keep::Every(every) => step % every.max(1) == 0 || step == m_steps,
        };
        if store {
            times.push(t);
            values.push(u.clone());
        }
    }
    Ok(Trajectory {
        times,
        grid,
        values,
    })
}

fn thomas(diag: &[f64], off: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut p = diag[0];
    for i in 0..n {
        if i > 0 {
            p = diag[i] - off[i - 1] * c[i - 1];
        }
        if p == 0.0 || !p.is_finite() {
            return None;
        }
        if i + 1 < n {
            c[i] = off[i] / p;
        }
        d[i] = (rhs[i] - if i > 0 { off[i - 1] * d[i - 1] } else { 0.0 }) / p;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Some(d)
}

/// Number of modes after which the pointwise tail of [`fourier_exact`] is
/// below `tol` on `[0, t]`.
///
/// Every mode is bounded by `|ŝ_k| (e^t + 2) / (1 + ε k²π²)`, and
/// `Σ_{k>n} k⁻³ ≤ 1/(2n²)`.
pub fn fourier_modes(eps: f64, t: f64, tol: f64) -> usize {
    let c = 4.0 * (t.exp() + 2.0) / (PI.powi(3) * eps);
    (c / (2.0 * tol)).sqrt().ceil().max(1.0) as usize
}

/// Sine coefficient of the constant 1 on `(0, 1)`.
fn one_coefficient(k: usize) -> f64 {
    if k % 2 == 1 {
        4.0 / (k as f64 * PI)
    } else {
        0.0
    }
}

/// Separation-of-variables solution of `u_t - εu'' = e^t` on `(0, 1)` with
/// `u(0) = g_ε`, truncated after `n_modes` terms.
pub fn fourier_exact(eps: f64, x: f64, t: f64, n_modes: usize) -> f64 {
    FourierSeries::new(eps, n_modes).value(x, t)
}

/// [`fourier_exact`] with the coefficients evaluated once per time.
#[derive(Debug, Clone)]
pub struct FourierSeries {
    eps: f64,
    n_modes: usize,
}

impl FourierSeries {
    pub fn new(eps: f64, n_modes: usize) -> Self {
        FourierSeries {
            eps,
            n_modes: n_modes.max(1),
        }
    }

    pub fn with_tail(eps: f64, t_max: f64, tol: f64) -> Self {
        Self::new(eps, fourier_modes(eps, t_max, tol))
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// `(a_k, b_k)` such that `u = Σ a_k sin(kπx)` and `u_x = Σ b_k cos(kπx)`.
    fn coefficients(&self, t: f64) -> Vec<f64> {
        (1..=self.n_modes)
            .map(|k| {
                let s = one_coefficient(k);
                let lambda = (k as f64 * PI).powi(2);
                let damp = 1.0 + self.eps * lambda;
                let g = s / damp;
                let decay = (-self.eps * lambda * t).exp();
                g * decay + s * (t.exp() - decay) / damp
            })
            .collect()
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.values(&[x], t)[0]
    }

    pub fn values(&self, xs: &[f64], t: f64) -> Vec<f64> {
        self.sample(xs, t, false).0
    }

    /// `∂_x u` at several points.
    pub fn derivatives(&self, xs: &[f64], t: f64) -> Vec<f64> {
        self.sample(xs, t, true).1
    }

    /// Values and, if asked, derivatives, summed with the three-term
    /// recurrences for `sin(kπx)` and `cos(kπx)`; `LANES` points advance together.
    fn sample(&self, xs: &[f64], t: f64, with_dx: bool) -> (Vec<f64>, Vec<f64>) {
        const LANES: usize = 8;
        let c = self.coefficients(t);
        let dc: Vec<f64> = c.iter().enumerate().map(|(i, a)| a * (i + 1) as f64 * PI).collect();
        let mut values = Vec::with_capacity(xs.len());
        let mut dx = Vec::with_capacity(if with_dx { xs.len() } else { 0 });
        for chunk in xs.chunks(LANES) {
            let mut two_cos = [0.0; LANES];
            let (mut s_prev, mut s_cur) = ([0.0; LANES], [0.0; LANES]);
            let (mut c_prev, mut c_cur) = ([1.0; LANES], [1.0; LANES]);
            for (l, &x) in chunk.iter().enumerate() {
                let theta = PI * x;
                two_cos[l] = 2.0 * theta.cos();
                s_cur[l] = theta.sin();
                c_cur[l] = theta.cos();
            }
            let (mut sum, mut dsum) = ([0.0; LANES], [0.0; LANES]);
            for (a, b) in c.iter().zip(&dc) {
                for l in 0..LANES {
                    sum[l] += a * s_cur[l];
                    let next = two_cos[l] * s_cur[l] - s_prev[l];
                    s_prev[l] = s_cur[l];
                    s_cur[l] = next;
                }
                if with_dx {
                    for l in 0..LANES {
                        dsum[l] += b * c_cur[l];
                        let next = two_cos[l] * c_cur[l] - c_prev[l];
                        c_prev[l] = c_cur[l];
                        c_cur[l] = next;
                    }
                }
            }
            values.extend_from_slice(&sum[..chunk.len()]);
            if with_dx {
                dx.extend_from_slice(&dsum[..chunk.len()]);
            }
        }
        (values, dx)
    }
}

/// Something that can be compared with an adaptive solution.
pub trait Oracle {
    /// Values and x-derivatives at the given points and time.
    fn sample(&self, xs: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>), ReferenceError>;
}

impl Oracle for ExactSolution {
    fn sample(&self, xs: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>), ReferenceError> {
        Ok((
            xs.iter().map(|&x| (self.value)(x, t)).collect(),
            xs.iter().map(|&x| (self.dx)(x, t)).collect(),
        ))
    }
}

impl Oracle for FourierSeries {
    fn sample(&self, xs: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>), ReferenceError> {
        Ok(FourierSeries::sample(self, xs, t, true))
    }
}

impl Oracle for Trajectory {
    fn sample(&self, xs: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>), ReferenceError> {
        let values = xs.iter().map(|&x| self.value(x, t)).collect::<Result<_, _>>()?;
        let dx = xs.iter().map(|&x| self.dx(x, t)).collect::<Result<_, _>>()?;
        Ok((values, dx))
    }
}

/// Squared true errors up to some time.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrueError {
    /// `∫₀ᵗ |||u - u_I|||²_ε`
    pub l2_energy: f64,
    /// `max_s ‖u(s) - u_I(s)‖₀²` over the sample times
    pub linf_l2: f64,
}

impl TrueError {
    pub fn total(&self) -> f64 {
        self.l2_energy + self.linf_l2
    }
}

/// `(‖e‖₀², ‖e'‖₀²)` for `e = u - w` with `w = q a + (1 - q) b` on the common
/// refinement of the meshes of `a` and `b`, 3-point Gauss per piece.
fn snapshot_error(
    oracle: &dyn Oracle,
    a: &FeFunction,
    b: &FeFunction,
    q: f64,
    t: f64,
) -> Result<(f64, f64), ReferenceError> {
    let rule = GaussLegendre::three();
    let pieces = common_refinement(a.mesh(), b.mesh())?;
    let mut xs = Vec::with_capacity(3 * pieces.len());
    for p in &pieces {
        xs.extend(rule.on(p.lo, p.hi).map(|(x, _)| x));
    }
    let (u, du) = oracle.sample(&xs, t)?;
    let (mut l2, mut semi) = (0.0, 0.0);
    let mut i = 0;
    for p in &pieces {
        let slope = q * a.slope(p.first) + (1.0 - q) * b.slope(p.second);
        for (x, w) in rule.on(p.lo, p.hi) {
            let wv = q * a.eval_in(p.first, x) + (1.0 - q) * b.eval_in(p.second, x);
            l2 += w * (u[i] - wv).powi(2);
            semi += w * (du[i] - slope).powi(2);
            i += 1;
        }
    }
    Ok((l2, semi))
}

/// Streams the true error of an adaptive run against an oracle.
///
/// On each interval the energy integral uses 3-point Gauss in time and the
/// `L^∞(L²)` part is the maximum over `t_n` and those three Gauss times.
pub struct TrueErrorAccumulator<'a> {
    oracle: &'a dyn Oracle,
    eps: f64,
    current: TrueError,
    /// `(t_n, error up to t_n)` for every accepted step.
    pub history: Vec<(f64, TrueError)>,
    failure: Option<ReferenceError>,
}

impl<'a> TrueErrorAccumulator<'a> {
    pub fn new(oracle: &'a dyn Oracle, eps: f64) -> Self {
        TrueErrorAccumulator {
            oracle,
            eps,
            current: TrueError::default(),
            history: Vec::new(),
            failure: None,
        }
    }

    pub fn current(&self) -> TrueError {
        self.current
    }

    pub fn failure(&self) -> Option<&ReferenceError> {
        self.failure.as_ref()
    }

    pub fn start(&mut self, initial: &FeFunction) -> Result<(), ReferenceError> {
        let (l2, _) = snapshot_error(self.oracle, initial, initial, 1.0, 0.0)?;
        self.current = TrueError {
            l2_energy: 0.0,
            linf_l2: l2,
        };
        Ok(())
    }

    /// Adds the interval `(t_n - k_n, t_n]` between `previous` and `current`.
    pub fn add_interval(
        &mut self,
        t_n: f64,
        k_n: f64,
        previous: &FeFunction,
        current: &FeFunction,
    ) -> Result<(), ReferenceError> {
        let t0 = t_n - k_n;
        let mut energy = 0.0;
        let mut linf = self.current.linf_l2;
        for (s, w) in GaussLegendre::three().on(t0, t_n) {
            let q = (t_n - s) / k_n;
            let (l2, semi) = snapshot_error(self.oracle, previous, current, q, s)?;
            energy += w * (l2 + self.eps * semi);
            linf = linf.max(l2);
        }
        let (l2, _) = snapshot_error(self.oracle, current, current, 1.0, t_n)?;
        self.current = TrueError {
            l2_energy: self.current.l2_energy + energy,
            linf_l2: linf.max(l2),
        };
        self.history.push((t_n, self.current));
        Ok(())
    }
}

impl StepSink for TrueErrorAccumulator<'_> {
    fn on_start(&mut self, initial: &FeFunction) -> std::io::Result<()> {
        if let Err(e) = self.start(initial) {
            self.failure.get_or_insert(e);
        }
        Ok(())
    }

    fn on_accept(&mut self, record: &StepRecord, previous: &FeFunction, current: &FeFunction) -> std::io::Result<()> {
        if self.failure.is_some() {
            return Ok(());
        }
        if let Err(e) = self.add_interval(record.time, record.step, previous, current) {
            self.failure = Some(e);
        }
        Ok(())
    }
}

/// True error of a stored trajectory of P1 functions, `solutions[i]` at `times[i]`.
pub fn true_error(
    times: &[f64],
    solutions: &[FeFunction],
    oracle: &dyn Oracle,
    eps: f64,
) -> Result<TrueError, ReferenceError> {
    let mut acc = TrueErrorAccumulator::new(oracle, eps);
    if let Some(first) = solutions.first() {
        acc.start(first)?;
    }
    for i in 1..times.len().min(solutions.len()) {
        acc.add_interval(times[i], times[i] - times[i - 1], &solutions[i - 1], &solutions[i])?;
    }
    Ok(acc.current())
}

/// `E^n / (true error)²`; `None` when the true error vanishes. `n = 0` uses `η₀²`.
pub fn efficiency_index(ledger: &ErrorLedger, true_error: f64, n: usize) -> Option<f64> {
    let estimate = match n {
        0 => ledger.initial_error().powi(2),
        n => ledger.entries().get(n - 1)?.bound,
    };
    ratio(estimate, true_error)
}

/// `estimate / truth`, absent when `truth` is not positive.
pub fn ratio(estimate: f64, truth: f64) -> Option<f64> {
    (truth > 0.0 && truth.is_finite()).then(|| estimate / truth)
}

/// Mean of the indices weighted by the step lengths.
pub fn time_averaged(indices: &[(f64, f64)]) -> Option<f64> {
    let mut last = 0.0;
    let (mut sum, mut span) = (0.0, 0.0);
    for &(t, index) in indices {
        let k = t - last;
        sum += k * index;
        span += k;
        last = t;
    }
    (span > 0.0).then(|| sum / span)
}
