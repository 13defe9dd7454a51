#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Strictly increasing nodes on (a, b) with random spacing.
pub fn random_nodes(rng: &mut ChaCha8Rng, a: f64, b: f64, elements: usize) -> Vec<f64> {
    let widths: Vec<f64> = (0..elements).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = widths.iter().sum();
    let mut nodes = vec![a];
    let mut x = a;
    for w in &widths[..elements - 1] {
        x += (b - a) * w / total;
        nodes.push(x);
    }
    nodes.push(b);
    nodes
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        let pivot_row = a[col].clone();
        for row in col + 1..n {
            let factor = a[row][col] / pivot_row[col];
            for (x, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= factor * p;
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

use std::sync::Arc;

use parabolic_adapt::estimators::{decomposition_check, nonlinear_indicators, Candidate};
use parabolic_adapt::fem::{assemble_mass, assemble_stiffness, FeFunction};
use parabolic_adapt::mesh::Mesh;
use parabolic_adapt::newton::{discrete_residual, jacobian, newton_step, NewtonState};
use parabolic_adapt::problems::{example1, example2, example3, InitialDatum, ProblemSpec};
use parabolic_adapt::quadrature::GaussLegendre;

/// P1 function on a random mesh of (a, b) with random interior values.
pub fn random_function(rng: &mut ChaCha8Rng, a: f64, b: f64, elements: usize, amplitude: f64) -> FeFunction {
    let mesh = Arc::new(Mesh::from_nodes(random_nodes(rng, a, b, elements)).unwrap());
    let interior: Vec<f64> = (0..mesh.num_interior())
        .map(|_| rng.random_range(-amplitude..amplitude))
        .collect();
    FeFunction::from_interior(mesh, &interior).unwrap()
}

/// Sorted union of the nodes of several meshes.
fn merged_breaks(meshes: &[&Mesh]) -> Vec<f64> {
    let mut breaks: Vec<f64> = meshes.iter().flat_map(|m| m.nodes().iter().copied()).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// Mass and stiffness on uniform meshes with `2^p` elements against
/// `2h/3, h/6` and `2/h, -1/h`; dyadic `h` makes both exact in floating point.
pub fn check_uniform_assembly() -> Result<String, String> {
    for p in 1..=10 {
        let m = 1usize << p;
        let mesh = Mesh::uniform(0.0, 1.0, m).unwrap();
        let h = 1.0 / m as f64;
        let mass = assemble_mass(&mesh);
        let stiff = assemble_stiffness(&mesh);
        if mass.diag.iter().any(|&d| d != 2.0 * h / 3.0) || mass.off.iter().any(|&o| o != h / 6.0) {
            return Err(format!("mass matrix differs from 2h/3, h/6 at m = {m}"));
        }
        if stiff.diag.iter().any(|&d| d != 2.0 / h) || stiff.off.iter().any(|&o| o != -1.0 / h) {
            return Err(format!("stiffness matrix differs from 2/h, -1/h at m = {m}"));
        }
    }
    Ok("mass and stiffness exact on 2..1024 uniform elements".into())
}

/// Three-point Gauss on `x^d`, `d ≤ 5`, over random intervals.
pub fn check_gauss_monomials(seed: u64) -> Result<String, String> {
    let mut rng = rng(seed);
    let rule = GaussLegendre::three();
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let lo: f64 = rng.random_range(-2.0..2.0);
        let hi = lo + rng.random_range(0.01..2.0);
        for d in 0..=5i32 {
            let exact = (hi.powi(d + 1) - lo.powi(d + 1)) / (d + 1) as f64;
            let q = rule.integrate(lo, hi, |x| x.powi(d));
            let scale = exact.abs().max(1.0);
            worst = worst.max((q - exact).abs() / scale);
        }
    }
    if worst <= 1e-13 {
        Ok(format!("worst relative error {worst:.2e}"))
    } else {
        Err(format!("worst relative error {worst:.2e} > 1e-13"))
    }
}

/// Random nonlinear instances: Example 2, Example 3 and a sign-changing cubic.
pub fn random_nonlinear_problem(rng: &mut ChaCha8Rng, which: usize) -> ProblemSpec {
    let eps = 10f64.powf(rng.random_range(-5.0..-1.0));
    match which % 3 {
        0 => example2(eps, InitialDatum::Zero).unwrap(),
        1 => example3(eps, 4.0, InitialDatum::default_bump()).unwrap(),
        _ => ProblemSpec::new(
            "cubic",
            eps,
            (0.0, 1.0),
            1.0,
            Arc::new(|u: f64, x: f64, t: f64| u - u * u * u + x * t),
            Arc::new(|u: f64, _, _| 1.0 - 3.0 * u * u),
            Arc::new(|_| 0.0),
        )
        .unwrap(),
    }
}

/// Central differences of the discrete residual against the assembled Jacobian.
pub fn check_jacobian_fd(seed: u64, instances: usize) -> Result<String, String> {
    let mut rng = rng(seed);
    let mut worst = 0.0f64;
    for i in 0..instances {
        let problem = random_nonlinear_problem(&mut rng, i);
        let (a, b) = problem.domain();
        let elements = rng.random_range(3..12);
        let u = random_function(&mut rng, a, b, elements, 1.0);
        let elements = rng.random_range(3..12);
        let previous = random_function(&mut rng, a, b, elements, 1.0);
        let step = 10f64.powf(rng.random_range(-3.0..-0.5));
        let time = rng.random_range(step..1.0);
        let j = jacobian(&u, step, time, &problem).map_err(|e| e.to_string())?;
        let dense = j.to_dense();
        let scale = j.norm_inf();
        let n = u.mesh().num_interior();
        let h = 1e-6;
        for col in 0..n {
            let shifted = |s: f64| {
                let mut v = u.interior().to_vec();
                v[col] += s;
                let w = FeFunction::from_interior(u.mesh().clone(), &v).unwrap();
                discrete_residual(&w, &previous, step, time, &problem).unwrap()
            };
            let (plus, minus) = (shifted(h), shifted(-h));
            for row in 0..n {
                let fd = (plus[row] - minus[row]) / (2.0 * h);
                worst = worst.max((fd - dense[row][col]).abs() / scale);
            }
        }
    }
    if worst <= 1e-6 {
        Ok(format!("{instances} instances, worst relative deviation {worst:.2e}"))
    } else {
        Err(format!("worst relative deviation {worst:.2e} > 1e-6"))
    }
}

/// Two Newton updates on Example 1 from random data: the second increment
/// must vanish and `Υ²_K` must be zero.
pub fn check_affine_newton(seed: u64, instances: usize) -> Result<String, String> {
    let mut rng = rng(seed);
    let (mut worst_delta, mut worst_upsilon) = (0.0f64, 0.0f64);
    for _ in 0..instances {
        let eps = 10f64.powf(-(rng.random_range(1..=5) as f64));
        let problem = example1(eps).unwrap();
        let (m1, m2) = (rng.random_range(4..40), rng.random_range(4..40));
        let previous = random_function(&mut rng, 0.0, 1.0, m1, 2.0);
        let start = random_function(&mut rng, 0.0, 1.0, m2, 5.0);
        let step = 10f64.powf(rng.random_range(-4.0..-1.0));
        let time = rng.random_range(step..1.0);
        let state = |current: FeFunction, iteration| NewtonState {
            iteration,
            current,
            previous: &previous,
            step,
            time,
        };
        let first = newton_step(&state(start.clone(), 0), &problem).map_err(|e| e.to_string())?;
        let second = newton_step(&state(first.next.clone(), 1), &problem).map_err(|e| e.to_string())?;
        let delta = parabolic_adapt::fem::norms(&second.increment, eps).l2;
        worst_delta = worst_delta.max(delta);
        let candidate = Candidate {
            current: &start,
            increment: &first.increment,
            next: &first.next,
            previous: &previous,
            step,
            time,
            prev_time: time - step,
        };
        let ups: f64 = nonlinear_indicators(&candidate, &problem)
            .map_err(|e| e.to_string())?
            .iter()
            .sum();
        worst_upsilon = worst_upsilon.max(ups);
    }
    if worst_delta <= 1e-12 && worst_upsilon == 0.0 {
        Ok(format!(
            "{instances} candidates, max ‖δ‖₀ of second step {worst_delta:.2e}, max Υ² {worst_upsilon:e}"
        ))
    } else {
        Err(format!(
            "max ‖δ‖₀ {worst_delta:.2e} (limit 1e-12), max Υ² {worst_upsilon:e} (must be 0)"
        ))
    }
}

/// Test-side evaluation of `⟨F⟩` and its three parts at time `s`, by
/// composite Simpson on the merged breakpoints. Returns `(F, [F¹, F², F³])`.
pub fn split_residual(c: &Candidate, v: &FeFunction, problem: &ProblemSpec, s: f64) -> (f64, [f64; 3]) {
    let eps = problem.eps();
    let q = (c.time - s) / c.step;
    let breaks = merged_breaks(&[c.next.mesh(), c.previous.mesh(), v.mesh()]);
    let mut full = 0.0;
    let mut parts = [0.0; 3];
    for w in breaks.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let (en, ep, ev) = (
            c.next.mesh().locate(mid),
            c.previous.mesh().locate(mid),
            v.mesh().locate(mid),
        );
        let d_next = c.next.slope(en);
        let d_interp = q * c.previous.slope(ep) + (1.0 - q) * d_next;
        let dv = v.slope(ev);
        full += simpson(w[0], w[1], 8, |x| {
            let interp = q * c.previous.eval_in(ep, x) + (1.0 - q) * c.next.eval_in(en, x);
            let dt = (c.next.eval_in(en, x) - c.previous.eval_in(ep, x)) / c.step;
            (problem.f(interp, x, s) - dt) * v.eval_in(ev, x) - eps * d_interp * dv
        });
        parts[0] += simpson(w[0], w[1], 8, |x| {
            let cur = c.current.eval_in(en, x);
            let lin = problem.f(cur, x, c.time) + problem.df(cur, x, c.time) * c.increment.eval_in(en, x);
            let dt = (c.next.eval_in(en, x) - c.previous.eval_in(ep, x)) / c.step;
            (lin - dt) * v.eval_in(ev, x) - eps * d_next * dv
        });
        parts[1] += simpson(w[0], w[1], 8, |x| {
            let interp = q * c.previous.eval_in(ep, x) + (1.0 - q) * c.next.eval_in(en, x);
            let change = problem.f(interp, x, s) - problem.f(c.next.eval_in(en, x), x, c.time);
            change * v.eval_in(ev, x) - eps * (d_interp - d_next) * dv
        });
        parts[2] += simpson(w[0], w[1], 8, |x| {
            let cur = c.current.eval_in(en, x);
            let lin = problem.f(cur, x, c.time) + problem.df(cur, x, c.time) * c.increment.eval_in(en, x);
            (problem.f(c.next.eval_in(en, x), x, c.time) - lin) * v.eval_in(ev, x)
        });
    }
    (full, parts)
}

/// Decomposition identity on Example 2 data for `count` random test functions,
/// checked both by the library and by [`split_residual`].
pub fn check_decomposition(seed: u64, count: usize) -> Result<String, String> {
    let mut rng = rng(seed);
    let problem = example2(1e-3, InitialDatum::Zero).unwrap();
    let previous = random_function(&mut rng, 0.0, 1.0, 13, 0.8);
    let current = random_function(&mut rng, 0.0, 1.0, 17, 0.8);
    let (step, time) = (0.05, 0.8);
    let update = newton_step(
        &NewtonState {
            iteration: 0,
            current: current.clone(),
            previous: &previous,
            step,
            time,
        },
        &problem,
    )
    .map_err(|e| e.to_string())?;
    let c = Candidate {
        current: &current,
        increment: &update.increment,
        next: &update.next,
        previous: &previous,
        step,
        time,
        prev_time: time - step,
    };
    let times: Vec<f64> = (0..=4).map(|i| time - step + step * i as f64 / 4.0).collect();
    let mut worst = 0.0f64;
    for _ in 0..count {
        let elements = rng.random_range(3..25);
        let mesh = Arc::new(Mesh::from_nodes(random_nodes(&mut rng, 0.0, 1.0, elements)).unwrap());
        let values: Vec<f64> = (0..mesh.num_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v = FeFunction::new(mesh, values).map_err(|e| e.to_string())?;
        let lib = decomposition_check(&c, &v, &problem, &times).map_err(|e| e.to_string())?;
        worst = worst.max(lib.defect / lib.scale);
        for &s in &times {
            let (full, parts) = split_residual(&c, &v, &problem, s);
            let scale = full.abs().max(parts.iter().map(|p| p.abs()).fold(0.0, f64::max));
            worst = worst.max((full - parts.iter().sum::<f64>()).abs() / scale);
        }
    }
    if worst <= 1e-10 {
        Ok(format!("{count} test functions, worst relative defect {worst:.2e}"))
    } else {
        Err(format!("worst relative defect {worst:.2e} > 1e-10"))
    }
}

/// `L²` gap at `T = 1` between the uniform reference solver and the Fourier
/// series for Example 1 with `ε = 0.1`.
pub fn oracle_gap(elements: usize, steps: usize) -> f64 {
    use parabolic_adapt::reference::{reference_solve, FourierSeries, Keep};
    let eps = 0.1;
    let problem = example1(eps).unwrap();
    let series = FourierSeries::with_tail(eps, 1.0, 1e-9);
    let trajectory = reference_solve(&problem, elements, steps, 1e-12, Keep::Final).unwrap();
    trajectory.final_l2(|x| series.value(x, 1.0))
}
