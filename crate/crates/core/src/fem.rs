//! Continuous piecewise-linear finite elements on a [`Mesh`].
//!
//! Matrices act on interior nodes only (homogeneous Dirichlet data); interior
//! node `i` of the mesh is row `i - 1`. Integrals that involve functions living
//! on two different meshes are evaluated on the common refinement of both
//! partitions so that piecewise-polynomial integrands are integrated exactly.

use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{solve_banded, BandedSystem, LinalgError, SymTridiagonal};
use crate::mesh::{ElementId, Mesh};
use crate::quadrature::GaussLegendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("non-finite {what} at x = {x}")]
    NonFinite { what: &'static str, x: f64 },
    #[error("expected {expected} nodal values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("node {0} is not an interior node")]
    BoundaryNode(usize),
    #[error("meshes cover different intervals")]
    DomainMismatch,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A P1 function: mesh plus one value per node (boundary nodes included).
#[derive(Debug, Clone, PartialEq)]
pub struct FeFunction {
    mesh: Arc<Mesh>,
    values: Vec<f64>,
}

impl FeFunction {
    pub fn new(mesh: Arc<Mesh>, values: Vec<f64>) -> Result<Self, FemError> {
        if values.len() != mesh.num_nodes() {
            return Err(FemError::Dimension {
                expected: mesh.num_nodes(),
                got: values.len(),
            });
        }
        Ok(FeFunction { mesh, values })
    }

    pub fn zero(mesh: Arc<Mesh>) -> Self {
        let values = vec![0.0; mesh.num_nodes()];
        FeFunction { mesh, values }
    }

    /// Member of the zero-trace space with the given interior values.
    pub fn from_interior(mesh: Arc<Mesh>, interior: &[f64]) -> Result<Self, FemError> {
        if interior.len() != mesh.num_interior() {
            return Err(FemError::Dimension {
                expected: mesh.num_interior(),
                got: interior.len(),
            });
        }
        let mut values = Vec::with_capacity(mesh.num_nodes());
        values.push(0.0);
        values.extend_from_slice(interior);
        values.push(0.0);
        Ok(FeFunction { mesh, values })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<Mesh>, f: impl Fn(f64) -> f64) -> Self {
        let values = mesh.nodes().iter().map(|&x| f(x)).collect();
        FeFunction { mesh, values }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interior(&self) -> &[f64] {
        &self.values[1..self.values.len() - 1]
    }

    pub fn has_zero_trace(&self) -> bool {
        self.values[0] == 0.0 && self.values[self.values.len() - 1] == 0.0
    }

    /// Value at `x` using the linear piece of element `elem`.
    #[inline]
    pub fn eval_in(&self, elem: ElementId, x: f64) -> f64 {
        let (l, r) = self.mesh.element(elem);
        let s = (x - l) / (r - l);
        self.values[elem] * (1.0 - s) + self.values[elem + 1] * s
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_in(self.mesh.locate(x), x)
    }

    /// Derivative on element `elem`.
    #[inline]
    pub fn slope(&self, elem: ElementId) -> f64 {
        (self.values[elem + 1] - self.values[elem]) / self.mesh.element_len(elem)
    }

    /// `u'(x⁺) - u'(x⁻)` at an interior node.
    pub fn gradient_jump(&self, node: usize) -> Result<f64, FemError> {
        if node == 0 || node + 1 >= self.mesh.num_nodes() {
            return Err(FemError::BoundaryNode(node));
        }
        Ok(self.slope(node) - self.slope(node - 1))
    }

    /// `self + scale * other` on the same mesh.
    pub fn axpy(&self, scale: f64, other: &FeFunction) -> FeFunction {
        assert!(Arc::ptr_eq(&self.mesh, &other.mesh) || self.mesh == other.mesh);
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + scale * b)
            .collect();
        FeFunction {
            mesh: self.mesh.clone(),
            values,
        }
    }

    /// Node with the largest value.
    pub fn argmax(&self) -> f64 {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
                if v > best.1 {
                    (i, v)
                } else {
                    best
                }
            });
        self.mesh.nodes()[i]
    }
}

/// One interval of the common refinement of two meshes, with the element of
/// each mesh that contains it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub first: ElementId,
    pub second: ElementId,
}

/// Common refinement of two partitions of the same interval.
pub fn common_refinement(a: &Mesh, b: &Mesh) -> Result<Vec<Piece>, FemError> {
    if a.bounds() != b.bounds() {
        return Err(FemError::DomainMismatch);
    }
    let (xa, xb) = (a.nodes(), b.nodes());
    let mut pieces = Vec::with_capacity(xa.len() + xb.len());
    let (mut i, mut j) = (0, 0);
    let mut lo = xa[0];
    while i < a.num_elements() && j < b.num_elements() {
        let hi = xa[i + 1].min(xb[j + 1]);
        pieces.push(Piece {
            lo,
            hi,
            first: i,
            second: j,
        });
        if xa[i + 1] == hi {
            i += 1;
        }
        if xb[j + 1] == hi {
            j += 1;
        }
        lo = hi;
    }
    Ok(pieces)
}

fn check_finite(what: &'static str, x: f64, v: f64) -> Result<f64, FemError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FemError::NonFinite { what, x })
    }
}

/// Scatters a local 2x2 symmetric element matrix for element `e`.
fn scatter(matrix: &mut SymTridiagonal, mesh: &Mesh, e: ElementId, local: [f64; 3]) {
    let [aa, ab, bb] = local;
    let n = mesh.num_nodes();
    // element e couples nodes e and e + 1; interior node i is row i - 1
    let left = e;
    let right = e + 1;
    let left_interior = left > 0;
    let right_interior = right < n - 1;
    if left_interior {
        matrix.diag[left - 1] += aa;
    }
    if right_interior {
        matrix.diag[right - 1] += bb;
    }
    if left_interior && right_interior {
        matrix.off[left - 1] += ab;
    }
}

fn scatter_load(load: &mut [f64], mesh: &Mesh, e: ElementId, local: [f64; 2]) {
    let n = mesh.num_nodes();
    if e > 0 {
        load[e - 1] += local[0];
    }
    if e + 1 < n - 1 {
        load[e] += local[1];
    }
}

/// Consistent mass matrix `∫ φ_i φ_j`, exact.
pub fn assemble_mass(mesh: &Mesh) -> SymTridiagonal {
    let mut m = SymTridiagonal::zeros(mesh.num_interior());
    for e in 0..mesh.num_elements() {
        let h = mesh.element_len(e);
        scatter(&mut m, mesh, e, [h / 3.0, h / 6.0, h / 3.0]);
    }
    m
}

/// Stiffness matrix `∫ φ_i' φ_j'`, exact.
pub fn assemble_stiffness(mesh: &Mesh) -> SymTridiagonal {
    let mut a = SymTridiagonal::zeros(mesh.num_interior());
    for e in 0..mesh.num_elements() {
        let inv = mesh.element_len(e).recip();
        scatter(&mut a, mesh, e, [inv, -inv, inv]);
    }
    a
}

/// `∫ w φ_i φ_j` with 3-point Gauss per element.
pub fn assemble_weighted_mass(
    mesh: &Mesh,
    w: impl Fn(f64) -> f64,
) -> Result<SymTridiagonal, FemError> {
    assemble_weighted_mass_by_element(mesh, |_, x| w(x))
}

/// As [`assemble_weighted_mass`], with the weight told which element it is
/// evaluated on.
pub fn assemble_weighted_mass_by_element(
    mesh: &Mesh,
    w: impl Fn(ElementId, f64) -> f64,
) -> Result<SymTridiagonal, FemError> {
    let rule = GaussLegendre::three();
    let mut m = SymTridiagonal::zeros(mesh.num_interior());
    for e in 0..mesh.num_elements() {
        let (l, r) = mesh.element(e);
        let h = r - l;
        let mut local = [0.0; 3];
        for (x, wq) in rule.on(l, r) {
            let weight = check_finite("matrix weight", x, w(e, x))?;
            let phi_r = (x - l) / h;
            let phi_l = 1.0 - phi_r;
            local[0] += wq * weight * phi_l * phi_l;
            local[1] += wq * weight * phi_l * phi_r;
            local[2] += wq * weight * phi_r * phi_r;
        }
        scatter(&mut m, mesh, e, local);
    }
    Ok(m)
}

/// Load vector `∫ s φ_i` with 3-point Gauss per element.
pub fn assemble_load(mesh: &Mesh, s: impl Fn(f64) -> f64) -> Result<Vec<f64>, FemError> {
    assemble_load_by_element(mesh, |_, x| s(x))
}

pub fn assemble_load_by_element(
    mesh: &Mesh,
    s: impl Fn(ElementId, f64) -> f64,
) -> Result<Vec<f64>, FemError> {
    let rule = GaussLegendre::three();
    let mut b = vec![0.0; mesh.num_interior()];
    for e in 0..mesh.num_elements() {
        let (l, r) = mesh.element(e);
        let h = r - l;
        let mut local = [0.0; 2];
        for (x, wq) in rule.on(l, r) {
            let v = check_finite("load", x, s(e, x))?;
            let phi_r = (x - l) / h;
            local[0] += wq * v * (1.0 - phi_r);
            local[1] += wq * v * phi_r;
        }
        scatter_load(&mut b, mesh, e, local);
    }
    Ok(b)
}

/// `∫ u φ_i` for a P1 function `u` on another mesh; exact on the common refinement.
pub fn assemble_cross_load(mesh: &Mesh, u: &FeFunction) -> Result<Vec<f64>, FemError> {
    let pieces = common_refinement(mesh, u.mesh())?;
    let rule = GaussLegendre::three();
    let mut b = vec![0.0; mesh.num_interior()];
    for p in &pieces {
        let (l, r) = mesh.element(p.first);
        let h = r - l;
        let mut local = [0.0; 2];
        for (x, wq) in rule.on(p.lo, p.hi) {
            let v = u.eval_in(p.second, x);
            let phi_r = (x - l) / h;
            local[0] += wq * v * (1.0 - phi_r);
            local[1] += wq * v * phi_r;
        }
        scatter_load(&mut b, mesh, p.first, local);
    }
    Ok(b)
}

/// L² projection of a P1 function onto the zero-trace P1 space of `target`.
///
/// When `target` refines the source mesh and the source has zero trace the
/// projection is the identity, and nodal transfer is used.
pub fn l2_project(source: &FeFunction, target: &Arc<Mesh>) -> Result<FeFunction, FemError> {
    if source.has_zero_trace() && target.is_refinement_of(source.mesh()) {
        let values = target.nodes().iter().map(|&x| source.eval(x)).collect();
        return FeFunction::new(target.clone(), values);
    }
    let rhs = assemble_cross_load(target, source)?;
    solve_mass(target, rhs)
}

/// L² projection of a function given pointwise; loads use 3-point Gauss on
/// `pieces` equal subintervals per element.
pub fn l2_project_fn(
    f: impl Fn(f64) -> f64,
    target: &Arc<Mesh>,
    pieces: usize,
) -> Result<FeFunction, FemError> {
    let rhs = if pieces <= 1 {
        assemble_load(target, &f)?
    } else {
        let rule = GaussLegendre::three();
        let mut b = vec![0.0; target.num_interior()];
        for e in 0..target.num_elements() {
            let (l, r) = target.element(e);
            let h = r - l;
            let sub = h / pieces as f64;
            let mut local = [0.0; 2];
            for k in 0..pieces {
                let a = l + k as f64 * sub;
                for (x, wq) in rule.on(a, a + sub) {
                    let v = check_finite("projection source", x, f(x))?;
                    let phi_r = (x - l) / h;
                    local[0] += wq * v * (1.0 - phi_r);
                    local[1] += wq * v * phi_r;
                }
            }
            scatter_load(&mut b, target, e, local);
        }
        b
    };
    solve_mass(target, rhs)
}

fn solve_mass(target: &Arc<Mesh>, rhs: Vec<f64>) -> Result<FeFunction, FemError> {
    let mass = assemble_mass(target);
    let interior = solve_banded(&BandedSystem::new(mass, rhs))?;
    FeFunction::from_interior(target.clone(), &interior)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    /// `‖u'‖₀`
    pub h1_semi: f64,
    /// `(ε‖u'‖₀² + ‖u‖₀²)^½`
    pub energy: f64,
}

impl Norms {
    fn from_squares(l2_sq: f64, semi_sq: f64, eps: f64) -> Norms {
        Norms {
            l2: l2_sq.sqrt(),
            h1_semi: semi_sq.sqrt(),
            energy: (eps * semi_sq + l2_sq).sqrt(),
        }
    }
}

/// `‖u‖₀` and the singularly perturbed energy norm, exact for P1.
pub fn norms(u: &FeFunction, eps: f64) -> Norms {
    let mesh = u.mesh();
    let v = u.values();
    let (mut l2, mut semi) = (0.0, 0.0);
    for e in 0..mesh.num_elements() {
        let h = mesh.element_len(e);
        let (a, b) = (v[e], v[e + 1]);
        l2 += h / 3.0 * (a * a + a * b + b * b);
        semi += (b - a) * (b - a) / h;
    }
    Norms::from_squares(l2, semi, eps)
}

/// Norms of `u - v` for P1 functions on possibly different meshes.
pub fn distance(u: &FeFunction, v: &FeFunction, eps: f64) -> Result<Norms, FemError> {
    let rule = GaussLegendre::three();
    let (mut l2, mut semi) = (0.0, 0.0);
    for p in common_refinement(u.mesh(), v.mesh())? {
        let ds = u.slope(p.first) - v.slope(p.second);
        semi += ds * ds * (p.hi - p.lo);
        l2 += rule.integrate(p.lo, p.hi, |x| {
            let d = u.eval_in(p.first, x) - v.eval_in(p.second, x);
            d * d
        });
    }
    Ok(Norms::from_squares(l2, semi, eps))
}

/// Norms of a function given pointwise (value and derivative), by composite
/// Gauss quadrature with `pieces` subintervals of each element of `mesh`.
pub fn norms_fn(
    mesh: &Mesh,
    value: impl Fn(f64) -> f64,
    derivative: impl Fn(f64) -> f64,
    eps: f64,
    pieces: usize,
) -> Norms {
    let rule = GaussLegendre::new(5);
    let (mut l2, mut semi) = (0.0, 0.0);
    for e in 0..mesh.num_elements() {
        let (l, r) = mesh.element(e);
        l2 += rule.integrate_composite(l, r, pieces, |x| value(x).powi(2));
        semi += rule.integrate_composite(l, r, pieces, |x| derivative(x).powi(2));
    }
    Norms::from_squares(l2, semi, eps)
}

/// `‖u - f‖₀` per element, by 5-point Gauss on `pieces` subintervals.
pub fn l2_error_by_element(u: &FeFunction, f: impl Fn(f64) -> f64, pieces: usize) -> Vec<f64> {
    let rule = GaussLegendre::new(5);
    let mesh = u.mesh();
    (0..mesh.num_elements())
        .map(|e| {
            let (l, r) = mesh.element(e);
            rule.integrate_composite(l, r, pieces, |x| (u.eval_in(e, x) - f(x)).powi(2))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(m: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform(0.0, 1.0, m).unwrap())
    }

    #[test]
    fn mass_uniform_values() {
        let m = assemble_mass(&uniform(4));
        let h = 0.25;
        assert!(m.diag.iter().all(|&d| d == 2.0 * h / 3.0));
        assert!(m.off.iter().all(|&o| o == h / 6.0));
    }

    #[test]
    fn mass_single_interior_node() {
        let mesh = Mesh::from_nodes(vec![0.0, 0.3, 1.0]).unwrap();
        let m = assemble_mass(&mesh);
        assert!((m.diag[0] - (0.3 + 0.7) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mass_row_sums_with_boundary_columns() {
        // Including the boundary couplings, row sums equal ∫ φ_i = (h_l + h_r)/2.
        let mesh = Mesh::from_nodes(vec![0.0, 0.1, 0.35, 0.6, 1.0]).unwrap();
        let m = assemble_mass(&mesh);
        let ones = m.mul_vec(&[1.0; 3]);
        let x = mesh.nodes();
        for i in 1..=3 {
            let mut row = ones[i - 1];
            if i == 1 {
                row += (x[1] - x[0]) / 6.0;
            }
            if i == 3 {
                row += (x[4] - x[3]) / 6.0;
            }
            assert!((row - 0.5 * (x[i + 1] - x[i - 1])).abs() < 1e-15);
        }
    }

    #[test]
    fn stiffness_values() {
        let a = assemble_stiffness(&uniform(2));
        assert_eq!(a.diag, vec![4.0]);
        let a = assemble_stiffness(&uniform(4));
        assert!(a.diag.iter().all(|&d| d == 8.0));
        assert!(a.off.iter().all(|&o| o == -4.0));
        let a8 = assemble_stiffness(&uniform(8));
        assert!(a8.diag.iter().all(|&d| d == 16.0));
    }

    #[test]
    fn stiffness_annihilates_linear_interior() {
        let mesh = Mesh::from_nodes(vec![0.0, 0.2, 0.3, 0.55, 0.8, 1.0]).unwrap();
        let a = assemble_stiffness(&mesh);
        let x: Vec<f64> = mesh.nodes()[1..5].to_vec();
        let ax = a.mul_vec(&x);
        // rows whose stencil does not touch the boundary vanish
        for v in &ax[1..3] {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn weighted_mass_consistency() {
        let mesh = uniform(7);
        let m = assemble_mass(&mesh);
        let w = assemble_weighted_mass(&mesh, |_| 1.0).unwrap();
        for (a, b) in m.diag.iter().zip(&w.diag).chain(m.off.iter().zip(&w.off)) {
            assert!((a - b).abs() < 1e-14);
        }
        let z = assemble_weighted_mass(&mesh, |_| 0.0).unwrap();
        assert!(z.diag.iter().chain(&z.off).all(|&v| v == 0.0));
        assert!(matches!(
            assemble_weighted_mass(&mesh, |_| f64::NAN),
            Err(FemError::NonFinite { .. })
        ));
    }

    #[test]
    fn load_examples() {
        let b = assemble_load(&uniform(4), |_| 1.0).unwrap();
        assert!(b.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        let z = assemble_load(&uniform(4), |_| 0.0).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn projection_of_member_is_identity() {
        let mesh = Arc::new(Mesh::from_nodes(vec![0.0, 0.15, 0.4, 0.7, 1.0]).unwrap());
        let u = FeFunction::from_interior(mesh.clone(), &[0.3, -1.0, 2.0]).unwrap();
        let rhs = assemble_cross_load(&mesh, &u).unwrap();
        let p = solve_mass(&mesh, rhs).unwrap();
        for (a, b) in p.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn projection_onto_refinement_reproduces_values() {
        let coarse = uniform(4);
        let u = FeFunction::from_interior(coarse.clone(), &[1.0, 0.5, -0.25]).unwrap();
        let (fine, map) = coarse.refine(&[0, 2]).unwrap();
        let fine = Arc::new(fine);
        let p = l2_project(&u, &fine).unwrap();
        let expected = map.transfer(u.values());
        for (a, b) in p.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
        // the non-nested path gives the same result
        let rhs = assemble_cross_load(&fine, &u).unwrap();
        let q = solve_mass(&fine, rhs).unwrap();
        for (a, b) in q.values().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let coarse = Arc::new(Mesh::from_nodes(vec![0.0, 0.3, 0.45, 0.8, 1.0]).unwrap());
        let other = uniform(5);
        let u = FeFunction::interpolate(other, |x| (x * (1.0 - x)).sqrt());
        let once = l2_project(&u, &coarse).unwrap();
        let twice = l2_project(&once, &coarse).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_jumps() {
        let mesh = uniform(4);
        let lin = FeFunction::interpolate(mesh.clone(), |x| 2.0 * x + 1.0);
        for node in 1..4 {
            assert!(lin.gradient_jump(node).unwrap().abs() < 1e-14);
        }
        let hat = FeFunction::from_interior(mesh.clone(), &[0.0, 1.0, 0.0]).unwrap();
        assert!((hat.gradient_jump(2).unwrap() + 8.0).abs() < 1e-14);
        assert!((hat.gradient_jump(1).unwrap() - 4.0).abs() < 1e-14);
        let flipped = FeFunction::interpolate(mesh.clone(), |x| hat.eval(1.0 - x));
        for node in 1..4 {
            let a = hat.gradient_jump(node).unwrap().powi(2);
            let b = flipped.gradient_jump(4 - node).unwrap().powi(2);
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(hat.gradient_jump(0), Err(FemError::BoundaryNode(0)));
        assert_eq!(hat.gradient_jump(4), Err(FemError::BoundaryNode(4)));
    }

    #[test]
    fn norms_examples() {
        let mesh = uniform(8);
        let zero = FeFunction::zero(mesh.clone());
        let n = norms(&zero, 0.3);
        assert_eq!((n.l2, n.energy), (0.0, 0.0));

        let x = FeFunction::interpolate(mesh.clone(), |x| x);
        let eps = 0.01;
        let n = norms(&x, eps);
        assert!((n.l2.powi(2) - 1.0 / 3.0).abs() < 1e-14);
        assert!((n.h1_semi.powi(2) - 1.0).abs() < 1e-14);
        assert!((n.energy.powi(2) - (eps + 1.0 / 3.0)).abs() < 1e-14);
        let n0 = norms(&x, 0.0);
        assert_eq!(n0.energy, n0.l2);
    }

    #[test]
    fn common_refinement_covers_both() {
        let a = Mesh::from_nodes(vec![0.0, 0.5, 1.0]).unwrap();
        let b = Mesh::from_nodes(vec![0.0, 0.25, 0.5, 0.6, 1.0]).unwrap();
        let pieces = common_refinement(&a, &b).unwrap();
        let ends: Vec<f64> = pieces.iter().map(|p| p.hi).collect();
        assert_eq!(ends, vec![0.25, 0.5, 0.6, 1.0]);
        assert_eq!(
            pieces.iter().map(|p| p.first).collect::<Vec<_>>(),
            vec![0, 0, 1, 1]
        );
        let c = Mesh::from_nodes(vec![0.0, 0.5, 2.0]).unwrap();
        assert_eq!(common_refinement(&a, &c), Err(FemError::DomainMismatch));
    }

    #[test]
    fn distance_between_meshes() {
        let a = uniform(3);
        let b = Arc::new(Mesh::from_nodes(vec![0.0, 0.2, 0.5, 0.9, 1.0]).unwrap());
        let u = FeFunction::interpolate(a, |x| x * (1.0 - x));
        let same = l2_project(&u, &b).unwrap();
        let d = distance(&u, &u, 1.0).unwrap();
        assert_eq!(d.energy, 0.0);
        let d = distance(&u, &same, 1.0).unwrap();
        assert!(d.l2 > 0.0 && d.energy >= d.l2);
    }
}
