//! Symmetric tridiagonal systems.
//!
//! P1 elements in one dimension only couple neighbouring nodes, so every
//! matrix in the solver is a symmetric tridiagonal matrix over the interior
//! nodes.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("pivot {pivot:e} at row {row} is below {threshold:e}; elimination broke down")]
    Breakdown {
        row: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("dimension mismatch: matrix {matrix}, vector {vector}")]
    Dimension { matrix: usize, vector: usize },
    #[error("empty system")]
    Empty,
}

/// Symmetric tridiagonal matrix: `diag` has `n` entries, `off` has `n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn zeros(n: usize) -> Self {
        SymTridiagonal {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        SymTridiagonal {
            diag: vec![1.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, scale: f64, other: &SymTridiagonal) -> SymTridiagonal {
        assert_eq!(self.dim(), other.dim());
        SymTridiagonal {
            diag: self
                .diag
                .iter()
                .zip(&other.diag)
                .map(|(a, b)| a + scale * b)
                .collect(),
            off: self
                .off
                .iter()
                .zip(&other.off)
                .map(|(a, b)| a + scale * b)
                .collect(),
        }
    }

    pub fn scaled(&self, scale: f64) -> SymTridiagonal {
        SymTridiagonal {
            diag: self.diag.iter().map(|a| scale * a).collect(),
            off: self.off.iter().map(|a| scale * a).collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i][i + 1] = self.off[i];
                a[i + 1][i] = self.off[i];
            }
        }
        a
    }

    /// Attempts an LDLᵀ factorization and reports whether every pivot is positive.
    pub fn is_positive_definite(&self) -> bool {
        let mut d_prev = 0.0;
        for i in 0..self.dim() {
            let d = if i == 0 {
                self.diag[0]
            } else {
                self.diag[i] - self.off[i - 1] * self.off[i - 1] / d_prev
            };
            if !(d > 0.0) {
                return false;
            }
            d_prev = d;
        }
        true
    }
}

/// A tridiagonal matrix together with its right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSystem {
    pub matrix: SymTridiagonal,
    pub rhs: Vec<f64>,
}

impl BandedSystem {
    pub fn new(matrix: SymTridiagonal, rhs: Vec<f64>) -> Self {
        BandedSystem { matrix, rhs }
    }

    /// `‖A x - b‖∞`.
    pub fn residual_inf(&self, x: &[f64]) -> f64 {
        self.matrix
            .mul_vec(x)
            .iter()
            .zip(&self.rhs)
            .map(|(ax, b)| (ax - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Direct elimination without pivoting (Thomas algorithm).
///
/// Fails when a pivot drops below `1e-14 ‖A‖∞`; no definiteness is assumed.
pub fn solve_banded(system: &BandedSystem) -> Result<Vec<f64>, LinalgError> {
    let a = &system.matrix;
    let n = a.dim();
    if n == 0 {
        return Err(LinalgError::Empty);
    }
    if system.rhs.len() != n {
        return Err(LinalgError::Dimension {
            matrix: n,
            vector: system.rhs.len(),
        });
    }
    let threshold = 1e-14 * a.norm_inf();
    let mut upper = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut pivot = a.diag[0];
    for i in 0..n {
        if i > 0 {
            pivot = a.diag[i] - a.off[i - 1] * upper[i - 1];
        }
        if !(pivot.abs() > threshold) {
            return Err(LinalgError::Breakdown {
                row: i,
                pivot,
                threshold,
            });
        }
        if i + 1 < n {
            upper[i] = a.off[i] / pivot;
        }
        let carry = if i > 0 { a.off[i - 1] * y[i - 1] } else { 0.0 };
        y[i] = (system.rhs[i] - carry) / pivot;
    }
    for i in (0..n - 1).rev() {
        y[i] -= upper[i] * y[i + 1];
    }
    Ok(y)
}
