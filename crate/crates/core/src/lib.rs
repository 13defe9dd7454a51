//! Adaptive space-time solver for singularly perturbed semilinear
//! reaction-diffusion problems `u_t - ε u'' = f(u, x, t)` on an interval,
//! with P1 finite elements, backward Euler and Newton linearization driven
//! by residual-based a posteriori indicators.

// `!(a <= b)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod controller;
pub mod estimators;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod newton;
pub mod problems;
pub mod quadrature;
pub mod reference;
