//! Reference-element polynomial bases, piecewise-polynomial containers,
//! L2 projection, and quadrature (Gauss-Legendre, Gauss-Jacobi, adaptive,
//! and closed-form fractional-monomial integrals).

mod basis;
mod func;
mod piecewise;
mod quad;

pub use basis::{
    endpoint_value, monomial_coeffs, ref_deriv_gram, ref_value_deriv, reference_basis_eval,
    reference_basis_eval_all,
};
pub use func::{PowerLogFn, ScalarFn, SmoothFn};
pub use piecewise::{l2_project, PiecewisePolynomial};
pub use quad::{
    adaptive_integrate, fractional_monomial_integral, gauss_legendre, gauss_jacobi,
    points_for_ellipse, QuadratureRule, WeightKind,
};
