//! Ultra-weak DPG solver for the 1D fractional advection-diffusion two-point
//! boundary value problem
//!
//! ```text
//!   -D D^(alpha-2) D u + b Du + c u = f   on (0,1),   u(0) = u(1) = 0,
//! ```
//!
//! with `alpha` in (1,2) and `D^(alpha-2)` a Riemann-Liouville fractional
//! integral of order `2-alpha`. The problem is rewritten as a first-order
//! system, tested with broken `H^1 x H^(alpha/2)` test functions, and solved
//! via the normal equations `B^T Theta^-1 B x = B^T Theta^-1 f`, where `Theta`
//! is the block-diagonal Gram matrix of the local test-space inner product.
//! The residual representer yields elementwise error indicators that drive
//! Doerfler marking and bisection refinement.
//!
//! The crate is organized along the pipeline:
//!
//! * [`mesh`]: 1D partitions, Doerfler marking, bisection with
//!   quasi-uniformity closure,
//! * [`polyquad`]: orthonormal Legendre bases, piecewise polynomials,
//!   quadrature rules and closed-form singular integrals,
//! * [`fractional`]: Riemann-Liouville integral operators on piecewise
//!   polynomials and the dense coupling block,
//! * [`sobolev`]: element-local `H^1` and Sobolev-Slobodeckij Gram matrices,
//! * [`assembly`]: the rectangular matrix `B`, block-diagonal `Theta`, load,
//! * [`solver`]: normal equations and the localized error estimator,
//! * [`experiments`]: the model problems, error quantities and convergence
//!   loops,
//! * [`cli`]: the command line front end writing CSV tables.

pub mod assembly;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod fractional;
pub mod mesh;
pub mod polyquad;
pub mod sobolev;
pub mod solver;
pub mod special;

pub use error::FracDpgError;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, FracDpgError>;
