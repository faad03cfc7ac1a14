//! Scalar functions with declared endpoint behavior at x = 0.
//!
//! The model problems only involve sums of (possibly fractional) powers and
//! logarithmic terms, so those get an exact representation with closed-form
//! element integrals on the first element and spectrally convergent Gauss
//! quadrature elsewhere. Generic smooth functions and `x^mu * smooth`
//! integrands are supported through Gauss-Legendre and Gauss-Jacobi rules.

use super::basis::{monomial_coeffs, reference_basis_eval_all};
use super::quad::{gauss_jacobi, gauss_legendre, points_for_ellipse};
use crate::{FracDpgError, Result};
use std::sync::Arc;

pub type SmoothFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `sum_i c_i x^(e_i) + sum_j d_j x^(g_j) ln(x)`, all exponents > -1.
#[derive(Debug, Clone, Default)]
pub struct PowerLogFn {
    /// (coefficient, exponent) pairs for the power terms.
    pub powers: Vec<(f64, f64)>,
    /// (coefficient, exponent) pairs for `x^g ln(x)` terms.
    pub logs: Vec<(f64, f64)>,
}

impl PowerLogFn {
    pub fn new(powers: Vec<(f64, f64)>, logs: Vec<(f64, f64)>) -> Result<Self> {
        for &(_, e) in powers.iter().chain(&logs) {
            if !(e > -1.0) {
                return Err(FracDpgError::invalid(
                    "exponent",
                    format!("non-integrable power x^{e}"),
                ));
            }
        }
        Ok(PowerLogFn { powers, logs })
    }

    pub fn from_powers(powers: Vec<(f64, f64)>) -> Result<Self> {
        Self::new(powers, Vec::new())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut v = 0.0;
        for &(c, e) in &self.powers {
            v += c * x.powf(e);
        }
        if !self.logs.is_empty() && x > 0.0 {
            let lx = x.ln();
            for &(c, e) in &self.logs {
                v += c * x.powf(e) * lx;
            }
        }
        v
    }

    /// Most singular exponent (used to pick quadrature away from 0).
    pub fn min_exponent(&self) -> f64 {
        self.powers
            .iter()
            .chain(&self.logs)
            .map(|&(_, e)| e)
            .fold(f64::INFINITY, f64::min)
    }

    /// True when every term is a nonnegative-integer power (an ordinary
    /// polynomial) so the function is smooth everywhere.
    pub fn is_polynomial(&self) -> bool {
        self.logs.is_empty()
            && self
                .powers
                .iter()
                .all(|&(_, e)| e >= 0.0 && (e - e.round()).abs() < 1e-12)
    }
}

/// A scalar function on (0,1) with its endpoint-singularity descriptor.
#[derive(Clone)]
pub enum ScalarFn {
    /// Exact sum of powers and log terms; closed forms available.
    PowerLog(PowerLogFn),
    /// Smooth on [0,1]; plain Gauss quadrature everywhere.
    Smooth(SmoothFn),
    /// `x^mu * smooth(x) + log_coef * ln(x)` near 0 with `mu > -1`.
    SingularSmooth {
        mu: f64,
        smooth: SmoothFn,
        log_coef: f64,
    },
}

impl ScalarFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ScalarFn::PowerLog(p) => p.eval(x),
            ScalarFn::Smooth(f) => f(x),
            ScalarFn::SingularSmooth {
                mu,
                smooth,
                log_coef,
            } => {
                let mut v = x.powf(*mu) * smooth(x);
                if *log_coef != 0.0 && x > 0.0 {
                    v += log_coef * x.ln();
                }
                v
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let ScalarFn::SingularSmooth { mu, .. } = self {
            if !(*mu > -1.0) {
                return Err(FracDpgError::invalid(
                    "mu",
                    format!("non-integrable singularity x^{mu}"),
                ));
            }
        }
        Ok(())
    }

    /// Moments `int_a^(a+h) f(x) P_k((x-a)/h) dx` for k = 0..=deg.
    ///
    /// On the first element (a = 0) power/log terms are integrated in closed
    /// form and `x^mu * smooth` via a Gauss-Jacobi rule; away from zero a
    /// Gauss-Legendre rule sized by the distance to the singularity is used.
    pub fn basis_moments(&self, a: f64, h: f64, deg: usize) -> Vec<f64> {
        match self {
            ScalarFn::PowerLog(p) => {
                if a == 0.0 {
                    first_element_powerlog_moments(p, h, deg)
                } else {
                    let singular = p.min_exponent() < 0.0 || !p.logs.is_empty();
                    let pts = if singular || !p.is_polynomial() {
                        points_for_ellipse((2.0 * a + h) / h, deg)
                    } else {
                        deg + 4
                    };
                    gauss_moments(|x| p.eval(x), a, h, deg, pts)
                }
            }
            ScalarFn::Smooth(f) => gauss_moments(|x| f(x), a, h, deg, 2 * deg + 8),
            ScalarFn::SingularSmooth {
                mu,
                smooth,
                log_coef,
            } => {
                if a == 0.0 {
                    let mut out = jacobi_moments(*mu, smooth, h, deg);
                    if *log_coef != 0.0 {
                        let logs = PowerLogFn::new(vec![], vec![(*log_coef, 0.0)]).unwrap();
                        for (o, l) in out.iter_mut().zip(first_element_powerlog_moments(
                            &logs,
                            h,
                            deg,
                        )) {
                            *o += l;
                        }
                    }
                    out
                } else {
                    let pts = points_for_ellipse((2.0 * a + h) / h, deg);
                    gauss_moments(|x| self.eval(x), a, h, deg, pts)
                }
            }
        }
    }
}

/// Closed form on [0,h]:
/// `int_0^h x^e P_k(x/h) dx = h^(e+1) sum_r c_kr / (e+r+1)` and
/// `int_0^h x^g ln(x) P_k(x/h) dx
///      = h^(g+1) sum_r c_kr (ln h / (g+r+1) - 1/(g+r+1)^2)`.
fn first_element_powerlog_moments(p: &PowerLogFn, h: f64, deg: usize) -> Vec<f64> {
    let mut out = vec![0.0; deg + 1];
    let ln_h = h.ln();
    for k in 0..=deg {
        let coeffs = monomial_coeffs(k);
        let mut acc = 0.0;
        for &(c, e) in &p.powers {
            let mut s = 0.0;
            for (r, &cr) in coeffs.iter().enumerate() {
                s += cr / (e + r as f64 + 1.0);
            }
            acc += c * h.powf(e + 1.0) * s;
        }
        for &(c, g) in &p.logs {
            let mut s = 0.0;
            for (r, &cr) in coeffs.iter().enumerate() {
                let d = g + r as f64 + 1.0;
                s += cr * (ln_h / d - 1.0 / (d * d));
            }
            acc += c * h.powf(g + 1.0) * s;
        }
        out[k] = acc;
    }
    out
}

fn gauss_moments(f: impl Fn(f64) -> f64, a: f64, h: f64, deg: usize, pts: usize) -> Vec<f64> {
    let rule = gauss_legendre(pts.max(deg + 1)).expect("positive point count");
    let mut out = vec![0.0; deg + 1];
    let mut vals = vec![0.0; deg + 1];
    let mut ders = vec![0.0; deg + 1];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fx = f(a + h * t);
        reference_basis_eval_all(deg, t, &mut vals, &mut ders);
        for k in 0..=deg {
            out[k] += w * fx * vals[k];
        }
    }
    for o in &mut out {
        *o *= h;
    }
    out
}

/// `int_0^h x^mu g(x) P_k(x/h) dx = h^(mu+1) int_0^1 t^mu g(ht) P_k(t) dt`.
fn jacobi_moments(mu: f64, g: &SmoothFn, h: f64, deg: usize) -> Vec<f64> {
    let pts = 2 * deg + 10;
    let rule = gauss_jacobi(pts, 0.0, mu).expect("valid Jacobi exponents");
    let mut out = vec![0.0; deg + 1];
    let mut vals = vec![0.0; deg + 1];
    let mut ders = vec![0.0; deg + 1];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let fx = g(h * t);
        reference_basis_eval_all(deg, t, &mut vals, &mut ders);
        for k in 0..=deg {
            out[k] += w * fx * vals[k];
        }
    }
    let scale = h.powf(mu + 1.0);
    for o in &mut out {
        *o *= scale;
    }
    out
}
