//! Quadrature rules on the reference interval [0,1] and closed-form
//! fractional-monomial integrals.

use crate::special::beta;
use crate::{FracDpgError, Result};
use nalgebra::DMatrix;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Weight function a rule integrates against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    Unit,
    /// `(1-t)^a * t^b` on [0,1].
    Jacobi { a: f64, b: f64 },
}

/// Nodes and weights on [0,1].
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub weight: WeightKind,
}

impl QuadratureRule {
    /// `sum w_i f(t_i)`; approximates `int_0^1 w(t) f(t) dt`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * f(t))
            .sum()
    }

    /// Affine image for unit-weight rules: `int_a^b f(x) dx`.
    pub fn integrate_on(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        debug_assert!(matches!(self.weight, WeightKind::Unit));
        let h = b - a;
        h * self.integrate(|t| f(a + h * t))
    }
}

/// Gauss-Legendre rule with `n` points, exact for degree `2n-1`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(FracDpgError::invalid("n", "point count must be >= 1"));
    }
    // Newton iteration on [-1,1], then map to [0,1].
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (pn, pn1) = legendre_pair(n, x);
            let dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (pn, pn1) = legendre_pair(n, x);
        let dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
        // descending in x on [-1,1] maps to ascending order reversed below
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    for (x, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        *x = 0.5 * (*x + 1.0);
        *w *= 0.5;
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        weight: WeightKind::Unit,
    })
}

/// Classical Legendre L_n and L_{n-1} at x (on [-1,1]).
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut lm, mut lc) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for i in 1..n {
        let i_f = i as f64;
        let ln = ((2.0 * i_f + 1.0) * x * lc - i_f * lm) / (i_f + 1.0);
        lm = lc;
        lc = ln;
    }
    (lc, lm)
}

/// Gauss-Jacobi rule for the weight `(1-t)^a t^b` on [0,1], exact for
/// polynomial factors of degree `2n-1`. Golub-Welsch on the symmetric
/// tridiagonal recurrence matrix.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(FracDpgError::invalid("n", "point count must be >= 1"));
    }
    if !(a > -1.0) || !(b > -1.0) {
        return Err(FracDpgError::invalid("exponent", "must be > -1"));
    }
    // Recurrence coefficients for Jacobi polynomials with weight
    // (1-x)^a (1+x)^b on [-1,1].
    let mut mat = DMatrix::<f64>::zeros(n, n);
    let mut diag = (b - a) / (a + b + 2.0);
    for i in 0..n - 1 {
        let k = (i + 1) as f64;
        let denom = 2.0 * k + a + b;
        let off = 2.0 / denom
            * (k * (k + a) * (k + b) * (k + a + b) / ((denom + 1.0) * (denom - 1.0))).sqrt();
        mat[(i, i)] = diag;
        mat[(i, i + 1)] = off;
        mat[(i + 1, i)] = off;
        diag = (b * b - a * a) / (denom * (denom + 2.0));
    }
    mat[(n - 1, n - 1)] = diag;

    let eigen = mat.symmetric_eigen();
    let mu0 = 2f64.powf(a + b + 1.0) * beta(a + 1.0, b + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = eigen.eigenvalues[i];
            let w = mu0 * eigen.eigenvectors[(0, i)].powi(2);
            (x, w)
        })
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());

    // map to [0,1]: t = (x+1)/2 and the weight picks up 2^-(a+b+1)
    let scale = 2f64.powf(-(a + b + 1.0));
    let nodes = pairs.iter().map(|p| 0.5 * (p.0 + 1.0)).collect();
    let weights = pairs.iter().map(|p| p.1 * scale).collect();
    Ok(QuadratureRule {
        nodes,
        weights,
        weight: WeightKind::Jacobi { a, b },
    })
}

/// `int_c^d u^(mu+k) du` with fractional `mu > -1-k` and `0 <= c <= d`.
pub fn fractional_monomial_integral(mu: f64, k: u32, c: f64, d: f64) -> Result<f64> {
    let p = mu + k as f64 + 1.0;
    if !(p > 0.0) {
        return Err(FracDpgError::invalid(
            "mu",
            format!("mu + k must exceed -1, got {}", p - 1.0),
        ));
    }
    if !(0.0 <= c && c <= d) {
        return Err(FracDpgError::invalid("interval", "need 0 <= c <= d"));
    }
    Ok((d.powf(p) - c.powf(p)) / p)
}

/// Gauss point count for an integrand analytic outside a Bernstein ellipse
/// with foci at the interval ends passing through the singularity; `xi >= 1`
/// is the elliptic coordinate of the nearest singularity.
pub fn points_for_ellipse(xi: f64, degree_margin: usize) -> usize {
    let xi = xi.max(1.0 + 1e-12);
    let rho = xi + (xi * xi - 1.0).sqrt();
    // rho^-2n <= 1e-17 plus slack for the polynomial factors
    let n = (20.0 / rho.ln()).ceil() as usize;
    (n + degree_margin / 2 + 2).clamp(4, 40)
}

struct Panel {
    err: f64,
    value: f64,
    a: f64,
    b: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive quadrature (worst-panel-first bisection with a G7/G15
/// error estimate). Integrable endpoint singularities are handled by the
/// geometric grading the refinement produces; non-finite integrand values
/// (evaluations landing exactly on an integrable singularity once panels
/// reach floating-point resolution) are treated as zero. Used as the
/// independent oracle for the closed-form integrals in this crate.
pub fn adaptive_integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let g7 = gauss_legendre(7).unwrap();
    let g15 = gauss_legendre(15).unwrap();
    let guarded = |x: f64| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let eval = |lo: f64, hi: f64| -> (f64, f64) {
        let coarse = g7.integrate_on(lo, hi, guarded);
        let fine = g15.integrate_on(lo, hi, guarded);
        ((fine - coarse).abs(), fine)
    };

    let mut heap = BinaryHeap::new();
    let (err, value) = eval(a, b);
    heap.push(Panel { err, value, a, b });
    let mut total = value;
    let mut total_abs = value.abs();
    let mut total_err = err;

    // the roundoff floor: once the error estimate sits at machine precision
    // relative to the accumulated magnitude, refinement cannot improve it
    let converged = |total: f64, total_abs: f64, total_err: f64| {
        total_err <= rel_tol * total.abs().max(1e-300) || total_err <= 1e-15 * total_abs
    };
    let max_panels = 40_000;
    while !converged(total, total_abs, total_err) && heap.len() < max_panels {
        let worst = heap.pop().expect("heap nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval at floating-point resolution; put it back and stop
            heap.push(worst);
            break;
        }
        let (e1, v1) = eval(worst.a, mid);
        let (e2, v2) = eval(mid, worst.b);
        total += v1 + v2 - worst.value;
        total_abs += v1.abs() + v2.abs() - worst.value.abs();
        total_err += e1 + e2 - worst.err;
        heap.push(Panel {
            err: e1,
            value: v1,
            a: worst.a,
            b: mid,
        });
        heap.push(Panel {
            err: e2,
            value: v2,
            a: mid,
            b: worst.b,
        });
    }
    heap.iter().map(|p| p.value).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_midpoint() {
        let r = gauss_legendre(1).unwrap();
        assert!((r.nodes[0] - 0.5).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_legendre_cubic_exact() {
        let r = gauss_legendre(2).unwrap();
        let val = r.integrate(|t| t * t * t);
        assert!((val - 0.25).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_exponential() {
        let r = gauss_legendre(5).unwrap();
        let val = r.integrate(|t| t.exp());
        assert!((val - (std::f64::consts::E - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_rejects_zero() {
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn gauss_legendre_weights_positive_and_sum_to_one() {
        for n in [1, 2, 3, 5, 8, 16, 24, 32, 40, 64] {
            let r = gauss_legendre(n).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "n={n}: weight sum {s}");
            // exactness at degree 2n-1
            let d = 2 * n - 1;
            let val = r.integrate(|t| t.powi(d as i32));
            let exact = 1.0 / (d as f64 + 1.0);
            assert!((val - exact).abs() < 1e-13 * exact.abs().max(1.0), "n={n}");
        }
    }

    #[test]
    fn gauss_jacobi_unit_weight_reduces_to_legendre() {
        let j = gauss_jacobi(1, 0.0, 0.0).unwrap();
        assert!((j.nodes[0] - 0.5).abs() < 1e-13);
        assert!((j.weights[0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_jacobi_beta_identity() {
        // int_0^1 (1-t)^(-1/2) t dt = B(2, 1/2) = 4/3
        let j = gauss_jacobi(2, -0.5, 0.0).unwrap();
        let val = j.integrate(|t| t);
        assert!((val - 4.0 / 3.0).abs() < 1e-13, "got {val}");
    }

    #[test]
    fn gauss_jacobi_constant_integrand() {
        // int_0^1 (1-t)^(-0.5) dt = 2
        let j = gauss_jacobi(1, -0.5, 0.0).unwrap();
        let val = j.integrate(|_| 1.0);
        assert!((val - 2.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_jacobi_exactness_random_weights() {
        // degree-(2n-1) monomials against (1-t)^a t^b equal beta values
        for &(a, b) in &[(-0.5, 0.0), (0.0, -0.8), (0.3, -0.4), (-0.9, -0.9)] {
            let n = 6;
            let rule = gauss_jacobi(n, a, b).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for d in 0..2 * n {
                let val = rule.integrate(|t| t.powi(d as i32));
                let exact = beta(a + 1.0, b + 1.0 + d as f64);
                assert!(
                    (val - exact).abs() < 1e-13 * exact.abs(),
                    "a={a} b={b} d={d}: {val} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn gauss_jacobi_rejects_bad_exponents() {
        assert!(gauss_jacobi(3, -1.0, 0.0).is_err());
        assert!(gauss_jacobi(3, 0.0, -1.5).is_err());
        assert!(gauss_jacobi(0, 0.0, 0.0).is_err());
    }

    #[test]
    fn fractional_monomial_basics() {
        assert!((fractional_monomial_integral(0.0, 1, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((fractional_monomial_integral(-0.5, 0, 0.0, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(fractional_monomial_integral(-1.2, 0, 0.0, 1.0).is_err());
        assert!(fractional_monomial_integral(0.5, 0, 0.5, 0.25).is_err());
    }

    #[test]
    fn fractional_monomial_vs_adaptive() {
        // mu = 0.7, k = 2 on [0.25, 0.5]
        let exact = fractional_monomial_integral(0.7, 2, 0.25, 0.5).unwrap();
        let oracle = adaptive_integrate(&|u: f64| u.powf(0.7) * u * u, 0.25, 0.5, 1e-13);
        assert!((exact - oracle).abs() < 1e-12 * exact.abs());
        let direct = (0.5f64.powf(3.7) - 0.25f64.powf(3.7)) / 3.7;
        assert!((exact - direct).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // int_0^1 t^(-1/2) dt = 2 despite the singularity at 0
        let val = adaptive_integrate(&|t: f64| t.powf(-0.5), 1e-300, 1.0, 1e-12);
        assert!((val - 2.0).abs() < 1e-9, "got {val}");
    }
}
