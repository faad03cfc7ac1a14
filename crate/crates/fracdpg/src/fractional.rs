//! Riemann-Liouville fractional integrals of order beta = 2 - alpha applied
//! to piecewise polynomials, and the dense coupling block
//! `int_T (D^-beta phi_Sj)(x) psi_Tk'(x) dx` of the ultra-weak bilinear form.
//!
//! Entries are assembled in one of three regimes:
//! * source = target: exact, via the beta-function formula for monomials,
//! * source adjacent to the left: exact binomial expansion into fractional
//!   monomials (stable because adjacent lengths differ by at most 2x),
//! * source separated to the left: tensor Gauss quadrature with the point
//!   count chosen from the distance to the kernel singularity; the ratio
//!   invariant of the mesh keeps that distance at least half an element.
//!
//! The binomial expansion loses relative accuracy like (distance/length)^p,
//! which is why separated pairs use quadrature instead; near the singularity
//! the roles reverse and quadrature would converge only algebraically.

use crate::mesh::Mesh;
use crate::polyquad::{
    gauss_legendre, monomial_coeffs, points_for_ellipse, PiecewisePolynomial, QuadratureRule,
};
use crate::special::{binomial, gamma};
use crate::{FracDpgError, Result};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Fractional order pair: alpha in (1,2) for the PDE, beta = 2 - alpha in
/// (0,1) for the integral operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalOrder {
    alpha: f64,
    beta: f64,
}

impl FractionalOrder {
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(FracDpgError::invalid("alpha", "must lie in (1, 2)"));
        }
        Ok(FractionalOrder {
            alpha,
            beta: 2.0 - alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(FracDpgError::invalid("beta", "must lie in (0, 1)"));
    }
    Ok(())
}

/// `(D^-beta s^k)(x) = Gamma(k+1)/Gamma(k+1+beta) x^(k+beta)`.
pub fn rl_left_monomial(beta: f64, k: u32, x: f64) -> Result<f64> {
    rl_left_power(beta, k as f64, x)
}

/// Same formula for a real power `mu > -1`.
pub fn rl_left_power(beta: f64, mu: f64, x: f64) -> Result<f64> {
    check_beta(beta)?;
    if !(mu > -1.0) {
        return Err(FracDpgError::invalid("mu", "must exceed -1"));
    }
    Ok(gamma(mu + 1.0) / gamma(mu + 1.0 + beta) * x.powf(mu + beta))
}

/// `(D^-beta p)(x)` for a piecewise polynomial, by summing the closed-form
/// contributions of the containing and adjacent elements and quadrature for
/// everything further left.
pub fn rl_left_apply(p: &PiecewisePolynomial, beta: f64, x: f64) -> Result<f64> {
    check_beta(beta)?;
    if x <= 0.0 {
        return Ok(0.0);
    }
    let mesh = p.mesh();
    let gamma_inv = 1.0 / gamma(beta);
    let e = mesh.find_element(x.min(1.0));
    let mut acc = 0.0;

    for s in 0..=e {
        let (a, b) = mesh.element(s);
        if a >= x {
            break;
        }
        let h = b - a;
        let mono = p.monomial_on_element(s);
        let xi = (x - a) / h;
        if xi <= 1.0 + 1e-14 {
            // containing element: int_a^x of the kernel against the local poly
            let xi = xi.min(1.0);
            let hb = h.powf(beta);
            for (r, &ar) in mono.iter().enumerate() {
                if ar != 0.0 {
                    acc += ar * hb * g_factor(beta, r) * xi.powf(r as f64 + beta);
                }
            }
        } else if s + 1 == e || xi <= 3.0 {
            // adjacent (or nearly so): stable binomial expansion
            let hb = h.powf(beta);
            for (r, &ar) in mono.iter().enumerate() {
                if ar != 0.0 {
                    acc += ar * hb * j_integral(beta, r, xi, gamma_inv);
                }
            }
        } else {
            // well separated: the kernel is analytic over the element
            let n_pts = points_for_ellipse(2.0 * xi - 1.0, p.degree());
            let rule = gauss_legendre(n_pts).expect("positive point count");
            let mut val = 0.0;
            for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                val += w * (x - (a + h * t)).powf(beta - 1.0) * p.eval_element(s, t);
            }
            acc += gamma_inv * h * val;
        }
    }
    Ok(acc)
}

/// `(D_1^-beta p)(x)`, the right-sided operator, via reflection.
pub fn rl_right_apply(p: &PiecewisePolynomial, beta: f64, x: f64) -> Result<f64> {
    rl_left_apply(&p.reflect(), beta, 1.0 - x)
}

fn g_factor(beta: f64, r: usize) -> f64 {
    gamma(r as f64 + 1.0) / gamma(r as f64 + 1.0 + beta)
}

/// `(1/Gamma(beta)) int_0^1 (xi - s)^(beta-1) s^r ds` for `xi >= 1`.
fn j_integral(beta: f64, r: usize, xi: f64, gamma_inv: f64) -> f64 {
    let mut sub = 0.0;
    for i in 0..=r {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sub += sign * binomial(r, i) / (beta + i as f64)
            * xi.powi((r - i) as i32)
            * (xi - 1.0).powf(beta + i as f64);
    }
    g_factor(beta, r) * xi.powf(r as f64 + beta) - gamma_inv * sub
}

/// Precomputed tables for assembling coupling blocks of one mesh.
struct CouplingTables {
    beta: f64,
    p: usize,
    n: usize,
    gamma_inv: f64,
    /// Gamma(r+1)/Gamma(r+1+beta)
    g: Vec<f64>,
    /// monomial coefficients of the trial basis P_0..P_p
    trial_mono: Vec<Vec<f64>>,
    /// M[m][k] = int_0^1 t^(beta+m) P_k'(t) dt (closed form)
    m_table: DMatrix<f64>,
    /// d[r][m] = sum_i C(r,i)(-1)^i C(r-i,m-i) / (beta+i)
    d_table: Vec<Vec<f64>>,
    /// self-coupling block divided by h^beta
    self_block: DMatrix<f64>,
    /// fixed rule for the smooth part of adjacent pairs
    adj_nodes: Vec<f64>,
    /// P_k'(t_q) * w_q at the adjacent-rule nodes, (n+1) x n_adj
    adj_test_der_w: DMatrix<f64>,
    /// per-point-count tables for separated pairs
    sep: Vec<Option<SepTables>>,
}

struct SepTables {
    nodes: Vec<f64>,
    /// P_j(t_q) * w_q, (p+1) x count
    trial_w: DMatrix<f64>,
    /// P_k'(t_q) * w_q, (n+1) x count
    test_der_w: DMatrix<f64>,
}

const SEP_COUNTS: [usize; 10] = [4, 6, 8, 10, 12, 16, 20, 24, 32, 40];

impl CouplingTables {
    fn new(beta: f64, p: usize, n: usize) -> Result<Self> {
        check_beta(beta)?;
        let gamma_inv = 1.0 / gamma(beta);
        let g: Vec<f64> = (0..=p).map(|r| g_factor(beta, r)).collect();
        let trial_mono: Vec<Vec<f64>> = (0..=p).map(monomial_coeffs).collect();
        let test_mono: Vec<Vec<f64>> = (0..=n).map(monomial_coeffs).collect();

        let mut m_table = DMatrix::zeros(p + 1, n + 1);
        for m in 0..=p {
            for k in 0..=n {
                let mut acc = 0.0;
                for (s, &c) in test_mono[k].iter().enumerate().skip(1) {
                    acc += c * s as f64 / (beta + m as f64 + s as f64);
                }
                m_table[(m, k)] = acc;
            }
        }

        let mut d_table = vec![vec![0.0; p + 1]; p + 1];
        for (r, row) in d_table.iter_mut().enumerate() {
            for (m, entry) in row.iter_mut().enumerate().take(r + 1) {
                let mut acc = 0.0;
                for i in 0..=m {
                    let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                    acc += sign * binomial(r, i) * binomial(r - i, m - i) / (beta + i as f64);
                }
                *entry = acc;
            }
        }

        let mut self_block = DMatrix::zeros(p + 1, n + 1);
        for j in 0..=p {
            for k in 0..=n {
                let mut acc = 0.0;
                for (r, &c) in trial_mono[j].iter().enumerate() {
                    acc += c * g[r] * m_table[(r, k)];
                }
                self_block[(j, k)] = acc;
            }
        }

        let adj_rule = gauss_legendre(24 + (p + n) / 2)?;
        let adj_test_der_w = test_der_w_table(&adj_rule, n);
        let adj_nodes = adj_rule.nodes.clone();

        let mut sep: Vec<Option<SepTables>> = (0..=SEP_COUNTS[SEP_COUNTS.len() - 1])
            .map(|_| None)
            .collect();
        for &count in &SEP_COUNTS {
            let rule = gauss_legendre(count)?;
            let mut trial_w = DMatrix::zeros(p + 1, count);
            let mut vals = vec![0.0; p.max(n) + 1];
            let mut ders = vec![0.0; p.max(n) + 1];
            for (q, (&t, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
                crate::polyquad::reference_basis_eval_all(p, t, &mut vals, &mut ders);
                for j in 0..=p {
                    trial_w[(j, q)] = vals[j] * w;
                }
            }
            let test_der_w = test_der_w_table(&rule, n);
            sep[count] = Some(SepTables {
                nodes: rule.nodes,
                trial_w,
                test_der_w,
            });
        }

        Ok(CouplingTables {
            beta,
            p,
            n,
            gamma_inv,
            g,
            trial_mono,
            m_table,
            d_table,
            self_block,
            adj_nodes,
            adj_test_der_w,
            sep,
        })
    }

    /// (p+1) x (n+1) block for source = target of length h.
    fn block_self(&self, h: f64) -> DMatrix<f64> {
        &self.self_block * h.powf(self.beta)
    }

    /// Block for a source element of length `hs` immediately left of a
    /// target of length `ht`.
    fn block_adjacent(&self, hs: f64, ht: f64) -> DMatrix<f64> {
        let rho = ht / hs;
        let hb = hs.powf(self.beta);
        // A[r][k] = int_0^1 (1 + rho t)^(r+beta) P_k'(t) dt by Gauss
        let mut a = DMatrix::<f64>::zeros(self.p + 1, self.n + 1);
        for (q, &t) in self.adj_nodes.iter().enumerate() {
            let y = 1.0 + rho * t;
            let mut pow = y.powf(self.beta);
            for r in 0..=self.p {
                for k in 1..=self.n {
                    a[(r, k)] += pow * self.adj_test_der_w[(k, q)];
                }
                pow *= y;
            }
        }
        // rho^(beta+m)
        let mut rho_pow = vec![0.0; self.p + 1];
        let mut cur = rho.powf(self.beta);
        for rp in rho_pow.iter_mut() {
            *rp = cur;
            cur *= rho;
        }
        let mut out = DMatrix::zeros(self.p + 1, self.n + 1);
        for j in 0..=self.p {
            for k in 1..=self.n {
                let mut acc = 0.0;
                for (r, &c) in self.trial_mono[j].iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let mut sub = 0.0;
                    for m in 0..=r {
                        sub += self.d_table[r][m] * rho_pow[m] * self.m_table[(m, k)];
                    }
                    acc += c * (self.g[r] * a[(r, k)] - self.gamma_inv * sub);
                }
                out[(j, k)] = hb * acc;
            }
        }
        out
    }

    /// Block for a strictly separated source, by tensor Gauss quadrature.
    fn block_separated(&self, s0: f64, hs: f64, t0: f64, ht: f64) -> DMatrix<f64> {
        let gap = t0 - (s0 + hs);
        debug_assert!(gap > 0.0);
        let margin = self.p + self.n;
        let cnt_s = snap_count(points_for_ellipse(1.0 + 2.0 * gap / hs, margin));
        let cnt_t = snap_count(points_for_ellipse(1.0 + 2.0 * gap / ht, margin));
        let tab_s = self.sep[cnt_s].as_ref().expect("table built");
        let tab_t = self.sep[cnt_t].as_ref().expect("table built");

        let mut out = DMatrix::zeros(self.p + 1, self.n + 1);
        let bm1 = self.beta - 1.0;
        for (qt, &tt) in tab_t.nodes.iter().enumerate() {
            let x = t0 + ht * tt;
            // kernel-weighted trial moments at fixed x
            let mut inner = vec![0.0; self.p + 1];
            for (qs, &ts) in tab_s.nodes.iter().enumerate() {
                let kernel = (x - (s0 + hs * ts)).powf(bm1);
                for (j, inn) in inner.iter_mut().enumerate() {
                    *inn += kernel * tab_s.trial_w[(j, qs)];
                }
            }
            for k in 1..=self.n {
                let tw = tab_t.test_der_w[(k, qt)];
                for (j, &inn) in inner.iter().enumerate() {
                    out[(j, k)] += inn * tw;
                }
            }
        }
        out * (hs * self.gamma_inv)
    }
}

fn test_der_w_table(rule: &QuadratureRule, n: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(n + 1, rule.nodes.len());
    let mut vals = vec![0.0; n + 1];
    let mut ders = vec![0.0; n + 1];
    for (q, (&t, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        crate::polyquad::reference_basis_eval_all(n, t, &mut vals, &mut ders);
        for k in 0..=n {
            out[(k, q)] = ders[k] * w;
        }
    }
    out
}

fn snap_count(n: usize) -> usize {
    *SEP_COUNTS
        .iter()
        .find(|&&c| c >= n)
        .unwrap_or(&SEP_COUNTS[SEP_COUNTS.len() - 1])
}

/// Dense coupling matrix with rows `(t_elem, k)` (test index k = 0..=n) and
/// columns `(s_elem, j)` (trial index j = 0..=p):
/// `C[(T,k),(S,j)] = int_T (D^-beta phi_Sj)(x) psi_Tk'(x) dx`.
/// Entries with the source strictly right of the target are exactly zero.
pub fn coupling_block(mesh: &Mesh, p: usize, n: usize, beta: f64) -> Result<DMatrix<f64>> {
    let tables = CouplingTables::new(beta, p, n)?;
    let ne = mesh.n_elements();
    let row_blocks: Vec<DMatrix<f64>> = (0..ne)
        .into_par_iter()
        .map(|t_elem| {
            let (t0, t1) = mesh.element(t_elem);
            let ht = t1 - t0;
            // rows k, columns (s_elem, j) for s_elem <= t_elem
            let mut rows = DMatrix::zeros(n + 1, (p + 1) * (t_elem + 1));
            for s_elem in 0..=t_elem {
                let (s0, s1) = mesh.element(s_elem);
                let hs = s1 - s0;
                let block = if s_elem == t_elem {
                    tables.block_self(ht)
                } else if s_elem + 1 == t_elem {
                    tables.block_adjacent(hs, ht)
                } else {
                    tables.block_separated(s0, hs, t0, ht)
                };
                for j in 0..=p {
                    for k in 0..=n {
                        rows[(k, s_elem * (p + 1) + j)] = block[(j, k)];
                    }
                }
            }
            rows
        })
        .collect();

    let mut out = DMatrix::zeros((n + 1) * ne, (p + 1) * ne);
    for (t_elem, rows) in row_blocks.into_iter().enumerate() {
        out.view_mut(((n + 1) * t_elem, 0), (n + 1, rows.ncols()))
            .copy_from(&rows);
    }
    Ok(out)
}

/// Single coupling entry
/// `int_T (D^-beta phi_Sj)(x) psi_Tk'(x) dx` for basis indices (j, k).
pub fn frac_coupling_entry(
    mesh: &Mesh,
    beta: f64,
    s_elem: usize,
    j: usize,
    t_elem: usize,
    k: usize,
) -> Result<f64> {
    if s_elem >= mesh.n_elements() || t_elem >= mesh.n_elements() {
        return Err(FracDpgError::invalid("element", "index out of range"));
    }
    if s_elem > t_elem {
        return Ok(0.0); // kernel support: left-sided operator is causal
    }
    let tables = CouplingTables::new(beta, j, k)?;
    let (t0, t1) = mesh.element(t_elem);
    let (s0, s1) = mesh.element(s_elem);
    let block = if s_elem == t_elem {
        tables.block_self(t1 - t0)
    } else if s_elem + 1 == t_elem {
        tables.block_adjacent(s1 - s0, t1 - t0)
    } else {
        tables.block_separated(s0, s1 - s0, t0, t1 - t0)
    };
    Ok(block[(j, k)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyquad::{adaptive_integrate, l2_project, PowerLogFn, ScalarFn};
    use crate::special::gamma;
    use nalgebra::DMatrix;

    fn powerlog(powers: Vec<(f64, f64)>) -> ScalarFn {
        ScalarFn::PowerLog(PowerLogFn::from_powers(powers).unwrap())
    }

    #[test]
    fn monomial_k0_matches_paper_formula() {
        // (D^(alpha-2) 1)(x) = x^(2-alpha) / Gamma(3-alpha)
        for alpha in [1.2, 1.5, 1.8] {
            let beta = 2.0 - alpha;
            for x in [0.1, 0.5, 1.0] {
                let v = rl_left_monomial(beta, 0, x).unwrap();
                let expect = x.powf(2.0 - alpha) / gamma(3.0 - alpha);
                assert!((v - expect).abs() < 1e-14 * expect.abs());
            }
        }
    }

    #[test]
    fn monomial_at_zero_and_known_value() {
        assert_eq!(rl_left_monomial(0.3, 4, 0.0).unwrap(), 0.0);
        let v = rl_left_monomial(0.5, 1, 1.0).unwrap();
        assert!((v - 1.0 / gamma(2.5)).abs() < 1e-14);
        assert!(rl_left_monomial(1.5, 0, 0.5).is_err());
    }

    #[test]
    fn monomial_vs_adaptive_quadrature() {
        for beta in [0.2, 0.5, 0.8] {
            for k in [0u32, 1, 3, 6] {
                for x in [0.08, 0.41, 0.97] {
                    let v = rl_left_monomial(beta, k, x).unwrap();
                    let oracle = adaptive_integrate(
                        &|s: f64| (x - s).powf(beta - 1.0) * s.powi(k as i32),
                        0.0,
                        x,
                        1e-12,
                    ) / gamma(beta);
                    assert!(
                        (v - oracle).abs() < 1e-10 * oracle.abs(),
                        "beta={beta} k={k} x={x}: {v} vs {oracle}"
                    );
                }
            }
        }
    }

    #[test]
    fn semigroup_property_on_monomials() {
        // D^-b1 (D^-b2 s^k) = D^-(b1+b2) s^k via the Gamma-ratio formula
        for (b1, b2) in [(0.2, 0.3), (0.45, 0.35), (0.1, 0.85)] {
            for k in [0u32, 2, 5] {
                for x in [0.3, 0.9] {
                    let inner_coef = gamma(k as f64 + 1.0) / gamma(k as f64 + 1.0 + b2);
                    let outer = inner_coef * rl_left_power(b1, k as f64 + b2, x).unwrap();
                    let direct = rl_left_monomial(b1 + b2, k, x).unwrap();
                    assert!(
                        (outer - direct).abs() < 1e-12 * direct.abs().max(1e-12),
                        "b1={b1} b2={b2} k={k}"
                    );
                }
            }
        }
    }

    #[test]
    fn apply_example1_closed_form() {
        // sigma = 2x - 3x^2, alpha = 3/2:
        // D^(alpha-2) sigma = 2 G(2)/G(4-a) x^(3-a) - 3 G(3)/G(5-a) x^(4-a)
        let alpha = 1.5;
        let beta = 2.0 - alpha;
        let mesh = Mesh::from_nodes(vec![0.0, 0.25, 0.5, 0.625, 0.75, 1.0]).unwrap();
        let sigma = l2_project(&powerlog(vec![(2.0, 1.0), (-3.0, 2.0)]), &mesh, 2).unwrap();
        for x in [0.05, 0.2, 0.33, 0.5, 0.7, 0.9, 1.0] {
            let v = rl_left_apply(&sigma, beta, x).unwrap();
            let expect = 2.0 * gamma(2.0) / gamma(4.0 - alpha) * x.powf(3.0 - alpha)
                - 3.0 * gamma(3.0) / gamma(5.0 - alpha) * x.powf(4.0 - alpha);
            assert!(
                (v - expect).abs() < 1e-12 * expect.abs().max(1e-3),
                "x={x}: {v} vs {expect}"
            );
        }
    }

    #[test]
    fn apply_zero_and_linearity() {
        let mesh = Mesh::uniform(4).unwrap();
        let zero = PiecewisePolynomial::zero(mesh.clone(), 2);
        assert_eq!(rl_left_apply(&zero, 0.4, 0.7).unwrap(), 0.0);

        let f = l2_project(&powerlog(vec![(1.0, 1.0)]), &mesh, 2).unwrap();
        let g = l2_project(&powerlog(vec![(1.0, 2.0)]), &mesh, 2).unwrap();
        let fg = l2_project(&powerlog(vec![(2.0, 1.0), (3.0, 2.0)]), &mesh, 2).unwrap();
        for x in [0.3, 0.8] {
            let lin = 2.0 * rl_left_apply(&f, 0.6, x).unwrap()
                + 3.0 * rl_left_apply(&g, 0.6, x).unwrap();
            let direct = rl_left_apply(&fg, 0.6, x).unwrap();
            assert!((lin - direct).abs() < 1e-12 * direct.abs().max(1e-12));
        }
    }

    #[test]
    fn apply_piecewise_constant_closed_form() {
        // 1 on (0, 0.5), 0 on (0.5, 1); beta = 1/2; x = 0.75:
        // value = (0.75^0.5 - 0.25^0.5)/Gamma(1.5)
        let mesh = Mesh::uniform(2).unwrap();
        let mut coeffs = DMatrix::zeros(2, 1);
        coeffs[(0, 0)] = 1.0;
        let p = PiecewisePolynomial::new(mesh, 0, coeffs).unwrap();
        let v = rl_left_apply(&p, 0.5, 0.75).unwrap();
        let expect = (0.75f64.sqrt() - 0.25f64.sqrt()) / gamma(1.5);
        assert!((v - expect).abs() < 1e-13);
    }

    #[test]
    fn apply_matches_singular_quadrature_on_refined_mesh() {
        // mesh with several separated elements to exercise all three regimes
        let mesh = Mesh::from_nodes(vec![0.0, 0.0625, 0.125, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let p = l2_project(&powerlog(vec![(1.0, 0.0), (-0.7, 1.0), (0.4, 3.0)]), &mesh, 3).unwrap();
        let beta = 0.35;
        for x in [0.07, 0.3, 0.62, 0.99] {
            let v = rl_left_apply(&p, beta, x).unwrap();
            let oracle = adaptive_integrate(
                &|s: f64| (x - s).powf(beta - 1.0) * p.eval(s),
                0.0,
                x,
                1e-13,
            ) / gamma(beta);
            assert!(
                (v - oracle).abs() < 1e-10 * oracle.abs().max(1e-6),
                "x={x}: {v} vs {oracle}"
            );
        }
    }

    #[test]
    fn right_apply_constant_and_reflection() {
        let mesh = Mesh::uniform(3).unwrap();
        let one = l2_project(&powerlog(vec![(1.0, 0.0)]), &mesh, 1).unwrap();
        for beta in [0.25, 0.6] {
            for x in [0.0, 0.4, 1.0] {
                let v = rl_right_apply(&one, beta, x).unwrap();
                let expect = (1.0 - x).powf(beta) / gamma(beta + 1.0);
                assert!((v - expect).abs() < 1e-13, "beta={beta} x={x}");
            }
        }
        assert_eq!(rl_right_apply(&one, 0.5, 1.0).unwrap(), 0.0);
        // reflection identity against the left operator
        let f = l2_project(&powerlog(vec![(1.0, 1.0), (0.3, 2.0)]), &mesh, 2).unwrap();
        let fr = f.reflect();
        for x in [0.2, 0.55, 0.9] {
            let right = rl_right_apply(&f, 0.4, x).unwrap();
            let left = rl_left_apply(&fr, 0.4, 1.0 - x).unwrap();
            assert!((right - left).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_entry_causality_and_closed_form() {
        let mesh = Mesh::uniform(2).unwrap();
        // source right of target: exactly zero
        assert_eq!(frac_coupling_entry(&mesh, 0.5, 1, 0, 0, 1).unwrap(), 0.0);

        // S = T = (0,1), constant trial, test P_1 (psi' = 2 sqrt(3)):
        // entry = 2 sqrt(3) / Gamma(beta+2)
        let one = Mesh::uniform(1).unwrap();
        for beta in [0.2, 0.5, 0.8] {
            let e = frac_coupling_entry(&one, beta, 0, 0, 0, 1).unwrap();
            let expect = 2.0 * 3f64.sqrt() / gamma(beta + 2.0);
            assert!((e - expect).abs() < 1e-13 * expect, "beta={beta}");
        }
    }

    /// Nested adaptive quadrature oracle for a coupling entry.
    fn entry_oracle(mesh: &Mesh, beta: f64, s: usize, j: usize, t: usize, k: usize) -> f64 {
        let (s0, s1) = mesh.element(s);
        let (t0, t1) = mesh.element(t);
        let ht = t1 - t0;
        let outer = |x: f64| {
            let inner = adaptive_integrate(
                &|y: f64| {
                    (x - y).powf(beta - 1.0)
                        * crate::polyquad::reference_basis_eval(j, (y - s0) / (s1 - s0)).0
                },
                s0,
                s1.min(x),
                1e-12,
            );
            let der = crate::polyquad::reference_basis_eval(k, (x - t0) / ht).1 / ht;
            inner * der
        };
        adaptive_integrate(&outer, t0, t1, 1e-11) / gamma(beta)
    }

    #[test]
    fn coupling_entry_matches_nested_adaptive() {
        let mesh = Mesh::from_nodes(vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let beta = 0.8;
        // adjacent pair, constant trial, linear test (spec example regime)
        for (s, t) in [(1, 1), (0, 1), (0, 2), (1, 3)] {
            for j in 0..=1usize {
                for k in 1..=2usize {
                    let e = frac_coupling_entry(&mesh, beta, s, j, t, k).unwrap();
                    let o = entry_oracle(&mesh, beta, s, j, t, k);
                    assert!(
                        (e - o).abs() < 1e-9 * o.abs().max(1e-4),
                        "(S={s},T={t},j={j},k={k}): {e} vs {o}"
                    );
                }
            }
        }
    }

    #[test]
    fn coupling_block_is_block_lower_triangular() {
        let mesh = Mesh::uniform(4).unwrap();
        let (p, n) = (1, 2);
        let c = coupling_block(&mesh, p, n, 0.5).unwrap();
        assert_eq!(c.nrows(), (n + 1) * 4);
        assert_eq!(c.ncols(), (p + 1) * 4);
        for t in 0..4usize {
            for s in 0..4usize {
                if s > t {
                    for k in 0..=n {
                        for j in 0..=p {
                            assert_eq!(c[((n + 1) * t + k, (p + 1) * s + j)], 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn coupling_block_matches_single_entries() {
        let mesh = Mesh::from_nodes(vec![0.0, 0.5, 0.75, 1.0]).unwrap();
        let (p, n, beta) = (2, 3, 0.45);
        let c = coupling_block(&mesh, p, n, beta).unwrap();
        for t in 0..3usize {
            for s in 0..=t {
                for j in 0..=p {
                    for k in 0..=n {
                        let e = frac_coupling_entry(&mesh, beta, s, j, t, k).unwrap();
                        let v = c[((n + 1) * t + k, (p + 1) * s + j)];
                        assert!(
                            (v - e).abs() < 1e-12 * e.abs().max(1e-12),
                            "(S={s},T={t},j={j},k={k})"
                        );
                    }
                }
            }
        }
    }
}
