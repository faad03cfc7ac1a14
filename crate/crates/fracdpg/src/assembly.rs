//! Assembly of the rectangular DPG matrix `B`, the block-diagonal test Gram
//! `Theta`, and the load vector for given mesh, degrees (p,q,m,n), and
//! problem data.
//!
//! Trial ordering: all sigma coefficients (element-major, degree-minor),
//! then all u coefficients, then sigma-hat at the N+1 nodes, then u-hat at
//! the N-1 interior nodes (homogeneous Dirichlet data is built into the
//! trial space). Test ordering: per element, the m+1 tau functions followed
//! by the n+1 v functions, so Theta is block diagonal with one
//! (m+n+2)-square block per element and the estimator can sum residual
//! contributions elementwise.
//!
//! Jump convention: `[w]_i = w(x_i^-) - w(x_i^+)` with missing exterior
//! traces zero. With this sign the exact solution satisfies `B x = f` with
//! `u_hat = u(x_i)` and `sigma_hat = (D^(alpha-2) sigma)(x_i)`, which is the
//! convention the reported trace errors rely on; the consistency test below
//! pins it down.

use crate::fractional::{coupling_block, FractionalOrder};
use crate::mesh::Mesh;
use crate::polyquad::{
    endpoint_value, gauss_legendre, ref_value_deriv, reference_basis_eval_all, ScalarFn, SmoothFn,
};
use crate::sobolev::reference_seminorm_gram;
use crate::{FracDpgError, Result};
use nalgebra::{DMatrix, DVector};

/// A PDE coefficient: constant (all model problems) or a smooth function
/// sampled by quadrature.
#[derive(Clone)]
pub enum Coefficient {
    Constant(f64),
    Function(SmoothFn),
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Function(f) => f(x),
        }
    }

    fn constant(&self) -> Option<f64> {
        match self {
            Coefficient::Constant(c) => Some(*c),
            Coefficient::Function(_) => None,
        }
    }
}

/// Data of the two-point boundary value problem.
#[derive(Clone)]
pub struct ProblemData {
    pub alpha: FractionalOrder,
    pub b_coeff: Coefficient,
    pub c_coeff: Coefficient,
    pub rhs: ScalarFn,
}

impl ProblemData {
    /// Validates the standing assumption `c - Db/2 >= 0` on a dense grid.
    pub fn new(
        alpha: FractionalOrder,
        b_coeff: Coefficient,
        c_coeff: Coefficient,
        rhs: ScalarFn,
    ) -> Result<Self> {
        rhs.validate()?;
        let grid = 513;
        for i in 0..=grid {
            let x = i as f64 / grid as f64;
            let db = match &b_coeff {
                Coefficient::Constant(_) => 0.0,
                Coefficient::Function(f) => {
                    let d = 1e-6;
                    let lo = (x - d).max(0.0);
                    let hi = (x + d).min(1.0);
                    (f(hi) - f(lo)) / (hi - lo)
                }
            };
            if c_coeff.eval(x) - 0.5 * db < -1e-9 {
                return Err(FracDpgError::invalid(
                    "coefficients",
                    format!("c - Db/2 < 0 at x = {x}"),
                ));
            }
        }
        Ok(ProblemData {
            alpha,
            b_coeff,
            c_coeff,
            rhs,
        })
    }
}

/// Index map of the trial space
/// `U^p x U^q x R^(N+1) x R^(N-1)` with dimension `(p+q+4) N`.
#[derive(Debug, Clone)]
pub struct TrialLayout {
    pub mesh: Mesh,
    pub p: usize,
    pub q: usize,
}

impl TrialLayout {
    pub fn new(mesh: Mesh, p: usize, q: usize) -> Self {
        TrialLayout { mesh, p, q }
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.n_elements()
    }

    pub fn dim(&self) -> usize {
        (self.p + self.q + 4) * self.n_elements()
    }

    pub fn sigma_col(&self, elem: usize, j: usize) -> usize {
        elem * (self.p + 1) + j
    }

    pub fn u_col(&self, elem: usize, j: usize) -> usize {
        (self.p + 1) * self.n_elements() + elem * (self.q + 1) + j
    }

    /// Column of the sigma-hat unknown at node `i`, i = 0..=N.
    pub fn sigma_hat_col(&self, node: usize) -> usize {
        (self.p + 1 + self.q + 1) * self.n_elements() + node
    }

    /// Column of the u-hat unknown at interior node `i`, i = 1..N.
    pub fn u_hat_col(&self, node: usize) -> Option<usize> {
        let n = self.n_elements();
        if node == 0 || node >= n {
            None
        } else {
            Some((self.p + 1 + self.q + 1) * n + (n + 1) + node - 1)
        }
    }
}

/// Row map of the broken test space `U^m x U^n` grouped per element.
#[derive(Debug, Clone, Copy)]
pub struct TestLayout {
    pub m: usize,
    pub n: usize,
    pub n_elements: usize,
}

impl TestLayout {
    pub fn rows_per_element(&self) -> usize {
        self.m + self.n + 2
    }

    pub fn dim(&self) -> usize {
        self.rows_per_element() * self.n_elements
    }

    pub fn tau_row(&self, elem: usize, k: usize) -> usize {
        elem * self.rows_per_element() + k
    }

    pub fn v_row(&self, elem: usize, k: usize) -> usize {
        elem * self.rows_per_element() + self.m + 1 + k
    }
}

/// The discrete problem state: `B`, the Theta blocks, and the load.
pub struct SystemMatrices {
    pub b: DMatrix<f64>,
    pub theta: Vec<DMatrix<f64>>,
    pub load: DVector<f64>,
    pub trial: TrialLayout,
    pub test: TestLayout,
}

/// Assemble the full system for one mesh.
pub fn assemble_system(
    mesh: &Mesh,
    p: usize,
    q: usize,
    m: usize,
    n: usize,
    data: &ProblemData,
) -> Result<SystemMatrices> {
    let trial = TrialLayout::new(mesh.clone(), p, q);
    let test = TestLayout {
        m,
        n,
        n_elements: mesh.n_elements(),
    };
    let b = assemble_b(&trial, m, n, data)?;
    let theta = assemble_theta(mesh, m, n, data.alpha.alpha())?;
    let load = assemble_load(mesh, m, n, data)?;
    Ok(SystemMatrices {
        b,
        theta,
        load,
        trial,
        test,
    })
}

/// The rectangular matrix `B[k,j] = b(u_j, v_k)` of the ultra-weak form.
pub fn assemble_b(layout: &TrialLayout, m: usize, n: usize, data: &ProblemData) -> Result<DMatrix<f64>> {
    let mesh = &layout.mesh;
    let ne = mesh.n_elements();
    let (p, q) = (layout.p, layout.q);
    let test = TestLayout {
        m,
        n,
        n_elements: ne,
    };
    let mut b = DMatrix::zeros(test.dim(), layout.dim());

    // reference matrices for the element-local terms
    let value_deriv_qm = ref_value_deriv(q, m); // int P_j P_k' (u against D tau)
    let quad_deg = 2 * p.max(q).max(m).max(n) + 6;

    for e in 0..ne {
        let (a, bnd) = mesh.element(e);
        let h = bnd - a;

        // (sigma, tau): orthonormal mass h * delta_jk
        for j in 0..=p.min(m) {
            b[(test.tau_row(e, j), layout.sigma_col(e, j))] = h;
        }
        // (u, D_T tau)
        for j in 0..=q {
            for k in 0..=m {
                b[(test.tau_row(e, k), layout.u_col(e, j))] = value_deriv_qm[(j, k)];
            }
        }
        // -<u_hat, [tau]> with [w]_i = w(x_i^-) - w(x_i^+):
        // tau on this element contributes -tau(a+) at the left node and
        // +tau(b-) at the right node to the jump, so the entries are
        // +P_k(0) and -P_k(1).
        for k in 0..=m {
            if let Some(col) = layout.u_hat_col(e) {
                b[(test.tau_row(e, k), col)] += endpoint_value(k, false);
            }
            if let Some(col) = layout.u_hat_col(e + 1) {
                b[(test.tau_row(e, k), col)] -= endpoint_value(k, true);
            }
        }

        // (sigma, b v) and (u, c v)
        match (data.b_coeff.constant(), data.c_coeff.constant()) {
            (Some(bc), Some(cc)) => {
                if bc != 0.0 {
                    for j in 0..=p.min(n) {
                        b[(test.v_row(e, j), layout.sigma_col(e, j))] += bc * h;
                    }
                }
                if cc != 0.0 {
                    for j in 0..=q.min(n) {
                        b[(test.v_row(e, j), layout.u_col(e, j))] += cc * h;
                    }
                }
            }
            _ => {
                let rule = gauss_legendre(quad_deg)?;
                let deg = p.max(q).max(n);
                let mut vals = vec![0.0; deg + 1];
                let mut ders = vec![0.0; deg + 1];
                for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
                    let x = a + h * t;
                    reference_basis_eval_all(deg, t, &mut vals, &mut ders);
                    let (bv, cv) = (data.b_coeff.eval(x), data.c_coeff.eval(x));
                    for k in 0..=n {
                        for j in 0..=p {
                            b[(test.v_row(e, k), layout.sigma_col(e, j))] +=
                                w * h * bv * vals[j] * vals[k];
                        }
                        for j in 0..=q {
                            b[(test.v_row(e, k), layout.u_col(e, j))] +=
                                w * h * cv * vals[j] * vals[k];
                        }
                    }
                }
            }
        }

        // -<sigma_hat, [v]>: same sign pattern as u_hat, all nodes present
        for k in 0..=n {
            b[(test.v_row(e, k), layout.sigma_hat_col(e))] += endpoint_value(k, false);
            b[(test.v_row(e, k), layout.sigma_hat_col(e + 1))] -= endpoint_value(k, true);
        }
    }

    // (sigma, D^((alpha-2)*) D_T v) = (D^(alpha-2) sigma, D_T v): dense block
    let coupling = coupling_block(mesh, p, n, data.alpha.beta())?;
    for t in 0..ne {
        for k in 0..=n {
            let row = test.v_row(t, k);
            for s in 0..=t {
                for j in 0..=p {
                    b[(row, layout.sigma_col(s, j))] +=
                        coupling[((n + 1) * t + k, (p + 1) * s + j)];
                }
            }
        }
    }

    Ok(b)
}

/// Block-diagonal test Gram: per element `blockdiag(H^1 Gram, H^(alpha/2) Gram)`.
pub fn assemble_theta(mesh: &Mesh, m: usize, n: usize, alpha: f64) -> Result<Vec<DMatrix<f64>>> {
    // the reference seminorm Gram is element independent; reuse it
    let s_ref = reference_seminorm_gram(alpha, n)?;
    let d_ref = crate::polyquad::ref_deriv_gram(m);
    let size = m + n + 2;
    let mut blocks = Vec::with_capacity(mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element(e);
        let h = b - a;
        let mut block = DMatrix::zeros(size, size);
        for j in 0..=m {
            for k in 0..=m {
                let mass = if j == k { h } else { 0.0 };
                block[(j, k)] = mass + d_ref[(j, k)] / h;
            }
        }
        let scale = h.powf(1.0 - alpha);
        for j in 0..=n {
            for k in 0..=n {
                let mass = if j == k { h } else { 0.0 };
                block[(m + 1 + j, m + 1 + k)] = mass + scale * s_ref[(j, k)];
            }
        }
        blocks.push(block);
    }
    Ok(blocks)
}

/// Load vector: `f_k = int f v_k` for v-type rows, zero for tau-type rows.
pub fn assemble_load(mesh: &Mesh, m: usize, n: usize, data: &ProblemData) -> Result<DVector<f64>> {
    let test = TestLayout {
        m,
        n,
        n_elements: mesh.n_elements(),
    };
    let mut load = DVector::zeros(test.dim());
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element(e);
        let moments = data.rhs.basis_moments(a, b - a, n);
        for k in 0..=n {
            load[test.v_row(e, k)] = moments[k];
        }
    }
    Ok(load)
}
