//! Normal-equation solve and the localized error estimator.
//!
//! With `Theta = L L^T` blockwise, the DPG system `B^T Theta^-1 B x =
//! B^T Theta^-1 f` is the least-squares problem for `W x ~ g` with
//! `W = L^-1 B`, `g = L^-1 f`. We form `S = W^T W` densely, equilibrate it
//! symmetrically (adaptive meshes make column scales span many orders of
//! magnitude), factor by Cholesky and polish with a few steps of iterative
//! refinement through `W`. The residual representer `rho = Theta^-1 (f - Bx)`
//! yields `est(T)^2` as the per-element partial sums of `r . rho`.

use crate::assembly::SystemMatrices;
use crate::{FracDpgError, Result};
use nalgebra::{DMatrix, DVector};

/// Cholesky factors of the Theta blocks (uniform block size).
#[derive(Debug)]
pub struct ThetaFactors {
    /// lower-triangular factors, one per element
    factors: Vec<DMatrix<f64>>,
    block_size: usize,
}

/// Per-block Cholesky; a failure names the offending element because it
/// signals an assembly bug rather than bad user input.
pub fn factor_theta(blocks: &[DMatrix<f64>]) -> Result<ThetaFactors> {
    let mut factors = Vec::with_capacity(blocks.len());
    let block_size = blocks.first().map_or(0, |b| b.nrows());
    for (e, block) in blocks.iter().enumerate() {
        if block.nrows() != block_size || block.ncols() != block_size {
            return Err(FracDpgError::DimensionMismatch(format!(
                "Theta block {e} is {}x{}, expected {block_size}",
                block.nrows(),
                block.ncols()
            )));
        }
        let chol = block
            .clone()
            .cholesky()
            .ok_or(FracDpgError::NonSpdBlock { element: e })?;
        factors.push(chol.unpack());
    }
    Ok(ThetaFactors {
        factors,
        block_size,
    })
}

impl ThetaFactors {
    pub fn n_blocks(&self) -> usize {
        self.factors.len()
    }

    pub fn dim(&self) -> usize {
        self.factors.len() * self.block_size
    }

    /// `Theta^-1 y` blockwise.
    pub fn apply_inverse(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = y.clone();
        for (e, l) in self.factors.iter().enumerate() {
            let mut seg = out.rows_mut(e * self.block_size, self.block_size);
            l.solve_lower_triangular_mut(&mut seg);
            l.transpose().solve_upper_triangular_mut(&mut seg);
        }
        out
    }

    /// `L^-1 M` blockwise for a matrix with matching row dimension.
    pub fn solve_lower(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = m.clone();
        for (e, l) in self.factors.iter().enumerate() {
            let mut rows = out.rows_mut(e * self.block_size, self.block_size);
            l.solve_lower_triangular_mut(&mut rows);
        }
        out
    }

    pub fn solve_lower_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = v.clone();
        for (e, l) in self.factors.iter().enumerate() {
            let mut seg = out.rows_mut(e * self.block_size, self.block_size);
            l.solve_lower_triangular_mut(&mut seg);
        }
        out
    }
}

/// The solved trial vector with residual, representer, and estimator data.
pub struct DpgSolution {
    pub x: DVector<f64>,
    /// r = f - B x
    pub residual: DVector<f64>,
    /// rho = Theta^-1 r
    pub representer: DVector<f64>,
    /// est(T)^2, clamped at zero
    pub est_sq_per_element: Vec<f64>,
    /// sqrt(sum_T est(T)^2)
    pub est: f64,
    /// relative deviation between the blockwise and the global evaluation of
    /// est^2 (diagnostic for the algebraic identity)
    pub est_identity_rel_dev: f64,
    /// ||B^T rho|| / ||B^T Theta^-1 f|| (Galerkin optimality diagnostic)
    pub galerkin_rel: f64,
}

/// Per-element estimator contributions `est(T)^2 = sum_{j in rows(T)} r_j rho_j`.
///
/// Tiny negative roundoff (each block sum is a quadratic form in exact
/// arithmetic) is clamped to zero.
pub fn estimate(
    residual: &DVector<f64>,
    representer: &DVector<f64>,
    rows_per_element: usize,
) -> Vec<f64> {
    let ne = residual.len() / rows_per_element;
    let mut out = Vec::with_capacity(ne);
    for e in 0..ne {
        let mut acc = 0.0;
        for i in e * rows_per_element..(e + 1) * rows_per_element {
            acc += residual[i] * representer[i];
        }
        out.push(acc.max(0.0));
    }
    out
}

/// Solve the normal equations for an assembled system.
pub fn solve_normal_equations(
    b: &DMatrix<f64>,
    theta: &ThetaFactors,
    f: &DVector<f64>,
) -> Result<DpgSolution> {
    if b.nrows() != theta.dim() || f.len() != b.nrows() {
        return Err(FracDpgError::DimensionMismatch(format!(
            "B is {}x{}, Theta dim {}, f has {}",
            b.nrows(),
            b.ncols(),
            theta.dim(),
            f.len()
        )));
    }
    let dim_u = b.ncols();

    let w = theta.solve_lower(b); // L^-1 B
    let g = theta.solve_lower_vec(f); // L^-1 f
    let mut s = crate::solver::par_tr_mul(&w);
    let rhs = w.tr_mul(&g);

    // symmetric Jacobi equilibration
    let mut scale = DVector::zeros(dim_u);
    for i in 0..dim_u {
        let d = s[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return Err(FracDpgError::DiscreteInfSupFailure);
        }
        scale[i] = 1.0 / d.sqrt();
    }
    for j in 0..dim_u {
        for i in 0..dim_u {
            s[(i, j)] *= scale[i] * scale[j];
        }
    }
    let chol = s.cholesky().ok_or(FracDpgError::DiscreteInfSupFailure)?;

    let solve_scaled = |rhs_vec: &DVector<f64>| -> DVector<f64> {
        let scaled = rhs_vec.component_mul(&scale);
        let y = chol.solve(&scaled);
        y.component_mul(&scale)
    };

    let mut x = solve_scaled(&rhs);
    // iterative refinement via W keeps the optimality residual near machine
    // precision even when the trial scales are strongly graded
    for _ in 0..2 {
        let correction = &rhs - w.tr_mul(&(&w * &x));
        let dx = solve_scaled(&correction);
        x += dx;
    }

    let residual = f - b * &x;
    let representer = theta.apply_inverse(&residual);
    let rows_per_element = theta.block_size;
    let est_sq_per_element = estimate(&residual, &representer, rows_per_element);

    let est_sq_blockwise: f64 = est_sq_per_element.iter().sum();
    let est_sq_global = residual.dot(&representer);
    let est = est_sq_blockwise.max(0.0).sqrt();
    let denom = est_sq_global.abs().max(f64::MIN_POSITIVE);
    let est_identity_rel_dev = (est_sq_blockwise - est_sq_global).abs() / denom;

    let opt_res = b.tr_mul(&representer).norm();
    let opt_ref = b.tr_mul(&theta.apply_inverse(f)).norm();
    let galerkin_rel = opt_res / opt_ref.max(f64::MIN_POSITIVE);
    if !galerkin_rel.is_finite() || galerkin_rel > 1e-6 {
        // factorization "succeeded" on a numerically singular system
        return Err(FracDpgError::DiscreteInfSupFailure);
    }

    Ok(DpgSolution {
        x,
        residual,
        representer,
        est_sq_per_element,
        est,
        est_identity_rel_dev,
        galerkin_rel,
    })
}

/// `M^T M` with the column panels of the result computed in parallel.
/// Each entry is produced by exactly one task, so the result does not
/// depend on the thread count.
pub(crate) fn par_tr_mul(m: &DMatrix<f64>) -> DMatrix<f64> {
    use rayon::prelude::*;
    let ncols = m.ncols();
    let threads = rayon::current_num_threads().max(1);
    if ncols < 128 || threads == 1 {
        return m.tr_mul(m);
    }
    let panel = ncols.div_ceil(threads * 2);
    let panels: Vec<DMatrix<f64>> = (0..ncols.div_ceil(panel))
        .into_par_iter()
        .map(|i| {
            let lo = i * panel;
            let width = panel.min(ncols - lo);
            m.tr_mul(&m.columns(lo, width))
        })
        .collect();
    let mut out = DMatrix::zeros(ncols, ncols);
    let mut lo = 0;
    for p in panels {
        out.view_mut((0, lo), (ncols, p.ncols())).copy_from(&p);
        lo += p.ncols();
    }
    out
}

/// Convenience wrapper: factor Theta and solve in one call.
pub fn solve_system(sys: &SystemMatrices) -> Result<DpgSolution> {
    let factors = factor_theta(&sys.theta)?;
    solve_normal_equations(&sys.b, &factors, &sys.load)
}
