//! Orthonormal Legendre basis on the reference interval [0,1].
//!
//! `P_k(t) = sqrt(2k+1) * L_k(2t - 1)` with the classical Legendre `L_k`,
//! so that `int_0^1 P_j P_k = delta_jk`. Element bases are affine images of
//! this family (no rescaling), which makes every element mass matrix `h * I`.

use crate::special::binomial;
use nalgebra::DMatrix;

/// Value and derivative of the k-th orthonormal basis function at `t`.
pub fn reference_basis_eval(k: usize, t: f64) -> (f64, f64) {
    let u = 2.0 * t - 1.0;
    let (mut lm, mut lc) = (1.0, u); // L_{k-1}, L_k starting at k = 1
    let (mut dm, mut dc) = (0.0, 1.0); // derivatives w.r.t. u
    if k == 0 {
        return (1.0, 0.0);
    }
    for i in 1..k {
        let i_f = i as f64;
        let ln = ((2.0 * i_f + 1.0) * u * lc - i_f * lm) / (i_f + 1.0);
        let dn = dm + (2.0 * i_f + 1.0) * lc;
        lm = lc;
        lc = ln;
        dm = dc;
        dc = dn;
    }
    let scale = ((2 * k + 1) as f64).sqrt();
    (scale * lc, scale * 2.0 * dc)
}

/// Values and derivatives of P_0..P_deg at `t`, written into the slices.
pub fn reference_basis_eval_all(deg: usize, t: f64, values: &mut [f64], derivs: &mut [f64]) {
    debug_assert!(values.len() > deg && derivs.len() > deg);
    let u = 2.0 * t - 1.0;
    let mut lm = 1.0;
    let mut dm = 0.0;
    values[0] = 1.0;
    derivs[0] = 0.0;
    if deg == 0 {
        return;
    }
    let mut lc = u;
    let mut dc = 1.0;
    values[1] = 3f64.sqrt() * lc;
    derivs[1] = 3f64.sqrt() * 2.0;
    for i in 1..deg {
        let i_f = i as f64;
        let ln = ((2.0 * i_f + 1.0) * u * lc - i_f * lm) / (i_f + 1.0);
        let dn = dm + (2.0 * i_f + 1.0) * lc;
        lm = lc;
        lc = ln;
        dm = dc;
        dc = dn;
        let scale = ((2 * (i + 1) + 1) as f64).sqrt();
        values[i + 1] = scale * lc;
        derivs[i + 1] = scale * 2.0 * dc;
    }
}

/// P_k at an endpoint: `P_k(1) = sqrt(2k+1)`, `P_k(0) = (-1)^k sqrt(2k+1)`.
pub fn endpoint_value(k: usize, at_one: bool) -> f64 {
    let v = ((2 * k + 1) as f64).sqrt();
    if at_one || k % 2 == 0 {
        v
    } else {
        -v
    }
}

/// Monomial coefficients of P_k on [0,1]:
/// `P_k(t) = sqrt(2k+1) * sum_r (-1)^(k+r) C(k,r) C(k+r,r) t^r`.
pub fn monomial_coeffs(k: usize) -> Vec<f64> {
    let scale = ((2 * k + 1) as f64).sqrt();
    (0..=k)
        .map(|r| {
            let sign = if (k + r) % 2 == 0 { 1.0 } else { -1.0 };
            scale * sign * binomial(k, r) * binomial(k + r, r)
        })
        .collect()
}

/// Gram matrix of derivatives on the reference interval:
/// `D[j,k] = int_0^1 P_j'(t) P_k'(t) dt`.
pub fn ref_deriv_gram(deg: usize) -> DMatrix<f64> {
    gauss_moment_matrix(deg, deg, |vals, ders, j, k| {
        let _ = vals;
        ders[j] * ders[k]
    })
}

/// Mixed matrix `C[j,k] = int_0^1 P_j(t) P_k'(t) dt` with j <= dj, k <= dk.
pub fn ref_value_deriv(dj: usize, dk: usize) -> DMatrix<f64> {
    gauss_moment_matrix(dj, dk, |vals, ders, j, k| vals[j] * ders[k])
}

fn gauss_moment_matrix(
    dj: usize,
    dk: usize,
    term: impl Fn(&[f64], &[f64], usize, usize) -> f64,
) -> DMatrix<f64> {
    let deg = dj.max(dk);
    let rule = super::quad::gauss_legendre(deg + 1).expect("positive point count");
    let mut out = DMatrix::zeros(dj + 1, dk + 1);
    let mut vals = vec![0.0; deg + 1];
    let mut ders = vec![0.0; deg + 1];
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        reference_basis_eval_all(deg, t, &mut vals, &mut ders);
        for j in 0..=dj {
            for k in 0..=dk {
                out[(j, k)] += w * term(&vals, &ders, j, k);
            }
        }
    }
    out
}
