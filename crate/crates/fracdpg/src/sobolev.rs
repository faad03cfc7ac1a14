//! Element-local test-norm Gram matrices: the H^1(T) Gram for the tau
//! component and the H^(alpha/2)(T) Gram (L2 plus Sobolev-Slobodeckij double
//! integral) for the v component.
//!
//! The singular double integral is assembled analytically: factoring
//! `v(x)-v(y) = (x-y) * Dv(x,y)` with the (polynomial) difference quotient
//! `Dv` turns the kernel `|x-y|^(-1-alpha)` into the integrable
//! `|x-y|^(1-alpha)`, whose monomial moments have a beta-function closed
//! form. Under the affine map to an element of length h the L2 part scales
//! like h and the seminorm part like h^(1-alpha).

use crate::polyquad::monomial_coeffs;
use crate::special::beta;
use crate::{FracDpgError, Result};
use nalgebra::DMatrix;

/// Degree cap for the difference-quotient expansion; the exact binomial
/// coefficients stay small enough for full accuracy up to here.
pub const MAX_SEMINORM_DEGREE: usize = 8;

/// Parameters of the local test norm `||(tau,v)||^2 = ||tau||_{H^1(T)}^2 +
/// ||v||_{H^(alpha/2)(T)}^2` with polynomial degrees m (tau) and n (v).
#[derive(Debug, Clone, Copy)]
pub struct TestNormSpec {
    pub alpha: f64,
    pub m: usize,
    pub n: usize,
}

impl TestNormSpec {
    pub fn new(alpha: f64, m: usize, n: usize) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(TestNormSpec { alpha, m, n })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(FracDpgError::invalid("alpha", "must lie in (1, 2)"));
    }
    Ok(())
}

/// Moment table `I[i,j] = int_0^1 int_0^1 x^i y^j |x-y|^(1-alpha) dx dy
/// = (B(j+1, 2-alpha) + B(i+1, 2-alpha)) / (i+j+3-alpha)`.
pub fn slobodeckij_reference_moments(alpha: f64, max_degree: usize) -> Result<DMatrix<f64>> {
    check_alpha(alpha)?;
    let two_minus_alpha = 2.0 - alpha;
    let b: Vec<f64> = (0..=max_degree)
        .map(|i| beta(i as f64 + 1.0, two_minus_alpha))
        .collect();
    let mut out = DMatrix::zeros(max_degree + 1, max_degree + 1);
    for i in 0..=max_degree {
        for j in 0..=max_degree {
            out[(i, j)] = (b[j] + b[i]) / (i as f64 + j as f64 + 3.0 - alpha);
        }
    }
    Ok(out)
}

/// Reference Slobodeckij seminorm Gram on [0,1]:
/// `S[k,l] = int int (P_k(x)-P_k(y)) (P_l(x)-P_l(y)) |x-y|^(-1-alpha)`.
pub fn reference_seminorm_gram(alpha: f64, degree: usize) -> Result<DMatrix<f64>> {
    check_alpha(alpha)?;
    if degree > MAX_SEMINORM_DEGREE {
        return Err(FracDpgError::invalid(
            "degree",
            format!("seminorm expansion supports degree <= {MAX_SEMINORM_DEGREE}"),
        ));
    }
    let moments = slobodeckij_reference_moments(alpha, 2 * degree.max(1) - 2)?;
    // difference quotient of P_k: DP_k(x,y) = sum_{a+b <= k-1} c_k[a+b+1] x^a y^b
    let coeffs: Vec<Vec<f64>> = (0..=degree).map(monomial_coeffs).collect();
    let mut out = DMatrix::zeros(degree + 1, degree + 1);
    for k in 0..=degree {
        for l in k..=degree {
            let mut acc = 0.0;
            for a in 0..k {
                for b in 0..k - a {
                    let ck = coeffs[k][a + b + 1];
                    if ck == 0.0 {
                        continue;
                    }
                    for a2 in 0..l {
                        for b2 in 0..l - a2 {
                            let cl = coeffs[l][a2 + b2 + 1];
                            acc += ck * cl * moments[(a + a2, b + b2)];
                        }
                    }
                }
            }
            out[(k, l)] = acc;
            out[(l, k)] = acc;
        }
    }
    Ok(out)
}

/// H^(alpha/2) Gram of the v test basis on [a,b]:
/// `h * I + h^(1-alpha) * S_ref(alpha)`.
pub fn element_vv_gram(a: f64, b: f64, degree: usize, alpha: f64) -> Result<DMatrix<f64>> {
    if !(b > a) {
        return Err(FracDpgError::invalid("element", "degenerate interval"));
    }
    let h = b - a;
    let s = reference_seminorm_gram(alpha, degree)?;
    let mut out = s * h.powf(1.0 - alpha);
    for k in 0..=degree {
        out[(k, k)] += h;
    }
    Ok(out)
}

/// H^1 Gram of the tau test basis on [a,b]: `h * I + (1/h) * D_ref`.
pub fn element_tt_gram(a: f64, b: f64, degree: usize) -> Result<DMatrix<f64>> {
    if !(b > a) {
        return Err(FracDpgError::invalid("element", "degenerate interval"));
    }
    let h = b - a;
    let mut out = crate::polyquad::ref_deriv_gram(degree) / h;
    for k in 0..=degree {
        out[(k, k)] += h;
    }
    Ok(out)
}
