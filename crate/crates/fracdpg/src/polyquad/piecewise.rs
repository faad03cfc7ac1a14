//! Piecewise polynomials over a mesh in the reference orthonormal basis.

use super::basis::{monomial_coeffs, reference_basis_eval_all};
use super::func::ScalarFn;
use crate::mesh::Mesh;
use crate::{FracDpgError, Result};
use nalgebra::DMatrix;

/// Elementwise polynomial of fixed degree; row `i` of `coeffs` holds the
/// coefficients of element `i` in the mapped orthonormal Legendre basis.
#[derive(Debug, Clone)]
pub struct PiecewisePolynomial {
    mesh: Mesh,
    degree: usize,
    coeffs: DMatrix<f64>,
}

impl PiecewisePolynomial {
    pub fn new(mesh: Mesh, degree: usize, coeffs: DMatrix<f64>) -> Result<Self> {
        if coeffs.nrows() != mesh.n_elements() || coeffs.ncols() != degree + 1 {
            return Err(FracDpgError::DimensionMismatch(format!(
                "coefficients {}x{} for {} elements and degree {}",
                coeffs.nrows(),
                coeffs.ncols(),
                mesh.n_elements(),
                degree
            )));
        }
        Ok(PiecewisePolynomial {
            mesh,
            degree,
            coeffs,
        })
    }

    pub fn zero(mesh: Mesh, degree: usize) -> Self {
        let coeffs = DMatrix::zeros(mesh.n_elements(), degree + 1);
        PiecewisePolynomial {
            mesh,
            degree,
            coeffs,
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &DMatrix<f64> {
        &self.coeffs
    }

    /// Value at reference coordinate `t` of element `elem`.
    pub fn eval_element(&self, elem: usize, t: f64) -> f64 {
        let mut vals = vec![0.0; self.degree + 1];
        let mut ders = vec![0.0; self.degree + 1];
        reference_basis_eval_all(self.degree, t, &mut vals, &mut ders);
        (0..=self.degree)
            .map(|k| self.coeffs[(elem, k)] * vals[k])
            .sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let elem = self.mesh.find_element(x);
        let (a, b) = self.mesh.element(elem);
        self.eval_element(elem, (x - a) / (b - a))
    }

    /// Coefficients of the restriction to `elem` as a polynomial in the
    /// local variable `t = (x-a)/h`, monomial basis.
    pub fn monomial_on_element(&self, elem: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.degree + 1];
        for k in 0..=self.degree {
            let c = self.coeffs[(elem, k)];
            if c != 0.0 {
                for (r, m) in monomial_coeffs(k).into_iter().enumerate() {
                    out[r] += c * m;
                }
            }
        }
        out
    }

    /// `sqrt( sum_T h_T sum_k c_Tk^2 )`, exact in the orthonormal basis.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = 0.0;
        for e in 0..self.mesh.n_elements() {
            let h = self.mesh.length(e);
            for k in 0..=self.degree {
                acc += h * self.coeffs[(e, k)].powi(2);
            }
        }
        acc.sqrt()
    }

    /// The reflected function x -> f(1-x) on the reflected mesh.
    /// `P_k(1-t) = (-1)^k P_k(t)` maps coefficients to alternating signs.
    pub fn reflect(&self) -> PiecewisePolynomial {
        let n = self.mesh.n_elements();
        let mut coeffs = DMatrix::zeros(n, self.degree + 1);
        for e in 0..n {
            for k in 0..=self.degree {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                coeffs[(n - 1 - e, k)] = sign * self.coeffs[(e, k)];
            }
        }
        PiecewisePolynomial {
            mesh: self.mesh.reflect(),
            degree: self.degree,
            coeffs,
        }
    }
}

/// Elementwise L2-orthogonal projection onto piecewise polynomials of the
/// given degree. With the orthonormal basis the coefficients are plain
/// weighted moments: `c_Tk = (1/h_T) int_T f phi_Tk`.
pub fn l2_project(f: &ScalarFn, mesh: &Mesh, degree: usize) -> Result<PiecewisePolynomial> {
    f.validate()?;
    let n = mesh.n_elements();
    let mut coeffs = DMatrix::zeros(n, degree + 1);
    for e in 0..n {
        let (a, b) = mesh.element(e);
        let h = b - a;
        let moments = f.basis_moments(a, h, degree);
        for k in 0..=degree {
            coeffs[(e, k)] = moments[k] / h;
        }
    }
    PiecewisePolynomial::new(mesh.clone(), degree, coeffs)
}

#[cfg(test)]
mod tests {
    use super::super::func::PowerLogFn;
    use super::super::quad::{adaptive_integrate, gauss_legendre};
    use super::*;

    fn powerlog(powers: Vec<(f64, f64)>) -> ScalarFn {
        ScalarFn::PowerLog(PowerLogFn::from_powers(powers).unwrap())
    }

    #[test]
    fn projection_reproduces_polynomials() {
        // f = x^2 - x^3 lies in the degree-3 space
        let mesh = Mesh::uniform(3).unwrap();
        let f = powerlog(vec![(1.0, 2.0), (-1.0, 3.0)]);
        let p = l2_project(&f, &mesh, 3).unwrap();
        for x in [0.01, 0.2, 0.5, 0.77, 0.99] {
            assert!((p.eval(x) - f.eval(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn projection_of_identity_degree_zero_gives_means() {
        let mesh = Mesh::uniform(2).unwrap();
        let f = powerlog(vec![(1.0, 1.0)]);
        let p = l2_project(&f, &mesh, 0).unwrap();
        assert!((p.coeffs()[(0, 0)] - 0.25).abs() < 1e-14);
        assert!((p.coeffs()[(1, 0)] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn projection_of_singular_function_matches_adaptive_oracle() {
        // sigma-type singularity x^(-0.4), degree 1 on 4 elements
        let mesh = Mesh::uniform(4).unwrap();
        let f = PowerLogFn::from_powers(vec![(1.0, -0.4)]).unwrap();
        let p = l2_project(&ScalarFn::PowerLog(f.clone()), &mesh, 1).unwrap();
        for e in 0..4 {
            let (a, b) = mesh.element(e);
            let h = b - a;
            for k in 0..=1usize {
                let oracle = adaptive_integrate(
                    &|x: f64| {
                        let mut vals = vec![0.0; 2];
                        let mut ders = vec![0.0; 2];
                        reference_basis_eval_all(1, (x - a) / h, &mut vals, &mut ders);
                        f.eval(x) * vals[k]
                    },
                    a,
                    b,
                    1e-13,
                ) / h;
                assert!(
                    (p.coeffs()[(e, k)] - oracle).abs() < 1e-9 * oracle.abs().max(1.0),
                    "element {e}, k={k}: {} vs {oracle}",
                    p.coeffs()[(e, k)]
                );
            }
        }
    }

    #[test]
    fn projection_idempotent_and_orthogonal() {
        let mesh = Mesh::uniform(3).unwrap();
        let f = powerlog(vec![(1.0, 0.6), (2.0, 2.0)]);
        let p = l2_project(&f, &mesh, 2).unwrap();
        // residual orthogonal to every basis function (adaptive quadrature
        // because x^0.6 is not smooth at the left endpoint)
        for e in 0..3 {
            let (a, b) = mesh.element(e);
            for k in 0..=2usize {
                let ip = adaptive_integrate(
                    &|x: f64| {
                        let mut vals = vec![0.0; 3];
                        let mut ders = vec![0.0; 3];
                        reference_basis_eval_all(2, (x - a) / (b - a), &mut vals, &mut ders);
                        (f.eval(x) - p.eval(x)) * vals[k]
                    },
                    a,
                    b,
                    1e-13,
                );
                assert!(ip.abs() < 1e-10, "element {e}, k={k}: residual ip {ip}");
            }
        }
        // idempotence: projecting the projection changes nothing
        let p2 = l2_project(
            &ScalarFn::Smooth(std::sync::Arc::new({
                let p = p.clone();
                move |x| p.eval(x)
            })),
            &mesh,
            2,
        )
        .unwrap();
        for e in 0..3 {
            for k in 0..=2usize {
                assert!((p.coeffs()[(e, k)] - p2.coeffs()[(e, k)]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn monomial_on_element_consistent_with_eval() {
        let mesh = Mesh::uniform(2).unwrap();
        let mut coeffs = DMatrix::zeros(2, 3);
        coeffs[(0, 0)] = 0.3;
        coeffs[(0, 1)] = -1.2;
        coeffs[(0, 2)] = 0.7;
        coeffs[(1, 2)] = 2.0;
        let p = PiecewisePolynomial::new(mesh, 2, coeffs).unwrap();
        for e in 0..2 {
            let mono = p.monomial_on_element(e);
            for t in [0.1, 0.5, 0.9] {
                let horner = mono.iter().rev().fold(0.0, |acc, c| acc * t + c);
                assert!((horner - p.eval_element(e, t)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn reflect_evaluates_mirrored() {
        let mesh = Mesh::from_nodes(vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        let f = powerlog(vec![(1.0, 1.0), (0.5, 2.0)]);
        let p = l2_project(&f, &mesh, 2).unwrap();
        let r = p.reflect();
        for x in [0.05, 0.3, 0.6, 0.95] {
            assert!((r.eval(x) - p.eval(1.0 - x)).abs() < 1e-12);
        }
    }
}
