//! The three model problems with their exact data, the reported error
//! quantities, uniform/adaptive convergence loops, and empirical convergence
//! order fits.

use crate::assembly::{assemble_system, Coefficient, ProblemData, TrialLayout};
use crate::fractional::FractionalOrder;
use crate::mesh::{doerfler_mark, refine, Mesh};
use crate::polyquad::{
    gauss_legendre, points_for_ellipse, PiecewisePolynomial, PowerLogFn, ScalarFn,
};
use crate::solver::{factor_theta, solve_normal_equations};
use crate::special::gamma;
use crate::{FracDpgError, Result};
use nalgebra::DVector;
use std::time::Instant;

/// Exact solution bundle: u, sigma = Du, and the fractional trace
/// `D^(alpha-2) sigma`, plus declared Sobolev regularity exponents for rate
/// prediction in reports.
#[derive(Debug, Clone)]
pub struct ExactBundle {
    pub u: PowerLogFn,
    pub sigma: PowerLogFn,
    pub frac_trace: PowerLogFn,
    /// u is in H^r for every r below this
    pub u_regularity: f64,
    /// sigma is in H^s for every s below this
    pub sigma_regularity: f64,
}

/// Problem data plus (optionally) the exact solution.
pub struct ExampleProblem {
    pub name: String,
    pub data: ProblemData,
    pub exact: Option<ExactBundle>,
}

/// Example 1: alpha = 3/2, b = c = 1/2, exact solution `u = x^2 - x^3`.
pub fn example1() -> ExampleProblem {
    example1_with_alpha(1.5).expect("alpha = 3/2 is admissible")
}

/// Example 1 data for arbitrary alpha (the manufactured formulas hold for
/// any alpha in (1,2); the reference tables use 3/2).
pub fn example1_with_alpha(alpha: f64) -> Result<ExampleProblem> {
    let order = FractionalOrder::from_alpha(alpha)?;
    let f = PowerLogFn::from_powers(vec![
        (-2.0 * gamma(2.0) / gamma(3.0 - alpha), 2.0 - alpha),
        (3.0 * gamma(3.0) / gamma(4.0 - alpha), 3.0 - alpha),
        (-0.5, 3.0),
        (-1.0, 2.0),
        (1.0, 1.0),
    ])?;
    let data = ProblemData::new(
        order,
        Coefficient::Constant(0.5),
        Coefficient::Constant(0.5),
        ScalarFn::PowerLog(f),
    )?;
    let exact = ExactBundle {
        u: PowerLogFn::from_powers(vec![(1.0, 2.0), (-1.0, 3.0)])?,
        sigma: PowerLogFn::from_powers(vec![(2.0, 1.0), (-3.0, 2.0)])?,
        frac_trace: PowerLogFn::from_powers(vec![
            (2.0 * gamma(2.0) / gamma(4.0 - alpha), 3.0 - alpha),
            (-3.0 * gamma(3.0) / gamma(5.0 - alpha), 4.0 - alpha),
        ])?,
        u_regularity: f64::INFINITY,
        sigma_regularity: f64::INFINITY,
    };
    Ok(ExampleProblem {
        name: "example1".into(),
        data,
        exact: Some(exact),
    })
}

/// Example 2: exact solution `u = x^lambda - x` with lambda in (1/2, 3/2);
/// b = c = 0 (the printed right-hand side carries no advection/reaction
/// terms).
pub fn example2(lambda: f64, alpha: f64) -> Result<ExampleProblem> {
    if !(lambda > 0.5 && lambda < 1.5) {
        return Err(FracDpgError::invalid("lambda", "must lie in (1/2, 3/2)"));
    }
    let order = FractionalOrder::from_alpha(alpha)?;
    let f = PowerLogFn::from_powers(vec![
        (-gamma(lambda + 1.0) / gamma(lambda + 1.0 - alpha), lambda - alpha),
        (1.0 / gamma(2.0 - alpha), 1.0 - alpha),
    ])
    .map_err(|_| {
        FracDpgError::invalid(
            "lambda",
            format!("lambda - alpha = {} is not integrable", lambda - alpha),
        )
    })?;
    let data = ProblemData::new(
        order,
        Coefficient::Constant(0.0),
        Coefficient::Constant(0.0),
        ScalarFn::PowerLog(f),
    )?;
    let exact = ExactBundle {
        u: PowerLogFn::from_powers(vec![(1.0, lambda), (-1.0, 1.0)])?,
        sigma: PowerLogFn::from_powers(vec![(lambda, lambda - 1.0), (-1.0, 0.0)])?,
        frac_trace: PowerLogFn::from_powers(vec![
            (gamma(lambda + 1.0) / gamma(lambda + 2.0 - alpha), lambda + 1.0 - alpha),
            (-1.0 / gamma(3.0 - alpha), 2.0 - alpha),
        ])?,
        u_regularity: lambda + 0.5,
        sigma_regularity: lambda - 0.5,
    };
    Ok(ExampleProblem {
        name: format!("example2(lambda={lambda})"),
        data,
        exact: Some(exact),
    })
}

/// Example 3: `f = log(x)`, no known exact solution; b = c = 0.
pub fn example3(alpha: f64) -> Result<ExampleProblem> {
    let order = FractionalOrder::from_alpha(alpha)?;
    let f = PowerLogFn::new(vec![], vec![(1.0, 0.0)])?;
    let data = ProblemData::new(
        order,
        Coefficient::Constant(0.0),
        Coefficient::Constant(0.0),
        ScalarFn::PowerLog(f),
    )?;
    Ok(ExampleProblem {
        name: "example3".into(),
        data,
        exact: None,
    })
}

/// The reported error quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorQuantities {
    /// `|| u - u_h ||_L2`
    pub err_u: f64,
    /// `N^(1-alpha/2) || h^(1-alpha/2) (sigma - sigma_h) ||_L2`; the local
    /// weight is the one that makes the expression reduce to the plain L2
    /// norm on uniform meshes and mimics the H^(alpha/2-1) scaling.
    pub err_sigma: f64,
    /// `N^(-1/2) | u(interior nodes) - u_hat |`
    pub err_uhat: f64,
    /// `N^(-1/2) | (D^(alpha-2) sigma)(nodes) - sigma_hat |`
    pub err_sigmahat: f64,
}

/// Split a trial vector into its four components.
pub fn split_solution(
    layout: &TrialLayout,
    x: &DVector<f64>,
) -> (PiecewisePolynomial, PiecewisePolynomial, DVector<f64>, DVector<f64>) {
    let mesh = &layout.mesh;
    let ne = mesh.n_elements();
    let mut sigma = nalgebra::DMatrix::zeros(ne, layout.p + 1);
    let mut u = nalgebra::DMatrix::zeros(ne, layout.q + 1);
    for e in 0..ne {
        for j in 0..=layout.p {
            sigma[(e, j)] = x[layout.sigma_col(e, j)];
        }
        for j in 0..=layout.q {
            u[(e, j)] = x[layout.u_col(e, j)];
        }
    }
    let sigma_hat = DVector::from_fn(ne + 1, |i, _| x[layout.sigma_hat_col(i)]);
    let u_hat = DVector::from_fn(ne.saturating_sub(1), |i, _| {
        x[layout.u_hat_col(i + 1).expect("interior node")]
    });
    (
        PiecewisePolynomial::new(mesh.clone(), layout.p, sigma).expect("matching dims"),
        PiecewisePolynomial::new(mesh.clone(), layout.q, u).expect("matching dims"),
        sigma_hat,
        u_hat,
    )
}

/// `int_T (f - p|_T)^2` by pointwise evaluation. On the element touching
/// x = 0 a geometrically graded composite rule resolves the endpoint
/// singularity; elsewhere a Gauss rule sized by the distance to 0 is exact
/// to machine accuracy.
fn element_error_sq(f: &PowerLogFn, p: &PiecewisePolynomial, elem: usize) -> f64 {
    let (a, b) = p.mesh().element(elem);
    let h = b - a;
    let diff_sq = |x: f64| {
        let d = f.eval(x) - p.eval_element(elem, (x - a) / h);
        d * d
    };
    if a > 0.0 {
        let pts = points_for_ellipse((a + b) / h, 2 * p.degree() + 6);
        let rule = gauss_legendre(pts).expect("positive count");
        return rule.integrate_on(a, b, diff_sq);
    }
    // graded panels toward the singular endpoint
    let rule = gauss_legendre(12).expect("positive count");
    let mut total = 0.0;
    let mut hi = b;
    for _ in 0..1100 {
        let lo = 0.5 * hi;
        let v = rule.integrate_on(lo, hi, diff_sq);
        total += v;
        if !(v > 1e-16 * total) || lo < 1e-300 {
            break;
        }
        hi = lo;
    }
    total
}

/// Plain (unweighted) L2 error of a piecewise polynomial against an exact
/// power/log function.
pub fn l2_error(f: &PowerLogFn, p: &PiecewisePolynomial) -> f64 {
    (0..p.mesh().n_elements())
        .map(|e| element_error_sq(f, p, e))
        .sum::<f64>()
        .sqrt()
}

/// The four error quantities for a solved trial vector.
pub fn error_norms(
    x: &DVector<f64>,
    layout: &TrialLayout,
    exact: &ExactBundle,
    alpha: f64,
) -> Result<ErrorQuantities> {
    let mesh = &layout.mesh;
    let ne = mesh.n_elements();
    let nf = ne as f64;
    let (sigma_h, u_h, sigma_hat_h, u_hat_h) = split_solution(layout, x);

    let err_u_sq: f64 = (0..ne).map(|e| element_error_sq(&exact.u, &u_h, e)).sum();

    let w = 2.0 - alpha;
    let err_sigma_sq: f64 = (0..ne)
        .map(|e| mesh.length(e).powf(w) * element_error_sq(&exact.sigma, &sigma_h, e))
        .sum::<f64>()
        * nf.powf(w);

    let mut hat_u_sq = 0.0;
    for i in 1..ne {
        let d = exact.u.eval(mesh.nodes()[i]) - u_hat_h[i - 1];
        hat_u_sq += d * d;
    }
    let mut hat_sigma_sq = 0.0;
    for (i, &node) in mesh.nodes().iter().enumerate() {
        let d = exact.frac_trace.eval(node) - sigma_hat_h[i];
        hat_sigma_sq += d * d;
    }

    Ok(ErrorQuantities {
        err_u: err_u_sq.sqrt(),
        err_sigma: err_sigma_sq.sqrt(),
        err_uhat: (hat_u_sq / nf).sqrt(),
        err_sigmahat: (hat_sigma_sq / nf).sqrt(),
    })
}

/// One row of a convergence table.
#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub step: usize,
    pub n_elements: usize,
    pub dofs: usize,
    pub est: f64,
    pub errors: Option<ErrorQuantities>,
    pub seconds: f64,
}

/// Per-step mesh and estimator data plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct StepDetail {
    pub nodes: Vec<f64>,
    pub est_sq_per_element: Vec<f64>,
    pub est_identity_rel_dev: f64,
    pub galerkin_rel: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub records: Vec<ConvergenceRecord>,
    pub details: Vec<StepDetail>,
}

/// Parameters of a refinement loop.
#[derive(Debug, Clone)]
pub struct RunParams {
    pub p: usize,
    pub q: usize,
    pub m: usize,
    pub n: usize,
    /// Doerfler parameter; 1 refines uniformly.
    pub theta: f64,
    /// initial number of elements
    pub n0: usize,
    pub max_steps: usize,
    pub dof_budget: usize,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            p: 0,
            q: 0,
            m: 2,
            n: 2,
            theta: 1.0,
            n0: 2,
            max_steps: 30,
            dof_budget: 30_000,
        }
    }
}

/// assemble -> solve -> estimate -> record -> mark -> refine, starting from
/// a uniform mesh with `n0` elements, until `max_steps` records are taken or
/// the dof budget is reached.
pub fn run_convergence(problem: &ExampleProblem, params: &RunParams) -> Result<RunReport> {
    if !(params.theta > 0.0 && params.theta <= 1.0) {
        return Err(FracDpgError::invalid("theta", "must lie in (0, 1]"));
    }
    if params.m < params.p + 1 || params.n < params.q + 1 {
        log::warn!(
            "test degrees (m={}, n={}) below trial degrees plus one (p={}, q={}); \
             the discrete system may not be well posed",
            params.m,
            params.n,
            params.p,
            params.q
        );
    }
    let alpha = problem.data.alpha.alpha();
    let mut mesh = Mesh::uniform(params.n0)?;
    let mut records = Vec::new();
    let mut details = Vec::new();

    for step in 0..params.max_steps {
        let started = Instant::now();
        let wrap = |source: FracDpgError| FracDpgError::StepFailed {
            step,
            source: Box::new(source),
        };
        let sys = assemble_system(&mesh, params.p, params.q, params.m, params.n, &problem.data)
            .map_err(wrap)?;
        let factors = factor_theta(&sys.theta).map_err(wrap)?;
        let sol = solve_normal_equations(&sys.b, &factors, &sys.load).map_err(wrap)?;
        let errors = match &problem.exact {
            Some(exact) => Some(error_norms(&sol.x, &sys.trial, exact, alpha).map_err(wrap)?),
            None => None,
        };

        let dofs = sys.trial.dim();
        records.push(ConvergenceRecord {
            step,
            n_elements: mesh.n_elements(),
            dofs,
            est: sol.est,
            errors,
            seconds: started.elapsed().as_secs_f64(),
        });
        details.push(StepDetail {
            nodes: mesh.nodes().to_vec(),
            est_sq_per_element: sol.est_sq_per_element.clone(),
            est_identity_rel_dev: sol.est_identity_rel_dev,
            galerkin_rel: sol.galerkin_rel,
        });

        if step + 1 == params.max_steps || dofs >= params.dof_budget {
            break;
        }
        let marked = doerfler_mark(&sol.est_sq_per_element, params.theta).map_err(wrap)?;
        if marked.is_empty() {
            break; // estimator exactly zero: converged
        }
        mesh = refine(&mesh, &marked).map_err(wrap)?;
    }
    Ok(RunReport { records, details })
}

/// Which column of the convergence table a fit refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Est,
    ErrU,
    ErrSigma,
    ErrUhat,
    ErrSigmahat,
}

impl Quantity {
    pub fn extract(&self, r: &ConvergenceRecord) -> Option<f64> {
        match self {
            Quantity::Est => Some(r.est),
            Quantity::ErrU => r.errors.map(|e| e.err_u),
            Quantity::ErrSigma => r.errors.map(|e| e.err_sigma),
            Quantity::ErrUhat => r.errors.map(|e| e.err_uhat),
            Quantity::ErrSigmahat => r.errors.map(|e| e.err_sigmahat),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Quantity::Est => "est",
            Quantity::ErrU => "err_u",
            Quantity::ErrSigma => "err_sigma",
            Quantity::ErrUhat => "err_uhat",
            Quantity::ErrSigmahat => "err_sigmahat",
        }
    }
}

/// Least-squares slope of `log q` against `log N` over the last
/// `tail_count` records, sign-flipped so that rate 1 means `O(N^-1)`.
pub fn fit_eoc(records: &[ConvergenceRecord], quantity: Quantity, tail_count: usize) -> Result<f64> {
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| quantity.extract(r).map(|v| (r.n_elements as f64, v)))
        .collect();
    let ns: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let vs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    fit_slope(&ns, &vs, tail_count)
}

/// Sign-flipped least-squares slope of `log v` vs `log n` over the tail.
pub fn fit_slope(ns: &[f64], values: &[f64], tail_count: usize) -> Result<f64> {
    if ns.len() != values.len() {
        return Err(FracDpgError::DimensionMismatch(
            "N and value lists differ in length".into(),
        ));
    }
    let start = ns.len().saturating_sub(tail_count.max(2));
    let (ns, values) = (&ns[start..], &values[start..]);
    if ns.len() < 2 {
        return Err(FracDpgError::invalid("records", "need at least two records"));
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return Err(FracDpgError::invalid(
            "records",
            "quantities must be positive for a log-log fit",
        ));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| n.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|&v| v.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        cov += (x - xm) * (y - ym);
        var += (x - xm) * (x - xm);
    }
    if var == 0.0 {
        return Err(FracDpgError::invalid("records", "all N coincide"));
    }
    Ok(-cov / var)
}
