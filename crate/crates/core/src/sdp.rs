//! Dense primal-dual interior-point solver for a single complex Hermitian LMI.
//!
//! Solves
//!
//! ```text
//! minimize   c^T z
//! subject to S(z) = F_0 + sum_i z_i F_i  >= 0
//! ```
//!
//! together with its dual `maximize -<F_0, X>` over `X >= 0`, `<F_i, X> = c_i`,
//! where `<A, B> = Re tr(A B)`. Iterates keep `S(z)` strictly feasible; the
//! dual equality residual is driven to zero along the way. Directions use
//! Nesterov-Todd scaling with a Mehrotra predictor-corrector.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{eigh, hermitian_function, CMatrix, RMatrix};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpOptions {
    /// Target relative duality gap and relative dual residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    MaxIterations,
    NumericalTrouble,
}

impl std::fmt::Display for SdpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SdpStatus::Optimal => "optimal",
            SdpStatus::MaxIterations => "max_iterations",
            SdpStatus::NumericalTrouble => "numerical_trouble",
        })
    }
}

#[derive(Clone, Debug)]
pub struct LmiProblem {
    pub c: DVector<f64>,
    pub f0: CMatrix,
    pub fs: Vec<CMatrix>,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub z: DVector<f64>,
    pub s: CMatrix,
    pub x: CMatrix,
    /// `c^T z`, an upper bound on the optimum.
    pub primal_value: f64,
    /// `-<F_0, X>`, a lower bound whenever the dual residual vanishes.
    pub dual_value: f64,
    pub gap: f64,
    pub relative_gap: f64,
    /// `max_i |c_i - <F_i, X>|`.
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

fn inner(a: &CMatrix, b: &CMatrix) -> f64 {
    // Re tr(A B) for Hermitian A, B = sum_ij Re(A_ij conj(B_ij))
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn hermitize(m: CMatrix) -> CMatrix {
    (&m + m.adjoint()).scale(0.5)
}

impl LmiProblem {
    pub fn new(c: DVector<f64>, f0: CMatrix, fs: Vec<CMatrix>) -> Result<Self> {
        let n = f0.nrows();
        if f0.ncols() != n || n == 0 {
            return Err(Error::DimensionMismatch("F_0 must be square and non-empty".into()));
        }
        if fs.len() != c.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint matrices for {} variables",
                fs.len(),
                c.len()
            )));
        }
        if fs.iter().any(|f| f.nrows() != n || f.ncols() != n) {
            return Err(Error::DimensionMismatch("all F_i must match F_0".into()));
        }
        Ok(Self { c, f0, fs })
    }

    pub fn size(&self) -> usize {
        self.f0.nrows()
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn slack(&self, z: &DVector<f64>) -> CMatrix {
        let mut s = self.f0.clone();
        for (zi, fi) in z.iter().zip(&self.fs) {
            s += fi.scale(*zi);
        }
        hermitize(s)
    }

    fn apply_adjoint(&self, x: &CMatrix) -> DVector<f64> {
        DVector::from_iterator(self.fs.len(), self.fs.iter().map(|f| inner(f, x)))
    }

    fn combine(&self, dz: &DVector<f64>) -> CMatrix {
        let n = self.size();
        let mut out = CMatrix::zeros(n, n);
        for (zi, fi) in dz.iter().zip(&self.fs) {
            out += fi.scale(*zi);
        }
        out
    }
}

/// Largest `alpha` with `m + alpha dm >= 0`, given `l_inv` with `l_inv m l_inv^H = I`.
fn max_step(l_inv: &CMatrix, dm: &CMatrix) -> f64 {
    let scaled = hermitize(l_inv * dm * l_inv.adjoint());
    let (values, _) = eigh(&scaled);
    let lowest = values[0];
    if lowest >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lowest
    }
}

/// `m^{-1/2}` when `m` is positive definite.
fn inverse_sqrt(m: &CMatrix) -> Option<CMatrix> {
    let (values, vectors) = eigh(m);
    if !(values[0] > 0.0) || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let n = m.nrows();
    let scaled = CMatrix::from_fn(n, n, |i, j| vectors[(i, j)] / values[j].sqrt());
    Some(hermitize(scaled * vectors.adjoint()))
}

struct Scaling {
    w: CMatrix,
    w_half: CMatrix,
    w_half_inv: CMatrix,
    /// Eigenvectors and eigenvalues of `Lambda = W^{1/2} S W^{1/2}`.
    u: CMatrix,
    lambda: DVector<f64>,
}

fn nt_scaling(s: &CMatrix, x: &CMatrix) -> Scaling {
    let (sv, sq) = eigh(s);
    let n = s.nrows();
    let col_scaled = |f: &dyn Fn(f64) -> f64| {
        let scaled = CMatrix::from_fn(n, n, |i, j| sq[(i, j)] * f(sv[j]));
        hermitize(scaled * sq.adjoint())
    };
    let s_half = col_scaled(&|v: f64| v.max(0.0).sqrt());
    let s_half_inv = col_scaled(&|v: f64| 1.0 / v.max(f64::MIN_POSITIVE).sqrt());
    let p = hermitize(&s_half * x * &s_half);
    let p_half = hermitian_function(&p, |v| v.max(0.0).sqrt());
    let w = hermitize(&s_half_inv * p_half * &s_half_inv);
    let (wv, wq) = eigh(&w);
    let wf = |f: &dyn Fn(f64) -> f64| {
        let scaled = CMatrix::from_fn(n, n, |i, j| wq[(i, j)] * f(wv[j]));
        hermitize(scaled * wq.adjoint())
    };
    let w_half = wf(&|v: f64| v.max(0.0).sqrt());
    let w_half_inv = wf(&|v: f64| 1.0 / v.max(f64::MIN_POSITIVE).sqrt());
    let lam = hermitize(&w_half * s * &w_half);
    let (lambda, u) = eigh(&lam);
    Scaling {
        w,
        w_half,
        w_half_inv,
        u,
        lambda,
    }
}

struct Direction {
    dz: DVector<f64>,
    ds: CMatrix,
    dx: CMatrix,
}

/// Solves the scaled Newton system for a complementarity right-hand side
/// `rhs` expressed in the eigenbasis of `Lambda`.
fn direction(
    problem: &LmiProblem,
    sc: &Scaling,
    schur: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
    residual: &DVector<f64>,
    rhs: &CMatrix,
) -> Direction {
    let n = problem.size();
    let t_hat = CMatrix::from_fn(n, n, |a, b| rhs[(a, b)] * (2.0 / (sc.lambda[a] + sc.lambda[b])));
    let t = &sc.u * t_hat * sc.u.adjoint();
    let r = hermitize(&sc.w_half * t * &sc.w_half);
    let dz = schur.solve(&(problem.apply_adjoint(&r) - residual));
    let ds = hermitize(problem.combine(&dz));
    let dx = hermitize(r - &sc.w * &ds * &sc.w);
    Direction { dz, ds, dx }
}

/// Runs the interior-point method from a strictly feasible `z0`.
pub fn solve(problem: &LmiProblem, z0: &DVector<f64>, opts: &SdpOptions) -> Result<SdpSolution> {
    let n = problem.size();
    let m = problem.num_vars();
    if z0.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "starting point has {} entries, expected {m}",
            z0.len()
        )));
    }
    let mut z = z0.clone();
    let mut s = problem.slack(&z);
    let mut s_inv_factor = inverse_sqrt(&s)
        .ok_or_else(|| Error::Solver("starting point is not strictly feasible".into()))?;
    let s_inv = s_inv_factor.adjoint() * &s_inv_factor;
    let start_value = problem.c.dot(&z);
    let eta = start_value.abs().max(1.0) / n as f64;
    let mut x = hermitize(s_inv.scale(eta));
    let c_norm = problem.c.amax();

    let mut status = SdpStatus::MaxIterations;
    let mut iterations = 0;
    loop {
        let primal_value = problem.c.dot(&z);
        let residual = &problem.c - problem.apply_adjoint(&x);
        let dual_value = -inner(&problem.f0, &x);
        let rel_gap = (primal_value - dual_value).abs() / (1.0 + primal_value.abs());
        let rel_res = residual.amax() / (1.0 + c_norm);
        let complementarity = inner(&s, &x) / (1.0 + primal_value.abs());
        if rel_gap <= opts.tol && rel_res <= opts.tol && complementarity <= opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mu = inner(&s, &x) / n as f64;
        let sc = nt_scaling(&s, &x);
        let g: Vec<CMatrix> = problem.fs.iter().map(|f| &sc.w * f * &sc.w).collect();
        let schur_matrix = RMatrix::from_fn(m, m, |i, j| inner(&problem.fs[i], &g[j]));
        let schur_matrix = (&schur_matrix + schur_matrix.transpose()).scale(0.5);
        let Some(schur) = schur_matrix.cholesky() else {
            status = SdpStatus::NumericalTrouble;
            break;
        };

        let Some(x_inv_factor) = inverse_sqrt(&x) else {
            status = SdpStatus::NumericalTrouble;
            break;
        };
        let steps = |d: &Direction| {
            let ap = max_step(&s_inv_factor, &d.ds);
            let ad = max_step(&x_inv_factor, &d.dx);
            (ap, ad)
        };

        // Predictor
        let mut rhs = CMatrix::zeros(n, n);
        for a in 0..n {
            rhs[(a, a)] = (-sc.lambda[a] * sc.lambda[a]).into();
        }
        let aff = direction(problem, &sc, &schur, &residual, &rhs);
        let (ap, ad) = steps(&aff);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff = inner(&(&s + aff.ds.scale(ap)), &(&x + aff.dx.scale(ad))) / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector: subtract the second-order term in the scaled space.
        let dx_t = &sc.w_half_inv * &aff.dx * &sc.w_half_inv;
        let ds_t = &sc.w_half * &aff.ds * &sc.w_half;
        let cross = (&dx_t * &ds_t + &ds_t * &dx_t).scale(0.5);
        let cross_hat = sc.u.adjoint() * cross * &sc.u;
        for a in 0..n {
            for b in 0..n {
                let mut v = -cross_hat[(a, b)];
                if a == b {
                    v += sigma * mu - sc.lambda[a] * sc.lambda[a];
                }
                rhs[(a, b)] = v;
            }
        }
        let dir = direction(problem, &sc, &schur, &residual, &rhs);
        let (ap, ad) = steps(&dir);
        let tau = 0.98;
        let ap = (tau * ap).min(1.0);
        let ad = (tau * ad).min(1.0);
        if !(ap.is_finite() && ad.is_finite()) || (ap < 1e-12 && ad < 1e-12) {
            status = SdpStatus::NumericalTrouble;
            break;
        }

        let z_next = &z + dir.dz.scale(ap);
        let s_next = problem.slack(&z_next);
        let x_next = hermitize(&x + dir.dx.scale(ad));
        let (Some(s_factor), true) = (inverse_sqrt(&s_next), x_next.iter().all(|v| v.is_finite())) else {
            status = SdpStatus::NumericalTrouble;
            break;
        };
        z = z_next;
        s = s_next;
        s_inv_factor = s_factor;
        x = x_next;
    }

    let primal_value = problem.c.dot(&z);
    let dual_value = -inner(&problem.f0, &x);
    let gap = primal_value - dual_value;
    let dual_residual = (&problem.c - problem.apply_adjoint(&x)).amax();
    Ok(SdpSolution {
        relative_gap: gap.abs() / (1.0 + primal_value.abs()),
        z,
        s,
        x,
        primal_value,
        dual_value,
        gap,
        dual_residual,
        iterations,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn real(m: RMatrix) -> CMatrix {
        m.map(|v| Complex64::new(v, 0.0))
    }

    #[test]
    fn minimizes_largest_eigenvalue() {
        // min t s.t. t I - A >= 0 gives lambda_max(A).
        let a = RMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 1.0]);
        let problem = LmiProblem::new(
            DVector::from_vec(vec![1.0]),
            real(-a.clone()),
            vec![real(RMatrix::identity(3, 3))],
        )
        .unwrap();
        let sol = solve(&problem, &DVector::from_vec(vec![10.0]), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let lmax = a.symmetric_eigenvalues().max();
        assert_abs_diff_eq!(sol.primal_value, lmax, epsilon = 1e-7);
        assert!(sol.dual_value <= sol.primal_value + 1e-12);
    }

    #[test]
    fn complex_epigraph_of_trace_norm() {
        // min t s.t. [[t, -i y],[i y, t]] >= 0 ... with y fixed = 0.7: t >= 0.7.
        let f0 = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, -0.7),
                Complex64::new(0.0, 0.7),
                Complex64::new(0.0, 0.0),
            ],
        );
        let problem =
            LmiProblem::new(DVector::from_vec(vec![1.0]), f0, vec![CMatrix::identity(2, 2)]).unwrap();
        let sol = solve(&problem, &DVector::from_vec(vec![2.0]), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_abs_diff_eq!(sol.primal_value, 0.7, epsilon = 1e-7);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let problem = LmiProblem::new(
            DVector::from_vec(vec![1.0]),
            CMatrix::identity(2, 2).scale(-1.0),
            vec![CMatrix::identity(2, 2)],
        )
        .unwrap();
        assert!(solve(&problem, &DVector::from_vec(vec![0.5]), &SdpOptions::default()).is_err());
    }

    #[test]
    fn iteration_limit_is_reported() {
        let problem = LmiProblem::new(
            DVector::from_vec(vec![1.0]),
            CMatrix::zeros(2, 2),
            vec![CMatrix::identity(2, 2)],
        )
        .unwrap();
        let opts = SdpOptions { tol: 1e-8, max_iter: 1 };
        let sol = solve(&problem, &DVector::from_vec(vec![5.0]), &opts).unwrap();
        assert_eq!(sol.status, SdpStatus::MaxIterations);
        assert_eq!(sol.iterations, 1);
    }
}
