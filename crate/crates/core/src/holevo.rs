//! Holevo bound `C^H` by semidefinite programming.
//!
//! Each influence operator is expanded as `X_s = sum_a x_sa E_a` over an
//! orthonormal Hermitian basis. The local unbiasedness constraints are
//! eliminated by writing `x = x_0 + N y` with `x_0` the coefficients of
//! `X_eff`. With `M(x)` the matrix whose column `s` is `vec(X_s sqrt(rho))`,
//! `Z(X) = M^H M` and
//!
//! ```text
//! C^H = min tr(W V)  subject to  [[V, M^H], [M, I]] >= 0,  V real symmetric.
//! ```
//!
//! Internally `V` is scaled by `kappa = tr V_eff` and the objective by `C^GS`,
//! so the optimum always lies in `[1, 2]`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::bounds::{self, holevo_objective, ClosedFormBounds, LocalAnalysis};
use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_basis, max_abs, min_eigenvalue, null_space, row_space_above, to_complex, CMatrix,
    HermitianOperator, OperatorVector, RMatrix, DEFAULT_RANK_TOL,
};
use crate::model::QuantumModel;
use crate::sdp::{self, LmiProblem, SdpOptions, SdpStatus};

/// Slack used by [`verify_solution`], relative to `max(1, c_h)`.
pub const VERIFY_TOL: f64 = 1e-7;

/// Largest accepted local-unbiasedness violation, relative to `max(1, max|dbeta|)`.
pub const UNBIASEDNESS_TOL: f64 = 1e-8;

/// Which operator basis the coefficients live in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisReduction {
    /// Generalized Gell-Mann basis in the original frame, `d^2` elements.
    Full,
    /// Elementary Hermitian basis in the eigenframe of `rho`, dropping the
    /// kernel-kernel elements that never touch the support.
    #[default]
    Support,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HolevoOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub rank_tol: f64,
    pub reduction: BasisReduction,
}

impl Default for HolevoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            rank_tol: DEFAULT_RANK_TOL,
            reduction: BasisReduction::Support,
        }
    }
}

#[derive(Clone, Debug)]
pub struct HolevoProblem {
    dim: usize,
    targets: usize,
    weight: RMatrix,
    /// Unitary mapping the working frame to the original one.
    frame: CMatrix,
    basis: Vec<HermitianOperator>,
    constraint_matrix: RMatrix,
    rhs: DVector<f64>,
    x0: DVector<f64>,
    directions: RMatrix,
    kappa: f64,
    objective_scale: f64,
    m0: CMatrix,
    dm: Vec<CMatrix>,
    start_shift: f64,
    z_eff: CMatrix,
}

impl HolevoProblem {
    /// Number of free real coefficients after eliminating the constraints
    /// and the directions that leave `Z(X)` unchanged.
    pub fn basis_coeffs_dim(&self) -> usize {
        self.directions.ncols()
    }

    /// Raw coefficients `q * n_basis`.
    pub fn raw_coeffs_dim(&self) -> usize {
        self.targets * self.basis.len()
    }

    /// Rows `Tr rho X_s = 0`, `Tr d_j rho X_s = dbeta_js`, block-diagonal in `s`.
    pub fn constraint_matrix(&self) -> &RMatrix {
        &self.constraint_matrix
    }

    pub fn constraint_rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn basis(&self) -> &[HermitianOperator] {
        &self.basis
    }

    pub fn reference_coeffs(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn directions(&self) -> &RMatrix {
        &self.directions
    }

    /// Side length of the LMI block.
    pub fn lmi_size(&self) -> usize {
        self.targets + self.m0.nrows()
    }

    /// Influence operators (original frame) for raw coefficients `x`.
    pub fn operators(&self, x: &DVector<f64>) -> Result<OperatorVector> {
        let nb = self.basis.len();
        let ops = (0..self.targets)
            .map(|s| {
                let mut acc = CMatrix::zeros(self.dim, self.dim);
                for (a, e) in self.basis.iter().enumerate() {
                    acc += e.matrix().scale(x[s * nb + a]);
                }
                HermitianOperator::hermitized(&self.frame * acc * self.frame.adjoint())
            })
            .collect();
        OperatorVector::new(ops)
    }

    fn lmi(&self) -> Result<(LmiProblem, DVector<f64>)> {
        let q = self.targets;
        let rows = self.m0.nrows();
        let n = q + rows;
        let pairs: Vec<(usize, usize)> = (0..q).flat_map(|i| (i..q).map(move |j| (i, j))).collect();
        let inv_sqrt_kappa = 1.0 / self.kappa.sqrt();
        let place = |m: &CMatrix| {
            let mut f = CMatrix::zeros(n, n);
            f.view_mut((q, 0), (rows, q)).copy_from(m);
            f.view_mut((0, q), (q, rows)).copy_from(&m.adjoint());
            f
        };

        let mut f0 = place(&self.m0.scale(inv_sqrt_kappa));
        for r in 0..rows {
            f0[(q + r, q + r)] = linalg::ONE;
        }
        let mut fs = Vec::with_capacity(pairs.len() + self.dm.len());
        let mut c = Vec::with_capacity(pairs.len() + self.dm.len());
        let mut z0 = Vec::with_capacity(pairs.len() + self.dm.len());
        let ratio = self.kappa / self.objective_scale;
        let v_start = linalg::real_part(&self.z_eff).unscale(self.kappa)
            + RMatrix::identity(q, q).scale(self.start_shift);
        for &(i, j) in &pairs {
            let mut f = CMatrix::zeros(n, n);
            f[(i, j)] = linalg::ONE;
            f[(j, i)] = linalg::ONE;
            fs.push(f);
            c.push(if i == j {
                ratio * self.weight[(i, i)]
            } else {
                ratio * (self.weight[(i, j)] + self.weight[(j, i)])
            });
            z0.push(v_start[(i, j)]);
        }
        for dm in &self.dm {
            fs.push(place(&dm.scale(inv_sqrt_kappa)));
            c.push(0.0);
            z0.push(0.0);
        }
        Ok((LmiProblem::new(DVector::from_vec(c), f0, fs)?, DVector::from_vec(z0)))
    }
}

/// Expands the constraint set and the factorization `Z = M^H M`.
pub fn build_problem(
    model: &QuantumModel,
    analysis: &LocalAnalysis,
    reduction: BasisReduction,
) -> Result<HolevoProblem> {
    let closed = bounds::closed_form(model, analysis)?;
    build_from_bounds(model, &closed, analysis.info.rank_tol, reduction)
}

/// Same as [`build_problem`] when the closed-form bounds are already at hand.
pub fn build_from_bounds(
    model: &QuantumModel,
    closed: &ClosedFormBounds,
    rank_tol: f64,
    reduction: BasisReduction,
) -> Result<HolevoProblem> {
    let d = model.dim();
    let p = model.num_params();
    let q = model.num_targets();
    let (values, vectors) = model.rho().eigh();
    let cutoff = rank_tol * values.amax();

    // Working frame, basis, sqrt(rho) and the columns of X sqrt(rho) that can be nonzero.
    let (frame, basis, sqrt_rho, columns) = match reduction {
        BasisReduction::Full => {
            let sqrt_rho = linalg::hermitian_function(model.rho().matrix(), |v| {
                if v > cutoff {
                    v.sqrt()
                } else {
                    0.0
                }
            });
            (CMatrix::identity(d, d), hermitian_basis(d)?, sqrt_rho, (0..d).collect::<Vec<_>>())
        }
        BasisReduction::Support => {
            let support: Vec<bool> = values.iter().map(|&v| v > cutoff).collect();
            let sqrt_rho = CMatrix::from_fn(d, d, |i, j| {
                if i == j && support[i] {
                    Complex64::new(values[i].sqrt(), 0.0)
                } else {
                    linalg::ZERO
                }
            });
            let basis = support_basis(&support);
            let columns = (0..d).filter(|&j| support[j]).collect();
            (vectors.clone(), basis, sqrt_rho, columns)
        }
    };
    let nb = basis.len();
    let to_frame = |m: &CMatrix| frame.adjoint() * m * &frame;

    let rho_w = to_frame(model.rho().matrix());
    let drho_w: Vec<CMatrix> = model.drho().iter().map(|op| to_frame(op.matrix())).collect();
    let mut a1 = RMatrix::zeros(1 + p, nb);
    for (a, e) in basis.iter().enumerate() {
        a1[(0, a)] = linalg::hs_inner(&rho_w, e.matrix());
        for (j, dr) in drho_w.iter().enumerate() {
            a1[(1 + j, a)] = linalg::hs_inner(dr, e.matrix());
        }
    }
    let mut constraint_matrix = RMatrix::zeros(q * (1 + p), q * nb);
    let mut rhs = DVector::zeros(q * (1 + p));
    for s in 0..q {
        constraint_matrix
            .view_mut((s * (1 + p), s * nb), (1 + p, nb))
            .copy_from(&a1);
        for j in 0..p {
            rhs[s * (1 + p) + 1 + j] = model.dbeta()[(j, s)];
        }
    }

    let mut x0 = DVector::zeros(q * nb);
    for (s, xs) in closed.x_eff.iter().enumerate() {
        let xw = to_frame(xs.matrix());
        for (a, e) in basis.iter().enumerate() {
            x0[s * nb + a] = linalg::hs_inner(&xw, e.matrix());
        }
    }
    let residual = (&constraint_matrix * &x0 - &rhs).amax();
    let scale = max_abs(model.dbeta()).max(1.0);
    if !(residual <= 1e-8 * scale) {
        return Err(Error::InfeasibleModel {
            column: 0,
            residual,
        });
    }

    // B: column a is vec(E_a sqrt(rho)) restricted to the live columns.
    let rows = d * columns.len();
    let vectorize = |m: &CMatrix| {
        let prod = m * &sqrt_rho;
        let mut v = nalgebra::DVector::<Complex64>::zeros(rows);
        for (c, &j) in columns.iter().enumerate() {
            for i in 0..d {
                v[c * d + i] = prod[(i, j)];
            }
        }
        v
    };
    let mut b = CMatrix::zeros(rows, nb);
    for (a, e) in basis.iter().enumerate() {
        b.set_column(a, &vectorize(e.matrix()));
    }

    let n1 = null_space(&a1, 1e-9);
    let bn = &b * to_complex(&n1);
    let mut stacked = RMatrix::zeros(2 * rows, n1.ncols());
    stacked.view_mut((0, 0), (rows, n1.ncols())).copy_from(&bn.map(|z| z.re));
    stacked.view_mut((rows, 0), (rows, n1.ncols())).copy_from(&bn.map(|z| z.im));
    let live = if n1.ncols() > 0 {
        &n1 * row_space_above(&stacked, 1e-10, 1e-10 * max_abs(&b).max(f64::MIN_POSITIVE))
    } else {
        RMatrix::zeros(nb, 0)
    };
    let k1 = live.ncols();
    let mut directions = RMatrix::zeros(q * nb, q * k1);
    let mut dm = Vec::with_capacity(q * k1);
    let b_live = &b * to_complex(&live);
    for s in 0..q {
        directions
            .view_mut((s * nb, s * k1), (nb, k1))
            .copy_from(&live);
        for k in 0..k1 {
            let mut m = CMatrix::zeros(rows, q);
            m.set_column(s, &b_live.column(k));
            dm.push(m);
        }
    }
    let mut m0 = CMatrix::zeros(rows, q);
    for s in 0..q {
        let xs = x0.rows(s * nb, nb).map(|v| Complex64::new(v, 0.0));
        m0.set_column(s, &(&b * xs));
    }

    let kappa = closed.v_eff.trace();
    if !(kappa > 0.0) {
        return Err(Error::Solver("efficient influence operators vanish".into()));
    }
    let z_norm = closed.z_eff.clone().singular_values().max() / kappa;
    Ok(HolevoProblem {
        dim: d,
        targets: q,
        weight: model.weight().clone(),
        frame,
        basis,
        constraint_matrix,
        rhs,
        x0,
        directions,
        kappa,
        objective_scale: if closed.c_gs > 0.0 { closed.c_gs } else { 1.0 },
        m0,
        dm,
        start_shift: 1.1 * z_norm + 1e-3,
        z_eff: closed.z_eff.clone(),
    })
}

/// Orthonormal elementary Hermitian basis in the eigenframe, skipping
/// elements supported on the kernel-kernel block.
fn support_basis(support: &[bool]) -> Vec<HermitianOperator> {
    let d = support.len();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::new();
    for a in 0..d {
        for b in a..d {
            if !support[a] && !support[b] {
                continue;
            }
            if a == b {
                let mut m = CMatrix::zeros(d, d);
                m[(a, a)] = linalg::ONE;
                basis.push(HermitianOperator::hermitized(m));
            } else {
                let mut re = CMatrix::zeros(d, d);
                re[(a, b)] = Complex64::new(h, 0.0);
                re[(b, a)] = Complex64::new(h, 0.0);
                basis.push(HermitianOperator::hermitized(re));
                let mut im = CMatrix::zeros(d, d);
                im[(a, b)] = Complex64::new(0.0, -h);
                im[(b, a)] = Complex64::new(0.0, h);
                basis.push(HermitianOperator::hermitized(im));
            }
        }
    }
    basis
}

#[derive(Clone, Debug)]
pub struct HolevoSolution {
    /// `tr(W V)` at the returned iterate, an upper bound on the exact value.
    pub c_h: f64,
    /// Certified lower bound from the dual iterate.
    pub dual_bound: f64,
    pub x_opt: OperatorVector,
    pub x_coeffs: DVector<f64>,
    pub v_opt: RMatrix,
    /// `(c_h - dual_bound) / max(1, c_h)`.
    pub duality_gap: f64,
    pub absolute_gap: f64,
    /// Dual equality residual of the normalized problem.
    pub dual_residual: f64,
    pub iterations: usize,
    pub status: SdpStatus,
}

/// Runs the interior-point method on a built problem.
pub fn solve(problem: &HolevoProblem, opts: &HolevoOptions) -> Result<HolevoSolution> {
    let (lmi, z0) = problem.lmi()?;
    // The normalized gap is relative to 1 + |primal| in units of c_gs; this
    // aim keeps the reported gap, relative to max(1, c_h), below tol.
    let aim = (opts.tol / (1.0 + problem.objective_scale)).max(1e-13);
    let sdp_opts = SdpOptions {
        tol: aim.min(opts.tol),
        max_iter: opts.max_iter,
    };
    let sol = sdp::solve(&lmi, &z0, &sdp_opts)?;
    let q = problem.targets;
    let mut v = RMatrix::zeros(q, q);
    let mut idx = 0;
    for i in 0..q {
        for j in i..q {
            v[(i, j)] = sol.z[idx] * problem.kappa;
            v[(j, i)] = v[(i, j)];
            idx += 1;
        }
    }
    let y = sol.z.rows(idx, sol.z.len() - idx);
    let x = &problem.x0 + &problem.directions * y;
    let c_h = (&problem.weight * &v).trace();
    let dual_bound = sol.dual_value * problem.objective_scale;
    let absolute_gap = c_h - dual_bound;
    let duality_gap = absolute_gap.abs() / c_h.abs().max(1.0);
    let dual_residual = sol.dual_residual / (1.0 + lmi.c.amax());
    let status = match sol.status {
        SdpStatus::Optimal => SdpStatus::Optimal,
        // The tightened target was out of reach, but the requested one was met.
        _ if duality_gap <= opts.tol && dual_residual <= opts.tol => SdpStatus::Optimal,
        other => other,
    };
    Ok(HolevoSolution {
        c_h,
        dual_bound,
        x_opt: problem.operators(&x)?,
        x_coeffs: x,
        v_opt: v,
        duality_gap,
        absolute_gap,
        dual_residual,
        iterations: sol.iterations,
        status,
    })
}

/// Closed-form bounds and the Holevo solution for a model.
pub fn holevo_bound(
    model: &QuantumModel,
    opts: &HolevoOptions,
) -> Result<(ClosedFormBounds, HolevoSolution)> {
    let analysis = bounds::analyze(model, opts.rank_tol)?;
    let closed = bounds::closed_form(model, &analysis)?;
    let problem = build_from_bounds(model, &closed, opts.rank_tol, opts.reduction)?;
    let solution = solve(&problem, opts)?;
    Ok((closed, solution))
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerificationReport {
    /// Holevo objective recomputed from `x_opt`.
    pub objective: f64,
    pub objective_deviation: f64,
    pub unbiasedness_residual: f64,
    /// Minimum eigenvalue of `V - Z(x_opt)`.
    pub epigraph_min_eig: f64,
}

/// Max violation of `Tr rho X_s = 0` and `Tr d_j rho X_s = dbeta_js`.
pub fn unbiasedness_residual(model: &QuantumModel, x: &OperatorVector) -> f64 {
    let mut worst: f64 = 0.0;
    for (s, xs) in x.iter().enumerate() {
        worst = worst.max(model.rho().trace_product(xs).abs());
        for (j, dr) in model.drho().iter().enumerate() {
            worst = worst.max((dr.trace_product(xs) - model.dbeta()[(j, s)]).abs());
        }
    }
    worst
}

/// Independent checks of an optimal solution against the closed-form bounds.
pub fn verify_solution(
    model: &QuantumModel,
    closed: &ClosedFormBounds,
    sol: &HolevoSolution,
) -> Result<VerificationReport> {
    if sol.status != SdpStatus::Optimal {
        return Err(Error::VerificationFailed(format!("solver status is {}", sol.status)));
    }
    let slack = VERIFY_TOL * sol.c_h.abs().max(1.0);
    let residual = unbiasedness_residual(model, &sol.x_opt);
    if residual > UNBIASEDNESS_TOL * max_abs(model.dbeta()).max(1.0) {
        return Err(Error::VerificationFailed(format!(
            "local unbiasedness violated by {residual:e}"
        )));
    }
    let z = linalg::z_matrix(&sol.x_opt, model.rho())?;
    let epigraph_min_eig = min_eigenvalue(&(to_complex(&sol.v_opt) - &z));
    if epigraph_min_eig < -1e-8 * sol.c_h.abs().max(1.0) {
        return Err(Error::VerificationFailed(format!(
            "V - Z(X) has eigenvalue {epigraph_min_eig:e}"
        )));
    }
    let objective = holevo_objective(model.weight(), &z);
    let objective_deviation = (objective - sol.c_h).abs();
    if objective_deviation > slack {
        return Err(Error::VerificationFailed(format!(
            "objective at x_opt is {objective}, reported c_h is {}",
            sol.c_h
        )));
    }
    if sol.c_h < closed.c_gs - slack {
        return Err(Error::VerificationFailed(format!(
            "c_h = {} is below c_gs = {}",
            sol.c_h, closed.c_gs
        )));
    }
    if sol.c_h > closed.c_d + slack {
        return Err(Error::VerificationFailed(format!(
            "c_h = {} exceeds c_d = {}",
            sol.c_h, closed.c_d
        )));
    }
    Ok(VerificationReport {
        objective,
        objective_deviation,
        unbiasedness_residual: residual,
        epigraph_min_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::fixture;
    use approx::assert_abs_diff_eq;

    fn run(model: &QuantumModel, reduction: BasisReduction) -> (ClosedFormBounds, HolevoSolution) {
        let opts = HolevoOptions {
            reduction,
            ..HolevoOptions::default()
        };
        let (closed, sol) = holevo_bound(model, &opts).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal, "{sol:?}");
        verify_solution(model, &closed, &sol).unwrap();
        (closed, sol)
    }

    #[test]
    fn constraint_counting() {
        let model = fixture("qubit_xy_at_z", &[0.5]).unwrap();
        let analysis = bounds::analyze(&model, DEFAULT_RANK_TOL).unwrap();
        let problem = build_problem(&model, &analysis, BasisReduction::Full).unwrap();
        assert_eq!(problem.raw_coeffs_dim(), 8);
        assert_eq!(problem.constraint_matrix().nrows(), 6);
        assert_eq!(problem.basis_coeffs_dim(), 2);
    }

    #[test]
    fn scalar_diagonal_model() {
        let w = 0.6;
        let diag = |v: &[f64]| {
            HermitianOperator::from_real(&RMatrix::from_diagonal(&DVector::from_row_slice(v))).unwrap()
        };
        let model = QuantumModel::new(
            diag(&[(1.0 + w) / 2.0, (1.0 - w) / 2.0]),
            OperatorVector::new(vec![diag(&[0.5, -0.5])]).unwrap(),
            RMatrix::identity(1, 1),
            None,
            "diag",
        )
        .unwrap();
        let (_, sol) = run(&model, BasisReduction::Support);
        assert_abs_diff_eq!(sol.c_h, 1.0 - w * w, epsilon = 1e-7);
    }

    #[test]
    fn commuting_model_collapses() {
        let model = fixture("classical_diagonal", &[0.2, 0.8]).unwrap();
        let (closed, sol) = run(&model, BasisReduction::Full);
        assert_abs_diff_eq!(sol.c_h, closed.c_gs, epsilon = 1e-7);
    }

    #[test]
    fn equatorial_qubit_is_d_invariant() {
        // Two-parameter qubit models with full-rank rho are D-invariant.
        for z in [0.0, 0.5, 0.9] {
            let model = fixture("qubit_xy_at_z", &[z]).unwrap();
            let (closed, sol) = run(&model, BasisReduction::Full);
            assert!(sol.c_h >= 2.0 - 1e-7 && sol.c_h <= 3.0 + 1e-7 || z > 0.5);
            assert_abs_diff_eq!(sol.c_h, closed.c_d, epsilon = 1e-7);
        }
    }

    #[test]
    fn pure_state_saturates_twice_helstrom() {
        let model = fixture("pure_qubit_angles", &[1.1, 0.3]).unwrap();
        let (closed, sol) = run(&model, BasisReduction::Support);
        assert_abs_diff_eq!(closed.c_d / closed.c_gs, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.c_h / closed.c_gs, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn reduced_and_full_bases_agree() {
        let model = fixture("pure_qubit_angles", &[0.7, 2.0]).unwrap();
        let (_, full) = run(&model, BasisReduction::Full);
        let (_, reduced) = run(&model, BasisReduction::Support);
        assert_abs_diff_eq!(full.c_h, reduced.c_h, epsilon = 1e-7);
        let model = fixture("random_full_rank", &[11.0, 3.0, 3.0, 3.0]).unwrap();
        let (_, full) = run(&model, BasisReduction::Full);
        let (_, reduced) = run(&model, BasisReduction::Support);
        assert_abs_diff_eq!(full.c_h, reduced.c_h, epsilon = 1e-7);
    }

    #[test]
    fn corrupted_solution_fails_verification() {
        let model = fixture("qubit_xy_at_z", &[0.3]).unwrap();
        let (closed, mut sol) = run(&model, BasisReduction::Full);
        let mut ops = sol.x_opt.clone().into_vec();
        ops[0] = HermitianOperator::hermitized(ops[0].matrix() + CMatrix::identity(2, 2).scale(0.01));
        sol.x_opt = OperatorVector::new(ops).unwrap();
        assert!(matches!(
            verify_solution(&model, &closed, &sol),
            Err(Error::VerificationFailed(msg)) if msg.contains("unbiasedness")
        ));
    }
}
