//! Symmetric logarithmic derivatives, the QFIM `J` and the mean-uncertainty matrix `D`.

use crate::error::{Error, Result};
use crate::linalg::{
    self, imag_part, max_abs, real_part, CMatrix, HermitianOperator, OperatorVector, RMatrix,
};
use crate::model::QuantumModel;

/// Largest accepted `max |rho o L_j - d_j rho|`.
pub const SLD_RESIDUAL_TOL: f64 = 1e-8;

/// Default tolerance of the feasibility predicate.
pub const FEASIBILITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct SldSet {
    slds: OperatorVector,
    residuals: Vec<f64>,
}

impl SldSet {
    pub fn slds(&self) -> &OperatorVector {
        &self.slds
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn len(&self) -> usize {
        self.slds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slds.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InformationData {
    pub qfim: RMatrix,
    pub dmat: RMatrix,
    pub qfim_rank: usize,
    /// Relative cutoff used for the rank and every pseudoinverse of `qfim`.
    pub rank_tol: f64,
}

impl InformationData {
    pub fn qfim_pinv(&self) -> Result<RMatrix> {
        linalg::pseudoinverse(&self.qfim, self.rank_tol)
    }
}

/// Solves `d_j rho = rho o L_j` in the eigenbasis of `rho`.
///
/// Pairs of eigenvalues with `lambda_a + lambda_b <= rank_tol * lambda_max`
/// get a zero entry, which picks the minimum-norm solution on the kernel block.
pub fn compute_slds(model: &QuantumModel, rank_tol: f64) -> Result<SldSet> {
    let (values, vectors) = model.rho().eigh();
    let d = model.dim();
    let cutoff = rank_tol * values.amax();
    let mut slds = Vec::with_capacity(model.num_params());
    let mut residuals = Vec::with_capacity(model.num_params());
    for (index, drho) in model.drho().iter().enumerate() {
        let rotated = vectors.adjoint() * drho.matrix() * &vectors;
        let solved = CMatrix::from_fn(d, d, |a, b| {
            let sum = values[a] + values[b];
            if sum > cutoff {
                rotated[(a, b)] * (2.0 / sum)
            } else {
                linalg::ZERO
            }
        });
        let sld = HermitianOperator::hermitized(&vectors * solved * vectors.adjoint());
        let rebuilt = linalg::jordan_product(model.rho(), &sld)?;
        let residual = max_abs(&(rebuilt.matrix() - drho.matrix()));
        if !(residual <= SLD_RESIDUAL_TOL) {
            return Err(Error::ResidualTooLarge { index, residual });
        }
        slds.push(sld);
        residuals.push(residual);
    }
    Ok(SldSet {
        slds: OperatorVector::new(slds)?,
        residuals,
    })
}

/// `J = Re Z(L)` and `D = Im Z(L)`.
pub fn information(model: &QuantumModel, slds: &SldSet, rank_tol: f64) -> Result<InformationData> {
    let z = linalg::z_matrix(slds.slds(), model.rho())?;
    let qfim = real_part(&z);
    let dmat = imag_part(&z);
    Ok(InformationData {
        qfim_rank: linalg::numerical_rank(&qfim, rank_tol),
        qfim,
        dmat,
        rank_tol,
    })
}

/// Per-column `max |J J^+ dbeta - dbeta|`.
pub fn range_residuals(info: &InformationData, dbeta: &RMatrix) -> Result<Vec<f64>> {
    if dbeta.nrows() != info.qfim.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "dbeta has {} rows but J is {}x{0}",
            dbeta.nrows(),
            info.qfim.nrows()
        )));
    }
    let projected = &info.qfim * info.qfim_pinv()? * dbeta;
    Ok((0..dbeta.ncols())
        .map(|s| (projected.column(s) - dbeta.column(s)).amax())
        .collect())
}

/// Whether every column of `dbeta` lies in the range of `J`.
pub fn feasibility(info: &InformationData, dbeta: &RMatrix, tol: f64) -> Result<bool> {
    Ok(range_residuals(info, dbeta)?.iter().all(|&r| r <= tol))
}

/// Like [`feasibility`] but names the worst non-estimable column.
pub fn ensure_feasible(info: &InformationData, dbeta: &RMatrix, tol: f64) -> Result<()> {
    let residuals = range_residuals(info, dbeta)?;
    match residuals
        .iter()
        .enumerate()
        .filter(|(_, &r)| !(r <= tol))
        .max_by(|a, b| a.1.total_cmp(b.1))
    {
        Some((column, &residual)) => Err(Error::InfeasibleModel { column, residual }),
        None => Ok(()),
    }
}
