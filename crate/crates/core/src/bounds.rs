//! Closed-form bounds: the generalized Helstrom bound `C^GS`, the efficient
//! influence operators `X_eff` and the D-invariant bound `C^D`.

use crate::error::{Error, Result};
use crate::linalg::{self, psd_sqrt, real_part, trace_norm, CMatrix, OperatorVector, RMatrix};
use crate::model::{self, ModelDiagnostics, QuantumModel};
use crate::sld::{self, InformationData, SldSet, FEASIBILITY_TOL};

/// Slack allowed in `c_gs <= c_d <= 2 c_gs`, relative to `max(1, c_gs)`.
pub const ORDERING_TOL: f64 = 1e-9;

/// Validated model together with its SLDs and information matrices.
#[derive(Clone, Debug)]
pub struct LocalAnalysis {
    pub diagnostics: ModelDiagnostics,
    pub slds: SldSet,
    pub info: InformationData,
}

/// validate, SLDs, `J`/`D`, and the feasibility predicate in one pass.
pub fn analyze(model: &QuantumModel, rank_tol: f64) -> Result<LocalAnalysis> {
    let diagnostics = model::validate(model, rank_tol)?;
    let slds = sld::compute_slds(model, rank_tol)?;
    let info = sld::information(model, &slds, rank_tol)?;
    sld::ensure_feasible(&info, model.dbeta(), FEASIBILITY_TOL)?;
    Ok(LocalAnalysis {
        diagnostics,
        slds,
        info,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormBounds {
    pub c_gs: f64,
    pub c_d: f64,
    pub x_eff: OperatorVector,
    pub v_eff: RMatrix,
    pub z_eff: CMatrix,
}

impl ClosedFormBounds {
    pub fn two_c_gs(&self) -> f64 {
        2.0 * self.c_gs
    }
}

/// `(dbeta)^T J^+ dbeta`.
fn helstrom_matrix(model: &QuantumModel, info: &InformationData) -> Result<RMatrix> {
    sld::ensure_feasible(info, model.dbeta(), FEASIBILITY_TOL)?;
    let pinv = info.qfim_pinv()?;
    let m = model.dbeta().transpose() * pinv * model.dbeta();
    Ok((&m + m.transpose()).scale(0.5))
}

/// `X_eff = (dbeta)^T J^+ L`.
pub fn x_eff(model: &QuantumModel, slds: &SldSet, info: &InformationData) -> Result<OperatorVector> {
    sld::ensure_feasible(info, model.dbeta(), FEASIBILITY_TOL)?;
    let coeffs = info.qfim_pinv()? * model.dbeta();
    slds.slds().combine(&coeffs)
}

/// `C^GS = tr[W (dbeta)^T J^+ dbeta]`.
pub fn c_gs(model: &QuantumModel, info: &InformationData) -> Result<f64> {
    let m = helstrom_matrix(model, info)?;
    Ok((model.weight() * m).trace())
}

/// Trace-norm term `|| sqrt(W) (dbeta)^T J^+ D J^+ dbeta sqrt(W) ||_1`.
fn incompatibility_term(model: &QuantumModel, info: &InformationData) -> Result<f64> {
    sld::ensure_feasible(info, model.dbeta(), FEASIBILITY_TOL)?;
    let coeffs = info.qfim_pinv()? * model.dbeta();
    let inner = coeffs.transpose() * &info.dmat * &coeffs;
    let skew = (&inner - inner.transpose()).scale(0.5);
    let sqrt_w = psd_sqrt(model.weight());
    Ok(trace_norm(&(&sqrt_w * skew * &sqrt_w)))
}

/// `C^D = C^GS + || sqrt(W) (dbeta)^T J^+ D J^+ dbeta sqrt(W) ||_1`.
pub fn c_d(model: &QuantumModel, info: &InformationData) -> Result<f64> {
    Ok(c_gs(model, info)? + incompatibility_term(model, info)?)
}

/// All closed-form quantities, with the ordering `c_gs <= c_d <= 2 c_gs` checked.
pub fn sandwich(model: &QuantumModel, rank_tol: f64) -> Result<ClosedFormBounds> {
    let analysis = analyze(model, rank_tol)?;
    closed_form(model, &analysis)
}

pub fn closed_form(model: &QuantumModel, analysis: &LocalAnalysis) -> Result<ClosedFormBounds> {
    let info = &analysis.info;
    let c_gs = c_gs(model, info)?;
    let c_d = c_gs + incompatibility_term(model, info)?;
    let x_eff = x_eff(model, &analysis.slds, info)?;
    let z_eff = linalg::z_matrix(&x_eff, model.rho())?;
    let v_eff = real_part(&z_eff);
    let slack = ORDERING_TOL * c_gs.abs().max(1.0);
    if c_d < c_gs - slack || c_d > 2.0 * c_gs + slack {
        return Err(Error::BoundOrderingViolated(format!(
            "expected c_gs <= c_d <= 2 c_gs, got c_gs = {c_gs}, c_d = {c_d}"
        )));
    }
    Ok(ClosedFormBounds {
        c_gs,
        c_d,
        x_eff,
        v_eff,
        z_eff,
    })
}

/// Holevo objective `tr W Re Z + || sqrt(W) Im Z sqrt(W) ||_1` for a complex covariance `Z`.
pub fn holevo_objective(weight: &RMatrix, z: &CMatrix) -> f64 {
    let sqrt_w = psd_sqrt(weight);
    let re = real_part(z);
    let im = linalg::imag_part(z);
    (weight * re).trace() + trace_norm(&(&sqrt_w * im * &sqrt_w))
}
