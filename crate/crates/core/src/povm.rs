//! Finite-outcome measurements: Born probabilities, classical FIM, influence
//! operators, local unbiasedness and the matrix Cramér-Rao checks.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, ComplexRows, RealRows};
use crate::linalg::{
    self, max_abs, min_eigenvalue, min_eigenvalue_real, pseudoinverse, to_complex, CMatrix,
    HermitianOperator, OperatorVector, RMatrix, DEFAULT_RANK_TOL,
};
use crate::model::QuantumModel;

/// Slack for element positivity and completeness.
pub const POVM_TOL: f64 = 1e-10;

/// Residual below which a measurement counts as locally unbiased.
pub const UNBIASEDNESS_TOL: f64 = 1e-8;

const ZERO_PROBABILITY: f64 = 1e-14;
const ZERO_DERIVATIVE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePovm {
    elements: Vec<HermitianOperator>,
    /// Row `x` holds the estimate attached to outcome `x`.
    estimates: RMatrix,
}

impl DiscretePovm {
    pub fn new(elements: Vec<HermitianOperator>, estimates: RMatrix) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidPovm("no elements".into()));
        };
        let d = first.dim();
        if elements.iter().any(|e| e.dim() != d) {
            return Err(Error::InvalidPovm("elements have different dimensions".into()));
        }
        if estimates.nrows() != elements.len() || estimates.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "estimates must be {}xq with q >= 1, got {}x{}",
                elements.len(),
                estimates.nrows(),
                estimates.ncols()
            )));
        }
        if estimates.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPovm("non-finite estimate".into()));
        }
        for (x, e) in elements.iter().enumerate() {
            let lowest = min_eigenvalue(e.matrix());
            if lowest < -POVM_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {x} has eigenvalue {lowest:e}"
                )));
            }
        }
        let total = elements.iter().fold(CMatrix::zeros(d, d), |acc, e| acc + e.matrix());
        let deviation = max_abs(&(total - CMatrix::identity(d, d)));
        if deviation > POVM_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to the identity only within {deviation:e}"
            )));
        }
        Ok(Self {
            elements,
            estimates,
        })
    }

    /// Attaches the minimum-variance locally unbiased estimates for `model` at `beta`.
    pub fn with_locally_unbiased_estimates(
        elements: Vec<HermitianOperator>,
        model: &QuantumModel,
        beta: &DVector<f64>,
    ) -> Result<Self> {
        let placeholder = RMatrix::zeros(elements.len(), model.num_targets());
        let povm = Self::new(elements, placeholder)?;
        let estimates = locally_unbiased_estimates(&povm, model, beta)?;
        Self::new(povm.elements, estimates)
    }

    /// Projective measurement onto the eigenbasis columns of `basis`.
    pub fn projective(basis: &CMatrix, estimates: RMatrix) -> Result<Self> {
        let elements = (0..basis.ncols())
            .map(|i| {
                let v = basis.column(i);
                HermitianOperator::hermitized(&v * v.adjoint())
            })
            .collect();
        Self::new(elements, estimates)
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn estimates(&self) -> &RMatrix {
        &self.estimates
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn num_outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn num_targets(&self) -> usize {
        self.estimates.ncols()
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: PovmFile = io::from_json_str(text)?;
        file.into_povm()
    }

    pub fn to_json_string(&self) -> Result<String> {
        io::to_json_string(&PovmFile::from_povm(self))
    }
}

fn check_dim(povm: &DiscretePovm, d: usize) -> Result<()> {
    if povm.dim() != d {
        return Err(Error::DimensionMismatch(format!(
            "POVM acts on dimension {}, state has {d}",
            povm.dim()
        )));
    }
    Ok(())
}

fn check_beta(povm: &DiscretePovm, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != povm.num_targets() {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} entries, estimates have {}",
            beta.len(),
            povm.num_targets()
        )));
    }
    Ok(())
}

fn check_model(povm: &DiscretePovm, model: &QuantumModel) -> Result<()> {
    check_dim(povm, model.dim())?;
    if povm.num_targets() != model.num_targets() {
        return Err(Error::DimensionMismatch(format!(
            "estimates have {} components, model has q = {}",
            povm.num_targets(),
            model.num_targets()
        )));
    }
    Ok(())
}

/// `p(x) = Tr rho M(x)`.
pub fn born_probs(povm: &DiscretePovm, rho: &HermitianOperator) -> Result<DVector<f64>> {
    check_dim(povm, rho.dim())?;
    Ok(DVector::from_iterator(
        povm.num_outcomes(),
        povm.elements.iter().map(|e| rho.trace_product(e)),
    ))
}

/// Derivatives `dp[(x, j)] = Tr d_j rho M(x)`.
fn prob_derivatives(povm: &DiscretePovm, model: &QuantumModel) -> RMatrix {
    RMatrix::from_fn(povm.num_outcomes(), model.num_params(), |x, j| {
        model.drho()[j].trace_product(&povm.elements[x])
    })
}

/// Classical FIM of the outcome distribution.
///
/// Outcomes with `p(x) <= 1e-14` are skipped when their derivatives vanish.
pub fn povm_fim(povm: &DiscretePovm, model: &QuantumModel) -> Result<RMatrix> {
    check_dim(povm, model.dim())?;
    let probs = born_probs(povm, model.rho())?;
    let dp = prob_derivatives(povm, model);
    let p = model.num_params();
    let mut fim = RMatrix::zeros(p, p);
    for x in 0..povm.num_outcomes() {
        let row = dp.row(x);
        if probs[x] <= ZERO_PROBABILITY {
            if row.amax() > ZERO_DERIVATIVE {
                return Err(Error::IllDefinedFim { outcome: x });
            }
            continue;
        }
        fim += row.transpose() * row / probs[x];
    }
    Ok((&fim + fim.transpose()).scale(0.5))
}

/// `X_s = sum_x (estimate_s(x) - beta_s) M(x)`.
pub fn influence_operators(povm: &DiscretePovm, beta: &DVector<f64>) -> Result<OperatorVector> {
    check_beta(povm, beta)?;
    let d = povm.dim();
    let ops = (0..povm.num_targets())
        .map(|s| {
            let mut acc = CMatrix::zeros(d, d);
            for (x, e) in povm.elements.iter().enumerate() {
                acc += e.matrix().scale(povm.estimates[(x, s)] - beta[s]);
            }
            HermitianOperator::hermitized(acc)
        })
        .collect();
    OperatorVector::new(ops)
}

/// `max(|Tr rho X|_max, |Tr d rho X^T - dbeta|_max)` and whether it is below `1e-8`.
pub fn check_local_unbiasedness(
    povm: &DiscretePovm,
    model: &QuantumModel,
    beta: &DVector<f64>,
) -> Result<(f64, bool)> {
    check_model(povm, model)?;
    let x = influence_operators(povm, beta)?;
    let mut residual: f64 = 0.0;
    for (s, xs) in x.iter().enumerate() {
        residual = residual.max(model.rho().trace_product(xs).abs());
        for (j, dr) in model.drho().iter().enumerate() {
            residual = residual.max((dr.trace_product(xs) - model.dbeta()[(j, s)]).abs());
        }
    }
    Ok((residual, residual <= UNBIASEDNESS_TOL))
}

/// `Sigma = sum_x (estimate(x) - beta)(estimate(x) - beta)^T p(x)`.
pub fn error_covariance(
    povm: &DiscretePovm,
    rho: &HermitianOperator,
    beta: &DVector<f64>,
) -> Result<RMatrix> {
    check_beta(povm, beta)?;
    let probs = born_probs(povm, rho)?;
    let q = povm.num_targets();
    let mut sigma = RMatrix::zeros(q, q);
    for x in 0..povm.num_outcomes() {
        let dev = povm.estimates.row(x).transpose() - beta;
        sigma += &dev * dev.transpose() * probs[x];
    }
    Ok((&sigma + sigma.transpose()).scale(0.5))
}

/// Minimum eigenvalues of `Sigma - V(X)` and `Sigma - Z(X)`.
pub fn matrix_crb_check(
    povm: &DiscretePovm,
    model: &QuantumModel,
    beta: &DVector<f64>,
) -> Result<(f64, f64)> {
    let (residual, pass) = check_local_unbiasedness(povm, model, beta)?;
    if !pass {
        return Err(Error::NotLocallyUnbiased { residual });
    }
    let sigma = error_covariance(povm, model.rho(), beta)?;
    let x = influence_operators(povm, beta)?;
    let z = linalg::z_matrix(&x, model.rho())?;
    let dv = min_eigenvalue_real(&(&sigma - linalg::real_part(&z)));
    let dz = min_eigenvalue(&(to_complex(&sigma) - z));
    Ok((dv, dz))
}

/// Minimum-variance locally unbiased estimates,
/// `estimate(x) = beta + (dbeta)^T F^+ d log p(x)`.
pub fn locally_unbiased_estimates(
    povm: &DiscretePovm,
    model: &QuantumModel,
    beta: &DVector<f64>,
) -> Result<RMatrix> {
    check_dim(povm, model.dim())?;
    if beta.len() != model.num_targets() {
        return Err(Error::DimensionMismatch(format!(
            "beta has {} entries, model has q = {}",
            beta.len(),
            model.num_targets()
        )));
    }
    let probs = born_probs(povm, model.rho())?;
    let dp = prob_derivatives(povm, model);
    let fim = povm_fim(povm, model)?;
    let coeffs = pseudoinverse(&fim, DEFAULT_RANK_TOL)? * model.dbeta();
    let n = povm.num_outcomes();
    let q = model.num_targets();
    let mut estimates = RMatrix::zeros(n, q);
    for x in 0..n {
        for s in 0..q {
            estimates[(x, s)] = beta[s];
            if probs[x] > ZERO_PROBABILITY {
                estimates[(x, s)] += (dp.row(x) * coeffs.column(s))[(0, 0)] / probs[x];
            }
        }
    }
    let candidate = DiscretePovm::new(povm.elements.clone(), estimates)?;
    let (residual, pass) = check_local_unbiasedness(&candidate, model, beta)?;
    if !pass {
        return Err(Error::NotLocallyUnbiased { residual });
    }
    Ok(candidate.estimates)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementReport {
    pub probs: DVector<f64>,
    pub sigma: RMatrix,
    pub fim: RMatrix,
    pub influence: OperatorVector,
    pub unbias_residual: f64,
}

pub fn measurement_report(
    povm: &DiscretePovm,
    model: &QuantumModel,
    beta: &DVector<f64>,
) -> Result<MeasurementReport> {
    let (unbias_residual, _) = check_local_unbiasedness(povm, model, beta)?;
    Ok(MeasurementReport {
        probs: born_probs(povm, model.rho())?,
        sigma: error_covariance(povm, model.rho(), beta)?,
        fim: povm_fim(povm, model)?,
        influence: influence_operators(povm, beta)?,
        unbias_residual,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PovmFile {
    dim: usize,
    elements: Vec<ComplexRows>,
    estimates: RealRows,
}

impl PovmFile {
    fn into_povm(self) -> Result<DiscretePovm> {
        let elements = self
            .elements
            .iter()
            .enumerate()
            .map(|(x, rows)| {
                let m = io::complex_from_rows(rows, &format!("elements[{x}]"))?;
                if m.nrows() != self.dim || m.ncols() != self.dim {
                    return Err(Error::DimensionMismatch(format!(
                        "elements[{x}] is {}x{}, expected {1}x{1}",
                        m.nrows(),
                        self.dim
                    )));
                }
                HermitianOperator::new(m)
                    .map_err(|e| Error::InvalidPovm(format!("elements[{x}]: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        DiscretePovm::new(elements, io::real_from_rows(&self.estimates, "estimates")?)
    }

    fn from_povm(povm: &DiscretePovm) -> Self {
        Self {
            dim: povm.dim(),
            elements: povm.elements.iter().map(|e| io::complex_to_rows(e.matrix())).collect(),
            estimates: io::real_to_rows(&povm.estimates),
        }
    }
}

pub fn load_povm(path: impl AsRef<Path>) -> Result<DiscretePovm> {
    let file: PovmFile = io::read_json(path.as_ref())?;
    file.into_povm()
}

pub fn save_povm(povm: &DiscretePovm, path: impl AsRef<Path>) -> Result<()> {
    io::write_json(&PovmFile::from_povm(povm), path.as_ref())
}
