//! Finite-dimensional quantum statistical models, evaluated at the true
//! parameter point.
//!
//! A model carries the density matrix `rho`, its `p` partial derivatives,
//! the `p x q` matrix `dbeta` of derivatives of the estimated quantities
//! (`dbeta[(j, s)] = d beta_s / d theta_j`) and the `q x q` weight matrix.
//! With `dbeta` equal to the identity the targets are the parameters
//! themselves.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, ComplexRows, RealRows};
use crate::linalg::{
    self, CMatrix, HermitianOperator, OperatorVector, RMatrix, DEFAULT_RANK_TOL, PSD_TOL,
};

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumModel {
    rho: HermitianOperator,
    drho: OperatorVector,
    dbeta: RMatrix,
    weight: RMatrix,
    label: String,
}

/// Spectral facts about `rho` gathered during validation.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelDiagnostics {
    pub rho_rank: usize,
    pub support_projector: HermitianOperator,
    pub min_eigenvalue: f64,
}

impl QuantumModel {
    /// Assembles a model, checking shapes only. `weight` defaults to the identity.
    pub fn new(
        rho: HermitianOperator,
        drho: OperatorVector,
        dbeta: RMatrix,
        weight: Option<RMatrix>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let d = rho.dim();
        if drho.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "rho is {d}x{d} but derivatives are {0}x{0}",
                drho.dim()
            )));
        }
        let p = drho.len();
        if dbeta.nrows() != p || dbeta.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "dbeta must be {p}xq with q >= 1, got {}x{}",
                dbeta.nrows(),
                dbeta.ncols()
            )));
        }
        let q = dbeta.ncols();
        if q > p {
            return Err(Error::DimensionMismatch(format!(
                "q = {q} targets exceed p = {p} parameters"
            )));
        }
        let weight = weight.unwrap_or_else(|| RMatrix::identity(q, q));
        if weight.shape() != (q, q) {
            return Err(Error::DimensionMismatch(format!(
                "weight must be {q}x{q}, got {}x{}",
                weight.nrows(),
                weight.ncols()
            )));
        }
        Ok(Self {
            rho,
            drho,
            dbeta,
            weight,
            label: label.into(),
        })
    }

    /// Builds a model from raw complex matrices, reporting hermiticity
    /// failures as model errors.
    pub fn from_matrices(
        rho: CMatrix,
        drho: Vec<CMatrix>,
        dbeta: RMatrix,
        weight: Option<RMatrix>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let rho = HermitianOperator::new(rho).map_err(|e| match e {
            Error::NotHermitian { deviation } => {
                Error::NotDensityMatrix(format!("not Hermitian (max deviation {deviation:.3e})"))
            }
            other => other,
        })?;
        let drho = drho
            .into_iter()
            .enumerate()
            .map(|(index, m)| {
                HermitianOperator::new(m).map_err(|e| match e {
                    Error::NotHermitian { deviation } => {
                        Error::NonHermitianDerivative { index, deviation }
                    }
                    other => other,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rho, OperatorVector::new(drho)?, dbeta, weight, label)
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// Number of parameters `p`.
    pub fn num_params(&self) -> usize {
        self.drho.len()
    }

    /// Number of estimated quantities `q`.
    pub fn num_targets(&self) -> usize {
        self.dbeta.ncols()
    }

    pub fn rho(&self) -> &HermitianOperator {
        &self.rho
    }

    pub fn drho(&self) -> &OperatorVector {
        &self.drho
    }

    pub fn dbeta(&self) -> &RMatrix {
        &self.dbeta
    }

    pub fn weight(&self) -> &RMatrix {
        &self.weight
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_weight(mut self, weight: RMatrix) -> Result<Self> {
        let q = self.num_targets();
        if weight.shape() != (q, q) {
            return Err(Error::DimensionMismatch(format!(
                "weight must be {q}x{q}, got {}x{}",
                weight.nrows(),
                weight.ncols()
            )));
        }
        self.weight = weight;
        Ok(self)
    }

    pub fn with_dbeta(self, dbeta: RMatrix) -> Result<Self> {
        let weight = if dbeta.ncols() == self.num_targets() {
            Some(self.weight)
        } else {
            None
        };
        Self::new(self.rho, self.drho, dbeta, weight, self.label)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn validate(&self) -> Result<ModelDiagnostics> {
        validate(self, DEFAULT_RANK_TOL)
    }
}

/// Checks every model invariant and returns the spectral diagnostics of `rho`.
///
/// `rank_tol` is relative to the largest eigenvalue of `rho`.
pub fn validate(model: &QuantumModel, rank_tol: f64) -> Result<ModelDiagnostics> {
    let d = model.dim();
    let all_finite = model.rho.matrix().iter().all(|z| z.re.is_finite() && z.im.is_finite())
        && model
            .drho
            .iter()
            .all(|op| op.matrix().iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        && model.dbeta.iter().all(|x| x.is_finite())
        && model.weight.iter().all(|x| x.is_finite());
    if !all_finite {
        return Err(Error::InvalidArgument("model contains non-finite entries".into()));
    }

    let trace = model.rho.trace();
    if (trace - 1.0).abs() > 1e-10 {
        return Err(Error::NotDensityMatrix(format!("trace is {trace}")));
    }
    let (values, vectors) = model.rho.eigh();
    let min_eigenvalue = values[0];
    if min_eigenvalue < -PSD_TOL {
        return Err(Error::NotDensityMatrix(format!(
            "negative eigenvalue {min_eigenvalue:.3e}"
        )));
    }
    let cutoff = rank_tol * values[d - 1];
    let support: Vec<usize> = (0..d).filter(|&i| values[i] > cutoff).collect();
    let kernel: Vec<usize> = (0..d).filter(|&i| values[i] <= cutoff).collect();

    for (index, op) in model.drho.iter().enumerate() {
        let scale = linalg::max_abs(op.matrix()).max(1.0);
        let tr = op.trace();
        if tr.abs() > 1e-10 * scale {
            return Err(Error::DerivativeNotTraceless { index, trace: tr });
        }
        if !kernel.is_empty() {
            let rotated = vectors.adjoint() * op.matrix() * &vectors;
            let norm = kernel
                .iter()
                .flat_map(|&a| kernel.iter().map(move |&b| (a, b)))
                .map(|(a, b)| rotated[(a, b)].norm())
                .fold(0.0, f64::max);
            if norm > 1e-9 * scale {
                return Err(Error::KernelBlockDerivative { index, norm });
            }
        }
    }

    let q = model.num_targets();
    let singular_values = model.dbeta.clone().singular_values();
    let smax = singular_values.amax();
    let rank = singular_values.iter().filter(|&&s| s > 1e-10 * smax && s > 0.0).count();
    if rank < q {
        return Err(Error::RankDeficientDbeta { rank, q });
    }

    linalg::ensure_symmetric_psd(&model.weight).map_err(|e| Error::InvalidWeight(e.to_string()))?;

    let mut projector = CMatrix::zeros(d, d);
    for &i in &support {
        let v = vectors.column(i);
        projector += &v * v.adjoint();
    }
    Ok(ModelDiagnostics {
        rho_rank: support.len(),
        support_projector: HermitianOperator::hermitized(projector),
        min_eigenvalue,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    dim: usize,
    rho: ComplexRows,
    drho: Vec<ComplexRows>,
    dbeta: RealRows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<RealRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl QuantumModel {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_file_repr(io::from_json_str(text)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        io::to_json_string(&self.to_file_repr())
    }

    fn from_file_repr(file: ModelFile) -> Result<Self> {
        let rho = io::complex_from_rows(&file.rho, "rho")?;
        if rho.shape() != (file.dim, file.dim) {
            return Err(Error::Parse(format!(
                "rho is {}x{} but dim = {}",
                rho.nrows(),
                rho.ncols(),
                file.dim
            )));
        }
        let drho = file
            .drho
            .iter()
            .enumerate()
            .map(|(j, rows)| {
                let m = io::complex_from_rows(rows, &format!("drho[{j}]"))?;
                if m.shape() != (file.dim, file.dim) {
                    return Err(Error::Parse(format!(
                        "drho[{j}] is {}x{} but dim = {}",
                        m.nrows(),
                        m.ncols(),
                        file.dim
                    )));
                }
                Ok(m)
            })
            .collect::<Result<Vec<_>>>()?;
        let dbeta = io::real_from_rows(&file.dbeta, "dbeta")?;
        let weight = file
            .weight
            .as_ref()
            .map(|w| io::real_from_rows(w, "weight"))
            .transpose()?;
        Self::from_matrices(rho, drho, dbeta, weight, file.label.unwrap_or_default())
    }

    fn to_file_repr(&self) -> ModelFile {
        ModelFile {
            dim: self.dim(),
            rho: io::complex_to_rows(self.rho.matrix()),
            drho: self.drho.iter().map(|op| io::complex_to_rows(op.matrix())).collect(),
            dbeta: io::real_to_rows(&self.dbeta),
            weight: Some(io::real_to_rows(&self.weight)),
            label: Some(self.label.clone()),
        }
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<QuantumModel> {
    let file: ModelFile = io::read_json(path.as_ref())?;
    QuantumModel::from_file_repr(file)
}

pub fn save_model(model: &QuantumModel, path: impl AsRef<Path>) -> Result<()> {
    io::write_json(&model.to_file_repr(), path.as_ref())
}
