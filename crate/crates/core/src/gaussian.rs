//! Gaussian shift models: the mean depends on the parameters, the covariance does not.
//!
//! Covariance convention: `sigma = 2 <(r - mean) o (r - mean)^T>`, so the
//! vacuum has `sigma = I` and physical states satisfy `sigma + i Omega >= 0`
//! with `Omega` the direct sum of `[[0, 1], [-1, 0]]` blocks.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, RealRows};
use crate::linalg::{
    self, ensure_symmetric_psd, max_abs, min_eigenvalue, min_eigenvalue_real, pseudoinverse,
    symmetry_deviation, CMatrix, RMatrix, DEFAULT_RANK_TOL,
};

/// Physicality slack for `sigma + i Omega >= 0`.
pub const PHYSICALITY_TOL: f64 = 1e-10;

/// Smallest eigenvalue accepted when inverting `sigma` or `sigma + sigma_m`.
pub const INVERTIBILITY_TOL: f64 = 1e-12;

/// Direct sum of `k` blocks `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(k: usize) -> Result<RMatrix> {
    if k < 1 {
        return Err(Error::InvalidArgument("number of modes must be at least 1".into()));
    }
    let mut omega = RMatrix::zeros(2 * k, 2 * k);
    for m in 0..k {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    Ok(omega)
}

fn check_cm_shape(cm: &RMatrix, k: usize) -> Result<()> {
    if cm.nrows() != 2 * k || cm.ncols() != 2 * k {
        return Err(Error::DimensionMismatch(format!(
            "covariance matrix for {k} mode(s) must be {0}x{0}, got {1}x{2}",
            2 * k,
            cm.nrows(),
            cm.ncols()
        )));
    }
    if cm.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("covariance matrix has non-finite entries".into()));
    }
    let deviation = symmetry_deviation(cm);
    if deviation > 1e-10 * max_abs(cm).max(1.0) {
        return Err(Error::NotSymmetric { deviation });
    }
    Ok(())
}

/// Smallest eigenvalue of the Hermitian matrix `cm + i Omega`.
pub fn physicality_margin(cm: &RMatrix, k: usize) -> Result<f64> {
    check_cm_shape(cm, k)?;
    let omega = symplectic_form(k)?;
    let m = CMatrix::from_fn(2 * k, 2 * k, |i, j| {
        num_complex::Complex64::new(cm[(i, j)], omega[(i, j)])
    });
    Ok(min_eigenvalue(&m))
}

/// Whether `cm + i Omega >= -1e-10`.
pub fn validate_cm(cm: &RMatrix, k: usize) -> Result<bool> {
    Ok(physicality_margin(cm, k)? >= -PHYSICALITY_TOL)
}

fn ensure_physical(cm: &RMatrix, k: usize) -> Result<()> {
    let min_eigenvalue = physicality_margin(cm, k)?;
    if min_eigenvalue < -PHYSICALITY_TOL {
        return Err(Error::UnphysicalCovariance { min_eigenvalue });
    }
    Ok(())
}

fn symmetric_inverse(m: &RMatrix, what: &str) -> Result<RMatrix> {
    let lowest = min_eigenvalue_real(m);
    if !(lowest > INVERTIBILITY_TOL) {
        return Err(Error::Singular(format!("{what} has minimum eigenvalue {lowest:e}")));
    }
    Ok(linalg::symmetric_function(m, |x| 1.0 / x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianShiftModel {
    modes: usize,
    djacobian: RMatrix,
    cm: RMatrix,
    mean: DVector<f64>,
    dbeta: RMatrix,
    weight: RMatrix,
    label: String,
}

impl GaussianShiftModel {
    /// `dbeta` defaults to the identity (`beta = theta`) and `weight` to the identity.
    pub fn new(
        modes: usize,
        djacobian: RMatrix,
        cm: RMatrix,
        mean: DVector<f64>,
        dbeta: Option<RMatrix>,
        weight: Option<RMatrix>,
        label: impl Into<String>,
    ) -> Result<Self> {
        ensure_physical(&cm, modes)?;
        let n = 2 * modes;
        if djacobian.nrows() != n || djacobian.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "djacobian must be {n}xp with p >= 1, got {}x{}",
                djacobian.nrows(),
                djacobian.ncols()
            )));
        }
        if djacobian.iter().chain(mean.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite mean or djacobian entry".into()));
        }
        if mean.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "mean must have {n} entries, got {}",
                mean.len()
            )));
        }
        let p = djacobian.ncols();
        let dbeta = dbeta.unwrap_or_else(|| RMatrix::identity(p, p));
        if dbeta.nrows() != p || dbeta.ncols() == 0 || dbeta.ncols() > p {
            return Err(Error::DimensionMismatch(format!(
                "dbeta must be {p}xq with 1 <= q <= {p}, got {}x{}",
                dbeta.nrows(),
                dbeta.ncols()
            )));
        }
        let q = dbeta.ncols();
        let weight = weight.unwrap_or_else(|| RMatrix::identity(q, q));
        if weight.nrows() != q || weight.ncols() != q {
            return Err(Error::DimensionMismatch(format!(
                "weight must be {q}x{q}, got {}x{}",
                weight.nrows(),
                weight.ncols()
            )));
        }
        ensure_symmetric_psd(&weight).map_err(|e| Error::InvalidWeight(e.to_string()))?;
        Ok(Self {
            modes,
            djacobian,
            cm,
            mean,
            dbeta,
            weight,
            label: label.into(),
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn djacobian(&self) -> &RMatrix {
        &self.djacobian
    }

    pub fn cm(&self) -> &RMatrix {
        &self.cm
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
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

    pub fn num_params(&self) -> usize {
        self.djacobian.ncols()
    }

    /// Vacuum (`sigma = I`) displaced along both quadratures of one mode.
    pub fn vacuum_displacement() -> Self {
        Self::new(
            1,
            RMatrix::identity(2, 2),
            RMatrix::identity(2, 2),
            DVector::zeros(2),
            None,
            None,
            "vacuum displacement",
        )
        .expect("vacuum is physical")
    }

    /// Thermal state with mean photon number `nbar`, `sigma = (2 nbar + 1) I`.
    pub fn thermal_displacement(nbar: f64) -> Result<Self> {
        Self::new(
            1,
            RMatrix::identity(2, 2),
            RMatrix::identity(2, 2).scale(2.0 * nbar + 1.0),
            DVector::zeros(2),
            None,
            None,
            format!("thermal displacement (nbar = {nbar})"),
        )
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: GaussianFile = io::from_json_str(text)?;
        file.into_model()
    }

    pub fn to_json_string(&self) -> Result<String> {
        io::to_json_string(&GaussianFile::from_model(self))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMeasurement {
    cm_m: RMatrix,
}

impl GaussianMeasurement {
    pub fn new(cm_m: RMatrix) -> Result<Self> {
        if cm_m.nrows() % 2 != 0 || cm_m.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "measurement covariance must be 2k x 2k, got {}x{}",
                cm_m.nrows(),
                cm_m.ncols()
            )));
        }
        ensure_physical(&cm_m, cm_m.nrows() / 2)?;
        Ok(Self { cm_m })
    }

    /// Heterodyne detection, `sigma_m = I`.
    pub fn heterodyne(k: usize) -> Self {
        Self {
            cm_m: RMatrix::identity(2 * k, 2 * k),
        }
    }

    /// Squeezed general-dyne on every mode: `diag(e^{-2r}, e^{2r})`; large `r` approaches x-homodyne.
    pub fn squeezed(k: usize, r: f64) -> Self {
        let mut cm_m = RMatrix::zeros(2 * k, 2 * k);
        for m in 0..k {
            cm_m[(2 * m, 2 * m)] = (-2.0 * r).exp();
            cm_m[(2 * m + 1, 2 * m + 1)] = (2.0 * r).exp();
        }
        Self { cm_m }
    }

    pub fn cm(&self) -> &RMatrix {
        &self.cm_m
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: MeasurementFile = io::from_json_str(text)?;
        Self::new(io::real_from_rows(&file.cm, "cm")?)
    }
}

fn check_measurement(model: &GaussianShiftModel, meas: &GaussianMeasurement) -> Result<()> {
    if meas.cm_m.nrows() != model.cm.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "measurement acts on {} mode(s), model has {}",
            meas.cm_m.nrows() / 2,
            model.modes
        )));
    }
    Ok(())
}

fn sandwich_form(dr: &RMatrix, inv: &RMatrix) -> RMatrix {
    let m = dr.transpose() * inv * dr * 2.0;
    (&m + m.transpose()).scale(0.5)
}

/// Classical FIM of general-dyne detection, `F = 2 (dr)^T (sigma + sigma_m)^{-1} dr`.
pub fn gaussian_fim(model: &GaussianShiftModel, meas: &GaussianMeasurement) -> Result<RMatrix> {
    check_measurement(model, meas)?;
    let inv = symmetric_inverse(&(&model.cm + &meas.cm_m), "sigma + sigma_m")?;
    Ok(sandwich_form(&model.djacobian, &inv))
}

/// QFIM of the shift model, `J = 2 (dr)^T sigma^{-1} dr`.
pub fn gaussian_qfim(model: &GaussianShiftModel) -> Result<RMatrix> {
    let inv = symmetric_inverse(&model.cm, "sigma")?;
    Ok(sandwich_form(&model.djacobian, &inv))
}

#[derive(Clone, Debug, PartialEq)]
pub struct HalfQfimCheck {
    /// FIM of the general-dyne measurement with `sigma_m = sigma`.
    pub fim: RMatrix,
    pub qfim: RMatrix,
    /// `max |F - J/2|`.
    pub max_dev: f64,
}

/// Compares the FIM of the `sigma_m = sigma` measurement against `J / 2`.
pub fn half_qfim_check(model: &GaussianShiftModel) -> Result<HalfQfimCheck> {
    let meas = GaussianMeasurement {
        cm_m: model.cm.clone(),
    };
    let fim = gaussian_fim(model, &meas)?;
    let qfim = gaussian_qfim(model)?;
    let max_dev = max_abs(&(&fim - qfim.scale(0.5)));
    Ok(HalfQfimCheck { fim, qfim, max_dev })
}

/// Log of the general-dyne outcome density at `r_out`.
pub fn generaldyne_logdensity(
    r_out: &DVector<f64>,
    model: &GaussianShiftModel,
    meas: &GaussianMeasurement,
) -> Result<f64> {
    check_measurement(model, meas)?;
    if r_out.len() != model.mean.len() {
        return Err(Error::DimensionMismatch(format!(
            "outcome has {} entries, expected {}",
            r_out.len(),
            model.mean.len()
        )));
    }
    let total = &model.cm + &meas.cm_m;
    let inv = symmetric_inverse(&total, "sigma + sigma_m")?;
    let diff = r_out - &model.mean;
    let quad = (diff.transpose() * inv * &diff)[(0, 0)];
    let (values, _) = linalg::eigh_real(&total);
    let log_det: f64 = values.iter().map(|v| v.ln()).sum();
    Ok(-quad - model.modes as f64 * std::f64::consts::PI.ln() - 0.5 * log_det)
}

/// `tr[W (dbeta)^T A^+ dbeta]` after checking that `dbeta` lies in the range of `A`.
pub fn weighted_bound(info: &RMatrix, dbeta: &RMatrix, weight: &RMatrix) -> Result<f64> {
    let pinv = pseudoinverse(info, DEFAULT_RANK_TOL)?;
    let projected = info * &pinv * dbeta;
    for s in 0..dbeta.ncols() {
        let residual = (projected.column(s) - dbeta.column(s)).amax();
        if residual > 1e-8 {
            return Err(Error::InfeasibleModel { column: s, residual });
        }
    }
    Ok((weight * dbeta.transpose() * pinv * dbeta).trace())
}

/// Generalized Helstrom bound of the shift model.
pub fn helstrom_bound(model: &GaussianShiftModel) -> Result<f64> {
    weighted_bound(&gaussian_qfim(model)?, &model.dbeta, &model.weight)
}

/// Classical bound `tr[W (dbeta)^T F^+ dbeta]` of a general-dyne measurement.
pub fn classical_bound(model: &GaussianShiftModel, meas: &GaussianMeasurement) -> Result<f64> {
    weighted_bound(&gaussian_fim(model, meas)?, &model.dbeta, &model.weight)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianFile {
    modes: usize,
    cm: RealRows,
    djacobian: RealRows,
    mean: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dbeta: Option<RealRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<RealRows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl GaussianFile {
    fn into_model(self) -> Result<GaussianShiftModel> {
        GaussianShiftModel::new(
            self.modes,
            io::real_from_rows(&self.djacobian, "djacobian")?,
            io::real_from_rows(&self.cm, "cm")?,
            DVector::from_vec(self.mean),
            self.dbeta.map(|r| io::real_from_rows(&r, "dbeta")).transpose()?,
            self.weight.map(|r| io::real_from_rows(&r, "weight")).transpose()?,
            self.label.unwrap_or_default(),
        )
    }

    fn from_model(model: &GaussianShiftModel) -> Self {
        Self {
            modes: model.modes,
            cm: io::real_to_rows(&model.cm),
            djacobian: io::real_to_rows(&model.djacobian),
            mean: model.mean.iter().copied().collect(),
            dbeta: Some(io::real_to_rows(&model.dbeta)),
            weight: Some(io::real_to_rows(&model.weight)),
            label: (!model.label.is_empty()).then(|| model.label.clone()),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasurementFile {
    cm: RealRows,
}

pub fn load_gaussian_model(path: impl AsRef<Path>) -> Result<GaussianShiftModel> {
    let file: GaussianFile = io::read_json(path.as_ref())?;
    file.into_model()
}

pub fn save_gaussian_model(model: &GaussianShiftModel, path: impl AsRef<Path>) -> Result<()> {
    io::write_json(&GaussianFile::from_model(model), path.as_ref())
}

pub fn load_measurement(path: impl AsRef<Path>) -> Result<GaussianMeasurement> {
    let file: MeasurementFile = io::read_json(path.as_ref())?;
    GaussianMeasurement::new(io::real_from_rows(&file.cm, "cm")?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn identity_error(m: &RMatrix, scale: f64) -> f64 {
        max_abs(&(m - RMatrix::identity(m.nrows(), m.ncols()).scale(scale)))
    }

    #[test]
    fn symplectic_form_examples() {
        let one = symplectic_form(1).unwrap();
        assert_eq!(one, RMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]));
        let two = symplectic_form(2).unwrap();
        assert_eq!(two[(2, 3)], 1.0);
        assert_eq!(two[(0, 2)], 0.0);
        let three = symplectic_form(3).unwrap();
        assert_eq!(&three * three.transpose(), RMatrix::identity(6, 6));
        assert_eq!(&three * &three, -RMatrix::identity(6, 6));
        assert!(symplectic_form(0).is_err());
    }

    #[test]
    fn physicality_examples() {
        assert!(validate_cm(&RMatrix::identity(2, 2), 1).unwrap());
        assert_abs_diff_eq!(physicality_margin(&RMatrix::identity(2, 2), 1).unwrap(), 0.0, epsilon = 1e-15);
        assert!(!validate_cm(&RMatrix::identity(2, 2).scale(0.5), 1).unwrap());
        assert_abs_diff_eq!(
            physicality_margin(&RMatrix::identity(2, 2).scale(0.5), 1).unwrap(),
            -0.5,
            epsilon = 1e-15
        );
        for r in [0.0f64, 0.4, 1.5, -2.0] {
            let sq = RMatrix::from_diagonal(&DVector::from_vec(vec![(2.0 * r).exp(), (-2.0 * r).exp()]));
            assert!(validate_cm(&sq, 1).unwrap());
        }
        assert!(validate_cm(&RMatrix::identity(3, 3), 1).is_err());
        assert!(matches!(
            GaussianMeasurement::new(RMatrix::identity(2, 2).scale(0.5)),
            Err(Error::UnphysicalCovariance { .. })
        ));
    }

    #[test]
    fn vacuum_and_thermal_information() {
        let vac = GaussianShiftModel::vacuum_displacement();
        let het = GaussianMeasurement::heterodyne(1);
        assert!(identity_error(&gaussian_fim(&vac, &het).unwrap(), 1.0) < 1e-15);
        assert!(identity_error(&gaussian_qfim(&vac).unwrap(), 2.0) < 1e-15);
        let n = 3.0;
        let th = GaussianShiftModel::thermal_displacement(n).unwrap();
        assert!(identity_error(&gaussian_fim(&th, &het).unwrap(), 1.0 / (n + 1.0)) < 1e-15);
        assert!(identity_error(&gaussian_qfim(&th).unwrap(), 2.0 / (2.0 * n + 1.0)) < 1e-15);
        let check = half_qfim_check(&th).unwrap();
        assert!(identity_error(&check.fim, 1.0 / 7.0) < 1e-15);
        assert!(check.max_dev < 1e-15);
        let x_only = GaussianShiftModel::new(
            1,
            RMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            RMatrix::identity(2, 2),
            DVector::zeros(2),
            None,
            None,
            "",
        )
        .unwrap();
        assert_abs_diff_eq!(gaussian_qfim(&x_only).unwrap()[(0, 0)], 2.0, epsilon = 1e-15);
        let still = GaussianShiftModel::new(
            1,
            RMatrix::zeros(2, 2),
            RMatrix::identity(2, 2),
            DVector::zeros(2),
            None,
            None,
            "",
        )
        .unwrap();
        assert_eq!(gaussian_fim(&still, &het).unwrap(), RMatrix::zeros(2, 2));
    }

    #[test]
    fn logdensity_examples() {
        let vac = GaussianShiftModel::vacuum_displacement();
        let het = GaussianMeasurement::heterodyne(1);
        let at_mean = generaldyne_logdensity(&DVector::zeros(2), &vac, &het).unwrap();
        assert_abs_diff_eq!(at_mean, -(std::f64::consts::PI * 2.0).ln(), epsilon = 1e-14);
        let off = generaldyne_logdensity(&DVector::from_vec(vec![1.0, 0.0]), &vac, &het).unwrap();
        assert_abs_diff_eq!(off, -0.5 - (2.0 * std::f64::consts::PI).ln(), epsilon = 1e-14);
    }

    #[test]
    fn density_normalizes() {
        let model = GaussianShiftModel::new(
            1,
            RMatrix::identity(2, 2),
            RMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 1.2]),
            DVector::from_vec(vec![0.4, -0.2]),
            None,
            None,
            "",
        )
        .unwrap();
        let meas = GaussianMeasurement::squeezed(1, 0.3);
        let (n, lo, hi) = (400usize, -8.0, 8.0);
        let h = (hi - lo) / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let r = DVector::from_vec(vec![lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h]);
                total += generaldyne_logdensity(&r, &model, &meas).unwrap().exp() * h * h;
            }
        }
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn chained_bound_is_twice_helstrom() {
        let vac = GaussianShiftModel::vacuum_displacement();
        let c_gs = helstrom_bound(&vac).unwrap();
        assert_abs_diff_eq!(c_gs, 1.0, epsilon = 1e-15);
        let meas = GaussianMeasurement::new(vac.cm().clone()).unwrap();
        assert_abs_diff_eq!(classical_bound(&vac, &meas).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn file_round_trip_and_errors() {
        let model = GaussianShiftModel::thermal_displacement(0.7).unwrap();
        let text = model.to_json_string().unwrap();
        assert_eq!(GaussianShiftModel::from_json_str(&text).unwrap(), model);
        let bad = r#"{"modes": 1, "cm": [[0.5, 0], [0, 0.5]], "djacobian": [[1], [0]], "mean": [0, 0]}"#;
        assert!(matches!(
            GaussianShiftModel::from_json_str(bad),
            Err(Error::UnphysicalCovariance { .. })
        ));
        let ragged = r#"{"modes": 1, "cm": [[1, 0], [0]], "djacobian": [[1], [0]], "mean": [0, 0]}"#;
        assert!(matches!(GaussianShiftModel::from_json_str(ragged), Err(Error::Parse(_))));
        let meas = GaussianMeasurement::from_json_str(r#"{"cm": [[1, 0], [0, 1]]}"#).unwrap();
        assert_eq!(meas, GaussianMeasurement::heterodyne(1));
    }
}
