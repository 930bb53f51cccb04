use qcrb::fixtures::fixture;
use qcrb::gaussian::{self, GaussianMeasurement, GaussianShiftModel};
use qcrb::holevo::{self, HolevoOptions};
use qcrb::io::{real_to_rows, RealRows};
use qcrb::QuantumModel;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Bounds {
    pub label: String,
    pub c_gs: f64,
    pub c_h: f64,
    pub c_d: f64,
    pub two_c_gs: f64,
    pub duality_gap: f64,
}

#[derive(Debug, Serialize)]
pub struct Fisher {
    pub qfim: RealRows,
    pub fim: RealRows,
    pub half_qfim_deviation: f64,
    pub c_gs: f64,
    /// `tr (F^+)`, absent when the measurement misses a quadrature.
    pub classical_bound: Option<f64>,
}

fn json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

fn bounds(model: &QuantumModel) -> Result<String, String> {
    let (closed, sol) = holevo::holevo_bound(model, &HolevoOptions::default()).map_err(|e| e.to_string())?;
    holevo::verify_solution(model, &closed, &sol).map_err(|e| e.to_string())?;
    json(&Bounds {
        label: model.label().to_string(),
        c_gs: closed.c_gs,
        c_h: sol.c_h,
        c_d: closed.c_d,
        two_c_gs: closed.two_c_gs(),
        duality_gap: sol.duality_gap,
    })
}

pub fn xy_bounds(z: f64) -> Result<String, String> {
    bounds(&fixture("qubit_xy_at_z", &[z]).map_err(|e| e.to_string())?)
}

pub fn gaussian_fisher(nbar: f64, squeeze: f64) -> Result<String, String> {
    if !(nbar >= 0.0) || !squeeze.is_finite() {
        return Err("nbar must be non-negative and the squeezing finite".into());
    }
    let model = GaussianShiftModel::thermal_displacement(nbar).map_err(|e| e.to_string())?;
    let meas = GaussianMeasurement::squeezed(1, squeeze);
    let qfim = gaussian::gaussian_qfim(&model).map_err(|e| e.to_string())?;
    let fim = gaussian::gaussian_fim(&model, &meas).map_err(|e| e.to_string())?;
    let half = gaussian::half_qfim_check(&model).map_err(|e| e.to_string())?;
    let c_gs = gaussian::helstrom_bound(&model).map_err(|e| e.to_string())?;
    json(&Fisher {
        qfim: real_to_rows(&qfim),
        fim: real_to_rows(&fim),
        half_qfim_deviation: half.max_dev,
        c_gs,
        classical_bound: gaussian::classical_bound(&model, &meas).ok(),
    })
}

pub fn random_model_bounds(seed: u32, dim: u32, params: u32, targets: u32) -> Result<String, String> {
    if !(2..=4).contains(&dim) {
        return Err("dimension must be 2, 3 or 4".into());
    }
    let model = fixture(
        "random_full_rank",
        &[seed as f64, dim as f64, params as f64, targets as f64],
    )
    .map_err(|e| e.to_string())?;
    bounds(&model)
}
