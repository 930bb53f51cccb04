//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every operation returns a JSON string; the plain-Rust versions in [`ops`]
//! are what the bindings wrap, so they can be tested natively.

use wasm_bindgen::prelude::*;

pub mod ops;

fn to_js(result: Result<String, String>) -> Result<String, JsValue> {
    result.map_err(|e| JsValue::from_str(&e))
}

/// Bounds of the equatorial qubit model at height `z`.
#[wasm_bindgen]
pub fn xy_bounds(z: f64) -> Result<String, JsValue> {
    to_js(ops::xy_bounds(z))
}

/// QFIM and squeezed general-dyne FIM of a displaced thermal state.
#[wasm_bindgen]
pub fn gaussian_fisher(nbar: f64, squeeze: f64) -> Result<String, JsValue> {
    to_js(ops::gaussian_fisher(nbar, squeeze))
}

/// Bounds of a seeded random full-rank model.
#[wasm_bindgen]
pub fn random_model_bounds(seed: u32, dim: u32, params: u32, targets: u32) -> Result<String, JsValue> {
    to_js(ops::random_model_bounds(seed, dim, params, targets))
}
