//! Report types and their text, JSON and CSV renderings.

use std::fmt::Write as _;

use qcrb::holevo::BasisReduction;
use qcrb::io::{ComplexRows, RealRows};
use qcrb::sdp::SdpStatus;
use serde::Serialize;
use serde_json::Value;

pub const CSV_HEADER: [&str; 6] = ["param", "c_gs", "c_h", "c_d", "two_c_gs", "gap"];

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub tol: f64,
    pub max_iter: usize,
    pub rank_tol: f64,
    pub basis: BasisReduction,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub analysis_ms: f64,
    pub holevo_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub model_label: String,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infeasible_column: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_gs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_c_gs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duality_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dual_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<SdpStatus>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    pub rho_rank: usize,
    pub qfim_rank: usize,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_opt: Option<Vec<ComplexRows>>,
}

impl BoundReport {
    pub fn csv_row(&self, param: String) -> SweepRow {
        SweepRow {
            param,
            c_gs: self.c_gs,
            c_h: self.c_h,
            c_d: self.c_d,
            two_c_gs: self.two_c_gs,
            gap: self.duality_gap,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussianReport {
    pub model_label: String,
    pub modes: usize,
    /// `matched` (`sigma_m = sigma`) or `file`.
    pub measurement: &'static str,
    pub measurement_cm: RealRows,
    pub qfim: RealRows,
    pub fim: RealRows,
    pub min_eig_qfim_minus_fim: f64,
    pub half_qfim_deviation: f64,
    pub c_gs: f64,
    pub two_c_gs: f64,
    pub matched_classical_bound: f64,
    pub chained_deviation: f64,
    /// `tr W (dbeta)^T F^+ dbeta` for the chosen measurement; absent when
    /// that measurement cannot estimate every target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classical_bound: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PovmReport {
    pub model_label: String,
    pub outcomes: usize,
    pub beta: Vec<f64>,
    pub unbias_residual: f64,
    pub probs: Vec<f64>,
    pub sigma: RealRows,
    pub fim: RealRows,
    pub min_eig_sigma_minus_v: f64,
    pub min_eig_sigma_minus_z: f64,
    pub trace_w_sigma: f64,
    pub c_gs: f64,
    pub c_h: f64,
    pub c_d: f64,
    pub two_c_gs: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub param: String,
    pub c_gs: Option<f64>,
    pub c_h: Option<f64>,
    pub c_d: Option<f64>,
    pub two_c_gs: Option<f64>,
    pub gap: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FixtureEntry {
    pub name: &'static str,
    pub params: &'static str,
    pub description: &'static str,
}

/// Fixed 17-significant-digit scientific form used in CSV output.
pub fn csv_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn render_json<T: Serialize>(report: &T) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    text
}

/// `key: value` lines; nested objects use dotted keys, arrays stay compact JSON.
pub fn render_text<T: Serialize>(report: &T) -> String {
    let value = serde_json::to_value(report).expect("reports serialize");
    let mut out = String::new();
    match value {
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                write_text(&mut out, "", item);
            }
        }
        other => write_text(&mut out, "", &other),
    }
    out
}

fn write_text(out: &mut String, prefix: &str, value: &Value) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                write_text(out, &key, v);
            }
        }
        Value::String(s) => {
            let _ = writeln!(out, "{prefix}: {s}");
        }
        other => {
            let _ = writeln!(out, "{prefix}: {other}");
        }
    }
}

pub fn render_csv(rows: &[SweepRow]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(CSV_HEADER).expect("in-memory write");
    let cell = |x: Option<f64>| x.map(csv_float).unwrap_or_default();
    for row in rows {
        writer
            .write_record([
                row.param.clone(),
                cell(row.c_gs),
                cell(row.c_h),
                cell(row.c_d),
                cell(row.two_c_gs),
                cell(row.gap),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 output")
}
