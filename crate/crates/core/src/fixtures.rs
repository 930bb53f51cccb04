//! Closed-form test models.
//!
//! | name                | params               | model                                              |
//! |---------------------|----------------------|----------------------------------------------------|
//! | `qubit_bloch`       | `x, y, z`            | `(I + r.sigma)/2`, `p = q = 3`, `drho_j = sigma_j/2` |
//! | `qubit_xy_at_z`     | `z`                  | `(I + z sigma_z)/2`, `drho = (sigma_x/2, sigma_y/2)` |
//! | `pure_qubit_angles` | `theta, phi`         | pure Bloch state, angle parameters, weight = QFIM  |
//! | `classical_diagonal`| `p_1, ..., p_d`      | `diag(p)`, `drho_j = e_j e_j^T - e_d e_d^T`        |
//! | `random_full_rank`  | `seed [, d, p, q]`   | seeded random full-rank model with random weight   |
//!
//! All fixtures use `dbeta = I` except `random_full_rank`, and the identity
//! weight except where noted. `pure_qubit_angles` is weighted by its own QFIM
//! `diag(1, sin^2 theta)`, the weighting under which pure-state tomography
//! attains `C^H = C^D = 2 C^GS`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{pauli_x, pauli_y, pauli_z, CMatrix, HermitianOperator, OperatorVector, RMatrix};
use crate::model::QuantumModel;
use crate::random::{random_model, rng_from_seed, RandomModelSpec};

pub struct FixtureInfo {
    pub name: &'static str,
    pub params: &'static str,
    pub description: &'static str,
}

pub const FIXTURES: &[FixtureInfo] = &[
    FixtureInfo {
        name: "qubit_bloch",
        params: "x y z (|r| < 1)",
        description: "mixed qubit (I + r.sigma)/2 estimating all three Bloch components",
    },
    FixtureInfo {
        name: "qubit_xy_at_z",
        params: "z (|z| < 1)",
        description: "qubit (I + z sigma_z)/2 estimating the two equatorial Bloch components",
    },
    FixtureInfo {
        name: "pure_qubit_angles",
        params: "theta phi (0 < theta < pi)",
        description: "pure qubit state estimating its polar and azimuthal angles, QFIM weight",
    },
    FixtureInfo {
        name: "classical_diagonal",
        params: "p_1 ... p_d (positive, sum 1)",
        description: "diagonal state estimating the first d-1 probabilities",
    },
    FixtureInfo {
        name: "random_full_rank",
        params: "seed [d=2 p=2 q=p]",
        description: "seeded random full-rank model with a random positive-definite weight",
    },
];

fn expect_params(name: &str, params: &[f64], count: usize) -> Result<()> {
    if params.len() != count {
        return Err(Error::InvalidArgument(format!(
            "fixture {name} takes {count} parameter(s), got {}",
            params.len()
        )));
    }
    if params.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("fixture {name}: non-finite parameter")));
    }
    Ok(())
}

fn bloch_state(r: [f64; 3]) -> HermitianOperator {
    let m = CMatrix::identity(2, 2)
        + pauli_x().matrix().scale(r[0])
        + pauli_y().matrix().scale(r[1])
        + pauli_z().matrix().scale(r[2]);
    HermitianOperator::hermitized(m.scale(0.5))
}

fn integer_param(name: &str, value: f64, what: &str) -> Result<u64> {
    if value < 0.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(Error::InvalidArgument(format!(
            "fixture {name}: {what} must be a non-negative integer, got {value}"
        )));
    }
    Ok(value as u64)
}

/// Builds a named fixture model.
pub fn fixture(name: &str, params: &[f64]) -> Result<QuantumModel> {
    match name {
        "qubit_bloch" => {
            expect_params(name, params, 3)?;
            let r = [params[0], params[1], params[2]];
            let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm >= 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "qubit_bloch needs |r| < 1, got {norm}"
                )));
            }
            QuantumModel::new(
                bloch_state(r),
                OperatorVector::new(vec![
                    pauli_x().scale(0.5),
                    pauli_y().scale(0.5),
                    pauli_z().scale(0.5),
                ])?,
                RMatrix::identity(3, 3),
                None,
                format!("qubit_bloch({}, {}, {})", r[0], r[1], r[2]),
            )
        }
        "qubit_xy_at_z" => {
            expect_params(name, params, 1)?;
            let z = params[0];
            if z.abs() >= 1.0 {
                return Err(Error::InvalidArgument(format!("qubit_xy_at_z needs |z| < 1, got {z}")));
            }
            QuantumModel::new(
                bloch_state([0.0, 0.0, z]),
                OperatorVector::new(vec![pauli_x().scale(0.5), pauli_y().scale(0.5)])?,
                RMatrix::identity(2, 2),
                None,
                format!("qubit_xy_at_z({z})"),
            )
        }
        "pure_qubit_angles" => {
            expect_params(name, params, 2)?;
            let (theta, phi) = (params[0], params[1]);
            if !(theta > 0.0 && theta < std::f64::consts::PI) {
                return Err(Error::InvalidArgument(format!(
                    "pure_qubit_angles needs 0 < theta < pi, got {theta}"
                )));
            }
            let (s, c) = (theta / 2.0).sin_cos();
            let phase = Complex64::from_polar(1.0, phi);
            let psi = nalgebra::DVector::from_vec(vec![Complex64::new(c, 0.0), phase * s]);
            let d_theta =
                nalgebra::DVector::from_vec(vec![Complex64::new(-s / 2.0, 0.0), phase * (c / 2.0)]);
            let d_phi = nalgebra::DVector::from_vec(vec![
                Complex64::new(0.0, 0.0),
                phase * Complex64::new(0.0, s),
            ]);
            let derivative = |dpsi: &nalgebra::DVector<Complex64>| {
                HermitianOperator::hermitized(dpsi * psi.adjoint() + &psi * dpsi.adjoint())
            };
            let rho = HermitianOperator::hermitized(&psi * psi.adjoint());
            let qfim = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                1.0,
                theta.sin().powi(2),
            ]));
            QuantumModel::new(
                rho,
                OperatorVector::new(vec![derivative(&d_theta), derivative(&d_phi)])?,
                RMatrix::identity(2, 2),
                Some(qfim),
                format!("pure_qubit_angles({theta}, {phi})"),
            )
        }
        "classical_diagonal" => {
            let d = params.len();
            if d < 2 {
                return Err(Error::InvalidArgument(
                    "classical_diagonal needs at least two probabilities".into(),
                ));
            }
            if params.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::InvalidArgument(
                    "classical_diagonal probabilities must be positive".into(),
                ));
            }
            let total: f64 = params.iter().sum();
            if (total - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "classical_diagonal probabilities sum to {total}, expected 1"
                )));
            }
            let diag = |values: Vec<f64>| {
                HermitianOperator::from_real(&RMatrix::from_diagonal(&nalgebra::DVector::from_vec(
                    values,
                )))
            };
            let rho = diag(params.to_vec())?;
            let drho = (0..d - 1)
                .map(|j| {
                    let mut v = vec![0.0; d];
                    v[j] = 1.0;
                    v[d - 1] = -1.0;
                    diag(v)
                })
                .collect::<Result<Vec<_>>>()?;
            QuantumModel::new(
                rho,
                OperatorVector::new(drho)?,
                RMatrix::identity(d - 1, d - 1),
                None,
                format!("classical_diagonal({params:?})"),
            )
        }
        "random_full_rank" => {
            if params.is_empty() || params.len() > 4 {
                return Err(Error::InvalidArgument(
                    "random_full_rank takes seed [d p q]".into(),
                ));
            }
            let seed = integer_param(name, params[0], "seed")?;
            let d = params.get(1).map(|&x| integer_param(name, x, "d")).transpose()?.unwrap_or(2);
            let p = params.get(2).map(|&x| integer_param(name, x, "p")).transpose()?.unwrap_or(2);
            let q = params.get(3).map(|&x| integer_param(name, x, "q")).transpose()?.unwrap_or(p);
            if d < 2 {
                return Err(Error::InvalidArgument("random_full_rank needs d >= 2".into()));
            }
            let spec = RandomModelSpec::full_rank(d as usize, p as usize, q as usize);
            let model = random_model(&mut rng_from_seed(seed), &spec)?;
            Ok(model.with_label(format!("random_full_rank(seed={seed}, d={d}, p={p}, q={q})")))
        }
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}
