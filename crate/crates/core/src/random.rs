//! Seeded random models, states and measurements for randomized checks.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    self, CMatrix, HermitianOperator, OperatorVector, RMatrix, DEFAULT_RANK_TOL,
};
use crate::model::QuantumModel;

pub type ModelRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> ModelRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(normal(rng), normal(rng)))
}

pub fn random_real<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> RMatrix {
    RMatrix::from_fn(rows, cols, |_, _| normal(rng))
}

/// Hermitian matrix with i.i.d. Gaussian entries (GUE up to scaling).
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> HermitianOperator {
    HermitianOperator::hermitized(random_complex(rng, d, d))
}

/// Density matrix of the given rank, `G G^dagger / Tr` with Gaussian `G`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> HermitianOperator {
    let g = random_complex(rng, d, rank);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    HermitianOperator::hermitized(m.unscale(tr))
}

/// Random symmetric positive-definite matrix, eigenvalues in roughly `[0.2, 3]`.
pub fn random_weight<R: Rng + ?Sized>(rng: &mut R, q: usize) -> RMatrix {
    let g = random_real(rng, q, q);
    let m = &g * g.transpose() / (q as f64) + RMatrix::identity(q, q).scale(0.2);
    (&m + m.transpose()).scale(0.5)
}

/// PSD complex matrix of the given rank.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let g = random_complex(rng, n, rank);
    let m = &g * g.adjoint();
    (&m + m.adjoint()).scale(0.5)
}

/// Traceless Hermitian derivative compatible with a (possibly
/// rank-deficient) `rho`: its kernel-kernel block vanishes.
pub fn random_tangent<R: Rng + ?Sized>(
    rng: &mut R,
    rho: &HermitianOperator,
    kernel_projector: &CMatrix,
) -> HermitianOperator {
    let h = random_hermitian(rng, rho.dim());
    let inside = h.matrix() - kernel_projector * h.matrix() * kernel_projector;
    let tr = inside.trace().re;
    HermitianOperator::hermitized(inside - rho.matrix().scale(tr))
}

/// Recipe for [`random_model`].
#[derive(Clone, Debug, PartialEq)]
pub struct RandomModelSpec {
    pub dim: usize,
    pub params: usize,
    pub targets: usize,
    /// Rank of `rho`; `None` means full rank.
    pub rank: Option<usize>,
    /// Number of derivatives that are linear combinations of the others,
    /// which makes the QFIM singular.
    pub redundant: usize,
    /// Random positive-definite weight instead of the identity.
    pub random_weight: bool,
}

impl RandomModelSpec {
    pub fn full_rank(dim: usize, params: usize, targets: usize) -> Self {
        Self {
            dim,
            params,
            targets,
            rank: None,
            redundant: 0,
            random_weight: true,
        }
    }
}

/// Draws a valid, feasible model following `spec`.
///
/// With `redundant > 0` the columns of `dbeta` are projected onto the range
/// of the QFIM so the estimation problem stays feasible.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, spec: &RandomModelSpec) -> Result<QuantumModel> {
    let d = spec.dim;
    let rank = spec.rank.unwrap_or(d);
    if d < 1 || rank < 1 || rank > d {
        return Err(Error::InvalidArgument(format!("invalid dimension {d} / rank {rank}")));
    }
    let independent = spec
        .params
        .checked_sub(spec.redundant)
        .filter(|&n| n >= 1)
        .ok_or_else(|| Error::InvalidArgument("need at least one independent parameter".into()))?;
    let tangent_dim = d * d - (d - rank) * (d - rank) - 1;
    if independent > tangent_dim {
        return Err(Error::InvalidArgument(format!(
            "{independent} independent derivatives exceed the {tangent_dim}-dimensional tangent space"
        )));
    }
    if spec.targets < 1 || spec.targets > independent {
        return Err(Error::InvalidArgument(format!(
            "q = {} must lie in 1..={independent}",
            spec.targets
        )));
    }

    let rho = random_density(rng, d, rank);
    let (values, vectors) = rho.eigh();
    let cutoff = DEFAULT_RANK_TOL * values[d - 1];
    let mut kernel = CMatrix::zeros(d, d);
    for i in (0..d).filter(|&i| values[i] <= cutoff) {
        let v = vectors.column(i);
        kernel += &v * v.adjoint();
    }

    let mut drho: Vec<HermitianOperator> =
        (0..independent).map(|_| random_tangent(rng, &rho, &kernel)).collect();
    // Kernel directions of the QFIM: (c, -e_k) for each redundant derivative.
    let mut null_dirs = RMatrix::zeros(spec.params, spec.redundant);
    for k in 0..spec.redundant {
        let coeffs = DVector::from_fn(independent, |_, _| normal(rng));
        let mut acc = CMatrix::zeros(d, d);
        for (j, op) in drho.iter().take(independent).enumerate() {
            acc += op.matrix().scale(coeffs[j]);
            null_dirs[(j, k)] = coeffs[j];
        }
        null_dirs[(independent + k, k)] = -1.0;
        drho.push(HermitianOperator::hermitized(acc));
    }

    let raw = random_real(rng, spec.params, spec.targets);
    let dbeta = if spec.redundant > 0 {
        let gram = null_dirs.transpose() * &null_dirs;
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::Singular("redundancy directions".into()))?;
        let projector = RMatrix::identity(spec.params, spec.params)
            - &null_dirs * gram_inv * null_dirs.transpose();
        projector * raw
    } else {
        raw
    };
    let weight = spec.random_weight.then(|| random_weight(rng, spec.targets));
    QuantumModel::new(
        rho,
        OperatorVector::new(drho)?,
        dbeta,
        weight,
        format!(
            "random d={d} p={} q={} rank={rank} redundant={}",
            spec.params, spec.targets, spec.redundant
        ),
    )
}

/// A random POVM with `n` outcomes: `M_x = S^{-1/2} A_x S^{-1/2}` with
/// random PSD `A_x` and `S = sum_x A_x`.
pub fn random_povm_elements<R: Rng + ?Sized>(
    rng: &mut R,
    d: usize,
    n: usize,
    element_rank: usize,
) -> Vec<HermitianOperator> {
    let raw: Vec<CMatrix> = (0..n).map(|_| random_psd(rng, d, element_rank)).collect();
    let total = raw.iter().fold(CMatrix::zeros(d, d), |acc, a| acc + a);
    let inv_sqrt = linalg::hermitian_function(&total, |x| 1.0 / x.sqrt());
    raw.iter()
        .map(|a| HermitianOperator::hermitized(&inv_sqrt * a * &inv_sqrt))
        .collect()
}

/// Random passive (orthogonal symplectic) transformation: phase rotations
/// and beam splitters.
fn random_passive<R: Rng + ?Sized>(rng: &mut R, k: usize) -> RMatrix {
    let n = 2 * k;
    let mut out = RMatrix::identity(n, n);
    for _ in 0..(2 * k) {
        for mode in 0..k {
            let (s, c) = (2.0 * std::f64::consts::PI * rng.random::<f64>()).sin_cos();
            let mut rot = RMatrix::identity(n, n);
            let (a, b) = (2 * mode, 2 * mode + 1);
            rot[(a, a)] = c;
            rot[(a, b)] = -s;
            rot[(b, a)] = s;
            rot[(b, b)] = c;
            out = rot * out;
        }
        if k > 1 {
            let i = rng.random_range(0..k);
            let j = (i + 1 + rng.random_range(0..k - 1)) % k;
            let (s, c) = (std::f64::consts::PI * rng.random::<f64>()).sin_cos();
            let mut bs = RMatrix::identity(n, n);
            for quad in 0..2 {
                let (a, b) = (2 * i + quad, 2 * j + quad);
                bs[(a, a)] = c;
                bs[(b, b)] = c;
                bs[(a, b)] = s;
                bs[(b, a)] = -s;
            }
            out = bs * out;
        }
    }
    out
}

/// Random physical covariance matrix on `k` modes (`sigma >= i Omega`),
/// `O1 Z O2 diag(nu) O2^T Z O1^T` with passive `O1`, `O2`, single-mode
/// squeezing `Z` (`|r| <= 1`) and thermal `nu`, plus optional classical noise.
pub fn random_covariance<R: Rng + ?Sized>(rng: &mut R, k: usize) -> RMatrix {
    let n = 2 * k;
    let mut squeeze = RMatrix::identity(n, n);
    for mode in 0..k {
        let r = rng.random_range(-1.0..1.0);
        squeeze[(2 * mode, 2 * mode)] = f64::exp(r);
        squeeze[(2 * mode + 1, 2 * mode + 1)] = f64::exp(-r);
    }
    let symplectic = random_passive(rng, k) * squeeze * random_passive(rng, k);
    let mut thermal = RMatrix::zeros(n, n);
    for mode in 0..k {
        let nu = 1.0 + 2.0 * rng.random::<f64>();
        thermal[(2 * mode, 2 * mode)] = nu;
        thermal[(2 * mode + 1, 2 * mode + 1)] = nu;
    }
    let mut cm = &symplectic * thermal * symplectic.transpose();
    if rng.random::<f64>() < 0.5 {
        let g = random_real(rng, n, n);
        cm += &g * g.transpose() * 0.1;
    }
    (&cm + cm.transpose()).scale(0.5)
}
