//! Dense complex/real matrix algebra for finite-dimensional quantum models.
//!
//! Everything here works on small dense matrices (dimension up to a few
//! dozen). Hermitian operators are stored as [`CMatrix`]; real symmetric
//! matrices (QFIM, weight, covariances) as [`RMatrix`].

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Relative hermiticity tolerance (relative to the max-abs entry).
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Relative PSD tolerance: eigenvalues down to `-PSD_TOL * trace` are accepted.
pub const PSD_TOL: f64 = 1e-8;
/// Default relative spectral cutoff for pseudoinverses and ranks.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// A complex Hermitian `d x d` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
}

impl HermitianOperator {
    /// Checks squareness and hermiticity (relative tolerance [`HERMITICITY_TOL`]).
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let deviation = hermiticity_deviation(&entries);
        let scale = max_abs(&entries).max(f64::MIN_POSITIVE);
        if deviation > HERMITICITY_TOL * scale {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::hermitized(entries))
    }

    /// Projects a square matrix onto its Hermitian part `(A + A^dagger)/2`.
    ///
    /// Used for operators produced by our own arithmetic, where the
    /// asymmetry is pure roundoff.
    pub fn hermitized(entries: CMatrix) -> Self {
        assert_eq!(entries.nrows(), entries.ncols(), "operator must be square");
        let adj = entries.adjoint();
        Self {
            entries: (entries + adj).scale(0.5),
        }
    }

    pub fn from_real(m: &RMatrix) -> Result<Self> {
        Self::new(m.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.scale(factor),
        }
    }

    /// Eigenvalues in ascending order and the matching eigenvectors.
    pub fn eigh(&self) -> (DVector<f64>, CMatrix) {
        eigh(&self.entries)
    }

    /// `Tr(self * other)`, real for Hermitian arguments.
    pub fn trace_product(&self, other: &HermitianOperator) -> f64 {
        trace_product(&self.entries, &other.entries).re
    }
}

/// Ordered list of Hermitian operators sharing one dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorVector {
    ops: Vec<HermitianOperator>,
}

impl OperatorVector {
    pub fn new(ops: Vec<HermitianOperator>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::InvalidArgument("operator vector must be non-empty".into()))?;
        let dim = first.dim();
        if let Some((i, op)) = ops.iter().enumerate().find(|(_, op)| op.dim() != dim) {
            return Err(Error::DimensionMismatch(format!(
                "operator {i} has dimension {} but operator 0 has {dim}",
                op.dim()
            )));
        }
        Ok(Self { ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].dim()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, HermitianOperator> {
        self.ops.iter()
    }

    pub fn as_slice(&self) -> &[HermitianOperator] {
        &self.ops
    }

    pub fn into_vec(self) -> Vec<HermitianOperator> {
        self.ops
    }

    /// Real linear combinations `Y_s = sum_j coeffs[(j, s)] X_j`, i.e. `coeffs^T X`.
    pub fn combine(&self, coeffs: &RMatrix) -> Result<OperatorVector> {
        if coeffs.nrows() != self.len() || coeffs.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "coefficient matrix is {}x{} but the vector has {} operators",
                coeffs.nrows(),
                coeffs.ncols(),
                self.len()
            )));
        }
        let d = self.dim();
        let ops = (0..coeffs.ncols())
            .map(|s| {
                let mut acc = CMatrix::zeros(d, d);
                for (j, op) in self.ops.iter().enumerate() {
                    let c = coeffs[(j, s)];
                    if c != 0.0 {
                        acc += op.matrix().scale(c);
                    }
                }
                HermitianOperator::hermitized(acc)
            })
            .collect();
        Ok(Self { ops })
    }
}

impl std::ops::Index<usize> for OperatorVector {
    type Output = HermitianOperator;

    fn index(&self, i: usize) -> &HermitianOperator {
        &self.ops[i]
    }
}

impl<'a> IntoIterator for &'a OperatorVector {
    type Item = &'a HermitianOperator;
    type IntoIter = std::slice::Iter<'a, HermitianOperator>;

    fn into_iter(self) -> Self::IntoIter {
        self.ops.iter()
    }
}

pub fn pauli_x() -> HermitianOperator {
    HermitianOperator::hermitized(CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]))
}

pub fn pauli_y() -> HermitianOperator {
    HermitianOperator::hermitized(CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]))
}

pub fn pauli_z() -> HermitianOperator {
    HermitianOperator::hermitized(CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]))
}

pub fn max_abs<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|x| x.clone().modulus()).fold(0.0, f64::max)
}

pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn symmetry_deviation(m: &RMatrix) -> f64 {
    max_abs(&(m - m.transpose()))
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Hilbert-Schmidt inner product `Re Tr(A^dagger B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
pub fn eigh(m: &CMatrix) -> (DVector<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), CMatrix::zeros(0, 0));
    }
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Real symmetric eigendecomposition with eigenvalues sorted ascending.
pub fn eigh_real(m: &RMatrix) -> (DVector<f64>, RMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), RMatrix::zeros(0, 0));
    }
    let sym = (m + m.transpose()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = RMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let (values, _) = eigh(m);
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn min_eigenvalue_real(m: &RMatrix) -> f64 {
    let (values, _) = eigh_real(m);
    values.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Applies `f` to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    let scaled = CMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| {
        vectors[(i, j)] * f(values[j])
    });
    let out = scaled * vectors.adjoint();
    (&out + out.adjoint()).scale(0.5)
}

/// Applies `f` to the spectrum of a real symmetric matrix.
pub fn symmetric_function(m: &RMatrix, f: impl Fn(f64) -> f64) -> RMatrix {
    let (values, vectors) = eigh_real(m);
    let scaled = RMatrix::from_fn(vectors.nrows(), vectors.ncols(), |i, j| {
        vectors[(i, j)] * f(values[j])
    });
    let out = scaled * vectors.transpose();
    (&out + out.transpose()).scale(0.5)
}

/// Spectral square root of a symmetric PSD matrix, negative eigenvalues clipped to 0.
pub fn psd_sqrt(m: &RMatrix) -> RMatrix {
    symmetric_function(m, |x| x.max(0.0).sqrt())
}

pub fn psd_sqrt_complex(m: &CMatrix) -> CMatrix {
    hermitian_function(m, |x| x.max(0.0).sqrt())
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn real_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMatrix) -> RMatrix {
    m.map(|z| z.im)
}

/// Checks that `m` is real symmetric PSD with eigenvalues above `-PSD_TOL * max(trace, 1)`.
pub fn ensure_symmetric_psd(m: &RMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let deviation = symmetry_deviation(m);
    if deviation > 1e-10 * max_abs(m).max(1.0) {
        return Err(Error::NotSymmetric { deviation });
    }
    let min_eigenvalue = min_eigenvalue_real(m);
    if min_eigenvalue < -PSD_TOL * m.trace().abs().max(1.0) {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
    }
    Ok(())
}

/// `(A B + B A) / 2`.
pub fn jordan_product(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "jordan product of {}x{0} and {}x{1} operators",
            a.dim(),
            b.dim()
        )));
    }
    let ab = a.matrix() * b.matrix();
    let ba = b.matrix() * a.matrix();
    Ok(HermitianOperator::hermitized((ab + ba).scale(0.5)))
}

fn check_operands(x: &OperatorVector, rho: &HermitianOperator) -> Result<()> {
    if x.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operators have dimension {} but rho has {}",
            x.dim(),
            rho.dim()
        )));
    }
    Ok(())
}

/// SLD inner product `Tr rho sum_s X_s o Y_s`.
pub fn sld_inner(x: &OperatorVector, y: &OperatorVector, rho: &HermitianOperator) -> Result<f64> {
    check_operands(x, rho)?;
    check_operands(y, rho)?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "operator vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    // Tr rho (XY + YX)/2 = Re Tr(rho X Y) for Hermitian rho, X, Y.
    Ok(x.iter()
        .zip(y.iter())
        .map(|(xs, ys)| {
            let rx = rho.matrix() * xs.matrix();
            trace_product(&rx, ys.matrix()).re
        })
        .sum())
}

/// Complex covariance `Z_st = Tr rho X_s X_t`; Hermitian PSD.
pub fn z_matrix(x: &OperatorVector, rho: &HermitianOperator) -> Result<CMatrix> {
    check_operands(x, rho)?;
    let q = x.len();
    let rx: Vec<CMatrix> = x.iter().map(|xs| rho.matrix() * xs.matrix()).collect();
    let z = CMatrix::from_fn(q, q, |s, t| trace_product(&rx[s], x[t].matrix()));
    Ok((&z + z.adjoint()).scale(0.5))
}

/// Real covariance `V = Re Z`.
pub fn v_matrix(x: &OperatorVector, rho: &HermitianOperator) -> Result<RMatrix> {
    Ok(real_part(&z_matrix(x, rho)?))
}

/// Sum of singular values.
pub fn trace_norm<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.clone().singular_values().sum()
}

/// Number of eigenvalues of a symmetric matrix above `rel_tol * max|lambda|`.
pub fn numerical_rank(m: &RMatrix, rel_tol: f64) -> usize {
    let (values, _) = eigh_real(m);
    let cutoff = rel_tol * values.amax();
    values.iter().filter(|v| v.abs() > cutoff && v.abs() > 0.0).count()
}

/// Moore-Penrose pseudoinverse of a real symmetric matrix by eigendecomposition.
///
/// Eigenvalues with `|lambda| <= rel_tol * max|lambda|` are treated as zero.
pub fn pseudoinverse(m: &RMatrix, rel_tol: f64) -> Result<RMatrix> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "pseudoinverse needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !(rel_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("rank tolerance must be positive, got {rel_tol}")));
    }
    let deviation = symmetry_deviation(m);
    if deviation > 1e-10 * max_abs(m).max(1.0) {
        return Err(Error::NotSymmetric { deviation });
    }
    let (values, _) = eigh_real(m);
    let cutoff = rel_tol * values.amax();
    Ok(symmetric_function(m, |x| {
        if x.abs() > cutoff && x != 0.0 {
            1.0 / x
        } else {
            0.0
        }
    }))
}

/// Orthonormal basis of the `d x d` Hermitian matrices under `Tr(A B)`.
///
/// Generalized Gell-Mann ordering: symmetric off-diagonal pairs `(j, k)`,
/// `j < k` in row-major order; antisymmetric pairs in the same order; the
/// `d - 1` diagonal generators; the scaled identity last.
pub fn hermitian_basis(d: usize) -> Result<Vec<HermitianOperator>> {
    if d < 1 {
        return Err(Error::InvalidArgument("basis dimension must be at least 1".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(h, 0.0);
            m[(k, j)] = Complex64::new(h, 0.0);
            basis.push(HermitianOperator::hermitized(m));
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMatrix::zeros(d, d);
            m[(j, k)] = Complex64::new(0.0, -h);
            m[(k, j)] = Complex64::new(0.0, h);
            basis.push(HermitianOperator::hermitized(m));
        }
    }
    for l in 1..d {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(d, d);
        for i in 0..l {
            m[(i, i)] = Complex64::new(norm, 0.0);
        }
        m[(l, l)] = Complex64::new(-(l as f64) * norm, 0.0);
        basis.push(HermitianOperator::hermitized(m));
    }
    basis.push(HermitianOperator::identity(d).scale(1.0 / (d as f64).sqrt()));
    Ok(basis)
}

/// `tr Re A - ||Im A||_1` for a Hermitian PSD matrix; nonnegative by the
/// Belavkin-Grishanin inequality.
pub fn belavkin_grishanin_gap(a: &CMatrix) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let deviation = hermiticity_deviation(a);
    if deviation > 1e-10 * max_abs(a).max(1.0) {
        return Err(Error::NotHermitian { deviation });
    }
    let min_eigenvalue = min_eigenvalue(a);
    let trace = a.trace().re;
    if min_eigenvalue < -PSD_TOL * trace.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue });
    }
    Ok(trace - trace_norm(&imag_part(a)))
}

/// Returns `(||sqrt(W) A sqrt(W)||_1, ||W A||_1)` for PSD `W` and skew-symmetric `A`.
pub fn weighted_tracenorm_check(w: &RMatrix, a: &RMatrix) -> Result<(f64, f64)> {
    if w.shape() != a.shape() {
        return Err(Error::DimensionMismatch(format!(
            "W is {}x{} but A is {}x{}",
            w.nrows(),
            w.ncols(),
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_symmetric_psd(w)?;
    let deviation = max_abs(&(a + a.transpose()));
    if deviation > 1e-10 * max_abs(a).max(1.0) {
        return Err(Error::NotSkewSymmetric { deviation });
    }
    let sqrt_w = psd_sqrt(w);
    let lhs = trace_norm(&(&sqrt_w * a * &sqrt_w));
    let rhs = trace_norm(&(w * a));
    Ok((lhs, rhs))
}

/// Orthonormal basis (columns) of the null space of `a`, from its SVD.
pub fn null_space(a: &RMatrix, rel_tol: f64) -> RMatrix {
    let n = a.ncols();
    if a.nrows() == 0 {
        return RMatrix::identity(n, n);
    }
    // Pad to at least n rows so the SVD yields a full set of right vectors.
    let padded = if a.nrows() < n {
        let mut p = RMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.amax();
    let cutoff = rel_tol * smax.max(f64::MIN_POSITIVE);
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= cutoff)
        .collect();
    let mut out = RMatrix::zeros(n, kept.len());
    for (c, &i) in kept.iter().enumerate() {
        out.set_column(c, &v_t.row(i).transpose());
    }
    out
}

/// Orthonormal basis (columns) of the row space of `a`.
pub fn row_space(a: &RMatrix, rel_tol: f64) -> RMatrix {
    row_space_above(a, rel_tol, 0.0)
}

/// Like [`row_space`], also dropping singular values at or below `abs_floor`.
pub fn row_space_above(a: &RMatrix, rel_tol: f64, abs_floor: f64) -> RMatrix {
    let n = a.ncols();
    if a.nrows() == 0 || n == 0 {
        return RMatrix::zeros(n, 0);
    }
    let padded = if a.nrows() < n {
        let mut p = RMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.amax();
    let cutoff = (rel_tol * smax).max(abs_floor);
    let kept: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > cutoff && svd.singular_values[i] > 0.0)
        .collect();
    let mut out = RMatrix::zeros(n, kept.len());
    for (c, &i) in kept.iter().enumerate() {
        out.set_column(c, &v_t.row(i).transpose());
    }
    out
}

/// Minimum-norm least-squares solution of `a x = b` (columns of `b` solved independently).
pub fn lstsq(a: &RMatrix, b: &RMatrix, rel_tol: f64) -> RMatrix {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.amax();
    let eps = rel_tol * smax.max(f64::MIN_POSITIVE);
    svd.solve(b, eps).expect("SVD computed with U and V")
}
