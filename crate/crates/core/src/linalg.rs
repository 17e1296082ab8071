//! Small dense symmetric matrices over ℝ and ℂ.
//!
//! Symmetric matrices are stored as their packed upper triangle (row-major,
//! `j <= k`), so symmetry holds by construction. Dense `nalgebra` matrices are
//! materialized on demand for products, solves and eigenvalue problems.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance used when validating symmetry or orthogonality of dense input.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Number of independent entries of an `n x n` symmetric matrix.
pub const fn packed_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Offset of entry `(j, k)` in the packed upper triangle.
#[inline]
pub fn packed_index(n: usize, j: usize, k: usize) -> usize {
    let (j, k) = if j <= k { (j, k) } else { (k, j) };
    j * (2 * n - j + 1) / 2 + (k - j)
}

/// Iterates `(j, k)` with `j <= k` in packed order.
pub fn packed_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |j| (j..n).map(move |k| (j, k)))
}

fn tol_for(scale: f64) -> f64 {
    SYMMETRY_TOL * scale.max(1.0)
}

/// A complex symmetric matrix `Z = Zᵀ`. Serializes as rows of `[re, im]` pairs.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<C64>>", into = "Vec<Vec<C64>>")]
pub struct ComplexSymMatrix {
    n: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexSymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexSymMatrix({}) {:?}", self.n, self.data)
    }
}

impl ComplexSymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); packed_len(n)] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, C64::new(1.0, 0.0))
    }

    pub fn scaled_identity(n: usize, c: C64) -> Self {
        Self::from_fn(n, |j, k| if j == k { c } else { C64::new(0.0, 0.0) })
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        Self::from_fn(diag.len(), |j, k| if j == k { diag[j] } else { C64::new(0.0, 0.0) })
    }

    /// Builds the matrix from a function evaluated on the upper triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let data = packed_pairs(n).map(|(j, k)| f(j, k)).collect();
        Self { n, data }
    }

    pub fn from_packed(n: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != packed_len(n) {
            return Err(Error::invalid(format!("packed data of length {} does not match n = {n}", data.len())));
        }
        Ok(Self { n, data })
    }

    /// Validates symmetry of a dense matrix and packs it.
    pub fn from_dense(m: &DMatrix<C64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let n = m.nrows();
        for j in 0..n {
            for k in (j + 1)..n {
                if (m[(j, k)] - m[(k, j)]).norm() > tol_for(scale) {
                    return Err(Error::invalid(format!("matrix is not symmetric at ({j}, {k})")));
                }
            }
        }
        Ok(Self::from_dense_upper(m))
    }

    /// Packs the upper triangle of a square matrix without checking the lower one.
    pub fn from_dense_upper(m: &DMatrix<C64>) -> Self {
        Self::from_fn(m.nrows(), |j, k| m[(j, k)])
    }

    pub fn from_parts(re: &RealSymMatrix, im: &RealSymMatrix) -> Result<Self> {
        if re.n() != im.n() {
            return Err(Error::invalid("real and imaginary parts differ in dimension"));
        }
        let data = re.packed().iter().zip(im.packed()).map(|(&a, &b)| C64::new(a, b)).collect();
        Ok(Self { n: re.n(), data })
    }

    /// Interprets `coords` as interleaved `(Re, Im)` pairs of the packed entries.
    pub fn from_real_coords(n: usize, coords: &[f64]) -> Result<Self> {
        if coords.len() != 2 * packed_len(n) {
            return Err(Error::invalid("coordinate vector has the wrong length"));
        }
        let data = coords.chunks_exact(2).map(|p| C64::new(p[0], p[1])).collect();
        Ok(Self { n, data })
    }

    pub fn real_coords(&self) -> Vec<f64> {
        self.data.iter().flat_map(|z| [z.re, z.im]).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn packed(&self) -> &[C64] {
        &self.data
    }

    pub fn get(&self, j: usize, k: usize) -> C64 {
        self.data[packed_index(self.n, j, k)]
    }

    pub fn set(&mut self, j: usize, k: usize, v: C64) {
        let idx = packed_index(self.n, j, k);
        self.data[idx] = v;
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |j, k| self.get(j, k))
    }

    pub fn re(&self) -> RealSymMatrix {
        RealSymMatrix { n: self.n, data: self.data.iter().map(|z| z.re).collect() }
    }

    pub fn im(&self) -> RealSymMatrix {
        RealSymMatrix { n: self.n, data: self.data.iter().map(|z| z.im).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|j| self.get(j, j)).sum()
    }

    /// `A Z Aᵀ` for a square (complex) matrix `A`.
    pub fn congruence(&self, a: &DMatrix<C64>) -> Self {
        let m = a * self.to_dense() * a.transpose();
        Self::from_dense_upper(&m)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Add for &ComplexSymMatrix {
    type Output = ComplexSymMatrix;
    fn add(self, rhs: Self) -> ComplexSymMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        ComplexSymMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &ComplexSymMatrix {
    type Output = ComplexSymMatrix;
    fn sub(self, rhs: Self) -> ComplexSymMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        ComplexSymMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &ComplexSymMatrix {
    type Output = ComplexSymMatrix;
    fn neg(self) -> ComplexSymMatrix {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul<C64> for &ComplexSymMatrix {
    type Output = ComplexSymMatrix;
    fn mul(self, rhs: C64) -> ComplexSymMatrix {
        self.scale(rhs)
    }
}

/// A real symmetric matrix. Serializes as a list of rows.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct RealSymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl fmt::Debug for RealSymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealSymMatrix({}) {:?}", self.n, self.data)
    }
}

impl RealSymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; packed_len(n)] }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        Self::from_fn(n, |j, k| if j == k { c } else { 0.0 })
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |j, k| if j == k { diag[j] } else { 0.0 })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let data = packed_pairs(n).map(|(j, k)| f(j, k)).collect();
        Self { n, data }
    }

    pub fn from_packed(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != packed_len(n) {
            return Err(Error::invalid(format!("packed data of length {} does not match n = {n}", data.len())));
        }
        Ok(Self { n, data })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!("matrix is {}x{}, not square", m.nrows(), m.ncols())));
        }
        let scale = m.amax();
        let n = m.nrows();
        for j in 0..n {
            for k in (j + 1)..n {
                if (m[(j, k)] - m[(k, j)]).abs() > tol_for(scale) {
                    return Err(Error::invalid(format!("matrix is not symmetric at ({j}, {k})")));
                }
            }
        }
        Ok(Self::from_dense_upper(m))
    }

    pub fn from_dense_upper(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), |j, k| m[(j, k)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.data[packed_index(self.n, j, k)]
    }

    pub fn set(&mut self, j: usize, k: usize, v: f64) {
        let idx = packed_index(self.n, j, k);
        self.data[idx] = v;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |j, k| self.get(j, k))
    }

    pub fn to_complex(&self) -> ComplexSymMatrix {
        ComplexSymMatrix { n: self.n, data: self.data.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|j| self.get(j, j)).sum()
    }

    pub fn determinant(&self) -> f64 {
        match self.n {
            1 => self.data[0],
            2 => self.data[0] * self.data[2] - self.data[1] * self.data[1],
            _ => self.to_dense().determinant(),
        }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = match self.n {
            1 => vec![self.data[0]],
            _ => self.to_dense().symmetric_eigenvalues().iter().copied().collect(),
        };
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(f64::NAN)
    }

    pub fn is_posdef(&self) -> bool {
        self.min_eigenvalue() > 0.0
    }

    /// Applies `g` to the eigenvalues: `Q g(Λ) Qᵀ`.
    pub fn map_eigenvalues(&self, g: impl Fn(f64) -> f64) -> Self {
        if self.n == 1 {
            return Self { n: 1, data: vec![g(self.data[0])] };
        }
        let eig = self.to_dense().symmetric_eigen();
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(&g));
        let m = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        Self::from_dense_upper(&m)
    }

    /// Principal square root; negative rounding noise in the spectrum is clamped to zero.
    pub fn sqrt(&self) -> Self {
        self.map_eigenvalues(|x| x.max(0.0).sqrt())
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = match self.n {
            1 => {
                if self.data[0] == 0.0 {
                    None
                } else {
                    Some(Self { n: 1, data: vec![1.0 / self.data[0]] })
                }
            }
            _ => self.to_dense().try_inverse().map(|m| Self::from_dense_upper(&m)),
        };
        inv.ok_or_else(|| Error::numerical("singular symmetric matrix"))
    }

    /// `A S Aᵀ`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Self {
        let m = a * self.to_dense() * a.transpose();
        Self::from_dense_upper(&m)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Add for &RealSymMatrix {
    type Output = RealSymMatrix;
    fn add(self, rhs: Self) -> RealSymMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        RealSymMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &RealSymMatrix {
    type Output = RealSymMatrix;
    fn sub(self, rhs: Self) -> RealSymMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        RealSymMatrix { n: self.n, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

/// A real symmetric matrix with strictly positive spectrum (an element of the cone Ωₙ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosDefMatrix(RealSymMatrix);

impl PosDefMatrix {
    pub fn new(m: RealSymMatrix) -> Result<Self> {
        let min = m.min_eigenvalue();
        if min > 0.0 {
            Ok(Self(m))
        } else {
            Err(Error::domain(format!("matrix is not positive definite (smallest eigenvalue {min:e})")))
        }
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(RealSymMatrix::diagonal(diag))
    }

    pub fn as_sym(&self) -> &RealSymMatrix {
        &self.0
    }

    pub fn into_inner(self) -> RealSymMatrix {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn sqrt(&self) -> RealSymMatrix {
        self.0.sqrt()
    }

    pub fn inv_sqrt(&self) -> RealSymMatrix {
        self.0.map_eigenvalues(|x| 1.0 / x.sqrt())
    }
}

/// A real orthogonal matrix, `AᵀA = I` within [`SYMMETRY_TOL`].
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalMatrix(DMatrix<f64>);

impl OrthogonalMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("orthogonal matrix must be square"));
        }
        let n = m.nrows();
        let defect = (m.transpose() * &m - DMatrix::<f64>::identity(n, n)).amax();
        if defect > SYMMETRY_TOL {
            return Err(Error::invalid(format!("matrix is not orthogonal (defect {defect:e})")));
        }
        Ok(Self(m))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.n();
        (self.0.transpose() * &self.0 - DMatrix::<f64>::identity(n, n)).amax()
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }
}

fn check_square<T: nalgebra::Scalar>(m: &DMatrix<T>) -> Result<()> {
    if m.is_square() && m.nrows() > 0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("expected a non-empty square matrix, got {}x{}", m.nrows(), m.ncols())))
    }
}

/// Eigenvalues (ascending) of a Hermitian matrix, after validating Hermitian symmetry.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    check_square(m)?;
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let n = m.nrows();
    for j in 0..n {
        for k in j..n {
            if (m[(j, k)] - m[(k, j)].conj()).norm() > tol_for(scale) {
                return Err(Error::invalid(format!("matrix is not Hermitian at ({j}, {k})")));
            }
        }
    }
    Ok(hermitian_eigenvalues_unchecked(m))
}

/// Eigenvalues (ascending) of the Hermitian part `(M + M*)/2`.
pub(crate) fn hermitian_eigenvalues_unchecked(m: &DMatrix<C64>) -> Vec<f64> {
    let n = m.nrows();
    let mut ev: Vec<f64> = if n == 1 {
        vec![m[(0, 0)].re]
    } else if n == 2 {
        let a = m[(0, 0)].re;
        let d = m[(1, 1)].re;
        let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        vec![mean - r, mean + r]
    } else {
        let h = (m + m.adjoint()).map(|z| z * 0.5);
        h.symmetric_eigenvalues().iter().copied().collect()
    };
    ev.sort_by(f64::total_cmp);
    ev
}

/// Positive-definiteness of a Hermitian matrix: every eigenvalue strictly positive.
pub fn posdef_check(m: &DMatrix<C64>) -> Result<bool> {
    Ok(hermitian_eigenvalues(m)?.first().is_some_and(|&e| e > 0.0))
}

/// Positive-definiteness of a real symmetric matrix given densely.
pub fn posdef_check_real(m: &DMatrix<f64>) -> Result<bool> {
    check_square(m)?;
    Ok(RealSymMatrix::from_dense(m)?.is_posdef())
}

/// Determinant of the leading `j x j` block of `z` (1-based `j`).
pub fn principal_minor_det(j: usize, z: &ComplexSymMatrix) -> Result<C64> {
    let n = z.n();
    if j == 0 || j > n {
        return Err(Error::invalid(format!("principal minor index {j} outside 1..={n}")));
    }
    Ok(match j {
        1 => z.get(0, 0),
        2 => z.get(0, 0) * z.get(1, 1) - z.get(0, 1) * z.get(0, 1),
        _ => DMatrix::from_fn(j, j, |a, b| z.get(a, b)).determinant(),
    })
}

/// Real counterpart of [`principal_minor_det`].
pub fn principal_minor_det_real(j: usize, x: &RealSymMatrix) -> Result<f64> {
    let n = x.n();
    if j == 0 || j > n {
        return Err(Error::invalid(format!("principal minor index {j} outside 1..={n}")));
    }
    Ok(match j {
        1 => x.get(0, 0),
        2 => x.get(0, 0) * x.get(1, 1) - x.get(0, 1) * x.get(0, 1),
        _ => DMatrix::from_fn(j, j, |a, b| x.get(a, b)).determinant(),
    })
}

pub(crate) fn identity_c(n: usize) -> DMatrix<C64> {
    DMatrix::identity(n, n)
}

pub(crate) fn inverse_c(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if m.nrows() == 1 {
        let d = m[(0, 0)];
        return if d == C64::new(0.0, 0.0) {
            Err(Error::numerical("singular 1x1 matrix"))
        } else {
            Ok(DMatrix::from_element(1, 1, d.inv()))
        };
    }
    m.clone().try_inverse().ok_or_else(|| Error::numerical("singular complex matrix"))
}

pub(crate) fn real_to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

/// Eigenvalues of a general complex matrix (any order).
pub(crate) fn complex_eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = m.nrows();
    match n {
        1 => Ok(vec![m[(0, 0)]]),
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (tr * tr * 0.25 - det).sqrt();
            let half = tr * 0.5;
            // Pick the larger root first and recover the other from the product for accuracy.
            let l1 = if (half + disc).norm() >= (half - disc).norm() { half + disc } else { half - disc };
            let l2 = if l1.norm() > 0.0 { det / l1 } else { half - disc };
            Ok(vec![l1, l2])
        }
        _ => {
            let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-15, 10_000)
                .ok_or_else(|| Error::numerical("Schur decomposition did not converge"))?;
            let (_, t) = schur.unpack();
            Ok((0..n).map(|j| t[(j, j)]).collect())
        }
    }
}

/// `log det M` on the branch that sums principal logarithms of the eigenvalues.
///
/// Requires every eigenvalue to lie in the open right half-plane. On that set the
/// branch is holomorphic and real on positive definite Hermitian matrices.
pub(crate) fn log_det_right_half_plane(m: &DMatrix<C64>) -> Result<C64> {
    let ev = complex_eigenvalues(m)?;
    let mut acc = C64::new(0.0, 0.0);
    for (idx, mu) in ev.iter().enumerate() {
        if !(mu.re > 0.0) {
            return Err(Error::numerical(format!(
                "eigenvalue {idx} = {mu} of the determinant argument left the right half-plane; \
                 the power cannot be continued from the diagonal"
            )));
        }
        acc += mu.ln();
    }
    Ok(acc)
}

fn rows_to_dense<T: nalgebra::Scalar + Copy>(rows: &[Vec<T>]) -> Result<DMatrix<T>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("matrix rows must form a non-empty square array"));
    }
    Ok(DMatrix::from_fn(n, n, |j, k| rows[j][k]))
}

impl TryFrom<Vec<Vec<C64>>> for ComplexSymMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<C64>>) -> Result<Self> {
        ComplexSymMatrix::from_dense(&rows_to_dense(&rows)?)
    }
}

impl From<ComplexSymMatrix> for Vec<Vec<C64>> {
    fn from(m: ComplexSymMatrix) -> Self {
        (0..m.n).map(|j| (0..m.n).map(|k| m.get(j, k)).collect()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for RealSymMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        RealSymMatrix::from_dense(&rows_to_dense(&rows)?)
    }
}

impl From<RealSymMatrix> for Vec<Vec<f64>> {
    fn from(m: RealSymMatrix) -> Self {
        (0..m.n).map(|j| (0..m.n).map(|k| m.get(j, k)).collect()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn packed_layout_is_row_major_upper() {
        let n = 4;
        let idx: Vec<usize> = packed_pairs(n).map(|(j, k)| packed_index(n, j, k)).collect();
        assert_eq!(idx, (0..packed_len(n)).collect::<Vec<_>>());
        assert_eq!(packed_index(n, 2, 1), packed_index(n, 1, 2));
    }

    #[test]
    fn posdef_examples() {
        assert!(posdef_check(&identity_c(3)).unwrap());
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(!posdef_check(&m).unwrap());

        let z = ComplexSymMatrix::diagonal(&[c(0.5, 0.0), c(0.0, 0.9)]);
        let zd = z.to_dense();
        let h = identity_c(2) - &zd * zd.map(|v| v.conj());
        let ev = hermitian_eigenvalues(&h).unwrap();
        assert!((ev[0] - 0.19).abs() < 1e-14 && (ev[1] - 0.75).abs() < 1e-14);
        assert!(posdef_check(&h).unwrap());
    }

    #[test]
    fn posdef_rejects_malformed() {
        let rect = DMatrix::<C64>::zeros(2, 3);
        assert!(matches!(posdef_check(&rect), Err(Error::InvalidInput(_))));
        let asym = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(posdef_check(&asym), Err(Error::InvalidInput(_))));
        let asym_real = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(posdef_check_real(&asym_real).is_err());
    }

    #[test]
    fn boundary_is_not_positive() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(!posdef_check_real(&m).unwrap());
    }

    #[test]
    fn principal_minors() {
        let mut z = ComplexSymMatrix::identity(3);
        z.set(0, 0, c(2.0, 1.0));
        assert_eq!(principal_minor_det(1, &z).unwrap(), c(2.0, 1.0));
        assert_eq!(principal_minor_det(3, &ComplexSymMatrix::identity(3)).unwrap(), c(1.0, 0.0));
        let m = ComplexSymMatrix::from_fn(2, |j, k| if j == k { c(1.0, 0.0) } else { c(2.0, 0.0) });
        assert_eq!(principal_minor_det(2, &m).unwrap(), c(-3.0, 0.0));
        assert!(principal_minor_det(0, &m).is_err());
        assert!(principal_minor_det(3, &m).is_err());
    }

    #[test]
    fn complex_eigenvalues_match_schur_path() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[
                c(2.0, 1.0),
                c(0.3, -0.2),
                c(0.1, 0.0),
                c(0.3, -0.2),
                c(1.0, 0.5),
                c(0.0, 0.4),
                c(0.1, 0.0),
                c(0.0, 0.4),
                c(3.0, -1.0),
            ],
        );
        let ev = complex_eigenvalues(&m).unwrap();
        let prod: C64 = ev.iter().product();
        let sum: C64 = ev.iter().sum();
        assert!((prod - m.determinant()).norm() < 1e-12);
        assert!((sum - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn log_det_branch_is_continuous_past_pi() {
        // Two eigenvalues with argument 0.6π each: the principal log of the product
        // would wrap, the eigenvalue sum does not.
        let e = C64::from_polar(1.0, 0.3 * std::f64::consts::PI);
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![e * e.conj() * C64::new(0.1, 1.0), e]));
        let l = log_det_right_half_plane(&m).unwrap();
        assert!((l.exp() - m.determinant()).norm() < 1e-12);
    }

    #[test]
    fn sqrt_and_inverse() {
        let x = RealSymMatrix::from_packed(2, vec![2.0, 0.5, 1.0]).unwrap();
        let r = x.sqrt();
        let back = RealSymMatrix::from_dense_upper(&(r.to_dense() * r.to_dense()));
        assert!(back.max_abs_diff(&x) < 1e-14);
        let inv = x.inverse().unwrap();
        let id = inv.to_dense() * x.to_dense();
        assert!((id - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn serde_rows() {
        let m = RealSymMatrix::from_packed(2, vec![1.0, 2.0, 3.0]).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(text, "[[1.0,2.0],[2.0,3.0]]");
        assert_eq!(serde_json::from_str::<RealSymMatrix>(&text).unwrap(), m);
        assert!(serde_json::from_str::<RealSymMatrix>("[[1.0,2.0],[0.0,3.0]]").is_err());
        assert!(serde_json::from_str::<RealSymMatrix>("[[1.0,2.0]]").is_err());
        let z: ComplexSymMatrix = serde_json::from_str("[[[0.0,1.0]]]").unwrap();
        assert_eq!(z.get(0, 0), C64::new(0.0, 1.0));
    }
}
