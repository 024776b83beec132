//! Dense complex and real linear algebra for small matrices.
//!
//! Everything here is sized for desk-scale problems (N up to a few dozen):
//! plain row-major storage, no blocking, no BLAS.

mod eigen;
mod expm;
mod lu;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;
use core::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{NumAssign, One, Zero};

use crate::error::{input_err, Result};

pub use eigen::{
    complex_schur, eigen_decompose, hermitian_eigen, EigenDecomposition, HermitianEigenSystem,
    SchurForm,
};
pub use expm::{expm, expm_skew};
pub use lu::Lu;

/// Complex double-precision scalar.
pub type C64 = Complex<f64>;
/// Column vector in `C^N`.
pub type ComplexVector = Vec<C64>;
/// Dense complex matrix, row-major.
pub type ComplexMatrix = Matrix<C64>;
/// Dense real matrix, row-major.
pub type RealMatrix = Matrix<f64>;

/// Relative tolerance used by the structural predicates.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// Field scalar accepted by [`Matrix`]: `f64` or [`C64`].
pub trait Scalar: Copy + Debug + PartialEq + NumAssign + Zero + One + Send + Sync + 'static {
    fn conj(self) -> Self;
    fn modulus(self) -> f64;
    fn modulus_sqr(self) -> f64;
    fn from_real(x: f64) -> Self;
    fn real(self) -> f64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn modulus(self) -> f64 {
        libm::fabs(self)
    }
    #[inline]
    fn modulus_sqr(self) -> f64 {
        self * self
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }
    #[inline]
    fn real(self) -> f64 {
        self
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for C64 {
    #[inline]
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    #[inline]
    fn modulus(self) -> f64 {
        libm::hypot(self.re, self.im)
    }
    #[inline]
    fn modulus_sqr(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn from_real(x: f64) -> Self {
        Complex::new(x, 0.0)
    }
    #[inline]
    fn real(self) -> f64 {
        self.re
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Dense row-major matrix over a [`Scalar`] field.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    /// Builds a matrix from row-major entries, rejecting empty shapes,
    /// length mismatches and non-finite values.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(input_err!("matrix shape {rows}x{cols} is empty"));
        }
        if rows * cols != data.len() {
            return Err(input_err!(
                "matrix shape {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            ));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(input_err!("non-finite matrix entry at ({}, {})", pos / cols, pos % cols));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(input_err!("ragged rows"));
        }
        Self::new(n_rows, n_cols, rows.iter().flatten().copied().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { T::zero() })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[T]) {
        assert_eq!(values.len(), self.rows);
        for (i, &v) in values.iter().enumerate() {
            self[(i, j)] = v;
        }
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x.modulus_sqr()).sum())
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].modulus()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.modulus()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * factor).collect() }
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product; panics on dimension mismatch.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).fold(T::zero(), |acc, (&a, &x)| acc + a * x))
            .collect()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub(crate) fn require_square(&self, what: &str) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(input_err!("{what} must be square, got {}x{}", self.rows, self.cols))
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    /// Real part of each entry.
    pub fn real_part(&self) -> RealMatrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.re).collect() }
    }

    /// Imaginary part of each entry.
    pub fn imag_part(&self) -> RealMatrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.im).collect() }
    }

    /// `(A + A*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + adj[(i, j)]) * 0.5)
    }

    pub fn has_real_entries(&self) -> bool {
        self.data.iter().all(|z| z.im == 0.0)
    }
}

impl RealMatrix {
    pub fn to_complex(&self) -> ComplexMatrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    /// `‖S + Sᵀ‖_F ≤ tol`, absolute.
    pub fn is_skew_symmetric(&self, tol: f64) -> bool {
        self.is_square() && self.add(&self.transpose()).frobenius_norm() <= tol
    }
}

// Complex elementary functions through `libm`. num-complex routes these
// through num-traits, whose backend flips to the platform libm whenever
// some crate in the build graph enables `num-traits/std`; results would
// then depend on what else is being compiled.

/// `|z|`.
pub fn cabs(z: C64) -> f64 {
    libm::hypot(z.re, z.im)
}

/// Principal argument in `(−π, π]`.
pub fn carg(z: C64) -> f64 {
    libm::atan2(z.im, z.re)
}

pub fn cexp(z: C64) -> C64 {
    let m = libm::exp(z.re);
    C64::new(m * libm::cos(z.im), m * libm::sin(z.im))
}

/// Principal logarithm.
pub fn cln(z: C64) -> C64 {
    C64::new(libm::log(cabs(z)), carg(z))
}

/// Principal square root, without cancellation in either half-plane.
pub fn csqrt(z: C64) -> C64 {
    if z.re == 0.0 && z.im == 0.0 {
        return C64::new(0.0, z.im);
    }
    let r = cabs(z);
    if z.re >= 0.0 {
        let t = libm::sqrt((r + z.re) / 2.0);
        C64::new(t, z.im / (2.0 * t))
    } else {
        let t = libm::sqrt((r - z.re) / 2.0);
        C64::new(libm::fabs(z.im) / (2.0 * t), libm::copysign(t, z.im))
    }
}

/// `⟨u, v⟩ = ū·v`, conjugate-linear in the first argument.
pub fn inner(u: &[C64], v: &[C64]) -> Result<C64> {
    if u.len() != v.len() {
        return Err(input_err!("inner product of vectors with dims {} and {}", u.len(), v.len()));
    }
    Ok(dot_conj(u, v))
}

#[inline]
pub(crate) fn dot_conj<T: Scalar>(u: &[T], v: &[T]) -> T {
    u.iter().zip(v).fold(T::zero(), |acc, (&a, &b)| acc + a.conj() * b)
}

/// Euclidean norm.
pub fn norm<T: Scalar>(v: &[T]) -> f64 {
    libm::sqrt(v.iter().map(|x| x.modulus_sqr()).sum())
}

/// Scales `v` to unit norm; returns `None` for the zero vector.
pub fn normalized<T: Scalar>(v: &[T]) -> Option<Vec<T>> {
    let n = norm(v);
    (n > 0.0 && n.is_finite()).then(|| v.iter().map(|&x| x * T::from_real(1.0 / n)).collect())
}

/// `A = A₁ + iA₂  ↦  [[A₁, −A₂], [A₂, A₁]]`.
pub fn real_embed_matrix(a: &ComplexMatrix) -> Result<RealMatrix> {
    let n = a.require_square("matrix to embed")?;
    Ok(Matrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = a[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    }))
}

/// `w = w₁ + iw₂  ↦  (w₁, w₂)`.
pub fn real_embed_vector(w: &[C64]) -> Vec<f64> {
    w.iter().map(|z| z.re).chain(w.iter().map(|z| z.im)).collect()
}

/// Inverse of [`real_embed_vector`]; `x` must have even length.
pub fn complex_from_embedded(x: &[f64]) -> ComplexVector {
    let n = x.len() / 2;
    (0..n).map(|k| C64::new(x[k], x[n + k])).collect()
}

/// Structural flags of a square complex matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructuralFlags {
    pub hermitian: bool,
    pub normal: bool,
    /// Hermitian part positive semidefinite.
    pub accretive: bool,
    /// Hermitian part positive definite.
    pub strictly_accretive: bool,
    pub invertible: bool,
}

/// Smallest eigenvalue of the Hermitian part `(A + A*)/2`.
///
/// This is also the best accretivity constant: `Re⟨w,Aw⟩ ≥ λ_min |w|²`.
pub fn min_hermitian_part_eigenvalue(a: &ComplexMatrix) -> Result<f64> {
    a.require_square("matrix")?;
    Ok(hermitian_eigen(&a.hermitian_part())?.eigenvalues[0])
}

/// Smallest singular value, read off the spectrum `±σᵢ` of `[[0, A], [A*, 0]]`.
pub fn smallest_singular_value(a: &ComplexMatrix) -> Result<f64> {
    let n = a.require_square("matrix")?;
    let adj = a.adjoint();
    let aug = Matrix::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, false) => a[(i, j - n)],
        (false, true) => adj[(i - n, j)],
        _ => C64::zero(),
    });
    let eig = hermitian_eigen(&aug)?;
    Ok(eig.eigenvalues.iter().map(|l| libm::fabs(*l)).fold(f64::INFINITY, f64::min))
}

/// Hermitian, normal, accretive and invertibility flags at relative
/// tolerance [`STRUCTURE_TOL`] in the Frobenius norm.
pub fn structural_predicates(a: &ComplexMatrix) -> Result<StructuralFlags> {
    a.require_square("matrix")?;
    let scale = a.frobenius_norm();
    let tol = STRUCTURE_TOL * scale;
    let adj = a.adjoint();
    let hermitian = a.sub(&adj).frobenius_norm() <= tol;
    // the commutator scales quadratically in A
    let normal = a.matmul(&adj).sub(&adj.matmul(a)).frobenius_norm() <= STRUCTURE_TOL * scale * scale;
    let lambda_min = min_hermitian_part_eigenvalue(a)?;
    let sigma_min = smallest_singular_value(a)?;
    Ok(StructuralFlags {
        hermitian,
        normal,
        accretive: lambda_min >= -tol,
        strictly_accretive: lambda_min > tol,
        invertible: scale > 0.0 && sigma_min > tol,
    })
}
