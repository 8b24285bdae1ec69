//! Dense complex square matrices and the handful of numerical kernels the rest
//! of the crate needs: products, adjoints, unitarity and Hadamard predicates,
//! Householder QR and a Hermitian eigenvalue solver.
//!
//! Matrices are immutable values. Every operation allocates its result.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {got}")]
    WrongLength {
        dim: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix dimension must be positive")]
    ZeroDimension,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("tolerance `{name}` must be strictly positive, got {value}")]
    BadTolerance { name: &'static str, value: f64 },
}

/// Numerical tolerances used by the predicates and the eigensolver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub unitary_tol: f64,
    pub hadamard_tol: f64,
    pub eig_tol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            unitary_tol: 1e-10,
            hadamard_tol: 1e-10,
            eig_tol: 1e-8,
        }
    }
}

impl Tolerance {
    pub fn new(unitary_tol: f64, hadamard_tol: f64, eig_tol: f64) -> Result<Self, LinalgError> {
        let tol = Self {
            unitary_tol,
            hadamard_tol,
            eig_tol,
        };
        tol.validate()?;
        Ok(tol)
    }

    pub fn validate(&self) -> Result<(), LinalgError> {
        for (name, value) in [
            ("unitary_tol", self.unitary_tol),
            ("hadamard_tol", self.hadamard_tol),
            ("eig_tol", self.eig_tol),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(LinalgError::BadTolerance { name, value });
            }
        }
        Ok(())
    }
}

/// A dense `dim x dim` complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct Matrix {
    dim: usize,
    entries: Vec<Complex64>,
}

/// Wire form: `{"dim": d, "entries": [[re, im], ...]}`.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<MatrixJson> for Matrix {
    type Error = LinalgError;

    fn try_from(raw: MatrixJson) -> Result<Self, Self::Error> {
        let entries = raw
            .entries
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        Matrix::from_entries(raw.dim, entries)
    }
}

impl From<Matrix> for MatrixJson {
    fn from(m: Matrix) -> Self {
        MatrixJson {
            dim: m.dim,
            entries: m.entries.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.dim, self.dim)?;
        for row in self.entries.chunks(self.dim) {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    /// Builds a matrix from row-major entries, checking length and finiteness.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::ZeroDimension);
        }
        if entries.len() != dim * dim {
            return Err(LinalgError::WrongLength {
                dim,
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if let Some(pos) = entries
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(LinalgError::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(LinalgError::WrongLength {
                dim,
                expected: dim * dim,
                got: dim * (dim - 1) + bad.len(),
            });
        }
        Self::from_entries(dim, rows.concat())
    }

    /// Panics if `dim == 0` or `f` produces a non-finite value.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let entries = (0..dim * dim).map(|k| f(k / dim, k % dim)).collect();
        Self::from_entries(dim, entries).expect("from_fn produced an invalid matrix")
    }

    /// Fills entries in row-major order from a generator.
    pub fn from_fn_mut(dim: usize, mut f: impl FnMut() -> Complex64) -> Self {
        let entries = (0..dim * dim).map(|_| f()).collect();
        Self::from_entries(dim, entries).expect("from_fn_mut produced an invalid matrix")
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| {
            if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| Complex64::new(0.0, 0.0))
    }

    pub fn diag(values: &[Complex64]) -> Self {
        Self::from_fn(values.len(), |i, j| {
            if i == j {
                values[i]
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// The all-ones `dim x dim` matrix.
    pub fn ones(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| Complex64::new(1.0, 0.0))
    }

    /// Real symmetric (or arbitrary real) matrix from row-major `f64` values.
    pub fn from_real(dim: usize, values: &[f64]) -> Result<Self, LinalgError> {
        Self::from_entries(
            dim,
            values.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.entries[row * self.dim..(row + 1) * self.dim]
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.dim).map(|r| self.get(r, col)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.check_same_dim(other)?;
        let d = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            let out_row = &mut out[i * d..(i + 1) * d];
            for k in 0..d {
                let a = self.entries[i * d + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix {
            dim: d,
            entries: out,
        })
    }

    /// `self* · other` without materializing the adjoint.
    pub fn adjoint_mul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.check_same_dim(other)?;
        let d = self.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for k in 0..d {
            let a_row = self.row(k);
            let b_row = other.row(k);
            for (i, a) in a_row.iter().enumerate() {
                let a = a.conj();
                for (o, b) in out[i * d..(i + 1) * d].iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Matrix {
            dim: d,
            entries: out,
        })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &Matrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Matrix, LinalgError> {
        self.check_same_dim(other)?;
        Ok(Matrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    fn check_same_dim(&self, other: &Matrix) -> Result<(), LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64, LinalgError> {
        self.check_same_dim(other)?;
        Ok(self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Max-entry deviation of `self* · self` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        let gram = self
            .adjoint_mul(self)
            .expect("a matrix always matches its own dimension");
        gram.max_abs_diff(&Matrix::identity(self.dim))
            .expect("same dimension")
    }

    pub fn is_unitary(&self, tol: &Tolerance) -> bool {
        self.unitarity_defect() <= tol.unitary_tol
    }

    /// Largest `| |z| - 1/sqrt(d) |` over all entries.
    pub fn hadamard_defect(&self) -> f64 {
        let target = 1.0 / (self.dim as f64).sqrt();
        self.entries
            .iter()
            .map(|z| (z.norm() - target).abs())
            .fold(0.0, f64::max)
    }

    /// Unitary with every entry of modulus `1/sqrt(d)`.
    pub fn is_scaled_hadamard(&self, tol: &Tolerance) -> bool {
        self.is_unitary(tol) && self.hadamard_defect() <= tol.hadamard_tol
    }

    /// Max-entry deviation of `self` from `self*`.
    pub fn hermitian_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    ///
    /// Householder reduction to a real symmetric tridiagonal matrix followed by
    /// implicit-shift QL. The input must be Hermitian within `1e-10` (relative to
    /// `max(1, max|a_ij|)`).
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>, LinalgError> {
        let scale = self.max_abs().max(1.0);
        let deviation = self.hermitian_defect();
        if deviation > HERMITIAN_TOL * scale {
            return Err(LinalgError::NotHermitian { deviation });
        }
        let (mut diag, mut off) = tridiagonalize(self);
        tridiagonal_ql(&mut diag, &mut off);
        diag.sort_by(|a, b| a.total_cmp(b));
        Ok(diag)
    }

    /// Householder QR: returns `(Q, R)` with `Q` unitary and `R` upper triangular.
    pub fn qr(&self) -> (Matrix, Matrix) {
        let d = self.dim;
        let mut r = self.entries.clone();
        // Q accumulated as a product of reflectors applied to the identity.
        let mut q = Matrix::identity(d).entries;
        for k in 0..d.saturating_sub(1) {
            let norm_x = (k..d).map(|i| r[i * d + k].norm_sqr()).sum::<f64>().sqrt();
            if norm_x == 0.0 {
                continue;
            }
            let x0 = r[k * d + k];
            let phase = if x0.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                x0 / x0.norm()
            };
            let alpha = -phase * norm_x;
            let mut v: Vec<Complex64> = (k..d).map(|i| r[i * d + k]).collect();
            v[0] -= alpha;
            let v_norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if v_norm == 0.0 {
                continue;
            }
            for z in v.iter_mut() {
                *z /= v_norm;
            }
            // R <- (I - 2 v v*) R on rows k..d.
            for col in 0..d {
                let dot: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, vt)| vt.conj() * r[(k + t) * d + col])
                    .sum();
                for (t, vt) in v.iter().enumerate() {
                    r[(k + t) * d + col] -= 2.0 * vt * dot;
                }
            }
            // Q <- Q (I - 2 v v*) on columns k..d.
            for row in 0..d {
                let dot: Complex64 = v
                    .iter()
                    .enumerate()
                    .map(|(t, vt)| q[row * d + k + t] * vt)
                    .sum();
                for (t, vt) in v.iter().enumerate() {
                    q[row * d + k + t] -= 2.0 * dot * vt.conj();
                }
            }
        }
        for i in 1..d {
            for j in 0..i {
                r[i * d + j] = Complex64::new(0.0, 0.0);
            }
        }
        (Matrix { dim: d, entries: q }, Matrix { dim: d, entries: r })
    }

    /// `exp(i * t * H)` for Hermitian `H`, by scaled Taylor series and squaring.
    ///
    /// The result is unitary to roundoff when `H` is Hermitian.
    pub fn exp_i_hermitian(h: &Matrix, t: f64) -> Matrix {
        let d = h.dim;
        let a = h.scale(Complex64::new(0.0, t));
        let norm = a.frobenius_norm();
        let mut squarings = 0u32;
        let mut scaled_norm = norm;
        while scaled_norm > 0.25 {
            scaled_norm /= 2.0;
            squarings += 1;
        }
        let a = a.scale(Complex64::new(0.5f64.powi(squarings as i32), 0.0));
        let mut sum = Matrix::identity(d);
        let mut term = Matrix::identity(d);
        for k in 1..=18 {
            term = term
                .matmul(&a)
                .expect("same dimension")
                .scale(Complex64::new(1.0 / k as f64, 0.0));
            sum = sum.add(&term).expect("same dimension");
            if term.max_abs() < 1e-18 {
                break;
            }
        }
        for _ in 0..squarings {
            sum = sum.matmul(&sum).expect("same dimension");
        }
        sum
    }
}

const HERMITIAN_TOL: f64 = 1e-10;

/// Unitarily reduces a Hermitian matrix to tridiagonal form and returns the real
/// diagonal plus the moduli of the subdiagonal (a diagonal phase similarity makes
/// the subdiagonal real without changing the spectrum).
fn tridiagonalize(a: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim;
    // Symmetrize exactly so roundoff asymmetry cannot leak into the reduction.
    let mut m: Vec<Complex64> = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            0.5 * (a.get(i, j) + a.get(j, i).conj())
        })
        .collect();
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<Complex64> = (k + 1..n).map(|i| m[i * n + k]).collect();
        let norm_x = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let tail = x[1..].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if norm_x == 0.0 || tail == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x[0] / x[0].norm()
        };
        let alpha = -phase * norm_x;
        let mut v = x;
        v[0] -= alpha;
        let v_norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= v_norm;
        }
        // Trailing block B <- H B H with H = I - 2 v v*.
        let idx = |i: usize, j: usize| (k + 1 + i) * n + (k + 1 + j);
        let w: Vec<Complex64> = (0..len)
            .map(|i| (0..len).map(|j| m[idx(i, j)] * v[j]).sum())
            .collect();
        let c: Complex64 = v.iter().zip(&w).map(|(vi, wi)| vi.conj() * wi).sum();
        let u: Vec<Complex64> = w.iter().zip(&v).map(|(wi, vi)| wi - c * vi).collect();
        for i in 0..len {
            for j in 0..len {
                m[idx(i, j)] -= 2.0 * (v[i] * u[j].conj() + u[i] * v[j].conj());
            }
        }
        // Column k below the diagonal becomes alpha * e1, and row k mirrors it.
        m[(k + 1) * n + k] = alpha;
        m[k * n + k + 1] = alpha.conj();
        for i in k + 2..n {
            m[i * n + k] = Complex64::new(0.0, 0.0);
            m[k * n + i] = Complex64::new(0.0, 0.0);
        }
    }
    let diag = (0..n).map(|i| m[i * n + i].re).collect();
    let off = (0..n.saturating_sub(1))
        .map(|i| m[(i + 1) * n + i].norm())
        .collect();
    (diag, off)
}

/// Implicit-shift QL on a real symmetric tridiagonal matrix; eigenvalues only.
/// `diag` is overwritten with the eigenvalues (unsorted).
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64]) {
    let n = diag.len();
    if n < 2 {
        return;
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tridiagonal QL failed to converge");
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}
