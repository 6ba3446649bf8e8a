//! Dense complex matrices.
//!
//! [`ComplexMatrix`] is a row-major value type. It is never mutated in place
//! through the public API; every operation returns a fresh matrix. Checked
//! operations return [`Result`]; the `std::ops` impls on references panic on
//! shape mismatch, the same way `nalgebra` does, and are meant for code that
//! already knows the shapes line up.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{shape, Error, Result};

/// Absolute tolerance used for traces, eigenvalue floors and channel tests.
pub const EPS: f64 = 1e-9;

/// Default relative cut-off on singular values for [`ComplexMatrix::numeric_rank`].
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Build from row-major entries. Rejects empty shapes, a length mismatch
    /// and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(shape(format!("matrix must be non-empty, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(shape(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(shape("ragged rows"));
        }
        Self::new(r, c, rows.iter().flatten().copied().collect())
    }

    /// Real row-major entries.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix must be non-empty");
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn scalar(z: Complex64) -> Self {
        ComplexMatrix {
            rows: 1,
            cols: 1,
            data: vec![z],
        }
    }

    /// `|i⟩⟨j|` in an `n`-dimensional space.
    pub fn ket_bra(i: usize, j: usize, n: usize) -> Self {
        Self::elementary(n, n, i, j)
    }

    /// `rows x cols` matrix with a single one at `(i, j)`.
    pub fn elementary(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        assert!(i < rows && j < cols, "elementary index out of range");
        let mut m = Self::zeros(rows, cols);
        m.data[i * cols + j] = ONE;
        m
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Result<Self> {
        let data = u.iter().flat_map(|a| v.iter().map(move |b| a * b.conj())).collect();
        Self::new(u.len(), v.len(), data)
    }

    pub fn diag_real(d: &[f64]) -> Result<Self> {
        let n = d.len();
        if n == 0 {
            return Err(shape("empty diagonal"));
        }
        let mut m = Self::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m.data[i * n + i] = Complex64::new(x, 0.0);
        }
        Self::new(n, n, m.data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Row-major nested copy of the entries.
    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.cols).map(<[_]>::to_vec).collect()
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != other.rows {
            return Err(shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (n, m, p) = (self.rows, self.cols, other.cols);
        let mut out = vec![ZERO; n * p];
        for i in 0..n {
            let row = &self.data[i * m..(i + 1) * m];
            let dst = &mut out[i * p..(i + 1) * p];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let src = &other.data[k * p..(k + 1) * p];
                for (d, &b) in dst.iter_mut().zip(src) {
                    *d += a * b;
                }
            }
        }
        Ok(ComplexMatrix {
            rows: n,
            cols: p,
            data: out,
        })
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).conj());
            }
        }
        ComplexMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn trace(&self) -> Result<Complex64> {
        if !self.is_square() {
            return Err(shape(format!("trace of non-square {}x{} matrix", self.rows, self.cols)));
        }
        Ok(self.diag_sum())
    }

    /// Real part of the trace; callers guarantee squareness.
    pub(crate) fn trace_re(&self) -> f64 {
        debug_assert!(self.is_square());
        self.diag_sum().re
    }

    fn diag_sum(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![ZERO; rows * cols];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a == ZERO {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        data[(i * other.rows + k) * cols + j * other.cols + l] = a * other.get(k, l);
                    }
                }
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    /// Trace out the second tensor factor of a `(dim1·dim2)`-square matrix,
    /// basis index `(i, k) ↦ i·dim2 + k`.
    pub fn partial_trace_second(&self, dim1: usize, dim2: usize) -> Result<ComplexMatrix> {
        if dim1 == 0 || dim2 == 0 || !self.is_square() || self.rows != dim1 * dim2 {
            return Err(shape(format!(
                "partial trace expects a square matrix of side {dim1}*{dim2}, got {}x{}",
                self.rows, self.cols
            )));
        }
        let mut out = Self::zeros(dim1, dim1);
        for i in 0..dim1 {
            for j in 0..dim1 {
                out.data[i * dim1 + j] = (0..dim2).map(|k| self.get(i * dim2 + k, j * dim2 + k)).sum();
            }
        }
        Ok(out)
    }

    pub fn scale(&self, z: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * z).collect(),
        }
    }

    pub fn scale_re(&self, x: f64) -> ComplexMatrix {
        self.scale(Complex64::new(x, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    /// `‖A − A†‖_F ≤ rel_tol · ‖A‖_F`.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.is_square() && (self - &self.adjoint()).frobenius_norm() <= rel_tol * self.frobenius_norm()
    }

    /// `(A + A†) / 2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        (self + &self.adjoint()).scale_re(0.5)
    }

    fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    fn from_nalgebra(m: &DMatrix<Complex64>) -> ComplexMatrix {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    fn checked_hermitian(&self) -> Result<ComplexMatrix> {
        if !self.is_square() {
            return Err(shape(format!(
                "eigenvalues of non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        if !self.is_hermitian(EPS) {
            return Err(Error::Domain(format!(
                "matrix is not Hermitian (‖A − A†‖_F = {:e})",
                (self - &self.adjoint()).frobenius_norm()
            )));
        }
        Ok(self.hermitian_part())
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        let h = self.checked_hermitian()?;
        let mut ev: Vec<f64> = h.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
    /// the matching orthonormal eigenvectors as columns.
    pub fn hermitian_eigh(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        let h = self.checked_hermitian()?;
        let eig = h.to_nalgebra().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vecs = eig.eigenvectors.select_columns(&order);
        Ok((values, Self::from_nalgebra(&vecs)))
    }

    /// `f(A)` for Hermitian `A` via its spectral decomposition.
    pub fn hermitian_function(&self, f: impl Fn(f64) -> f64) -> Result<ComplexMatrix> {
        let (values, vecs) = self.hermitian_eigh()?;
        let n = self.rows;
        let mut scaled = vecs.clone();
        for (j, &v) in values.iter().enumerate() {
            let fj = f(v);
            for i in 0..n {
                scaled.data[i * n + j] *= fj;
            }
        }
        scaled.matmul(&vecs.adjoint())
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.to_nalgebra().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    /// Number of singular values above `rel_tol` times the largest one.
    pub fn numeric_rank(&self, rel_tol: f64) -> usize {
        let sv = self.singular_values();
        let top = sv.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * top).count()
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        op: &str,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> ComplexMatrix {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "cannot {op} {}x{} and {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(rhs, "add", |a, b| a + b)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.zip_with(rhs, "subtract", |a, b| a - b)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        match self.matmul(rhs) {
            Ok(m) => m,
            Err(e) => panic!("{e}"),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_re(-1.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols) {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Relative Frobenius distance `‖a − b‖_F / max(1, ‖a‖_F, ‖b‖_F)`.
pub fn rel_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let scale = 1f64.max(a.frobenius_norm()).max(b.frobenius_norm());
    (a - b).frobenius_norm() / scale
}
