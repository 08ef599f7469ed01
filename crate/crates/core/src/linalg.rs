//! Small dense linear algebra.
//!
//! Row-major `f64` matrices sized for control problems (a handful of states,
//! inputs and outputs). Column vectors are `n × 1` matrices.
//!
//! Every constructor rejects non-finite entries and every operation that can
//! overflow re-checks its result, so a `Matrix` in hand is always finite.

use std::fmt;

use thiserror::Error;

/// Pivot magnitude below which elimination reports a singular matrix.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

/// Asymmetry admitted by the symmetric eigen routines, relative to `max(1, max|s_ij|)`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Cap on Jacobi sweeps and on power-sequence squarings.
pub const ITERATION_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("{op}: dimension mismatch, {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{op}: expected a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("data length {got} does not match {rows}x{cols}")]
    InvalidData {
        rows: usize,
        cols: usize,
        got: usize,
    },
    #[error("ragged rows: row {row} has {got} entries, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix is singular (pivot {pivot:e} below {PIVOT_TOLERANCE:e})")]
    Singular { pivot: f64 },
    #[error("matrix does not have full row rank")]
    RankDeficient,
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("{op}: no convergence after {iterations} iterations")]
    NoConvergence { op: &'static str, iterations: usize },
    #[error("{op}: non-finite entry produced")]
    NonFinite { op: &'static str },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::InvalidData {
                rows,
                cols,
                got: data.len(),
            });
        }
        Self { rows, cols, data }.finite("new")
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(LinalgError::RaggedRows {
                    row: i,
                    expected: cols,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for (i, d) in diag.iter().enumerate() {
            data[i * n + i] = *d;
        }
        Self::new(n, n, data)
    }

    /// Column vector.
    pub fn column(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Matrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "matmul",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out.finite("matmul")
    }

    pub fn add(&self, rhs: &Matrix) -> Result<Self> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Matrix) -> Result<Self> {
        self.zip_with(rhs, "sub", |a, b| a - b)
    }

    pub fn scale(&self, c: f64) -> Result<Self> {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| c * x).collect(),
        }
        .finite("scale")
    }

    /// Scales column `j` by `factors[j]`; equivalent to `self · diag(factors)`.
    pub fn scale_columns(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "scale_columns",
                left: self.shape(),
                right: (factors.len(), 1),
            });
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            for (j, f) in factors.iter().enumerate() {
                out.data[i * self.cols + j] *= f;
            }
        }
        out.finite("scale_columns")
    }

    pub fn trace(&self) -> Result<f64> {
        self.require_square("trace")?;
        Ok((0..self.rows).map(|i| self.get(i, i)).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `max_ij |self_ij - other_ij|`.
    pub fn max_abs_diff(&self, other: &Matrix) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }

    /// Inner product of two column vectors (or of any equally shaped matrices).
    pub fn dot(&self, rhs: &Matrix) -> Result<f64> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                op: "dot",
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Ok(self.data.iter().zip(&rhs.data).map(|(a, b)| a * b).sum())
    }

    /// `xᵀ · self · x` for a column vector `x`.
    pub fn quadratic_form(&self, x: &Matrix) -> Result<f64> {
        x.dot(&self.matmul(x)?)
    }

    /// Stacks `self` above `below`.
    pub fn vstack(&self, below: &Matrix) -> Result<Self> {
        if self.cols != below.cols {
            return Err(LinalgError::DimensionMismatch {
                op: "vstack",
                left: self.shape(),
                right: below.shape(),
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&below.data);
        Ok(Self {
            rows: self.rows + below.rows,
            cols: self.cols,
            data,
        })
    }

    /// Places `right` beside `self`.
    pub fn hstack(&self, right: &Matrix) -> Result<Self> {
        if self.rows != right.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "hstack",
                left: self.shape(),
                right: right.shape(),
            });
        }
        let cols = self.cols + right.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(right.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_range(&self, start: usize, end: usize) -> Result<Self> {
        if start > end || end > self.rows {
            return Err(LinalgError::DimensionMismatch {
                op: "row_range",
                left: self.shape(),
                right: (start, end),
            });
        }
        Ok(Self {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        })
    }

    pub fn max_asymmetry(&self) -> Result<f64> {
        self.require_square("max_asymmetry")?;
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        Ok(worst)
    }

    /// `(self + selfᵀ) / 2`.
    pub fn symmetrize(&self) -> Result<Self> {
        self.require_square("symmetrize")?;
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = 0.5 * (self.get(i, j) + self.get(j, i));
                out.data[i * self.cols + j] = m;
                out.data[j * self.cols + i] = m;
            }
        }
        Ok(out)
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        self.require_square("inverse")?;
        let n = self.rows;
        let mut work = self.data.clone();
        let mut inv = Self::identity(n).data;
        for col in 0..n {
            let (pivot_row, pivot) = (col..n)
                .map(|r| (r, work[r * n + col]))
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("non-empty pivot search");
            if pivot.abs() < PIVOT_TOLERANCE {
                return Err(LinalgError::Singular { pivot: pivot.abs() });
            }
            if pivot_row != col {
                for j in 0..n {
                    work.swap(col * n + j, pivot_row * n + j);
                    inv.swap(col * n + j, pivot_row * n + j);
                }
            }
            let scale = 1.0 / pivot;
            for j in 0..n {
                work[col * n + j] *= scale;
                inv[col * n + j] *= scale;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = work[r * n + col];
                if factor == 0.0 {
                    continue;
                }
                for j in 0..n {
                    work[r * n + j] -= factor * work[col * n + j];
                    inv[r * n + j] -= factor * inv[col * n + j];
                }
            }
        }
        Self {
            rows: n,
            cols: n,
            data: inv,
        }
        .finite("inverse")
    }

    /// Right pseudo-inverse `Mᵀ(MMᵀ)⁻¹` of a full-row-rank matrix.
    pub fn right_pinv(&self) -> Result<Self> {
        let mt = self.transpose();
        let gram = self.matmul(&mt)?;
        let gram_inv = gram.inverse().map_err(|e| match e {
            LinalgError::Singular { .. } => LinalgError::RankDeficient,
            other => other,
        })?;
        mt.matmul(&gram_inv)
    }

    /// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
    pub fn sym_eigenvalues(&self) -> Result<Vec<f64>> {
        self.require_square("sym_eigenvalues")?;
        let asymmetry = self.max_asymmetry()?;
        if asymmetry > SYMMETRY_TOLERANCE * self.max_abs().max(1.0) {
            return Err(LinalgError::NotSymmetric { asymmetry });
        }
        let n = self.rows;
        let mut a = self.symmetrize()?.data;
        let total: f64 = a.iter().map(|x| x * x).sum();
        for _ in 0..ITERATION_CAP {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * n + j] * a[i * n + j])
                .sum();
            if off <= 1e-28 * total || off == 0.0 {
                let mut eig: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
                eig.sort_by(f64::total_cmp);
                return Ok(eig);
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        Err(LinalgError::NoConvergence {
            op: "sym_eigenvalues",
            iterations: ITERATION_CAP,
        })
    }

    pub fn sym_eig_max(&self) -> Result<f64> {
        Ok(*self.sym_eigenvalues()?.last().unwrap_or(&0.0))
    }

    pub fn sym_eig_min(&self) -> Result<f64> {
        Ok(*self.sym_eigenvalues()?.first().unwrap_or(&0.0))
    }

    /// `max |λ_i|` for a general square matrix.
    ///
    /// Evaluates `‖M^N‖^(1/N)` with `N = 2^j` by repeated squaring of the
    /// normalized power sequence, accumulating the log-norm so nothing
    /// overflows. The estimate approaches the spectral radius from above.
    pub fn spectral_radius(&self) -> Result<f64> {
        self.require_square("spectral_radius")?;
        let norm = self.frobenius_norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let mut power = self.scale(1.0 / norm)?;
        let mut log_radius = norm.ln();
        let mut weight = 1.0;
        for _ in 0..ITERATION_CAP {
            power = power.matmul(&power)?;
            weight *= 0.5;
            let s = power.frobenius_norm();
            if s == 0.0 {
                return Ok(0.0);
            }
            let step = weight * s.ln();
            log_radius += step;
            if weight < 1e-15 && step.abs() < 1e-17 {
                return Ok(log_radius.exp());
            }
            if weight < 1e-300 {
                break;
            }
            power = power.scale(1.0 / s)?;
        }
        Err(LinalgError::NoConvergence {
            op: "spectral_radius",
            iterations: ITERATION_CAP,
        })
    }

    fn zip_with(
        &self,
        rhs: &Matrix,
        op: &'static str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        if self.shape() != rhs.shape() {
            return Err(LinalgError::DimensionMismatch {
                op,
                left: self.shape(),
                right: rhs.shape(),
            });
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
        .finite(op)
    }

    fn require_square(&self, op: &'static str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(LinalgError::NotSquare {
                op,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    fn finite(self, op: &'static str) -> Result<Self> {
        if self.data.iter().all(|x| x.is_finite()) {
            Ok(self)
        } else {
            Err(LinalgError::NonFinite { op })
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl fmt::Display for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let cells: Vec<String> = self.row(i).iter().map(|x| format!("{x:>12.6}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}
