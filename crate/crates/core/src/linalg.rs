//! Dense kernels behind the typicality test: projection residuals through a
//! Householder QR factorization and numerical rank from singular values.
//!
//! `Π⊥_B` is never formed. The residual `‖Π⊥_B y‖²` is read off as the tail
//! energy of `Qᵀy`, which stays accurate even when `BᵀB` is badly conditioned.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // needed for f64 math under no_std
use num_traits::Float as _;

use crate::error::{param_err, Error, Result};

/// Relative singular-value threshold used when the caller has no opinion.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Dense real matrix. Entries are stored column by column; constructors take
/// row-major input.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        check_shape(rows, cols, entries.len())?;
        let mut data = vec![0.0; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                data[c * rows + r] = entries[r * cols + c];
            }
        }
        Self::from_col_major(rows, cols, data)
    }

    /// Builds a matrix from column-major storage.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_shape(rows, cols, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return param_err(alloc::format!("matrix entry {i} is not finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != rows) {
            return param_err("columns have different lengths");
        }
        let data = columns.iter().flat_map(|c| c.iter().copied()).collect();
        Self::from_col_major(rows, columns.len(), data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub(crate) fn column_mut(&mut self, c: usize) -> &mut [f64] {
        let rows = self.rows;
        &mut self.data[c * rows..(c + 1) * rows]
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self.get(r, c));
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for c in 0..self.cols {
            for r in 0..self.rows {
                data[r * self.cols + c] = self.get(r, c);
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Submatrix made of the listed columns, in the listed order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<Matrix> {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for &j in idx {
            if j >= self.cols {
                return param_err(alloc::format!("column {j} out of range 0..{}", self.cols));
            }
            data.extend_from_slice(self.column(j));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::Dimension {
                expected: self.cols,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (c, &xc) in x.iter().enumerate() {
            if xc != 0.0 {
                axpy(xc, self.column(c), &mut out);
            }
        }
        Ok(out)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

fn check_shape(rows: usize, cols: usize, len: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return param_err("matrix dimensions must be positive");
    }
    if rows * cols != len {
        return Err(Error::Dimension {
            expected: rows * cols,
            got: len,
        });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Householder QR of a tall matrix, in compact LAPACK-style storage.
///
/// The upper triangle of `work` holds `R`; below the diagonal of column `j`
/// sits the reflector `v_j` with implicit leading 1.
#[derive(Debug, Clone)]
pub struct Qr {
    rows: usize,
    cols: usize,
    work: Vec<f64>,
    tau: Vec<f64>,
}

impl Qr {
    pub fn new(b: &Matrix) -> Result<Self> {
        Self::from_col_major(b.rows, b.cols, b.data.clone())
    }

    /// Factors the matrix whose columns are `columns` (all of equal length).
    pub fn from_columns<'a>(rows: usize, columns: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut work = Vec::new();
        let mut cols = 0;
        for c in columns {
            if c.len() != rows {
                return Err(Error::Dimension {
                    expected: rows,
                    got: c.len(),
                });
            }
            work.extend_from_slice(c);
            cols += 1;
        }
        Self::from_col_major(rows, cols, work)
    }

    fn from_col_major(rows: usize, cols: usize, mut work: Vec<f64>) -> Result<Self> {
        if cols == 0 || rows < cols {
            return param_err(alloc::format!(
                "QR needs rows >= cols >= 1, got {rows}x{cols}"
            ));
        }
        let mut tau = vec![0.0; cols];
        for j in 0..cols {
            let (head, tail) = work.split_at_mut((j + 1) * rows);
            let col = &mut head[j * rows + j..];
            let alpha = col[0];
            let norm = norm_sq(col).sqrt();
            if norm == 0.0 {
                continue;
            }
            let beta = if alpha >= 0.0 { -norm } else { norm };
            let scale = 1.0 / (alpha - beta);
            for v in col[1..].iter_mut() {
                *v *= scale;
            }
            col[0] = beta;
            tau[j] = (beta - alpha) / beta;
            let v_tail = &col[1..];
            for c in 0..cols - j - 1 {
                let target = &mut tail[c * rows + j..(c + 1) * rows];
                let s = target[0] + dot(v_tail, &target[1..]);
                let ts = tau[j] * s;
                target[0] -= ts;
                axpy(-ts, v_tail, &mut target[1..]);
            }
        }
        Ok(Self {
            rows,
            cols,
            work,
            tau,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn reflect(&self, j: usize, x: &mut [f64]) {
        if self.tau[j] == 0.0 {
            return;
        }
        let v_tail = &self.work[j * self.rows + j + 1..(j + 1) * self.rows];
        let s = x[j] + dot(v_tail, &x[j + 1..]);
        let ts = self.tau[j] * s;
        x[j] -= ts;
        axpy(-ts, v_tail, &mut x[j + 1..]);
    }

    /// Overwrites `x` with `Qᵀx`.
    pub fn apply_qt(&self, x: &mut [f64]) {
        for j in 0..self.cols {
            self.reflect(j, x);
        }
    }

    /// Overwrites `x` with `Qx`.
    pub fn apply_q(&self, x: &mut [f64]) {
        for j in (0..self.cols).rev() {
            self.reflect(j, x);
        }
    }

    /// The `cols × cols` triangular factor, column-major.
    pub fn r(&self) -> Matrix {
        let k = self.cols;
        let mut data = vec![0.0; k * k];
        for c in 0..k {
            for r in 0..=c {
                data[c * k + r] = self.work[c * self.rows + r];
            }
        }
        Matrix {
            rows: k,
            cols: k,
            data,
        }
    }

    /// Singular values of the factored matrix, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        singular_values_jacobi(self.r())
    }

    pub fn rank(&self, tol: f64) -> usize {
        rank_from_singular_values(&self.singular_values(), tol)
    }

    /// Thin `Q` with orthonormal columns spanning the factored column space.
    pub fn thin_q(&self) -> Matrix {
        let mut q = Matrix {
            rows: self.rows,
            cols: self.cols,
            data: vec![0.0; self.rows * self.cols],
        };
        for c in 0..self.cols {
            let col = q.column_mut(c);
            col[c] = 1.0;
            self.apply_q(col);
        }
        q
    }

    /// `‖Π⊥ y‖²`, the energy of `y` outside the factored column space.
    ///
    /// Meaningful only for full column rank; callers check [`Qr::rank`] first.
    pub fn residual_norm_sq(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.rows {
            return Err(Error::Dimension {
                expected: self.rows,
                got: y.len(),
            });
        }
        let mut z = y.to_vec();
        self.apply_qt(&mut z);
        Ok(norm_sq(&z[self.cols..]).max(0.0))
    }
}

/// One-sided Jacobi SVD; returns the column norms after orthogonalization.
fn singular_values_jacobi(mut w: Matrix) -> Vec<f64> {
    let (p, q) = (w.rows, w.cols);
    for _sweep in 0..80 {
        let mut rotated = false;
        for i in 0..q {
            for j in i + 1..q {
                let (alpha, beta, gamma) = {
                    let ci = w.column(i);
                    let cj = w.column(j);
                    (norm_sq(ci), norm_sq(cj), dot(ci, cj))
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..p {
                    let a = w.data[i * p + r];
                    let b = w.data[j * p + r];
                    w.data[i * p + r] = c * a - s * b;
                    w.data[j * p + r] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..q).map(|c| norm_sq(w.column(c)).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

fn rank_from_singular_values(sv: &[f64], tol: f64) -> usize {
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * top).count()
}

/// Singular values of any matrix, descending.
pub fn singular_values(b: &Matrix) -> Vec<f64> {
    let tall = if b.rows >= b.cols { b.clone() } else { b.transpose() };
    // QR first so Jacobi runs on the small square factor.
    match Qr::new(&tall) {
        Ok(qr) => qr.singular_values(),
        Err(_) => singular_values_jacobi(tall),
    }
}

/// Number of singular values strictly above `tol · σ_max`. Zero for the
/// all-zero matrix.
pub fn numerical_rank(b: &Matrix, tol: f64) -> Result<usize> {
    if !(tol > 0.0) {
        return param_err("rank tolerance must be positive");
    }
    Ok(rank_from_singular_values(&singular_values(b), tol))
}

fn full_rank_qr(b: &Matrix, tol: f64) -> Result<Qr> {
    if b.rows < b.cols {
        return Err(Error::RankDeficient {
            rank: b.rows,
            required: b.cols,
        });
    }
    let qr = Qr::new(b)?;
    let rank = qr.rank(tol);
    if rank < b.cols {
        return Err(Error::RankDeficient {
            rank,
            required: b.cols,
        });
    }
    Ok(qr)
}

/// Orthonormal basis of the column space of a full-column-rank `b`.
pub fn orthonormal_basis(b: &Matrix) -> Result<Matrix> {
    Ok(full_rank_qr(b, DEFAULT_RANK_TOL)?.thin_q())
}

/// `‖Π⊥_B y‖²` for a full-column-rank `b`, clamped at zero.
pub fn residual_norm_sq(b: &Matrix, y: &[f64]) -> Result<f64> {
    if y.len() != b.rows {
        return Err(Error::Dimension {
            expected: b.rows,
            got: y.len(),
        });
    }
    full_rank_qr(b, DEFAULT_RANK_TOL)?.residual_norm_sq(y)
}
