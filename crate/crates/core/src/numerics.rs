//! Dense matrix arithmetic, regularized SPD solves, and the box-constrained
//! QP solver behind every dual problem.
//!
//! The duals solved here have the form
//!
//! ```text
//!     maximize   -1/2 x' M x + c' x
//!     subject to  0 <= x <= upper
//! ```
//!
//! with `M` symmetric positive semidefinite. They are solved by projected
//! cyclic coordinate descent with exact one-dimensional minimization per
//! coordinate; each step is closed-form for a quadratic clipped to a box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major matrix. Entries are checked finite at construction;
/// internal arithmetic assumes that invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {v}")));
        }
        Ok(Self { rows, cols, data })
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

    /// Build from row slices; all rows must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            if r.len() != ncols {
                return Err(Error::DimensionMismatch(
                    "ragged rows in from_rows".into(),
                ));
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(nrows, ncols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Gram product `self' * self`.
    pub fn gram_self(&self) -> Matrix {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let a = row[i];
                if a == 0.0 {
                    continue;
                }
                for j in i..n {
                    g.data[i * n + j] += a * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec {}x{} by vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect())
    }

    /// `self' * x` without forming the transpose.
    pub fn transpose_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "transpose_matvec {}x{} by vector of length {}",
                self.rows,
                self.cols,
                x.len()
            )));
        }
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        Ok(out)
    }

    /// Stack `self` on top of `other`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if other.rows == 0 {
            return Ok(self.clone());
        }
        if self.rows == 0 {
            return Ok(other.clone());
        }
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "vstack {} cols with {} cols",
                self.cols, other.cols
            )));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Matrix {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Append a constant column (the bias column of ones in the duals).
    pub fn with_appended_column(&self, value: f64) -> Matrix {
        let mut out = Matrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            let src = self.row(i);
            let dst = &mut out.data[i * (self.cols + 1)..(i + 1) * (self.cols + 1)];
            dst[..self.cols].copy_from_slice(src);
            dst[self.cols] = value;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Induced infinity norm (largest absolute row sum).
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum())
            .fold(0.0, f64::max)
    }

    pub fn mean_diagonal(&self) -> f64 {
        let n = self.rows.min(self.cols);
        if n == 0 {
            return 0.0;
        }
        (0..n).map(|i| self.at(i, i)).sum::<f64>() / n as f64
    }

    /// Symmetry defect relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.max_abs().max(1.0);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self.at(i, j) - self.at(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Average with the transpose, used to remove round-off asymmetry
    /// before handing a Gram product to the QP solver.
    pub fn symmetrized(&self) -> Matrix {
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let v = 0.5 * (self.at(i, j) + self.at(j, i));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Cholesky factor of a symmetric positive definite matrix (lower triangle).
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    l: Vec<f64>,
}

impl CholeskyFactor {
    pub fn new(m: &Matrix) -> Result<Self> {
        let n = m.rows();
        if m.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "cholesky of {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = m.at(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= 0.0 {
                        return Err(Error::NotPositiveDefinite { index: i, pivot: s });
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "cholesky solve: rhs length {} vs order {}",
                b.len(),
                self.n
            )));
        }
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l[i * n + k] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l[k * n + i] * y[k];
            }
            y[i] /= self.l[i * n + i];
        }
        Ok(y)
    }

    pub fn solve_mat(&self, b: &Matrix) -> Result<Matrix> {
        if b.rows() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "cholesky solve: rhs has {} rows, order {}",
                b.rows(),
                self.n
            )));
        }
        let bt = b.transpose();
        let mut cols = Vec::with_capacity(b.cols());
        for j in 0..b.cols() {
            cols.push(self.solve_vec(bt.row(j))?);
        }
        Ok(Matrix::from_rows(&cols)?.transpose())
    }
}

/// Solve `(M + delta I) X = B` for symmetric positive definite `M + delta I`.
pub fn solve_spd(m: &Matrix, b: &Matrix, delta: f64) -> Result<Matrix> {
    if delta < 0.0 {
        return Err(Error::InvalidParameter(format!("negative ridge {delta}")));
    }
    let factor = spd_factor(m, delta)?;
    factor.solve_mat(b)
}

/// Factor `M + delta I` once for reuse across several right-hand sides.
pub fn spd_factor(m: &Matrix, delta: f64) -> Result<CholeskyFactor> {
    let n = m.rows();
    let mut shifted = m.clone();
    for i in 0..n {
        shifted.set(i, i, shifted.at(i, i) + delta);
    }
    CholeskyFactor::new(&shifted)
}

/// Box-constrained concave quadratic maximization problem.
#[derive(Debug, Clone)]
pub struct BoxQp {
    pub m: Matrix,
    pub c: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxQp {
    pub fn new(m: Matrix, c: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = m.rows();
        if m.cols() != n || c.len() != n || upper.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "BoxQp: M {}x{}, c {}, upper {}",
                m.rows(),
                m.cols(),
                c.len(),
                upper.len()
            )));
        }
        if m.symmetry_defect() > 1e-10 {
            return Err(Error::InvalidParameter(
                "BoxQp matrix is not symmetric".into(),
            ));
        }
        if let Some(u) = upper.iter().find(|u| **u < 0.0) {
            return Err(Error::InvalidParameter(format!("negative upper bound {u}")));
        }
        Ok(Self { m, c, upper })
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// Objective `-1/2 x' M x + c' x`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        let mx = self.m.matvec(x).expect("dimension checked at construction");
        -0.5 * dot(x, &mx) + dot(&self.c, x)
    }

    /// Projected-gradient KKT residual `max_i |x_i - clip(x_i + g_i)|`
    /// with `g = c - M x`.
    pub fn kkt_residual(&self, x: &[f64]) -> f64 {
        let mx = self.m.matvec(x).expect("dimension checked at construction");
        let mut worst = 0.0f64;
        for i in 0..x.len() {
            let g = self.c[i] - mx[i];
            let proj = (x[i] + g).clamp(0.0, self.upper[i]);
            worst = worst.max((x[i] - proj).abs());
        }
        worst
    }
}

/// Solution of a [`BoxQp`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualSolution {
    pub x: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Default number of coordinate sweeps granted to [`solve_box_qp`].
pub fn default_max_sweeps(n: usize) -> usize {
    (10 * n * n).max(1_000_000)
}

/// Default KKT tolerance for the dual solves.
pub const DEFAULT_QP_TOL: f64 = 1e-8;

/// Projected cyclic coordinate descent with exact per-coordinate steps.
///
/// `max_iter` counts full sweeps over the coordinates. Returns
/// [`Error::DidNotConverge`] carrying the best iterate when exhausted.
pub fn solve_box_qp(problem: &BoxQp, tol: f64, max_iter: usize) -> Result<DualSolution> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance {tol}")));
    }
    let n = problem.dim();
    if n == 0 {
        return Ok(DualSolution {
            x: vec![],
            kkt_residual: 0.0,
            iterations: 0,
        });
    }
    let m = &problem.m;
    let mut x = vec![0.0; n];
    // mx tracks M x incrementally; one coordinate change is a rank-one touch.
    let mut mx = vec![0.0; n];
    let mut sweeps = 0;
    loop {
        // the incremental mx accumulates rounding drift; left uncorrected it
        // moves the CD fixed point away from the true KKT point
        if sweeps % 64 == 0 && sweeps > 0 {
            mx = m.matvec(&x)?;
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            let g = problem.c[i] - mx[i];
            let mii = m.at(i, i);
            let target = if mii > 0.0 {
                (x[i] + g / mii).clamp(0.0, problem.upper[i])
            } else if g > 0.0 {
                problem.upper[i]
            } else if g < 0.0 {
                0.0
            } else {
                x[i]
            };
            let step = target - x[i];
            if step != 0.0 {
                x[i] = target;
                let mrow = m.row(i);
                for (acc, &v) in mx.iter_mut().zip(mrow) {
                    *acc += step * v;
                }
            }
            // residual uses the plain (unscaled) projected gradient
            let proj = (x[i] + g).clamp(0.0, problem.upper[i]);
            worst = worst.max((x[i] - proj).abs());
        }
        sweeps += 1;
        if worst <= tol {
            // recompute the residual from scratch; the incremental mx can drift
            let exact = problem.kkt_residual(&x);
            if exact <= tol {
                return Ok(DualSolution {
                    x,
                    kkt_residual: exact,
                    iterations: sweeps,
                });
            }
            mx = m.matvec(&x)?;
        }
        if sweeps >= max_iter {
            let residual = problem.kkt_residual(&x);
            return Err(Error::DidNotConverge {
                best: DualSolution {
                    x,
                    kkt_residual: residual,
                    iterations: sweeps,
                },
                residual,
                iterations: sweeps,
            });
        }
    }
}
