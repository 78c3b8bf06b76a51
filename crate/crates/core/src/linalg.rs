//! Dense row-major matrices and the pivoted factorization shared by the
//! regularity checks and solvers.
//!
//! Determinants are kept in sign/log form throughout: the planar product
//! formula multiplies up to `C(k+1,2)` pairwise determinants, which
//! under- or overflows long before the verdict becomes meaningless.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix rows must all have length {expected}, row {row} has {got}")]
    RaggedRows {
        expected: usize,
        got: usize,
        row: usize,
    },
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: matrix is {rows}x{cols}, vector has length {len}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix is singular to working precision (pivot ratio {ratio:.3e} <= {tol:.3e})")]
    Singular { ratio: f64, tol: f64 },
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, LinalgError> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(LinalgError::RaggedRows {
                    expected: ncols,
                    got: r.len(),
                    row: i,
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::ShapeMismatch {
                rows: self.rows,
                cols: self.cols,
                len: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch {
                rows: self.rows,
                cols: self.cols,
                len: other.rows,
            });
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// Scales every row to unit max-norm; returns the applied scale factors.
    /// Zero rows are left untouched (factor 1).
    pub fn equilibrate_rows(&mut self) -> Vec<f64> {
        let mut factors = vec![1.0; self.rows];
        for (i, factor) in factors.iter_mut().enumerate() {
            let m = self.row(i).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if m > 0.0 {
                let f = 1.0 / m;
                for x in self.row_mut(i) {
                    *x *= f;
                }
                *factor = f;
            }
        }
        factors
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
///
/// The factorization always completes; exactly-zero pivots are recorded as
/// such, so singular matrices are diagnosed through [`LuFactors::pivot_ratio`]
/// and [`LuFactors::det_sign`] rather than through a hard failure.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: Matrix,
    perm: Vec<usize>,
    perm_sign: f64,
}

pub fn lu_factor(a: &Matrix) -> Result<LuFactors, LinalgError> {
    if a.rows != a.cols {
        return Err(LinalgError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut perm_sign = 1.0;

    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_abs = lu[(k, k)].abs();
        for r in (k + 1)..n {
            let v = lu[(r, k)].abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = r;
            }
        }
        if pivot_row != k {
            lu.swap_rows(k, pivot_row);
            perm.swap(k, pivot_row);
            perm_sign = -perm_sign;
        }
        let pivot = lu[(k, k)];
        if pivot == 0.0 {
            // Column already eliminated; the zero pivot stays on the diagonal.
            continue;
        }
        for r in (k + 1)..n {
            let mult = lu[(r, k)] / pivot;
            lu[(r, k)] = mult;
            for c in (k + 1)..n {
                lu[(r, c)] -= mult * lu[(k, c)];
            }
        }
    }

    Ok(LuFactors {
        lu,
        perm,
        perm_sign,
    })
}

impl LuFactors {
    pub fn size(&self) -> usize {
        self.lu.rows
    }

    fn pivots(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.lu.rows).map(move |i| self.lu[(i, i)])
    }

    /// Ratio of smallest to largest pivot magnitude; 0 for a zero matrix.
    pub fn pivot_ratio(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for p in self.pivots() {
            let a = p.abs();
            lo = lo.min(a);
            hi = hi.max(a);
        }
        if hi == 0.0 {
            0.0
        } else {
            lo / hi
        }
    }

    /// Sign of the determinant: 0 exactly when some pivot is exactly zero.
    pub fn det_sign(&self) -> i8 {
        let mut sign = if self.perm_sign > 0.0 { 1i8 } else { -1i8 };
        for p in self.pivots() {
            if p == 0.0 {
                return 0;
            }
            if p < 0.0 {
                sign = -sign;
            }
        }
        sign
    }

    /// Natural log of |det|; `-inf` when the determinant is exactly zero.
    pub fn det_log_abs(&self) -> f64 {
        self.pivots().map(|p| p.abs().ln()).sum()
    }

    /// Solves `A x = b`, refusing when the pivot ratio falls at or below `tol`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>, LinalgError> {
        let n = self.size();
        if b.len() != n {
            return Err(LinalgError::ShapeMismatch {
                rows: n,
                cols: n,
                len: b.len(),
            });
        }
        let ratio = self.pivot_ratio();
        if ratio <= tol {
            return Err(LinalgError::Singular { ratio, tol });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // Forward substitution, unit lower triangle.
        for i in 0..n {
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().take(i) {
                s -= self.lu[(i, j)] * xj;
            }
            x[i] = s;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut s = x[i];
            for (j, xj) in x.iter().enumerate().skip(i + 1) {
                s -= self.lu[(i, j)] * xj;
            }
            x[i] = s / self.lu[(i, i)];
        }
        Ok(x)
    }
}

/// Numerical rank from a row-equilibrated Gauss-Jordan reduction.
pub fn rank(a: &Matrix, tol: f64) -> usize {
    rref(a, tol).pivots.len()
}

/// Indices of a maximal set of linearly independent columns, chosen greedily
/// left to right.
pub fn pivot_columns(a: &Matrix, tol: f64) -> Vec<usize> {
    rref(a, tol).pivots.iter().map(|&(_, c)| c).collect()
}

/// A nonzero null-space vector of `a`, if the columns are dependent.
///
/// The matrix is row-equilibrated first so rows on very different scales
/// (derivative functionals of different orders) are thresholded uniformly.
pub fn null_vector(a: &Matrix, tol: f64) -> Option<Vec<f64>> {
    let r = rref(a, tol);
    let pivot_cols: Vec<usize> = r.pivots.iter().map(|&(_, c)| c).collect();
    let free = (0..a.cols).find(|c| !pivot_cols.contains(c))?;
    let mut x = vec![0.0; a.cols];
    x[free] = 1.0;
    for &(row, col) in &r.pivots {
        x[col] = -r.m[(row, free)];
    }
    Some(x)
}

struct Rref {
    m: Matrix,
    pivots: Vec<(usize, usize)>,
}

fn rref(a: &Matrix, tol: f64) -> Rref {
    let mut m = a.clone();
    m.equilibrate_rows();
    let mut pivots = Vec::new();
    let mut next_row = 0;
    for col in 0..m.cols {
        if next_row == m.rows {
            break;
        }
        let (best, best_abs) = (next_row..m.rows)
            .map(|r| (r, m[(r, col)].abs()))
            .fold((next_row, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= tol {
            continue;
        }
        m.swap_rows(best, next_row);
        let p = m[(next_row, col)];
        for j in 0..m.cols {
            m[(next_row, j)] /= p;
        }
        for r in 0..m.rows {
            if r == next_row {
                continue;
            }
            let f = m[(r, col)];
            if f == 0.0 {
                continue;
            }
            for j in 0..m.cols {
                let sub = f * m[(next_row, j)];
                m[(r, j)] -= sub;
            }
        }
        pivots.push((next_row, col));
        next_row += 1;
    }
    Rref { m, pivots }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn lu_solves_known_system() {
        let a = mat(&[&[2.0, 1.0, -1.0], &[-3.0, -1.0, 2.0], &[-2.0, 1.0, 2.0]]);
        let lu = lu_factor(&a).unwrap();
        let x = lu.solve(&[8.0, -11.0, -3.0], 1e-12).unwrap();
        let expect = [2.0, 3.0, -1.0];
        for (xi, ei) in x.iter().zip(expect) {
            assert!((xi - ei).abs() < 1e-12, "{x:?}");
        }
    }

    #[test]
    fn det_sign_log_of_known_matrix() {
        let a = mat(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let lu = lu_factor(&a).unwrap();
        assert_eq!(lu.det_sign(), -1);
        assert!((lu.det_log_abs() - 2.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn exactly_singular_matrix_has_zero_sign() {
        let a = mat(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let lu = lu_factor(&a).unwrap();
        assert_eq!(lu.det_sign(), 0);
        assert_eq!(lu.pivot_ratio(), 0.0);
        assert!(lu.det_log_abs().is_infinite());
        assert!(matches!(
            lu.solve(&[1.0, 1.0], 1e-10),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn null_vector_of_rank_deficient_matrix() {
        let a = mat(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let v = null_vector(&a, 1e-10).unwrap();
        let img = a.mul_vec(&v).unwrap();
        assert!(v.iter().any(|x| x.abs() > 0.5));
        assert!(img.iter().all(|x| x.abs() < 1e-12), "{img:?}");
        assert_eq!(rank(&a, 1e-10), 1);
    }

    #[test]
    fn full_rank_matrix_has_no_null_vector() {
        let a = Matrix::identity(3);
        assert!(null_vector(&a, 1e-10).is_none());
        assert_eq!(rank(&a, 1e-10), 3);
    }

    #[test]
    fn ragged_rows_rejected() {
        let r = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]);
        assert!(matches!(r, Err(LinalgError::RaggedRows { .. })));
    }
}
