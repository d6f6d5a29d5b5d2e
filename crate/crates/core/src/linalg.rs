//! Small dense linear algebra: cyclic Jacobi for real symmetric matrices and
//! complex Gaussian elimination for kernels and inverses.
//!
//! Matrices here are at most a few hundred rows, so everything is plain
//! row-major `Vec` storage.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self {
            rows,
            cols,
            data: data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Returns `self - shift * I`.
    pub fn shifted(&self, shift: C64) -> CMatrix {
        assert_eq!(self.rows, self.cols);
        let mut m = self.clone();
        for i in 0..self.rows {
            m[(i, i)] -= shift;
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// `a` is row-major `n x n` and must be symmetric. Returns eigenvalues in
/// ascending order and the matching orthonormal eigenvectors as columns of a
/// row-major `n x n` matrix.
pub fn jacobi_eigh(a: &[f64], n: usize, max_sweeps: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = m[p * n + r];
                if apr.abs() <= 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let arr = m[r * n + r];
                let theta = (arr - app) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkr = m[k * n + r];
                    m[k * n + p] = c * mkp - s * mkr;
                    m[k * n + r] = s * mkp + c * mkr;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mrk = m[r * n + k];
                    m[p * n + k] = c * mpk - s * mrk;
                    m[r * n + k] = s * mpk + c * mrk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkr = v[k * n + r];
                    v[k * n + p] = c * vkp - s * vkr;
                    v[k * n + r] = s * vkp + c * vkr;
                }
            }
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure(max_sweeps));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (col, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[k * n + col] = v[k * n + src];
        }
    }
    Ok((values, vectors))
}

/// Reduced row echelon form with partial pivoting. Returns pivot columns.
fn rref(m: &mut CMatrix, rel_tol: f64) -> Vec<usize> {
    let scale = m.max_abs();
    let tol = rel_tol * scale.max(f64::MIN_POSITIVE);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..m.cols {
        if row == m.rows {
            break;
        }
        let (best, best_abs) = (row..m.rows)
            .map(|r| (r, m[(r, col)].norm()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= tol {
            for r in row..m.rows {
                m[(r, col)] = C64::new(0.0, 0.0);
            }
            continue;
        }
        if best != row {
            for j in 0..m.cols {
                m.data.swap(best * m.cols + j, row * m.cols + j);
            }
        }
        let inv = C64::new(1.0, 0.0) / m[(row, col)];
        for j in col..m.cols {
            m[(row, j)] *= inv;
        }
        for r in 0..m.rows {
            if r == row {
                continue;
            }
            let f = m[(r, col)];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in col..m.cols {
                let sub = f * m[(row, j)];
                m[(r, j)] -= sub;
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Basis of the right kernel of `m`, one vector per free column.
///
/// Columns whose best pivot falls below `rel_tol` times the largest entry of
/// `m` are treated as free.
pub fn nullspace(m: &CMatrix, rel_tol: f64) -> Vec<Vec<C64>> {
    let mut r = m.clone();
    let pivots = rref(&mut r, rel_tol);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![C64::new(0.0, 0.0); m.cols];
            v[f] = C64::new(1.0, 0.0);
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r[(i, f)];
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter().map(|z| z / norm).collect()
        })
        .collect()
}

/// Inverse by Gauss-Jordan elimination; `None` when a pivot falls below
/// `rel_tol` times the largest entry.
pub fn inverse(m: &CMatrix, rel_tol: f64) -> Option<CMatrix> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut aug = CMatrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = m[(i, j)];
        }
        aug[(i, n + i)] = C64::new(1.0, 0.0);
    }
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    for col in 0..n {
        let best = (col..n).max_by(|&a, &b| aug[(a, col)].norm().total_cmp(&aug[(b, col)].norm()))?;
        if aug[(best, col)].norm() <= rel_tol * scale {
            return None;
        }
        if best != col {
            for j in 0..2 * n {
                aug.data.swap(best * 2 * n + j, col * 2 * n + j);
            }
        }
        let inv = C64::new(1.0, 0.0) / aug[(col, col)];
        for j in 0..2 * n {
            aug[(col, j)] *= inv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = aug[(r, col)];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..2 * n {
                let sub = f * aug[(col, j)];
                aug[(r, j)] -= sub;
            }
        }
    }
    let mut out = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = aug[(i, n + j)];
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_diagonalizes_small_symmetric() {
        let a = [2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0];
        let (vals, vecs) = jacobi_eigh(&a, 3, 50).unwrap();
        let s = 2f64.sqrt();
        let expect = [2.0 - s, 2.0, 2.0 + s];
        for (v, e) in vals.iter().zip(expect) {
            assert!((v - e).abs() < 1e-13);
        }
        for c in 0..3 {
            for i in 0..3 {
                let av: f64 = (0..3).map(|k| a[i * 3 + k] * vecs[k * 3 + c]).sum();
                assert!((av - vals[c] * vecs[i * 3 + c]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn nullspace_of_rank_one() {
        let m = CMatrix::from_real(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let ker = nullspace(&m, 1e-10);
        assert_eq!(ker.len(), 2);
        for v in ker {
            for r in m.mul_vec(&v) {
                assert!(r.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let m = CMatrix {
            rows: 2,
            cols: 2,
            data: vec![
                C64::new(1.0, 1.0),
                C64::new(2.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(3.0, 0.5),
            ],
        };
        let inv = inverse(&m, 1e-12).unwrap();
        let id = m.mul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - C64::new(e, 0.0)).norm() < 1e-14);
            }
        }
        let sing = CMatrix::from_real(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(inverse(&sing, 1e-12).is_none());
    }
}
