//! Dense symmetric eigensolver based on cyclic Jacobi rotations.
//!
//! Each rotation annihilates one off-diagonal pair; sweeps visit every pair
//! in row order, so the result is fully deterministic.

use crate::error::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Matrix {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Largest `|a_ij - a_ji|`, with its position.
    fn asymmetry(&self) -> (usize, usize, f64) {
        let mut worst = (0, 0, 0.0);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let gap = (self.get(i, j) - self.get(j, i)).abs();
                if gap > worst.2 {
                    worst = (i, j, gap);
                }
            }
        }
        worst
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let v = self.get(i, j);
                sum += 2.0 * v * v;
            }
        }
        sum.sqrt()
    }
}

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// `vectors[k]` belongs to `values[k]`.
    pub vectors: Vec<Vec<f64>>,
    pub rotations: usize,
}

impl SymmetricEigen {
    /// Largest `‖M v - λ v‖₂` over all eigenpairs.
    pub fn max_residual(&self, m: &Matrix) -> f64 {
        self.values
            .iter()
            .zip(&self.vectors)
            .map(|(&lambda, v)| {
                m.mul_vec(v)
                    .iter()
                    .zip(v)
                    .map(|(mv, vi)| (mv - lambda * vi).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Diagonalizes a symmetric matrix until the off-diagonal Frobenius norm is
/// at most `tol`, which bounds the error of every eigenvalue. Gives up after
/// `100·n²` rotations.
pub fn symmetric_eigen(m: &Matrix, tol: f64) -> Result<SymmetricEigen> {
    let n = m.dim();
    let (row, col, gap) = m.asymmetry();
    if gap > tol {
        return Err(Error::NotSymmetric { row, col, gap });
    }
    let mut a = m.clone();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i));
            a.set(i, j, avg);
            a.set(j, i, avg);
        }
    }
    let mut v = Matrix::zeros(n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }

    let cap = 100 * n * n;
    let mut rotations = 0;
    // Stop well below tol so the reported eigenvalues carry margin, but not
    // below what rounding allows.
    let frobenius = a.data.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = (tol * 1e-2).max(n as f64 * f64::EPSILON * frobenius);
    loop {
        let off = a.off_diagonal_norm();
        if off <= target {
            break;
        }
        if rotations >= cap {
            if off <= tol {
                break;
            }
            return Err(Error::NoConvergence {
                rotations,
                residual: off,
            });
        }
        for p in 0..n {
            for q in p + 1..n {
                if a.get(p, q) == 0.0 {
                    continue;
                }
                rotate(&mut a, &mut v, p, q);
                rotations += 1;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a.get(x, x).total_cmp(&a.get(y, y)));
    let values = order.iter().map(|&k| a.get(k, k)).collect();
    let vectors = order
        .iter()
        .map(|&k| (0..n).map(|i| v.get(i, k)).collect())
        .collect();
    Ok(SymmetricEigen {
        values,
        vectors,
        rotations,
    })
}

/// Applies the rotation zeroing `a[p][q]`, accumulating it into `v`.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let n = a.dim();
    let apq = a.get(p, q);
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    a.set(p, p, app - t * apq);
    a.set(q, q, aqq + t * apq);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    for k in 0..n {
        if k != p && k != q {
            let akp = a.get(k, p);
            let akq = a.get(k, q);
            let new_kp = c * akp - s * akq;
            let new_kq = s * akp + c * akq;
            a.set(k, p, new_kp);
            a.set(p, k, new_kp);
            a.set(k, q, new_kq);
            a.set(q, k, new_kq);
        }
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, c * vkp - s * vkq);
        v.set(k, q, s * vkp + c * vkq);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let m = Matrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        let e = symmetric_eigen(&m, 1e-12).unwrap();
        assert!(e.values[0].abs() < 1e-12);
        assert!((e.values[1] - 2.0).abs() < 1e-12);
        assert!(e.max_residual(&m) < 1e-12);
    }

    #[test]
    fn diagonal_needs_no_rotation() {
        let m = Matrix::from_rows(&[vec![3.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let e = symmetric_eigen(&m, 1e-12).unwrap();
        assert_eq!(e.values, vec![-1.0, 3.0]);
        assert_eq!(e.rotations, 0);
    }

    #[test]
    fn trace_and_frobenius_preserved() {
        let rows = vec![
            vec![4.0, 1.0, -2.0, 0.5],
            vec![1.0, 3.0, 0.0, 1.5],
            vec![-2.0, 0.0, 5.0, -1.0],
            vec![0.5, 1.5, -1.0, 2.0],
        ];
        let m = Matrix::from_rows(&rows).unwrap();
        let e = symmetric_eigen(&m, 1e-12).unwrap();
        let trace: f64 = (0..4).map(|i| m.get(i, i)).sum();
        assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-10);
        let frob: f64 = rows.iter().flatten().map(|x| x * x).sum();
        assert!((e.values.iter().map(|x| x * x).sum::<f64>() - frob).abs() < 1e-9);
        assert!(e.max_residual(&m) < 1e-10);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_asymmetric() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            symmetric_eigen(&m, 1e-10),
            Err(Error::NotSymmetric { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0]]).is_err());
    }
}
