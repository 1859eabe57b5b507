//! Dense LU factorization with partial pivoting.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::SolveError;

/// Pivots smaller than this times the largest matrix entry are singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-14;

const PARALLEL_MIN_ROWS: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `|Ax - b|_2 / max(|b|_2, tiny)`.
    pub relative_residual: f64,
    /// Smallest pivot magnitude met during elimination.
    pub pivot_min: f64,
}

/// Row-major LU factors of `P A = L U` with unit lower triangle.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    pivot_min: f64,
}

impl LuFactors {
    pub fn factor(a: &DMatrix<f64>) -> Result<Self, SolveError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(SolveError::Shape {
                rows: n,
                cols: a.ncols(),
                rhs: n,
            });
        }
        let mut lu = vec![0.0; n * n];
        let mut max_abs = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let v = a[(i, j)];
                if !v.is_finite() {
                    return Err(SolveError::NonFinite);
                }
                max_abs = max_abs.max(v.abs());
                lu[i * n + j] = v;
            }
        }
        let threshold = SINGULAR_PIVOT_TOL * max_abs;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivot_min = f64::INFINITY;

        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot < threshold || pivot == 0.0 {
                return Err(SolveError::SingularMatrix {
                    column: k,
                    pivot,
                    threshold,
                });
            }
            pivot_min = pivot_min.min(pivot);
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }

            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let akk = pivot_row[k];
            let eliminate = |row: &mut [f64]| {
                let l = row[k] / akk;
                row[k] = l;
                if l != 0.0 {
                    for (r, &u) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *r -= l * u;
                    }
                }
            };
            if n - k > PARALLEL_MIN_ROWS {
                tail.par_chunks_mut(n).for_each(eliminate);
            } else {
                tail.chunks_mut(n).for_each(eliminate);
            }
        }
        Ok(Self { n, lu, perm, pivot_min })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..].iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    pub fn pivot_min(&self) -> f64 {
        self.pivot_min
    }
}

pub fn relative_residual(a: &DMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
    let ax = a * DVector::from_column_slice(x);
    let r: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    let bn: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    r / bn.max(f64::MIN_POSITIVE)
}

/// Factors `a`, solves `a x = b` and reports the relative residual.
pub fn solve_dense(a: &DMatrix<f64>, b: &[f64]) -> Result<SolveReport, SolveError> {
    if b.len() != a.nrows() || a.nrows() != a.ncols() {
        return Err(SolveError::Shape {
            rows: a.nrows(),
            cols: a.ncols(),
            rhs: b.len(),
        });
    }
    if !b.iter().all(|v| v.is_finite()) {
        return Err(SolveError::NonFinite);
    }
    let lu = LuFactors::factor(a)?;
    let solution = lu.solve(b);
    if !solution.iter().all(|v| v.is_finite()) {
        return Err(SolveError::NonFinite);
    }
    Ok(SolveReport {
        relative_residual: relative_residual(a, &solution, b),
        pivot_min: lu.pivot_min(),
        solution,
    })
}
