//! Least squares via Householder QR with column pivoting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Pivots below this fraction of the leading diagonal count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OlsError {
    #[error("insufficient data: {rows} observations for {cols} parameters")]
    Insufficient { rows: usize, cols: usize },
    /// Column indices that are linear combinations of the others.
    #[error("singular design: columns {columns:?} are collinear with the rest")]
    Singular { columns: Vec<usize> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceKind {
    /// σ̂²(XᵀX)⁻¹ with σ̂² = RSS/(n−k).
    #[default]
    Classical,
    /// HC1 sandwich estimator.
    Robust,
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, OlsError> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(OlsError::Dimension(format!("row {i} has {} entries, expected {cols}", r.len())));
        }
        Ok(Matrix { rows: rows.len(), cols, data: rows.concat() })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
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

#[derive(Debug, Clone, PartialEq)]
pub struct OlsSolution {
    pub coefficients: Vec<f64>,
    /// k×k, row-major.
    pub covariance: Matrix,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub df: usize,
}

impl OlsSolution {
    pub fn standard_errors(&self) -> Vec<f64> {
        (0..self.covariance.rows).map(|i| self.covariance[(i, i)].max(0.0).sqrt()).collect()
    }
}

pub fn ols_solve(x: &Matrix, y: &[f64]) -> Result<OlsSolution, OlsError> {
    ols_solve_with(x, y, CovarianceKind::Classical)
}

pub fn ols_solve_with(x: &Matrix, y: &[f64], kind: CovarianceKind) -> Result<OlsSolution, OlsError> {
    let (n, k) = (x.rows, x.cols);
    if y.len() != n {
        return Err(OlsError::Dimension(format!("{n} rows but {} responses", y.len())));
    }
    if k == 0 || n < k {
        return Err(OlsError::Insufficient { rows: n, cols: k });
    }

    // column-major working copy
    let mut a: Vec<Vec<f64>> = (0..k).map(|j| (0..n).map(|i| x[(i, j)]).collect()).collect();
    let mut qty = y.to_vec();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut diag = vec![0.0; k];

    for j in 0..k {
        let mut best = j;
        let mut best_norm = -1.0;
        for (c, col) in a.iter().enumerate().skip(j) {
            let norm: f64 = col[j..].iter().map(|v| v * v).sum();
            if norm > best_norm {
                best = c;
                best_norm = norm;
            }
        }
        a.swap(j, best);
        perm.swap(j, best);

        let alpha = best_norm.sqrt();
        if alpha == 0.0 {
            diag[j] = 0.0;
            continue;
        }
        let head = a[j][j];
        let r = if head > 0.0 { -alpha } else { alpha };
        // v = x - r e1, stored in place; H = I - 2vvᵀ/vᵀv
        a[j][j] = head - r;
        let vtv: f64 = a[j][j..].iter().map(|v| v * v).sum();
        let (done, rest) = a.split_at_mut(j + 1);
        let v = &done[j][j..];
        for col in rest.iter_mut() {
            let dot: f64 = v.iter().zip(&col[j..]).map(|(p, q)| p * q).sum();
            let f = 2.0 * dot / vtv;
            for (c, vi) in col[j..].iter_mut().zip(v) {
                *c -= f * vi;
            }
        }
        let dot: f64 = v.iter().zip(&qty[j..]).map(|(p, q)| p * q).sum();
        let f = 2.0 * dot / vtv;
        for (c, vi) in qty[j..].iter_mut().zip(v) {
            *c -= f * vi;
        }
        diag[j] = r;
    }

    let lead = diag[0].abs();
    let rank = diag.iter().take_while(|d| d.abs() > RANK_TOLERANCE * lead && lead > 0.0).count();
    if rank < k {
        let mut columns: Vec<usize> = perm[rank..].to_vec();
        columns.sort_unstable();
        return Err(OlsError::Singular { columns });
    }

    // R: diagonal in `diag`, strict upper triangle in a[c][row]
    let r_at = |i: usize, j: usize| if i == j { diag[i] } else { a[j][i] };

    let mut z = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| r_at(i, j) * z[j]).sum();
        z[i] = (qty[i] - s) / diag[i];
    }
    let mut beta = vec![0.0; k];
    for (pos, &orig) in perm.iter().enumerate() {
        beta[orig] = z[pos];
    }

    let fitted = x.mul_vec(&beta);
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    let rss: f64 = residuals.iter().map(|e| e * e).sum();
    let df = n - k;

    // (XᵀX)⁻¹ = P R⁻¹ R⁻ᵀ Pᵀ
    let mut rinv = Matrix::zeros(k, k);
    for col in 0..k {
        for i in (0..=col).rev() {
            let rhs = if i == col { 1.0 } else { 0.0 };
            let s: f64 = (i + 1..=col).map(|j| r_at(i, j) * rinv[(j, col)]).sum();
            rinv[(i, col)] = (rhs - s) / diag[i];
        }
    }
    let mut xtx_inv = Matrix::zeros(k, k);
    for p in 0..k {
        for q in 0..k {
            let s: f64 = (p.max(q)..k).map(|m| rinv[(p, m)] * rinv[(q, m)]).sum();
            xtx_inv[(perm[p], perm[q])] = s;
        }
    }

    let covariance = match kind {
        CovarianceKind::Classical => {
            // undefined without residual degrees of freedom
            let sigma2 = if df == 0 { f64::NAN } else { rss / df as f64 };
            Matrix { rows: k, cols: k, data: xtx_inv.data.iter().map(|v| v * sigma2).collect() }
        }
        CovarianceKind::Robust => {
            let mut meat = Matrix::zeros(k, k);
            for (i, e) in residuals.iter().enumerate() {
                let row = x.row(i);
                let e2 = e * e;
                for p in 0..k {
                    for q in 0..k {
                        meat[(p, q)] += e2 * row[p] * row[q];
                    }
                }
            }
            let scale = if df == 0 { f64::NAN } else { n as f64 / df as f64 };
            let mut tmp = Matrix::zeros(k, k);
            for p in 0..k {
                for q in 0..k {
                    tmp[(p, q)] = (0..k).map(|m| xtx_inv[(p, m)] * meat[(m, q)]).sum();
                }
            }
            let mut cov = Matrix::zeros(k, k);
            for p in 0..k {
                for q in 0..k {
                    cov[(p, q)] = scale * (0..k).map(|m| tmp[(p, m)] * xtx_inv[(m, q)]).sum::<f64>();
                }
            }
            cov
        }
    };

    Ok(OlsSolution { coefficients: beta, covariance, residuals, rss, df })
}
