//! Thin SVD via one-sided Jacobi rotations.
//!
//! One-sided Jacobi orthogonalizes the columns of the working matrix with
//! plane rotations accumulated into V; it is simple, accurate for small
//! singular values, and entirely adequate at desk scale.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, scale, DenseMatrix};

/// Result of a thin SVD: `min(rows, cols)` singular triples with
/// `S = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    /// Orthonormal columns of U, each of length `rows`.
    pub left_vectors: Vec<Vec<f64>>,
    /// Singular values, sorted nonincreasing, all >= 0.
    pub singular_values: Vec<f64>,
    /// Orthonormal columns of V, each of length `cols`.
    pub right_vectors: Vec<Vec<f64>>,
}

const MAX_SWEEPS: usize = 64;
// Pairwise convergence threshold: |<w_i, w_j>| <= tol * ||w_i|| * ||w_j||.
const JACOBI_TOL: f64 = 1e-15;
// Columns whose norm falls below this fraction of ||A||_F carry only
// rotation round-off; they are frozen and reported as zero singular values.
const COLUMN_FREEZE_REL: f64 = 1e-13;

/// Thin SVD of a dense matrix.
pub fn thin_svd(matrix: &DenseMatrix) -> Result<SvdResult> {
    let m = matrix.rows();
    let n = matrix.cols();
    if m >= n {
        svd_tall(matrix)
    } else {
        // SVD of the transpose, with U and V exchanged.
        let mut t = vec![0.0; m * n];
        for r in 0..m {
            for c in 0..n {
                t[c * m + r] = matrix.get(r, c);
            }
        }
        let transposed = DenseMatrix::new(n, m, t)?;
        let result = svd_tall(&transposed)?;
        Ok(SvdResult {
            left_vectors: result.right_vectors,
            singular_values: result.singular_values,
            right_vectors: result.left_vectors,
        })
    }
}

fn svd_tall(matrix: &DenseMatrix) -> Result<SvdResult> {
    let m = matrix.rows();
    let n = matrix.cols();
    debug_assert!(m >= n);

    // Working columns of A and of the accumulated V.
    let mut w: Vec<Vec<f64>> = (0..n).map(|c| matrix.column(c)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            e
        })
        .collect();

    let frobenius = matrix.frobenius_norm();
    let freeze2 = (COLUMN_FREEZE_REL * frobenius).powi(2);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let a = dot(&w[i], &w[i]);
                let b = dot(&w[j], &w[j]);
                if a <= freeze2 || b <= freeze2 {
                    continue;
                }
                let c = dot(&w[i], &w[j]);
                if c.abs() <= JACOBI_TOL * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let tau = (b - a) / (2.0 * c);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                rotate_pair(&mut w, i, j, cs, sn);
                rotate_pair(&mut v, i, j, cs, sn);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged(format!(
            "one-sided Jacobi SVD did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let freeze = COLUMN_FREEZE_REL * frobenius;
    let mut sigma: Vec<f64> = w
        .iter()
        .map(|col| {
            let s = norm(col);
            if s <= freeze {
                0.0
            } else {
                s
            }
        })
        .collect();
    let mut left: Vec<Option<Vec<f64>>> = w
        .iter()
        .zip(&sigma)
        .map(|(col, &s)| {
            if s > 0.0 {
                let mut u = col.clone();
                scale(1.0 / s, &mut u);
                Some(u)
            } else {
                None
            }
        })
        .collect();

    // Sort triples by singular value, largest first (stable).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    sigma = order.iter().map(|&i| sigma[i]).collect();
    left = order.iter().map(|&i| left[i].take()).collect();
    let right: Vec<Vec<f64>> = order.iter().map(|&i| v[i].clone()).collect();

    let left = complete_left_vectors(left, m);

    Ok(SvdResult {
        left_vectors: left,
        singular_values: sigma,
        right_vectors: right,
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], i: usize, j: usize, cs: f64, sn: f64) {
    let len = cols[i].len();
    for r in 0..len {
        let wi = cols[i][r];
        let wj = cols[j][r];
        cols[i][r] = cs * wi - sn * wj;
        cols[j][r] = sn * wi + cs * wj;
    }
}

/// Fills columns for exactly-zero singular values with canonical vectors
/// orthogonalized against the rest, keeping U's columns orthonormal.
fn complete_left_vectors(left: Vec<Option<Vec<f64>>>, m: usize) -> Vec<Vec<f64>> {
    let mut done: Vec<Vec<f64>> = left.iter().flatten().cloned().collect();
    let mut out = Vec::with_capacity(left.len());
    let mut candidate = 0usize;
    for slot in left {
        match slot {
            Some(u) => out.push(u),
            None => {
                let mut filled = None;
                while candidate < m {
                    let mut e = vec![0.0; m];
                    e[candidate] = 1.0;
                    candidate += 1;
                    for _ in 0..2 {
                        for u in &done {
                            let c = dot(u, &e);
                            crate::linalg::axpy(-c, u, &mut e);
                        }
                    }
                    let r = norm(&e);
                    if r > 0.5 {
                        scale(1.0 / r, &mut e);
                        filled = Some(e);
                        break;
                    }
                }
                let u = filled.expect("fewer orthonormal columns than rows");
                done.push(u.clone());
                out.push(u);
            }
        }
    }
    out
}

impl SvdResult {
    /// Frobenius norm of `S - U diag(sigma) V^T`.
    pub fn reconstruction_error(&self, matrix: &DenseMatrix) -> f64 {
        let m = matrix.rows();
        let n = matrix.cols();
        let mut err = 0.0;
        for r in 0..m {
            for c in 0..n {
                let mut rec = 0.0;
                for (k, s) in self.singular_values.iter().enumerate() {
                    rec += s * self.left_vectors[k][r] * self.right_vectors[k][c];
                }
                let d = matrix.get(r, c) - rec;
                err += d * d;
            }
        }
        err.sqrt()
    }
}
