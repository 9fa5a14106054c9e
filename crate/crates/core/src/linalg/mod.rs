//! Dense vector/matrix primitives, orthonormalization, and orthogonal
//! projectors.
//!
//! Everything here operates on plain `&[f64]` slices and row-major
//! [`DenseMatrix`] buffers; the sizes involved are desk scale (thousands of
//! rows at most), so no BLAS backend is used.

mod svd;

pub use svd::{thin_svd, SvdResult};

use crate::error::{Error, Result};

/// Default relative tolerance below which a vector's residual is considered
/// linearly dependent and dropped during orthonormalization.
pub const DEFAULT_DROP_TOL: f64 = 1e-10;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// y += alpha * x
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x {
        *xi *= alpha;
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|x| x.is_finite())
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Builds a matrix from row-major data. Rejects empty shapes, length
    /// mismatches, and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix shape {rows}x{cols} must be at least 1x1"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "DenseMatrix::new",
                expected: rows * cols,
                got: data.len(),
            });
        }
        if !all_finite(&data) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix whose rows are the given equal-length vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        if nrows == 0 {
            return Err(Error::InvalidArgument("matrix needs at least one row".into()));
        }
        let ncols = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::DimensionMismatch {
                    context: "DenseMatrix::from_rows",
                    expected: ncols,
                    got: rows[i].len(),
                });
            }
        }
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            data.extend_from_slice(r);
        }
        Self::new(nrows, ncols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A set of mutually orthonormal vectors in `R^dim`.
///
/// Construction validates the invariants: unit norms within `1e-10`,
/// pairwise inner products within `1e-10`, and `1 <= len <= dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalSet {
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

const ORTHO_TOL: f64 = 1e-10;

impl OrthonormalSet {
    pub fn new(dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.is_empty() || vectors.len() > dim {
            return Err(Error::InvalidArgument(format!(
                "orthonormal set of {} vectors in dimension {dim} is out of range",
                vectors.len()
            )));
        }
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "OrthonormalSet::new",
                    expected: dim,
                    got: v.len(),
                });
            }
            if !all_finite(v) {
                return Err(Error::NonFinite("orthonormal set entries"));
            }
            if (norm(v) - 1.0).abs() > ORTHO_TOL {
                return Err(Error::InvalidArgument(format!(
                    "vector norm {} is not 1 within {ORTHO_TOL:e}",
                    norm(v)
                )));
            }
        }
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                let d = dot(&vectors[i], &vectors[j]);
                if d.abs() > ORTHO_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "vectors {i} and {j} have inner product {d:e}"
                    )));
                }
            }
        }
        Ok(Self { dim, vectors })
    }

    /// Construction path for vectors that are orthonormal by construction
    /// (Gram-Schmidt or SVD output). Validates only in debug builds.
    pub(crate) fn from_orthonormalized(dim: usize, vectors: Vec<Vec<f64>>) -> Self {
        debug_assert!(Self::new(dim, vectors.clone()).is_ok());
        Self { dim, vectors }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i]
    }

    /// The orthogonal projector `P = sum_i e_i e_i^T` as a dense matrix.
    pub fn projector(&self) -> DenseMatrix {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for e in &self.vectors {
            for r in 0..d {
                if e[r] == 0.0 {
                    continue;
                }
                let er = e[r];
                let row = &mut data[r * d..(r + 1) * d];
                axpy(er, e, row);
            }
        }
        DenseMatrix::new(d, d, data).expect("projector is square and finite")
    }

    /// Identity basis of `R^dim` (the degenerate full-space case).
    pub fn identity(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("identity basis needs dim >= 1".into()));
        }
        let vectors = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
        Ok(Self { dim, vectors })
    }
}

/// Orthogonal projection of `v` onto the span of `basis`.
///
/// Returns the projection `sum_i <e_i, v> e_i` and the residual norm
/// `||v - projection||`.
pub fn project_onto_span(basis: &OrthonormalSet, v: &[f64]) -> Result<(Vec<f64>, f64)> {
    if v.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            context: "project_onto_span",
            expected: basis.dim(),
            got: v.len(),
        });
    }
    let mut projection = vec![0.0; v.len()];
    for e in basis.vectors() {
        axpy(dot(e, v), e, &mut projection);
    }
    let residual = sub(v, &projection);
    Ok((projection, norm(&residual)))
}

/// Modified Gram-Schmidt orthonormalization with one re-orthogonalization
/// pass. Vectors whose residual after projection falls below
/// `drop_tol * original_norm` are dropped.
pub fn gram_schmidt_orthonormalize(
    vectors: &[Vec<f64>],
    drop_tol: f64,
) -> Result<OrthonormalSet> {
    if vectors.is_empty() {
        return Err(Error::InvalidArgument("gram_schmidt needs at least one vector".into()));
    }
    if !(drop_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("drop_tol {drop_tol} must be > 0")));
    }
    let dim = vectors[0].len();
    let mut kept: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                context: "gram_schmidt_orthonormalize",
                expected: dim,
                got: v.len(),
            });
        }
        if !all_finite(v) {
            return Err(Error::NonFinite("gram_schmidt input"));
        }
        let original_norm = norm(v);
        let mut w = v.clone();
        // Two projection passes; classical single-pass MGS loses
        // orthogonality once dim reaches the hundreds.
        for _ in 0..2 {
            for e in &kept {
                let c = dot(e, &w);
                axpy(-c, e, &mut w);
            }
        }
        let residual_norm = norm(&w);
        if residual_norm <= drop_tol * original_norm {
            continue;
        }
        scale(1.0 / residual_norm, &mut w);
        kept.push(w);
        if kept.len() == dim {
            // Remaining vectors cannot add directions; they would all drop.
            break;
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyBasis);
    }
    Ok(OrthonormalSet::from_orthonormalized(dim, kept))
}
