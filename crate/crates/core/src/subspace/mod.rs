//! Search-subspace construction, selection, and in-subspace sampling.
//!
//! A [`SubspaceBasis`] is built from an unlabeled [`SubspaceDataset`] either
//! by Gram-Schmidt or by SVD (which additionally records singular values and
//! enables top/bottom selection). [`sample_in_subspace`] draws isometric
//! random vectors constrained to the basis span, scaled by `sqrt(D/M)` so
//! the expected squared length matches an ambient draw.

mod io;

pub use io::{load_basis, save_basis};

use crate::error::{Error, Result};
use crate::linalg::{
    self, all_finite, axpy, gram_schmidt_orthonormalize, norm, scale, DenseMatrix,
    OrthonormalSet, DEFAULT_DROP_TOL,
};
use crate::rng::{chacha, GaussianSource};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Relative threshold on singular values: sigma_i is retained when
/// `sigma_i > RANK_TOL_REL * sigma_1`.
pub const RANK_TOL_REL: f64 = 1e-10;

/// Unlabeled instances spanning the search subspace.
#[derive(Debug, Clone)]
pub struct SubspaceDataset {
    dim: usize,
    instances: Vec<Vec<f64>>,
}

impl SubspaceDataset {
    pub fn new(dim: usize, instances: Vec<Vec<f64>>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::InvalidDataset("subspace dataset needs at least one instance".into()));
        }
        for inst in &instances {
            if inst.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "SubspaceDataset::new",
                    expected: dim,
                    got: inst.len(),
                });
            }
            if !all_finite(inst) {
                return Err(Error::NonFinite("subspace dataset instance"));
            }
        }
        Ok(Self { dim, instances })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn instances(&self) -> &[Vec<f64>] {
        &self.instances
    }
}

/// How a basis was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    GramSchmidt,
    SvdFull,
    SvdTop,
    SvdBottom,
    Identity,
}

/// Orthonormal basis of the attack subspace, with singular values when built
/// by SVD.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    basis: OrthonormalSet,
    singular_values: Option<Vec<f64>>,
    provenance: Provenance,
}

impl SubspaceBasis {
    /// Assembles a basis from parts, validating the singular-value contract:
    /// same length as the basis, sorted nonincreasing, all positive.
    pub fn from_parts(
        basis: OrthonormalSet,
        singular_values: Option<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        if let Some(sv) = &singular_values {
            if sv.len() != basis.len() {
                return Err(Error::DimensionMismatch {
                    context: "SubspaceBasis::from_parts",
                    expected: basis.len(),
                    got: sv.len(),
                });
            }
            for w in sv.windows(2) {
                if !(w[0] >= w[1]) {
                    return Err(Error::InvalidArgument(
                        "singular values must be sorted nonincreasing".into(),
                    ));
                }
            }
            if sv.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
                return Err(Error::InvalidArgument(
                    "singular values must be finite and positive".into(),
                ));
            }
        }
        Ok(Self { basis, singular_values, provenance })
    }

    /// The full-space identity basis (degenerate subspace, M = D).
    pub fn identity(dim: usize) -> Result<Self> {
        Ok(Self {
            basis: OrthonormalSet::identity(dim)?,
            singular_values: None,
            provenance: Provenance::Identity,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Number of basis vectors M.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn orthonormal_set(&self) -> &OrthonormalSet {
        &self.basis
    }

    pub fn singular_values(&self) -> Option<&[f64]> {
        self.singular_values.as_deref()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Residual norm of `v` after projection onto the basis span.
    pub fn residual_norm(&self, v: &[f64]) -> Result<f64> {
        Ok(linalg::project_onto_span(&self.basis, v)?.1)
    }
}

/// Orthonormalization method for [`build_basis`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisMethod {
    GramSchmidt,
    Svd,
}

/// Builds an orthonormal basis spanning the dataset instances.
///
/// Instances are spanned raw, never mean-centered: centering would change
/// the span. The SVD method retains right singular vectors with
/// `sigma > RANK_TOL_REL * sigma_1` and records their singular values.
pub fn build_basis(dataset: &SubspaceDataset, method: BasisMethod) -> Result<SubspaceBasis> {
    match method {
        BasisMethod::GramSchmidt => {
            let set = gram_schmidt_orthonormalize(dataset.instances(), DEFAULT_DROP_TOL)?;
            SubspaceBasis::from_parts(set, None, Provenance::GramSchmidt)
        }
        BasisMethod::Svd => {
            let matrix = DenseMatrix::from_rows(dataset.instances())?;
            let svd = linalg::thin_svd(&matrix)?;
            let sigma1 = svd.singular_values.first().copied().unwrap_or(0.0);
            if sigma1 <= 0.0 {
                return Err(Error::EmptyBasis);
            }
            let tol = RANK_TOL_REL * sigma1;
            let mut vectors = Vec::new();
            let mut values = Vec::new();
            for (s, v) in svd.singular_values.iter().zip(svd.right_vectors) {
                if *s > tol {
                    vectors.push(v);
                    values.push(*s);
                }
            }
            if vectors.is_empty() {
                return Err(Error::EmptyBasis);
            }
            let set = OrthonormalSet::new(dataset.dim(), vectors)?;
            SubspaceBasis::from_parts(set, Some(values), Provenance::SvdFull)
        }
    }
}

/// Which end of the spectrum to keep in [`select_singular_vectors`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectMode {
    Top,
    Bottom,
}

/// Keeps the k singular vectors with the largest (top) or smallest (bottom)
/// positive singular values of an SVD-built basis.
pub fn select_singular_vectors(
    basis: &SubspaceBasis,
    mode: SelectMode,
    k: usize,
) -> Result<SubspaceBasis> {
    let Some(values) = basis.singular_values() else {
        return Err(Error::InvalidArgument(
            "selection requires a basis with singular values (svd provenance)".into(),
        ));
    };
    let m = basis.len();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "k = {k} out of range for basis with {m} vectors"
        )));
    }
    let range = match mode {
        SelectMode::Top => 0..k,
        SelectMode::Bottom => m - k..m,
    };
    let vectors: Vec<Vec<f64>> = range.clone().map(|i| basis.orthonormal_set().vector(i).to_vec()).collect();
    let values: Vec<f64> = range.map(|i| values[i]).collect();
    let set = OrthonormalSet::from_orthonormalized(basis.dim(), vectors);
    let provenance = match mode {
        SelectMode::Top => Provenance::SvdTop,
        SelectMode::Bottom => Provenance::SvdBottom,
    };
    SubspaceBasis::from_parts(set, Some(values), provenance)
}

/// Coordinate distribution for isometric random vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Gaussian,
    Rademacher,
}

/// Seedable source of isometric random vectors: coordinates are i.i.d.
/// standard normal (gaussian) or uniform on {+1, -1} (rademacher).
#[derive(Debug, Clone)]
pub struct IsometricSampler {
    kind: SamplerKind,
    rng: ChaCha8Rng,
    gaussian: GaussianSource,
}

impl IsometricSampler {
    pub fn new(kind: SamplerKind, seed: u64) -> Self {
        Self { kind, rng: chacha(seed), gaussian: GaussianSource::new() }
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    /// One isometric random vector of dimension `d`.
    pub fn sample(&mut self, d: usize) -> Vec<f64> {
        match self.kind {
            SamplerKind::Gaussian => (0..d).map(|_| self.gaussian.sample(&mut self.rng)).collect(),
            SamplerKind::Rademacher => (0..d)
                .map(|_| if self.rng.gen::<bool>() { 1.0 } else { -1.0 })
                .collect(),
        }
    }
}

/// Draws a random vector constrained to the basis span:
/// `sqrt(D/M) * sum_i w_i e_i` with `w = sample(M)`.
///
/// The scaling keeps the expected squared length equal to D, the value an
/// unconstrained ambient draw would have.
pub fn sample_in_subspace(
    basis: &SubspaceBasis,
    sampler: &mut IsometricSampler,
    ambient_dim: usize,
) -> Result<Vec<f64>> {
    if basis.dim() != ambient_dim {
        return Err(Error::DimensionMismatch {
            context: "sample_in_subspace",
            expected: ambient_dim,
            got: basis.dim(),
        });
    }
    let m = basis.len();
    let w = sampler.sample(m);
    let mut out = vec![0.0; ambient_dim];
    for (wi, e) in w.iter().zip(basis.orthonormal_set().vectors()) {
        axpy(*wi, e, &mut out);
    }
    scale((ambient_dim as f64 / m as f64).sqrt(), &mut out);
    Ok(out)
}

/// A unit-norm direction in the basis span.
///
/// A zero draw (probability zero for gaussian; impossible for rademacher)
/// is resampled once, then reported as an error.
pub fn unit_direction_in_subspace(
    basis: &SubspaceBasis,
    sampler: &mut IsometricSampler,
    ambient_dim: usize,
) -> Result<Vec<f64>> {
    for _ in 0..2 {
        let mut v = sample_in_subspace(basis, sampler, ambient_dim)?;
        let n = norm(&v);
        if n > 0.0 {
            scale(1.0 / n, &mut v);
            return Ok(v);
        }
    }
    Err(Error::InvalidArgument("sampled the zero vector twice in a row".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::project_onto_span;

    fn dataset(rows: &[&[f64]]) -> SubspaceDataset {
        SubspaceDataset::new(rows[0].len(), rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn build_basis_spans_xy_plane() {
        let ds = dataset(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0]]);
        for method in [BasisMethod::GramSchmidt, BasisMethod::Svd] {
            let basis = build_basis(&ds, method).unwrap();
            assert_eq!(basis.len(), 2);
            assert!(basis.residual_norm(&[3.0, -4.0, 0.0]).unwrap() < 1e-12);
            assert!((basis.residual_norm(&[0.0, 0.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn build_basis_single_instance() {
        let ds = dataset(&[&[1.0, 1.0]]);
        let basis = build_basis(&ds, BasisMethod::GramSchmidt).unwrap();
        assert_eq!(basis.len(), 1);
        let e = basis.orthonormal_set().vector(0);
        let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
        assert!((e[0].abs() - inv_sqrt2).abs() < 1e-12);
        assert!((e[1].abs() - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn build_basis_all_zero_errors() {
        let ds = dataset(&[&[0.0, 0.0]]);
        assert!(matches!(build_basis(&ds, BasisMethod::GramSchmidt), Err(Error::EmptyBasis)));
        assert!(matches!(build_basis(&ds, BasisMethod::Svd), Err(Error::EmptyBasis)));
    }

    #[test]
    fn svd_basis_recovers_intrinsic_rank() {
        // Oracle: 40 instances generated from 7 known generators in R^30.
        let mut sampler = IsometricSampler::new(SamplerKind::Gaussian, 17);
        let generators: Vec<Vec<f64>> = (0..7).map(|_| sampler.sample(30)).collect();
        let instances: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let coeffs = sampler.sample(7);
                let mut x = vec![0.0; 30];
                for (c, g) in coeffs.iter().zip(&generators) {
                    axpy(*c, g, &mut x);
                }
                x
            })
            .collect();
        let ds = SubspaceDataset::new(30, instances).unwrap();
        let svd_basis = build_basis(&ds, BasisMethod::Svd).unwrap();
        assert_eq!(svd_basis.len(), 7);
        let gs_basis = build_basis(&ds, BasisMethod::GramSchmidt).unwrap();
        assert_eq!(gs_basis.len(), 7);
        let diff = svd_basis
            .orthonormal_set()
            .projector()
            .max_abs_diff(&gs_basis.orthonormal_set().projector());
        assert!(diff < 1e-8, "projector difference {diff}");
    }

    #[test]
    fn selection_keeps_requested_end() {
        let ds = dataset(&[&[3.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, 1.0]]);
        let basis = build_basis(&ds, BasisMethod::Svd).unwrap();
        assert_eq!(basis.singular_values().unwrap(), &[3.0, 2.0, 1.0]);

        let bottom = select_singular_vectors(&basis, SelectMode::Bottom, 2).unwrap();
        assert_eq!(bottom.singular_values().unwrap(), &[2.0, 1.0]);
        assert_eq!(bottom.provenance(), Provenance::SvdBottom);

        let top = select_singular_vectors(&basis, SelectMode::Top, 1).unwrap();
        assert_eq!(top.singular_values().unwrap(), &[3.0]);
        assert!((top.orthonormal_set().vector(0)[0].abs() - 1.0).abs() < 1e-12);

        assert!(select_singular_vectors(&basis, SelectMode::Top, 0).is_err());
        assert!(select_singular_vectors(&basis, SelectMode::Top, 4).is_err());
    }

    #[test]
    fn selection_requires_singular_values() {
        let ds = dataset(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let basis = build_basis(&ds, BasisMethod::GramSchmidt).unwrap();
        assert!(select_singular_vectors(&basis, SelectMode::Top, 1).is_err());
    }

    #[test]
    fn selection_at_thousand_vector_scale() {
        // 1000-vector basis, bottom 800 kept.
        let dim = 1000;
        let set = OrthonormalSet::identity(dim).unwrap();
        let sv: Vec<f64> = (0..dim).map(|i| (dim - i) as f64).collect();
        let basis = SubspaceBasis::from_parts(set, Some(sv), Provenance::SvdFull).unwrap();
        let bottom = select_singular_vectors(&basis, SelectMode::Bottom, 800).unwrap();
        assert_eq!(bottom.len(), 800);
        assert_eq!(bottom.singular_values().unwrap()[0], 800.0);
        assert_eq!(bottom.singular_values().unwrap()[799], 1.0);
    }

    #[test]
    fn sample_stays_on_single_basis_vector() {
        let set = OrthonormalSet::new(3, vec![vec![1.0, 0.0, 0.0]]).unwrap();
        let basis = SubspaceBasis::from_parts(set, None, Provenance::GramSchmidt).unwrap();
        let mut sampler = IsometricSampler::new(SamplerKind::Gaussian, 5);
        let v = sample_in_subspace(&basis, &mut sampler, 3).unwrap();
        assert_eq!(v[1], 0.0);
        assert_eq!(v[2], 0.0);
        assert!(v[0] != 0.0);
    }

    #[test]
    fn identity_basis_reproduces_ambient_sampling() {
        let dim = 24;
        let basis = SubspaceBasis::identity(dim).unwrap();
        let mut a = IsometricSampler::new(SamplerKind::Rademacher, 11);
        let mut b = IsometricSampler::new(SamplerKind::Rademacher, 11);
        let constrained = sample_in_subspace(&basis, &mut a, dim).unwrap();
        let ambient = b.sample(dim);
        assert_eq!(constrained, ambient);
    }

    #[test]
    fn scaling_law_monte_carlo() {
        // E||v||^2 = D for subspace draws of both kinds.
        let dim = 64;
        let m = 8;
        let mut frame_sampler = IsometricSampler::new(SamplerKind::Gaussian, 23);
        let vectors: Vec<Vec<f64>> = (0..m).map(|_| frame_sampler.sample(dim)).collect();
        let set = gram_schmidt_orthonormalize(&vectors, DEFAULT_DROP_TOL).unwrap();
        let basis = SubspaceBasis::from_parts(set, None, Provenance::GramSchmidt).unwrap();
        for kind in [SamplerKind::Gaussian, SamplerKind::Rademacher] {
            let mut sampler = IsometricSampler::new(kind, 31);
            let draws = 20_000;
            let mean_sq: f64 = (0..draws)
                .map(|_| {
                    let v = sample_in_subspace(&basis, &mut sampler, dim).unwrap();
                    crate::linalg::dot(&v, &v)
                })
                .sum::<f64>()
                / draws as f64;
            let rel = (mean_sq - dim as f64).abs() / dim as f64;
            assert!(rel < 0.05, "{kind:?}: mean squared norm {mean_sq}");
        }
    }

    #[test]
    fn unit_directions_are_unit_and_in_span() {
        let dim = 64;
        let m = 8;
        let mut frame_sampler = IsometricSampler::new(SamplerKind::Gaussian, 29);
        let vectors: Vec<Vec<f64>> = (0..m).map(|_| frame_sampler.sample(dim)).collect();
        let set = gram_schmidt_orthonormalize(&vectors, DEFAULT_DROP_TOL).unwrap();
        let basis = SubspaceBasis::from_parts(set, None, Provenance::GramSchmidt).unwrap();
        let mut sampler = IsometricSampler::new(SamplerKind::Gaussian, 37);
        for _ in 0..1000 {
            let u = unit_direction_in_subspace(&basis, &mut sampler, dim).unwrap();
            assert!((norm(&u) - 1.0).abs() < 1e-12);
            let (_, residual) = project_onto_span(basis.orthonormal_set(), &u).unwrap();
            assert!(residual < 1e-10);
        }
    }

    #[test]
    fn unit_direction_single_axis_gaussian() {
        let set = OrthonormalSet::new(2, vec![vec![1.0, 0.0]]).unwrap();
        let basis = SubspaceBasis::from_parts(set, None, Provenance::GramSchmidt).unwrap();
        let mut sampler = IsometricSampler::new(SamplerKind::Gaussian, 3);
        let u = unit_direction_in_subspace(&basis, &mut sampler, 2).unwrap();
        assert!((u[0].abs() - 1.0).abs() < 1e-15);
        assert_eq!(u[1], 0.0);
    }

    #[test]
    fn linear_combinations_stay_in_span() {
        // Closure: combinations of in-span draws remain in the span.
        let dim = 32;
        let m = 5;
        let mut frame_sampler = IsometricSampler::new(SamplerKind::Gaussian, 41);
        let vectors: Vec<Vec<f64>> = (0..m).map(|_| frame_sampler.sample(dim)).collect();
        let set = gram_schmidt_orthonormalize(&vectors, DEFAULT_DROP_TOL).unwrap();
        let basis = SubspaceBasis::from_parts(set, None, Provenance::GramSchmidt).unwrap();
        let mut sampler = IsometricSampler::new(SamplerKind::Gaussian, 43);
        let mut combo = vec![0.0; dim];
        for i in 0..20 {
            let v = sample_in_subspace(&basis, &mut sampler, dim).unwrap();
            axpy(1.0 / (i + 1) as f64, &v, &mut combo);
        }
        let (_, residual) = project_onto_span(basis.orthonormal_set(), &combo).unwrap();
        assert!(residual < 1e-9);
    }

    #[test]
    fn seed_determinism_of_samplers() {
        for kind in [SamplerKind::Gaussian, SamplerKind::Rademacher] {
            let mut a = IsometricSampler::new(kind, 1234);
            let mut b = IsometricSampler::new(kind, 1234);
            for _ in 0..32 {
                assert_eq!(a.sample(17), b.sample(17));
            }
        }
    }
}
