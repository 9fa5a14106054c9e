//! Synthetic dataset generation: Gaussian class mixtures confined to a
//! random low-dimensional orthonormal frame inside R^D.
//!
//! The frame is persisted alongside the dataset files so tests can compute
//! span residuals against the exact ground-truth subspace. Train, eval, and
//! subspace splits are disjoint draws from one seeded stream.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::{axpy, gram_schmidt_orthonormalize, norm, sub, DEFAULT_DROP_TOL};
use crate::model::{save_labeled_dataset, save_unlabeled_dataset, LabeledInstance};
use crate::rng::{chacha, GaussianSource};
use crate::subspace::{save_basis, Provenance, SubspaceBasis, SubspaceDataset};

/// Generation parameters. The geometry defaults put typical minimum
/// adversarial perturbations well inside the sqrt(0.001 D) radius while a
/// 1-NN model still classifies held-out draws with high accuracy.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub dim: usize,
    pub intrinsic_dim: usize,
    pub n_train: usize,
    pub n_eval: usize,
    pub n_subspace: usize,
    pub classes: usize,
    pub seed: u64,
    /// Per-coordinate standard deviation of each class cluster (in frame
    /// coordinates).
    pub cluster_std: f64,
    /// Class means are drawn on the sphere of this radius in frame
    /// coordinates, at least this far apart pairwise.
    pub mean_radius: f64,
}

impl SynthConfig {
    pub fn new(dim: usize, intrinsic_dim: usize, seed: u64) -> Self {
        Self {
            dim,
            intrinsic_dim,
            n_train: 200,
            n_eval: 50,
            n_subspace: 100,
            classes: 2,
            seed,
            cluster_std: 0.12,
            mean_radius: 0.5,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.intrinsic_dim == 0 || self.intrinsic_dim > self.dim {
            return Err(Error::InvalidArgument(format!(
                "intrinsic_dim {} out of range for dim {}",
                self.intrinsic_dim, self.dim
            )));
        }
        if self.n_train == 0 || self.n_eval == 0 || self.n_subspace == 0 {
            return Err(Error::InvalidArgument("all split sizes must be >= 1".into()));
        }
        if self.classes < 2 {
            return Err(Error::InvalidArgument("classes must be >= 2".into()));
        }
        if !(self.cluster_std > 0.0) || !(self.mean_radius > 0.0) {
            return Err(Error::InvalidArgument(
                "cluster_std and mean_radius must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Generated splits plus the ground-truth frame.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub train: Vec<LabeledInstance>,
    pub eval: Vec<LabeledInstance>,
    pub subspace: SubspaceDataset,
    pub frame: SubspaceBasis,
}

/// File locations written by [`write_synthetic`].
#[derive(Debug, Clone)]
pub struct SynthPaths {
    pub train: PathBuf,
    pub eval: PathBuf,
    pub subspace: PathBuf,
    pub frame: PathBuf,
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let mut rng = chacha(config.seed);
    let mut gauss = GaussianSource::new();
    let m = config.intrinsic_dim;

    let draw = |n: usize, rng: &mut rand_chacha::ChaCha8Rng, g: &mut GaussianSource| {
        (0..n).map(|_| g.sample(rng)).collect::<Vec<f64>>()
    };

    // Random orthonormal frame.
    let raw: Vec<Vec<f64>> = (0..m).map(|_| draw(config.dim, &mut rng, &mut gauss)).collect();
    let frame_set = gram_schmidt_orthonormalize(&raw, DEFAULT_DROP_TOL)?;
    if frame_set.len() != m {
        return Err(Error::InvalidArgument(
            "random frame degenerated during orthonormalization".into(),
        ));
    }
    let frame = SubspaceBasis::from_parts(frame_set, None, Provenance::GramSchmidt)?;

    // Class means on the sphere of mean_radius, pairwise at least
    // mean_radius apart.
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(config.classes);
    let mut attempts = 0;
    while means.len() < config.classes {
        attempts += 1;
        if attempts > 200 * config.classes {
            return Err(Error::InvalidArgument(
                "could not place class means with the required separation; \
                 lower classes or raise mean_radius"
                    .into(),
            ));
        }
        let mut candidate = draw(m, &mut rng, &mut gauss);
        let n = norm(&candidate);
        if n == 0.0 {
            continue;
        }
        for v in candidate.iter_mut() {
            *v *= config.mean_radius / n;
        }
        if means.iter().all(|mu| norm(&sub(mu, &candidate)) >= config.mean_radius) {
            means.push(candidate);
        }
    }

    let to_ambient = |coords: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; config.dim];
        for (c, e) in coords.iter().zip(frame.orthonormal_set().vectors()) {
            axpy(*c, e, &mut x);
        }
        x
    };

    let labeled_split = |n: usize,
                             rng: &mut rand_chacha::ChaCha8Rng,
                             g: &mut GaussianSource|
     -> Vec<LabeledInstance> {
        (0..n)
            .map(|i| {
                let class = i % config.classes;
                let mut coords = means[class].clone();
                for c in coords.iter_mut() {
                    *c += config.cluster_std * g.sample(rng);
                }
                LabeledInstance { x: to_ambient(&coords), y: class }
            })
            .collect()
    };

    let train = labeled_split(config.n_train, &mut rng, &mut gauss);
    let eval = labeled_split(config.n_eval, &mut rng, &mut gauss);
    let subspace_rows: Vec<Vec<f64>> = labeled_split(config.n_subspace, &mut rng, &mut gauss)
        .into_iter()
        .map(|inst| inst.x)
        .collect();
    let subspace = SubspaceDataset::new(config.dim, subspace_rows)?;

    Ok(SynthOutput { train, eval, subspace, frame })
}

/// Writes the three splits and the frame into a directory with fixed names:
/// `train.csv`, `eval.csv`, `subspace.csv`, `frame.basis`.
pub fn write_synthetic(output: &SynthOutput, dir: &Path) -> Result<SynthPaths> {
    std::fs::create_dir_all(dir)?;
    let paths = SynthPaths {
        train: dir.join("train.csv"),
        eval: dir.join("eval.csv"),
        subspace: dir.join("subspace.csv"),
        frame: dir.join("frame.basis"),
    };
    save_labeled_dataset(&output.train, &paths.train)?;
    save_labeled_dataset(&output.eval, &paths.eval)?;
    save_unlabeled_dataset(&output.subspace, &paths.subspace)?;
    save_basis(&output.frame, &paths.frame)?;
    Ok(paths)
}
