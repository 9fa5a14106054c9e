// Scratch: find the stalling rep of criterion 1.
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use sbx_core::linalg::{axpy, gram_schmidt_orthonormalize, DEFAULT_DROP_TOL};
use sbx_core::minperturb::knn_min_perturbation;
use sbx_core::model::{LabeledInstance, Model, ModelSpec};
use sbx_core::subspace::{IsometricSampler, Provenance, SamplerKind, SubspaceBasis};

fn random_vec(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(lo..hi)).collect()
}

#[test]
fn find_stall() {
    for rep in 0..50u64 {
        let k = if rep < 25 { 1 } else { 3 };
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + rep);
        let mut sampler = IsometricSampler::new(SamplerKind::Gaussian, 5000 + rep);
        let raw: Vec<Vec<f64>> = (0..5).map(|_| sampler.sample(12)).collect();
        let set = gram_schmidt_orthonormalize(&raw, DEFAULT_DROP_TOL).unwrap();
        let frame = SubspaceBasis::from_parts(set, None, Provenance::GramSchmidt).unwrap();
        let train: Vec<LabeledInstance> = (0..20)
            .map(|i| {
                let coeffs = random_vec(&mut rng, 5, -1.0, 1.0);
                let mut x = vec![0.0; 12];
                for (c, e) in coeffs.iter().zip(frame.orthonormal_set().vectors()) {
                    axpy(*c, e, &mut x);
                }
                LabeledInstance::new(x, i % 2).unwrap()
            })
            .collect();
        let model = ModelSpec::Knn { k, classes: 2, train: train.clone() };
        let x = random_vec(&mut rng, 12, -1.5, 1.5);
        let y = model.predict(&x);
        let instance = LabeledInstance::new(x, y).unwrap();
        let t0 = std::time::Instant::now();
        match knn_min_perturbation(&train, &instance, k) {
            Ok(r) => {
                if t0.elapsed().as_millis() > 500 {
                    println!("rep {rep} k {k}: SLOW {:?} norm {}", t0.elapsed(), r.norm());
                }
            }
            Err(e) => println!("rep {rep} k {k}: ERROR {e}"),
        }
    }
}
