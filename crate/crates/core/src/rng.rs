//! Reproducible random number generation.
//!
//! All randomness flows through ChaCha8 streams keyed by 64-bit seeds, so a
//! (seed, config) pair fully determines every sample drawn anywhere in the
//! crate. Child seeds are derived with SplitMix64 so that per-instance
//! streams are independent of scheduling and worker count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 output function (Steele, Lea & Flood). One full mixing step.
pub fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the seed for stream `stream` from a master seed.
///
/// Distinct streams give statistically independent ChaCha8 states; the
/// mapping is pure, so results never depend on evaluation order.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream.wrapping_add(1)))
}

/// A ChaCha8 generator keyed from a 64-bit seed.
pub fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal sampler using the Box-Muller transform.
///
/// Consumes exactly two uniforms per pair of outputs; the second output is
/// cached, keeping stream consumption deterministic.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn new() -> Self {
        Self { spare: None }
    }

    pub fn sample(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite.
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

impl Default for GaussianSource {
    fn default() -> Self {
        Self::new()
    }
}
