//! Seeded random number generation shared by the simulators and samplers.
//!
//! All randomness flows through [`ChaCha8Rng`], whose output stream is
//! specified independently of platform and word size. Replication `i` of an
//! experiment seeded with `s` uses `s + i`.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng;

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn replication_seed(seed: u64, replication: usize) -> u64 {
    seed.wrapping_add(replication as u64)
}

/// Standard normal draws by the Box-Muller transform of two uniforms.
#[derive(Debug, Clone)]
pub struct BoxMuller {
    spare: Option<f64>,
}

impl Default for BoxMuller {
    fn default() -> Self {
        Self::new()
    }
}

impl BoxMuller {
    pub fn new() -> Self {
        Self { spare: None }
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = std::f64::consts::TAU * u2;
        self.spare = Some(radius * angle.sin());
        radius * angle.cos()
    }
}

/// Uniform draw on the closed interval `[-half_width, half_width]`.
pub fn uniform_symmetric<R: Rng + ?Sized>(rng: &mut R, half_width: f64) -> f64 {
    if half_width == 0.0 {
        return 0.0;
    }
    rng.gen_range(-half_width..=half_width)
}

/// Uniform draw on the ℓ1 ball `{x ∈ ℝ^d : ‖x‖₁ ≤ radius}`.
///
/// The absolute values of a uniform point are the first `d` coordinates of a
/// flat Dirichlet vector on the `d`-simplex, so normalized exponentials plus
/// independent signs give an exact sampler.
pub fn uniform_l1_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64, out: &mut [f64]) {
    debug_assert_eq!(out.len(), dim);
    if dim == 0 {
        return;
    }
    let mut total = 0.0;
    for x in out.iter_mut() {
        let e = -(1.0 - rng.gen::<f64>()).ln();
        *x = e;
        total += e;
    }
    // slack coordinate of the (d+1)-dimensional Dirichlet
    total += -(1.0 - rng.gen::<f64>()).ln();
    for x in out.iter_mut() {
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        *x = sign * radius * *x / total;
    }
}
