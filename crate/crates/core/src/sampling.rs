//! Counter-based random streams.
//!
//! Every random draw is tied to a `(seed, stream)` pair: the stream index is
//! the grid-point (or channel) index, so results do not depend on the order or
//! the thread in which points are evaluated.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Fixed seed used when none is supplied.
pub const DEFAULT_SEED: u64 = 20_061_208;

/// Independent ChaCha stream for item `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Exact Poisson draw with the given mean. A non-positive mean yields 0.
pub fn poisson_count(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(dist) => dist.sample(rng) as u64,
        // Only reachable for means beyond ~1.8e19, far outside any count rate.
        Err(_) => mean.round() as u64,
    }
}

/// One Poisson draw from stream `index`.
pub fn poisson_at(seed: u64, index: u64, mean: f64) -> u64 {
    poisson_count(mean, &mut stream(seed, index))
}
