//! Seeded randomness. Every consumer derives its generator from the run seed
//! plus a stream id, so results do not depend on call order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::C64;

/// Stream ids used inside the crate.
pub mod streams {
    pub const DECOMPOSE: u64 = 1;
    pub const VALIDATE: u64 = 2;
    pub const BUMP_PHASE: u64 = 3;
}

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Uniform sample in the closed disk `|z| <= radius`.
pub fn disk<R: rand::Rng>(rng: &mut R, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    C64::from_polar(r, phi)
}
