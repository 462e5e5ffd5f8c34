//! Deterministic randomness plumbing: every random quantity in the
//! toolkit flows from one master seed through named substreams.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derive a substream seed from a master seed and a stream tag (FNV-1a
/// over the tag, mixed with the master seed).
pub fn substream_seed(master: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for byte in tag.as_bytes() {
        h ^= *byte as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    splitmix(master ^ h)
}

/// Seed for item `index` inside a substream.
pub fn indexed_seed(stream: u64, index: u64) -> u64 {
    splitmix(stream ^ splitmix(index.wrapping_add(0x9e3779b97f4a7c15)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal sample via Box-Muller.
pub fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.random::<f64>();
        if u1 > 0.0 {
            let u2: f64 = rng.random::<f64>();
            return libm::sqrt(-2.0 * libm::log(u1))
                * libm::cos(2.0 * core::f64::consts::PI * u2);
        }
    }
}
