//! Fully specified deterministic random generator.
//!
//! Every random draw in the toolkit flows through [`DetRng`] so that a
//! declared 64-bit seed pins down each output bit-for-bit, on any platform,
//! independent of any library's unspecified sampling internals. The
//! construction, recorded in generated manifests as [`ALGORITHM`]:
//!
//! - the 32-byte ChaCha12 key is the first four outputs of the splitmix64
//!   sequence started at the seed, serialized little-endian;
//! - every sampling primitive consumes whole 64-bit words of the ChaCha12
//!   stream (one per attempt);
//! - `uniform_f64` maps a word to [0, 1) via the top 53 bits;
//! - `uniform_u32` uses the low 32 bits with modulo rejection;
//! - `standard_normal` is the cosine variate of one Box–Muller transform
//!   (two words consumed, the sine variate discarded);
//! - `sample_distinct` is a partial Fisher–Yates shuffle, one
//!   `uniform_u32` per drawn element, in draw order.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Identity of the generator, recorded in manifests so independent
/// implementations can reproduce the streams.
pub const ALGORITHM: &str =
    "chacha12(key=splitmix64x4-le)/u53-unit/modulo-reject-u32/box-muller-cos";

/// One step of the splitmix64 sequence.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded deterministic generator; see the module docs for the exact
/// stream definition.
#[derive(Debug, Clone)]
pub struct DetRng {
    rng: ChaCha12Rng,
}

impl DetRng {
    pub fn new(seed: u64) -> DetRng {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        DetRng { rng: ChaCha12Rng::from_seed(key) }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform in [0, 1): the top 53 bits of one word.
    pub fn uniform_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [0, bound) by modulo rejection on the low 32 bits of one
    /// word per attempt. Panics if `bound` is 0.
    pub fn uniform_u32(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "uniform_u32: bound must be positive");
        let bound64 = u64::from(bound);
        let limit = (1u64 << 32) - ((1u64 << 32) % bound64);
        loop {
            let x = self.next_u64() & 0xffff_ffff;
            if x < limit {
                return (x % bound64) as u32;
            }
        }
    }

    /// Standard normal variate (Box–Muller, cosine branch).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform_f64(); // (0, 1]: keeps ln() finite
        let u2 = self.uniform_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// `k` distinct values from [0, m), in draw order (partial
    /// Fisher–Yates). Panics if `k > m`.
    pub fn sample_distinct(&mut self, m: u32, k: u32) -> Vec<u32> {
        assert!(k <= m, "sample_distinct: k = {k} exceeds m = {m}");
        let mut pool: Vec<u32> = (0..m).collect();
        for i in 0..k as usize {
            let j = i + self.uniform_u32(m - i as u32) as usize;
            pool.swap(i, j);
        }
        pool.truncate(k as usize);
        pool
    }
}
