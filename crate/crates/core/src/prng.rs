//! Seeded scalar stream: splitmix64 seeding into xoshiro256**.
//!
//! The stream is part of the reproducibility contract. Projection matrices
//! and anchor partitions are pure functions of a `u64` seed on every
//! platform, so nothing here may depend on `rand` or on float intrinsics
//! beyond `ln`, `sqrt`, `sin` and `cos`.

use std::f64::consts::TAU;

/// The splitmix64 increment, also used to derive the second projection seed.
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

#[derive(Debug, Clone)]
pub struct Xoshiro256StarStar {
    s: [u64; 4],
    spare: Option<f64>,
}

impl Xoshiro256StarStar {
    /// Expands `seed` through splitmix64 into the four state words.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        let s = [sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()];
        Self { s, spare: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller on consecutive uniform pairs.
    ///
    /// The cosine branch is returned first and the sine branch is cached for
    /// the next call. A pair whose first uniform is exactly zero is discarded.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let u1 = self.next_uniform();
            let u2 = self.next_uniform();
            if u1 == 0.0 {
                continue;
            }
            let r = (-2.0 * u1.ln()).sqrt();
            let theta = TAU * u2;
            self.spare = Some(r * theta.sin());
            return r * theta.cos();
        }
    }

    /// Uniform integer in `0..bound` by scaling a uniform draw.
    pub fn next_below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        let k = (self.next_uniform() * bound as f64) as usize;
        k.min(bound - 1)
    }
}
