//! Seeded pseudo-random generation, frozen for bit-exact replays.
//!
//! The exact update rules and constants below are part of the reproducibility
//! contract: a `(seed, distribution, box)` triple regenerates an identical
//! field on any platform, today and later. splitmix64 (the 0x9E3779B9...
//! Weyl increment with two xor-multiply finalizer rounds) seeds and splits
//! streams; xoshiro256++ (rotl 23 / shift 17 / rotl 45) drives sampling.
//! Uniforms in `[0, 1)` take the top 53 bits of a 64-bit word.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn next_f64(&mut self) -> f64 {
        u64_to_unit_f64(self.next_u64())
    }
}

#[derive(Debug, Clone)]
pub struct Xoshiro256PlusPlus {
    s: [u64; 4],
}

impl Xoshiro256PlusPlus {
    /// Seeds the four state words from a splitmix64 stream; an all-zero
    /// state (which would be a fixed point) cannot occur this way, but is
    /// guarded against regardless.
    pub fn from_seed(seed: u64) -> Self {
        let mut sm = SplitMix64::new(seed);
        let mut s = [sm.next_u64(), sm.next_u64(), sm.next_u64(), sm.next_u64()];
        if s == [0, 0, 0, 0] {
            s[0] = 0x9E37_79B9_7F4A_7C15;
        }
        Self { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        u64_to_unit_f64(self.next_u64())
    }

    /// Uniform in `(0, 1]`: the `[0, 1)` draw reflected, so logarithms are
    /// always finite.
    pub fn next_f64_open_zero(&mut self) -> f64 {
        1.0 - self.next_f64()
    }
}

fn u64_to_unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Stream splitting: replica `r` of master seed `s` draws from
/// `xoshiro256++(splitmix64(s xor (r + 1) * 0x9E3779B97F4A7C15))`.
/// Documented and frozen; changing it would silently change every archived
/// estimate.
pub fn replica_seed(seed: u64, replica: u64) -> u64 {
    SplitMix64::new(seed ^ replica.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)).next_u64()
}
