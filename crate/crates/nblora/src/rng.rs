//! Pinned deterministic random number generation.
//!
//! Every experiment in this crate draws randomness from xoshiro256**
//! seeded through splitmix64, with uniforms taken from the top 53 bits
//! and Gaussians produced by Box-Muller on consecutive uniforms. The
//! algorithms are fixed so that artifacts are bit-reproducible across
//! runs and across reimplementations.

/// splitmix64 finalizer; also used to derive independent stream seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// xoshiro256** generator.
#[derive(Clone, Debug)]
pub struct Prng {
    state: [u64; 4],
}

impl Prng {
    /// Initialize the four state words by repeated splitmix64 expansion
    /// of the seed.
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut state = [0u64; 4];
        for word in &mut state {
            sm = sm.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = sm;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            *word = z ^ (z >> 31);
        }
        Prng { state }
    }

    /// Independent substream for job `index` under a root seed.
    pub fn derive(seed: u64, index: u64) -> Self {
        Prng::new(mix64(mix64(seed) ^ mix64(index)))
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
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

    /// Uniform real on [0, 1) with a full 53-bit mantissa.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard Gaussian via Box-Muller on two consecutive uniforms.
    ///
    /// Uses `1 - u1` inside the log so the argument stays in (0, 1].
    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * (1.0 - u1).ln()).sqrt();
        radius * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Unbiased-enough integer in [0, n) via multiply-shift; the mapping
    /// is part of the pinned stream definition.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0) is undefined");
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}
