//! Seeded splitmix64 stream.
//!
//! All stochastic pieces of the simulator (graph generation, disruption
//! generators) draw from this generator so that runs are reproducible from
//! a single u64 seed, independent of platform and of any external crate's
//! value-stability policy. The algorithm name is recorded in result
//! headers via [`crate::RNG_ALGORITHM`].

/// splitmix64: one 64-bit output per step of a Weyl sequence.
/// Passes BigCrush; trivially portable. Zero is a valid seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimRng {
    state: u64,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        SimRng { state: seed }
    }

    /// Current internal state; together with the seed this makes generator
    /// snapshots serializable.
    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn from_state(state: u64) -> Self {
        SimRng { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Uniform integer in [0, n). n must be positive; uses rejection
    /// sampling to stay unbiased.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Geometric number of timesteps >= 1 with success probability p:
    /// the duration of a disruption that ends each step with probability p.
    pub fn geometric(&mut self, p: f64) -> u64 {
        assert!(p > 0.0 && p <= 1.0, "geometric needs p in (0, 1]");
        if p >= 1.0 {
            return 1;
        }
        let u = self.next_f64().max(f64::MIN_POSITIVE);
        1 + (u.ln() / (1.0 - p).ln()).floor() as u64
    }

    /// Fisher-Yates shuffle, deterministic given the stream position.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}
