//! Seeded xoshiro256++ generator. Self-contained so that a fixed seed keeps
//! producing the same sample streams regardless of dependency versions.

use sbm_core::geometry::ParamRange;

pub struct Rng {
    state: [u64; 4],
}

impl Rng {
    pub fn seeded(seed: u64) -> Self {
        // splitmix64 expansion of the seed into the full state.
        let mut x = seed;
        let mut next = || {
            x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = x;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        };
        Rng {
            state: [next(), next(), next(), next()],
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let [s0, s1, s2, s3] = self.state;
        let result = s0.wrapping_add(s3).rotate_left(23).wrapping_add(s0);
        let t = s1 << 17;
        let mut s = [s0, s1, s2, s3];
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        self.state = s;
        result
    }

    /// Uniform draw in [lo, hi) from the top 53 bits.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let unit = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        lo + (hi - lo) * unit
    }
}

/// Training parameter draw: n uniform samples over the admissible range.
pub fn sample_parameters(seed: u64, n: usize, range: ParamRange) -> Vec<f64> {
    let mut rng = Rng::seeded(seed);
    (0..n).map(|_| rng.uniform(range.lo, range.hi)).collect()
}

/// Test parameter draw from its own stream; redraws any value colliding with
/// the training set so the two stay disjoint.
pub fn sample_test_parameters(
    seed: u64,
    n: usize,
    range: ParamRange,
    training: &[f64],
) -> Vec<f64> {
    let mut rng = Rng::seeded(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mu = rng.uniform(range.lo, range.hi);
        if training.contains(&mu) || out.contains(&mu) {
            continue;
        }
        out.push(mu);
    }
    out
}
