//! Deterministic pseudo-random numbers.
//!
//! All stochastic steps in the pipeline (splits, bootstrap sampling,
//! weight init, permutation shuffles, synthetic data) draw from
//! [`SplitMix64`]. The generator is fully specified here so that any
//! reimplementation reproduces the same byte-for-byte outputs:
//!
//! * state update: `s += 0x9E3779B97F4A7C15`
//! * output: `z = s; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9;
//!   z = (z ^ z>>27) * 0x94D049BB133111EB; z ^ z>>31`
//! * `next_f64` takes the top 53 bits into `[0, 1)`
//! * `gen_index(n)` reduces `next_u64() % n`
//! * `shuffle` is a Fisher-Yates pass from the last element down,
//!   swapping index `i` with `gen_index(i + 1)`

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// 64-bit splitmix generator.
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

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn gen_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform index in `[0, n)`. Panics when `n == 0`.
    pub fn gen_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "gen_index requires n > 0");
        (self.next_u64() % n as u64) as usize
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.gen_index(i + 1);
            xs.swap(i, j);
        }
    }

    /// Sample `k` distinct indices from `[0, n)`, in draw order.
    ///
    /// Partial Fisher-Yates over a scratch index vector; `k` is clipped
    /// to `n`.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let k = k.min(n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.gen_index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// Derives an independent child seed for a worker stream.
///
/// Grid-search candidates, forest trees, and repeated runs each seed
/// their own generator with `derive_seed(root, index)` so parallel and
/// sequential execution produce identical results.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    SplitMix64::new(root ^ stream.wrapping_mul(GOLDEN_GAMMA)).next_u64()
}
