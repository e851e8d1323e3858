//! Seeded random streams with a fixed, language-independent definition.
//!
//! Every point of a dataset gets its own SplitMix64 stream whose initial state
//! is `seed ^ mix64(index + 1)`. Dataset-wide decisions (shuffles, sampling)
//! use the stream at index `u64::MAX`. Bounded draws use rejection sampling so
//! results carry no modulo bias and are reproducible bit-for-bit anywhere the
//! same arithmetic is implemented.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a string into a seed component.
pub fn hash_str(value: &str) -> u64 {
    value
        .bytes()
        .fold(GAMMA, |acc, b| mix64(acc ^ u64::from(b)).wrapping_add(GAMMA))
}

/// Seed for the `index`-th step of a multi-step run.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(GAMMA)))
}

#[derive(Debug, Clone)]
pub struct SeedStream {
    state: u64,
}

impl SeedStream {
    pub fn for_point(seed: u64, index: u64) -> Self {
        SeedStream {
            state: seed ^ mix64(index.wrapping_add(1)),
        }
    }

    pub fn for_dataset(seed: u64) -> Self {
        Self::for_point(seed, u64::MAX)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform draw from `0..bound`. Panics if `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        // 2^64 mod bound; values at or above 2^64 - r are rejected
        let r = (u64::MAX % bound + 1) % bound;
        let limit = u64::MAX - r;
        loop {
            let x = self.next_u64();
            if r == 0 || x <= limit {
                return x % bound;
            }
        }
    }

    pub fn index(&mut self, len: usize) -> usize {
        self.below(len as u64) as usize
    }

    /// Fisher-Yates shuffle, iterating from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices from `0..len`, in draw order (partial Fisher-Yates
    /// from the front).
    pub fn choose_distinct(&mut self, len: usize, k: usize) -> Vec<usize> {
        let k = k.min(len);
        let mut pool: Vec<usize> = (0..len).collect();
        for i in 0..k {
            let j = i + self.index(len - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
