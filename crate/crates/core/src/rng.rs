//! Deterministic counter-based random streams.
//!
//! Every draw sequence is identified by a `(seed, stream)` pair. A stream
//! advances a private counter through a splitmix-style mixer, so the same
//! pair always reproduces the same sequence and distinct streams can be
//! consumed in any order (or concurrently) without shared state. Dataset
//! generation keys one stream per sample, which makes sample content
//! independent of generation order.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(seed ^ mix64(stream ^ 0xA076_1D64_78BD_642F));
        let counter = mix64(key ^ 0xE703_7ED1_A0B4_28DB);
        Self { key, counter }
    }

    /// Derive an independent child stream identified by `label`, without
    /// advancing `self`.
    pub fn derive(&self, label: u64) -> Self {
        RngStream::new(self.key, label ^ 0x8EBC_6AF0_9C88_C6E3)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(GOLDEN);
        mix64(self.key ^ self.counter)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        const SCALE: f64 = (1u64 << 53) as f64;
        ((self.next_u64() >> 11) as f64) / SCALE
    }

    /// Unbiased uniform draw in `[0, n)` (multiply-shift with rejection).
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires n > 0");
        let mut m = u128::from(self.next_u64()) * u128::from(n);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = u128::from(self.next_u64()) * u128::from(n);
            }
        }
        (m >> 64) as u64
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
