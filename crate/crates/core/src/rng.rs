//! SplitMix64 and the key derivation used for reproducible degradation draws.
//!
//! Only integer arithmetic with wrapping semantics is involved, so streams are
//! identical on every platform.

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sequential SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Generator for one `(seed, case, draw)` triple:
    /// `splitmix64(splitmix64(splitmix64(seed) ^ case) ^ draw)`.
    pub fn keyed(seed: u64, case_index: u64, draw_index: u64) -> Self {
        let key = splitmix64(splitmix64(splitmix64(seed) ^ case_index) ^ draw_index);
        SplitMix64::new(key)
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = splitmix64(self.state);
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        out
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi]`; returns `lo` exactly when `lo == hi`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }
}
