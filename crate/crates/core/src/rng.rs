//! Deterministic random stream used by `generate` and `split_attempt`.
//!
//! This is splitmix64 (Steele, Lea, Flood; public domain reference
//! implementation). It is hand-rolled rather than pulled from a crate because
//! generated output must be byte-identical across platforms and dependency
//! upgrades, and the whole generator is ten lines.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Derives an independent stream for subtask `index` of a master seed.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut s = SplitMix64::new(seed ^ index.wrapping_mul(0xA3EC647659359ACD));
        s.next_u64();
        s
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1), 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [-1, 1).
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 52) as f64) - 1.0
    }
}
