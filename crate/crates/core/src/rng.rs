//! Deterministic random numbers for instance synthesis and residual shaping.
//!
//! Everything random in this crate flows from a single `u64` seed through
//! [`SplitMix64`], so runs are reproducible bit-for-bit across processes and
//! platforms. The generator is the standard splitmix64 finalizer over a
//! Weyl-sequence state.

/// splitmix64: 64-bit state advanced by the golden-ratio increment, output
/// scrambled by two xor-multiply rounds.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare_normal: Option<f64>,
}

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed, spare_normal: None }
    }

    /// Derives an independent stream for substream `index`, e.g. one per
    /// outer iteration or per (size, trial) cell.
    pub fn derive(seed: u64, index: u64) -> Self {
        let mut probe = SplitMix64::new(seed ^ index.wrapping_mul(GOLDEN_GAMMA));
        let reseed = probe.next_u64();
        SplitMix64::new(reseed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller; pairs are cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u1 = self.next_f64();
            let u2 = self.next_f64();
            if u1 <= f64::MIN_POSITIVE {
                continue;
            }
            let radius = (-2.0 * u1.ln()).sqrt();
            let (sin, cos) = (std::f64::consts::TAU * u2).sin_cos();
            self.spare_normal = Some(radius * sin);
            return radius * cos;
        }
    }
}
