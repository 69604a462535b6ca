//! Deterministic randomness: a splitmix64 generator, labeled per-stage
//! streams derived from one user seed, and a low-discrepancy sequence for
//! the sampling-based kernel checks.
//!
//! Every stochastic choice in the crate draws from one of these, so a run
//! is a pure function of the config seed — worker counts and machines do
//! not change a single bit of output.

use alloc::vec;
use alloc::vec::Vec;

/// splitmix64: tiny, fast, and well distributed. Used both as the working
/// generator and as the seed-derivation hash for per-stage streams.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Uses rejection to stay unbiased.
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }

    /// Uniform in [lo, hi).
    pub fn next_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Random sign, ±1.
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// FNV-1a over a byte string; used to turn stage labels into seed offsets.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Derive the working stream for a named pipeline stage from the single
/// user-facing seed. Streams for different labels are independent; the
/// label set is part of the output contract (changing a label changes the
/// bytes a run produces).
pub fn stage_stream(seed: u64, label: &str) -> SplitMix64 {
    let mut mix = SplitMix64::new(seed ^ fnv1a64(label.as_bytes()));
    // One warm-up step so nearby seeds do not produce nearby first outputs.
    let s = mix.next_u64();
    SplitMix64::new(s)
}

/// Additive-recurrence low-discrepancy sequence in [0, 1)^dim (the R_d
/// sequence built from the generalized golden ratio). Far more even
/// coverage than i.i.d. sampling for the sup-style kernel checks, while
/// staying seedable: the seed only shifts the starting point, which keeps
/// reproducibility without harming equidistribution.
#[derive(Debug, Clone)]
pub struct LowDiscrepancy {
    alphas: Vec<f64>,
    point: Vec<f64>,
}

impl LowDiscrepancy {
    pub fn new(dim: usize, seed: u64) -> Self {
        // phi_d is the unique real root > 1 of x^(d+1) = x + 1.
        let d = dim as f64;
        let mut phi = 2.0;
        for _ in 0..64 {
            phi = libm::pow(1.0 + phi, 1.0 / (d + 1.0));
        }
        let mut alphas = vec![0.0; dim];
        let mut p = 1.0;
        for a in alphas.iter_mut() {
            p /= phi;
            *a = p;
        }
        let mut mix = SplitMix64::new(seed);
        let mut point = vec![0.0; dim];
        for v in point.iter_mut() {
            *v = mix.next_f64();
        }
        LowDiscrepancy { alphas, point }
    }

    /// Advance and return the next point in [0, 1)^dim.
    pub fn next_point(&mut self) -> &[f64] {
        for (v, a) in self.point.iter_mut().zip(&self.alphas) {
            *v += a;
            if *v >= 1.0 {
                *v -= 1.0;
            }
        }
        &self.point
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_label_sensitive() {
        let mut a = stage_stream(42, "kernel");
        let mut b = stage_stream(42, "kernel");
        let mut c = stage_stream(42, "greedy");
        let va = a.next_u64();
        assert_eq!(va, b.next_u64(), "same seed+label must replay");
        assert_ne!(va, c.next_u64(), "labels must decorrelate streams");
    }

    #[test]
    fn unit_interval_samples_stay_in_range() {
        let mut r = SplitMix64::new(7);
        for _ in 0..1000 {
            let x = r.next_f64();
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn next_below_is_bounded() {
        let mut r = SplitMix64::new(3);
        for _ in 0..1000 {
            assert!(r.next_below(7) < 7);
        }
    }

    #[test]
    fn low_discrepancy_covers_the_square() {
        // Crude equidistribution check: each quadrant of [0,1)^2 gets a
        // reasonable share of the first 400 points.
        let mut seq = LowDiscrepancy::new(2, 0);
        let mut counts = [0usize; 4];
        for _ in 0..400 {
            let p = seq.next_point();
            let q = (p[0] >= 0.5) as usize * 2 + (p[1] >= 0.5) as usize;
            counts[q] += 1;
        }
        for &c in &counts {
            assert!(c > 60, "quadrant starved: {counts:?}");
        }
    }
}
