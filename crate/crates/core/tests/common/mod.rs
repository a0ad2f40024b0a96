//! Independent reference computations used by the integration tests.
#![allow(dead_code)]

/// Shares as `clamp(p + λ, 0, 10)` with λ found by bisection on the mean.
pub fn water_fill(proposed: [f64; 3], commitment: f64) -> [f64; 3] {
    let mean_at = |lambda: f64| {
        proposed
            .iter()
            .map(|p| (p + lambda).clamp(0.0, 10.0))
            .sum::<f64>()
            / 3.0
    };
    let (mut lo, mut hi) = (-20.0_f64, 20.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) < commitment {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    proposed.map(|p| (p + lambda).clamp(0.0, 10.0))
}

/// Majority of three by counting.
pub fn majority(votes: [bool; 3]) -> bool {
    let yes = votes.iter().filter(|v| **v).count();
    yes * 2 > votes.len()
}

/// SplitMix64; cheap enough that a million draws stay fast in debug builds.
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Monte Carlo estimate of the area dominated by `points` in the unit square.
pub fn hypervolume_mc(points: &[(f64, f64)], samples: usize, seed: u64) -> f64 {
    let mut rng = SplitMix(seed);
    let mut hits = 0usize;
    for _ in 0..samples {
        let x = rng.unit();
        let y = rng.unit();
        if points.iter().any(|&(c, e)| x <= c && y <= e) {
            hits += 1;
        }
    }
    hits as f64 / samples as f64
}
