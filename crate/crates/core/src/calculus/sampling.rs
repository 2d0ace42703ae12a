//! Reproducible quasi-random sample points.
//!
//! Points come from a Halton sequence with a Cranley-Patterson rotation drawn
//! from a seeded generator, mapped into the interior of a coordinate box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// `count` points of the shifted Halton sequence in `[0, 1)^dim`.
pub fn halton(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "Halton sequence supports up to {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract())
                .collect()
        })
        .collect()
}

/// Quasi-random points strictly inside a box, kept 2% away from its faces.
pub fn sample_box(domain: &[[f64; 2]], count: usize, seed: u64) -> Vec<Vec<f64>> {
    halton(domain.len(), count, seed)
        .into_iter()
        .map(|u| {
            u.iter()
                .zip(domain)
                .map(|(t, [lo, hi])| lo + (hi - lo) * (0.02 + 0.96 * t))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = sample_box(&[[0.0, 1.0], [-2.0, 2.0]], 20, 9);
        assert_eq!(a, sample_box(&[[0.0, 1.0], [-2.0, 2.0]], 20, 9));
        assert_ne!(a, sample_box(&[[0.0, 1.0], [-2.0, 2.0]], 20, 10));
        assert!(a.iter().all(|p| p[0] > 0.0 && p[0] < 1.0 && p[1] > -2.0 && p[1] < 2.0));
    }
}
