//! Seeded sampling with a fixed, documented algorithm.
//!
//! The generator is xoshiro256++ seeded through SplitMix64 (`seed_from_u64`). Bounded
//! integers use rejection on the top of the 64-bit range: draw `x`, reject while
//! `x >= 2^64 - (2^64 mod n)`, return `x mod n`. Subsets of exact size `k` come from the
//! first `k` steps of a Fisher-Yates shuffle of `0..population`, then sorted.

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::field::Field;
use crate::fourier::{grid_len, ComplexGrid};

pub type Rng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Child seed for an independent stream, via one SplitMix64 step on `seed ^ stream`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z =
        (seed ^ stream.wrapping_mul(0xD1B5_4A32_D192_ED03)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform integer in `[0, n)`; `n` must be positive.
pub fn uniform_below(rng: &mut (impl RngCore + ?Sized), n: u64) -> u64 {
    assert!(n > 0, "empty range");
    let zone = u64::MAX - (u64::MAX - n + 1) % n;
    loop {
        let x = rng.next_u64();
        if x <= zone {
            return x % n;
        }
    }
}

/// `k` distinct indices from `0..population`, sorted; `k` is capped at `population`.
pub fn sample_indices(
    rng: &mut (impl RngCore + ?Sized),
    population: usize,
    k: usize,
) -> Vec<usize> {
    let k = k.min(population);
    let mut pool: Vec<usize> = (0..population).collect();
    for i in 0..k {
        let j = i + uniform_below(rng, (population - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool.sort_unstable();
    pool
}

/// Uniform in `[-1, 1)` from the top 53 bits.
fn unit_interval(rng: &mut (impl RngCore + ?Sized)) -> f64 {
    (rng.next_u64() >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
}

/// Grid with real and imaginary parts uniform in `[-1, 1)`, in index order.
pub fn random_grid(field: &Field, d: usize, rng: &mut (impl RngCore + ?Sized)) -> ComplexGrid {
    let len = grid_len(field.q(), d).expect("grid fits in memory");
    let values = (0..len)
        .map(|_| Complex64::new(unit_interval(rng), unit_interval(rng)))
        .collect();
    ComplexGrid::from_values(field, d, values)
}
