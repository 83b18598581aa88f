#![allow(dead_code)]

use std::path::PathBuf;

use stepup::{EffectEstimates, OrderedSquares};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn filtration() -> EffectEstimates {
    stepup::ingest::parse_estimates(&fixture("filtration_estimates.csv")).unwrap()
}

/// Reference X_m column for m = 8..15 and the rounded S_7.
pub const REF_X: [f64; 8] = [6.89, 9.77, 17.02, 97.52, 213.89, 276.39, 328.52, 467.64];
pub const REF_S7: f64 = 15.11;
pub const REF_W_FIXED: [f64; 8] = [3.2, 4.5, 7.9, 45.2, 99.1, 128.0, 152.2, 216.7];
pub const REF_W_SEQ: [f64; 8] = [3.2, 3.6, 4.8, 20.0, 16.1, 9.2, 6.7, 6.8];
pub const REF_SUF: [f64; 8] = [14.9, 28.0, 42.0, 58.5, 77.5, 99.1, 124.1, 123.4];
pub const REF_SUFI: [f64; 8] = [14.9, 26.5, 38.4, 52.2, 67.7, 85.0, 104.5, 126.3];
pub const REF_SUS: [f64; 8] = [14.9, 16.7, 16.3, 15.7, 15.2, 14.8, 14.5, 13.9];
pub const REF_SUSI: [f64; 8] = [14.9, 16.4, 16.0, 15.5, 15.1, 14.6, 14.3, 14.0];

/// Sorted squares of `k` standard normal draws.
pub fn random_squares(rng: &mut impl rand::Rng, k: usize) -> OrderedSquares {
    let sq = (0..k)
        .map(|_| {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            z * z
        })
        .collect();
    OrderedSquares::from_squares(sq).unwrap()
}
