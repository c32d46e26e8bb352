//! Named initial profiles.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Grid, RadialField};

/// `amplitude · e^{−r² / (2 width²)}` at `t = 0`.
pub fn gaussian(grid: &Arc<Grid>, amplitude: f64, width: f64) -> RadialField {
    RadialField::from_profile(
        grid,
        |r| Complex64::new(amplitude * (-0.5 * (r / width).powi(2)).exp(), 0.0),
        0.0,
    )
    .expect("gaussian samples are finite")
}

/// `amplitude · e^{−(r − center)² / (2 width²)}` at `t = 0`.
pub fn ring(grid: &Arc<Grid>, amplitude: f64, center: f64, width: f64) -> RadialField {
    RadialField::from_profile(
        grid,
        |r| {
            Complex64::new(
                amplitude * (-0.5 * ((r - center) / width).powi(2)).exp(),
                0.0,
            )
        },
        0.0,
    )
    .expect("ring samples are finite")
}

/// A seeded, smooth, spatially localized complex field:
/// a random even polynomial times a Gaussian, with a weak random chirp.
pub fn localized_random(grid: &Arc<Grid>, seed: u64) -> RadialField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale: f64 = rng.gen_range(0.8..1.4);
    let chirp: f64 = rng.gen_range(-0.3..0.3);
    let coeffs: Vec<Complex64> = (0..4)
        .map(|q| {
            let damp = 1.0 / (1u64 << q) as f64;
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * damp
        })
        .collect();
    RadialField::from_profile(
        grid,
        |r| {
            let s = (r / scale).powi(2);
            let poly = coeffs
                .iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, c| acc * s + c);
            poly * (-0.5 * s).exp() * Complex64::from_polar(1.0, chirp * r * r)
        },
        0.0,
    )
    .expect("random profile samples are finite")
}
