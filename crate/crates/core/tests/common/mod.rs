#![allow(dead_code)]

use ndarray::Array2;
use proptest::prelude::*;
use puw::model::Triple;
use puw::{BeliefField, ShiftField, WrappedImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_image(rng: &mut impl Rng, rows: usize, cols: usize) -> WrappedImage {
    WrappedImage::new(Array2::from_shape_fn((rows, cols), |_| rng.random::<f64>())).unwrap()
}

pub fn random_triple(rng: &mut impl Rng) -> Triple {
    let w: [f64; 3] = [rng.random(), rng.random(), rng.random()];
    let s: f64 = w.iter().sum();
    [w[0] / s, w[1] / s, w[2] / s]
}

pub fn random_beliefs(rng: &mut impl Rng, rows: usize, cols: usize) -> BeliefField {
    let alpha = Array2::from_shape_fn((rows, cols - 1), |_| random_triple(rng));
    let beta = Array2::from_shape_fn((rows - 1, cols), |_| random_triple(rng));
    BeliefField::new(alpha, beta).unwrap()
}

/// Curl-free shifts: the differences of a 0/1 wrap-count raster.
pub fn potential_shifts(counts: &Array2<i8>) -> ShiftField {
    let (rows, cols) = counts.dim();
    let a = Array2::from_shape_fn((rows, cols - 1), |(i, j)| {
        counts[(i, j)] - counts[(i, j + 1)]
    });
    let b = Array2::from_shape_fn((rows - 1, cols), |(i, j)| {
        counts[(i, j)] - counts[(i + 1, j)]
    });
    ShiftField::new(a, b).unwrap()
}

pub fn arb_image(max_dim: usize) -> impl Strategy<Value = WrappedImage> {
    (2..=max_dim, 2..=max_dim).prop_flat_map(|(r, c)| {
        prop::collection::vec(0.0..1.0f64, r * c)
            .prop_map(move |v| WrappedImage::from_vec(r, c, v).unwrap())
    })
}

pub fn arb_shifts(rows: usize, cols: usize) -> impl Strategy<Value = ShiftField> {
    (
        prop::collection::vec(-1i8..=1, rows * (cols - 1)),
        prop::collection::vec(-1i8..=1, (rows - 1) * cols),
    )
        .prop_map(move |(a, b)| {
            ShiftField::new(
                Array2::from_shape_vec((rows, cols - 1), a).unwrap(),
                Array2::from_shape_vec((rows - 1, cols), b).unwrap(),
            )
            .unwrap()
        })
}

/// An image together with curl-free shifts built from a random 0/1 count raster.
pub fn arb_consistent(max_dim: usize) -> impl Strategy<Value = (WrappedImage, ShiftField)> {
    (2..=max_dim, 2..=max_dim).prop_flat_map(|(r, c)| {
        (
            prop::collection::vec(0.0..1.0f64, r * c),
            prop::collection::vec(0i8..=1, r * c),
        )
            .prop_map(move |(phi, n)| {
                let counts = Array2::from_shape_vec((r, c), n).unwrap();
                (
                    WrappedImage::from_vec(r, c, phi).unwrap(),
                    potential_shifts(&counts),
                )
            })
    })
}

/// Largest per-pixel deviation after removing the mean difference.
pub fn max_dev_up_to_constant(x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    let d = x - y;
    let m = d.mean().unwrap();
    d.iter().fold(0.0f64, |acc, v| acc.max((v - m).abs()))
}
