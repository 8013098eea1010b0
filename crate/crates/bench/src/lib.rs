//! Fixed inputs for the thinning benchmarks.

use glyphskel_core::{synthesize, BinaryImage};

/// Synthetic shapes used by the benches, with a short label each.
pub fn synthetic_fixtures() -> Vec<(String, BinaryImage)> {
    [
        ("bar", vec![40.0, 8.0]),
        ("rotated-bar", vec![40.0, 8.0, 45.0]),
        ("plus", vec![40.0, 8.0]),
        ("tee", vec![40.0, 8.0]),
        ("annulus", vec![40.0, 24.0]),
        ("circle", vec![20.0, 8.0]),
    ]
    .into_iter()
    .map(|(shape, params)| {
        let s = synthesize(shape, &params).expect("fixture parameters are valid");
        (shape.to_string(), s.image)
    })
    .collect()
}

/// A bar scaled by `k`, for watching how cost grows with stroke size.
pub fn scaled_bar(k: f64) -> BinaryImage {
    synthesize("bar", &[40.0 * k, 8.0 * k]).expect("positive size").image
}
