//! The four-quadrant synthetic problem on `[-1, 1]^2`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{substream, Purpose};
use crate::transform::LabeledDataset;

/// Zero-based quadrant class: 0 for `x1 >= 0, x2 >= 0`, 1 for `x1 < 0, x2 >= 0`,
/// 2 for `x1 < 0, x2 < 0`, 3 for `x1 >= 0, x2 < 0`.
pub fn quadrant_label(x: &[f64]) -> usize {
    match (x[0] >= 0.0, x[1] >= 0.0) {
        (true, true) => 0,
        (false, true) => 1,
        (false, false) => 2,
        (true, false) => 3,
    }
}

/// `count` uniform points on `[-1, 1]^2` labeled by quadrant. Fails if some
/// quadrant ends up empty.
pub fn synth_quadrants(count: usize, seed: u64) -> Result<LabeledDataset> {
    let mut rng = substream(seed, Purpose::Synth, 0);
    let features: Vec<Vec<f64>> = (0..count)
        .map(|_| vec![rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)])
        .collect();
    let labels = features.iter().map(|x| quadrant_label(x)).collect();
    LabeledDataset::new(features, labels, 4)
        .map_err(|e| Error::Data(format!("synthetic sample of {count} points: {e}")))
}
