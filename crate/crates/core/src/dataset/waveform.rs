//! Breiman's waveform generator, in the 40-attribute "+noise" layout of the
//! UCI Waveform Database Generator (version 2).
//!
//! Each example of class `c` is a random convex combination of two of three
//! triangular base waves sampled at 21 points, plus unit Gaussian noise on
//! every point; 19 further attributes are pure N(0, 1) noise.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::Matrix;

pub const SIGNAL_FEATURES: usize = 21;
pub const NOISE_FEATURES: usize = 19;
/// Class sizes of the UCI waveform+noise file (5000 examples).
pub const UCI_CLASS_COUNTS: [usize; 3] = [1692, 1653, 1655];

fn base_wave(shift: i64, i: usize) -> f64 {
    // peak of height 6 at point 11 (1-based), shifted
    let pos = i as i64 + 1 - shift;
    (6 - (pos - 11).abs()).max(0) as f64
}

/// Base wave pair mixed for each class: h1 = centred, h2 = shifted right by 4, h3 = left by 4.
const CLASS_WAVES: [(i64, i64); 3] = [(0, 4), (0, -4), (4, -4)];

/// Generates `counts[c]` examples of each class `c`, shuffled.
///
/// Returns a `n × 40` feature matrix and the class of each row.
pub fn generate(counts: [usize; 3], seed: u64) -> (Matrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(c, &k)| std::iter::repeat_n(c, k))
        .collect();
    labels.shuffle(&mut rng);

    let width = SIGNAL_FEATURES + NOISE_FEATURES;
    let mut features = Matrix::zeros(labels.len(), width);
    for (r, &class) in labels.iter().enumerate() {
        let (a, b) = CLASS_WAVES[class];
        let u: f64 = rng.random();
        let row = features.row_mut(r);
        for (i, x) in row.iter_mut().enumerate().take(SIGNAL_FEATURES) {
            let noise: f64 = rng.sample(StandardNormal);
            *x = u * base_wave(a, i) + (1.0 - u) * base_wave(b, i) + noise;
        }
        for x in row.iter_mut().skip(SIGNAL_FEATURES) {
            *x = rng.sample(StandardNormal);
        }
    }
    (features, labels)
}

/// Writes rows in the UCI layout: two-decimal values, comma-separated, class last.
pub fn write_uci(features: &Matrix, labels: &[usize], mut out: impl Write) -> std::io::Result<()> {
    for (row, label) in features.row_iter().zip(labels) {
        for v in row {
            // avoid "-0.00"
            let v = if v.abs() < 0.005 { 0.0 } else { *v };
            write!(out, "{v:.2},")?;
        }
        writeln!(out, "{label}")?;
    }
    Ok(())
}
