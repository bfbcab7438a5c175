//! Small synthetic classification sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::svm::LabeledDataset;

/// The four corners `(±1, ±1)`, labelled by the sign of the coordinate product.
pub fn xor() -> LabeledDataset {
    let vectors: Vec<Vec<f64>> = vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0]];
    let labels = vectors.iter().map(|v| (v[0] * v[1]).signum()).collect();
    LabeledDataset::new(vectors, labels).expect("valid labels")
}

/// Two interleaved half circles with Gaussian jitter: the upper moon is
/// labelled +1, the lower one −1. Points alternate between the moons.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise.max(0.0)).expect("finite sd");
    let mut vectors = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let (x, y, label) = if k % 2 == 0 {
            (t.cos(), t.sin(), 1.0)
        } else {
            (1.0 - t.cos(), 0.5 - t.sin(), -1.0)
        };
        vectors.push(vec![x + jitter.sample(&mut rng), y + jitter.sample(&mut rng)]);
        labels.push(label);
    }
    LabeledDataset::new(vectors, labels).expect("valid labels")
}

/// `m` vectors of dimension `n` with entries uniform in `[-1, 1)`.
pub fn uniform_rows(m: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_labels() {
        let d = xor();
        assert_eq!(d.labels(), &[1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn moons_are_balanced_and_seeded() {
        let a = two_moons(60, 0.1, 7);
        assert_eq!(a.len(), 60);
        assert_eq!(a.labels().iter().filter(|&&y| y > 0.0).count(), 30);
        assert_eq!(a, two_moons(60, 0.1, 7));
        assert_ne!(a, two_moons(60, 0.1, 8));
    }
}
