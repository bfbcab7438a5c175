use nalgebra::DMatrix;
use num_complex::Complex64;
use qgk_core::estimator::{estimate_dot, estimate_z, Backend, EstimatorConfig};
use qgk_core::kernels::{classical_gram, kernel_matrix, KernelSpec};
use qgk_core::qram::QramStore;
use qgk_core::statevec::{QuantumState, RegisterLayout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Wilson-Hilferty approximation of the 99% chi-square quantile.
fn chi2_99(df: usize) -> f64 {
    let k = df as f64;
    let z = 2.326_347_874;
    let h = 2.0 / (9.0 * k);
    k * (1.0 - h + z * h.sqrt()).powi(3)
}

#[test]
fn measurement_follows_born_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let shots = 100_000;
    let mut rejections = 0;
    for dim in [2usize, 3, 4, 6, 8] {
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let state = QuantumState::normalized(RegisterLayout::single("r", dim).unwrap(), amps).unwrap();
        let probs: Vec<f64> = state.amps().iter().map(|a| a.norm_sqr()).collect();
        let mut counts = vec![0u64; dim];
        for _ in 0..shots {
            counts[state.measure_register("r", &mut rng).unwrap().outcome] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&probs)
            .map(|(&c, &p)| {
                let e = p * shots as f64;
                (c as f64 - e).powi(2) / e
            })
            .sum();
        if chi2 > chi2_99(dim - 1) {
            rejections += 1;
        }
    }
    // five independent 1% tests; two rejections would be a 1-in-1000 event
    assert!(rejections <= 1, "{rejections} of 5 states rejected");
}

#[test]
fn sampled_dot_is_unbiased() {
    let store = QramStore::load_dataset(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    let runs = 400;
    let vals: Vec<f64> = (0..runs)
        .map(|s| {
            let cfg = EstimatorConfig::new(Backend::Sampling).with_shots(10_000).with_seed(s);
            estimate_dot(&store, 0, 1, &cfg).unwrap().value
        })
        .collect();
    let mean = vals.iter().sum::<f64>() / runs as f64;
    let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0)).sqrt();
    let se = sd / (runs as f64).sqrt();
    // small-angle inversion biases Ẑ by O(θ²) relative; θ = 0.05 keeps it well under 4 se
    assert!((mean - 11.0).abs() < 4.0 * se, "mean {mean}, se {se}");
}

#[test]
fn ae_model_z_error_scales_inversely_with_shots() {
    let store = QramStore::load_dataset(&[vec![3.0, 4.0], vec![1.0, 0.0]]).unwrap();
    let rmse = |shots: u64| {
        let mse = (0..200)
            .map(|s| {
                let cfg = EstimatorConfig::new(Backend::AeModel).with_shots(shots).with_seed(s);
                (estimate_z(&store, 0, 1, &cfg).unwrap().value - 26.0).powi(2)
            })
            .sum::<f64>()
            / 200.0;
        mse.sqrt()
    };
    let (lo, hi) = (rmse(100), rmse(10_000));
    let ratio = lo / hi;
    assert!((70.0..140.0).contains(&ratio), "ratio {ratio}");
    // the model's standard deviation is Z/shots
    assert!((lo / 0.26 - 1.0).abs() < 0.2, "{lo}");
}

fn gram_rmse(k: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    ((k - reference).map(|v| v * v).sum() / k.len() as f64).sqrt()
}

#[test]
fn sampled_gram_error_does_not_grow_with_shots() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rows: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let store = QramStore::load_dataset(&rows).unwrap();
    let spec = KernelSpec::gaussian(1.0);
    let reference = classical_gram(&rows, &spec);
    let mean_rmse: Vec<f64> = [100u64, 1_000, 10_000]
        .iter()
        .map(|&shots| {
            (0..30)
                .map(|s| {
                    let cfg = EstimatorConfig::new(Backend::Sampling).with_shots(shots).with_seed(s);
                    gram_rmse(&kernel_matrix(&store, &spec, &cfg, true).unwrap().0, &reference)
                })
                .sum::<f64>()
                / 30.0
        })
        .collect();
    assert!(mean_rmse.windows(2).all(|w| w[1] <= w[0]), "{mean_rmse:?}");
}

#[test]
fn exact_gram_report_counts_every_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rows: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let store = QramStore::load_dataset(&rows).unwrap();
    let cfg = EstimatorConfig::new(Backend::AeModel).with_epsilon(0.01);
    let (_, report) = kernel_matrix(&store, &KernelSpec::gaussian(1.0), &cfg, true).unwrap();
    assert_eq!(report.pair_estimates, 55);
    assert_eq!(report.total_shots, 55 * 100);
    assert_eq!(report.total_steps, 55 * 100 * 3 * 2);
}
