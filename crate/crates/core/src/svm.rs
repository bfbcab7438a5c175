//! Least-squares SVM over classical or swap-test kernel matrices.
//!
//! Training solves the dense bordered system
//!
//! ```text
//! [ 0   1ᵀ        ] [b]   [0]
//! [ 1   K + I/γ   ] [α] = [y]
//! ```
//!
//! and prediction scores a point as `Σ α_i K(x_i, x) + b`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{derive_seed, EstimatorConfig};
use crate::kernels::{classical_gram, classical_kernel, kernel_entries, kernel_matrix, KernelSpec};
use crate::qram::QramStore;

/// Smallest acceptable pivot magnitude of the LU factorization.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-12;
/// Scores closer to zero than this are labelled +1.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    vectors: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl LabeledDataset {
    pub fn new(vectors: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if vectors.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: vectors.len(),
                found: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidLabel(bad));
        }
        if let Some(first) = vectors.first() {
            if let Some(v) = vectors.iter().find(|v| v.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    found: v.len(),
                });
            }
        }
        Ok(Self { vectors, labels })
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn flipped(&self) -> Self {
        Self {
            vectors: self.vectors.clone(),
            labels: self.labels.iter().map(|y| -y).collect(),
        }
    }
}

/// Where kernel values come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum KernelSource {
    Classical,
    Quantum { estimator: EstimatorConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LssvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub spec: KernelSpec,
    pub kernel_source: KernelSource,
    pub training_vectors: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub score: f64,
    pub label: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[actual][predicted]`, index 0 for −1 and 1 for +1.
    pub confusion: [[u64; 2]; 2],
}

fn class_index(y: f64) -> usize {
    usize::from(y > 0.0)
}

fn check_training_set(data: &LabeledDataset, gamma: f64) -> Result<()> {
    if gamma.is_nan() || gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    if data.len() < 2 {
        return Err(Error::InvalidParameter("LS-SVM training needs at least 2 points".into()));
    }
    let pos = data.labels.iter().any(|&y| y > 0.0);
    let neg = data.labels.iter().any(|&y| y < 0.0);
    if !(pos && neg) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Solves the LS-SVM system for `(b, α)`.
pub fn solve_lssvm(k: &DMatrix<f64>, labels: &[f64], gamma: f64) -> Result<(f64, Vec<f64>)> {
    let m = labels.len();
    if k.nrows() != m || k.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: k.nrows(),
        });
    }
    let a = lssvm_system(k, gamma);
    let rhs = DVector::from_iterator(m + 1, std::iter::once(0.0).chain(labels.iter().copied()));
    let lu = a.lu();
    let pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |acc, p| acc.min(p.abs()));
    if pivot.is_nan() || pivot < SINGULAR_PIVOT_TOL {
        return Err(Error::SingularSystem { pivot });
    }
    let sol = lu.solve(&rhs).ok_or(Error::SingularSystem { pivot })?;
    Ok((sol[0], sol.iter().skip(1).copied().collect()))
}

fn lssvm_system(k: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let m = k.nrows();
    let mut a = DMatrix::zeros(m + 1, m + 1);
    for i in 0..m {
        a[(0, i + 1)] = 1.0;
        a[(i + 1, 0)] = 1.0;
        for j in 0..m {
            a[(i + 1, j + 1)] = k[(i, j)];
        }
        a[(i + 1, i + 1)] += 1.0 / gamma;
    }
    a
}

/// `‖A·[b; α] − [0; y]‖∞` for the LS-SVM system.
pub fn system_residual(k: &DMatrix<f64>, labels: &[f64], gamma: f64, bias: f64, alphas: &[f64]) -> f64 {
    let a = lssvm_system(k, gamma);
    let x = DVector::from_iterator(alphas.len() + 1, std::iter::once(bias).chain(alphas.iter().copied()));
    let rhs = DVector::from_iterator(labels.len() + 1, std::iter::once(0.0).chain(labels.iter().copied()));
    (a * x - rhs).amax()
}

/// Kernel matrix of the training set for the given source.
pub fn training_gram(data: &LabeledDataset, spec: &KernelSpec, source: &KernelSource) -> Result<DMatrix<f64>> {
    spec.validate()?;
    match source {
        KernelSource::Classical => Ok(classical_gram(&data.vectors, spec)),
        KernelSource::Quantum { estimator } => {
            let store = QramStore::load_dataset(&data.vectors)?;
            Ok(kernel_matrix(&store, spec, estimator, true)?.0)
        }
    }
}

pub fn train(data: &LabeledDataset, spec: &KernelSpec, source: &KernelSource, gamma: f64) -> Result<LssvmModel> {
    check_training_set(data, gamma)?;
    let k = training_gram(data, spec, source)?;
    train_with_gram(data, spec, source, &k, gamma)
}

/// Trains on a precomputed kernel matrix.
pub fn train_with_gram(
    data: &LabeledDataset,
    spec: &KernelSpec,
    source: &KernelSource,
    k: &DMatrix<f64>,
    gamma: f64,
) -> Result<LssvmModel> {
    check_training_set(data, gamma)?;
    let (bias, alphas) = solve_lssvm(k, &data.labels, gamma)?;
    Ok(LssvmModel {
        alphas,
        bias,
        gamma,
        spec: spec.clone(),
        kernel_source: source.clone(),
        training_vectors: data.vectors.clone(),
        labels: data.labels.clone(),
    })
}

fn point_seed(seed: u64, x: &[f64]) -> u64 {
    x.iter().fold(derive_seed(seed, x.len() as u64), |acc, v| derive_seed(acc, v.to_bits()))
}

impl LssvmModel {
    /// Kernel values `K(x_i, x)` against every training vector. Quantum
    /// sources load `x` into a transient store next to the training set and
    /// seed the estimates from the bit pattern of `x`.
    pub fn kernel_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.training_vectors.first().map_or(0, Vec::len);
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: x.len(),
            });
        }
        match &self.kernel_source {
            KernelSource::Classical => Ok(self
                .training_vectors
                .iter()
                .map(|xi| classical_kernel(&self.spec, xi, x))
                .collect()),
            KernelSource::Quantum { estimator } => {
                let store = QramStore::load_dataset(&self.training_vectors)?.with_appended(&[x.to_vec()])?;
                let target = store.len() - 1;
                let pairs: Vec<(usize, usize)> = (0..target).map(|i| (i, target)).collect();
                let cfg = estimator.clone().with_seed(point_seed(estimator.seed, x));
                let entries = kernel_entries(&store, &pairs, &self.spec, &cfg)?;
                Ok(entries.values.into_iter().map(|e| e.value).collect())
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        let row = self.kernel_row(x)?;
        let score = self.alphas.iter().zip(&row).map(|(a, k)| a * k).sum::<f64>() + self.bias;
        let label = if score.abs() < TIE_TOL || score > 0.0 { 1.0 } else { -1.0 };
        Ok(Prediction { score, label })
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        xs.par_iter().map(|x| self.predict(x)).collect()
    }

    pub fn evaluate(&self, test: &LabeledDataset) -> Result<Evaluation> {
        let preds = self.predict_batch(&test.vectors)?;
        let mut confusion = [[0u64; 2]; 2];
        for (p, &y) in preds.iter().zip(&test.labels) {
            confusion[class_index(y)][class_index(p.label)] += 1;
        }
        let correct = confusion[0][0] + confusion[1][1];
        let accuracy = if test.is_empty() {
            0.0
        } else {
            correct as f64 / test.len() as f64
        };
        Ok(Evaluation { accuracy, confusion })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
