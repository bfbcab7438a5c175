//! Classical kernels and their swap-test counterparts.
//!
//! The quantum Gaussian kernel is the normalized exponential series of the
//! estimated dot product,
//!
//! ```text
//! K(x_i, x_j) = Σ_{l≤m} u^l / l! · exp(−Z / 2σ²),   u = x_i·x_j / σ²,
//! ```
//!
//! truncated at the smallest order `m` whose Lagrange remainder is below
//! `10^{-q}`. In closed form it is `exp(−|x_i − x_j|² / 2σ²)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_pair, estimate_pair_from_states, Backend, EstimateResult, EstimatorConfig, PairEstimate};
use crate::qram::{PairNorms, QramStore, QueryCounter};
use crate::statevec::DEFAULT_DIM_CAP;

pub const DEFAULT_PRECISION_Q: u32 = 12;
/// Upper limit for the truncation-order search.
pub const MAX_TRUNCATION_ORDER: usize = 500;
/// Eigenvalues below this are clipped to zero by PSD repair.
pub const PSD_CLIP_TOL: f64 = -1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianMode {
    Series,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyMode {
    /// Build `|x̂⟩^{⊗d}` and run the swap-test pipeline on the tensor powers.
    TensorState,
    /// Estimate `⟨x̂_i|x̂_j⟩` once and raise it to the `d`-th power.
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Polynomial { a: f64, b: f64, degree: u32 },
    Gaussian { sigma: f64, precision_q: u32, mode: GaussianMode },
}

impl KernelSpec {
    pub fn polynomial(degree: u32) -> Self {
        KernelSpec::Polynomial {
            a: 1.0,
            b: 0.0,
            degree,
        }
    }

    pub fn gaussian(sigma: f64) -> Self {
        KernelSpec::Gaussian {
            sigma,
            precision_q: DEFAULT_PRECISION_Q,
            mode: GaussianMode::Series,
        }
    }

    pub fn gaussian_with(sigma: f64, precision_q: u32, mode: GaussianMode) -> Self {
        KernelSpec::Gaussian {
            sigma,
            precision_q,
            mode,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { a, b, degree } => {
                if a.is_nan() || a <= 0.0 || b.is_nan() || b < 0.0 || degree < 1 {
                    return Err(Error::InvalidParameter(format!(
                        "polynomial kernel needs A > 0, B >= 0, d >= 1 (got {a}, {b}, {degree})"
                    )));
                }
                Ok(())
            }
            KernelSpec::Gaussian { sigma, precision_q, .. } => {
                if !(sigma > 0.0 && sigma.is_finite()) || precision_q < 1 {
                    return Err(Error::InvalidParameter(format!(
                        "gaussian kernel needs sigma > 0 and q >= 1 (got {sigma}, {precision_q})"
                    )));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    pub x_bound: f64,
    pub q: u32,
    pub m: usize,
    pub remainder_bound: f64,
}

/// `ln(n!)`.
pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Lagrange bound `e^x · x^{m+1} / (m+1)!` on the tail of the exponential
/// series, valid for every argument with `|u| ≤ x`.
pub fn lagrange_remainder_bound(x_bound: f64, m: usize) -> f64 {
    if x_bound == 0.0 {
        return 0.0;
    }
    (x_bound + (m as f64 + 1.0) * x_bound.ln() - ln_factorial(m + 1)).exp()
}

/// Smallest `m` with `lagrange_remainder_bound(x_bound, m) < 10^{-q}`.
pub fn truncation_order(x_bound: f64, q: u32) -> Result<TruncationPlan> {
    if !(x_bound >= 0.0 && x_bound.is_finite()) || q < 1 {
        return Err(Error::InvalidParameter(format!(
            "truncation needs x_bound >= 0 and q >= 1 (got {x_bound}, {q})"
        )));
    }
    let target = 10f64.powi(-(q as i32));
    (0..=MAX_TRUNCATION_ORDER)
        .map(|m| (m, lagrange_remainder_bound(x_bound, m)))
        .find(|&(_, r)| r < target)
        .map(|(m, remainder_bound)| TruncationPlan {
            x_bound,
            q,
            m,
            remainder_bound,
        })
        .ok_or(Error::TruncationTooTight {
            x_bound,
            q,
            cap: MAX_TRUNCATION_ORDER,
        })
}

/// `Σ_{l=0}^{m} u^l / l!`
pub fn exp_partial_sum(u: f64, m: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for l in 1..=m {
        term *= u / l as f64;
        sum += term;
    }
    sum
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `(A·x_i·x_j + B)^d`
pub fn classical_poly_kernel(x_i: &[f64], x_j: &[f64], a: f64, b: f64, degree: u32) -> f64 {
    (a * dot(x_i, x_j) + b).powi(degree as i32)
}

/// `exp(−|x_i − x_j|² / 2σ²)`
pub fn classical_gaussian_kernel(x_i: &[f64], x_j: &[f64], sigma: f64) -> f64 {
    (-squared_distance(x_i, x_j) / (2.0 * sigma * sigma)).exp()
}

pub fn classical_kernel(spec: &KernelSpec, x_i: &[f64], x_j: &[f64]) -> f64 {
    match *spec {
        KernelSpec::Linear => dot(x_i, x_j),
        KernelSpec::Polynomial { a, b, degree } => classical_poly_kernel(x_i, x_j, a, b, degree),
        KernelSpec::Gaussian { sigma, .. } => classical_gaussian_kernel(x_i, x_j, sigma),
    }
}

pub fn classical_gram(rows: &[Vec<f64>], spec: &KernelSpec) -> DMatrix<f64> {
    let m = rows.len();
    let mut k = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = classical_kernel(spec, &rows[i], &rows[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Normalized polynomial kernel `⟨x̂_i|x̂_j⟩^d`.
pub fn quantum_poly_kernel(
    store: &QramStore,
    i: usize,
    j: usize,
    degree: u32,
    cfg: &EstimatorConfig,
    mode: PolyMode,
) -> Result<EstimateResult> {
    if degree < 1 {
        return Err(Error::InvalidParameter("polynomial degree must be >= 1".into()));
    }
    match mode {
        PolyMode::Power => {
            let pair = estimate_pair(store, i, j, cfg)?;
            let scale = store.norm(i)? * store.norm(j)?;
            let c = pair.dot.value / scale;
            let c_se = pair.dot.stderr / scale;
            let d = degree as i32;
            let mut out = pair.dot;
            out.value = c.powi(d);
            out.stderr = (degree as f64) * c.abs().powi(d - 1) * c_se;
            Ok(out)
        }
        PolyMode::TensorState => {
            let d = degree as usize;
            let mut scratch = QueryCounter::for_store(store);
            let a = store.fetch_state(i, &mut scratch)?.tensor_power_with_cap(d, DEFAULT_DIM_CAP)?;
            let b = store.fetch_state(j, &mut scratch)?.tensor_power_with_cap(d, DEFAULT_DIM_CAP)?;
            let unit = PairNorms {
                norm_i: 1.0,
                norm_j: 1.0,
                z: 2.0,
            };
            let step_cost = degree as u64 * store.step_cost();
            Ok(estimate_pair_from_states(&a, &b, unit, step_cost, cfg)?.dot)
        }
    }
}

/// Largest exponent argument `|u| = |x_i·x_j| / σ²` the plan must cover for
/// one pair; sampled estimates add three standard errors, but never beyond
/// the Cauchy-Schwarz bound `‖x_i‖‖x_j‖` on the true value.
fn exponent_bound(pair: &PairEstimate, norm_product: f64, sigma: f64, backend: Backend) -> f64 {
    let est = pair.dot.value.abs();
    let covered = match backend {
        Backend::Exact => est,
        Backend::Sampling | Backend::AeModel => est.max((est + 3.0 * pair.dot.stderr).min(norm_product)),
    };
    covered / (sigma * sigma)
}

fn gaussian_from_pair(pair: &PairEstimate, sigma: f64, mode: GaussianMode, plan: &TruncationPlan) -> EstimateResult {
    let two_s2 = 2.0 * sigma * sigma;
    let raw = match mode {
        GaussianMode::ClosedForm => (-pair.distance_sq.value / two_s2).exp(),
        GaussianMode::Series => {
            let u = pair.dot.value / (sigma * sigma);
            // normalization by the self-terms: 1/sqrt(e^{‖x_i‖²/σ²} e^{‖x_j‖²/σ²})
            exp_partial_sum(u, plan.m) * (-pair.z.value / two_s2).exp()
        }
    };
    let value = raw.clamp(f64::MIN_POSITIVE, 1.0);
    let mut out = pair.distance_sq.clone();
    out.stderr = value * pair.distance_sq.stderr / two_s2;
    out.value = value;
    out
}

/// Swap-test Gaussian kernel for one pair. In series mode the truncation
/// order is chosen for this pair's own exponent bound.
pub fn quantum_gaussian_kernel(
    store: &QramStore,
    i: usize,
    j: usize,
    spec: &KernelSpec,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    spec.validate()?;
    let KernelSpec::Gaussian {
        sigma,
        precision_q,
        mode,
    } = *spec
    else {
        return Err(Error::InvalidParameter("expected a gaussian kernel spec".into()));
    };
    let pair = estimate_pair(store, i, j, cfg)?;
    let norm_product = store.norm(i)? * store.norm(j)?;
    let plan = truncation_order(exponent_bound(&pair, norm_product, sigma, cfg.backend), precision_q)?;
    Ok(gaussian_from_pair(&pair, sigma, mode, &plan))
}

/// Cost record for one estimated kernel entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntryCost {
    pub i: usize,
    pub j: usize,
    pub shots: u64,
    pub qram_queries: u64,
    pub total_steps: u64,
    pub step_cost: u64,
}

/// Kernel values for a list of index pairs, estimated independently with
/// per-pair seeds, plus the truncation plan shared by all of them.
#[derive(Clone, Debug)]
pub struct KernelEntries {
    pub values: Vec<EstimateResult>,
    pub plan: Option<TruncationPlan>,
}

pub fn kernel_entries(
    store: &QramStore,
    pairs: &[(usize, usize)],
    spec: &KernelSpec,
    cfg: &EstimatorConfig,
) -> Result<KernelEntries> {
    spec.validate()?;
    cfg.validate()?;
    match *spec {
        KernelSpec::Linear => {
            let values = pairs
                .par_iter()
                .map(|&(i, j)| Ok(estimate_pair(store, i, j, &cfg.for_pair(i, j))?.dot))
                .collect::<Result<Vec<_>>>()?;
            Ok(KernelEntries { values, plan: None })
        }
        KernelSpec::Polynomial { a, b, degree } => {
            if a != 1.0 || b != 0.0 {
                return Err(Error::InvalidParameter(
                    "the swap-test polynomial kernel is defined for A = 1, B = 0 only".into(),
                ));
            }
            let values = pairs
                .par_iter()
                .map(|&(i, j)| quantum_poly_kernel(store, i, j, degree, &cfg.for_pair(i, j), PolyMode::Power))
                .collect::<Result<Vec<_>>>()?;
            Ok(KernelEntries { values, plan: None })
        }
        KernelSpec::Gaussian {
            sigma,
            precision_q,
            mode,
        } => {
            let estimates = pairs
                .par_iter()
                .map(|&(i, j)| estimate_pair(store, i, j, &cfg.for_pair(i, j)))
                .collect::<Result<Vec<_>>>()?;
            let mut x_bound = 0.0f64;
            for (p, &(i, j)) in estimates.iter().zip(pairs) {
                let norm_product = store.norm(i)? * store.norm(j)?;
                x_bound = x_bound.max(exponent_bound(p, norm_product, sigma, cfg.backend));
            }
            let plan = truncation_order(x_bound, precision_q)?;
            let values = estimates
                .iter()
                .map(|p| gaussian_from_pair(p, sigma, mode, &plan))
                .collect();
            Ok(KernelEntries {
                values,
                plan: Some(plan),
            })
        }
    }
}

/// Exact self-similarity `K(x_i, x_i)` of the kernel as estimated.
fn self_value(store: &QramStore, spec: &KernelSpec, i: usize) -> Result<f64> {
    Ok(match spec {
        KernelSpec::Linear => store.norm(i)?.powi(2),
        KernelSpec::Polynomial { .. } | KernelSpec::Gaussian { .. } => 1.0,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelReport {
    pub min_eigenvalue: f64,
    pub repaired: bool,
    pub min_eigenvalue_after: f64,
    pub pair_estimates: usize,
    pub total_shots: u64,
    pub total_queries: u64,
    pub total_steps: u64,
    pub clamped: u32,
    pub truncation: Option<TruncationPlan>,
    pub entries: Vec<EntryCost>,
}

pub fn min_eigenvalue(k: &DMatrix<f64>) -> f64 {
    if k.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(k.clone()).eigenvalues.min()
}

/// Clips eigenvalues below `PSD_CLIP_TOL` to zero and reassembles the matrix.
/// Returns `None` when no eigenvalue needs clipping.
pub fn psd_repair(k: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let eig = SymmetricEigen::new(k.clone());
    if eig.eigenvalues.iter().all(|&l| l >= PSD_CLIP_TOL) {
        return None;
    }
    let clipped = eig.eigenvalues.map(|l| if l < PSD_CLIP_TOL { 0.0 } else { l });
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    Some((&rebuilt + rebuilt.transpose()) * 0.5)
}

/// Gram matrix over every stored vector, estimated for `i ≤ j` and mirrored.
pub fn kernel_matrix(
    store: &QramStore,
    spec: &KernelSpec,
    cfg: &EstimatorConfig,
    repair: bool,
) -> Result<(DMatrix<f64>, KernelReport)> {
    let m = store.len();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect();
    let entries = kernel_entries(store, &pairs, spec, cfg)?;
    let mut k = DMatrix::zeros(m, m);
    let mut costs = Vec::with_capacity(pairs.len());
    let mut clamped = 0;
    for (&(i, j), est) in pairs.iter().zip(&entries.values) {
        let v = if i == j { self_value(store, spec, i)? } else { est.value };
        k[(i, j)] = v;
        k[(j, i)] = v;
        clamped += est.clamped;
        costs.push(EntryCost {
            i,
            j,
            shots: est.shots_used,
            qram_queries: est.qram_queries,
            total_steps: est.total_steps,
            step_cost: est.step_cost,
        });
    }
    let before = min_eigenvalue(&k);
    let repaired = if repair { psd_repair(&k) } else { None };
    let was_repaired = repaired.is_some();
    if let Some(r) = repaired {
        k = r;
    }
    let after = if was_repaired { min_eigenvalue(&k) } else { before };
    let report = KernelReport {
        min_eigenvalue: before,
        repaired: was_repaired,
        min_eigenvalue_after: after,
        pair_estimates: costs.len(),
        total_shots: costs.iter().map(|c| c.shots).sum(),
        total_queries: costs.iter().map(|c| c.qram_queries).sum(),
        total_steps: costs.iter().map(|c| c.total_steps).sum(),
        clamped,
        truncation: entries.plan,
        entries: costs,
    };
    Ok((k, report))
}
