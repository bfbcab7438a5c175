//! Series-growth data, error-scaling experiments and query-cost tables.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    derive_seed, estimate_dot, estimate_pair, estimate_z, Backend, EstimateResult, EstimatorConfig,
    PAIR_QUERIES_PER_SHOT, Z_QUERIES_PER_SHOT,
};
use crate::kernels::{dot, kernel_matrix, ln_factorial, quantum_gaussian_kernel, quantum_poly_kernel, KernelSpec, PolyMode};
use crate::qram::QramStore;
use crate::statevec::ceil_log2;

/// A term "vanishes" once it drops below this fraction of the largest term.
pub const VANISH_FRACTION: f64 = 1e-3;
/// Log-space tolerance for treating two terms as tied at the peak.
const PEAK_TIE_TOL: f64 = 1e-12;
/// RMSE below which a scaling fit is reported as degenerate.
pub const DEGENERATE_RMSE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthKind {
    /// `N^d / d!`
    Classical,
    /// `d·log₂N / d!`
    Quantum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthTerm {
    pub d: usize,
    /// `None` when the raw value is not representable as a finite double.
    pub value: Option<f64>,
    pub log_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub kind: GrowthKind,
    pub n: u64,
    pub terms: Vec<GrowthTerm>,
    pub peak_d: usize,
    pub vanish_d: Option<usize>,
}

fn growth(kind: GrowthKind, n: u64, d_max: usize) -> Result<GrowthSeries> {
    if n < 2 || d_max < 1 {
        return Err(Error::InvalidParameter(format!("growth needs N >= 2 and d_max >= 1 (got {n}, {d_max})")));
    }
    let ln_n = (n as f64).ln();
    let ln_log2_n = (n as f64).log2().ln();
    let terms: Vec<GrowthTerm> = (1..=d_max)
        .map(|d| {
            let log_value = match kind {
                GrowthKind::Classical => d as f64 * ln_n - ln_factorial(d),
                GrowthKind::Quantum => (d as f64).ln() + ln_log2_n - ln_factorial(d),
            };
            let raw = log_value.exp();
            GrowthTerm {
                d,
                value: (raw.is_finite()).then_some(raw),
                log_value,
            }
        })
        .collect();
    let max_log = terms.iter().map(|t| t.log_value).fold(f64::NEG_INFINITY, f64::max);
    let peak_d = terms
        .iter()
        .find(|t| t.log_value >= max_log - PEAK_TIE_TOL)
        .map(|t| t.d)
        .expect("non-empty");
    let cutoff = max_log + VANISH_FRACTION.ln();
    let vanish_d = terms.iter().find(|t| t.log_value < cutoff).map(|t| t.d);
    Ok(GrowthSeries {
        kind,
        n,
        terms,
        peak_d,
        vanish_d,
    })
}

/// Terms `N^d/d!` for `d = 1..=d_max`, computed in log space.
pub fn classical_growth(n: u64, d_max: usize) -> Result<GrowthSeries> {
    growth(GrowthKind::Classical, n, d_max)
}

/// Terms `d·log₂N/d!` for `d = 1..=d_max`.
pub fn quantum_growth(n: u64, d_max: usize) -> Result<GrowthSeries> {
    growth(GrowthKind::Quantum, n, d_max)
}

impl GrowthSeries {
    /// Sum of the representable raw terms.
    pub fn partial_sum(&self) -> f64 {
        self.terms.iter().filter_map(|t| t.value).sum()
    }

    /// All `d` whose term ties the maximum.
    pub fn peak_set(&self) -> Vec<usize> {
        let max_log = self.terms.iter().map(|t| t.log_value).fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-12 * max_log.abs().max(1.0);
        self.terms
            .iter()
            .filter(|t| t.log_value >= max_log - tol)
            .map(|t| t.d)
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub backend: Backend,
    pub seeds: usize,
    pub xs: Vec<u64>,
    pub ys: Vec<f64>,
    /// Delta-method standard error of each RMSE.
    pub stderrs: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Every RMSE is below `DEGENERATE_RMSE`; the fit is flat by convention.
    pub degenerate: bool,
}

/// Least squares of `log10 y` on `log10 x`: `(slope, intercept, r²)`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    (slope, intercept, r2)
}

/// RMSE of `estimate_dot` against the classical dot product over a seed
/// ensemble, for each shot count, with a log-log fit.
pub fn scaling_experiment(
    store: &QramStore,
    pair: (usize, usize),
    backend: Backend,
    shot_grid: &[u64],
    seeds: usize,
    base_seed: u64,
) -> Result<ScalingFit> {
    if shot_grid.len() < 3 {
        return Err(Error::InvalidParameter("shot grid needs at least 3 points".into()));
    }
    let lo = *shot_grid.iter().min().expect("non-empty");
    let hi = *shot_grid.iter().max().expect("non-empty");
    if lo == 0 || (hi as f64) < 100.0 * lo as f64 {
        return Err(Error::InvalidParameter("shot grid must span at least two decades".into()));
    }
    if seeds < 2 {
        return Err(Error::InvalidParameter("need at least 2 seeds".into()));
    }
    let (i, j) = pair;
    let truth = dot(store.vector(i)?, store.vector(j)?);
    let mut xs: Vec<u64> = shot_grid.to_vec();
    xs.sort_unstable();
    let mut ys = Vec::with_capacity(xs.len());
    let mut stderrs = Vec::with_capacity(xs.len());
    for &shots in &xs {
        let sq_errs = (0..seeds)
            .into_par_iter()
            .map(|s| {
                let cfg = EstimatorConfig::new(backend)
                    .with_shots(shots)
                    .with_seed(derive_seed(base_seed, s as u64));
                Ok((estimate_dot(store, i, j, &cfg)?.value - truth).powi(2))
            })
            .collect::<Result<Vec<f64>>>()?;
        let n = sq_errs.len() as f64;
        let mse = sq_errs.iter().sum::<f64>() / n;
        let var = sq_errs.iter().map(|e| (e - mse).powi(2)).sum::<f64>() / (n - 1.0);
        let rmse = mse.sqrt();
        ys.push(rmse);
        stderrs.push(if rmse > 0.0 { var.sqrt() / (2.0 * rmse * n.sqrt()) } else { 0.0 });
    }
    let degenerate = ys.iter().all(|&y| y < DEGENERATE_RMSE);
    let (slope, intercept, r2) = if degenerate {
        (0.0, 0.0, 0.0)
    } else {
        let fx: Vec<f64> = xs.iter().map(|&x| x as f64).collect();
        fit_loglog(&fx, &ys)
    };
    Ok(ScalingFit {
        backend,
        seeds,
        xs,
        ys,
        stderrs,
        slope,
        intercept,
        r2,
        degenerate,
    })
}

/// Operation kinds with their documented per-shot query cost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum CostOperation {
    EstimateZ,
    DistanceSq,
    Dot,
    GaussianKernel,
    PolyKernel { degree: u32, mode: PolyMode },
}

impl CostOperation {
    pub fn queries_per_shot(&self) -> u64 {
        match self {
            CostOperation::EstimateZ => Z_QUERIES_PER_SHOT,
            _ => PAIR_QUERIES_PER_SHOT,
        }
    }

    /// Multiplier on `⌈log₂N⌉` per query (the `d` copies of a tensor power).
    pub fn step_multiplier(&self) -> u64 {
        match *self {
            CostOperation::PolyKernel {
                degree,
                mode: PolyMode::TensorState,
            } => degree as u64,
            _ => 1,
        }
    }

    pub fn name(&self) -> String {
        match self {
            CostOperation::EstimateZ => "estimate_z".into(),
            CostOperation::DistanceSq => "estimate_distance_sq".into(),
            CostOperation::Dot => "estimate_dot".into(),
            CostOperation::GaussianKernel => "quantum_gaussian_kernel".into(),
            CostOperation::PolyKernel { degree, mode } => {
                let m = match mode {
                    PolyMode::TensorState => "tensor_state",
                    PolyMode::Power => "power",
                };
                format!("quantum_poly_kernel[d={degree},{m}]")
            }
        }
    }
}

/// One recorded estimate in an experiment log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    pub operation: CostOperation,
    pub n: usize,
    pub shots: u64,
    pub qram_queries: u64,
    pub total_steps: u64,
}

impl CostRecord {
    pub fn from_estimate(operation: CostOperation, n: usize, est: &EstimateResult) -> Self {
        Self {
            operation,
            n,
            shots: est.shots_used,
            qram_queries: est.qram_queries,
            total_steps: est.total_steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRow {
    pub operation: String,
    pub n: usize,
    pub shots: u64,
    pub queries_per_shot: u64,
    pub steps_per_query: u64,
    pub qram_queries: u64,
    pub total_steps: u64,
    /// `shots × queries_per_shot × steps_per_query`
    pub model_steps: u64,
    pub matches: bool,
}

/// Compares each recorded cost against `shots × q_ps × ⌈log₂N⌉ (× d)`.
pub fn cost_report(log: &[CostRecord]) -> Vec<CostRow> {
    log.iter()
        .map(|r| {
            let qps = r.operation.queries_per_shot();
            let spq = ceil_log2(r.n) as u64 * r.operation.step_multiplier();
            let model_steps = r.shots * qps * spq;
            CostRow {
                operation: r.operation.name(),
                n: r.n,
                shots: r.shots,
                queries_per_shot: qps,
                steps_per_query: spq,
                qram_queries: r.qram_queries,
                total_steps: r.total_steps,
                model_steps,
                matches: model_steps == r.total_steps && r.qram_queries == r.shots * qps,
            }
        })
        .collect()
}

/// Runs every estimator operation on `(i, j)` plus a full Gram matrix and
/// logs the costs.
pub fn standard_cost_log(
    store: &QramStore,
    pair: (usize, usize),
    degree: u32,
    sigma: f64,
    cfg: &EstimatorConfig,
) -> Result<Vec<CostRecord>> {
    let (i, j) = pair;
    let n = store.dim();
    let mut log = vec![
        CostRecord::from_estimate(CostOperation::EstimateZ, n, &estimate_z(store, i, j, cfg)?),
    ];
    let p = estimate_pair(store, i, j, cfg)?;
    log.push(CostRecord::from_estimate(CostOperation::DistanceSq, n, &p.distance_sq));
    log.push(CostRecord::from_estimate(CostOperation::Dot, n, &p.dot));
    for mode in [PolyMode::Power, PolyMode::TensorState] {
        let est = quantum_poly_kernel(store, i, j, degree, cfg, mode)?;
        log.push(CostRecord::from_estimate(CostOperation::PolyKernel { degree, mode }, n, &est));
    }
    let spec = KernelSpec::gaussian(sigma);
    log.push(CostRecord::from_estimate(
        CostOperation::GaussianKernel,
        n,
        &quantum_gaussian_kernel(store, i, j, &spec, cfg)?,
    ));
    let (_, report) = kernel_matrix(store, &spec, cfg, false)?;
    for e in &report.entries {
        log.push(CostRecord {
            operation: CostOperation::GaussianKernel,
            n,
            shots: e.shots,
            qram_queries: e.qram_queries,
            total_steps: e.total_steps,
        });
    }
    Ok(log)
}
