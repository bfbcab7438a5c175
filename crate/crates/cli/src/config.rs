//! Run configuration: command-line flags over an optional JSON file over
//! built-in defaults.

use std::path::Path;

use clap::{Args, ValueEnum};
use qgk_core::estimator::{Backend, EstimatorConfig, DEFAULT_EPSILON, DEFAULT_THETA};
use qgk_core::kernels::{GaussianMode, KernelSpec, DEFAULT_PRECISION_Q};
use qgk_core::svm::KernelSource;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SEED_ENV: &str = "QGK_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum BackendChoice {
    Exact,
    Sampling,
    AeModel,
    /// Closed-form kernels with no estimation (gram and svm only).
    Classical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum KernelChoice {
    Gaussian,
    Polynomial,
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModeChoice {
    Series,
    ClosedForm,
}

/// Keys accepted in a `--config` file; all optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub backend: Option<BackendChoice>,
    pub epsilon: Option<f64>,
    pub shots: Option<u64>,
    pub theta: Option<f64>,
    pub seed: Option<u64>,
    pub kernel: Option<KernelChoice>,
    pub sigma: Option<f64>,
    pub degree: Option<u32>,
    pub poly_a: Option<f64>,
    pub poly_b: Option<f64>,
    pub precision_q: Option<u32>,
    pub gaussian_mode: Option<ModeChoice>,
    pub gamma: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
            }
        }
    }
}

#[derive(Args, Clone, Debug, Default)]
pub struct EstimatorArgs {
    /// exact | sampling | ae_model (gram and svm also accept classical)
    #[arg(long, value_enum)]
    pub backend: Option<BackendChoice>,
    /// Target precision; sets the shot count when --shots is absent.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Small-angle factor for the norm-estimation evolution.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Falls back to $QGK_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON file with defaults for any of these options; flags win.
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct KernelArgs {
    #[arg(long, value_enum)]
    pub kernel: Option<KernelChoice>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub degree: Option<u32>,
    /// Polynomial scale A (classical backend only when not 1).
    #[arg(long)]
    pub poly_a: Option<f64>,
    /// Polynomial offset B (classical backend only when not 0).
    #[arg(long)]
    pub poly_b: Option<f64>,
    /// Truncation precision: remainder below 10^-q.
    #[arg(long)]
    pub precision_q: Option<u32>,
    #[arg(long, value_enum)]
    pub gaussian_mode: Option<ModeChoice>,
}

/// Fully resolved settings, echoed into every output.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub backend: BackendChoice,
    pub epsilon: f64,
    pub shots: u64,
    pub theta: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Input(format!("{SEED_ENV}=`{s}` is not an unsigned integer"))),
        _ => Ok(None),
    }
}

impl Resolved {
    pub fn new(est: &EstimatorArgs, file: &FileConfig) -> Result<Self, CliError> {
        let backend = est.backend.or(file.backend).unwrap_or(BackendChoice::Exact);
        let epsilon = est.epsilon.or(file.epsilon).unwrap_or(DEFAULT_EPSILON);
        let theta = est.theta.or(file.theta).unwrap_or(DEFAULT_THETA);
        let seed = match est.seed.or(file.seed) {
            Some(s) => s,
            None => env_seed()?.unwrap_or(0),
        };
        let explicit_shots = est.shots.or(file.shots);
        let shots = match backend_of(backend) {
            Some(b) => {
                let cfg = EstimatorConfig {
                    backend: b,
                    epsilon,
                    shots: explicit_shots,
                    theta,
                    seed,
                };
                cfg.validate()?;
                cfg.resolved_shots()
            }
            None => 0,
        };
        Ok(Self {
            backend,
            epsilon,
            shots,
            theta,
            seed,
            kernel: None,
            gamma: None,
        })
    }

    pub fn with_kernel(mut self, args: &KernelArgs, file: &FileConfig) -> Result<Self, CliError> {
        let family = args.kernel.or(file.kernel).unwrap_or(KernelChoice::Gaussian);
        let spec = match family {
            KernelChoice::Linear => KernelSpec::Linear,
            KernelChoice::Polynomial => KernelSpec::Polynomial {
                a: args.poly_a.or(file.poly_a).unwrap_or(1.0),
                b: args.poly_b.or(file.poly_b).unwrap_or(0.0),
                degree: args.degree.or(file.degree).unwrap_or(2),
            },
            KernelChoice::Gaussian => KernelSpec::Gaussian {
                sigma: args.sigma.or(file.sigma).unwrap_or(1.0),
                precision_q: args.precision_q.or(file.precision_q).unwrap_or(DEFAULT_PRECISION_Q),
                mode: match args.gaussian_mode.or(file.gaussian_mode).unwrap_or(ModeChoice::Series) {
                    ModeChoice::Series => GaussianMode::Series,
                    ModeChoice::ClosedForm => GaussianMode::ClosedForm,
                },
            },
        };
        spec.validate()?;
        self.kernel = Some(spec);
        Ok(self)
    }

    pub fn with_gamma(mut self, flag: Option<f64>, file: &FileConfig) -> Self {
        self.gamma = Some(flag.or(file.gamma).unwrap_or(10.0));
        self
    }

    /// Estimator settings; `None` for the classical backend.
    pub fn estimator(&self) -> Option<EstimatorConfig> {
        backend_of(self.backend).map(|b| EstimatorConfig {
            backend: b,
            epsilon: self.epsilon,
            shots: Some(self.shots),
            theta: self.theta,
            seed: self.seed,
        })
    }

    pub fn require_estimator(&self, command: &str) -> Result<EstimatorConfig, CliError> {
        self.estimator()
            .ok_or_else(|| CliError::Domain(format!("`{command}` needs a quantum backend, not classical")))
    }

    pub fn kernel_source(&self) -> KernelSource {
        match self.estimator() {
            None => KernelSource::Classical,
            Some(estimator) => KernelSource::Quantum { estimator },
        }
    }

    pub fn kernel_spec(&self) -> KernelSpec {
        self.kernel.clone().expect("kernel resolved")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

fn backend_of(choice: BackendChoice) -> Option<Backend> {
    match choice {
        BackendChoice::Exact => Some(Backend::Exact),
        BackendChoice::Sampling => Some(Backend::Sampling),
        BackendChoice::AeModel => Some(Backend::AeModel),
        BackendChoice::Classical => None,
    }
}
