//! Full-fidelity statevector simulation of a QRAM-fed, swap-test based
//! Gaussian kernel.
//!
//! Module map:
//!
//! - [`statevec`]: complex statevectors over named registers.
//! - [`qram`]: the simulated memory and its query-cost accounting.
//! - [`estimator`]: norm estimation, swap test, distances and dot products.
//! - [`kernels`]: classical baselines, polynomial and Gaussian kernels, Gram
//!   matrices with PSD repair, truncation planning.
//! - [`svm`]: least-squares SVM on top of either kernel source.
//! - [`bench`]: series-growth data, error-scaling fits, cost tables.

pub mod bench;
pub mod datasets;
pub mod error;
pub mod estimator;
pub mod io;
pub mod kernels;
pub mod qram;
pub mod statevec;
pub mod svm;

pub use error::{Error, Result};
pub use estimator::{Backend, EstimateResult, EstimatorConfig};
pub use kernels::{GaussianMode, KernelSpec, PolyMode, TruncationPlan};
pub use qram::{QramStore, QueryCounter};
pub use statevec::{QuantumState, RegisterLayout};
pub use svm::{KernelSource, LabeledDataset, LssvmModel};
