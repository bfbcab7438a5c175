//! Simulated quantum random access memory.
//!
//! The store holds classical vectors together with their Euclidean norms and
//! answers state-preparation queries. Each query is one state reconstruction,
//! charged at `⌈log₂N⌉` steps.

use std::ops::AddAssign;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{amplitude_encode, ceil_log2, padded_dim, QuantumState, RegisterLayout};

/// Tolerance for unit-norm address amplitudes.
pub const ADDRESS_NORM_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QramStore {
    vectors: Vec<Vec<f64>>,
    norms: Vec<f64>,
    dim: usize,
}

/// Query accounting: `total_steps = queries × step_cost`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounter {
    pub queries: u64,
    pub step_cost: u64,
}

impl QueryCounter {
    pub fn new(step_cost: u64) -> Self {
        Self {
            queries: 0,
            step_cost,
        }
    }

    pub fn for_store(store: &QramStore) -> Self {
        Self::new(store.step_cost())
    }

    pub fn charge(&mut self, queries: u64) {
        self.queries += queries;
    }

    pub fn total_steps(&self) -> u64 {
        self.queries * self.step_cost
    }
}

impl AddAssign for QueryCounter {
    /// Merges a counter from another task; both must use the same step cost.
    fn add_assign(&mut self, rhs: Self) {
        debug_assert!(self.queries == 0 || rhs.queries == 0 || self.step_cost == rhs.step_cost);
        if self.queries == 0 {
            self.step_cost = rhs.step_cost;
        }
        self.queries += rhs.queries;
    }
}

/// Exact norm data for a pair of cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairNorms {
    pub norm_i: f64,
    pub norm_j: f64,
    /// `‖x_i‖² + ‖x_j‖²`
    pub z: f64,
}

impl QramStore {
    pub fn load_dataset(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyDataset)?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut norms = Vec::with_capacity(rows.len());
        for (row, v) in rows.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite entry in row {row}")));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::ZeroVector { row });
            }
            norms.push(norm);
        }
        Ok(Self {
            vectors: rows.to_vec(),
            norms,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Common vector dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn padded_dim(&self) -> usize {
        padded_dim(self.dim)
    }

    /// Steps per query, `⌈log₂N⌉`.
    pub fn step_cost(&self) -> u64 {
        ceil_log2(self.dim) as u64
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    fn check(&self, address: usize) -> Result<()> {
        if address >= self.len() {
            return Err(Error::AddressOutOfRange {
                address,
                cells: self.len(),
            });
        }
        Ok(())
    }

    pub fn vector(&self, address: usize) -> Result<&[f64]> {
        self.check(address)?;
        Ok(&self.vectors[address])
    }

    pub fn norm(&self, address: usize) -> Result<f64> {
        self.check(address)?;
        Ok(self.norms[address])
    }

    /// Returns a store with `extra` appended, e.g. for transient prediction queries.
    pub fn with_appended(&self, extra: &[Vec<f64>]) -> Result<Self> {
        let mut rows = self.vectors.clone();
        rows.extend_from_slice(extra);
        Self::load_dataset(&rows)
    }

    pub fn fetch_state(&self, address: usize, counter: &mut QueryCounter) -> Result<QuantumState> {
        self.check(address)?;
        let state = amplitude_encode(&self.vectors[address])?;
        counter.charge(1);
        Ok(state)
    }

    /// `Σ_j ψ_j |j⟩_address |x̂_j⟩_data`, one counted query.
    pub fn superposed_query(
        &self,
        address_amps: &[Complex64],
        counter: &mut QueryCounter,
    ) -> Result<QuantumState> {
        if address_amps.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: address_amps.len(),
            });
        }
        let norm_sq: f64 = address_amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > ADDRESS_NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        let addr_dim = padded_dim(self.len());
        let data_dim = self.padded_dim();
        let layout = RegisterLayout::new([("address", addr_dim), ("data", data_dim)])?;
        let mut amps = vec![Complex64::new(0.0, 0.0); layout.total_dim()];
        for (j, psi) in address_amps.iter().enumerate() {
            let norm = self.norms[j];
            for (k, x) in self.vectors[j].iter().enumerate() {
                amps[j * data_dim + k] = psi * (x / norm);
            }
        }
        counter.charge(1);
        // renormalize away the residual of the 1e-9 address tolerance
        QuantumState::normalized(layout, amps)
    }

    /// `(|0⟩|x̂_i⟩ + |1⟩|x̂_j⟩)/√2` on `[ancilla:2, data:N]`, two counted queries.
    pub fn prep_psi(&self, i: usize, j: usize, counter: &mut QueryCounter) -> Result<QuantumState> {
        let a = self.fetch_state(i, counter)?;
        let b = self.fetch_state(j, counter)?;
        branch_pair(&a, &b)
    }

    pub fn norms(&self, i: usize, j: usize) -> Result<PairNorms> {
        let norm_i = self.norm(i)?;
        let norm_j = self.norm(j)?;
        Ok(PairNorms {
            norm_i,
            norm_j,
            z: norm_i * norm_i + norm_j * norm_j,
        })
    }
}

/// `(|0⟩|a⟩ + |1⟩|b⟩)/√2` with a two-level `ancilla` register in front of the
/// (single, shared-shape) data register of `a` and `b`.
pub fn branch_pair(a: &QuantumState, b: &QuantumState) -> Result<QuantumState> {
    if !a.layout().same_shape(b.layout()) {
        return Err(Error::LayoutMismatch(format!("{} vs {}", a.layout(), b.layout())));
    }
    let data_dim = a.dim();
    let layout = RegisterLayout::new([("ancilla", 2), ("data", data_dim)])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = a
        .amps()
        .iter()
        .chain(b.amps())
        .map(|x| x * h)
        .collect();
    QuantumState::normalized(layout, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn load_precomputes_norms() {
        let s = QramStore::load_dataset(&[vec![3.0, 4.0]]).unwrap();
        assert_eq!(s.norm(0).unwrap(), (9.0f64 + 16.0).sqrt());
        let s = QramStore::load_dataset(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!((s.norm(0).unwrap(), s.norm(1).unwrap()), (1.0, 1.0));
        assert!(matches!(
            QramStore::load_dataset(&[vec![1.0, 1.0], vec![0.0, 0.0]]),
            Err(Error::ZeroVector { row: 1 })
        ));
        assert!(matches!(QramStore::load_dataset(&[]), Err(Error::EmptyDataset)));
        assert!(matches!(
            QramStore::load_dataset(&[vec![1.0, 1.0], vec![1.0]]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fetch_and_counter() {
        let s = QramStore::load_dataset(&[vec![3.0, 4.0]]).unwrap();
        let mut ctr = QueryCounter::for_store(&s);
        let st = s.fetch_state(0, &mut ctr).unwrap();
        assert_eq!(st.amps(), &[c(0.6), c(0.8)]);
        assert_eq!(ctr.queries, 1);

        let big = QramStore::load_dataset(&[vec![1.0; 16], vec![2.0; 16]]).unwrap();
        let mut ctr = QueryCounter::for_store(&big);
        for k in 0..7 {
            big.fetch_state(k % 2, &mut ctr).unwrap();
        }
        assert_eq!(ctr.total_steps(), 4 * 7);
        assert!(matches!(
            big.fetch_state(5, &mut ctr),
            Err(Error::AddressOutOfRange { address: 5, cells: 2 })
        ));
        assert_eq!(ctr.queries, 7);
    }

    #[test]
    fn superposed_query_expansion() {
        let s = QramStore::load_dataset(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let mut ctr = QueryCounter::for_store(&s);
        let st = s
            .superposed_query(&[c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)], &mut ctr)
            .unwrap();
        let expect = [c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)];
        for (a, b) in st.amps().iter().zip(expect) {
            assert_abs_diff_eq!(a.re, b.re, epsilon = 1e-15);
        }
        assert_eq!(ctr.queries, 1);
        assert!(matches!(
            s.superposed_query(&[c(1.0), c(1.0)], &mut ctr),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn one_hot_query_matches_fetch() {
        let s = QramStore::load_dataset(&[vec![1.0, 2.0, 3.0], vec![-1.0, 0.5, 2.0], vec![0.0, 0.0, 1.0]])
            .unwrap();
        let mut ctr = QueryCounter::for_store(&s);
        for j in 0..3 {
            let mut amps = vec![c(0.0); 3];
            amps[j] = c(1.0);
            let st = s.superposed_query(&amps, &mut ctr).unwrap();
            let (data, p) = st.postselect_discard("address", j).unwrap();
            assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
            let fetched = s.fetch_state(j, &mut ctr).unwrap();
            assert_abs_diff_eq!(data.fidelity(&fetched).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn prep_psi_examples() {
        let s = QramStore::load_dataset(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![3.0, 4.0]]).unwrap();
        let mut ctr = QueryCounter::for_store(&s);
        let psi = s.prep_psi(0, 1, &mut ctr).unwrap();
        let expect = [FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2];
        for (a, b) in psi.amps().iter().zip(expect) {
            assert_abs_diff_eq!(a.re, b, epsilon = 1e-15);
        }
        assert_eq!(ctr.queries, 2);

        let same = s.prep_psi(2, 2, &mut ctr).unwrap();
        let plus = QuantumState::normalized(RegisterLayout::single("ancilla", 2).unwrap(), vec![c(1.0), c(1.0)])
            .unwrap();
        let product = plus.tensor(&amplitude_encode(&[3.0, 4.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(same.fidelity(&product).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(ctr.queries, 4);
        assert!(s.prep_psi(0, 9, &mut ctr).is_err());
    }

    #[test]
    fn pair_norms() {
        let s = QramStore::load_dataset(&[vec![3.0, 4.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let n = s.norms(0, 1).unwrap();
        assert_abs_diff_eq!(n.z, 25.0 + 1.0, epsilon = 1e-12);
        assert_eq!(s.norms(1, 2).unwrap().z, 2.0);
        assert_abs_diff_eq!(s.norms(0, 0).unwrap().z, 2.0 * 25.0, epsilon = 1e-12);
        assert!(matches!(s.norms(0, 3), Err(Error::AddressOutOfRange { .. })));
    }

    #[test]
    fn counters_merge_by_summation() {
        let mut a = QueryCounter::new(3);
        a.charge(2);
        let mut b = QueryCounter::new(3);
        b.charge(5);
        a += b;
        assert_eq!(a.queries, 7);
        assert_eq!(a.total_steps(), 21);
    }
}
