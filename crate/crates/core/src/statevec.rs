//! Dense complex statevectors over named registers.
//!
//! A state is a flat amplitude vector indexed big-endian over its registers:
//! the first register is the most significant digit. Every operation here is a
//! pure function of its inputs, randomness is supplied by the caller.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Amplitude = Complex64;

/// Tolerance on `Σ|a_k|² = 1` for any stored state.
pub const NORM_TOL: f64 = 1e-12;
/// Post-selected branches below this probability are rejected.
pub const ZERO_BRANCH_TOL: f64 = 1e-15;
/// Default cap on the number of amplitudes a tensor product may produce.
pub const DEFAULT_DIM_CAP: usize = 1 << 24;

/// Smallest power of two `>= n` (with `n = 0` mapped to 1).
pub fn padded_dim(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// `⌈log₂ n⌉`, zero for `n <= 1`.
pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Register {
    pub name: String,
    pub dim: usize,
}

/// Ordered list of named registers. The total dimension is the product of the
/// register dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    registers: Vec<Register>,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(registers: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let registers: Vec<Register> = registers
            .into_iter()
            .map(|(name, dim)| Register {
                name: name.into(),
                dim,
            })
            .collect();
        if registers.is_empty() {
            return Err(Error::InvalidLayout("layout has no registers".into()));
        }
        let mut total: usize = 1;
        for (k, r) in registers.iter().enumerate() {
            if r.dim == 0 {
                return Err(Error::InvalidLayout(format!("register `{}` has dimension 0", r.name)));
            }
            if registers[..k].iter().any(|o| o.name == r.name) {
                return Err(Error::InvalidLayout(format!("duplicate register `{}`", r.name)));
            }
            total = total.checked_mul(r.dim).ok_or(Error::DimensionOverflow {
                requested: usize::MAX,
                cap: DEFAULT_DIM_CAP,
            })?;
        }
        Ok(Self { registers })
    }

    pub fn single(name: impl Into<String>, dim: usize) -> Result<Self> {
        Self::new([(name.into(), dim)])
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn total_dim(&self) -> usize {
        self.registers.iter().map(|r| r.dim).product()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.name == name)
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn dim_of(&self, name: &str) -> Result<usize> {
        Ok(self.registers[self.index_of(name)?].dim)
    }

    /// Product of the dimensions of all registers after `idx`.
    fn stride(&self, idx: usize) -> usize {
        self.registers[idx + 1..].iter().map(|r| r.dim).product()
    }

    /// Two layouts are compatible when their dimension sequences agree;
    /// register names are labels only.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.registers.len() == other.registers.len()
            && self
                .registers
                .iter()
                .zip(&other.registers)
                .all(|(a, b)| a.dim == b.dim)
    }

    pub fn concat(&self, other: &Self) -> Result<Self> {
        Self::new(
            self.registers
                .iter()
                .chain(&other.registers)
                .map(|r| (r.name.clone(), r.dim)),
        )
    }

    pub fn with_suffix(&self, suffix: &str) -> Self {
        Self {
            registers: self
                .registers
                .iter()
                .map(|r| Register {
                    name: format!("{}{suffix}", r.name),
                    dim: r.dim,
                })
                .collect(),
        }
    }

    fn without(&self, idx: usize) -> Result<Self> {
        let rest: Vec<(String, usize)> = self
            .registers
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != idx)
            .map(|(_, r)| (r.name.clone(), r.dim))
            .collect();
        Self::new(rest)
    }
}

impl fmt::Display for RegisterLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .registers
            .iter()
            .map(|r| format!("{}:{}", r.name, r.dim))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

/// Outcome of a projective measurement on one register.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub outcome: usize,
    pub state: QuantumState,
    /// Born probability of `outcome` in the pre-measurement state.
    pub prob: f64,
}

/// Unit-norm pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantumState {
    layout: RegisterLayout,
    amps: Vec<Amplitude>,
}

impl QuantumState {
    /// Builds a state from explicit amplitudes, which must already be unit norm.
    pub fn from_amplitudes(layout: RegisterLayout, amps: Vec<Amplitude>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                found: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { layout, amps })
    }

    /// Builds a state from arbitrary nonzero amplitudes, rescaling to unit norm.
    pub fn normalized(layout: RegisterLayout, mut amps: Vec<Amplitude>) -> Result<Self> {
        if amps.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: layout.total_dim(),
                found: amps.len(),
            });
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite amplitude".into()));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroVector { row: 0 });
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { layout, amps })
    }

    pub fn basis(layout: RegisterLayout, index: usize) -> Result<Self> {
        let dim = layout.total_dim();
        if index >= dim {
            return Err(Error::OutcomeOutOfRange {
                register: layout.to_string(),
                outcome: index,
                dim,
            });
        }
        let mut amps = vec![Amplitude::new(0.0, 0.0); dim];
        amps[index] = Amplitude::new(1.0, 0.0);
        Ok(Self { layout, amps })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn relabeled(mut self, layout: RegisterLayout) -> Result<Self> {
        if !layout.same_shape(&self.layout) {
            return Err(Error::LayoutMismatch(format!("{} vs {}", self.layout, layout)));
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn with_suffix(mut self, suffix: &str) -> Self {
        self.layout = self.layout.with_suffix(suffix);
        self
    }

    /// Kronecker product with the default amplitude cap.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.tensor_with_cap(other, DEFAULT_DIM_CAP)
    }

    pub fn tensor_with_cap(&self, other: &Self, cap: usize) -> Result<Self> {
        let requested = self
            .dim()
            .checked_mul(other.dim())
            .ok_or(Error::DimensionOverflow {
                requested: usize::MAX,
                cap,
            })?;
        if requested > cap {
            return Err(Error::DimensionOverflow { requested, cap });
        }
        let layout = self.layout.concat(&other.layout)?;
        let mut amps = Vec::with_capacity(requested);
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(Self { layout, amps })
    }

    /// `|s⟩^{⊗d}`; copy `k` has its registers renamed with suffix `#k`.
    pub fn tensor_power(&self, d: usize) -> Result<Self> {
        self.tensor_power_with_cap(d, DEFAULT_DIM_CAP)
    }

    pub fn tensor_power_with_cap(&self, d: usize, cap: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("tensor power degree must be >= 1".into()));
        }
        let mut out = self.clone().with_suffix("#0");
        for k in 1..d {
            out = out.tensor_with_cap(&self.clone().with_suffix(&format!("#{k}")), cap)?;
        }
        Ok(out)
    }

    /// `⟨self|other⟩ = Σ conj(self_k)·other_k`.
    pub fn inner_product(&self, other: &Self) -> Result<Amplitude> {
        if !self.layout.same_shape(&other.layout) {
            return Err(Error::LayoutMismatch(format!("{} vs {}", self.layout, other.layout)));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner_product(other)?.norm_sqr())
    }

    fn digit(&self, k: usize, stride: usize, dim: usize) -> usize {
        (k / stride) % dim
    }

    /// Marginal Born distribution of one register.
    pub fn register_probabilities(&self, reg: &str) -> Result<Vec<f64>> {
        let idx = self.layout.index_of(reg)?;
        let dim = self.layout.registers[idx].dim;
        let stride = self.layout.stride(idx);
        let mut probs = vec![0.0; dim];
        for (k, a) in self.amps.iter().enumerate() {
            probs[self.digit(k, stride, dim)] += a.norm_sqr();
        }
        Ok(probs)
    }

    fn check_outcome(&self, reg: &str, outcome: usize) -> Result<usize> {
        let idx = self.layout.index_of(reg)?;
        let dim = self.layout.registers[idx].dim;
        if outcome >= dim {
            return Err(Error::OutcomeOutOfRange {
                register: reg.to_string(),
                outcome,
                dim,
            });
        }
        Ok(idx)
    }

    /// Projects `reg` onto `outcome` and renormalizes, keeping the layout.
    pub fn postselect(&self, reg: &str, outcome: usize) -> Result<(Self, f64)> {
        let idx = self.check_outcome(reg, outcome)?;
        let dim = self.layout.registers[idx].dim;
        let stride = self.layout.stride(idx);
        let prob: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(k, _)| self.digit(*k, stride, dim) == outcome)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if prob < ZERO_BRANCH_TOL {
            return Err(Error::ZeroBranch { prob });
        }
        let scale = prob.sqrt();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, a)| {
                if self.digit(k, stride, dim) == outcome {
                    a / scale
                } else {
                    Amplitude::new(0.0, 0.0)
                }
            })
            .collect();
        Ok((
            Self {
                layout: self.layout.clone(),
                amps,
            },
            prob,
        ))
    }

    /// Projects `reg` onto `outcome`, renormalizes, and removes the register.
    pub fn postselect_discard(&self, reg: &str, outcome: usize) -> Result<(Self, f64)> {
        let idx = self.check_outcome(reg, outcome)?;
        if self.layout.registers.len() == 1 {
            return Err(Error::InvalidLayout(
                "cannot discard the only register of a state".into(),
            ));
        }
        let dim = self.layout.registers[idx].dim;
        let stride = self.layout.stride(idx);
        let layout = self.layout.without(idx)?;
        let mut amps = vec![Amplitude::new(0.0, 0.0); layout.total_dim()];
        let mut prob = 0.0;
        for (k, a) in self.amps.iter().enumerate() {
            if self.digit(k, stride, dim) == outcome {
                let high = k / (stride * dim);
                let low = k % stride;
                amps[high * stride + low] = *a;
                prob += a.norm_sqr();
            }
        }
        if prob < ZERO_BRANCH_TOL {
            return Err(Error::ZeroBranch { prob });
        }
        let scale = prob.sqrt();
        amps.iter_mut().for_each(|a| *a /= scale);
        Ok((Self { layout, amps }, prob))
    }

    /// Samples a Born outcome for `reg` and returns the collapsed state.
    pub fn measure_register<R: Rng + ?Sized>(&self, reg: &str, rng: &mut R) -> Result<Measurement> {
        let probs = self.register_probabilities(reg)?;
        let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
        let mut acc = 0.0;
        let mut outcome = None;
        for (k, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            outcome = Some(k);
            if u < acc {
                break;
            }
        }
        let outcome = outcome.ok_or(Error::ZeroBranch { prob: 0.0 })?;
        let (state, prob) = self.postselect(reg, outcome)?;
        Ok(Measurement {
            outcome,
            state,
            prob,
        })
    }

    /// Applies a `dim × dim` row-major matrix to one register. The caller is
    /// responsible for passing a unitary.
    pub fn apply_on_register(&self, reg: &str, matrix: &[Amplitude]) -> Result<Self> {
        let idx = self.layout.index_of(reg)?;
        let dim = self.layout.registers[idx].dim;
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: matrix.len(),
            });
        }
        let stride = self.layout.stride(idx);
        let block = stride * dim;
        let mut amps = vec![Amplitude::new(0.0, 0.0); self.dim()];
        for base in (0..self.dim()).step_by(block) {
            for low in 0..stride {
                for row in 0..dim {
                    let mut acc = Amplitude::new(0.0, 0.0);
                    for col in 0..dim {
                        acc += matrix[row * dim + col] * self.amps[base + col * stride + low];
                    }
                    amps[base + row * stride + low] = acc;
                }
            }
        }
        Ok(Self {
            layout: self.layout.clone(),
            amps,
        })
    }

    pub fn hadamard(&self, reg: &str) -> Result<Self> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = [
            Amplitude::new(h, 0.0),
            Amplitude::new(h, 0.0),
            Amplitude::new(h, 0.0),
            Amplitude::new(-h, 0.0),
        ];
        self.apply_on_register(reg, &m)
    }

    /// Swaps the contents of registers `a` and `b` on the branch where the
    /// two-level `control` register is `|1⟩`.
    pub fn controlled_swap(&self, control: &str, a: &str, b: &str) -> Result<Self> {
        let ci = self.layout.index_of(control)?;
        let ai = self.layout.index_of(a)?;
        let bi = self.layout.index_of(b)?;
        let regs = &self.layout.registers;
        if regs[ci].dim != 2 {
            return Err(Error::LayoutMismatch(format!(
                "control register `{control}` must have dimension 2"
            )));
        }
        if regs[ai].dim != regs[bi].dim || ai == bi || ci == ai || ci == bi {
            return Err(Error::LayoutMismatch(format!(
                "cannot swap `{a}` ({}) with `{b}` ({})",
                regs[ai].dim, regs[bi].dim
            )));
        }
        let dim = regs[ai].dim;
        let (cs, as_, bs) = (
            self.layout.stride(ci),
            self.layout.stride(ai),
            self.layout.stride(bi),
        );
        let mut amps = self.amps.clone();
        for (k, slot) in amps.iter_mut().enumerate() {
            if self.digit(k, cs, 2) == 1 {
                let da = self.digit(k, as_, dim);
                let db = self.digit(k, bs, dim);
                let src = k - da * as_ - db * bs + db * as_ + da * bs;
                *slot = self.amps[src];
            }
        }
        Ok(Self {
            layout: self.layout.clone(),
            amps,
        })
    }
}

/// Encodes `x` as `|x̂⟩` on a single register named `data`, zero-padded to the
/// next power of two.
pub fn amplitude_encode(x: &[f64]) -> Result<QuantumState> {
    amplitude_encode_named("data", x)
}

pub fn amplitude_encode_named(name: &str, x: &[f64]) -> Result<QuantumState> {
    if x.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite vector entry".into()));
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector { row: 0 });
    }
    let dim = padded_dim(x.len());
    let mut amps = vec![Amplitude::new(0.0, 0.0); dim];
    for (slot, v) in amps.iter_mut().zip(x) {
        *slot = Amplitude::new(v / norm, 0.0);
    }
    Ok(QuantumState {
        layout: RegisterLayout::single(name, dim)?,
        amps,
    })
}
