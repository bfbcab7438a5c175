//! Swap-test estimation of squared distances and dot products between stored
//! vectors.
//!
//! For a pair `(i, j)` the protocol
//!
//! 1. prepares `|ξ⟩ = (|0⟩−|1⟩)/√2 ⊗ |0⟩` and evolves it under
//!    `H = (‖x_i‖|0⟩⟨0| + ‖x_j‖|1⟩⟨1|) ⊗ σ_x` for a short time `t`;
//!    the flag-one probability `(sin²(‖x_i‖t) + sin²(‖x_j‖t))/2` yields
//!    `Z = ‖x_i‖² + ‖x_j‖²`, and the surviving branch approximates
//!    `|φ⟩ = (‖x_i‖|0⟩ − ‖x_j‖|1⟩)/√Z`;
//! 2. swap-tests the ancilla of `|ψ⟩ = (|0⟩|x̂_i⟩ + |1⟩|x̂_j⟩)/√2` against
//!    `|φ⟩`, whose control-zero probability is `P₀ = (1 + F)/2` with
//!    `F = |x_i − x_j|² / (2Z)`;
//! 3. combines `|x_i − x_j|² = 2ZF` and `x_i·x_j = (Z − |x_i − x_j|²)/2`.
//!
//! Three backends read out the probabilities: `Exact` (closed form, no
//! noise), `Sampling` (binomial shot noise, error `∝ shots^{-1/2}`) and
//! `AeModel` (a Gaussian model of amplitude estimation, error `∝ shots^{-1}`).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qram::{PairNorms, QramStore, QueryCounter};
use crate::statevec::{QuantumState, RegisterLayout};

pub const DEFAULT_THETA: f64 = 0.05;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const MAX_THETA: f64 = 0.2;

/// QRAM queries per shot when estimating `Z` alone.
pub const Z_QUERIES_PER_SHOT: u64 = 1;
/// QRAM queries per shot for re-preparing `|ψ⟩` before each swap test.
pub const PSI_QUERIES_PER_SHOT: u64 = 2;
/// QRAM queries per shot of a full distance or dot-product estimate.
pub const PAIR_QUERIES_PER_SHOT: u64 = Z_QUERIES_PER_SHOT + PSI_QUERIES_PER_SHOT;

const SEED_STREAM_Z: u64 = 0x5a;
const SEED_STREAM_SWAP: u64 = 0x5b;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Exact,
    Sampling,
    AeModel,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "sampling" => Ok(Backend::Sampling),
            "ae_model" | "ae-model" => Ok(Backend::AeModel),
            other => Err(Error::Parse(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub backend: Backend,
    pub epsilon: f64,
    /// Explicit shot budget; derived from `epsilon` when absent.
    pub shots: Option<u64>,
    /// Small-angle factor, `t = theta / max(‖x_i‖, ‖x_j‖)`.
    pub theta: f64,
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self::new(Backend::Exact)
    }
}

impl EstimatorConfig {
    pub fn new(backend: Backend) -> Self {
        Self {
            backend,
            epsilon: DEFAULT_EPSILON,
            shots: None,
            theta: DEFAULT_THETA,
            seed: 0,
        }
    }

    pub fn with_shots(mut self, shots: u64) -> Self {
        self.shots = Some(shots);
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.theta > 0.0 && self.theta <= MAX_THETA) {
            return Err(Error::InvalidParameter(format!(
                "theta must be in (0, {MAX_THETA}], got {}",
                self.theta
            )));
        }
        if self.shots == Some(0) {
            return Err(Error::InvalidParameter("shots must be >= 1".into()));
        }
        Ok(())
    }

    /// `⌈ε⁻²⌉` for sampling, `⌈ε⁻¹⌉` for the amplitude-estimation model and
    /// the exact backend, unless set explicitly.
    pub fn resolved_shots(&self) -> u64 {
        self.shots.unwrap_or_else(|| {
            let inv = 1.0 / self.epsilon;
            let n = match self.backend {
                Backend::Sampling => inv * inv,
                Backend::Exact | Backend::AeModel => inv,
            };
            // strip float noise such as 1/0.01 = 100.000000000001
            let n = (n * (1.0 - 1e-12)).ceil();
            n.max(1.0) as u64
        })
    }

    /// Same config with the seed replaced by an independent stream for `(i, j)`.
    pub fn for_pair(&self, i: usize, j: usize) -> Self {
        let mut cfg = self.clone();
        cfg.seed = pair_seed(self.seed, i, j);
        cfg
    }

    fn stream(&self, stream: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, stream))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent child seed for a numbered stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

/// Child seed for the pair `(i, j)`; symmetric in its arguments.
pub fn pair_seed(seed: u64, i: usize, j: usize) -> u64 {
    let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
    derive_seed(seed, ((hi as u64) << 32) ^ lo as u64 ^ 0x7061_6972_0000_0000)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult {
    pub value: f64,
    pub stderr: f64,
    pub shots_used: u64,
    pub qram_queries: u64,
    /// `qram_queries × step_cost`
    pub total_steps: u64,
    /// Steps charged per query.
    pub step_cost: u64,
    /// Number of negative estimates clamped to zero.
    pub clamped: u32,
}

impl EstimateResult {
    fn new(value: f64, stderr: f64, shots: u64, counter: QueryCounter) -> Self {
        Self {
            value,
            stderr,
            shots_used: shots,
            qram_queries: counter.queries,
            total_steps: counter.total_steps(),
            step_cost: counter.step_cost,
            clamped: 0,
        }
    }
}

/// All quantities produced by one run of the pair protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub z: EstimateResult,
    /// Swap-test control-zero probability.
    pub p0: EstimateResult,
    pub distance_sq: EstimateResult,
    pub dot: EstimateResult,
}

/// `((|0⟩−|1⟩)/√2) ⊗ |0⟩` on `[norm_ancilla:2, flag:2]`.
pub fn prep_xi() -> QuantumState {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let layout = RegisterLayout::new([("norm_ancilla", 2), ("flag", 2)]).expect("static layout");
    let amps = [h, 0.0, -h, 0.0].map(|v| Complex64::new(v, 0.0)).to_vec();
    QuantumState::from_amplitudes(layout, amps).expect("unit norm")
}

/// Applies `e^{-iHt}` with `H = (a|0⟩⟨0| + b|1⟩⟨1|) ⊗ σ_x` to a state on
/// `[norm_ancilla:2, flag:2]`.
///
/// `H` is block diagonal in the norm ancilla, and on each block
/// `e^{-i n t σ_x} = cos(nt)·I − i sin(nt)·σ_x`.
pub fn evolve_xi(xi: &QuantumState, norm_i: f64, norm_j: f64, t: f64) -> Result<QuantumState> {
    let shape = RegisterLayout::new([("norm_ancilla", 2), ("flag", 2)])?;
    if !xi.layout().same_shape(&shape) {
        return Err(Error::LayoutMismatch(format!("expected {shape}, got {}", xi.layout())));
    }
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("evolution time must be >= 0, got {t}")));
    }
    let a = xi.amps();
    let mut out = vec![Complex64::new(0.0, 0.0); 4];
    for (block, norm) in [norm_i, norm_j].into_iter().enumerate() {
        let (s, c) = (norm * t).sin_cos();
        let mis = Complex64::new(0.0, -s);
        let (f0, f1) = (a[2 * block], a[2 * block + 1]);
        out[2 * block] = f0 * c + f1 * mis;
        out[2 * block + 1] = f0 * mis + f1 * c;
    }
    QuantumState::from_amplitudes(xi.layout().clone(), out)
}

/// Exact `P(flag = 1)` after evolving `|ξ⟩`.
pub fn flag_one_probability(norm_i: f64, norm_j: f64, t: f64) -> f64 {
    let (si, sj) = ((norm_i * t).sin(), (norm_j * t).sin());
    0.5 * (si * si + sj * sj)
}

/// `(‖x_i‖|0⟩ − ‖x_j‖|1⟩)/√Z` on a single register `phi`.
pub fn make_phi(norm_i: f64, norm_j: f64) -> Result<QuantumState> {
    let layout = RegisterLayout::single("phi", 2)?;
    QuantumState::normalized(
        layout,
        vec![Complex64::new(norm_i, 0.0), Complex64::new(-norm_j, 0.0)],
    )
}

/// `t = theta / max(‖x_i‖, ‖x_j‖)`.
pub fn evolution_time(norm_i: f64, norm_j: f64, theta: f64) -> f64 {
    theta / norm_i.max(norm_j)
}

/// Small-angle inversion `Z ≈ 2p/t²`, used where only `p̂` is known.
pub fn small_angle_z(p: f64, t: f64) -> f64 {
    2.0 * p / (t * t)
}

/// Inverts the full `sin²` flag-one relation for `Z`, given the ratio of the
/// two norms (their common scale is what is being recovered).
///
/// Solves `(sin²(s·r_i·t) + sin²(s·r_j·t))/2 = p` for the scale `s` by
/// bisection with `r = norm / max(norms)`, then returns `s²(r_i² + r_j²)`.
pub fn invert_flag_probability(p: f64, norm_i: f64, norm_j: f64, t: f64) -> f64 {
    let m = norm_i.max(norm_j);
    let (ri, rj) = (norm_i / m, norm_j / m);
    let f = |s: f64| flag_one_probability(s * ri, s * rj, t);
    // f is increasing on [0, π/(2t)] since r_i, r_j ≤ 1
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::FRAC_PI_2 / t);
    if p >= f(hi) {
        return hi * hi * (ri * ri + rj * rj);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    s * s * (ri * ri + rj * rj)
}

/// Post-selected flag-one branch of the evolved `|ξ⟩`, as a state on the norm
/// ancilla alone, together with its probability.
pub fn postselected_phi(norm_i: f64, norm_j: f64, t: f64) -> Result<(QuantumState, f64)> {
    let evolved = evolve_xi(&prep_xi(), norm_i, norm_j, t)?;
    evolved.postselect_discard("flag", 1)
}

fn estimate_z_from_norms(norms: PairNorms, cfg: &EstimatorConfig, step_cost: u64) -> Result<EstimateResult> {
    cfg.validate()?;
    let PairNorms { norm_i, norm_j, z } = norms;
    let t = evolution_time(norm_i, norm_j, cfg.theta);
    let evolved = evolve_xi(&prep_xi(), norm_i, norm_j, t)?;
    let p = evolved.register_probabilities("flag")?[1];
    let shots = cfg.resolved_shots();
    let mut counter = QueryCounter::new(step_cost);
    counter.charge(Z_QUERIES_PER_SHOT * shots);
    let mut rng = cfg.stream(SEED_STREAM_Z);
    let mut clamped = 0;
    let (value, stderr) = match cfg.backend {
        Backend::Exact => (invert_flag_probability(p, norm_i, norm_j, t), 0.0),
        Backend::Sampling => {
            let k = Binomial::new(shots, p.clamp(0.0, 1.0))
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(&mut rng);
            let p_hat = k as f64 / shots as f64;
            let se = (p_hat * (1.0 - p_hat) / shots as f64).sqrt();
            (small_angle_z(p_hat, t), small_angle_z(se, t))
        }
        Backend::AeModel => {
            let sd = z / shots as f64;
            let mut v = Normal::new(z, sd)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(&mut rng);
            if v < 0.0 {
                v = 0.0;
                clamped += 1;
            }
            (v, v / shots as f64)
        }
    };
    let mut out = EstimateResult::new(value, stderr, shots, counter);
    out.clamped = clamped;
    Ok(out)
}

/// Estimates `Z = ‖x_i‖² + ‖x_j‖²`; one QRAM query per shot.
pub fn estimate_z(store: &QramStore, i: usize, j: usize, cfg: &EstimatorConfig) -> Result<EstimateResult> {
    let norms = store.norms(i, j)?;
    estimate_z_from_norms(norms, cfg, store.step_cost())
}

/// Swap test between the leading (ancilla) register of `psi` and the
/// single-register state `phi`, simulated on the full joint statevector.
/// `value` is the control-zero probability `P₀`. No QRAM queries are charged
/// here; callers account for the preparation of `psi`.
pub fn swap_test(psi: &QuantumState, phi: &QuantumState, cfg: &EstimatorConfig) -> Result<EstimateResult> {
    cfg.validate()?;
    let p0 = swap_test_probability(psi, phi)?;
    let shots = cfg.resolved_shots();
    let mut rng = cfg.stream(SEED_STREAM_SWAP);
    let (value, stderr) = match cfg.backend {
        Backend::Exact => (p0, 0.0),
        Backend::Sampling => {
            let k = Binomial::new(shots, p0.clamp(0.0, 1.0))
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(&mut rng);
            let p_hat = k as f64 / shots as f64;
            (p_hat, (p_hat * (1.0 - p_hat) / shots as f64).sqrt())
        }
        Backend::AeModel => {
            let sd = (p0 * (1.0 - p0)).max(0.0).sqrt() / shots as f64;
            let v = Normal::new(p0, sd)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(&mut rng);
            let pc = v.clamp(0.0, 1.0);
            (v, (pc * (1.0 - pc)).sqrt() / shots as f64)
        }
    };
    Ok(EstimateResult::new(value, stderr, shots, QueryCounter::new(0)))
}

/// Exact control-zero probability of the swap-test circuit
/// `H_c · CSWAP(c; ancilla, phi) · H_c` on `|0⟩_c ⊗ |ψ⟩ ⊗ |φ⟩`.
pub fn swap_test_probability(psi: &QuantumState, phi: &QuantumState) -> Result<f64> {
    let ancilla = psi
        .layout()
        .registers()
        .first()
        .ok_or_else(|| Error::LayoutMismatch("psi has no registers".into()))?;
    let ancilla_dim = ancilla.dim;
    if phi.layout().registers().len() != 1 || phi.dim() != ancilla_dim || psi.layout().registers().len() < 2 {
        return Err(Error::LayoutMismatch(format!(
            "phi {} must be a single register matching the ancilla of psi {}",
            phi.layout(),
            psi.layout()
        )));
    }
    let psi = psi.clone().with_suffix("@psi");
    let target = phi
        .clone()
        .relabeled(RegisterLayout::single("swap_target", ancilla_dim)?)?;
    let control = QuantumState::basis(RegisterLayout::single("control", 2)?, 0)?;
    let ancilla_name = psi.layout().registers()[0].name.clone();
    let joint = control.tensor(&psi)?.tensor(&target)?;
    let out = joint
        .hadamard("control")?
        .controlled_swap("control", &ancilla_name, "swap_target")?
        .hadamard("control")?;
    Ok(out.register_probabilities("control")?[0])
}

/// Runs the full pair protocol on prepared data states `a`, `b` whose
/// underlying vectors have norms `norms`; each query costs `step_cost` steps.
pub fn estimate_pair_from_states(
    a: &QuantumState,
    b: &QuantumState,
    norms: PairNorms,
    step_cost: u64,
    cfg: &EstimatorConfig,
) -> Result<PairEstimate> {
    cfg.validate()?;
    let psi = crate::qram::branch_pair(a, b)?;
    let z = estimate_z_from_norms(norms, cfg, step_cost)?;
    let phi = make_phi(norms.norm_i, norms.norm_j)?;
    let p0 = swap_test(&psi, &phi, cfg)?;
    let shots = cfg.resolved_shots();

    let mut counter = QueryCounter::new(step_cost);
    counter.charge(PAIR_QUERIES_PER_SHOT * shots);

    let f = 2.0 * p0.value - 1.0;
    let var_f = 4.0 * p0.stderr * p0.stderr;
    let var_z = z.stderr * z.stderr;
    let mut clamped = z.clamped;

    let mut d2 = 2.0 * z.value * f;
    if d2 < 0.0 {
        d2 = 0.0;
        clamped += 1;
    }
    let d2_se = ((2.0 * f).powi(2) * var_z + (2.0 * z.value).powi(2) * var_f).sqrt();
    let mut distance_sq = EstimateResult::new(d2, d2_se, shots, counter);
    distance_sq.clamped = clamped;

    let dot_val = 0.5 * (z.value - d2);
    let dot_se = ((0.5 - f).powi(2) * var_z + z.value.powi(2) * var_f).sqrt();
    let mut dot = EstimateResult::new(dot_val, dot_se, shots, counter);
    dot.clamped = clamped;

    Ok(PairEstimate {
        z,
        p0,
        distance_sq,
        dot,
    })
}

/// Pair protocol on stored cells `i`, `j`.
pub fn estimate_pair(store: &QramStore, i: usize, j: usize, cfg: &EstimatorConfig) -> Result<PairEstimate> {
    let norms = store.norms(i, j)?;
    // preparation for the simulation itself; per-shot charges are applied below
    let mut scratch = QueryCounter::for_store(store);
    let a = store.fetch_state(i, &mut scratch)?;
    let b = store.fetch_state(j, &mut scratch)?;
    estimate_pair_from_states(&a, &b, norms, store.step_cost(), cfg)
}

/// `|x_i − x_j|²`; three QRAM queries per shot.
pub fn estimate_distance_sq(
    store: &QramStore,
    i: usize,
    j: usize,
    cfg: &EstimatorConfig,
) -> Result<EstimateResult> {
    Ok(estimate_pair(store, i, j, cfg)?.distance_sq)
}

/// `x_i · x_j`; three QRAM queries per shot.
pub fn estimate_dot(store: &QramStore, i: usize, j: usize, cfg: &EstimatorConfig) -> Result<EstimateResult> {
    Ok(estimate_pair(store, i, j, cfg)?.dot)
}
