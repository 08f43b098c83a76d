//! The GHZ-encoding protocol: five block types composed into a seven-stage
//! pipeline, in both the symmetry-reduced single-branch picture and the
//! explicit two-branch (control ⊗ Dicke) picture, plus all fidelity metrics.
//!
//! Blocks, acting on the ensemble:
//!
//! * `RotX(phi)`  = `exp(+i phi X / 2)`
//! * `RotZ(phi)`  = `exp(+i phi Z / 2)`
//! * `Controlled(phi)` = `exp(+i phi Z_0 ⊗ X / 2)`: branch `|0>` of the
//!   control sees `RotX(+phi)`, branch `|1>` sees `RotX(-phi)`
//! * `Squeeze(tau)` = `exp(-i tau (ln N / N) H_TAT)`
//! * `Oat(phi)` = `exp(-i phi Z^2 / (4N))`
//!
//! The full encoder is
//! `S_tau3 · RZ(pi/4) · O(pi/4) · RX(-pi/2) · S_{-tau2} · C_phi · S_tau1`
//! with `phi = theta ln^2 N / N`, applied to `|D_0>` (all ensemble qubits
//! zero) tensored with the control.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::analysis;
use crate::dicke::{CollectiveOperators, DickeSpace, DickeVector};
use crate::error::{Error, Result};
use crate::propagator::{Generator, SpectralCache, SpectralStore};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Exact unit phase `exp(i pi m / 4)`, m taken mod 8. Branch-phase
/// bookkeeping uses multiples of pi/4 only; the table keeps them exact.
fn eighth_phase(m: i64) -> Complex64 {
    const TABLE: [(f64, f64); 8] = [
        (1.0, 0.0),
        (FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        (0.0, 1.0),
        (-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        (-1.0, 0.0),
        (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
        (0.0, -1.0),
        (FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    ];
    let (re, im) = TABLE[m.rem_euclid(8) as usize];
    Complex64::new(re, im)
}

/// Unit phase `exp(i pi m / 8)` with the angle reduced before evaluation.
fn sixteenth_phase(m: i64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_8 * m.rem_euclid(16) as f64)
}

/// Protocol parameters `(N, theta, tau1, tau2, tau3)`. The controlled
/// rotation angle is derived: `phi = theta (ln N)^2 / N`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProtocolParams {
    n_qubits: u32,
    theta: f64,
    tau1: f64,
    tau2: f64,
    tau3: f64,
}

impl ProtocolParams {
    pub fn new(n_qubits: u32, theta: f64, tau1: f64, tau2: f64, tau3: f64) -> Result<Self> {
        DickeSpace::new(n_qubits)?;
        for (name, v) in [
            ("theta", theta),
            ("tau1", tau1),
            ("tau2", tau2),
            ("tau3", tau3),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Argument(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self {
            n_qubits,
            theta,
            tau1,
            tau2,
            tau3,
        })
    }

    pub fn space(&self) -> DickeSpace {
        DickeSpace::new(self.n_qubits).expect("validated at construction")
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn tau3(&self) -> f64 {
        self.tau3
    }

    /// Controlled-rotation angle `theta (ln N)^2 / N` (natural log).
    pub fn phi(&self) -> f64 {
        let n = self.n_qubits as f64;
        self.theta * n.ln().powi(2) / n
    }

    pub fn with_tau3(mut self, tau3: f64) -> Self {
        self.tau3 = tau3;
        self
    }
}

/// State of the control qubit selecting the sign of the controlled rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlBranch {
    /// Control in `|0>` (Z_0 = +1).
    Zero,
    /// Control in `|1>` (Z_0 = -1).
    One,
}

/// One protocol building block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Block {
    RotX(f64),
    RotZ(f64),
    Controlled(f64),
    Squeeze(f64),
    Oat(f64),
}

/// Ensemble state conditioned on the control qubit.
#[derive(Clone, Debug)]
pub struct ControlledState {
    pub branch0: DickeVector,
    pub branch1: DickeVector,
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl ControlledState {
    pub fn new(
        branch0: DickeVector,
        branch1: DickeVector,
        alpha: Complex64,
        beta: Complex64,
    ) -> Result<Self> {
        if branch0.space() != branch1.space() {
            return Err(Error::Argument("branches live on different spaces".into()));
        }
        let w = alpha.norm_sqr() + beta.norm_sqr();
        if (w - 1.0).abs() > 1e-9 {
            return Err(Error::Argument(format!(
                "|alpha|^2 + |beta|^2 = {w}, expected 1"
            )));
        }
        Ok(Self {
            branch0,
            branch1,
            alpha,
            beta,
        })
    }

    /// sqrt(|alpha|^2 ||b0||^2 + |beta|^2 ||b1||^2); 1 for a physical state.
    pub fn combined_norm(&self) -> f64 {
        (self.alpha.norm_sqr() * self.branch0.norm().powi(2)
            + self.beta.norm_sqr() * self.branch1.norm().powi(2))
        .sqrt()
    }
}

/// A state checkpoint: single branch or both.
#[derive(Clone, Debug)]
pub enum StageState {
    Reduced(DickeVector),
    TwoBranch(ControlledState),
}

impl StageState {
    /// The alpha-branch (control `|0>`) component.
    pub fn alpha_branch(&self) -> &DickeVector {
        match self {
            StageState::Reduced(v) => v,
            StageState::TwoBranch(cs) => &cs.branch0,
        }
    }

    pub fn max_norm_drift(&self) -> f64 {
        match self {
            StageState::Reduced(v) => v.norm_drift(),
            StageState::TwoBranch(cs) => cs.branch0.norm_drift().max(cs.branch1.norm_drift()),
        }
    }
}

/// Which picture the protocol runs in.
#[derive(Clone, Copy, Debug)]
pub enum ProtocolMode {
    /// Single branch with control fixed to `|0>`; the exact protocol
    /// symmetry makes this sufficient for the infidelity.
    Reduced,
    /// Both branches of `(alpha|0> + beta|1>) ⊗ |D_0>`.
    TwoBranch { alpha: Complex64, beta: Complex64 },
}

impl ProtocolMode {
    pub fn two_branch_equal() -> Self {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        ProtocolMode::TwoBranch { alpha: r, beta: r }
    }
}

/// Record of the state after every block.
#[derive(Clone, Debug)]
pub struct ProtocolTrace {
    pub params: ProtocolParams,
    pub stages: Vec<(&'static str, StageState)>,
}

impl ProtocolTrace {
    pub fn final_state(&self) -> &StageState {
        &self
            .stages
            .last()
            .expect("a trace always has at least one stage")
            .1
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.stages
            .iter()
            .map(|(_, s)| s.max_norm_drift())
            .fold(0.0, f64::max)
    }
}

/// Stage labels for the standard composition.
pub const STANDARD_STAGES: [&str; 7] = [
    "s_tau1",
    "c_phi",
    "s_neg_tau2",
    "rx_neg_pi_2",
    "o_pi_4",
    "rz_pi_4",
    "s_tau3",
];

/// Stage labels for the local-rotation-free rewriting.
pub const REWRITTEN_STAGES: [&str; 7] = [
    "s_tau1",
    "c_phi",
    "s_neg_tau2",
    "y2_pi_16n",
    "tilted_s_tau3",
    "rx_neg_pi_2",
    "rz_pi_4",
];

/// All overlap and timing metrics of one protocol run.
#[derive(Clone, Debug)]
pub struct FidelityReport {
    pub n_qubits: u32,
    pub theta: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub phi: f64,
    /// `<D_0 | psi_branch0>`
    pub f0: Complex64,
    /// Branch-1 overlap against the phase-fixed target (see
    /// `branch1_target_phase_conj`).
    pub f1: Complex64,
    /// Worst-case infidelity over input amplitudes.
    pub epsilon: f64,
    /// `1 - |f0|^2`, the reduced-picture infidelity.
    pub epsilon_reduced: f64,
    /// The `|alpha|^2` attaining the worst case.
    pub alpha_sq_worst: f64,
    /// Total interaction time of the protocol.
    pub time_budget: f64,
    /// `ln N / N`, the theoretical scale reference.
    pub lower_bound_ref: f64,
    /// `time_budget / (pi/4)`, ratio to the parallel-CNOT baseline.
    pub t_over_cnot: f64,
    /// Cumulative Dicke weight `P_{<=k}` of the alpha-branch final state.
    pub dicke_tail: Vec<f64>,
    /// `(N - <Z>)/N` of the alpha-branch final state.
    pub polarization_error: f64,
}

impl FidelityReport {
    /// The JSON document emitted by the CLI; `version` and `config_hash`
    /// identify the producing run.
    pub fn to_json(&self, version: &str, config_hash: &str) -> serde_json::Value {
        serde_json::json!({
            "N": self.n_qubits,
            "theta": self.theta,
            "tau1": self.tau1,
            "tau2": self.tau2,
            "tau3": self.tau3,
            "phi": self.phi,
            "f0_re": self.f0.re,
            "f0_im": self.f0.im,
            "f1_re": self.f1.re,
            "f1_im": self.f1.im,
            "epsilon": self.epsilon,
            "epsilon_reduced": self.epsilon_reduced,
            "T": self.time_budget,
            "T_over_cnot": self.t_over_cnot,
            "version": version,
            "config_hash": config_hash,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct WorstCaseInfidelity {
    pub epsilon: f64,
    /// The minimizing `|alpha|^2`.
    pub alpha_sq: f64,
}

/// Worst-case infidelity from the two branch overlaps.
///
/// The encoded-state overlap at input amplitudes `(alpha, beta)` is
/// `|alpha|^2 f0 + |beta|^2 f1`, so minimizing over inputs traces the
/// segment from `f1` to `f0` in the complex plane; epsilon is one minus the
/// squared distance from the origin to that segment.
pub fn worst_case_infidelity(f0: Complex64, f1: Complex64) -> Result<WorstCaseInfidelity> {
    for (name, f) in [("f0", f0), ("f1", f1)] {
        if f.norm() > 1.0 + 1e-9 {
            return Err(Error::Argument(format!(
                "|{name}| = {} exceeds 1 beyond tolerance",
                f.norm()
            )));
        }
    }
    let d = f0 - f1;
    let dd = d.norm_sqr();
    let p = if dd == 0.0 {
        // degenerate segment; any weight attains the same overlap
        0.5
    } else {
        (-(d.conj() * f1).re / dd).clamp(0.0, 1.0)
    };
    let closest = f1 + p * d;
    let epsilon = (1.0 - closest.norm_sqr()).clamp(0.0, 1.0);
    Ok(WorstCaseInfidelity {
        epsilon,
        alpha_sq: p,
    })
}

/// Total interaction time and reference scales.
#[derive(Clone, Copy, Debug)]
pub struct TimeBudget {
    /// `theta ln^2 N/(2N) + pi/(8N) + (ln N/N)(tau1 + tau2 + tau3)`
    pub total: f64,
    /// `ln N / N`
    pub lower_bound_ref: f64,
    /// `pi / 4`, the parallel-CNOT baseline time.
    pub cnot_time: f64,
}

pub fn time_budget(params: &ProtocolParams) -> TimeBudget {
    let n = params.n_qubits() as f64;
    let ln_n = n.ln();
    let total = params.theta() * ln_n * ln_n / (2.0 * n)
        + std::f64::consts::PI / (8.0 * n)
        + ln_n / n * (params.tau1() + params.tau2() + params.tau3());
    TimeBudget {
        total,
        lower_bound_ref: ln_n / n,
        cnot_time: std::f64::consts::FRAC_PI_4,
    }
}

/// Phase of the branch-1 target state.
///
/// The exact protocol symmetry sends the branch-1 final state to
/// `e^{-i pi N/2} R^{X+Y}_{-pi}` applied to the branch-0 state, and
/// `<D_N| R^{X+Y}_{-pi} = e^{-i pi N/4} <D_0|`, so the branch-1 overlap
/// against the bare `|D_N>` is `e^{-3 i pi N/4} f0`. The encoded target for
/// branch 1 therefore carries the fixed phase `e^{-3 i pi N/4}` — a
/// parameter-free control-qubit frame choice — making `f1 = f0` an exact
/// identity. The phase is +1 whenever N is a multiple of 8. This function
/// returns its conjugate, the factor applied to the bare overlap.
fn branch1_target_phase_conj(n_qubits: u32) -> Complex64 {
    eighth_phase(3 * n_qubits as i64)
}

/// The protocol engine: collective operators plus the spectral caches for
/// the generators the blocks need. All state is immutable after
/// construction, so one engine serves concurrent sweeps.
pub struct ProtocolEngine {
    space: DickeSpace,
    ops: CollectiveOperators,
    x_cache: Arc<SpectralCache>,
    tat_cache: Arc<SpectralCache>,
    tilted_cache: OnceLock<Arc<SpectralCache>>,
    store: Arc<SpectralStore>,
}

impl ProtocolEngine {
    pub fn new(space: DickeSpace, store: Arc<SpectralStore>) -> Result<Self> {
        let x_cache = store.get(space, Generator::X)?;
        let tat_cache = store.get(space, Generator::HTat)?;
        Ok(Self {
            space,
            ops: CollectiveOperators::new(space),
            x_cache,
            tat_cache,
            tilted_cache: OnceLock::new(),
            store,
        })
    }

    pub fn space(&self) -> DickeSpace {
        self.space
    }

    pub fn operators(&self) -> &CollectiveOperators {
        &self.ops
    }

    pub fn x_cache(&self) -> &Arc<SpectralCache> {
        &self.x_cache
    }

    pub fn tat_cache(&self) -> &Arc<SpectralCache> {
        &self.tat_cache
    }

    fn tilted_cache(&self) -> Result<&Arc<SpectralCache>> {
        if let Some(c) = self.tilted_cache.get() {
            return Ok(c);
        }
        let cache = self.store.get(self.space, Generator::Tilted)?;
        Ok(self.tilted_cache.get_or_init(|| cache))
    }

    /// Time rescaling of the squeezing blocks: `ln N / N`.
    fn squeeze_scale(&self) -> f64 {
        self.space.log_n() / self.space.n_qubits() as f64
    }

    fn check_space(&self, state: &DickeVector) -> Result<()> {
        if state.space() != self.space {
            return Err(Error::Argument(
                "state dimension does not match engine space".into(),
            ));
        }
        Ok(())
    }

    /// Diagonal phase multiplication `psi_k *= f(k)`.
    fn apply_diag(&self, state: &DickeVector, f: impl Fn(usize) -> Complex64) -> DickeVector {
        let mut out = state.clone();
        for (k, a) in out.amplitudes_mut().iter_mut().enumerate() {
            *a *= f(k);
        }
        out
    }

    /// Apply one block to a single branch.
    pub fn apply_block(
        &self,
        block: Block,
        state: &DickeVector,
        branch: ControlBranch,
    ) -> Result<DickeVector> {
        self.check_space(state)?;
        match block {
            Block::RotX(phi) => {
                if !phi.is_finite() {
                    return Err(Error::Argument("non-finite rotation angle".into()));
                }
                // exp(+i phi X/2) = exp(-i H t) with H = X, t = -phi/2
                self.x_cache.evolve(-0.5 * phi, state)
            }
            Block::RotZ(phi) => {
                if !phi.is_finite() {
                    return Err(Error::Argument("non-finite rotation angle".into()));
                }
                Ok(self.apply_diag(state, |k| {
                    Complex64::from_polar(1.0, 0.5 * phi * self.space.z_eigenvalue(k))
                }))
            }
            Block::Oat(phi) => {
                if !phi.is_finite() {
                    return Err(Error::Argument("non-finite twisting angle".into()));
                }
                let denom = 4.0 * self.space.n_qubits() as f64;
                Ok(self.apply_diag(state, |k| {
                    let z = self.space.z_eigenvalue(k);
                    Complex64::from_polar(1.0, -phi * z * z / denom)
                }))
            }
            Block::Squeeze(tau) => {
                if !tau.is_finite() {
                    return Err(Error::Argument("non-finite squeezing time".into()));
                }
                self.tat_cache.evolve(tau * self.squeeze_scale(), state)
            }
            Block::Controlled(phi) => {
                let signed = match branch {
                    ControlBranch::Zero => phi,
                    ControlBranch::One => -phi,
                };
                self.apply_block(Block::RotX(signed), state, branch)
            }
        }
    }

    /// Apply one block to both branches of a controlled state.
    pub fn apply_block_controlled(
        &self,
        block: Block,
        state: &ControlledState,
    ) -> Result<ControlledState> {
        Ok(ControlledState {
            branch0: self.apply_block(block, &state.branch0, ControlBranch::Zero)?,
            branch1: self.apply_block(block, &state.branch1, ControlBranch::One)?,
            alpha: state.alpha,
            beta: state.beta,
        })
    }

    fn run_blocks(
        &self,
        params: &ProtocolParams,
        mode: ProtocolMode,
        labels: &'static [&'static str],
        blocks: &[BlockOp],
    ) -> Result<ProtocolTrace> {
        if params.space() != self.space {
            return Err(Error::Argument(format!(
                "params are for N = {}, engine is for N = {}",
                params.n_qubits(),
                self.space.n_qubits()
            )));
        }
        let initial = DickeVector::dicke_state(self.space, 0)?;
        let mut stages = Vec::with_capacity(blocks.len());
        match mode {
            ProtocolMode::Reduced => {
                let mut state = initial;
                for (label, op) in labels.iter().zip(blocks.iter()) {
                    state = self.apply_op(op, &state, ControlBranch::Zero)?;
                    stages.push((*label, StageState::Reduced(state.clone())));
                }
            }
            ProtocolMode::TwoBranch { alpha, beta } => {
                let mut state = ControlledState::new(initial.clone(), initial, alpha, beta)?;
                for (label, op) in labels.iter().zip(blocks.iter()) {
                    state = ControlledState {
                        branch0: self.apply_op(op, &state.branch0, ControlBranch::Zero)?,
                        branch1: self.apply_op(op, &state.branch1, ControlBranch::One)?,
                        alpha: state.alpha,
                        beta: state.beta,
                    };
                    stages.push((*label, StageState::TwoBranch(state.clone())));
                }
            }
        }
        Ok(ProtocolTrace {
            params: *params,
            stages,
        })
    }

    fn apply_op(
        &self,
        op: &BlockOp,
        state: &DickeVector,
        branch: ControlBranch,
    ) -> Result<DickeVector> {
        match op {
            BlockOp::Plain(b) => self.apply_block(*b, state, branch),
            BlockOp::YSquaredPhase(coeff) => self.apply_y_squared_phase(*coeff, state),
            BlockOp::TiltedSqueeze(tau) => {
                // Conjugating H_TAT by RX(pi/2) RZ(-pi/4) gives Z^2 - X^2, so
                // the tilted-axis unsqueeze in this frame is
                // exp(-i tau' (Z^2 - X^2)) = evolve(X^2 - Z^2, -tau').
                self.tilted_cache()?
                    .evolve(-tau * self.squeeze_scale(), state)
            }
        }
    }

    /// `exp(-i coeff Y^2)` via the X cache: `Y = D X D^dagger` with
    /// `D = diag(i^k)`, so the Y^2 phase is the X^2 phase conjugated by D.
    pub fn apply_y_squared_phase(&self, coeff: f64, state: &DickeVector) -> Result<DickeVector> {
        self.check_space(state)?;
        let pre: Vec<Complex64> = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(k, a)| a * eighth_phase(-2 * (k as i64)))
            .collect();
        let mid = self
            .x_cache
            .apply_phase_function(|l| Complex64::from_polar(1.0, -coeff * l * l), &pre)?;
        let out: Vec<Complex64> = mid
            .iter()
            .enumerate()
            .map(|(k, a)| a * eighth_phase(2 * (k as i64)))
            .collect();
        DickeVector::from_amplitudes(self.space, out)
    }

    /// The standard seven-block composition.
    pub fn run_protocol(
        &self,
        params: &ProtocolParams,
        mode: ProtocolMode,
    ) -> Result<ProtocolTrace> {
        let phi = params.phi();
        let blocks = [
            BlockOp::Plain(Block::Squeeze(params.tau1())),
            BlockOp::Plain(Block::Controlled(phi)),
            BlockOp::Plain(Block::Squeeze(-params.tau2())),
            BlockOp::Plain(Block::RotX(-std::f64::consts::FRAC_PI_2)),
            BlockOp::Plain(Block::Oat(std::f64::consts::FRAC_PI_4)),
            BlockOp::Plain(Block::RotZ(std::f64::consts::FRAC_PI_4)),
            BlockOp::Plain(Block::Squeeze(params.tau3())),
        ];
        self.run_blocks(params, mode, &STANDARD_STAGES, &blocks)
    }

    /// The local-rotation-free rewriting: same prefix, then the conjugated
    /// `Y^2` twist, the tilted-axis unsqueeze, and the two final rotations.
    /// Agrees with `run_protocol` to working precision.
    pub fn rewritten_protocol(
        &self,
        params: &ProtocolParams,
        mode: ProtocolMode,
    ) -> Result<ProtocolTrace> {
        let phi = params.phi();
        let n = self.space.n_qubits() as f64;
        let blocks = [
            BlockOp::Plain(Block::Squeeze(params.tau1())),
            BlockOp::Plain(Block::Controlled(phi)),
            BlockOp::Plain(Block::Squeeze(-params.tau2())),
            BlockOp::YSquaredPhase(std::f64::consts::PI / (16.0 * n)),
            BlockOp::TiltedSqueeze(params.tau3()),
            BlockOp::Plain(Block::RotX(-std::f64::consts::FRAC_PI_2)),
            BlockOp::Plain(Block::RotZ(std::f64::consts::FRAC_PI_4)),
        ];
        self.run_blocks(params, mode, &REWRITTEN_STAGES, &blocks)
    }

    /// Branch overlaps, worst-case infidelity, and timing for a finished run.
    pub fn fidelity_report(&self, trace: &ProtocolTrace) -> Result<FidelityReport> {
        let params = &trace.params;
        let final_state = trace.final_state();
        let n = self.space.n_qubits();
        let dim = self.space.dim();
        let (f0, f1) = match final_state {
            StageState::Reduced(psi) => {
                let f0 = psi.amplitudes()[0];
                // The exact symmetry gives f1 = f0 in the reduced picture.
                (f0, f0)
            }
            StageState::TwoBranch(cs) => {
                let f0 = cs.branch0.amplitudes()[0];
                let bare = cs.branch1.amplitudes()[dim - 1];
                (f0, branch1_target_phase_conj(n) * bare)
            }
        };
        let wc = worst_case_infidelity(f0, f1)?;
        let tb = time_budget(params);
        let alpha_final = final_state.alpha_branch();
        let tail = analysis::dicke_tail(alpha_final)?;
        Ok(FidelityReport {
            n_qubits: n,
            theta: params.theta(),
            tau1: params.tau1(),
            tau2: params.tau2(),
            tau3: params.tau3(),
            phi: params.phi(),
            f0,
            f1,
            epsilon: wc.epsilon,
            epsilon_reduced: (1.0 - f0.norm_sqr()).clamp(0.0, 1.0),
            alpha_sq_worst: wc.alpha_sq,
            time_budget: tb.total,
            lower_bound_ref: tb.lower_bound_ref,
            t_over_cnot: tb.total / tb.cnot_time,
            dicke_tail: tail.cumulative,
            polarization_error: analysis::polarization_error(alpha_final)?,
        })
    }

    /// State after the first six blocks (everything up to the final
    /// unsqueeze) in the reduced picture.
    pub fn prefix_state(&self, params: &ProtocolParams) -> Result<DickeVector> {
        let phi = params.phi();
        let mut state = DickeVector::dicke_state(self.space, 0)?;
        for block in [
            Block::Squeeze(params.tau1()),
            Block::Controlled(phi),
            Block::Squeeze(-params.tau2()),
            Block::RotX(-std::f64::consts::FRAC_PI_2),
            Block::Oat(std::f64::consts::FRAC_PI_4),
            Block::RotZ(std::f64::consts::FRAC_PI_4),
        ] {
            state = self.apply_block(block, &state, ControlBranch::Zero)?;
        }
        Ok(state)
    }

    /// Closed-form objective for the final unsqueeze: with the prefix state
    /// expanded in the TAT eigenbasis, the overlap `<D_0|S_tau3|prefix>` is a
    /// trigonometric sum evaluable in O(N) per candidate `tau3`.
    pub fn tau3_objective(&self, params: &ProtocolParams) -> Result<Tau3Objective> {
        let prefix = self.prefix_state(params)?;
        let w = self.tat_cache.to_eigenbasis(prefix.amplitudes());
        let row0 = self.tat_cache.basis_row(0);
        let coeff: Vec<Complex64> = row0.iter().zip(w.iter()).map(|(r, wj)| r * wj).collect();
        Ok(Tau3Objective {
            coeff,
            eigenvalues: self.tat_cache.eigenvalues().to_vec(),
            time_scale: self.squeeze_scale(),
        })
    }
}

/// Internal block tag covering the rewritten composition's extra generators.
enum BlockOp {
    Plain(Block),
    /// `exp(-i coeff Y^2)`
    YSquaredPhase(f64),
    /// `exp(-i tau (ln N/N) (AB+BA))` expressed in the pre-rotation frame.
    TiltedSqueeze(f64),
}

/// Overlap `<D_0| S_tau3 |prefix>` as a function of `tau3`.
pub struct Tau3Objective {
    coeff: Vec<Complex64>,
    eigenvalues: Vec<f64>,
    time_scale: f64,
}

impl Tau3Objective {
    pub fn overlap(&self, tau3: f64) -> Complex64 {
        let t = tau3 * self.time_scale;
        let mut acc = ZERO;
        for (c, l) in self.coeff.iter().zip(self.eigenvalues.iter()) {
            acc += c * Complex64::from_polar(1.0, -l * t);
        }
        acc
    }

    pub fn epsilon(&self, tau3: f64) -> f64 {
        (1.0 - self.overlap(tau3).norm_sqr()).clamp(0.0, 1.0)
    }
}

/// The parallel-CNOT baseline: controlled pi/2 x-rotation, collective
/// `RX(-pi/2)`, and the control-frame z-rotation completing the exact CNOT
/// circuit identity. Exact for every N; the reported time is pi/4.
pub fn cnot_baseline(space: DickeSpace, store: Arc<SpectralStore>) -> Result<FidelityReport> {
    let engine = ProtocolEngine::new(space, store)?;
    cnot_baseline_with_engine(&engine)
}

/// Baseline through an existing engine (shares its X cache).
pub fn cnot_baseline_with_engine(engine: &ProtocolEngine) -> Result<FidelityReport> {
    let space = engine.space();
    let n = space.n_qubits();
    let dim = space.dim();
    let initial = DickeVector::dicke_state(space, 0)?;
    let half_pi = std::f64::consts::FRAC_PI_2;

    // Hamiltonian stage: controlled rotation by pi/2.
    let b0 = engine.apply_block(Block::Controlled(half_pi), &initial, ControlBranch::Zero)?;
    let b1 = engine.apply_block(Block::Controlled(half_pi), &initial, ControlBranch::One)?;
    // Ensemble rotation RX(-pi/2).
    let b0 = engine.apply_block(Block::RotX(-half_pi), &b0, ControlBranch::Zero)?;
    let b1 = engine.apply_block(Block::RotX(-half_pi), &b1, ControlBranch::One)?;
    // Control-frame rotation exp(+i (pi N/4) Z_0/2): branch phases
    // e^{± i pi N/8}.
    let b0 = b0.scaled(sixteenth_phase(n as i64));
    let b1 = b1.scaled(sixteenth_phase(-(n as i64)));

    let f0 = b0.amplitudes()[0];
    let f1 = branch1_target_phase_conj(n) * b1.amplitudes()[dim - 1];
    let wc = worst_case_infidelity(f0, f1)?;
    let tail = analysis::dicke_tail(&b0)?;
    Ok(FidelityReport {
        n_qubits: n,
        theta: 0.0,
        tau1: 0.0,
        tau2: 0.0,
        tau3: 0.0,
        phi: 0.0,
        f0,
        f1,
        epsilon: wc.epsilon,
        epsilon_reduced: (1.0 - f0.norm_sqr()).clamp(0.0, 1.0),
        alpha_sq_worst: wc.alpha_sq,
        time_budget: std::f64::consts::FRAC_PI_4,
        lower_bound_ref: space.log_n() / n as f64,
        t_over_cnot: 1.0,
        dicke_tail: tail.cumulative,
        polarization_error: analysis::polarization_error(&b0)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine(n: u32) -> ProtocolEngine {
        let space = DickeSpace::new(n).unwrap();
        ProtocolEngine::new(space, Arc::new(SpectralStore::new())).unwrap()
    }

    #[test]
    fn worst_case_geometry() {
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let wc = worst_case_infidelity(one, one).unwrap();
        assert!(wc.epsilon.abs() < 1e-15);
        let wc = worst_case_infidelity(one, -one).unwrap();
        assert!((wc.epsilon - 1.0).abs() < 1e-15, "segment through origin");
        let wc = worst_case_infidelity(one, i).unwrap();
        assert!((wc.epsilon - 0.5).abs() < 1e-15, "midpoint (1+i)/2");
        assert!((wc.alpha_sq - 0.5).abs() < 1e-12);
        assert!(worst_case_infidelity(Complex64::new(1.1, 0.0), one).is_err());
    }

    #[test]
    fn time_budget_examples() {
        let p = ProtocolParams::new(1024, 2.0, 0.0505, 0.111, 0.0357).unwrap();
        let tb = time_budget(&p);
        assert!(
            (tb.total - 0.0486).abs() < 5e-4,
            "T = {:.6}, expected about 0.0486",
            tb.total
        );
        assert!((tb.total / tb.cnot_time - 0.06).abs() < 0.005);

        let p0 = ProtocolParams::new(64, 0.0, 0.0, 0.0, 0.0).unwrap();
        assert!((time_budget(&p0).total - std::f64::consts::PI / (8.0 * 64.0)).abs() < 1e-15);
    }

    #[test]
    fn rot_x_pi_flips_pole() {
        // RX(pi) = product of single-qubit e^{i pi X_i/2} = (i X_i), so on
        // |D_0> it gives i^N |D_N>; for N = 2 that is -|D_2>.
        let e = engine(2);
        let s = DickeVector::dicke_state(e.space(), 0).unwrap();
        let out = e
            .apply_block(Block::RotX(std::f64::consts::PI), &s, ControlBranch::Zero)
            .unwrap();
        let a = out.amplitudes();
        assert!((a[2] - Complex64::new(-1.0, 0.0)).norm() < 1e-12, "{a:?}");
        assert!(a[0].norm() < 1e-12 && a[1].norm() < 1e-12);
    }

    #[test]
    fn oat_phase_on_dicke_state() {
        // O(phi)|D_k> = e^{-i phi (N-2k)^2/(4N)} |D_k>; N=4, k=2 -> phase 1.
        let e = engine(4);
        let s = DickeVector::dicke_state(e.space(), 2).unwrap();
        let out = e
            .apply_block(
                Block::Oat(std::f64::consts::FRAC_PI_4),
                &s,
                ControlBranch::Zero,
            )
            .unwrap();
        assert!((out.amplitudes()[2] - Complex64::new(1.0, 0.0)).norm() < 1e-15);

        // k=0: phase e^{-i phi N/4}
        let s0 = DickeVector::dicke_state(e.space(), 0).unwrap();
        let out0 = e
            .apply_block(Block::Oat(0.3), &s0, ControlBranch::Zero)
            .unwrap();
        let expect = Complex64::from_polar(1.0, -0.3 * 16.0 / 16.0);
        assert!((out0.amplitudes()[0] - expect).norm() < 1e-14);
    }

    #[test]
    fn controlled_block_is_branch_signed_rotation() {
        let e = engine(6);
        let s = DickeVector::dicke_state(e.space(), 0).unwrap();
        let phi = 0.21;
        let plus = e
            .apply_block(Block::Controlled(phi), &s, ControlBranch::Zero)
            .unwrap();
        let rot = e
            .apply_block(Block::RotX(phi), &s, ControlBranch::Zero)
            .unwrap();
        for (a, b) in plus.amplitudes().iter().zip(rot.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
        let minus = e
            .apply_block(Block::Controlled(phi), &s, ControlBranch::One)
            .unwrap();
        let rot_neg = e
            .apply_block(Block::RotX(-phi), &s, ControlBranch::Zero)
            .unwrap();
        for (a, b) in minus.amplitudes().iter().zip(rot_neg.amplitudes()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn trace_has_seven_checkpoints_and_unit_norm() {
        let e = engine(16);
        let p = ProtocolParams::new(16, 1.0, 0.05, 0.1, 0.03).unwrap();
        let trace = e.run_protocol(&p, ProtocolMode::Reduced).unwrap();
        assert_eq!(trace.stages.len(), 7);
        let labels: Vec<_> = trace.stages.iter().map(|(l, _)| *l).collect();
        assert_eq!(labels, STANDARD_STAGES.to_vec());
        assert!(trace.max_norm_drift() < 1e-9);

        let trace2 = e
            .run_protocol(&p, ProtocolMode::two_branch_equal())
            .unwrap();
        assert_eq!(trace2.stages.len(), 7);
        if let StageState::TwoBranch(cs) = trace2.final_state() {
            assert!((cs.combined_norm() - 1.0).abs() < 1e-9);
        } else {
            panic!("expected two-branch state");
        }
    }

    #[test]
    fn exact_final_state_gives_zero_epsilon() {
        // Hand-built final state alpha|0>|D_0> + beta|1>|D_N> with the
        // branch-1 target phase.
        let e = engine(11);
        let space = e.space();
        let d0 = DickeVector::dicke_state(space, 0).unwrap();
        let dn = DickeVector::dicke_state(space, 11).unwrap();
        // branch-1 state must carry the symmetry phase e^{-3 i pi N/4}
        let dn = dn.scaled(branch1_target_phase_conj(11).conj());
        let cs = ControlledState::new(d0, dn, Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8))
            .unwrap();
        let p = ProtocolParams::new(11, 0.0, 0.0, 0.0, 0.0).unwrap();
        let trace = ProtocolTrace {
            params: p,
            stages: vec![("final", StageState::TwoBranch(cs))],
        };
        let report = e.fidelity_report(&trace).unwrap();
        assert!(report.epsilon < 1e-12, "epsilon = {}", report.epsilon);
    }

    #[test]
    fn cnot_baseline_exact_small() {
        for n in [1u32, 2, 3, 5, 8, 13] {
            let space = DickeSpace::new(n).unwrap();
            let report = cnot_baseline(space, Arc::new(SpectralStore::new())).unwrap();
            assert!(
                report.epsilon <= 1e-10,
                "N={n}: baseline epsilon {:.3e}",
                report.epsilon
            );
            assert!((report.time_budget - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        }
    }

    #[test]
    fn cnot_hamiltonian_stage_lands_on_equator() {
        let e = engine(9);
        let s = DickeVector::dicke_state(e.space(), 0).unwrap();
        let b0 = e
            .apply_block(
                Block::Controlled(std::f64::consts::FRAC_PI_2),
                &s,
                ControlBranch::Zero,
            )
            .unwrap();
        assert!(b0.z_expectation().abs() < 1e-9);
    }

    #[test]
    fn theta_zero_branches_agree_in_magnitude() {
        let e = engine(12);
        let p = ProtocolParams::new(12, 0.0, 0.07, 0.04, 0.02).unwrap();
        let trace = e
            .run_protocol(&p, ProtocolMode::two_branch_equal())
            .unwrap();
        let report = e.fidelity_report(&trace).unwrap();
        assert!(
            (report.f0.norm() - report.f1.norm()).abs() < 1e-12,
            "no separation at theta = 0"
        );
    }

    #[test]
    fn tau3_objective_matches_full_run() {
        let e = engine(24);
        let p = ProtocolParams::new(24, 1.5, 0.06, 0.12, 0.0).unwrap();
        let obj = e.tau3_objective(&p).unwrap();
        for tau3 in [0.0, 0.033, 0.11] {
            let full = e
                .run_protocol(&p.with_tau3(tau3), ProtocolMode::Reduced)
                .unwrap();
            let f0 = match full.final_state() {
                StageState::Reduced(v) => v.amplitudes()[0],
                _ => unreachable!(),
            };
            assert!(
                (obj.overlap(tau3) - f0).norm() < 1e-11,
                "tau3 = {tau3}: {:?} vs {f0:?}",
                obj.overlap(tau3)
            );
        }
    }
}
