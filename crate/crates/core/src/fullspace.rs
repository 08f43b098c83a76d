//! Exact 2^N state-vector backend for the permutation-symmetry-breaking
//! study: inhomogeneous TAT couplings, disorder ensembles, Dicke-manifold
//! projection and leakage.
//!
//! The disordered Hamiltonian `H' = sum_{i != j} J_ij (X_i Y_j + Y_i X_j)`
//! acts matrix-free: per unordered pair, the two-qubit kernel maps
//! `|00> -> 2i |11>` and `|11> -> -2i |00>` (the odd-parity states are
//! annihilated), so a matvec gathers over basis indices with one flip per
//! pair. Evolution uses a Lanczos-Krylov exponential with adaptive subspace
//! size and time-step splitting.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dicke::{DickeSpace, DickeVector};
use crate::error::{Error, Result};
use crate::linalg::{tridiag_ql, RealMatrix};
use crate::propagator::SpectralStore;
use crate::protocol::{ProtocolEngine, ProtocolParams, StageState};
use crate::rng::keyed_uniform;

/// Hard cap: a full state vector at N = 24 is 256 MiB.
pub const MAX_FULLSPACE_QUBITS: u32 = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Symmetric pair couplings `J_ij`, uniform in `[1 - delta, 1 + delta]`,
/// drawn from a counter-based generator keyed by `(seed, i, j)` so the
/// matrix is independent of evaluation order and platform.
#[derive(Clone, Debug)]
pub struct DisorderedCoupling {
    n_qubits: u32,
    delta: f64,
    seed: u64,
    /// Packed strictly-upper-triangular couplings, (i, j) with i < j.
    j: Vec<f64>,
}

impl DisorderedCoupling {
    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `J_ij = J_ji`; i == j is not a valid pair.
    pub fn coupling(&self, i: u32, j: u32) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.j[pair_index(self.n_qubits, a, b)]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.j
    }
}

fn pair_index(n: u32, i: u32, j: u32) -> usize {
    debug_assert!(i < j && j < n);
    // offset of row i in the packed upper triangle
    let i = i as usize;
    let j = j as usize;
    let n = n as usize;
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Draw the coupling matrix for `(N, delta, seed)`.
pub fn sample_disorder(n_qubits: u32, delta: f64, seed: u64) -> Result<DisorderedCoupling> {
    if n_qubits == 0 || n_qubits > MAX_FULLSPACE_QUBITS {
        return Err(Error::Capacity(format!(
            "full-space backend supports 1..={MAX_FULLSPACE_QUBITS} qubits, got {n_qubits}"
        )));
    }
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::Argument(format!(
            "disorder strength must be finite and >= 0, got {delta}"
        )));
    }
    let mut j = Vec::with_capacity((n_qubits as usize * (n_qubits as usize - 1)) / 2);
    for a in 0..n_qubits {
        for b in a + 1..n_qubits {
            let u = keyed_uniform(seed, a, b);
            j.push(1.0 - delta + 2.0 * delta * u);
        }
    }
    Ok(DisorderedCoupling {
        n_qubits,
        delta,
        seed,
        j,
    })
}

/// Dense state over all 2^N computational basis states; bit `i` of the
/// index is qubit `i`.
#[derive(Clone, Debug)]
pub struct FullStateVector {
    n_qubits: u32,
    amplitudes: Vec<Complex64>,
}

impl FullStateVector {
    pub fn all_zeros(n_qubits: u32) -> Result<Self> {
        check_n(n_qubits)?;
        let mut amplitudes = vec![ZERO; 1usize << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_amplitudes(n_qubits: u32, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_n(n_qubits)?;
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::Argument("amplitude length must be 2^N".into()));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    /// Embed a Dicke-manifold state: each popcount class shares its
    /// amplitude equally.
    pub fn from_dicke(state: &DickeVector) -> Result<Self> {
        let n = state.space().n_qubits();
        check_n(n)?;
        let root_binom = sqrt_binomials(n);
        let dim = 1usize << n;
        let mut amplitudes = vec![ZERO; dim];
        for (idx, amp) in amplitudes.iter_mut().enumerate() {
            let k = (idx as u32).count_ones() as usize;
            *amp = state.amplitudes()[k] / root_binom[k];
        }
        Ok(Self {
            n_qubits: n,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Project onto the Dicke manifold: `<D_k|psi>` per popcount class.
    pub fn project_dicke(&self) -> DickeVector {
        let n = self.n_qubits;
        let root_binom = sqrt_binomials(n);
        let mut sums = vec![ZERO; n as usize + 1];
        for (idx, amp) in self.amplitudes.iter().enumerate() {
            sums[(idx as u32).count_ones() as usize] += amp;
        }
        let amps: Vec<Complex64> = sums
            .iter()
            .zip(root_binom.iter())
            .map(|(s, r)| s / r)
            .collect();
        let space = DickeSpace::new(n).expect("valid by construction");
        DickeVector::from_amplitudes(space, amps).expect("dimension matches")
    }

    /// Apply the orthogonal Dicke-manifold projector.
    pub fn project_dm(&self) -> Self {
        let projected = self.project_dicke();
        Self::from_dicke(&projected).expect("projection stays in capacity")
    }

    /// Weight outside the Dicke manifold: `1 - sum_k |<D_k|psi>|^2`.
    pub fn dm_leakage(&self) -> f64 {
        let inside: f64 = self
            .project_dicke()
            .amplitudes()
            .iter()
            .map(|a| a.norm_sqr())
            .sum();
        (1.0 - inside).max(0.0)
    }

    /// Per-qubit x-rotation product `prod_i exp(i phi X_i / 2)`, the exact
    /// collective `RX(phi)` on the full space.
    #[allow(clippy::needless_range_loop)] // paired-index update
    pub fn rotate_x_all(&self, phi: f64) -> Self {
        let c = (0.5 * phi).cos();
        let s = (0.5 * phi).sin();
        let is = Complex64::new(0.0, s);
        let mut amps = self.amplitudes.clone();
        for qubit in 0..self.n_qubits {
            let bit = 1usize << qubit;
            for idx in 0..amps.len() {
                if idx & bit == 0 {
                    let a = amps[idx];
                    let b = amps[idx | bit];
                    amps[idx] = c * a + is * b;
                    amps[idx | bit] = is * a + c * b;
                }
            }
        }
        Self {
            n_qubits: self.n_qubits,
            amplitudes: amps,
        }
    }

    /// Diagonal phase per popcount class.
    pub fn phase_by_popcount(&self, phase: impl Fn(u32) -> Complex64) -> Self {
        let table: Vec<Complex64> = (0..=self.n_qubits).map(phase).collect();
        let amps = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(idx, a)| a * table[(idx as u32).count_ones() as usize])
            .collect();
        Self {
            n_qubits: self.n_qubits,
            amplitudes: amps,
        }
    }
}

fn check_n(n: u32) -> Result<()> {
    if n == 0 || n > MAX_FULLSPACE_QUBITS {
        return Err(Error::Capacity(format!(
            "full-space backend supports 1..={MAX_FULLSPACE_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

/// `sqrt(C(N, k))` for k = 0..=N, exact in f64 for N <= 24.
fn sqrt_binomials(n: u32) -> Vec<f64> {
    let mut c = vec![0u64; n as usize + 1];
    c[0] = 1;
    for _ in 0..n {
        for k in (1..c.len()).rev() {
            c[k] += c[k - 1];
        }
    }
    c.iter().map(|&v| (v as f64).sqrt()).collect()
}

/// Matrix-free application of `H' = sum_{i<j} 2 J_ij (X_i Y_j + Y_i X_j)`.
struct PairKernels {
    /// (combined bit mask, 4 J_ij) per unordered pair.
    pairs: Vec<(usize, f64)>,
}

impl PairKernels {
    fn new(coupling: &DisorderedCoupling) -> Self {
        let n = coupling.n_qubits();
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let mask = (1usize << i) | (1usize << j);
                pairs.push((mask, 4.0 * coupling.coupling(i, j)));
            }
        }
        Self { pairs }
    }

    /// `out = H' psi`, gathering per output index (disjoint writes, so the
    /// chunked loop parallelizes safely).
    fn apply(&self, input: &[Complex64], out: &mut [Complex64]) {
        const CHUNK: usize = 1 << 12;
        out.par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(chunk_idx, chunk)| {
                let base = chunk_idx * CHUNK;
                for (off, o) in chunk.iter_mut().enumerate() {
                    let idx = base + off;
                    let mut acc = ZERO;
                    for &(mask, coeff) in &self.pairs {
                        let bits = idx & mask;
                        if bits == mask {
                            // |00> component feeds |11> with +2i per J
                            let src = input[idx ^ mask];
                            acc += Complex64::new(-coeff * src.im, coeff * src.re);
                        } else if bits == 0 {
                            // |11> component feeds |00> with -2i per J
                            let src = input[idx ^ mask];
                            acc += Complex64::new(coeff * src.im, -coeff * src.re);
                        }
                    }
                    *o = acc;
                }
            });
    }
}

/// Lanczos-Krylov approximation of `exp(-i t H) v` for Hermitian matrix-free
/// `H`. Splits the time step when the subspace cap cannot reach `tol`.
fn krylov_expv(
    kernels: &PairKernels,
    t: f64,
    v: &[Complex64],
    tol: f64,
    max_m: usize,
) -> Result<Vec<Complex64>> {
    if t == 0.0 {
        return Ok(v.to_vec());
    }
    let mut steps = 1usize;
    let mut current = v.to_vec();
    let mut depth = 0usize;
    loop {
        let dt = t / steps as f64;
        let mut ok = true;
        let mut state = current.clone();
        for _ in 0..steps {
            match krylov_single(kernels, dt, &state, tol / steps as f64, max_m)? {
                Some(next) => state = next,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(state);
        }
        steps *= 2;
        depth += 1;
        if depth > 16 {
            return Err(Error::Numeric(format!(
                "krylov exponential failed to converge even with {steps} substeps \
                 (|t| = {:.3e}, m = {max_m})",
                t.abs()
            )));
        }
        current = v.to_vec();
    }
}

/// One Lanczos run; `None` means the error estimate never reached `tol`.
fn krylov_single(
    kernels: &PairKernels,
    t: f64,
    v: &[Complex64],
    tol: f64,
    max_m: usize,
) -> Result<Option<Vec<Complex64>>> {
    let dim = v.len();
    let beta0 = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if beta0 == 0.0 {
        return Ok(Some(v.to_vec()));
    }
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(max_m + 1);
    basis.push(v.iter().map(|a| a / beta0).collect());
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![ZERO; dim];

    for j in 0..max_m {
        kernels.apply(&basis[j], &mut w);
        let alpha: f64 = basis[j]
            .iter()
            .zip(w.iter())
            .map(|(q, x)| (q.conj() * x).re)
            .sum();
        alphas.push(alpha);
        for (x, q) in w.iter_mut().zip(basis[j].iter()) {
            *x -= alpha * q;
        }
        if j > 0 {
            let b = betas[j - 1];
            for (x, q) in w.iter_mut().zip(basis[j - 1].iter()) {
                *x -= b * q;
            }
        }
        // One classical Gram-Schmidt pass keeps the basis orthogonal enough
        // for exponentials at these step sizes.
        for q in basis.iter() {
            let overlap: Complex64 = q.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum();
            if overlap.norm_sqr() > 0.0 {
                for (x, qk) in w.iter_mut().zip(q.iter()) {
                    *x -= overlap * qk;
                }
            }
        }
        let beta: f64 = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();

        let m = alphas.len();
        let happy = beta < 1e-13 * alphas[0].abs().max(1.0);
        if happy || m >= 2 {
            let y = small_expm(&alphas, &betas, t)?;
            let err = if happy {
                0.0
            } else {
                (beta * y[m - 1].norm()).abs()
            };
            if happy || err < tol {
                let mut out = vec![ZERO; dim];
                for (yj, q) in y.iter().zip(basis.iter()) {
                    let c = yj * beta0;
                    for (o, qk) in out.iter_mut().zip(q.iter()) {
                        *o += c * qk;
                    }
                }
                return Ok(Some(out));
            }
        }
        if j + 1 < max_m {
            betas.push(beta);
            basis.push(w.iter().map(|a| a / beta).collect());
        }
    }
    Ok(None)
}

/// `exp(-i t T) e_1` for the small Lanczos tridiagonal.
#[allow(clippy::needless_range_loop)]
fn small_expm(alphas: &[f64], betas: &[f64], t: f64) -> Result<Vec<Complex64>> {
    let m = alphas.len();
    let mut d = alphas.to_vec();
    let mut e = vec![0.0; m];
    e[..betas.len().min(m.saturating_sub(1))]
        .copy_from_slice(&betas[..betas.len().min(m.saturating_sub(1))]);
    let mut z = RealMatrix::identity(m);
    tridiag_ql(&mut d, &mut e, &mut z)?;
    let mut y = vec![ZERO; m];
    for j in 0..m {
        let phase = Complex64::from_polar(1.0, -d[j] * t);
        let w = z.get(0, j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += z.get(i, j) * w * phase;
        }
    }
    Ok(y)
}

/// `exp(-i tau (ln N / N) H') |state>` with the disordered TAT Hamiltonian;
/// per-call tolerance 1e-10 with adaptive subspace size (cap 64).
pub fn evolve_disordered_tat(
    coupling: &DisorderedCoupling,
    tau: f64,
    state: &FullStateVector,
) -> Result<FullStateVector> {
    if coupling.n_qubits() != state.n_qubits() {
        return Err(Error::Argument(
            "coupling and state have different qubit counts".into(),
        ));
    }
    let n = state.n_qubits();
    let scale = (n as f64).ln() / n as f64;
    let kernels = PairKernels::new(coupling);
    let amps = krylov_expv(&kernels, tau * scale, state.amplitudes(), 1e-10, 64)?;
    FullStateVector::from_amplitudes(n, amps)
}

/// Whether the final unsqueeze reuses the clean-case `tau3` or is
/// re-optimized on the disordered dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tau3Mode {
    ReuseClean,
    Reoptimize,
}

impl Tau3Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Tau3Mode::ReuseClean => "reuse_clean",
            Tau3Mode::Reoptimize => "reoptimize",
        }
    }
}

/// Outcome of one disordered protocol run.
#[derive(Clone, Debug)]
pub struct DisorderReport {
    pub n_qubits: u32,
    pub delta: f64,
    pub seed: u64,
    pub theta: f64,
    pub tau1: f64,
    pub tau2: f64,
    /// The tau3 actually applied (re-optimized when requested).
    pub tau3: f64,
    pub epsilon: f64,
    /// Dicke-backend infidelity at delta = 0 with the same parameters.
    pub epsilon_clean: f64,
    /// Max out-of-manifold weight over the two squeezing checkpoints.
    pub leakage: f64,
    pub tau3_mode: Tau3Mode,
    /// |norm - 1| of the final state; the pipeline never renormalizes.
    pub norm_drift: f64,
}

/// Run the reduced-branch protocol on the full space with the TAT blocks
/// generated by the disordered Hamiltonian. Leakage is recorded after
/// `S_tau1` and after `S_{-tau2}` (the other blocks preserve the manifold).
pub fn run_disordered_protocol(
    params: &ProtocolParams,
    coupling: &DisorderedCoupling,
    store: &Arc<SpectralStore>,
    tau3_mode: Tau3Mode,
) -> Result<DisorderReport> {
    let n = params.n_qubits();
    if coupling.n_qubits() != n {
        return Err(Error::Argument(
            "coupling size does not match protocol parameters".into(),
        ));
    }
    check_n(n)?;
    let phi = params.phi();
    let quarter_pi = std::f64::consts::FRAC_PI_4;

    let mut psi = FullStateVector::all_zeros(n)?;
    psi = evolve_disordered_tat(coupling, params.tau1(), &psi)?;
    let leakage1 = psi.dm_leakage();
    psi = psi.rotate_x_all(phi);
    psi = evolve_disordered_tat(coupling, -params.tau2(), &psi)?;
    let leakage2 = psi.dm_leakage();
    psi = psi.rotate_x_all(-std::f64::consts::FRAC_PI_2);
    let nf = n as f64;
    psi = psi.phase_by_popcount(|k| {
        let z = nf - 2.0 * k as f64;
        Complex64::from_polar(1.0, -quarter_pi * z * z / (4.0 * nf))
    });
    psi = psi.phase_by_popcount(|k| {
        let z = nf - 2.0 * k as f64;
        Complex64::from_polar(1.0, 0.5 * quarter_pi * z)
    });

    // Clean Dicke-backend reference.
    let engine = ProtocolEngine::new(params.space(), Arc::clone(store))?;

    let (tau3, epsilon_clean) = match tau3_mode {
        Tau3Mode::ReuseClean => {
            let trace = engine.run_protocol(params, crate::protocol::ProtocolMode::Reduced)?;
            let f0 = match trace.final_state() {
                StageState::Reduced(v) => v.amplitudes()[0],
                StageState::TwoBranch(_) => unreachable!("reduced mode"),
            };
            (params.tau3(), (1.0 - f0.norm_sqr()).clamp(0.0, 1.0))
        }
        Tau3Mode::Reoptimize => {
            // Disordered side: golden search over tau3 on the propagated
            // state. Coarse grid first, mirroring the clean optimizer.
            let overlap_sq = |tau3: f64| -> Result<f64> {
                let out = evolve_disordered_tat(coupling, tau3, &psi)?;
                Ok(out.amplitudes()[0].norm_sqr())
            };
            let mut best = (0.0f64, overlap_sq(0.0)?);
            const POINTS: usize = 31;
            for i in 1..POINTS {
                let tau3 = 0.15 * i as f64 / (POINTS - 1) as f64;
                let o = overlap_sq(tau3)?;
                if o > best.1 {
                    best = (tau3, o);
                }
            }
            let step = 0.15 / (POINTS - 1) as f64;
            let (t_ref, neg) = crate::analysis::golden_min(
                (best.0 - step).max(0.0),
                (best.0 + step).min(0.15),
                1e-5,
                |t| Ok(-overlap_sq(t)?),
            )?;
            let tau3 = if -neg > best.1 { t_ref } else { best.0 };

            // Clean reference re-optimized the same way.
            let clean = crate::optimizer::optimize_tau3(
                &engine,
                params.theta(),
                params.tau1(),
                params.tau2(),
                (0.0, 0.15),
            )?;
            (tau3, clean.epsilon)
        }
    };

    psi = evolve_disordered_tat(coupling, tau3, &psi)?;
    let epsilon = (1.0 - psi.amplitudes()[0].norm_sqr()).clamp(0.0, 1.0);

    Ok(DisorderReport {
        n_qubits: n,
        delta: coupling.delta(),
        seed: coupling.seed(),
        theta: params.theta(),
        tau1: params.tau1(),
        tau2: params.tau2(),
        tau3,
        epsilon,
        epsilon_clean,
        leakage: leakage1.max(leakage2),
        tau3_mode,
        norm_drift: (psi.norm() - 1.0).abs(),
    })
}
