//! Dicke-basis representation of collective-spin states and operators.
//!
//! States live in the permutation-symmetric subspace of `N` qubits, spanned
//! by the Dicke states `|D^N_k>` (k = number of ones). The collective
//! operators `X = sum_i X_i` etc. are banded in this basis: `Z` is diagonal,
//! `X` and `Y` couple neighbouring `k`, and `XY + YX` couples next-nearest
//! `k`. Everything here stores bands only; dense copies are generated on
//! demand for the eigensolver and for tests.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::util::LnFactorial;

/// Largest supported ensemble size. Beyond this a dense spectral basis for
/// one generator would exceed a few hundred MB.
pub const MAX_QUBITS: u32 = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The `(N+1)`-dimensional permutation-symmetric space of `N` ensemble
/// qubits (the control qubit is not part of it).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DickeSpace {
    n_qubits: u32,
}

impl DickeSpace {
    pub fn new(n_qubits: u32) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Argument("ensemble needs at least one qubit".into()));
        }
        if n_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!(
                "N = {n_qubits} exceeds the supported maximum {MAX_QUBITS}"
            )));
        }
        Ok(Self { n_qubits })
    }

    #[inline]
    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    /// Dimension of the Dicke manifold, `N + 1`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.n_qubits as usize + 1
    }

    /// Natural log of N, the rescaling used throughout the protocol.
    #[inline]
    pub fn log_n(&self) -> f64 {
        (self.n_qubits as f64).ln()
    }

    /// Eigenvalue of `Z` on `|D_k>`: `N - 2k`.
    #[inline]
    pub fn z_eigenvalue(&self, k: usize) -> f64 {
        self.n_qubits as f64 - 2.0 * k as f64
    }
}

/// State vector over the Dicke basis.
#[derive(Clone, Debug)]
pub struct DickeVector {
    space: DickeSpace,
    amplitudes: Vec<Complex64>,
}

impl DickeVector {
    /// Basis state `|D^N_k>`.
    pub fn dicke_state(space: DickeSpace, k: usize) -> Result<Self> {
        if k >= space.dim() {
            return Err(Error::Argument(format!(
                "Dicke index k = {k} out of range for N = {}",
                space.n_qubits()
            )));
        }
        let mut amplitudes = vec![ZERO; space.dim()];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(Self { space, amplitudes })
    }

    pub fn from_amplitudes(space: DickeSpace, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::Argument(format!(
                "amplitude length {} does not match dim {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    /// Spin-coherent state at the given sphere point, computed in log space
    /// so binomial weights survive N ~ 2048.
    ///
    /// Amplitude convention: `a_k = sqrt(C(N,k)) cos^{N-k}(t/2) (sin(t/2) e^{i az})^k`
    /// with `t` the polar angle; the south pole at azimuth 0 carries phase +1
    /// on `k = N`.
    pub fn spin_coherent(space: DickeSpace, params: &SpinCoherentParams) -> Self {
        let n = space.n_qubits() as usize;
        let dim = space.dim();
        let half = 0.5 * params.polar;
        let (cos_h, sin_h) = (half.cos(), half.sin());
        let mut amplitudes = vec![ZERO; dim];
        if sin_h <= 0.0 {
            amplitudes[0] = Complex64::new(1.0, 0.0);
        } else if cos_h <= 0.0 {
            amplitudes[n] = Complex64::from_polar(1.0, n as f64 * params.azimuth);
        } else {
            let lf = LnFactorial::new(n);
            let (ln_c, ln_s) = (cos_h.ln(), sin_h.ln());
            for (k, amp) in amplitudes.iter_mut().enumerate() {
                let log_mag = 0.5 * lf.ln_binomial(n, k) + (n - k) as f64 * ln_c + k as f64 * ln_s;
                *amp = Complex64::from_polar(log_mag.exp(), k as f64 * params.azimuth);
            }
        }
        Self { space, amplitudes }
    }

    #[inline]
    pub fn space(&self) -> DickeSpace {
        self.space
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// |norm - 1|; evolution never renormalizes, it reports drift instead.
    pub fn norm_drift(&self) -> f64 {
        (self.norm() - 1.0).abs()
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Multiply every amplitude by a fixed scalar.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for a in out.amplitudes.iter_mut() {
            *a *= factor;
        }
        out
    }

    /// <Z> = sum_k (N - 2k) |psi_k|^2; diagonal, so no operator needed.
    pub fn z_expectation(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| self.space.z_eigenvalue(k) * a.norm_sqr())
            .sum()
    }
}

/// Validated spherical angles for a spin-coherent state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinCoherentParams {
    pub polar: f64,
    pub azimuth: f64,
}

impl SpinCoherentParams {
    pub fn new(polar: f64, azimuth: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&polar) {
            return Err(Error::Argument(format!(
                "polar angle {polar} outside [0, pi]"
            )));
        }
        if !(0.0..2.0 * std::f64::consts::PI).contains(&azimuth) {
            return Err(Error::Argument(format!(
                "azimuth {azimuth} outside [0, 2 pi)"
            )));
        }
        Ok(Self { polar, azimuth })
    }
}

/// Banded collective operators on a Dicke space.
///
/// Ladder convention:
/// `X|D_k> = sqrt((N-k)(k+1)) |D_{k+1}> + sqrt(k(N-k+1)) |D_{k-1}>`,
/// `Y|D_k> = i sqrt((N-k)(k+1)) |D_{k+1}> - i sqrt(k(N-k+1)) |D_{k-1}>`.
#[derive(Clone, Debug)]
pub struct CollectiveOperators {
    space: DickeSpace,
    /// `ladder[k] = sqrt((k+1)(N-k))`, the matrix element <D_{k+1}|X|D_k>.
    ladder: Vec<f64>,
}

impl CollectiveOperators {
    pub fn new(space: DickeSpace) -> Self {
        let n = space.n_qubits() as u64;
        let ladder = (0..n)
            .map(|k| (((k + 1) * (n - k)) as f64).sqrt())
            .collect();
        Self { space, ladder }
    }

    #[inline]
    pub fn space(&self) -> DickeSpace {
        self.space
    }

    /// `<D_{k+1}|X|D_k>` elements, k = 0..N-1.
    pub fn ladder(&self) -> &[f64] {
        &self.ladder
    }

    pub fn apply_x(&self, input: &[Complex64], out: &mut [Complex64]) {
        let dim = self.space.dim();
        for k in 0..dim {
            let mut acc = ZERO;
            if k > 0 {
                acc += self.ladder[k - 1] * input[k - 1];
            }
            if k + 1 < dim {
                acc += self.ladder[k] * input[k + 1];
            }
            out[k] = acc;
        }
    }

    pub fn apply_y(&self, input: &[Complex64], out: &mut [Complex64]) {
        let dim = self.space.dim();
        let i = Complex64::new(0.0, 1.0);
        for k in 0..dim {
            let mut acc = ZERO;
            if k > 0 {
                acc += i * self.ladder[k - 1] * input[k - 1];
            }
            if k + 1 < dim {
                acc -= i * self.ladder[k] * input[k + 1];
            }
            out[k] = acc;
        }
    }

    pub fn apply_z(&self, input: &[Complex64], out: &mut [Complex64]) {
        for (k, (inp, o)) in input.iter().zip(out.iter_mut()).enumerate() {
            *o = self.space.z_eigenvalue(k) * inp;
        }
    }

    pub fn apply_z_squared(&self, input: &[Complex64], out: &mut [Complex64]) {
        for (k, (inp, o)) in input.iter().zip(out.iter_mut()).enumerate() {
            let z = self.space.z_eigenvalue(k);
            *o = z * z * inp;
        }
    }

    /// `H_TAT = XY + YX`; couples k to k±2 with purely imaginary elements
    /// `<D_{k+2}|H|D_k> = 2i a_k a_{k+1}` and has zero diagonal.
    pub fn apply_h_tat(&self, input: &[Complex64], out: &mut [Complex64]) {
        let dim = self.space.dim();
        let two_i = Complex64::new(0.0, 2.0);
        for k in 0..dim {
            let mut acc = ZERO;
            if k >= 2 {
                acc += two_i * self.ladder[k - 2] * self.ladder[k - 1] * input[k - 2];
            }
            if k + 2 < dim {
                acc -= two_i * self.ladder[k] * self.ladder[k + 1] * input[k + 2];
            }
            out[k] = acc;
        }
    }

    pub fn dense_x(&self) -> ComplexMatrix {
        let dim = self.space.dim();
        let mut m = ComplexMatrix::zeros(dim);
        for k in 0..dim - 1 {
            let a = Complex64::new(self.ladder[k], 0.0);
            m.set(k + 1, k, a);
            m.set(k, k + 1, a);
        }
        m
    }

    pub fn dense_y(&self) -> ComplexMatrix {
        let dim = self.space.dim();
        let mut m = ComplexMatrix::zeros(dim);
        for k in 0..dim - 1 {
            m.set(k + 1, k, Complex64::new(0.0, self.ladder[k]));
            m.set(k, k + 1, Complex64::new(0.0, -self.ladder[k]));
        }
        m
    }

    pub fn dense_z(&self) -> ComplexMatrix {
        let dim = self.space.dim();
        let mut m = ComplexMatrix::zeros(dim);
        for k in 0..dim {
            m.set(k, k, Complex64::new(self.space.z_eigenvalue(k), 0.0));
        }
        m
    }

    pub fn dense_z_squared(&self) -> ComplexMatrix {
        let dim = self.space.dim();
        let mut m = ComplexMatrix::zeros(dim);
        for k in 0..dim {
            let z = self.space.z_eigenvalue(k);
            m.set(k, k, Complex64::new(z * z, 0.0));
        }
        m
    }

    pub fn dense_h_tat(&self) -> ComplexMatrix {
        let dim = self.space.dim();
        let mut m = ComplexMatrix::zeros(dim);
        for k in 0..dim.saturating_sub(2) {
            let v = 2.0 * self.ladder[k] * self.ladder[k + 1];
            m.set(k + 2, k, Complex64::new(0.0, v));
            m.set(k, k + 2, Complex64::new(0.0, -v));
        }
        m
    }

    /// `AB + BA` for the tilted axes `A = (X+Z)/sqrt2`, `B = (X-Z)/sqrt2`;
    /// algebraically equal to `X^2 - Z^2`, which is what gets built.
    pub fn dense_tilted(&self) -> ComplexMatrix {
        let dim = self.space.dim();
        let mut m = ComplexMatrix::zeros(dim);
        for k in 0..dim {
            let mut diag = -self.space.z_eigenvalue(k).powi(2);
            if k > 0 {
                diag += self.ladder[k - 1] * self.ladder[k - 1];
            }
            if k < dim - 1 {
                diag += self.ladder[k] * self.ladder[k];
            }
            m.set(k, k, Complex64::new(diag, 0.0));
            if k + 2 < dim {
                let v = Complex64::new(self.ladder[k] * self.ladder[k + 1], 0.0);
                m.set(k + 2, k, v);
                m.set(k, k + 2, v);
            }
        }
        m
    }
}
