//! Derived observables and squeezing diagnostics: Dicke-tail profiles,
//! polarization error, operator variances, TAT squeezing scans, and the
//! closed-form pulling-away time predictor.

use num_complex::Complex64;

use crate::dicke::{CollectiveOperators, DickeSpace, DickeVector};
use crate::error::{Error, Result};
use crate::propagator::{Generator, SpectralStore};

/// Cumulative Dicke-weight profile `P_{<=k} = sum_{l<=k} |<D_l|psi>|^2`.
#[derive(Clone, Debug)]
pub struct DickeTailProfile {
    pub cumulative: Vec<f64>,
}

impl DickeTailProfile {
    /// `1 - P_{<=k}`, the weight strictly above `k`.
    pub fn tail(&self, k: usize) -> f64 {
        1.0 - self.cumulative[k]
    }
}

pub fn dicke_tail(state: &DickeVector) -> Result<DickeTailProfile> {
    check_unit(state)?;
    let mut cumulative = Vec::with_capacity(state.amplitudes().len());
    let mut acc = 0.0;
    for a in state.amplitudes() {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    Ok(DickeTailProfile { cumulative })
}

/// `(N - <Z>)/N`, the relative polarization deficit. Zero on `|D_0>`.
pub fn polarization_error(state: &DickeVector) -> Result<f64> {
    check_unit(state)?;
    let n = state.space().n_qubits() as f64;
    Ok((n - state.z_expectation()) / n)
}

/// Which collective operator a variance refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Standard deviation `sqrt(<O^2> - <O>^2)` of a collective operator.
pub fn variance(ops: &CollectiveOperators, state: &DickeVector, which: Axis) -> Result<f64> {
    check_unit(state)?;
    if ops.space() != state.space() {
        return Err(Error::Argument("operator/state space mismatch".into()));
    }
    let dim = state.space().dim();
    let mut applied = vec![Complex64::new(0.0, 0.0); dim];
    match which {
        Axis::X => ops.apply_x(state.amplitudes(), &mut applied),
        Axis::Y => ops.apply_y(state.amplitudes(), &mut applied),
        Axis::Z => ops.apply_z(state.amplitudes(), &mut applied),
    }
    let mean: Complex64 = state
        .amplitudes()
        .iter()
        .zip(applied.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    let second: f64 = applied.iter().map(|a| a.norm_sqr()).sum();
    Ok((second - mean.re * mean.re).max(0.0).sqrt())
}

fn check_unit(state: &DickeVector) -> Result<()> {
    if state.norm_drift() > 1e-6 {
        return Err(Error::Argument(format!(
            "state is not normalized (drift {:.3e})",
            state.norm_drift()
        )));
    }
    Ok(())
}

/// `<Y^2>` along the TAT trajectory from `|D_0>`, with the located minimum.
#[derive(Clone, Debug)]
pub struct SqueezeScan {
    pub n_qubits: u32,
    pub tau: Vec<f64>,
    pub y_var: Vec<f64>,
    /// Rescaled time of minimal `<Y^2>`, refined off-grid.
    pub tau_min: f64,
    /// `<Y^2>` at `tau_min`.
    pub y_var_min: f64,
}

impl SqueezeScan {
    /// `Delta Y` at the minimum.
    pub fn delta_y_min(&self) -> f64 {
        self.y_var_min.sqrt()
    }

    /// Data for the rescaled-axes collapse: `(tau - tau_min, Delta Y / ln N)`.
    pub fn collapse_points(&self) -> Vec<(f64, f64)> {
        let ln_n = (self.n_qubits as f64).ln();
        self.tau
            .iter()
            .zip(self.y_var.iter())
            .map(|(t, v)| (t - self.tau_min, v.sqrt() / ln_n))
            .collect()
    }
}

/// Evolve `|D_0>` under `S_tau` across the grid (one spectral cache, reused)
/// recording `<Y^2>`; `<Y>` vanishes identically along this trajectory.
/// The minimum is located by parabolic interpolation around the grid argmin
/// followed by golden-section refinement to 1e-5.
pub fn squeeze_scan(
    space: DickeSpace,
    store: &SpectralStore,
    tau_grid: &[f64],
) -> Result<SqueezeScan> {
    if tau_grid.len() < 50 {
        return Err(Error::Argument(format!(
            "squeeze scan needs at least 50 grid points, got {}",
            tau_grid.len()
        )));
    }
    for pair in tau_grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::Argument(
                "tau grid must be strictly increasing".into(),
            ));
        }
    }
    if tau_grid[0] < 0.0 || *tau_grid.last().unwrap() > 0.25 {
        return Err(Error::Argument("tau grid must lie within [0, 0.25]".into()));
    }

    let cache = store.get(space, Generator::HTat)?;
    let ops = CollectiveOperators::new(space);
    let initial = DickeVector::dicke_state(space, 0)?;
    let scale = space.log_n() / space.n_qubits() as f64;

    let y_sq = |tau: f64| -> Result<f64> {
        let state = cache.evolve(tau * scale, &initial)?;
        let mut applied = vec![Complex64::new(0.0, 0.0); space.dim()];
        ops.apply_y(state.amplitudes(), &mut applied);
        Ok(applied.iter().map(|a| a.norm_sqr()).sum())
    };

    let mut y_var = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        y_var.push(y_sq(tau)?);
    }

    let mut best = 0usize;
    for (i, v) in y_var.iter().enumerate() {
        if *v < y_var[best] {
            best = i;
        }
    }

    // Parabolic estimate through the argmin and neighbours, then
    // golden-section on the bracketing interval. When the parabola lands a
    // better point, the bracket tightens around it.
    let (mut lo, mut hi) = if best == 0 {
        (tau_grid[0], tau_grid[1])
    } else if best + 1 == tau_grid.len() {
        (tau_grid[best - 1], tau_grid[best])
    } else {
        (tau_grid[best - 1], tau_grid[best + 1])
    };
    if best > 0 && best + 1 < tau_grid.len() {
        if let Some(vertex) = parabolic_vertex(
            tau_grid[best - 1],
            y_var[best - 1],
            tau_grid[best],
            y_var[best],
            tau_grid[best + 1],
            y_var[best + 1],
        ) {
            let vertex = vertex.clamp(lo, hi);
            if y_sq(vertex)? < y_var[best] {
                let spacing = tau_grid[best] - tau_grid[best - 1];
                lo = (vertex - spacing).max(lo);
                hi = (vertex + spacing).min(hi);
            }
        }
    }

    let (tau_min, y_var_min) = golden_min(lo, hi, 1e-5, y_sq)?;
    // Never report worse than the grid itself.
    let (tau_min, y_var_min) = if y_var[best] < y_var_min {
        (tau_grid[best], y_var[best])
    } else {
        (tau_min, y_var_min)
    };

    Ok(SqueezeScan {
        n_qubits: space.n_qubits(),
        tau: tau_grid.to_vec(),
        y_var,
        tau_min,
        y_var_min,
    })
}

/// Vertex of the parabola through three points, if it is a minimum.
fn parabolic_vertex(x0: f64, y0: f64, x1: f64, y1: f64, x2: f64, y2: f64) -> Option<f64> {
    let d1 = (y1 - y0) / (x1 - x0);
    let d2 = (y2 - y1) / (x2 - x1);
    let curvature = (d2 - d1) / (x2 - x0);
    if curvature <= 0.0 {
        return None;
    }
    Some(0.5 * (x0 + x1 - d1 / curvature))
}

/// Golden-section minimization on [a, b] to the given interval width.
pub(crate) fn golden_min(
    mut a: f64,
    mut b: f64,
    tol: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid)?;
    if f1 < fm && f1 < f2 {
        Ok((x1, f1))
    } else if f2 < fm {
        Ok((x2, f2))
    } else {
        Ok((mid, fm))
    }
}

/// Predicted pulling-away time
/// `tau2 = [ln(c N / theta) - 2 ln(ln N)] / (4 ln N)`.
///
/// The prediction can go nonpositive when `theta` approaches `c N`; callers
/// treat that as out of range.
pub fn tau2_predictor(n_qubits: u32, theta: f64, c: f64) -> Result<f64> {
    if n_qubits < 3 {
        return Err(Error::Argument("predictor needs N >= 3".into()));
    }
    if !theta.is_finite() || theta <= 0.0 {
        return Err(Error::Argument(format!(
            "predictor needs theta > 0, got {theta}"
        )));
    }
    let n = n_qubits as f64;
    let ln_n = n.ln();
    Ok(((c * n / theta).ln() - 2.0 * ln_n.ln()) / (4.0 * ln_n))
}
