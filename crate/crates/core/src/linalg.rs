//! Dense linear-algebra kernels used by the spectral propagator.
#![allow(clippy::needless_range_loop)] // index loops mirror the math throughout
//!
//! Two routines do all the work:
//!
//! * [`tridiag_ql`] — implicit-shift QL iteration for a real symmetric
//!   tridiagonal matrix with eigenvector accumulation (EISPACK `tql2`
//!   lineage). Every generator the protocol uses reduces to this, because
//!   the collective operators are banded and parity-structured.
//! * [`hermitian_tridiagonalize`] — complex Householder reduction of a dense
//!   Hermitian matrix to real tridiagonal form, for user-supplied generators
//!   and cross-checks.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square complex matrix, column-major.
#[derive(Clone, Debug)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for c in 0..n {
            for r in 0..n {
                m.data[r + c * n] = f(r, c);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r + c * self.n]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r + c * self.n] = v;
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    /// max_{r,c} |A[r,c] - conj(A[c,r])|
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.n {
            for r in 0..=c {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            let xc = x[c];
            let col = &self.data[c * n..(c + 1) * n];
            for r in 0..n {
                y[r] += col[r] * xc;
            }
        }
        y
    }
}

/// Rectangular real matrix, column-major.
#[derive(Clone, Debug)]
pub(crate) struct RealMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i + i * n] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r + c * self.n_rows]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r + c * self.n_rows] = v;
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_rows..(c + 1) * self.n_rows]
    }
}

/// Implicit-shift QL for a real symmetric tridiagonal matrix.
///
/// `d` holds the diagonal on entry and the (unsorted) eigenvalues on exit.
/// `e[i]` couples rows `i` and `i+1`; `e` must have the same length as `d`
/// (the last slot is workspace). The orthogonal transform is accumulated
/// into the columns of `z`, so passing the identity yields eigenvectors.
pub(crate) fn tridiag_ql(d: &mut [f64], e: &mut [f64], z: &mut RealMatrix) -> Result<()> {
    let n = d.len();
    assert_eq!(
        e.len(),
        n,
        "off-diagonal workspace must match diagonal length"
    );
    assert_eq!(z.n_cols, n, "accumulator column count must match");
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let rows = z.n_rows;

    for l in 0..n {
        let mut iter = 0usize;
        loop {
            // Locate a negligible off-diagonal element.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::Numeric(format!(
                    "tridiagonal QL failed to converge at index {l} after 50 iterations \
                     (n = {n}, residual off-diagonal {:.3e})",
                    e[l].abs()
                )));
            }

            // Wilkinson-style implicit shift from the leading 2x2.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0f64;
            let mut c = 1.0f64;
            let mut p = 0.0f64;
            let mut underflow = false;

            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Deflate and retry; rare underflow path.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                // Apply the rotation to columns i and i+1 of the accumulator.
                let (lo, hi) = z.data.split_at_mut((i + 1) * rows);
                let zi = &mut lo[i * rows..(i + 1) * rows];
                let zi1 = &mut hi[..rows];
                for k in 0..rows {
                    f = zi1[k];
                    zi1[k] = s * zi[k] + c * f;
                    zi[k] = c * zi[k] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Sort eigenpairs ascending by eigenvalue, permuting the accumulator columns.
pub(crate) fn sort_eigenpairs(d: &mut [f64], z: &mut RealMatrix) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let sorted_d: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    d.copy_from_slice(&sorted_d);
    let rows = z.n_rows;
    let mut sorted = vec![0.0; z.data.len()];
    for (new_c, &old_c) in order.iter().enumerate() {
        sorted[new_c * rows..(new_c + 1) * rows].copy_from_slice(z.col(old_c));
    }
    z.data = sorted;
}

/// Fix each real eigenvector's sign so its largest-magnitude component is
/// positive. Keeps caches reproducible across runs.
pub(crate) fn fix_real_column_signs(z: &mut RealMatrix) {
    let rows = z.n_rows;
    for c in 0..z.n_cols {
        let col = &mut z.data[c * rows..(c + 1) * rows];
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for (k, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = k;
            }
        }
        if col[best] < 0.0 {
            for v in col.iter_mut() {
                *v = -*v;
            }
        }
    }
}

/// Householder reduction of a Hermitian matrix to real symmetric tridiagonal
/// form: `A = Q T Q†`. Returns `(diag, offdiag, Q)`; `offdiag[i]` couples
/// rows `i` and `i+1` (last slot zero).
pub(crate) fn hermitian_tridiagonalize(a: &ComplexMatrix) -> (Vec<f64>, Vec<f64>, ComplexMatrix) {
    let n = a.dim();
    let mut work = a.clone();
    let mut diag = vec![0.0f64; n];
    let mut off = vec![0.0f64; n];
    // Householder vectors (supported on rows k+1..) and their tau factors.
    let mut reflectors: Vec<(usize, Complex64, Vec<Complex64>)> = Vec::new();

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1; // length of the column below the diagonal
        let alpha = work.get(k + 1, k);
        let mut tail_sq = 0.0f64;
        for r in k + 2..n {
            tail_sq += work.get(r, k).norm_sqr();
        }

        if tail_sq == 0.0 && alpha.im == 0.0 {
            off[k] = alpha.re;
            continue;
        }

        let norm = (alpha.norm_sqr() + tail_sq).sqrt();
        let beta = if alpha.re >= 0.0 { -norm } else { norm };
        let tau = Complex64::new((beta - alpha.re) / beta, alpha.im / beta);
        // v = [1, x_tail / (alpha - beta)]
        let denom = alpha - beta;
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        v[0] = Complex64::new(1.0, 0.0);
        for r in k + 2..n {
            v[r - k - 1] = work.get(r, k) / denom;
        }

        // Two-sided update of the trailing block B = work[k+1.., k+1..]:
        // u = B v;  w = conj(tau) u - (|tau|^2 (v†u)/2) v;  B -= v w† + w v†.
        let mut u = vec![Complex64::new(0.0, 0.0); m];
        for c in 0..m {
            let vc = v[c];
            if vc.norm_sqr() == 0.0 {
                continue;
            }
            for r in 0..m {
                u[r] += work.get(k + 1 + r, k + 1 + c) * vc;
            }
        }
        let vtu: Complex64 = v.iter().zip(u.iter()).map(|(vi, ui)| vi.conj() * ui).sum();
        let corr = 0.5 * tau.norm_sqr() * vtu;
        let tconj = tau.conj();
        let w: Vec<Complex64> = u
            .iter()
            .zip(v.iter())
            .map(|(ui, vi)| tconj * ui - corr * vi)
            .collect();
        for c in 0..m {
            for r in 0..m {
                let upd = v[r] * w[c].conj() + w[r] * v[c].conj();
                let cur = work.get(k + 1 + r, k + 1 + c);
                work.set(k + 1 + r, k + 1 + c, cur - upd);
            }
        }

        // Column k collapses to beta e1 (stored), row k by symmetry.
        off[k] = beta;
        work.set(k + 1, k, Complex64::new(beta, 0.0));
        for r in k + 2..n {
            work.set(r, k, Complex64::new(0.0, 0.0));
        }
        reflectors.push((k, tau, v));
    }

    if n >= 2 {
        // Remaining 2x2 corner: make the last off-diagonal real by a phase.
        let alpha = work.get(n - 1, n - 2);
        if alpha.im != 0.0 {
            let r = alpha.norm();
            let phase = alpha / r; // |phase| = 1
            off[n - 2] = r;
            // Conjugate by diag(1, .., 1, conj(phase)): row/col n-1 scale.
            reflectors.push((usize::MAX, phase, Vec::new()));
        } else {
            off[n - 2] = alpha.re;
        }
    }
    for i in 0..n {
        diag[i] = work.get(i, i).re;
    }
    off[n.saturating_sub(1)] = 0.0;

    // Accumulate Q = H_0† H_1† ... (right-to-left application to identity).
    let mut q = ComplexMatrix::from_fn(n, |r, c| {
        if r == c {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    for (k, tau, v) in reflectors.iter().rev() {
        if *k == usize::MAX {
            // Phase fix on the last row: Q <- P Q with P = diag(.., phase).
            for c in 0..n {
                let val = q.get(n - 1, c) * *tau;
                q.set(n - 1, c, val);
            }
            continue;
        }
        let base = k + 1;
        let m = v.len();
        let tconj = tau.conj();
        for c in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for r in 0..m {
                dot += v[r].conj() * q.get(base + r, c);
            }
            if dot.norm_sqr() == 0.0 {
                continue;
            }
            let scale = tconj * dot;
            for r in 0..m {
                let cur = q.get(base + r, c);
                q.set(base + r, c, cur - scale * v[r]);
            }
        }
    }

    (diag, off, q)
}

/// Full complex matrix times real matrix (`A * B`), for assembling
/// eigenvectors after the tridiagonal solve.
pub(crate) fn cmat_mul_rmat(a: &ComplexMatrix, b: &RealMatrix) -> ComplexMatrix {
    let n = a.dim();
    assert_eq!(b.n_rows, n);
    assert_eq!(b.n_cols, n);
    let mut out = ComplexMatrix::zeros(n);
    for c in 0..n {
        let bcol = b.col(c);
        for (j, &bj) in bcol.iter().enumerate() {
            if bj == 0.0 {
                continue;
            }
            let acol = &a.data[j * n..(j + 1) * n];
            let ocol = &mut out.data[c * n..(c + 1) * n];
            for r in 0..n {
                ocol[r] += acol[r] * bj;
            }
        }
    }
    out
}
