//! Shared test oracles, independent of the spectral-cache implementation.
#![allow(dead_code)] // each test binary uses a different subset

use num_complex::Complex64;
use spinenc::linalg::ComplexMatrix;
use spinenc::rng::SplitMix;
use spinenc::{DickeSpace, DickeVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn mat_mul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let n = a.dim();
    let mut out = ComplexMatrix::zeros(n);
    for c in 0..n {
        for k in 0..n {
            let bkc = b.get(k, c);
            if bkc == ZERO {
                continue;
            }
            for r in 0..n {
                let v = out.get(r, c) + a.get(r, k) * bkc;
                out.set(r, c, v);
            }
        }
    }
    out
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, |r, c| {
        if r == c {
            Complex64::new(1.0, 0.0)
        } else {
            ZERO
        }
    })
}

fn inf_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut worst = 0.0f64;
    for r in 0..n {
        let mut row = 0.0;
        for c in 0..n {
            row += a.get(r, c).norm();
        }
        worst = worst.max(row);
    }
    worst
}

/// Dense matrix exponential `exp(factor * H)` by scaling-and-squaring with a
/// Taylor series. Slow and simple on purpose: this is the oracle the
/// spectral propagator is checked against.
pub fn expm(h: &ComplexMatrix, factor: Complex64) -> ComplexMatrix {
    let n = h.dim();
    let scaled0 = ComplexMatrix::from_fn(n, |r, c| h.get(r, c) * factor);
    let norm = inf_norm(&scaled0);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5f64.powi(squarings as i32);
    let a = ComplexMatrix::from_fn(n, |r, c| scaled0.get(r, c) * scale);

    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..=60 {
        term = mat_mul(&term, &a);
        let inv_k = 1.0 / k as f64;
        term = ComplexMatrix::from_fn(n, |r, c| term.get(r, c) * inv_k);
        result = ComplexMatrix::from_fn(n, |r, c| result.get(r, c) + term.get(r, c));
        if inf_norm(&term) < 1e-22 {
            break;
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}

pub fn random_state(space: DickeSpace, rng: &mut SplitMix) -> DickeVector {
    let mut amps: Vec<Complex64> = (0..space.dim())
        .map(|_| Complex64::new(rng.next_gaussian(), rng.next_gaussian()))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in amps.iter_mut() {
        *a /= norm;
    }
    DickeVector::from_amplitudes(space, amps).unwrap()
}

pub fn state_diff_norm(a: &DickeVector, b: &DickeVector) -> f64 {
    a.amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn vec_diff_norm(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}
