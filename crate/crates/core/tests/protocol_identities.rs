//! Exact protocol symmetries, checked numerically over random parameter
//! draws: branch symmetry of the two-branch run, the local-rotation-free
//! rewriting, the OAT conjugation identity, and the parallel-CNOT baseline.

mod common;

use std::sync::Arc;

use common::{expm, random_state, state_diff_norm, vec_diff_norm};
use num_complex::Complex64;
use spinenc::fullspace::{evolve_disordered_tat, sample_disorder, FullStateVector};
use spinenc::linalg::ComplexMatrix;
use spinenc::protocol::{cnot_baseline, Block, ControlBranch, ProtocolMode, StageState};
use spinenc::rng::SplitMix;
use spinenc::{DickeSpace, ProtocolEngine, ProtocolParams, SpectralStore};

fn engine(n: u32) -> ProtocolEngine {
    ProtocolEngine::new(DickeSpace::new(n).unwrap(), Arc::new(SpectralStore::new())).unwrap()
}

fn random_params(n: u32, rng: &mut SplitMix) -> ProtocolParams {
    ProtocolParams::new(
        n,
        rng.uniform(0.0, 2.0),
        rng.uniform(0.0, 0.15),
        rng.uniform(0.0, 0.15),
        rng.uniform(0.0, 0.15),
    )
    .unwrap()
}

fn random_amplitudes(rng: &mut SplitMix) -> (Complex64, Complex64) {
    let alpha = Complex64::new(rng.next_gaussian(), rng.next_gaussian());
    let beta = Complex64::new(rng.next_gaussian(), rng.next_gaussian());
    let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
    (alpha / norm, beta / norm)
}

#[test]
fn branch_symmetry_all_residues_mod8() {
    // The phase-fixed f1 equals f0 for every N, not only multiples of 8.
    let mut rng = SplitMix::new(64);
    for n in [3u32, 5, 6, 7, 9, 12, 15] {
        let e = engine(n);
        for _ in 0..5 {
            let p = random_params(n, &mut rng);
            let (alpha, beta) = random_amplitudes(&mut rng);
            let trace = e
                .run_protocol(&p, ProtocolMode::TwoBranch { alpha, beta })
                .unwrap();
            let report = e.fidelity_report(&trace).unwrap();
            assert!(
                (report.f1 - report.f0).norm() < 1e-10,
                "N={n}: f0={:?} f1={:?}",
                report.f0,
                report.f1
            );
        }
    }
}

#[test]
fn two_branch_epsilon_equals_reduced() {
    let mut rng = SplitMix::new(128);
    for n in [16u32, 64] {
        let e = engine(n);
        for _ in 0..50 {
            let p = random_params(n, &mut rng);
            let (alpha, beta) = random_amplitudes(&mut rng);
            let two = e
                .run_protocol(&p, ProtocolMode::TwoBranch { alpha, beta })
                .unwrap();
            let report = e.fidelity_report(&two).unwrap();
            assert!(
                (report.f1 - report.f0).norm() < 1e-10,
                "N={n}: branch overlap mismatch {:.3e}",
                (report.f1 - report.f0).norm()
            );
            assert!(
                (report.epsilon - report.epsilon_reduced).abs() < 1e-10,
                "N={n}: eps {:.6e} vs reduced {:.6e}",
                report.epsilon,
                report.epsilon_reduced
            );

            let reduced = e.run_protocol(&p, ProtocolMode::Reduced).unwrap();
            let reduced_report = e.fidelity_report(&reduced).unwrap();
            assert!((reduced_report.epsilon_reduced - report.epsilon_reduced).abs() < 1e-12);
        }
    }
}

#[test]
fn rewritten_composition_matches_standard() {
    let mut rng = SplitMix::new(256);
    for n in [16u32, 64] {
        let e = engine(n);
        for _ in 0..20 {
            let p = random_params(n, &mut rng);
            let standard = e.run_protocol(&p, ProtocolMode::Reduced).unwrap();
            let rewritten = e.rewritten_protocol(&p, ProtocolMode::Reduced).unwrap();
            let (a, b) = match (standard.final_state(), rewritten.final_state()) {
                (StageState::Reduced(a), StageState::Reduced(b)) => (a, b),
                _ => unreachable!(),
            };
            let diff = state_diff_norm(a, b);
            assert!(diff < 1e-10, "N={n}: rewriting differs by {diff:.3e}");
        }
    }

    // tau3 = 0 degenerates to the same identity with one fewer block.
    let e = engine(16);
    let p = ProtocolParams::new(16, 1.0, 0.05, 0.1, 0.0).unwrap();
    let standard = e.run_protocol(&p, ProtocolMode::Reduced).unwrap();
    let rewritten = e.rewritten_protocol(&p, ProtocolMode::Reduced).unwrap();
    let (a, b) = match (standard.final_state(), rewritten.final_state()) {
        (StageState::Reduced(a), StageState::Reduced(b)) => (a, b),
        _ => unreachable!(),
    };
    assert!(state_diff_norm(a, b) < 1e-10);
}

#[test]
fn oat_conjugation_identity() {
    // RX(pi/2) O(pi/4) RX(-pi/2) = exp(-i pi Y^2 / (16 N)) on random states.
    let mut rng = SplitMix::new(512);
    for n in [16u32, 64] {
        let e = engine(n);
        let space = e.space();
        let half_pi = std::f64::consts::FRAC_PI_2;
        let quarter_pi = std::f64::consts::FRAC_PI_4;
        for _ in 0..10 {
            let psi = random_state(space, &mut rng);
            let via_rotations = e
                .apply_block(Block::RotX(-half_pi), &psi, ControlBranch::Zero)
                .and_then(|s| e.apply_block(Block::Oat(quarter_pi), &s, ControlBranch::Zero))
                .and_then(|s| e.apply_block(Block::RotX(half_pi), &s, ControlBranch::Zero))
                .unwrap();
            let direct = e
                .apply_y_squared_phase(std::f64::consts::PI / (16.0 * n as f64), &psi)
                .unwrap();
            let diff = state_diff_norm(&via_rotations, &direct);
            assert!(
                diff < 1e-10,
                "N={n}: conjugation identity off by {diff:.3e}"
            );
        }
    }
}

#[test]
fn theta_zero_branches_identical_up_to_phases() {
    let mut rng = SplitMix::new(1024);
    for n in [8u32, 33] {
        let e = engine(n);
        let p = ProtocolParams::new(
            n,
            0.0,
            rng.uniform(0.0, 0.15),
            rng.uniform(0.0, 0.15),
            rng.uniform(0.0, 0.15),
        )
        .unwrap();
        let trace = e
            .run_protocol(&p, ProtocolMode::two_branch_equal())
            .unwrap();
        for (label, stage) in &trace.stages {
            if let StageState::TwoBranch(cs) = stage {
                for (a, b) in cs.branch0.amplitudes().iter().zip(cs.branch1.amplitudes()) {
                    assert!(
                        (a.norm() - b.norm()).abs() < 1e-12,
                        "N={n} stage {label}: branch magnitudes differ"
                    );
                }
            }
        }
        let report = e.fidelity_report(&trace).unwrap();
        assert!((report.f0.norm() - report.f1.norm()).abs() < 1e-12);
    }
}

#[test]
fn cnot_baseline_exact_up_to_256() {
    let store = Arc::new(SpectralStore::new());
    for n in [1u32, 2, 3, 5, 7, 8, 16, 33, 64, 100, 256] {
        let report = cnot_baseline(DickeSpace::new(n).unwrap(), Arc::clone(&store)).unwrap();
        assert!(
            report.epsilon <= 1e-10,
            "N={n}: baseline epsilon {:.3e}",
            report.epsilon
        );
        assert!((report.time_budget - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }
}

#[test]
fn krylov_matches_dense_oracle_n6() {
    // Disordered TAT propagator against a dense 64x64 exponential assembled
    // from explicit two-qubit Pauli action.
    let n = 6u32;
    let dim = 1usize << n;
    let coupling = sample_disorder(n, 0.25, 99).unwrap();

    // H' = sum_{i<j} 2 J_ij (X_i Y_j + Y_i X_j), built element by element.
    let mut h = ComplexMatrix::zeros(dim);
    for col in 0..dim {
        for i in 0..n {
            for j in (i + 1)..n {
                let (bi, bj) = (1usize << i, 1usize << j);
                let coeff = 2.0 * coupling.coupling(i, j);
                let onsite = (col & bi != 0, col & bj != 0);
                // X_i Y_j + Y_i X_j maps |00> -> 2i |11>, |11> -> -2i |00>
                let target = col ^ bi ^ bj;
                match onsite {
                    (false, false) => {
                        let v = h.get(target, col) + Complex64::new(0.0, 2.0 * coeff);
                        h.set(target, col, v);
                    }
                    (true, true) => {
                        let v = h.get(target, col) + Complex64::new(0.0, -2.0 * coeff);
                        h.set(target, col, v);
                    }
                    _ => {}
                }
            }
        }
    }

    let tau = 0.12;
    let scale = (n as f64).ln() / n as f64;
    let u = expm(&h, Complex64::new(0.0, -tau * scale));

    let mut rng = SplitMix::new(3);
    let mut amps: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.next_gaussian(), rng.next_gaussian()))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in amps.iter_mut() {
        *a /= norm;
    }
    let psi = FullStateVector::from_amplitudes(n, amps.clone()).unwrap();

    let fast = evolve_disordered_tat(&coupling, tau, &psi).unwrap();
    let slow = u.mul_vec(&amps);
    let diff = vec_diff_norm(fast.amplitudes(), &slow);
    assert!(diff < 1e-10, "krylov vs dense oracle: {diff:.3e}");
}
