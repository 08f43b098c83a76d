//! Minimal library usage: run the encoder once and print the metrics.

use std::sync::Arc;

use spinenc::protocol::{ProtocolMode, ProtocolParams};
use spinenc::{DickeSpace, ProtocolEngine, SpectralStore};

fn main() -> spinenc::Result<()> {
    let n = 256;
    let store = Arc::new(SpectralStore::new());
    let engine = ProtocolEngine::new(DickeSpace::new(n)?, store)?;

    let params = ProtocolParams::new(n, 2.0, 0.05, 0.1046, 0.035)?;
    let trace = engine.run_protocol(&params, ProtocolMode::two_branch_equal())?;
    let report = engine.fidelity_report(&trace)?;

    println!("N = {n}, phi = {:.5}", params.phi());
    println!("epsilon          = {:.4e}", report.epsilon);
    println!("epsilon_reduced  = {:.4e}", report.epsilon_reduced);
    println!(
        "time budget      = {:.5}  ({:.2}% of the CNOT baseline)",
        report.time_budget,
        100.0 * report.t_over_cnot
    );
    Ok(())
}
