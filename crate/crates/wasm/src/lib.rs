//! Browser demo: interactive exploration of the GHZ-encoding protocol.
//!
//! Exposes three operations to a static page:
//!
//! * per-stage Husimi fields of a protocol run (signed two-branch colour map),
//! * the TAT squeezing scan `<Y^2>(tau)` with its minimum,
//! * the final-unsqueeze landscape `epsilon(tau3)` and its optimum,
//!
//! plus the scalar fidelity report for the current parameter set.

use std::sync::Arc;

use wasm_bindgen::prelude::*;

use spinenc::analysis::squeeze_scan;
use spinenc::husimi::husimi_diff;
use spinenc::optimizer::optimize_tau3;
use spinenc::protocol::{time_budget, ProtocolMode, ProtocolParams, StageState, STANDARD_STAGES};
use spinenc::{DickeSpace, ProtocolEngine, SpectralStore};

/// Browser-side cap; factorizations beyond this get slow on one thread.
const MAX_DEMO_QUBITS: u32 = 512;

fn js_err(e: spinenc::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// One ensemble size with its spectral caches, built once per `new`.
#[wasm_bindgen]
pub struct Demo {
    engine: ProtocolEngine,
    store: Arc<SpectralStore>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(n_qubits: u32) -> Result<Demo, JsValue> {
        if n_qubits > MAX_DEMO_QUBITS {
            return Err(JsValue::from_str(&format!(
                "demo supports up to N = {MAX_DEMO_QUBITS}"
            )));
        }
        let space = DickeSpace::new(n_qubits).map_err(js_err)?;
        let store = Arc::new(SpectralStore::new());
        let engine = ProtocolEngine::new(space, Arc::clone(&store)).map_err(js_err)?;
        Ok(Demo { engine, store })
    }

    pub fn n_qubits(&self) -> u32 {
        self.engine.space().n_qubits()
    }

    pub fn stage_label(&self, stage: usize) -> String {
        STANDARD_STAGES
            .get(stage)
            .map(|s| s.to_string())
            .unwrap_or_default()
    }

    /// Fidelity report as a JSON string.
    pub fn encode_report(
        &self,
        theta: f64,
        tau1: f64,
        tau2: f64,
        tau3: f64,
    ) -> Result<String, JsValue> {
        let params = self.params(theta, tau1, tau2, tau3)?;
        let trace = self
            .engine
            .run_protocol(&params, ProtocolMode::two_branch_equal())
            .map_err(js_err)?;
        let report = self.engine.fidelity_report(&trace).map_err(js_err)?;
        Ok(report
            .to_json(env!("CARGO_PKG_VERSION"), "wasm-demo")
            .to_string())
    }

    /// Signed two-branch Husimi field `Q_alpha - Q_beta` after stage
    /// `stage` (0-based), row-major `n_polar x n_azimuth`.
    #[allow(clippy::too_many_arguments)]
    pub fn stage_husimi(
        &self,
        theta: f64,
        tau1: f64,
        tau2: f64,
        tau3: f64,
        stage: usize,
        n_polar: usize,
        n_azimuth: usize,
    ) -> Result<Vec<f64>, JsValue> {
        let params = self.params(theta, tau1, tau2, tau3)?;
        let trace = self
            .engine
            .run_protocol(&params, ProtocolMode::two_branch_equal())
            .map_err(js_err)?;
        let (_, state) = trace
            .stages
            .get(stage)
            .ok_or_else(|| JsValue::from_str("stage index out of range"))?;
        let grid = match state {
            StageState::TwoBranch(cs) => {
                husimi_diff(&cs.branch0, &cs.branch1, n_polar, n_azimuth).map_err(js_err)?
            }
            StageState::Reduced(_) => unreachable!("demo always runs two-branch"),
        };
        Ok(grid.values)
    }

    /// Squeezing scan on [0, 0.2]: returns `[tau..., y_var..., tau_min,
    /// y_var_min]` (two blocks of `count` plus the refined minimum).
    pub fn squeeze_curve(&self, count: usize) -> Result<Vec<f64>, JsValue> {
        let count = count.max(50);
        let grid: Vec<f64> = (0..count)
            .map(|i| 0.2 * i as f64 / (count - 1) as f64)
            .collect();
        let scan = squeeze_scan(self.engine.space(), &self.store, &grid).map_err(js_err)?;
        let mut out = scan.tau;
        out.extend(scan.y_var);
        out.push(scan.tau_min);
        out.push(scan.y_var_min);
        Ok(out)
    }

    /// Infidelity landscape of the final unsqueeze: `count` samples of
    /// `epsilon(tau3)` on [0, 0.15], then the refined `[tau3_opt, eps_opt]`.
    pub fn tau3_curve(
        &self,
        theta: f64,
        tau1: f64,
        tau2: f64,
        count: usize,
    ) -> Result<Vec<f64>, JsValue> {
        let params = self.params(theta, tau1, tau2, 0.0)?;
        let obj = self.engine.tau3_objective(&params).map_err(js_err)?;
        let count = count.max(2);
        let mut out = Vec::with_capacity(count + 2);
        for i in 0..count {
            let tau3 = 0.15 * i as f64 / (count - 1) as f64;
            out.push(obj.epsilon(tau3));
        }
        let best = optimize_tau3(&self.engine, theta, tau1, tau2, (0.0, 0.15)).map_err(js_err)?;
        out.push(best.tau3);
        out.push(best.epsilon);
        Ok(out)
    }

    /// Total interaction time for the parameter set.
    pub fn time_budget(&self, theta: f64, tau1: f64, tau2: f64, tau3: f64) -> Result<f64, JsValue> {
        Ok(time_budget(&self.params(theta, tau1, tau2, tau3)?).total)
    }

    fn params(
        &self,
        theta: f64,
        tau1: f64,
        tau2: f64,
        tau3: f64,
    ) -> Result<ProtocolParams, JsValue> {
        ProtocolParams::new(self.n_qubits(), theta, tau1, tau2, tau3).map_err(js_err)
    }
}
