//! Linear-ramp initialization and derivative-free angle optimization.

use std::cell::RefCell;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::encoding::IsingModel;
use crate::error::{Error, Result};
use crate::simulator::{QaoaParams, QaoaSimulator};

/// Ramp height used when none is configured.
pub const DEFAULT_DELTA: f64 = 0.7;
/// Evaluation budget per (qubit x layer).
pub const DEFAULT_BUDGET_MULTIPLIER: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Hard cap on expectation evaluations.
    pub max_evals: usize,
    /// Initial trust-region radius.
    pub initial_step: f64,
    /// Final trust-region radius; the search stops once it is reached.
    pub tolerance: f64,
    /// Recorded for provenance. The search itself is deterministic.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_evals: 1000,
            initial_step: 0.1,
            tolerance: 1e-4,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    /// `multiplier * n_qubits * p` evaluations.
    pub fn with_budget(n_qubits: usize, p: usize, multiplier: usize) -> Self {
        Self {
            max_evals: multiplier * n_qubits * p,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.max_evals == 0 {
            return Err(Error::Config("max_evals must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::Config(format!(
                "initial_step must be positive, got {}",
                self.initial_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub eval_index: usize,
    pub params: QaoaParams,
    pub expectation: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OptTrace {
    pub entries: Vec<TraceEntry>,
}

impl OptTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lowest-expectation entry; the earliest wins ties.
    pub fn best(&self) -> Option<&TraceEntry> {
        self.entries
            .iter()
            .fold(None, |best: Option<&TraceEntry>, e| match best {
                Some(b) if b.expectation <= e.expectation => Some(b),
                _ => Some(e),
            })
    }

    /// `eval_index,expectation,gamma_0..,beta_0..`
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let p = self.entries.first().map(|e| e.params.p()).unwrap_or(0);
        out.push_str("eval_index,expectation");
        for i in 0..p {
            write!(out, ",gamma_{i}").unwrap();
        }
        for i in 0..p {
            write!(out, ",beta_{i}").unwrap();
        }
        out.push('\n');
        for e in &self.entries {
            write!(out, "{},{}", e.eval_index, e.expectation).unwrap();
            for v in e.params.to_flat() {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Annealing-style ramp sampled at layer midpoints `f_i = (i + 0.5) / p`:
/// `gamma_i = delta f_i`, `beta_i = delta (1 - f_i)`.
pub fn linear_ramp(p: usize, delta: f64) -> Result<QaoaParams> {
    if p == 0 {
        return Err(Error::Input("linear ramp needs p >= 1".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::Input(format!("ramp height must be positive, got {delta}")));
    }
    let f = |i: usize| (i as f64 + 0.5) / p as f64;
    QaoaParams::new(
        (0..p).map(|i| delta * f(i)).collect(),
        (0..p).map(|i| delta * (1.0 - f(i))).collect(),
    )
}

/// Minimize the energy expectation with COBYLA starting from `init`.
///
/// Running out of budget is not an error; the best point seen is returned.
pub fn optimize(model: &IsingModel, init: &QaoaParams, cfg: &OptimizerConfig) -> Result<(QaoaParams, OptTrace)> {
    cfg.validate()?;
    let sim = QaoaSimulator::new(model)?;
    let trace = RefCell::new(OptTrace::default());
    let bad_value = RefCell::new(None::<f64>);

    let objective = |x: &[f64], _: &mut ()| -> f64 {
        let mut t = trace.borrow_mut();
        if t.len() >= cfg.max_evals || bad_value.borrow().is_some() {
            return t.best().map_or(f64::MAX, |b| b.expectation);
        }
        let params = QaoaParams::from_flat(x).expect("dimension fixed by the initial point");
        let value = sim
            .expectation(&sim.evolve(&params))
            .expect("state built by the same simulator");
        if !value.is_finite() {
            *bad_value.borrow_mut() = Some(value);
            return f64::MAX;
        }
        let eval_index = t.len();
        t.entries.push(TraceEntry {
            eval_index,
            params,
            expectation: value,
        });
        value
    };

    let x0 = init.to_flat();
    let bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); x0.len()];
    let cons: Vec<&dyn cobyla::Func<()>> = Vec::new();
    let stop = cobyla::StopTols {
        xtol_abs: vec![cfg.tolerance; x0.len()],
        ..cobyla::StopTols::default()
    };
    let outcome = cobyla::minimize(
        objective,
        &x0,
        &bounds,
        &cons,
        (),
        cfg.max_evals,
        cobyla::RhoBeg::All(cfg.initial_step),
        Some(stop),
    );
    if let Err((status, _, _)) = outcome {
        log::debug!("cobyla stopped early: {status:?}");
    }

    if let Some(v) = bad_value.into_inner() {
        return Err(Error::Numeric(format!("expectation evaluated to {v}")));
    }
    let trace = trace.into_inner();
    let best = trace
        .best()
        .map(|b| b.params.clone())
        .ok_or_else(|| Error::Numeric("optimizer made no evaluations".into()))?;
    Ok((best, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ramp_midpoint_single_layer() {
        let r = linear_ramp(1, 1.0).unwrap();
        assert_eq!(r.gammas, vec![0.5]);
        assert_eq!(r.betas, vec![0.5]);
    }

    #[test]
    fn ramp_ten_layers() {
        let r = linear_ramp(10, 0.7).unwrap();
        assert_abs_diff_eq!(r.gammas[0], 0.035, epsilon = 1e-15);
        assert_abs_diff_eq!(r.betas[0], 0.665, epsilon = 1e-15);
        assert_abs_diff_eq!(r.gammas[9], 0.665, epsilon = 1e-15);
        assert_abs_diff_eq!(r.betas[9], 0.035, epsilon = 1e-15);
        for i in 0..10 {
            assert_abs_diff_eq!(r.gammas[i] + r.betas[i], 0.7, epsilon = 1e-15);
            assert_abs_diff_eq!(r.gammas[i], r.betas[9 - i], epsilon = 1e-15);
        }
        assert!(r.gammas.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ramp_rejects_bad_inputs() {
        assert!(linear_ramp(0, 0.7).is_err());
        assert!(linear_ramp(3, 0.0).is_err());
    }

    #[test]
    fn flat_model_returns_init() {
        let m = IsingModel::zeros(3);
        let init = linear_ramp(2, 0.7).unwrap();
        let (best, trace) = optimize(
            &m,
            &init,
            &OptimizerConfig {
                max_evals: 50,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(best, init);
        assert_eq!(trace.best().unwrap().expectation, 0.0);
    }

    #[test]
    fn respects_budget_and_reports_minimum() {
        let m = IsingModel::from_parts(3, [(0, 1, 1.0), (1, 2, -0.5)], vec![0.3, -1.0, 0.2], 0.0).unwrap();
        let init = linear_ramp(2, 0.7).unwrap();
        let cfg = OptimizerConfig {
            max_evals: 17,
            ..Default::default()
        };
        let (best, trace) = optimize(&m, &init, &cfg).unwrap();
        assert!(trace.len() <= 17);
        let min = trace
            .entries
            .iter()
            .map(|e| e.expectation)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(trace.best().unwrap().expectation, min);
        assert_eq!(trace.best().unwrap().params, best);
        assert!(min <= trace.entries[0].expectation);
        assert_eq!(trace.entries[0].params, init);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let m = IsingModel::zeros(1);
        let init = QaoaParams::zeros(1);
        let cfg = OptimizerConfig {
            max_evals: 0,
            ..Default::default()
        };
        assert!(matches!(optimize(&m, &init, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn trace_csv_layout() {
        let m = IsingModel::from_parts(1, [], vec![1.0], 0.0).unwrap();
        let (_, trace) = optimize(
            &m,
            &linear_ramp(2, 0.7).unwrap(),
            &OptimizerConfig {
                max_evals: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "eval_index,expectation,gamma_0,gamma_1,beta_0,beta_1"
        );
        assert_eq!(lines.count(), trace.len());
    }
}
