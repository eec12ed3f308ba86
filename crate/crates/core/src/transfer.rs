//! Applying stored angles to new instances and summarizing how well they do.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::encoding::{encode, IsingModel, PenaltyConfig};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::optimizer::OptimizerConfig;
use crate::oracle::{brute_force, GroundTruth};
use crate::problems::{ProblemInstance, ProblemKind};
use crate::simulator::{probability_of, QaoaParams, QaoaSimulator};

/// Where a bank entry came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_kind: ProblemKind,
    pub size: usize,
    pub seed: u64,
    pub n_qubits: usize,
    pub delta: f64,
    pub budget_multiplier: usize,
    pub penalties: PenaltyConfig,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankEntry {
    pub params: QaoaParams,
    pub provenance: Provenance,
}

/// Labelled parameter sets, e.g. `"bpp3"`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterBank {
    pub entries: BTreeMap<String, BankEntry>,
}

impl ParameterBank {
    /// Insert or replace `label`.
    pub fn insert(&mut self, label: impl Into<String>, entry: BankEntry) {
        self.entries.insert(label.into(), entry);
    }

    pub fn get(&self, label: &str) -> Result<&BankEntry> {
        self.entries
            .get(label)
            .ok_or_else(|| Error::Input(format!("no bank entry labelled {label:?}")))
    }

    /// Common layer count, or an error when entries disagree.
    pub fn p(&self) -> Result<Option<usize>> {
        let mut ps = self.entries.values().map(|e| e.params.p());
        let Some(first) = ps.next() else { return Ok(None) };
        if ps.any(|p| p != first) {
            return Err(Error::Config("bank entries have differing layer counts".into()));
        }
        Ok(Some(first))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlMetrics {
    pub prob_optimal: f64,
    pub expectation: f64,
    pub grover_baseline: f64,
    pub n_qubits: usize,
    pub ground_energy: f64,
    pub n_ground_states: usize,
}

/// Quadratic-speedup guide value `2^(-n/2)`.
pub fn grover_baseline(n_qubits: usize) -> f64 {
    (-(n_qubits as f64) / 2.0).exp2()
}

/// Exact metrics for `params` on a normalized model with known ground states.
pub fn transfer_run(params: &QaoaParams, model: &IsingModel, ground: &GroundTruth) -> Result<TlMetrics> {
    if ground.ground_states.is_empty() {
        return Err(Error::Precondition("ground-state set is empty".into()));
    }
    let sim = QaoaSimulator::new(model)?;
    let state = sim.evolve(params);
    Ok(TlMetrics {
        prob_optimal: probability_of(&state, &ground.ground_states)?,
        expectation: sim.expectation(&state)?,
        grover_baseline: grover_baseline(model.n_qubits),
        n_qubits: model.n_qubits,
        ground_energy: ground.ground_energy,
        n_ground_states: ground.degeneracy(),
    })
}

/// One target of a sweep; exactly one of `metrics` / `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub kind: ProblemKind,
    pub size: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metrics: Option<TlMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Per `(kind, size)` statistics of `prob_optimal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub kind: ProblemKind,
    pub size: usize,
    pub n_qubits: usize,
    pub n_instances: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub grover: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub label: String,
    pub outcomes: Vec<InstanceOutcome>,
    pub rows: Vec<SummaryRow>,
}

impl SweepReport {
    pub const CSV_HEADER: &'static str = "kind,size,n_qubits,n_instances,mean,median,q1,q3,grover";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.kind, r.size, r.n_qubits, r.n_instances, r.mean, r.median, r.q1, r.q3, r.grover
            )
            .unwrap();
        }
        out
    }

    pub fn row(&self, kind: ProblemKind, size: usize) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.kind == kind && r.size == size)
    }
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

fn evaluate_target(params: &QaoaParams, target: &ProblemInstance, penalties: &PenaltyConfig) -> Result<TlMetrics> {
    let model = encode(target, penalties)?;
    crate::simulator::check_qubits(model.n_qubits)?;
    let ground = brute_force(&model)?;
    transfer_run(params, &model, &ground)
}

/// Run `params` on every target, then summarize per `(kind, size)`.
///
/// Penalties missing from `penalties` fall back to the per-kind defaults.
/// A failing target is recorded and the sweep goes on.
pub fn sweep(
    label: &str,
    params: &QaoaParams,
    targets: &[ProblemInstance],
    penalties: &BTreeMap<ProblemKind, PenaltyConfig>,
) -> SweepReport {
    sweep_with_exec(label, params, targets, penalties, Exec::default())
}

pub fn sweep_with_exec(
    label: &str,
    params: &QaoaParams,
    targets: &[ProblemInstance],
    penalties: &BTreeMap<ProblemKind, PenaltyConfig>,
    exec: Exec,
) -> SweepReport {
    let outcomes = exec::map_items(exec, targets, |t| {
        let pen = penalties
            .get(&t.kind())
            .copied()
            .unwrap_or_else(|| PenaltyConfig::defaults_for(t.kind()));
        let result = evaluate_target(params, t, &pen);
        if let Err(e) = &result {
            log::warn!("{} size {} seed {}: {e}", t.kind(), t.size(), t.seed());
        }
        let (metrics, error) = match result {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        };
        InstanceOutcome {
            kind: t.kind(),
            size: t.size(),
            seed: t.seed(),
            metrics,
            error,
        }
    });
    let rows = summarize(&outcomes);
    SweepReport {
        label: label.to_string(),
        outcomes,
        rows,
    }
}

/// One row per (kind, size) with at least one successful instance; failed
/// instances stay visible in the outcomes only.
pub fn summarize(outcomes: &[InstanceOutcome]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(ProblemKind, usize), Vec<f64>> = BTreeMap::new();
    for o in outcomes {
        let entry = groups.entry((o.kind, o.size)).or_default();
        if let Some(m) = &o.metrics {
            entry.push(m.prob_optimal);
        }
    }
    groups
        .into_iter()
        .filter(|(_, probs)| !probs.is_empty())
        .map(|((kind, size), mut probs)| {
            probs.sort_by(f64::total_cmp);
            let n_qubits = kind.n_vars(size);
            let mean = probs.iter().sum::<f64>() / probs.len() as f64;
            SummaryRow {
                kind,
                size,
                n_qubits,
                n_instances: probs.len(),
                mean,
                median: quantile(&probs, 0.5),
                q1: quantile(&probs, 0.25),
                q3: quantile(&probs, 0.75),
                grover: grover_baseline(n_qubits),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Assignment;
    use crate::problems::generate;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grover_values() {
        assert_eq!(grover_baseline(12), 0.015625);
        assert_eq!(grover_baseline(4), 0.25);
        assert_abs_diff_eq!(grover_baseline(20), 9.765625e-4, epsilon = 1e-15);
    }

    #[test]
    fn zero_params_give_uniform_probability() {
        let inst = generate(ProblemKind::Mis, 6, 3).unwrap();
        let m = encode(&inst, &PenaltyConfig::default()).unwrap();
        let gt = brute_force(&m).unwrap();
        let metrics = transfer_run(&QaoaParams::zeros(3), &m, &gt).unwrap();
        assert_abs_diff_eq!(metrics.prob_optimal, gt.degeneracy() as f64 / 64.0, epsilon = 1e-14);
        assert_eq!(metrics.grover_baseline, 0.125);
    }

    #[test]
    fn zero_hamiltonian_is_always_solved() {
        let m = IsingModel::zeros(4);
        let gt = brute_force(&m).unwrap();
        let params = QaoaParams::new(vec![0.3, 1.1], vec![-0.4, 2.0]).unwrap();
        let metrics = transfer_run(&params, &m, &gt).unwrap();
        assert_abs_diff_eq!(metrics.prob_optimal, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_ground_set_is_rejected() {
        let gt = GroundTruth {
            ground_energy: 0.0,
            ground_states: Vec::<Assignment>::new(),
            energy_histogram: None,
        };
        assert!(transfer_run(&QaoaParams::zeros(1), &IsingModel::zeros(2), &gt).is_err());
    }

    #[test]
    fn empty_sweep_is_empty() {
        let r = sweep("x", &QaoaParams::zeros(1), &[], &BTreeMap::new());
        assert!(r.rows.is_empty() && r.outcomes.is_empty());
        assert_eq!(r.to_csv(), format!("{}\n", SweepReport::CSV_HEADER));
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
    }

    #[test]
    fn failing_target_is_recorded() {
        let ok = generate(ProblemKind::Mis, 4, 1).unwrap();
        let bad = generate(ProblemKind::Kp, 4, 1).unwrap();
        let mut pens = BTreeMap::new();
        pens.insert(ProblemKind::Kp, PenaltyConfig::default());
        let r = sweep("x", &QaoaParams::zeros(1), &[ok, bad], &pens);
        assert!(r.outcomes[0].metrics.is_some());
        assert!(r.outcomes[1].error.as_deref().unwrap().contains("lambda1"));
        assert!(r.row(ProblemKind::Kp, 4).is_none());
    }

    #[test]
    fn bank_json_and_p_consistency() {
        let prov = Provenance {
            source_kind: ProblemKind::Bpp,
            size: 3,
            seed: 1,
            n_qubits: 12,
            delta: 0.7,
            budget_multiplier: 20,
            penalties: PenaltyConfig::defaults_for(ProblemKind::Bpp),
            optimizer: OptimizerConfig::default(),
        };
        let mut bank = ParameterBank::default();
        bank.insert(
            "a",
            BankEntry {
                params: QaoaParams::zeros(2),
                provenance: prov.clone(),
            },
        );
        assert_eq!(bank.p().unwrap(), Some(2));
        assert_eq!(ParameterBank::from_json(&bank.to_json().unwrap()).unwrap(), bank);
        bank.insert(
            "b",
            BankEntry {
                params: QaoaParams::zeros(3),
                provenance: prov,
            },
        );
        assert!(bank.p().is_err());
        assert!(bank.get("missing").is_err());
    }
}
