//! End-to-end experiment drivers and their persisted records.
//!
//! A record carries the full configuration and the bank entries it used,
//! so [`replay`] reproduces it exactly (the simulation is exact and every
//! random draw is seeded).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::encoding::{encode, PenaltyConfig};
use crate::error::{Error, Result};
use crate::mitigation::{mitigate, MitigationReport};
use crate::optimizer::{linear_ramp, optimize, OptTrace, OptimizerConfig};
use crate::oracle::brute_force;
use crate::problems::{generate, ProblemInstance, ProblemKind};
use crate::simulator::{probability_of, sample, QaoaParams, QaoaSimulator, SampleSet};
use crate::transfer::{self, BankEntry, InstanceOutcome, ParameterBank, Provenance, SummaryRow};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Default penalties for `kind` with any explicit overrides applied.
pub fn penalties_for(kind: ProblemKind, overrides: &PenaltyConfig) -> PenaltyConfig {
    if kind == ProblemKind::Maxcut {
        return PenaltyConfig::default();
    }
    PenaltyConfig::defaults_for(kind).overridden_by(overrides)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfOptimization {
    pub entry: BankEntry,
    pub init_expectation: f64,
    pub final_expectation: f64,
    pub init_prob_optimal: f64,
    pub final_prob_optimal: f64,
    pub trace: OptTrace,
}

/// Linear-ramp start, then COBYLA with `budget_multiplier * n_qubits * p`
/// evaluations. A zero multiplier returns the ramp unchanged.
pub fn self_optimize(
    instance: &ProblemInstance,
    penalties: &PenaltyConfig,
    p: usize,
    delta: f64,
    budget_multiplier: usize,
    base: &OptimizerConfig,
) -> Result<SelfOptimization> {
    let model = encode(instance, penalties)?;
    let sim = QaoaSimulator::new(&model)?;
    let ground = brute_force(&model)?;
    let init = linear_ramp(p, delta)?;
    let score = |params: &QaoaParams| -> Result<(f64, f64)> {
        let state = sim.evolve(params);
        Ok((sim.expectation(&state)?, probability_of(&state, &ground.ground_states)?))
    };
    let (init_expectation, init_prob_optimal) = score(&init)?;

    let cfg = OptimizerConfig {
        max_evals: budget_multiplier * model.n_qubits * p,
        ..base.clone()
    };
    let (best, trace) = if cfg.max_evals == 0 {
        (init.clone(), OptTrace::default())
    } else {
        optimize(&model, &init, &cfg)?
    };
    let (final_expectation, final_prob_optimal) = score(&best)?;

    Ok(SelfOptimization {
        entry: BankEntry {
            params: best,
            provenance: Provenance {
                source_kind: instance.kind(),
                size: instance.size(),
                seed: instance.seed(),
                n_qubits: model.n_qubits,
                delta,
                budget_multiplier,
                penalties: *penalties,
                optimizer: cfg,
            },
        },
        init_expectation,
        final_expectation,
        init_prob_optimal,
        final_prob_optimal,
        trace,
    })
}

/// `n_seeds` instances per size, with seeds `seed_base..seed_base + n_seeds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub kind: ProblemKind,
    pub sizes: Vec<usize>,
    pub n_seeds: usize,
    pub seed_base: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub entry_label: String,
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub penalty_overrides: PenaltyConfig,
    pub risk_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub artifact_version: String,
    /// Unix seconds; `None` when the caller asked for an unstamped record.
    pub created_unix: Option<u64>,
    pub config: TransferConfig,
    pub bank_entries: BTreeMap<String, BankEntry>,
    pub outcomes: Vec<InstanceOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn summary_csv(&self) -> String {
        transfer::SweepReport {
            label: self.config.entry_label.clone(),
            outcomes: Vec::new(),
            rows: self.summary.clone(),
        }
        .to_csv()
    }
}

/// Apply a bank entry to every target in `config`.
pub fn run_transfer(
    config: &TransferConfig,
    bank: &ParameterBank,
    created_unix: Option<u64>,
) -> Result<ExperimentRecord> {
    let entry = bank.get(&config.entry_label)?.clone();

    let mut slots: Vec<std::result::Result<ProblemInstance, InstanceOutcome>> = Vec::new();
    for spec in &config.targets {
        for &size in &spec.sizes {
            for k in 0..spec.n_seeds as u64 {
                let seed = spec.seed_base + k;
                slots.push(match generate(spec.kind, size, seed) {
                    Ok(ProblemInstance::Po(po)) => Ok(ProblemInstance::Po(po.with_risk_factor(config.risk_factor))),
                    Ok(inst) => Ok(inst),
                    Err(e) => Err(InstanceOutcome {
                        kind: spec.kind,
                        size,
                        seed,
                        metrics: None,
                        error: Some(e.to_string()),
                    }),
                });
            }
        }
    }
    let instances: Vec<ProblemInstance> = slots.iter().filter_map(|s| s.as_ref().ok().cloned()).collect();
    let penalties: BTreeMap<ProblemKind, PenaltyConfig> = ProblemKind::ALL
        .iter()
        .map(|&k| (k, penalties_for(k, &config.penalty_overrides)))
        .collect();
    let report = transfer::sweep(&config.entry_label, &entry.params, &instances, &penalties);

    let mut swept = report.outcomes.into_iter();
    let outcomes: Vec<InstanceOutcome> = slots
        .into_iter()
        .map(|slot| match slot {
            Ok(_) => swept.next().expect("one outcome per instance"),
            Err(failed) => failed,
        })
        .collect();
    let summary = transfer::summarize(&outcomes);

    let mut bank_entries = BTreeMap::new();
    bank_entries.insert(config.entry_label.clone(), entry);
    Ok(ExperimentRecord {
        artifact_version: ARTIFACT_VERSION.to_string(),
        created_unix,
        config: config.clone(),
        bank_entries,
        outcomes,
        summary,
    })
}

/// Re-run a record from its own config and bank snapshot.
pub fn replay(record: &ExperimentRecord) -> Result<ExperimentRecord> {
    let bank = ParameterBank {
        entries: record.bank_entries.clone(),
    };
    run_transfer(&record.config, &bank, record.created_unix)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub kind: ProblemKind,
    pub size: usize,
    pub instance_seed: u64,
    pub entry_label: String,
    pub n_qubits: usize,
    pub shots: u64,
    pub sample_seed: u64,
    /// Exact `probability(x*)` of the ideal state.
    pub ideal_prob_optimal: f64,
    pub raw_optimal_fraction: f64,
    pub counts: SampleSet,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mitigated_counts: Option<SampleSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mitigation: Option<MitigationReport>,
}

/// Sample the QAOA state of `params` on `instance`, optionally mitigated.
#[allow(clippy::too_many_arguments)]
pub fn run_sampling(
    instance: &ProblemInstance,
    penalties: &PenaltyConfig,
    entry_label: &str,
    params: &QaoaParams,
    shots: u64,
    seed: u64,
    with_mitigation: bool,
) -> Result<SampleRecord> {
    if shots == 0 {
        return Err(Error::Input("shots must be at least 1".into()));
    }
    let model = encode(instance, penalties)?;
    let sim = QaoaSimulator::new(&model)?;
    let ground = brute_force(&model)?;
    let state = sim.evolve(params);
    let counts = sample(&state, shots, seed)?;
    let raw_optimal_fraction = ground
        .ground_states
        .iter()
        .map(|g| counts.count_of(&g.to_string()))
        .sum::<u64>() as f64
        / shots as f64;
    let (mitigated_counts, mitigation) = if with_mitigation {
        let (m, r) = mitigate(&counts, &model, &ground)?;
        (Some(m), Some(r))
    } else {
        (None, None)
    };
    Ok(SampleRecord {
        kind: instance.kind(),
        size: instance.size(),
        instance_seed: instance.seed(),
        entry_label: entry_label.to_string(),
        n_qubits: model.n_qubits,
        shots,
        sample_seed: seed,
        ideal_prob_optimal: probability_of(&state, &ground.ground_states)?,
        raw_optimal_fraction,
        counts,
        mitigated_counts,
        mitigation,
    })
}
