//! Hamming-distance-1 post-processing of measured bitstrings.
//!
//! Each sampled string is replaced by the lowest-energy string among itself
//! and its `n` single-bitflip neighbors. Ties keep the original; among
//! equally good improving flips the lowest bit index wins. Neighbor energies
//! come from local fields, so a string costs `O(n + couplings)`.

use serde::{Deserialize, Serialize};

use crate::bits::Assignment;
use crate::encoding::{ising_energy, IsingModel};
use crate::error::Result;
use crate::exec::{self, Exec};
use crate::oracle::GroundTruth;
use crate::simulator::SampleSet;

/// Energy changes smaller than this count as ties.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationReport {
    pub raw_optimal_fraction: f64,
    pub mitigated_optimal_fraction: f64,
    pub moved_samples: u64,
    /// Raw shots that are a ground state or one flip away from one.
    pub within_distance1_fraction: f64,
    pub raw_mean_energy: f64,
    pub mitigated_mean_energy: f64,
}

/// Best single-flip move for `a`, or `None` when `a` is already minimal.
fn best_flip(model: &IsingModel, adj: &[Vec<(usize, f64)>], a: &Assignment) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in 0..model.n_qubits {
        let local = model.fields[i] + adj[i].iter().map(|&(j, q)| q * a.spin(j)).sum::<f64>();
        let delta = -2.0 * a.spin(i) * local;
        if delta < -TIE_TOL && best.map_or(true, |(_, d)| delta < d) {
            best = Some((i, delta));
        }
    }
    best.map(|(i, _)| i)
}

fn fraction(samples: &SampleSet, pred: impl Fn(&Assignment) -> bool) -> Result<f64> {
    let total = samples.n_shots();
    if total == 0 {
        return Ok(0.0);
    }
    let mut hits = 0u64;
    for (s, &c) in &samples.counts {
        if pred(&s.parse()?) {
            hits += c;
        }
    }
    Ok(hits as f64 / total as f64)
}

fn mean_energy(samples: &SampleSet, model: &IsingModel) -> Result<f64> {
    let total = samples.n_shots();
    if total == 0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (s, &c) in &samples.counts {
        sum += ising_energy(model, &s.parse()?)? * c as f64;
    }
    Ok(sum / total as f64)
}

/// One mitigation pass over `samples`, scored against `ground`.
pub fn mitigate(
    samples: &SampleSet,
    model: &IsingModel,
    ground: &GroundTruth,
) -> Result<(SampleSet, MitigationReport)> {
    let adj = model.adjacency();
    let distinct: Vec<(Assignment, u64)> = samples
        .counts
        .iter()
        .map(|(s, &c)| {
            let a: Assignment = s.parse()?;
            a.check_len(model.n_qubits)?;
            Ok((a, c))
        })
        .collect::<Result<_>>()?;

    let moves = exec::map_items(Exec::default(), &distinct, |(a, _)| best_flip(model, &adj, a));

    let mut out = SampleSet::default();
    let mut moved = 0u64;
    for ((a, c), mv) in distinct.iter().zip(moves) {
        match mv {
            Some(i) => {
                let mut b = a.clone();
                b.set(i, !b.get(i));
                out.add(b.to_string(), *c);
                moved += c;
            }
            None => out.add(a.to_string(), *c),
        }
    }

    let near_ground = |a: &Assignment| {
        ground
            .ground_states
            .iter()
            .any(|g| g.bits().iter().zip(a.bits()).filter(|(x, y)| x != y).count() <= 1)
    };
    let report = MitigationReport {
        raw_optimal_fraction: fraction(samples, |a| ground.contains(a))?,
        mitigated_optimal_fraction: fraction(&out, |a| ground.contains(a))?,
        moved_samples: moved,
        within_distance1_fraction: fraction(samples, near_ground)?,
        raw_mean_energy: mean_energy(samples, model)?,
        mitigated_mean_energy: mean_energy(&out, model)?,
    };
    Ok((out, report))
}
