//! Dense state-vector QAOA simulation.
//!
//! Circuit: `|+>^n`, then for each layer `i = 0..p` the cost phase
//! `exp(-i gamma_i E(z))` followed by the mixer `exp(-i beta_i H_M)` with
//! `H_M = -sum_q X_q`, i.e. `Rx(-2 beta_i)` on every qubit. `|+>^n` is the
//! ground state of `H_M`, so positive ramps anneal towards low energies.
//! `E(z)` is the offset-free Ising energy; the offset only contributes a
//! global phase and is re-added by [`expectation`].

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::{index_to_bitstring, Assignment};
use crate::encoding::IsingModel;
use crate::error::{Error, Result};
use crate::exec::{self, Exec};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 24;

/// Layer angles `(gamma_0..gamma_{p-1}, beta_0..beta_{p-1})` in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::Input("QAOA needs at least one layer".into()));
        }
        if gammas.len() != betas.len() {
            return Err(Error::Dimension {
                expected: gammas.len(),
                got: betas.len(),
            });
        }
        Ok(Self { gammas, betas })
    }

    pub fn zeros(p: usize) -> Self {
        Self {
            gammas: vec![0.0; p],
            betas: vec![0.0; p],
        }
    }

    pub fn p(&self) -> usize {
        self.gammas.len()
    }

    /// `[gammas..., betas...]`
    pub fn to_flat(&self) -> Vec<f64> {
        self.gammas.iter().chain(&self.betas).copied().collect()
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.is_empty() || flat.len() % 2 != 0 {
            return Err(Error::Input(format!(
                "flat parameter vector must have even nonzero length, got {}",
                flat.len()
            )));
        }
        let p = flat.len() / 2;
        Self::new(flat[..p].to_vec(), flat[p..].to_vec())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn uniform(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = (dim as f64).sqrt().recip();
        Self {
            n_qubits,
            amplitudes: vec![Complex64::new(a, 0.0); dim],
        }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        exec::chunked_sum(Exec::default(), self.dim(), |k| self.amplitudes[k].norm_sqr())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            .norm_sqr()
    }
}

/// Measurement counts keyed by bitstring.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleSet {
    pub counts: BTreeMap<String, u64>,
}

impl SampleSet {
    pub fn n_shots(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn add(&mut self, bitstring: String, count: u64) {
        if count > 0 {
            *self.counts.entry(bitstring).or_insert(0) += count;
        }
    }

    pub fn count_of(&self, bitstring: &str) -> u64 {
        self.counts.get(bitstring).copied().unwrap_or(0)
    }

    /// Shot-weighted mean of `f(bitstring)`.
    pub fn mean_by<F: Fn(&str) -> f64>(&self, f: F) -> f64 {
        let total = self.n_shots();
        if total == 0 {
            return 0.0;
        }
        self.counts.iter().map(|(s, &c)| f(s) * c as f64).sum::<f64>() / total as f64
    }
}

pub(crate) fn check_qubits(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::Resource {
            what: "state-vector qubits",
            requested: n,
            cap: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Offset-free diagonal energies `E(z_k)` for every basis index.
pub fn cost_diagonal(model: &IsingModel, exec: Exec) -> Vec<f64> {
    let n = model.n_qubits;
    let fields = &model.fields;
    let couplings = &model.couplings;
    let spin = |k: usize, i: usize| if (k >> i) & 1 == 1 { -1.0 } else { 1.0 };
    let mut diag = vec![0.0; 1 << n];
    exec::fill_indexed(exec, &mut diag, |k| {
        let mut e = 0.0;
        for (i, h) in fields.iter().enumerate() {
            e += h * spin(k, i);
        }
        for c in couplings {
            e += c.value * spin(k, c.i) * spin(k, c.j);
        }
        e
    });
    diag
}

/// Simulator bound to one Hamiltonian; the cost diagonal is built once.
#[derive(Debug, Clone)]
pub struct QaoaSimulator {
    n_qubits: usize,
    diagonal: Vec<f64>,
    offset: f64,
    exec: Exec,
}

impl QaoaSimulator {
    pub fn new(model: &IsingModel) -> Result<Self> {
        Self::with_exec(model, Exec::default())
    }

    pub fn with_exec(model: &IsingModel, exec: Exec) -> Result<Self> {
        check_qubits(model.n_qubits)?;
        if !model.is_normalized() {
            log::warn!(
                "simulating an unnormalized Hamiltonian (max |coefficient| = {})",
                model.max_abs_coefficient()
            );
        }
        Ok(Self {
            n_qubits: model.n_qubits,
            diagonal: cost_diagonal(model, exec),
            offset: model.offset,
            exec,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Offset-free energies indexed by basis state.
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn evolve(&self, params: &QaoaParams) -> StateVector {
        let mut state = StateVector::uniform(self.n_qubits);
        for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
            apply_cost_phase(self.exec, &mut state.amplitudes, &self.diagonal, gamma);
            let (s, c) = (-beta).sin_cos();
            for q in 0..self.n_qubits {
                apply_rx(self.exec, &mut state.amplitudes, q, c, s);
            }
        }
        state
    }

    /// Energy expectation including the offset.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.dim() != self.diagonal.len() {
            return Err(Error::Dimension {
                expected: self.diagonal.len(),
                got: state.dim(),
            });
        }
        let amps = &state.amplitudes;
        let diag = &self.diagonal;
        let mean = exec::chunked_sum(self.exec, diag.len(), |k| amps[k].norm_sqr() * diag[k]);
        Ok(mean + self.offset * state.norm_sqr())
    }
}

fn apply_cost_phase(exec: Exec, amps: &mut [Complex64], diag: &[f64], gamma: f64) {
    let phase = |a: &mut Complex64, e: f64| *a *= Complex64::cis(-gamma * e);
    #[cfg(feature = "parallel")]
    if exec.fans_out(amps.len()) {
        use rayon::prelude::*;
        amps.par_iter_mut().zip(diag.par_iter()).for_each(|(a, &e)| phase(a, e));
        return;
    }
    let _ = exec;
    amps.iter_mut().zip(diag).for_each(|(a, &e)| phase(a, e));
}

/// `exp(-i theta X)` on `qubit`, given `(cos theta, sin theta)`.
fn apply_rx(exec: Exec, amps: &mut [Complex64], qubit: usize, c: f64, s: f64) {
    let stride = 1usize << qubit;
    // (a, b) -> (c a - i s b, -i s a + c b)
    let butterfly = move |a: &mut Complex64, b: &mut Complex64| {
        let (x, y) = (*a, *b);
        *a = Complex64::new(c * x.re + s * y.im, c * x.im - s * y.re);
        *b = Complex64::new(c * y.re + s * x.im, c * y.im - s * x.re);
    };
    #[cfg(feature = "parallel")]
    if exec.fans_out(amps.len()) {
        use rayon::prelude::*;
        amps.par_chunks_mut(2 * stride).for_each(|block| {
            let (lo, hi) = block.split_at_mut(stride);
            if stride >= exec::PAR_THRESHOLD {
                lo.par_iter_mut()
                    .zip(hi.par_iter_mut())
                    .for_each(|(a, b)| butterfly(a, b));
            } else {
                lo.iter_mut().zip(hi.iter_mut()).for_each(|(a, b)| butterfly(a, b));
            }
        });
        return;
    }
    let _ = exec;
    for block in amps.chunks_mut(2 * stride) {
        let (lo, hi) = block.split_at_mut(stride);
        lo.iter_mut().zip(hi.iter_mut()).for_each(|(a, b)| butterfly(a, b));
    }
}

/// QAOA output state for `params` on `model`.
pub fn evolve(model: &IsingModel, params: &QaoaParams) -> Result<StateVector> {
    Ok(QaoaSimulator::new(model)?.evolve(params))
}

/// Same circuit forced onto the calling thread.
pub fn evolve_sequential(model: &IsingModel, params: &QaoaParams) -> Result<StateVector> {
    Ok(QaoaSimulator::with_exec(model, Exec::Sequential)?.evolve(params))
}

/// `sum_z |amp_z|^2 H(z)`, offset included.
pub fn expectation(state: &StateVector, model: &IsingModel) -> Result<f64> {
    if state.n_qubits != model.n_qubits {
        return Err(Error::Dimension {
            expected: model.n_qubits,
            got: state.n_qubits,
        });
    }
    let diag = cost_diagonal(model, Exec::default());
    let amps = &state.amplitudes;
    let mean = exec::chunked_sum(Exec::default(), diag.len(), |k| amps[k].norm_sqr() * diag[k]);
    Ok(mean + model.offset * state.norm_sqr())
}

/// Total probability of `targets`; duplicates count once.
pub fn probability_of(state: &StateVector, targets: &[Assignment]) -> Result<f64> {
    let mut seen = BTreeSet::new();
    let mut p = 0.0;
    for t in targets {
        t.check_len(state.n_qubits)?;
        let k = t.to_index();
        if seen.insert(k) {
            p += state.amplitudes[k].norm_sqr();
        }
    }
    Ok(p)
}

/// `n_shots` independent draws from `|amp|^2`, seeded with ChaCha8.
pub fn sample(state: &StateVector, n_shots: u64, seed: u64) -> Result<SampleSet> {
    if n_shots == 0 {
        return Err(Error::Input("n_shots must be at least 1".into()));
    }
    let mut cdf = Vec::with_capacity(state.dim());
    let mut acc = 0.0;
    for a in &state.amplitudes {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Numeric(format!("cannot sample from state with norm {total}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_index: BTreeMap<usize, u64> = BTreeMap::new();
    for _ in 0..n_shots {
        let u = rng.gen::<f64>() * total;
        let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        *by_index.entry(k).or_insert(0) += 1;
    }
    let mut out = SampleSet::default();
    for (k, c) in by_index {
        out.add(index_to_bitstring(k, state.n_qubits), c);
    }
    Ok(out)
}
