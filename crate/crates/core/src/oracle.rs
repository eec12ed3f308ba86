//! Independent ground truth: exhaustive ground-state search and a slow
//! dense-matrix QAOA reference. Nothing here calls into the simulator.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::Assignment;
use crate::encoding::{ising_energy, IsingModel};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::simulator::{QaoaParams, StateVector};

/// Largest model [`brute_force`] enumerates.
pub const ENUMERATION_CAP: usize = 26;
/// Largest model [`dense_reference`] accepts.
pub const DENSE_CAP: usize = 8;
/// States within this of the minimum are degenerate ground states.
pub const DEGENERACY_TOL: f64 = 1e-9;

const WALK_CHUNK_BITS: usize = 12;
// Incremental energies drift a little along a Gray-code walk; candidates are
// screened loosely and then re-evaluated exactly.
const SCREEN_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub ground_energy: f64,
    pub ground_states: Vec<Assignment>,
    /// Energy (rounded to the degeneracy tolerance) -> number of states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_histogram: Option<Vec<(f64, u64)>>,
}

impl GroundTruth {
    pub fn degeneracy(&self) -> usize {
        self.ground_states.len()
    }

    pub fn contains(&self, a: &Assignment) -> bool {
        self.ground_states.binary_search(a).is_ok()
    }
}

struct Walker<'a> {
    fields: &'a [f64],
    adj: Vec<Vec<(usize, f64)>>,
}

impl Walker<'_> {
    fn exact(&self, model: &IsingModel, state: usize) -> f64 {
        ising_energy(model, &Assignment::from_index(state, model.n_qubits)).expect("length matches")
    }

    /// Energy change when bit `i` of `state` flips.
    #[inline]
    fn flip_delta(&self, state: usize, i: usize) -> f64 {
        let z = |k: usize| if (state >> k) & 1 == 1 { -1.0 } else { 1.0 };
        let local: f64 = self.fields[i] + self.adj[i].iter().map(|&(j, q)| q * z(j)).sum::<f64>();
        -2.0 * z(i) * local
    }

    /// Visit the Gray codes of `start..end` with incrementally tracked energies.
    fn walk<F: FnMut(usize, f64)>(&self, model: &IsingModel, start: usize, end: usize, mut visit: F) {
        let mut g = start ^ (start >> 1);
        let mut e = self.exact(model, g);
        visit(g, e);
        for k in (start + 1)..end {
            let bit = k.trailing_zeros() as usize;
            e += self.flip_delta(g, bit);
            g ^= 1 << bit;
            visit(g, e);
        }
    }
}

fn chunk_ranges(n: usize) -> Vec<(usize, usize)> {
    let total = 1usize << n;
    let step = 1usize << WALK_CHUNK_BITS.min(n);
    (0..total).step_by(step).map(|s| (s, (s + step).min(total))).collect()
}

/// Exact minimum over all `2^n` assignments, with degenerate states.
pub fn brute_force(model: &IsingModel) -> Result<GroundTruth> {
    brute_force_impl(model, false, Exec::default())
}

/// As [`brute_force`], also tallying the full energy spectrum.
pub fn brute_force_with_histogram(model: &IsingModel) -> Result<GroundTruth> {
    brute_force_impl(model, true, Exec::default())
}

pub fn brute_force_with_exec(model: &IsingModel, exec: Exec) -> Result<GroundTruth> {
    brute_force_impl(model, false, exec)
}

fn brute_force_impl(model: &IsingModel, histogram: bool, exec: Exec) -> Result<GroundTruth> {
    let n = model.n_qubits;
    if n > ENUMERATION_CAP {
        return Err(Error::Resource {
            what: "enumeration qubits",
            requested: n,
            cap: ENUMERATION_CAP,
        });
    }
    let walker = Walker {
        fields: &model.fields,
        adj: model.adjacency(),
    };
    let ranges = chunk_ranges(n);

    let chunk_mins = exec::map_items(exec, &ranges, |&(s, e)| {
        let mut best = f64::INFINITY;
        walker.walk(model, s, e, |_, en| best = best.min(en));
        best
    });
    let screen_min = chunk_mins.into_iter().fold(f64::INFINITY, f64::min);
    if !screen_min.is_finite() {
        return Err(Error::Numeric("non-finite energy during enumeration".into()));
    }

    let candidates: Vec<usize> = exec::map_items(exec, &ranges, |&(s, e)| {
        let mut found = Vec::new();
        walker.walk(model, s, e, |g, en| {
            if en <= screen_min + SCREEN_TOL {
                found.push(g);
            }
        });
        found
    })
    .into_iter()
    .flatten()
    .collect();

    let exact: Vec<(usize, f64)> = candidates.into_iter().map(|g| (g, walker.exact(model, g))).collect();
    let ground_energy = exact.iter().map(|&(_, e)| e).fold(f64::INFINITY, f64::min);
    let mut ground_states: Vec<Assignment> = exact
        .iter()
        .filter(|&&(_, e)| e <= ground_energy + DEGENERACY_TOL)
        .map(|&(g, _)| Assignment::from_index(g, n))
        .collect();
    ground_states.sort();

    let energy_histogram = histogram.then(|| {
        let mut tally: BTreeMap<i64, u64> = BTreeMap::new();
        for k in 0..1usize << n {
            let e = walker.exact(model, k);
            *tally.entry((e / DEGENERACY_TOL).round() as i64).or_insert(0) += 1;
        }
        tally
            .into_iter()
            .map(|(bucket, c)| (bucket as f64 * DEGENERACY_TOL, c))
            .collect()
    });

    Ok(GroundTruth {
        ground_energy,
        ground_states,
        energy_histogram,
    })
}

/// Row-major dense complex matrix, only as much as the reference needs.
#[derive(Debug, Clone)]
struct Dense {
    dim: usize,
    data: Vec<Complex64>,
}

impl Dense {
    fn identity(dim: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self { dim, data }
    }

    fn from_rows(rows: &[&[Complex64]]) -> Self {
        let dim = rows.len();
        Self {
            dim,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.dim + c]
    }

    fn matmul(&self, other: &Dense) -> Dense {
        let d = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for r in 0..d {
            for k in 0..d {
                let a = self.at(r, k);
                for c in 0..d {
                    data[r * d + c] += a * other.at(k, c);
                }
            }
        }
        Dense { dim: d, data }
    }

    fn scale(&self, s: Complex64) -> Dense {
        Dense {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    fn add(&self, other: &Dense) -> Dense {
        Dense {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// `self (x) other`, with `self` on the more significant index bits.
    fn kron(&self, other: &Dense) -> Dense {
        let (a, b) = (self.dim, other.dim);
        let d = a * b;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for r1 in 0..a {
            for c1 in 0..a {
                let s = self.at(r1, c1);
                for r2 in 0..b {
                    for c2 in 0..b {
                        data[(r1 * b + r2) * d + (c1 * b + c2)] = s * other.at(r2, c2);
                    }
                }
            }
        }
        Dense { dim: d, data }
    }

    fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|r| (0..self.dim).map(|c| self.at(r, c) * v[c]).sum())
            .collect()
    }

    /// Matrix exponential by scaling and squaring of a Taylor series.
    fn expm(&self) -> Dense {
        let norm = self.data.iter().map(|v| v.norm()).sum::<f64>();
        let squarings = if norm > 0.5 {
            (norm / 0.5).log2().ceil() as u32
        } else {
            0
        };
        let scaled = self.scale(Complex64::new(0.5f64.powi(squarings as i32), 0.0));
        let mut result = Dense::identity(self.dim);
        let mut term = Dense::identity(self.dim);
        for k in 1..=30 {
            term = term.matmul(&scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
            result = result.add(&term);
        }
        for _ in 0..squarings {
            result = result.matmul(&result);
        }
        result
    }
}

fn kron_power(m: &Dense, n: usize) -> Dense {
    (0..n).fold(Dense::identity(1), |acc, _| acc.kron(m))
}

/// Full-matrix QAOA: `|+>^n` from a Hadamard tensor power, dense cost
/// diagonals from exact energies, and mixers from the exponential of the
/// single-qubit `+i beta X` generator tensored over all qubits.
pub fn dense_reference(model: &IsingModel, params: &QaoaParams) -> Result<StateVector> {
    let n = model.n_qubits;
    if n > DENSE_CAP {
        return Err(Error::Resource {
            what: "dense reference qubits",
            requested: n,
            cap: DENSE_CAP,
        });
    }
    let dim = 1usize << n;
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);

    let hadamard = Dense::from_rows(&[&[r, r], &[r, -r]]);
    let mut ket0 = vec![zero; dim];
    ket0[0] = one;
    let mut state = kron_power(&hadamard, n).apply(&ket0);

    let energies: Vec<f64> = (0..dim)
        .map(|k| ising_energy(model, &Assignment::from_index(k, n)).map(|e| e - model.offset))
        .collect::<Result<_>>()?;
    let pauli_x = Dense::from_rows(&[&[zero, one], &[one, zero]]);

    for (&gamma, &beta) in params.gammas.iter().zip(&params.betas) {
        for (amp, e) in state.iter_mut().zip(&energies) {
            *amp *= (Complex64::new(0.0, -gamma * e)).exp();
        }
        let single = pauli_x.scale(Complex64::new(0.0, beta)).expm();
        state = kron_power(&single, n).apply(&state);
    }
    Ok(StateVector {
        n_qubits: n,
        amplitudes: state,
    })
}
