//! Seeded instances of the six combinatorial problems and their classical
//! objective/feasibility semantics.
//!
//! All randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`.
//! Draw order per problem:
//!
//! * TSP: upper triangle `(i, j), i < j`, row-major, one `Normal(10, 0.1)`
//!   draw each, clamped to be positive and mirrored into `(j, i)`.
//! * BPP: `w_i` uniform in `1..=10` for `i = 0..n`. `W = 20`, `m = n`.
//! * KP: all values `v_i` uniform in `5..=63`, then all weights `w_i` uniform
//!   in `1..=20`. `W = floor(sum(w) / 2)`.
//! * PO: all returns `mu_i` uniform in `[0, 1)`, then covariance upper
//!   triangle including the diagonal, row-major, each picked uniformly from
//!   `{-0.1, 0, 0.1, 0.2}`, then all costs `c_i` uniform in `[0.5, 1.5)`.
//!   `B = sum(c) / 2`.
//! * MIS: pairs `(i, j), i < j`, row-major, edge iff `u < 0.5`.
//! * MaxCut: pairs `(i, j), i < j`, row-major, edge iff `u < 0.7`; for each
//!   edge a weight `1 - u'` in `(0, 1]` is drawn right after its coin.
//!
//! Variable layout: TSP `x_{i,t}` is index `i * n + t`; BPP `x_{ij}` is
//! `i * m + j` followed by the bin flags `y_j` at `n * m + j`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bits::Assignment;
use crate::error::{Error, Result};

/// Tolerance for real-valued (portfolio) budget checks.
const BUDGET_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ProblemKind {
    Tsp,
    Bpp,
    Kp,
    Po,
    Mis,
    Maxcut,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 6] = [
        ProblemKind::Tsp,
        ProblemKind::Bpp,
        ProblemKind::Kp,
        ProblemKind::Po,
        ProblemKind::Mis,
        ProblemKind::Maxcut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Tsp => "TSP",
            ProblemKind::Bpp => "BPP",
            ProblemKind::Kp => "KP",
            ProblemKind::Po => "PO",
            ProblemKind::Mis => "MIS",
            ProblemKind::Maxcut => "MAXCUT",
        }
    }

    /// Inclusive range of supported sizes for [`generate`].
    pub fn size_range(self) -> (usize, usize) {
        match self {
            ProblemKind::Tsp | ProblemKind::Bpp => (3, 6),
            _ => (1, 24),
        }
    }

    /// Number of binary variables for a given size.
    pub fn n_vars(self, size: usize) -> usize {
        match self {
            ProblemKind::Tsp => size * size,
            ProblemKind::Bpp => size * size + size,
            _ => size,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsp" => Ok(ProblemKind::Tsp),
            "bpp" => Ok(ProblemKind::Bpp),
            "kp" => Ok(ProblemKind::Kp),
            "po" => Ok(ProblemKind::Po),
            "mis" => Ok(ProblemKind::Mis),
            "maxcut" => Ok(ProblemKind::Maxcut),
            other => Err(Error::Input(format!("unknown problem kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspInstance {
    pub size: usize,
    pub seed: u64,
    /// Distance matrix `c_ij`, zero diagonal.
    pub dist: Vec<Vec<f64>>,
}

impl TspInstance {
    pub fn n_cities(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn var(&self, city: usize, time: usize) -> usize {
        city * self.size + time
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BppInstance {
    pub size: usize,
    pub seed: u64,
    pub weights: Vec<u32>,
    pub max_weight: u32,
    pub n_bins: usize,
}

impl BppInstance {
    pub fn n_items(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn item_var(&self, item: usize, bin: usize) -> usize {
        item * self.n_bins + bin
    }

    #[inline]
    pub fn bin_var(&self, bin: usize) -> usize {
        self.size * self.n_bins + bin
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpInstance {
    pub size: usize,
    pub seed: u64,
    pub values: Vec<u32>,
    pub weights: Vec<u32>,
    pub max_weight: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoInstance {
    pub size: usize,
    pub seed: u64,
    pub returns: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub costs: Vec<f64>,
    pub budget: f64,
    pub risk_factor: f64,
}

impl PoInstance {
    pub const DEFAULT_RISK_FACTOR: f64 = 1.0;

    pub fn with_risk_factor(mut self, q: f64) -> Self {
        self.risk_factor = q;
        self
    }
}

/// Weighted undirected edge `(u, v, w)` with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge(pub usize, pub usize, pub f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInstance {
    pub size: usize,
    pub seed: u64,
    pub edges: Vec<Edge>,
}

impl GraphInstance {
    pub fn n_nodes(&self) -> usize {
        self.size
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum ProblemInstance {
    Tsp(TspInstance),
    Bpp(BppInstance),
    Kp(KpInstance),
    Po(PoInstance),
    Mis(GraphInstance),
    Maxcut(GraphInstance),
}

/// Raw classical objective (original min/max sense) and feasibility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub feasible: bool,
}

impl ProblemInstance {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemInstance::Tsp(_) => ProblemKind::Tsp,
            ProblemInstance::Bpp(_) => ProblemKind::Bpp,
            ProblemInstance::Kp(_) => ProblemKind::Kp,
            ProblemInstance::Po(_) => ProblemKind::Po,
            ProblemInstance::Mis(_) => ProblemKind::Mis,
            ProblemInstance::Maxcut(_) => ProblemKind::Maxcut,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            ProblemInstance::Tsp(i) => i.size,
            ProblemInstance::Bpp(i) => i.size,
            ProblemInstance::Kp(i) => i.size,
            ProblemInstance::Po(i) => i.size,
            ProblemInstance::Mis(g) | ProblemInstance::Maxcut(g) => g.size,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ProblemInstance::Tsp(i) => i.seed,
            ProblemInstance::Bpp(i) => i.seed,
            ProblemInstance::Kp(i) => i.seed,
            ProblemInstance::Po(i) => i.seed,
            ProblemInstance::Mis(g) | ProblemInstance::Maxcut(g) => g.seed,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.kind().n_vars(self.size())
    }

    /// An assignment satisfying every constraint.
    pub fn feasible_witness(&self) -> Assignment {
        let mut a = Assignment::zeros(self.n_vars());
        match self {
            ProblemInstance::Tsp(t) => {
                for i in 0..t.size {
                    a.set(t.var(i, i), true);
                }
            }
            ProblemInstance::Bpp(b) => {
                for i in 0..b.size {
                    a.set(b.item_var(i, i), true);
                    a.set(b.bin_var(i), true);
                }
            }
            _ => {}
        }
        a
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn check_size(kind: ProblemKind, size: usize) -> Result<()> {
    let (min, max) = kind.size_range();
    if size < min || size > max {
        return Err(Error::Range {
            kind: kind.name(),
            size,
            min,
            max,
        });
    }
    Ok(())
}

/// Deterministic instance for `(kind, size, seed)`.
pub fn generate(kind: ProblemKind, size: usize, seed: u64) -> Result<ProblemInstance> {
    check_size(kind, size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = match kind {
        ProblemKind::Tsp => {
            let normal = Normal::new(10.0, 0.1).expect("valid normal parameters");
            let mut dist = vec![vec![0.0; size]; size];
            for i in 0..size {
                for j in (i + 1)..size {
                    let d: f64 = normal.sample(&mut rng);
                    let d = d.max(f64::MIN_POSITIVE);
                    dist[i][j] = d;
                    dist[j][i] = d;
                }
            }
            ProblemInstance::Tsp(TspInstance { size, seed, dist })
        }
        ProblemKind::Bpp => {
            let weights = (0..size).map(|_| rng.gen_range(1..=10u32)).collect();
            ProblemInstance::Bpp(BppInstance {
                size,
                seed,
                weights,
                max_weight: 20,
                n_bins: size,
            })
        }
        ProblemKind::Kp => {
            let values: Vec<u32> = (0..size).map(|_| rng.gen_range(5..=63u32)).collect();
            let weights: Vec<u32> = (0..size).map(|_| rng.gen_range(1..=20u32)).collect();
            let max_weight = weights.iter().sum::<u32>() / 2;
            ProblemInstance::Kp(KpInstance {
                size,
                seed,
                values,
                weights,
                max_weight,
            })
        }
        ProblemKind::Po => {
            const COV_LEVELS: [f64; 4] = [-0.1, 0.0, 0.1, 0.2];
            let returns: Vec<f64> = (0..size).map(|_| rng.gen::<f64>()).collect();
            let mut cov = vec![vec![0.0; size]; size];
            for i in 0..size {
                for j in i..size {
                    let v = COV_LEVELS[rng.gen_range(0..COV_LEVELS.len())];
                    cov[i][j] = v;
                    cov[j][i] = v;
                }
            }
            let costs: Vec<f64> = (0..size).map(|_| rng.gen_range(0.5..1.5)).collect();
            let budget = costs.iter().sum::<f64>() / 2.0;
            ProblemInstance::Po(PoInstance {
                size,
                seed,
                returns,
                cov,
                costs,
                budget,
                risk_factor: PoInstance::DEFAULT_RISK_FACTOR,
            })
        }
        ProblemKind::Mis => {
            let mut edges = Vec::new();
            for i in 0..size {
                for j in (i + 1)..size {
                    if rng.gen::<f64>() < 0.5 {
                        edges.push(Edge(i, j, 1.0));
                    }
                }
            }
            ProblemInstance::Mis(GraphInstance { size, seed, edges })
        }
        ProblemKind::Maxcut => {
            let mut edges = Vec::new();
            for i in 0..size {
                for j in (i + 1)..size {
                    if rng.gen::<f64>() < 0.7 {
                        let w = 1.0 - rng.gen::<f64>();
                        edges.push(Edge(i, j, w));
                    }
                }
            }
            ProblemInstance::Maxcut(GraphInstance { size, seed, edges })
        }
    };
    Ok(inst)
}

/// Classical objective and feasibility of `a` on `instance`.
pub fn evaluate(instance: &ProblemInstance, a: &Assignment) -> Result<Evaluation> {
    a.check_len(instance.n_vars())?;
    let eval = match instance {
        ProblemInstance::Tsp(t) => {
            let n = t.size;
            let mut cost = 0.0;
            for time in 0..n {
                let next = (time + 1) % n;
                for i in 0..n {
                    if !a.get(t.var(i, time)) {
                        continue;
                    }
                    for j in 0..n {
                        if j != i && a.get(t.var(j, next)) {
                            cost += t.dist[i][j];
                        }
                    }
                }
            }
            let per_time = (0..n).all(|time| (0..n).filter(|&i| a.get(t.var(i, time))).count() == 1);
            let per_city = (0..n).all(|i| (0..n).filter(|&time| a.get(t.var(i, time))).count() == 1);
            Evaluation {
                objective: cost,
                feasible: per_time && per_city,
            }
        }
        ProblemInstance::Bpp(b) => {
            let bins_used = (0..b.n_bins).filter(|&j| a.get(b.bin_var(j))).count();
            let one_bin_each = (0..b.size).all(|i| (0..b.n_bins).filter(|&j| a.get(b.item_var(i, j))).count() == 1);
            let capacity_ok = (0..b.n_bins).all(|j| {
                let load: u32 = (0..b.size)
                    .filter(|&i| a.get(b.item_var(i, j)))
                    .map(|i| b.weights[i])
                    .sum();
                let cap = if a.get(b.bin_var(j)) { b.max_weight } else { 0 };
                load <= cap
            });
            Evaluation {
                objective: bins_used as f64,
                feasible: one_bin_each && capacity_ok,
            }
        }
        ProblemInstance::Kp(k) => {
            let (value, weight) = (0..k.size).filter(|&i| a.get(i)).fold((0u64, 0u64), |(v, w), i| {
                (v + k.values[i] as u64, w + k.weights[i] as u64)
            });
            Evaluation {
                objective: value as f64,
                feasible: weight <= k.max_weight as u64,
            }
        }
        ProblemInstance::Po(p) => {
            let n = p.size;
            let mut ret = 0.0;
            let mut risk = 0.0;
            let mut cost = 0.0;
            for i in 0..n {
                ret += p.returns[i] * a.x(i);
                cost += p.costs[i] * a.x(i);
                for j in 0..n {
                    risk += p.cov[i][j] * a.x(i) * a.x(j);
                }
            }
            Evaluation {
                objective: ret - p.risk_factor * risk,
                feasible: cost <= p.budget + BUDGET_EPS,
            }
        }
        ProblemInstance::Mis(g) => Evaluation {
            objective: a.count_ones() as f64,
            feasible: g.edges.iter().all(|&Edge(u, v, _)| !(a.get(u) && a.get(v))),
        },
        ProblemInstance::Maxcut(g) => Evaluation {
            objective: g
                .edges
                .iter()
                .filter(|&&Edge(u, v, _)| a.get(u) != a.get(v))
                .map(|&Edge(_, _, w)| w)
                .sum(),
            feasible: true,
        },
    };
    Ok(eval)
}
