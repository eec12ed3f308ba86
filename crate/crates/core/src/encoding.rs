//! QUBO construction with equality and unbalanced inequality penalties,
//! conversion to a spin Hamiltonian, and normalization.
//!
//! Everything is posed as minimization. Maximization objectives (KP, PO,
//! MIS, MaxCut) are negated before penalties are added.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bits::Assignment;
use crate::error::{Error, Result};
use crate::problems::{Edge, ProblemInstance, ProblemKind};

/// Penalty coefficients. `lambda0` weights squared equality residuals,
/// `lambda1`/`lambda2` the unbalanced inequality term.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
}

impl PenaltyConfig {
    pub fn new(lambda0: Option<f64>, lambda1: Option<f64>, lambda2: Option<f64>) -> Self {
        Self {
            lambda0,
            lambda1,
            lambda2,
        }
    }

    /// Default coefficients per problem.
    ///
    /// The MIS row is carried for completeness; the MIS encoding itself uses
    /// a `2 x_u x_v` edge term and ignores it.
    pub fn defaults_for(kind: ProblemKind) -> Self {
        match kind {
            ProblemKind::Tsp => Self::new(Some(23.0), None, None),
            ProblemKind::Bpp => Self::new(Some(15.0), Some(4.2), Some(0.4)),
            ProblemKind::Kp => Self::new(None, Some(0.96), Some(0.04)),
            ProblemKind::Po => Self::new(None, Some(0.97), Some(0.06)),
            ProblemKind::Mis => Self::new(None, Some(-1.0), Some(1.0)),
            ProblemKind::Maxcut => Self::default(),
        }
    }

    /// Replace any coefficient given in `overrides`.
    pub fn overridden_by(self, overrides: &PenaltyConfig) -> Self {
        Self {
            lambda0: overrides.lambda0.or(self.lambda0),
            lambda1: overrides.lambda1.or(self.lambda1),
            lambda2: overrides.lambda2.or(self.lambda2),
        }
    }

    fn equality(&self, kind: ProblemKind) -> Result<f64> {
        self.lambda0
            .ok_or_else(|| Error::Config(format!("{kind} needs lambda0 for its equality constraints")))
    }

    fn inequality(&self, kind: ProblemKind) -> Result<(f64, f64)> {
        match (self.lambda1, self.lambda2) {
            (Some(l1), Some(l2)) if l2 >= 0.0 => Ok((l1, l2)),
            (Some(_), Some(l2)) => Err(Error::Config(format!("{kind}: lambda2 must be non-negative, got {l2}"))),
            _ => Err(Error::Config(format!(
                "{kind} needs lambda1 and lambda2 for its inequality constraints"
            ))),
        }
    }
}

/// Quadratic form `f(x) = sum_ij q_ij x_i x_j + offset`, kept symmetric by
/// the builders; only `q_ij + q_ji` matters.
/// The diagonal holds the linear coefficients (`x_i^2 = x_i`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Qubo {
    pub n_vars: usize,
    pub q: Vec<Vec<f64>>,
    pub offset: f64,
}

impl Qubo {
    pub fn zeros(n_vars: usize) -> Self {
        Self {
            n_vars,
            q: vec![vec![0.0; n_vars]; n_vars],
            offset: 0.0,
        }
    }

    pub fn add_constant(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn add_linear(&mut self, i: usize, c: f64) {
        self.q[i][i] += c;
    }

    /// Add `c * x_i * x_j`.
    pub fn add_product(&mut self, i: usize, j: usize, c: f64) {
        if i == j {
            self.add_linear(i, c);
        } else {
            self.q[i][j] += 0.5 * c;
            self.q[j][i] += 0.5 * c;
        }
    }

    /// Add `weight * (constant + sum_k a_k x_k)^2`.
    pub fn add_squared_affine(&mut self, terms: &[(usize, f64)], constant: f64, weight: f64) {
        let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
        for &(k, a) in terms {
            *merged.entry(k).or_insert(0.0) += a;
        }
        let terms: Vec<(usize, f64)> = merged.into_iter().collect();
        self.add_constant(weight * constant * constant);
        for (idx, &(k, a)) in terms.iter().enumerate() {
            self.add_linear(k, weight * (a * a + 2.0 * constant * a));
            for &(l, b) in &terms[idx + 1..] {
                self.add_product(k, l, weight * 2.0 * a * b);
            }
        }
    }

    /// Add the unbalanced penalty `-l1 h + l2 h^2` for `h = constant + sum_k a_k x_k`.
    pub fn add_unbalanced(&mut self, terms: &[(usize, f64)], constant: f64, lambda1: f64, lambda2: f64) {
        self.add_constant(-lambda1 * constant);
        for &(k, a) in terms {
            self.add_linear(k, -lambda1 * a);
        }
        self.add_squared_affine(terms, constant, lambda2);
    }

    pub fn energy(&self, a: &Assignment) -> Result<f64> {
        a.check_len(self.n_vars)?;
        let mut e = self.offset;
        for i in 0..self.n_vars {
            if !a.get(i) {
                continue;
            }
            e += self.q[i][i];
            for j in 0..self.n_vars {
                if j != i && a.get(j) {
                    e += self.q[i][j];
                }
            }
        }
        Ok(e)
    }
}

/// Penalized QUBO whose minimizers encode solutions of `instance`.
pub fn to_qubo(instance: &ProblemInstance, penalties: &PenaltyConfig) -> Result<Qubo> {
    let kind = instance.kind();
    let mut qubo = Qubo::zeros(instance.n_vars());
    match instance {
        ProblemInstance::Tsp(t) => {
            let lambda0 = penalties.equality(kind)?;
            let n = t.size;
            for time in 0..n {
                let next = (time + 1) % n;
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            qubo.add_product(t.var(i, time), t.var(j, next), t.dist[i][j]);
                        }
                    }
                }
            }
            for time in 0..n {
                let terms: Vec<_> = (0..n).map(|i| (t.var(i, time), 1.0)).collect();
                qubo.add_squared_affine(&terms, -1.0, lambda0);
            }
            for i in 0..n {
                let terms: Vec<_> = (0..n).map(|time| (t.var(i, time), 1.0)).collect();
                qubo.add_squared_affine(&terms, -1.0, lambda0);
            }
        }
        ProblemInstance::Bpp(b) => {
            let lambda0 = penalties.equality(kind)?;
            let (l1, l2) = penalties.inequality(kind)?;
            for j in 0..b.n_bins {
                qubo.add_linear(b.bin_var(j), 1.0);
            }
            for j in 0..b.n_bins {
                // h = W y_j - sum_i w_i x_ij
                let mut terms = vec![(b.bin_var(j), b.max_weight as f64)];
                terms.extend((0..b.size).map(|i| (b.item_var(i, j), -(b.weights[i] as f64))));
                qubo.add_unbalanced(&terms, 0.0, l1, l2);
            }
            for i in 0..b.size {
                let terms: Vec<_> = (0..b.n_bins).map(|j| (b.item_var(i, j), 1.0)).collect();
                qubo.add_squared_affine(&terms, -1.0, lambda0);
            }
        }
        ProblemInstance::Kp(k) => {
            let (l1, l2) = penalties.inequality(kind)?;
            for i in 0..k.size {
                qubo.add_linear(i, -(k.values[i] as f64));
            }
            let terms: Vec<_> = (0..k.size).map(|i| (i, -(k.weights[i] as f64))).collect();
            qubo.add_unbalanced(&terms, k.max_weight as f64, l1, l2);
        }
        ProblemInstance::Po(p) => {
            let (l1, l2) = penalties.inequality(kind)?;
            for i in 0..p.size {
                qubo.add_linear(i, -p.returns[i]);
                for j in 0..p.size {
                    qubo.add_product(i, j, p.risk_factor * p.cov[i][j]);
                }
            }
            let terms: Vec<_> = (0..p.size).map(|i| (i, -p.costs[i])).collect();
            qubo.add_unbalanced(&terms, p.budget, l1, l2);
        }
        ProblemInstance::Mis(g) => {
            for v in 0..g.size {
                qubo.add_linear(v, -1.0);
            }
            for &Edge(u, v, _) in &g.edges {
                qubo.add_product(u, v, 2.0);
            }
        }
        ProblemInstance::Maxcut(g) => {
            for &Edge(u, v, w) in &g.edges {
                qubo.add_linear(u, -w);
                qubo.add_linear(v, -w);
                qubo.add_product(u, v, 2.0 * w);
            }
        }
    }
    Ok(qubo)
}

/// Two-body spin coupling `value * z_i * z_j`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// `H(z) = sum_{i<j} Q_ij z_i z_j + sum_i h_i z_i + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    pub n_qubits: usize,
    /// Sorted by `(i, j)`; exact zeros are omitted.
    pub couplings: Vec<Coupling>,
    pub fields: Vec<f64>,
    pub offset: f64,
    pub norm_factor: f64,
}

impl IsingModel {
    pub fn zeros(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            couplings: Vec::new(),
            fields: vec![0.0; n_qubits],
            offset: 0.0,
            norm_factor: 1.0,
        }
    }

    /// Build from loose parts; couplings are merged, reordered to `i < j`,
    /// and zeros dropped.
    pub fn from_parts(
        n_qubits: usize,
        couplings: impl IntoIterator<Item = (usize, usize, f64)>,
        fields: Vec<f64>,
        offset: f64,
    ) -> Result<Self> {
        if fields.len() != n_qubits {
            return Err(Error::Dimension {
                expected: n_qubits,
                got: fields.len(),
            });
        }
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in couplings {
            if i == j || i >= n_qubits || j >= n_qubits {
                return Err(Error::Input(format!("invalid coupling index ({i}, {j})")));
            }
            *merged.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        }
        Ok(Self {
            n_qubits,
            couplings: merged
                .into_iter()
                .filter(|&(_, v)| v != 0.0)
                .map(|((i, j), value)| Coupling { i, j, value })
                .collect(),
            fields,
            offset,
            norm_factor: 1.0,
        })
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.couplings
            .iter()
            .map(|c| c.value.abs())
            .chain(self.fields.iter().map(|h| h.abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs_coefficient() == 0.0
    }

    pub fn is_normalized(&self) -> bool {
        let m = self.max_abs_coefficient();
        m == 0.0 || (m - 1.0).abs() <= 1e-12
    }

    /// Same model with `delta` added to the offset.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut m = self.clone();
        m.offset += delta;
        m
    }

    /// Per-qubit adjacency: `(neighbor, Q)` for every coupling.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n_qubits];
        for c in &self.couplings {
            adj[c.i].push((c.j, c.value));
            adj[c.j].push((c.i, c.value));
        }
        adj
    }

    /// Plain coordinate text: a header comment, then `i j Q_ij` lines for
    /// couplings and `i i h_i` lines for fields.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "# ising n_qubits={} offset={} norm_factor={}",
            self.n_qubits, self.offset, self.norm_factor
        )
        .unwrap();
        for c in &self.couplings {
            writeln!(out, "{} {} {}", c.i, c.j, c.value).unwrap();
        }
        for (i, h) in self.fields.iter().enumerate() {
            if *h != 0.0 {
                writeln!(out, "{i} {i} {h}").unwrap();
            }
        }
        out
    }

    pub fn from_coordinate_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Input("empty ising file".into()))?;
        let mut n_qubits = None;
        let mut offset = 0.0;
        let mut norm_factor = 1.0;
        for tok in header.trim_start_matches('#').split_whitespace() {
            if let Some((k, v)) = tok.split_once('=') {
                let parse =
                    |v: &str| -> Result<f64> { v.parse().map_err(|_| Error::Input(format!("bad header value {v:?}"))) };
                match k {
                    "n_qubits" => n_qubits = Some(v.parse().map_err(|_| Error::Input(format!("bad n_qubits {v:?}")))?),
                    "offset" => offset = parse(v)?,
                    "norm_factor" => norm_factor = parse(v)?,
                    _ => {}
                }
            }
        }
        let n: usize = n_qubits.ok_or_else(|| Error::Input("header lacks n_qubits".into()))?;
        let mut fields = vec![0.0; n];
        let mut couplings = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [i, j, v] = parts[..] else {
                return Err(Error::Input(format!("expected 'i j value', got {line:?}")));
            };
            let bad = || Error::Input(format!("unparsable line {line:?}"));
            let i: usize = i.parse().map_err(|_| bad())?;
            let j: usize = j.parse().map_err(|_| bad())?;
            let v: f64 = v.parse().map_err(|_| bad())?;
            if i >= n || j >= n {
                return Err(Error::Input(format!("index out of range in {line:?}")));
            }
            if i == j {
                fields[i] += v;
            } else {
                couplings.push((i, j, v));
            }
        }
        let mut m = Self::from_parts(n, couplings, fields, offset)?;
        m.norm_factor = norm_factor;
        Ok(m)
    }
}

/// Substitute `x_i = (1 - z_i) / 2`. Energies are preserved exactly.
pub fn qubo_to_ising(qubo: &Qubo) -> IsingModel {
    let n = qubo.n_vars;
    let mut fields = vec![0.0; n];
    let mut offset = qubo.offset;
    let mut couplings = Vec::new();
    for i in 0..n {
        let lin = qubo.q[i][i];
        fields[i] -= 0.5 * lin;
        offset += 0.5 * lin;
        for j in (i + 1)..n {
            // (q_ij + q_ji) x_i x_j = (q_ij + q_ji)/4 (1 - z_i - z_j + z_i z_j)
            let half = 0.25 * (qubo.q[i][j] + qubo.q[j][i]);
            if half == 0.0 {
                continue;
            }
            couplings.push((i, j, half));
            fields[i] -= half;
            fields[j] -= half;
            offset += half;
        }
    }
    IsingModel::from_parts(n, couplings, fields, offset).expect("indices in range by construction")
}

/// Divide every coefficient (offset included) by the largest absolute
/// coefficient. A zero model is returned unchanged with `norm_factor = 1`.
pub fn normalize(model: &IsingModel) -> IsingModel {
    let max = model.max_abs_coefficient();
    let mut out = model.clone();
    if max == 0.0 {
        out.norm_factor = 1.0;
        return out;
    }
    for c in &mut out.couplings {
        c.value /= max;
    }
    for h in &mut out.fields {
        *h /= max;
    }
    out.offset /= max;
    out.norm_factor = max;
    out
}

/// Exact `H(z)` for the spin image of `a`, offset included.
pub fn ising_energy(model: &IsingModel, a: &Assignment) -> Result<f64> {
    a.check_len(model.n_qubits)?;
    let mut e = model.offset;
    for (i, h) in model.fields.iter().enumerate() {
        e += h * a.spin(i);
    }
    for c in &model.couplings {
        e += c.value * a.spin(c.i) * a.spin(c.j);
    }
    Ok(e)
}

/// Instance -> penalized QUBO -> Ising -> normalized Ising.
pub fn encode(instance: &ProblemInstance, penalties: &PenaltyConfig) -> Result<IsingModel> {
    Ok(normalize(&qubo_to_ising(&to_qubo(instance, penalties)?)))
}
