//! Piecewise-linear annealing schedules `s(t)` synthesized from QAOA angles.
//!
//! The annealer Hamiltonian is `-A(s)/2 sum X + B(s)/2 H_c`. In mixer mode
//! the targets `a_k = A(0) beta_k / max(beta)` are inverted through the
//! device table to `s_k = A^-1(a_k)`; cost mode does the same with
//! `b_k = B(1) gamma_k / max(gamma)` and `B^-1`. Targets are placed on a
//! uniform interior time grid, made non-decreasing by forward clamping,
//! framed by `(0, 0)` and `(t_f, 1)`, and thinned to at most
//! [`MAX_POINTS`] points by greedy largest-deviation retention.

use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::simulator::QaoaParams;

/// Device limit on schedule points.
pub const MAX_POINTS: usize = 12;

/// Deviations at or below this are treated as exact fits when thinning.
const FIT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub s: f64,
    pub a_ghz: f64,
    pub b_ghz: f64,
}

/// Device curves `A(s)`, `B(s)` sampled on `0 = s_0 < ... < s_k = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleTable {
    rows: Vec<TableRow>,
}

impl ScheduleTable {
    pub fn new(rows: Vec<TableRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Input("schedule table needs at least two rows".into()));
        }
        if rows
            .iter()
            .any(|r| !(r.s.is_finite() && r.a_ghz.is_finite() && r.b_ghz.is_finite()))
        {
            return Err(Error::Input("schedule table has non-finite entries".into()));
        }
        if rows[0].s != 0.0 || rows[rows.len() - 1].s != 1.0 {
            return Err(Error::Input("schedule table must span s = 0 to s = 1".into()));
        }
        for w in rows.windows(2) {
            if w[1].s <= w[0].s {
                return Err(Error::Input(format!(
                    "table s not strictly increasing at s = {}",
                    w[1].s
                )));
            }
            if w[1].a_ghz > w[0].a_ghz {
                return Err(Error::Input(format!("A(s) increases at s = {}", w[1].s)));
            }
            if w[1].b_ghz < w[0].b_ghz {
                return Err(Error::Input(format!("B(s) decreases at s = {}", w[1].s)));
            }
        }
        Ok(Self { rows })
    }

    /// `A(s) = 1 - s`, `B(s) = s` on `n_rows` evenly spaced points.
    pub fn synthetic_linear(n_rows: usize) -> Self {
        let n = n_rows.max(2);
        let rows = (0..n)
            .map(|i| {
                let s = if i == n - 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
                TableRow {
                    s,
                    a_ghz: 1.0 - s,
                    b_ghz: s,
                }
            })
            .collect();
        Self { rows }
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    /// Parse `s,A_GHz,B_GHz` CSV; `#` comments and a header line are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::Input(format!("expected 3 columns, got {line:?}")));
            }
            let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|c| c.parse::<f64>()).collect();
            match parsed {
                Ok(v) => rows.push(TableRow {
                    s: v[0],
                    a_ghz: v[1],
                    b_ghz: v[2],
                }),
                Err(_) if rows.is_empty() => continue, // header
                Err(_) => return Err(Error::Input(format!("unparsable table row {line:?}"))),
            }
        }
        Self::new(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,A_GHz,B_GHz\n");
        for r in &self.rows {
            writeln!(out, "{},{},{}", r.s, r.a_ghz, r.b_ghz).unwrap();
        }
        out
    }

    fn a_range(&self) -> (f64, f64) {
        (self.rows[self.rows.len() - 1].a_ghz, self.rows[0].a_ghz)
    }

    fn b_range(&self) -> (f64, f64) {
        (self.rows[0].b_ghz, self.rows[self.rows.len() - 1].b_ghz)
    }

    /// Smallest `s` with `A(s) = a`.
    pub fn invert_a(&self, a: f64) -> f64 {
        let (lo, hi) = self.a_range();
        let a = clamp_target("A", a, lo, hi);
        for w in self.rows.windows(2) {
            let (r0, r1) = (w[0], w[1]);
            if a <= r0.a_ghz && a >= r1.a_ghz {
                if r0.a_ghz == r1.a_ghz {
                    return r0.s;
                }
                return r0.s + (r0.a_ghz - a) / (r0.a_ghz - r1.a_ghz) * (r1.s - r0.s);
            }
        }
        1.0
    }

    /// Smallest `s` with `B(s) = b`.
    pub fn invert_b(&self, b: f64) -> f64 {
        let (lo, hi) = self.b_range();
        let b = clamp_target("B", b, lo, hi);
        for w in self.rows.windows(2) {
            let (r0, r1) = (w[0], w[1]);
            if b >= r0.b_ghz && b <= r1.b_ghz {
                if r0.b_ghz == r1.b_ghz {
                    return r0.s;
                }
                return r0.s + (b - r0.b_ghz) / (r1.b_ghz - r0.b_ghz) * (r1.s - r0.s);
            }
        }
        1.0
    }
}

fn clamp_target(curve: &str, v: f64, lo: f64, hi: f64) -> f64 {
    if v < lo || v > hi {
        log::warn!("{curve} target {v} outside table range [{lo}, {hi}], clamping");
    }
    v.clamp(lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ScheduleMode {
    /// Shape the mixer amplitude `A(s)` after the `beta` angles.
    Mixer,
    /// Shape the cost amplitude `B(s)` after the `gamma` angles.
    Cost,
}

impl fmt::Display for ScheduleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScheduleMode::Mixer => "MIXER",
            ScheduleMode::Cost => "COST",
        })
    }
}

impl FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mixer" => Ok(ScheduleMode::Mixer),
            "cost" => Ok(ScheduleMode::Cost),
            other => Err(Error::Input(format!("unknown schedule mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub t_us: f64,
    pub s: f64,
}

/// `s = f(t)` as a piecewise-linear point list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub points: Vec<SchedulePoint>,
    pub t_f: f64,
    /// `None` for the default linear schedule.
    pub mode: Option<ScheduleMode>,
    pub source: Option<String>,
}

impl Schedule {
    /// The default `s = t / t_f`.
    pub fn linear(t_f: f64) -> Result<Self> {
        check_tf(t_f)?;
        Ok(Self {
            points: vec![SchedulePoint { t_us: 0.0, s: 0.0 }, SchedulePoint { t_us: t_f, s: 1.0 }],
            t_f,
            mode: None,
            source: None,
        })
    }

    pub fn with_source(mut self, label: impl Into<String>) -> Self {
        self.source = Some(label.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pts = &self.points;
        let bad = |m: &str| Err(Error::Input(format!("invalid schedule: {m}")));
        if pts.len() < 2 || pts.len() > MAX_POINTS {
            return bad(&format!("{} points, expected 2..={MAX_POINTS}", pts.len()));
        }
        if pts[0] != (SchedulePoint { t_us: 0.0, s: 0.0 }) {
            return bad("first point is not (0, 0)");
        }
        let last = pts[pts.len() - 1];
        if last.t_us != self.t_f || last.s != 1.0 {
            return bad("last point is not (t_f, 1)");
        }
        for w in pts.windows(2) {
            if w[1].t_us <= w[0].t_us {
                return bad("t not strictly increasing");
            }
            if w[1].s < w[0].s {
                return bad("s decreasing");
            }
        }
        if pts.iter().any(|p| !(0.0..=1.0).contains(&p.s)) {
            return bad("s outside [0, 1]");
        }
        Ok(())
    }

    /// Two-column CSV with a commented header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mode = self.mode.map_or("DEFAULT".to_string(), |m| m.to_string());
        writeln!(out, "# mode={mode}").unwrap();
        writeln!(out, "# t_f={}", self.t_f).unwrap();
        writeln!(out, "# source={}", self.source.as_deref().unwrap_or("-")).unwrap();
        out.push_str("t_us,s\n");
        for p in &self.points {
            writeln!(out, "{},{}", p.t_us, p.s).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut mode = None;
        let mut t_f = None;
        let mut source = None;
        let mut points = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    match k {
                        "mode" if v != "DEFAULT" => mode = Some(v.parse()?),
                        "t_f" => t_f = Some(v.parse::<f64>().map_err(|_| Error::Input(format!("bad t_f {v:?}")))?),
                        "source" if v != "-" => source = Some(v.to_string()),
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() || line == "t_us,s" {
                continue;
            }
            let (t, s) = line
                .split_once(',')
                .ok_or_else(|| Error::Input(format!("expected 't,s', got {line:?}")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Input(format!("bad number {v:?}")))
            };
            points.push(SchedulePoint {
                t_us: parse(t)?,
                s: parse(s)?,
            });
        }
        let t_f = match t_f {
            Some(t) => t,
            None => points
                .last()
                .map(|p| p.t_us)
                .ok_or_else(|| Error::Input("empty schedule".into()))?,
        };
        let sch = Schedule {
            points,
            t_f,
            mode,
            source,
        };
        sch.validate()?;
        Ok(sch)
    }
}

fn check_tf(t_f: f64) -> Result<()> {
    if !(t_f.is_finite() && t_f > 0.0) {
        return Err(Error::Input(format!("t_f must be positive and finite, got {t_f}")));
    }
    Ok(())
}

/// One greedy thinning decision: the point added and its deviation then.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinningStep {
    pub index: usize,
    pub deviation: f64,
    /// Largest deviation among the points still left out after this step.
    pub max_left_out: f64,
}

fn interp_dev(points: &[SchedulePoint], kept: &[bool], i: usize) -> f64 {
    let left = (0..i).rev().find(|&k| kept[k]).expect("first point is kept");
    let right = (i + 1..points.len()).find(|&k| kept[k]).expect("last point is kept");
    let (l, r) = (points[left], points[right]);
    let frac = (points[i].t_us - l.t_us) / (r.t_us - l.t_us);
    (points[i].s - (l.s + frac * (r.s - l.s))).abs()
}

/// Keep both endpoints, then repeatedly keep the point farthest from the
/// current interpolant until `max_points` are kept or the rest fit exactly.
pub fn thin_points(points: &[SchedulePoint], max_points: usize) -> (Vec<SchedulePoint>, Vec<ThinningStep>) {
    let n = points.len();
    if n <= 2 {
        return (points.to_vec(), Vec::new());
    }
    let mut kept = vec![false; n];
    kept[0] = true;
    kept[n - 1] = true;
    let mut n_kept = 2;
    let mut log = Vec::new();
    while n_kept < max_points.max(2) {
        let devs: Vec<(usize, f64)> = (1..n - 1)
            .filter(|&i| !kept[i])
            .map(|i| (i, interp_dev(points, &kept, i)))
            .collect();
        let Some(&(idx, dev)) = devs.iter().fold(None, |best: Option<&(usize, f64)>, d| match best {
            Some(b) if b.1 >= d.1 => Some(b),
            _ => Some(d),
        }) else {
            break;
        };
        if dev <= FIT_EPS {
            break;
        }
        let max_left_out = devs.iter().filter(|d| d.0 != idx).map(|d| d.1).fold(0.0, f64::max);
        kept[idx] = true;
        n_kept += 1;
        log.push(ThinningStep {
            index: idx,
            deviation: dev,
            max_left_out,
        });
    }
    let out = points.iter().zip(&kept).filter(|(_, &k)| k).map(|(p, _)| *p).collect();
    (out, log)
}

/// Raw (unthinned) point list for `params`; see the module docs.
pub fn raw_schedule_points(
    params: &QaoaParams,
    table: &ScheduleTable,
    mode: ScheduleMode,
    t_f: f64,
) -> Result<Vec<SchedulePoint>> {
    check_tf(t_f)?;
    let angles = match mode {
        ScheduleMode::Mixer => &params.betas,
        ScheduleMode::Cost => &params.gammas,
    };
    if angles.is_empty() {
        return Err(Error::Input("parameters have no layers".into()));
    }
    if angles.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite angle".into()));
    }
    let max = angles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio = |v: f64| if max > 0.0 { v / max } else { 0.0 };
    let p = angles.len();

    let mut points = Vec::with_capacity(p + 2);
    points.push(SchedulePoint { t_us: 0.0, s: 0.0 });
    let mut floor = 0.0f64;
    for (k, &v) in angles.iter().enumerate() {
        let s = match mode {
            ScheduleMode::Mixer => table.invert_a(table.rows[0].a_ghz * ratio(v)),
            ScheduleMode::Cost => table.invert_b(table.rows[table.rows.len() - 1].b_ghz * ratio(v)),
        };
        floor = floor.max(s);
        points.push(SchedulePoint {
            t_us: t_f * (k + 1) as f64 / (p + 1) as f64,
            s: floor,
        });
    }
    points.push(SchedulePoint { t_us: t_f, s: 1.0 });
    Ok(points)
}

/// Annealing schedule shaped by the QAOA angle sequence.
pub fn schedule_from_params(
    params: &QaoaParams,
    table: &ScheduleTable,
    mode: ScheduleMode,
    t_f: f64,
) -> Result<Schedule> {
    let raw = raw_schedule_points(params, table, mode, t_f)?;
    let (points, _) = thin_points(&raw, MAX_POINTS);
    let sch = Schedule {
        points,
        t_f,
        mode: Some(mode),
        source: None,
    };
    sch.validate()?;
    Ok(sch)
}

/// Write `sch` as CSV (atomically).
pub fn export_schedule(sch: &Schedule, path: &Path) -> Result<()> {
    sch.validate()?;
    write_atomic(path, sch.to_csv().as_bytes())
}

pub fn read_schedule(path: &Path) -> Result<Schedule> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Schedule::from_csv(&text)
}
