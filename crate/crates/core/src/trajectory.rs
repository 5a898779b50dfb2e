//! Uniformly sampled trajectories over a shared time grid.
//!
//! A trajectory assigns every variable a finite sample at each grid point
//! `start + k * step`, `k < count`. Intervals are left-closed right-open;
//! slicing snaps interval endpoints to the nearest grid point and rejects
//! endpoints that fall outside the grid. All operations are pure: they
//! return new values and never mutate their inputs.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::DEFAULT_TOL;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("non-finite sample for {var} at index {index}")]
    NonFinite { var: String, index: usize },
    #[error("invalid grid: step {step}, count {count}")]
    BadGrid { step: f64, count: usize },
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("duplicate variable {0}")]
    DuplicateVariable(String),
    #[error("column for {var} has {got} samples, grid has {want}")]
    LengthMismatch { var: String, got: usize, want: usize },
    #[error("invalid interval [{lo}, {hi})")]
    BadInterval { lo: f64, hi: f64 },
    #[error("time {t} outside grid [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("grids incompatible: steps {0} and {1}")]
    StepMismatch(f64, f64),
    #[error("grids incompatible: offsets differ by {0}, not a step multiple")]
    PhaseMismatch(f64),
    #[error("no shared variables between trajectories")]
    NoSharedVariables,
    #[error("overlapping override slices for {0}")]
    OverlappingSlices(String),
    #[error("empty slice: interval [{lo}, {hi}) contains no grid point")]
    EmptySlice { lo: f64, hi: f64 },
    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

type Result<T> = std::result::Result<T, TrajectoryError>;

/// Uniform time grid `start + k * step` for `k in 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl TimeGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        if !step.is_finite() || step <= 0.0 || !start.is_finite() || count == 0 {
            return Err(TrajectoryError::BadGrid { step, count });
        }
        Ok(TimeGrid { start, step, count })
    }

    pub fn time(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    /// Exclusive end of the covered span.
    pub fn end(&self) -> f64 {
        self.time(self.count)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.time(k))
    }

    /// Snaps `t` to the nearest grid index in `0..=count`.
    ///
    /// Values beyond the grid ends by more than half a step are rejected.
    pub fn snap(&self, t: f64) -> Result<usize> {
        let raw = (t - self.start) / self.step;
        let k = raw.round();
        if k < 0.0 || k > self.count as f64 {
            return Err(TrajectoryError::OutOfRange {
                t,
                lo: self.start,
                hi: self.end(),
            });
        }
        Ok(k as usize)
    }

    /// True when `other` samples on the same lattice: equal step and a
    /// start offset that is a whole number of steps.
    pub fn aligned_with(&self, other: &TimeGrid) -> Result<()> {
        let rel = (self.step - other.step).abs() / self.step.max(other.step);
        if rel > 1e-9 {
            return Err(TrajectoryError::StepMismatch(self.step, other.step));
        }
        let off = (other.start - self.start) / self.step;
        if (off - off.round()).abs() > 1e-6 {
            return Err(TrajectoryError::PhaseMismatch(other.start - self.start));
        }
        Ok(())
    }
}

/// Left-closed right-open time interval. Serializes as the pair
/// `[lo, hi]`; deserialization re-validates the ordering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct TimeInterval {
    pub lo: f64,
    pub hi: f64,
}

impl From<TimeInterval> for (f64, f64) {
    fn from(iv: TimeInterval) -> (f64, f64) {
        (iv.lo, iv.hi)
    }
}

impl TryFrom<(f64, f64)> for TimeInterval {
    type Error = TrajectoryError;

    fn try_from((lo, hi): (f64, f64)) -> Result<Self> {
        TimeInterval::new(lo, hi)
    }
}

impl TimeInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(TrajectoryError::BadInterval { lo, hi });
        }
        Ok(TimeInterval { lo, hi })
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t < self.hi
    }

    pub fn overlaps(&self, other: &TimeInterval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }

    pub fn duration(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Total assignment of values to variable names.
pub type Valuation = std::collections::BTreeMap<String, f64>;

/// Immutable multi-variable trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    names: Vec<String>,
    cols: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl Trajectory {
    /// Builds a trajectory from named columns. Every sample must be finite
    /// and every column must match the grid length.
    pub fn new(grid: TimeGrid, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let mut names = Vec::with_capacity(columns.len());
        let mut cols = Vec::with_capacity(columns.len());
        let mut index = HashMap::new();
        for (name, col) in columns {
            if index.contains_key(&name) {
                return Err(TrajectoryError::DuplicateVariable(name));
            }
            if col.len() != grid.count {
                return Err(TrajectoryError::LengthMismatch {
                    var: name,
                    got: col.len(),
                    want: grid.count,
                });
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(TrajectoryError::NonFinite { var: name, index: i });
            }
            index.insert(name.clone(), cols.len());
            names.push(name);
            cols.push(col);
        }
        Ok(Trajectory { grid, names, cols, index })
    }

    /// Single-variable trajectory holding one value everywhere.
    pub fn constant(grid: TimeGrid, name: &str, value: f64) -> Result<Self> {
        Trajectory::new(grid, vec![(name.to_string(), vec![value; grid.count])])
    }

    pub fn grid(&self) -> &TimeGrid {
        self.grid_ref()
    }

    fn grid_ref(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has(&self, var: &str) -> bool {
        self.index.contains_key(var)
    }

    pub fn column(&self, var: &str) -> Result<&[f64]> {
        self.index
            .get(var)
            .map(|&i| self.cols[i].as_slice())
            .ok_or_else(|| TrajectoryError::UnknownVariable(var.to_string()))
    }

    pub fn value_at(&self, var: &str, k: usize) -> Result<f64> {
        Ok(self.column(var)?[k])
    }

    /// Full span of the trajectory as a half-open interval.
    pub fn domain(&self) -> TimeInterval {
        TimeInterval {
            lo: self.grid.start,
            hi: self.grid.end(),
        }
    }

    pub fn valuation_at(&self, k: usize) -> Valuation {
        self.names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), self.cols[i][k]))
            .collect()
    }

    /// Restriction to a subset of variables, keeping this trajectory's
    /// column order.
    pub fn project(&self, vars: &[&str]) -> Result<Trajectory> {
        for v in vars {
            if !self.has(v) {
                return Err(TrajectoryError::UnknownVariable(v.to_string()));
            }
        }
        let columns = self
            .names
            .iter()
            .enumerate()
            .filter(|(_, n)| vars.iter().any(|v| v == n))
            .map(|(i, n)| (n.clone(), self.cols[i].clone()))
            .collect();
        Trajectory::new(self.grid, columns)
    }

    /// Restriction to a time interval. Endpoints snap to the nearest grid
    /// point; the resulting slice covers `[snap(lo), snap(hi))`.
    pub fn slice(&self, iv: TimeInterval) -> Result<TrajectorySlice> {
        let a = self.grid.snap(iv.lo)?;
        let b = self.grid.snap(iv.hi)?;
        if a >= b {
            return Err(TrajectoryError::EmptySlice { lo: iv.lo, hi: iv.hi });
        }
        let sub = TimeGrid {
            start: self.grid.time(a),
            step: self.grid.step,
            count: b - a,
        };
        let columns = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), self.cols[i][a..b].to_vec()))
            .collect();
        // The upper endpoint is taken from the parent lattice, not
        // accumulated as start + count * step: the half-open boundary must
        // compare exactly against the parent's own grid times.
        let hi = if b == self.grid.count {
            self.grid.end()
        } else {
            self.grid.time(b)
        };
        Ok(TrajectorySlice {
            interval: TimeInterval { lo: sub.start, hi },
            traj: Trajectory::new(sub, columns)?,
        })
    }

    /// Pointwise equality on the shared variables over `iv`, within an
    /// absolute tolerance. Grids must share step and phase; both
    /// trajectories must cover `iv`.
    pub fn equals_on(&self, other: &Trajectory, iv: TimeInterval, tol: f64) -> Result<bool> {
        self.grid.aligned_with(&other.grid)?;
        let shared: Vec<&String> = self.names.iter().filter(|n| other.has(n)).collect();
        if shared.is_empty() {
            return Err(TrajectoryError::NoSharedVariables);
        }
        let a0 = self.grid.snap(iv.lo)?;
        let a1 = self.grid.snap(iv.hi)?;
        let b0 = other.grid.snap(iv.lo)?;
        for name in shared {
            let xs = self.column(name)?;
            let ys = other.column(name)?;
            for k in 0..(a1 - a0) {
                let x = xs[a0 + k];
                let y = *ys
                    .get(b0 + k)
                    .ok_or(TrajectoryError::OutOfRange { t: iv.hi, lo: other.grid.start, hi: other.grid.end() })?;
                if (x - y).abs() > tol {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Replaces samples inside each slice's interval for that slice's
    /// variables; everything else is copied unchanged. Slices must cover
    /// only variables of this trajectory, align with its grid, and must
    /// not overlap on a shared variable.
    pub fn override_with(&self, slices: &[TrajectorySlice]) -> Result<Trajectory> {
        for (i, s) in slices.iter().enumerate() {
            for n in s.traj.names() {
                if !self.has(n) {
                    return Err(TrajectoryError::UnknownVariable(n.clone()));
                }
                for t in &slices[..i] {
                    if t.traj.has(n) && t.interval.overlaps(&s.interval) {
                        return Err(TrajectoryError::OverlappingSlices(n.clone()));
                    }
                }
            }
            self.grid.aligned_with(s.traj.grid())?;
        }
        let mut cols = self.cols.clone();
        for s in slices {
            let at = self.grid.snap(s.interval.lo)?;
            for name in s.traj.names() {
                let src = s.traj.column(name)?;
                let ci = self.index[name];
                let dst = &mut cols[ci];
                for (k, v) in src.iter().enumerate() {
                    let j = at + k;
                    if j < dst.len() {
                        dst[j] = *v;
                    } else {
                        return Err(TrajectoryError::OutOfRange {
                            t: s.interval.hi,
                            lo: self.grid.start,
                            hi: self.grid.end(),
                        });
                    }
                }
            }
        }
        let columns = self
            .names
            .iter()
            .cloned()
            .zip(cols)
            .collect();
        Trajectory::new(self.grid, columns)
    }

    /// Serializes as `time,var1,...` CSV with one row per grid point.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for k in 0..self.grid.count {
            out.push_str(&format!("{}", self.grid.time(k)));
            for col in &self.cols {
                out.push_str(&format!(",{}", col[k]));
            }
            out.push('\n');
        }
        out
    }

    /// Parses `time,var1,...` CSV sampled at a uniform step.
    pub fn from_csv(text: &str) -> Result<Trajectory> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(TrajectoryError::Csv {
            line: 1,
            msg: "missing header".into(),
        })?;
        let mut fields = header.split(',').map(str::trim);
        match fields.next() {
            Some("time") => {}
            _ => {
                return Err(TrajectoryError::Csv {
                    line: 1,
                    msg: "first column must be `time`".into(),
                })
            }
        }
        let names: Vec<String> = fields.map(str::to_string).collect();
        let mut times = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
        for (li, line) in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != names.len() + 1 {
                return Err(TrajectoryError::Csv {
                    line: li + 1,
                    msg: format!("expected {} cells, got {}", names.len() + 1, cells.len()),
                });
            }
            let parse = |s: &str, li: usize| {
                s.parse::<f64>().map_err(|e| TrajectoryError::Csv {
                    line: li + 1,
                    msg: format!("bad number {s:?}: {e}"),
                })
            };
            times.push(parse(cells[0], li)?);
            for (i, c) in cells[1..].iter().enumerate() {
                cols[i].push(parse(c, li)?);
            }
        }
        if times.len() < 2 {
            return Err(TrajectoryError::Csv {
                line: 0,
                msg: "need at least two rows to determine the step".into(),
            });
        }
        let step = times[1] - times[0];
        let grid = TimeGrid::new(times[0], step, times.len())?;
        for (k, t) in times.iter().enumerate() {
            if (t - grid.time(k)).abs() > step / 2.0 {
                return Err(TrajectoryError::Csv {
                    line: k + 2,
                    msg: format!("non-uniform time {t}"),
                });
            }
        }
        Trajectory::new(grid, names.into_iter().zip(cols).collect())
    }
}

/// A trajectory restricted to a single half-open interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySlice {
    interval: TimeInterval,
    traj: Trajectory,
}

impl TrajectorySlice {
    /// Wraps a trajectory whose grid spans exactly `interval`.
    pub fn new(interval: TimeInterval, traj: Trajectory) -> Result<Self> {
        let dom = traj.domain();
        if (dom.lo - interval.lo).abs() > traj.grid().step / 2.0
            || (dom.hi - interval.hi).abs() > traj.grid().step / 2.0
        {
            return Err(TrajectoryError::BadInterval {
                lo: interval.lo,
                hi: interval.hi,
            });
        }
        Ok(TrajectorySlice { interval, traj })
    }

    pub fn interval(&self) -> TimeInterval {
        self.interval
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    pub fn vars(&self) -> &[String] {
        self.traj.names()
    }

    /// Same variable set and same interval, up to grid snapping.
    pub fn same_shape(&self, other: &TrajectorySlice) -> bool {
        let step = self.traj.grid().step;
        let mut a: Vec<&String> = self.vars().iter().collect();
        let mut b: Vec<&String> = other.vars().iter().collect();
        a.sort();
        b.sort();
        a == b
            && (self.interval.lo - other.interval.lo).abs() <= step / 2.0
            && (self.interval.hi - other.interval.hi).abs() <= step / 2.0
    }
}

/// True when the slice sets pair off one-to-one: equal variable sets and
/// intervals, with values that differ beyond `tol` somewhere. Symmetric by
/// construction (a perfect matching is used in both directions).
pub fn is_alternative(xs: &[TrajectorySlice], ys: &[TrajectorySlice], tol: f64) -> bool {
    if xs.len() != ys.len() || xs.is_empty() {
        return false;
    }
    let n = xs.len();
    let mut edge = vec![vec![false; n]; n];
    for (i, x) in xs.iter().enumerate() {
        for (j, y) in ys.iter().enumerate() {
            if x.same_shape(y) {
                let eq = x
                    .trajectory()
                    .equals_on(y.trajectory(), x.interval(), tol)
                    .unwrap_or(true);
                edge[i][j] = !eq;
            }
        }
    }
    // Perfect matching over at most three slices: try all assignments.
    fn assign(edge: &[Vec<bool>], used: &mut Vec<bool>, i: usize) -> bool {
        if i == edge.len() {
            return true;
        }
        for j in 0..edge.len() {
            if edge[i][j] && !used[j] {
                used[j] = true;
                if assign(edge, used, i + 1) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    assign(&edge, &mut vec![false; n], 0)
}

/// Convenience: `is_alternative` at the default tolerance.
pub fn is_alternative_default(xs: &[TrajectorySlice], ys: &[TrajectorySlice]) -> bool {
    is_alternative(xs, ys, DEFAULT_TOL)
}
