//! Exact flows, simulation over switching graphs, steering and path tracking.
//!
//! In matrix form the dynamics read `Ẋ = M(u) X` with `X` the `N × n`
//! configuration matrix and `M(u) = Σ u_ij A_ij`. For constant controls the
//! flow over a duration `h` is `X ↦ exp(hM) X`, so piecewise-constant
//! controls are integrated exactly; only state feedback uses a time stepper.

mod expm;
mod steer;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use expm::expm;
pub use steer::{
    steer, track_path, SteerOptions, SteerOutcome, SteerStatus, TrackOptions, TrackOutcome,
};

use crate::{Configuration, Digraph, Error, Result};

/// Control value per edge `(i, j)`, 0-based.
pub type EdgeControls = BTreeMap<(usize, usize), f64>;

/// `M = Σ u_ij A_ij` as a dense `N × N` matrix.
pub fn control_matrix(size: usize, controls: &EdgeControls) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(size, size);
    for (&(i, j), &u) in controls {
        m[(i, j)] += u;
        m[(i, i)] -= u;
    }
    m
}

fn check_edges(g: &Digraph, controls: &EdgeControls) -> Result<()> {
    match controls.keys().find(|&&(i, j)| !g.has_edge(i, j)) {
        Some(&(i, j)) => Err(Error::UnknownEdge { i, j }),
        None => Ok(()),
    }
}

/// State after holding `controls` constant on `g` for a duration `h`.
pub fn flow_constant(
    g: &Digraph,
    controls: &EdgeControls,
    p: &Configuration,
    h: f64,
) -> Result<Configuration> {
    if h < 0.0 || h.is_nan() {
        return Err(Error::NegativeDuration(h));
    }
    if p.num_agents() != g.num_vertices() {
        return Err(Error::SizeMismatch {
            expected: g.num_vertices(),
            found: p.num_agents(),
        });
    }
    check_edges(g, controls)?;
    Ok(apply_flow(controls, p, h))
}

pub(crate) fn apply_flow(controls: &EdgeControls, p: &Configuration, h: f64) -> Configuration {
    if h == 0.0 || controls.values().all(|&u| u == 0.0) {
        return p.clone();
    }
    let phi = expm(&(control_matrix(p.num_agents(), controls) * h));
    Configuration::from_matrix(&(phi * p.as_matrix())).expect("flow keeps coordinates finite")
}

/// Right-continuous piecewise-constant graph signal on `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSchedule {
    segments: Vec<(f64, Digraph)>,
    horizon: f64,
}

impl GraphSchedule {
    pub fn new(segments: Vec<(f64, Digraph)>, horizon: f64) -> Result<Self> {
        let bad = |msg: String| Err(Error::InconsistentSchedule(msg));
        let Some((first, g0)) = segments.first() else {
            return bad("no graph segments".into());
        };
        if *first != 0.0 {
            return bad(format!("first segment starts at {first}, not 0"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return bad(format!("horizon {horizon} is not positive"));
        }
        for w in segments.windows(2) {
            if !(w[1].0 > w[0].0) {
                return bad(format!(
                    "switching times {} and {} not increasing",
                    w[0].0, w[1].0
                ));
            }
        }
        let last = segments.last().map_or(0.0, |s| s.0);
        if last >= horizon {
            return bad(format!(
                "switch at {last} is not before the horizon {horizon}"
            ));
        }
        if let Some((t, _)) = segments
            .iter()
            .find(|(_, g)| g.num_vertices() != g0.num_vertices())
        {
            return bad(format!("graph at t = {t} has a different vertex count"));
        }
        Ok(GraphSchedule { segments, horizon })
    }

    pub fn constant(g: Digraph, horizon: f64) -> Result<Self> {
        GraphSchedule::new(vec![(0.0, g)], horizon)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn segments(&self) -> &[(f64, Digraph)] {
        &self.segments
    }

    pub fn num_vertices(&self) -> usize {
        self.segments[0].1.num_vertices()
    }

    /// Switching times `t₁ < … < t_m`, excluding 0.
    pub fn switch_times(&self) -> Vec<f64> {
        self.segments[1..].iter().map(|s| s.0).collect()
    }

    /// Index of the segment active at `t` (right-continuous).
    pub fn segment_index(&self, t: f64) -> usize {
        self.segments
            .partition_point(|s| s.0 <= t)
            .saturating_sub(1)
    }

    pub fn graph_at(&self, t: f64) -> &Digraph {
        &self.segments[self.segment_index(t)].1
    }

    /// Parses `[{"t": 0.0, "graph": "..."}, …]` where each graph is either a
    /// file path (resolved against `base_dir`) or an inline edge list in the
    /// text format with `;` separating lines, e.g. `"N 3; 1 2; 2 3"`.
    pub fn from_json(text: &str, horizon: f64, base_dir: Option<&Path>) -> Result<Self> {
        let entries: Vec<ScheduleEntry> = serde_json::from_str(text)?;
        let mut segments = Vec::with_capacity(entries.len());
        for e in entries {
            let spec = e.graph.trim();
            let g = if is_inline_graph(spec) {
                Digraph::parse_text(spec)?
            } else {
                let path = match base_dir {
                    Some(dir) => dir.join(spec),
                    None => Path::new(spec).to_path_buf(),
                };
                let body = std::fs::read_to_string(&path)
                    .map_err(|err| Error::Io(format!("{}: {err}", path.display())))?;
                Digraph::parse_text(&body)?
            };
            segments.push((e.t, g));
        }
        GraphSchedule::new(segments, horizon)
    }

    /// Inline form of every graph.
    pub fn to_json(&self) -> String {
        let entries: Vec<ScheduleEntry> = self
            .segments
            .iter()
            .map(|(t, g)| ScheduleEntry {
                t: *t,
                graph: g
                    .to_text()
                    .trim_end()
                    .lines()
                    .collect::<Vec<_>>()
                    .join("; "),
            })
            .collect();
        serde_json::to_string_pretty(&entries).expect("schedule serializes")
    }
}

fn is_inline_graph(spec: &str) -> bool {
    spec.contains(';') || spec.contains('\n') || spec.starts_with("N ") || spec == "N"
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleEntry {
    t: f64,
    graph: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlInterval {
    pub start: f64,
    pub end: f64,
    pub controls: EdgeControls,
}

impl ControlInterval {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Piecewise-constant controls on a grid `0 = τ₀ < … < τ_M = T`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControlSchedule {
    intervals: Vec<ControlInterval>,
}

impl ControlSchedule {
    pub fn new(intervals: Vec<ControlInterval>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InconsistentSchedule(msg));
        let Some(first) = intervals.first() else {
            return bad("no control intervals".into());
        };
        if first.start != 0.0 {
            return bad(format!("controls start at {}, not 0", first.start));
        }
        for (k, iv) in intervals.iter().enumerate() {
            if !(iv.end > iv.start) {
                return bad(format!("interval {} is empty", k + 1));
            }
            if k > 0 && iv.start != intervals[k - 1].end {
                return bad(format!("gap or overlap before interval {}", k + 1));
            }
            if iv.controls.values().any(|u| !u.is_finite()) {
                return bad(format!("non-finite control in interval {}", k + 1));
            }
        }
        Ok(ControlSchedule { intervals })
    }

    /// `segments` equal intervals on `[0, horizon]`, all with zero controls on
    /// the given edges.
    pub fn uniform(horizon: f64, segments: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let values = vec![0.0; segments * edges.len()];
        ControlSchedule::from_values(horizon, segments, edges, &values)
    }

    /// Segment-major values: `values[s · |E| + e]` is the control of
    /// `edges[e]` on segment `s`.
    pub fn from_values(
        horizon: f64,
        segments: usize,
        edges: &[(usize, usize)],
        values: &[f64],
    ) -> Result<Self> {
        if segments == 0 || values.len() != segments * edges.len() {
            return Err(Error::SizeMismatch {
                expected: segments * edges.len(),
                found: values.len(),
            });
        }
        let at = |s: usize| {
            if s == segments {
                horizon
            } else {
                horizon * s as f64 / segments as f64
            }
        };
        let intervals = (0..segments)
            .map(|s| ControlInterval {
                start: at(s),
                end: at(s + 1),
                controls: edges
                    .iter()
                    .zip(&values[s * edges.len()..(s + 1) * edges.len()])
                    .map(|(&e, &u)| (e, u))
                    .collect(),
            })
            .collect();
        ControlSchedule::new(intervals)
    }

    pub fn intervals(&self) -> &[ControlInterval] {
        &self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.intervals.last().map_or(0.0, |iv| iv.end)
    }

    /// Appends another schedule shifted to start at the current horizon.
    pub fn append(&mut self, other: ControlSchedule) {
        let offset = self.horizon();
        for mut iv in other.intervals {
            iv.start += offset;
            iv.end += offset;
            self.intervals.push(iv);
        }
    }

    /// Sum of `|u| · duration` over all intervals and edges.
    pub fn l1_norm(&self) -> f64 {
        self.intervals
            .iter()
            .map(|iv| iv.duration() * iv.controls.values().map(|u| u.abs()).sum::<f64>())
            .sum()
    }

    /// Fails unless every interval sits inside one graph segment and uses only
    /// that segment's edges, and the horizons agree.
    pub fn check_against(&self, schedule: &GraphSchedule) -> Result<()> {
        let bad = |msg: String| Err(Error::InconsistentSchedule(msg));
        let horizon = schedule.horizon();
        if (self.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
            return bad(format!(
                "controls end at {} but the graph schedule ends at {horizon}",
                self.horizon()
            ));
        }
        for (k, iv) in self.intervals.iter().enumerate() {
            let seg = schedule.segment_index(iv.start);
            if let Some((t, _)) = schedule.segments().get(seg + 1) {
                if *t < iv.end {
                    return bad(format!(
                        "interval {} straddles the switch at t = {t}",
                        k + 1
                    ));
                }
            }
            let g = &schedule.segments()[seg].1;
            if let Some(&(i, j)) = iv.controls.keys().find(|&&(i, j)| !g.has_edge(i, j)) {
                return bad(format!(
                    "interval {} uses edge {} -> {} absent from the active graph",
                    k + 1,
                    i + 1,
                    j + 1
                ));
            }
        }
        Ok(())
    }

    /// CSV with header `t_start,t_end,i,j,u`, 1-based vertices. An interval
    /// without controls is written as one row with empty `i`, `j`, `u`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t_start,t_end,i,j,u\n");
        for iv in &self.intervals {
            if iv.controls.is_empty() {
                let _ = writeln!(out, "{:.16e},{:.16e},,,", iv.start, iv.end);
            }
            for (&(i, j), u) in &iv.controls {
                let _ = writeln!(
                    out,
                    "{:.16e},{:.16e},{},{},{:.16e}",
                    iv.start,
                    iv.end,
                    i + 1,
                    j + 1,
                    u
                );
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut intervals: Vec<ControlInterval> = Vec::new();
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty control file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols != ["t_start", "t_end", "i", "j", "u"] {
            return Err(Error::Parse(format!(
                "unexpected control header {header:?}"
            )));
        }
        for (n, line) in lines.enumerate() {
            let row = n + 2;
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 5 {
                return Err(Error::Parse(format!("line {row}: expected 5 fields")));
            }
            let num = |s: &str| -> Result<f64> {
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {row}: bad number {s:?}")))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Parse(format!("line {row}: non-finite value {s:?}")))
                }
            };
            let vertex = |s: &str| -> Result<usize> {
                match s.parse::<usize>() {
                    Ok(v) if v >= 1 => Ok(v - 1),
                    _ => Err(Error::Parse(format!("line {row}: bad vertex {s:?}"))),
                }
            };
            let (start, end) = (num(fields[0])?, num(fields[1])?);
            let same = intervals
                .last()
                .is_some_and(|iv| iv.start == start && iv.end == end);
            if !same {
                intervals.push(ControlInterval {
                    start,
                    end,
                    controls: EdgeControls::new(),
                });
            }
            if fields[2].is_empty() && fields[3].is_empty() {
                continue;
            }
            let key = (vertex(fields[2])?, vertex(fields[3])?);
            let iv = intervals.last_mut().expect("pushed above");
            if iv.controls.insert(key, num(fields[4])?).is_some() {
                return Err(Error::Parse(format!(
                    "line {row}: duplicate edge in interval"
                )));
            }
        }
        ControlSchedule::new(intervals).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Sampled solution `p(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Configuration>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &Configuration {
        self.states.last().expect("trajectory has samples")
    }

    /// CSV with header `t,agent,x1,…,xn`, one row per agent and sample,
    /// agents 1-based.
    pub fn to_csv(&self) -> String {
        let dim = self.states.first().map_or(0, Configuration::dim);
        let mut out = String::from("t,agent");
        for c in 1..=dim {
            let _ = write!(out, ",x{c}");
        }
        out.push('\n');
        for (t, p) in self.times.iter().zip(&self.states) {
            for i in 0..p.num_agents() {
                let _ = write!(out, "{t:.16e},{}", i + 1);
                for c in 0..dim {
                    let _ = write!(out, ",{:.16e}", p.coordinate(c)[i]);
                }
                out.push('\n');
            }
        }
        out
    }
}

/// Control law for [`simulate`].
pub enum Controls<'a> {
    Piecewise(&'a ControlSchedule),
    /// `u(t, p)` on the edges of the graph active at `t`.
    Feedback(&'a dyn Fn(f64, &Configuration) -> EdgeControls),
}

/// Sample times: every breakpoint and every multiple of `dt` in `[0, T]`,
/// with grid points that land within `1e−9 · dt` of a breakpoint merged into it.
fn sample_grid(breaks: &[f64], horizon: f64, dt: f64) -> Vec<f64> {
    let mut times: Vec<f64> = breaks.to_vec();
    times.push(0.0);
    times.push(horizon);
    let steps = (horizon / dt).floor() as usize;
    times.extend((1..=steps).map(|k| k as f64 * dt).filter(|&t| t <= horizon));
    times.sort_by(f64::total_cmp);
    let tol = 1e-9 * dt;
    let is_break = |t: f64| t == 0.0 || t == horizon || breaks.contains(&t);
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        match out.last_mut() {
            Some(last) if t - *last <= tol => {
                if is_break(t) {
                    *last = t;
                }
            }
            _ => out.push(t),
        }
    }
    out
}

/// Integrates the system over `schedule.horizon()` from `p0`, sampling at
/// every breakpoint and every multiple of `dt`.
pub fn simulate(
    schedule: &GraphSchedule,
    controls: Controls<'_>,
    p0: &Configuration,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "time step {dt} is not positive"
        )));
    }
    if p0.num_agents() != schedule.num_vertices() {
        return Err(Error::SizeMismatch {
            expected: schedule.num_vertices(),
            found: p0.num_agents(),
        });
    }
    let horizon = schedule.horizon();
    let mut segment_bounds: Vec<f64> = schedule.segments().iter().map(|s| s.0).collect();
    segment_bounds.push(horizon);
    let min_segment = min_gap(&segment_bounds);
    match controls {
        Controls::Piecewise(cs) => {
            cs.check_against(schedule)?;
            let mut bounds: Vec<f64> = cs.intervals().iter().map(|iv| iv.start).collect();
            bounds.push(cs.horizon());
            let min_interval = min_gap(&bounds).min(min_segment);
            if dt > min_interval * (1.0 + 1e-9) {
                return Err(Error::StepTooLarge { dt, min_interval });
            }
            simulate_piecewise(cs, p0, &bounds, horizon, dt)
        }
        Controls::Feedback(law) => {
            if dt > min_segment * (1.0 + 1e-9) {
                return Err(Error::StepTooLarge {
                    dt,
                    min_interval: min_segment,
                });
            }
            simulate_feedback(schedule, law, p0, &segment_bounds, dt)
        }
    }
}

fn min_gap(bounds: &[f64]) -> f64 {
    bounds
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn simulate_piecewise(
    cs: &ControlSchedule,
    p0: &Configuration,
    bounds: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<Trajectory> {
    let times = sample_grid(bounds, horizon, dt);
    let mut states = Vec::with_capacity(times.len());
    let mut k = 0;
    let mut at_start = p0.clone();
    for &t in &times {
        // advance whole intervals ending at or before t
        while k < cs.intervals().len() && cs.intervals()[k].end <= t {
            let iv = &cs.intervals()[k];
            at_start = apply_flow(&iv.controls, &at_start, iv.duration());
            k += 1;
        }
        let state = match cs.intervals().get(k) {
            Some(iv) if t > iv.start => apply_flow(&iv.controls, &at_start, t - iv.start),
            _ => at_start.clone(),
        };
        states.push(state);
    }
    Ok(Trajectory { times, states })
}

fn simulate_feedback(
    schedule: &GraphSchedule,
    law: &dyn Fn(f64, &Configuration) -> EdgeControls,
    p0: &Configuration,
    bounds: &[f64],
    dt: f64,
) -> Result<Trajectory> {
    let horizon = schedule.horizon();
    let times = sample_grid(bounds, horizon, dt);
    let size = p0.num_agents();
    let mut states = vec![p0.clone()];
    let mut x = p0.as_matrix();
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let g = schedule.graph_at(t0);
        let h = t1 - t0;
        let field = |t: f64, x: &DMatrix<f64>| -> Result<DMatrix<f64>> {
            let p = Configuration::from_matrix(x)?;
            let u = law(t, &p);
            check_edges(g, &u)?;
            Ok(control_matrix(size, &u) * x)
        };
        let k1 = field(t0, &x)?;
        let k2 = field(t0 + h / 2.0, &(&x + &k1 * (h / 2.0)))?;
        let k3 = field(t0 + h / 2.0, &(&x + &k2 * (h / 2.0)))?;
        let k4 = field(t1, &(&x + &k3 * h))?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        states.push(Configuration::from_matrix(&x)?);
    }
    Ok(Trajectory { times, states })
}
