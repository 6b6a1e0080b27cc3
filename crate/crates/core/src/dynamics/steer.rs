//! Shooting-based steering and waypoint tracking.
//!
//! `steer` fits `M` equal segments of constant controls on every edge so that
//! the exact flow from `p0` lands on `p1`. The residual is minimized with a
//! Levenberg–Marquardt damped Gauss–Newton iteration on a forward-difference
//! Jacobian. Start 0 is the zero control; further starts are seeded Gaussian
//! draws and only run when start 0 does not converge.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use super::{
    expm, simulate, ControlInterval, ControlSchedule, Controls, GraphSchedule, Trajectory,
};
use crate::larc::larc_passes;
use crate::{Configuration, Digraph, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteerOptions {
    /// Number of starts including the zero start.
    pub starts: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Residual at which a start counts as converged.
    pub tolerance: f64,
    /// Relative forward-difference step.
    pub fd_step: f64,
    pub initial_damping: f64,
    /// Standard deviation of random starts, in units of `1 / T`.
    pub start_scale: f64,
}

impl Default for SteerOptions {
    fn default() -> Self {
        SteerOptions {
            starts: 4,
            seed: 0,
            max_iterations: 200,
            tolerance: 1e-10,
            fd_step: 1e-6,
            initial_damping: 1e-3,
            start_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SteerStatus {
    Converged,
    /// The best start stalled above the tolerance.
    NoProgress,
    /// The best start ran out of iterations above the tolerance.
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteerOutcome {
    pub schedule: ControlSchedule,
    /// `‖Φ(u; p0) − p1‖`.
    pub residual: f64,
    pub final_state: Configuration,
    pub status: SteerStatus,
    /// Index of the start that produced the schedule.
    pub start_index: usize,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

struct Problem<'a> {
    size: usize,
    edges: Vec<(usize, usize)>,
    segments: usize,
    h: f64,
    x0: DMatrix<f64>,
    target: &'a [f64],
}

impl Problem<'_> {
    fn endpoint(&self, u: &[f64]) -> DMatrix<f64> {
        let mut x = self.x0.clone();
        let width = self.edges.len();
        for s in 0..self.segments {
            let values = &u[s * width..(s + 1) * width];
            if values.iter().all(|&v| v == 0.0) {
                continue;
            }
            let mut m = DMatrix::zeros(self.size, self.size);
            for (&(i, j), &v) in self.edges.iter().zip(values) {
                m[(i, j)] += v;
                m[(i, i)] -= v;
            }
            x = expm(&(m * self.h)) * x;
        }
        x
    }

    fn residual(&self, u: &[f64]) -> DVector<f64> {
        let x = self.endpoint(u);
        DVector::from_iterator(
            self.target.len(),
            x.as_slice().iter().zip(self.target).map(|(a, b)| a - b),
        )
    }

    /// Forward differences, one column per parameter, evaluated in parallel
    /// and collected in parameter order.
    fn jacobian(&self, u: &[f64], r: &DVector<f64>, rel_step: f64) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = (0..u.len())
            .into_par_iter()
            .map(|k| {
                let step = rel_step * u[k].abs().max(1.0);
                let mut shifted = u.to_vec();
                shifted[k] += step;
                (self.residual(&shifted) - r) / step
            })
            .collect();
        DMatrix::from_columns(&cols)
    }
}

/// Solves `(JᵀJ + λI) δ = −Jᵀr`, through the dual system
/// `δ = −Jᵀ(JJᵀ + λI)⁻¹ r` when parameters outnumber residuals.
fn damped_step(j: &DMatrix<f64>, r: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    if j.ncols() > j.nrows() {
        let mut a = j * j.transpose();
        for k in 0..a.nrows() {
            a[(k, k)] += lambda;
        }
        let y = a.cholesky()?.solve(r);
        Some(-(j.transpose() * y))
    } else {
        let mut a = j.transpose() * j;
        for k in 0..a.nrows() {
            a[(k, k)] += lambda;
        }
        Some(-a.cholesky()?.solve(&(j.transpose() * r)))
    }
}

struct Run {
    u: Vec<f64>,
    residual: f64,
    status: SteerStatus,
    iterations: usize,
}

fn run_start(problem: &Problem<'_>, mut u: Vec<f64>, opts: &SteerOptions) -> Run {
    let mut r = problem.residual(&u);
    let mut norm = r.norm();
    let mut lambda = opts.initial_damping;
    let mut iterations = 0;
    let mut status = SteerStatus::MaxIterations;
    while iterations < opts.max_iterations {
        if norm <= opts.tolerance {
            status = SteerStatus::Converged;
            break;
        }
        iterations += 1;
        let j = problem.jacobian(&u, &r, opts.fd_step);
        let mut accepted = false;
        while lambda < 1e16 {
            if let Some(delta) = damped_step(&j, &r, lambda) {
                let trial: Vec<f64> = u.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
                let r_trial = problem.residual(&trial);
                let n_trial = r_trial.norm();
                if n_trial.is_finite() && n_trial < norm {
                    let gain = norm - n_trial;
                    u = trial;
                    r = r_trial;
                    norm = n_trial;
                    lambda = (lambda / 10.0).max(1e-15);
                    accepted = gain > 1e-14 * norm.max(1e-300) || norm <= opts.tolerance;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            status = SteerStatus::NoProgress;
            break;
        }
    }
    if norm <= opts.tolerance {
        status = SteerStatus::Converged;
    }
    Run {
        u,
        residual: norm,
        status,
        iterations,
    }
}

/// Piecewise-constant controls on the edges of `g` steering `p0` toward `p1`
/// over `[0, horizon]` with `segments` equal intervals.
///
/// The returned residual is whatever the best start achieved; the caller
/// decides whether it is acceptable.
pub fn steer(
    g: &Digraph,
    p0: &Configuration,
    p1: &Configuration,
    segments: usize,
    horizon: f64,
    opts: &SteerOptions,
) -> Result<SteerOutcome> {
    for p in [p0, p1] {
        if p.num_agents() != g.num_vertices() || p.dim() != p0.dim() {
            return Err(Error::SizeMismatch {
                expected: g.num_vertices() * p0.dim(),
                found: p.as_slice().len(),
            });
        }
    }
    if segments == 0 {
        return Err(Error::InvalidArgument("need at least one segment".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} is not positive"
        )));
    }
    if opts.starts == 0 {
        return Err(Error::InvalidArgument("need at least one start".into()));
    }
    let mut warnings = Vec::new();
    for (name, p) in [("initial", p0), ("target", p1)] {
        if !larc_passes(p, g)? {
            warnings.push(format!(
                "{name} configuration fails the Lie algebra rank condition"
            ));
        }
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let problem = Problem {
        size: g.num_vertices(),
        edges: edges.clone(),
        segments,
        h: horizon / segments as f64,
        x0: p0.as_matrix(),
        target: p1.as_slice(),
    };
    let params = segments * edges.len();

    let mut best = run_start(&problem, vec![0.0; params], opts);
    let mut best_index = 0;
    if best.status != SteerStatus::Converged {
        let normal = Normal::new(0.0, opts.start_scale / horizon)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        for k in 1..opts.starts {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(k as u64));
            let u0: Vec<f64> = (0..params).map(|_| normal.sample(&mut rng)).collect();
            let run = run_start(&problem, u0, opts);
            if run.residual < best.residual {
                best = run;
                best_index = k;
            }
        }
    }
    let schedule = ControlSchedule::from_values(horizon, segments, &edges, &best.u)?;
    let final_state = Configuration::from_matrix(&problem.endpoint(&best.u))?;
    Ok(SteerOutcome {
        schedule,
        residual: best.residual,
        final_state,
        status: best.status,
        start_index: best_index,
        iterations: best.iterations,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackOptions {
    pub steer: SteerOptions,
    /// Control segments per steering leg.
    pub segments: usize,
    /// Legs per waypoint interval; intermediate targets interpolate the two
    /// waypoints linearly.
    pub substeps: usize,
    /// Sampling step for the deviation check; defaults to a tenth of the
    /// shortest leg.
    pub dt: Option<f64>,
    /// Start state when it differs from the first waypoint.
    #[serde(skip)]
    pub initial: Option<Configuration>,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            steer: SteerOptions::default(),
            segments: 2,
            substeps: 1,
            dt: None,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutcome {
    pub controls: ControlSchedule,
    pub trajectory: Trajectory,
    /// Largest distance between the trajectory and the piecewise-linear
    /// interpolation of the waypoints over the samples.
    pub max_deviation: f64,
    /// Steering residual of every leg, in order.
    pub leg_residuals: Vec<f64>,
    pub warnings: Vec<String>,
}

fn lerp(a: &Configuration, b: &Configuration, s: f64) -> Configuration {
    let coords = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x + s * (y - x))
        .collect();
    Configuration::from_coordinate_major(a.dim(), a.num_agents(), coords)
        .expect("interpolation of finite configurations")
}

/// Piecewise-linear interpolation of the waypoints at `t`.
fn reference_at(waypoints: &[(f64, Configuration)], t: f64) -> Configuration {
    let k = waypoints
        .partition_point(|w| w.0 <= t)
        .clamp(1, waypoints.len() - 1);
    let (t0, a) = &waypoints[k - 1];
    let (t1, b) = &waypoints[k];
    lerp(a, b, ((t - t0) / (t1 - t0)).clamp(0.0, 1.0))
}

/// Follows the waypoints by steering from each one to the next on the graph
/// active at the start of the interval, re-planning from the state actually
/// reached. Every leg must land within `ε/2` of its target.
pub fn track_path(
    schedule: &GraphSchedule,
    waypoints: &[(f64, Configuration)],
    epsilon: f64,
    opts: &TrackOptions,
) -> Result<TrackOutcome> {
    let bad = |msg: String| Err(Error::InconsistentSchedule(msg));
    if waypoints.len() < 2 {
        return bad("need at least two waypoints".into());
    }
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {epsilon} is not positive"
        )));
    }
    if opts.segments == 0 || opts.substeps == 0 {
        return Err(Error::InvalidArgument(
            "segments and substeps must be positive".into(),
        ));
    }
    let horizon = schedule.horizon();
    let (first, last) = (waypoints[0].0, waypoints[waypoints.len() - 1].0);
    if first != 0.0 || (last - horizon).abs() > 1e-12 * horizon.max(1.0) {
        return bad(format!(
            "waypoints span [{first}, {last}], not [0, {horizon}]"
        ));
    }
    if waypoints.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return bad("waypoint times must increase".into());
    }
    for t in schedule.switch_times() {
        if !waypoints.iter().any(|w| w.0 == t) {
            return bad(format!("switch at t = {t} is not a waypoint time"));
        }
    }
    let (dim, agents) = (waypoints[0].1.dim(), waypoints[0].1.num_agents());
    if let Some((_, p)) = waypoints
        .iter()
        .find(|(_, p)| p.dim() != dim || p.num_agents() != agents)
    {
        return Err(Error::SizeMismatch {
            expected: dim * agents,
            found: p.as_slice().len(),
        });
    }

    let mut warnings = Vec::new();
    for (k, (_, g)) in schedule.segments().iter().enumerate() {
        let verdict = g.structural_verdict(dim)?;
        if verdict.kind != crate::VerdictKind::GenericallyControllable {
            warnings.push(format!(
                "graph segment {} has verdict {}",
                k + 1,
                verdict.kind
            ));
        }
    }
    let scale = waypoints
        .iter()
        .map(|(_, p)| p.scale())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    for (k, w) in waypoints.windows(2).enumerate() {
        let gap = w[0].1.distance(&w[1].1);
        if gap > 0.5 * scale {
            warnings.push(format!(
                "waypoints {} and {} are {gap:.3e} apart, more than half the configuration scale",
                k + 1,
                k + 2
            ));
        }
    }

    let mut current = opts
        .initial
        .clone()
        .unwrap_or_else(|| waypoints[0].1.clone());
    let mut intervals: Vec<ControlInterval> = Vec::new();
    let mut leg_residuals = Vec::new();
    let mut shortest_leg = f64::INFINITY;
    let subs = opts.substeps;
    for (k, w) in waypoints.windows(2).enumerate() {
        let ((t0, a), (t1, b)) = (&w[0], &w[1]);
        let g = schedule.graph_at(*t0);
        // leg boundaries hit the waypoint times exactly
        let at = |s: usize| match s {
            0 => *t0,
            s if s == subs => *t1,
            s => t0 + (t1 - t0) * s as f64 / subs as f64,
        };
        for s in 1..=subs {
            let (start, end) = (at(s - 1), at(s));
            shortest_leg = shortest_leg.min(end - start);
            let target = if s == subs {
                b.clone()
            } else {
                lerp(a, b, s as f64 / subs as f64)
            };
            let out = steer(
                g,
                &current,
                &target,
                opts.segments,
                end - start,
                &opts.steer,
            )?;
            if out.residual > epsilon / 2.0 {
                return Err(Error::SegmentFailure {
                    index: k,
                    residual: out.residual,
                    limit: epsilon / 2.0,
                });
            }
            leg_residuals.push(out.residual);
            let m = opts.segments;
            let bp = |q: usize| {
                if q == m {
                    end
                } else {
                    start + (end - start) * q as f64 / m as f64
                }
            };
            for (q, iv) in out.schedule.intervals().iter().enumerate() {
                intervals.push(ControlInterval {
                    start: bp(q),
                    end: bp(q + 1),
                    controls: iv.controls.clone(),
                });
            }
            current = out.final_state;
        }
    }
    let controls = ControlSchedule::new(intervals)?;

    let dt = opts
        .dt
        .unwrap_or(shortest_leg / 10.0)
        .min(shortest_leg / opts.segments as f64);
    let start = opts
        .initial
        .clone()
        .unwrap_or_else(|| waypoints[0].1.clone());
    let trajectory = simulate(schedule, Controls::Piecewise(&controls), &start, dt)?;
    let max_deviation = trajectory
        .times
        .iter()
        .zip(&trajectory.states)
        .map(|(&t, p)| p.distance(&reference_at(waypoints, t)))
        .fold(0.0, f64::max);
    Ok(TrackOutcome {
        controls,
        trajectory,
        max_deviation,
        leg_residuals,
        warnings,
    })
}
