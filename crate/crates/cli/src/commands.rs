//! One function per subcommand.

use std::fmt::Write as _;
use std::path::Path;

use formctl_core::configspace::stratum_dimension;
use formctl_core::dynamics::{simulate as run_simulation, steer as run_steer, track_path};
use formctl_core::larc::{
    construct_witness_basis, lie_algebra_at_checked_with_tolerance, lie_algebra_at_with_tolerance,
};
use formctl_core::liealg::graph_lie_closure;
use formctl_core::{
    Configuration, ControlSchedule, Controls, Digraph, Error, LieBasis, Result, SampleKind,
    ScdReport, SteerOptions, StratumChart, TrackOptions, VerdictKind, RANK_TOLERANCE,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::io::{load_config, load_graph, load_schedule, read, Report};
use crate::{
    AnalyzeArgs, ChartArgs, ClosureArgs, Format, LarcArgs, SampleArgs, SampleTarget, SimulateArgs,
    SteerArgs, TrackArgs, WitnessArgs,
};

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

fn one_based(v: &[usize]) -> Vec<usize> {
    v.iter().map(|x| x + 1).collect()
}

fn set(v: &[usize]) -> String {
    let items: Vec<String> = v.iter().map(|x| (x + 1).to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn edges_json(g: &Digraph) -> Value {
    g.edges().map(|(i, j)| json!([i + 1, j + 1])).collect()
}

fn describe_components(scd: &ScdReport, ids: &[usize]) -> String {
    ids.iter()
        .map(|&c| {
            format!(
                "component {} = {} (size {})",
                c + 1,
                set(&scd.components[c]),
                scd.component_sizes[c]
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn analyze(args: AnalyzeArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let config = args.config.as_deref().map(load_config).transpose()?;
    let scd = g.coarse_scd()?;
    let verdict = scd.verdict(args.dim);
    let count = scd.num_components();
    let mut text = format!(
        "{count} component{}, W₊ = {}, verdict {}\n",
        if count == 1 { "" } else { "s" },
        set(&scd.maximal_set),
        verdict.kind
    );
    for (c, members) in scd.components.iter().enumerate() {
        let role = if scd.is_maximal(c) { ", maximal" } else { "" };
        writeln!(
            text,
            "  component {}: {} (size {}{role})",
            c + 1,
            set(members),
            members.len()
        )
        .unwrap();
    }
    if !verdict.offending_components.is_empty() {
        writeln!(
            text,
            "offending: {}",
            describe_components(&scd, &verdict.offending_components)
        )
        .unwrap();
    }
    let mut q = Value::Null;
    if let Some(p) = &config {
        if p.dim() != args.dim {
            return Err(Error::SizeMismatch {
                expected: args.dim,
                found: p.dim(),
            });
        }
        let membership = p.in_q(&scd)?;
        let ranks: Vec<Value> = membership
            .ranks
            .iter()
            .map(|&(c, r)| json!({"component": c + 1, "rank": r}))
            .collect();
        writeln!(
            text,
            "configuration in Q: {}",
            if membership.in_q { "yes" } else { "no" }
        )
        .unwrap();
        q = json!({"in_q": membership.in_q, "ranks": ranks});
    }
    writeln!(text, "n = {}; rank tolerance {RANK_TOLERANCE:e}", args.dim).unwrap();

    let mut report = Report::new(text, Format::Json);
    report.json = Some(pretty(&json!({
        "vertices": g.num_vertices(),
        "edges": g.num_edges(),
        "n": args.dim,
        "components": scd.components.iter().map(|c| one_based(c)).collect::<Vec<_>>(),
        "component_sizes": scd.component_sizes,
        "skeleton_edges": edges_json(&scd.skeleton),
        "maximal": one_based(&scd.maximal_set),
        "verdict": verdict.kind.to_string(),
        "offending_components": one_based(&verdict.offending_components),
        "q_membership": q,
        "rank_tolerance": RANK_TOLERANCE,
    })));
    report.emit(&args.output)
}

pub fn closure(args: ClosureArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let closed = g.transitive_closure();
    let basis = graph_lie_closure(&g)?;
    let check = basis.dimension() == closed.num_edges()
        && basis.span_equal(&LieBasis::of_graph(&closed))?;
    let verdict = if check { "PASS" } else { "FAIL" };
    let text = format!(
        "closure edges: {}; lie dimension: {}; LIEAL check: {verdict}\n",
        closed.num_edges(),
        basis.dimension()
    );
    let mut report = Report::new(text, Format::Text);
    report.artifact = Some(closed.to_text());
    report.json = Some(pretty(&json!({
        "closure_edges": closed.num_edges(),
        "lie_dimension": basis.dimension(),
        "lieal_check": check,
        "edges": edges_json(&closed),
    })));
    report.emit(&args.output)?;
    if check {
        Ok(())
    } else {
        Err(Error::InvalidArgument(
            "Lie closure differs from the closure-edge span".into(),
        ))
    }
}

fn check_agents(p: &Configuration, g: &Digraph) -> Result<()> {
    if p.num_agents() != g.num_vertices() {
        return Err(Error::SizeMismatch {
            expected: g.num_vertices(),
            found: p.num_agents(),
        });
    }
    Ok(())
}

pub fn larc(args: LarcArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let p = load_config(&args.config)?;
    check_agents(&p, &g)?;
    let larc = if args.debug_slow_path {
        lie_algebra_at_checked_with_tolerance(&p, &g, args.tol)?
    } else {
        lie_algebra_at_with_tolerance(&p, &g, args.tol)?
    };
    let path = if args.debug_slow_path {
        "checked"
    } else {
        "fast"
    };
    let text = format!(
        "{larc}\nper-agent ranks: {:?}; closure edges: {}; rank tolerance {:e}; path {path}\n",
        larc.per_agent_ranks, larc.closure_edge_count, args.tol
    );
    let mut report = Report::new(text, Format::Json);
    let mut value: Value = serde_json::from_str(&larc.to_json())?;
    value["rank_tolerance"] = json!(args.tol);
    value["slow_path"] = json!(args.debug_slow_path);
    report.json = Some(pretty(&value));
    report.emit(&args.output)
}

pub fn witness(args: WitnessArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let p = load_config(&args.config)?;
    check_agents(&p, &g)?;
    let scd = g.coarse_scd()?;
    let verdict = scd.verdict(p.dim());
    if verdict.kind != VerdictKind::GenericallyControllable {
        return Err(Error::InvalidArgument(format!(
            "verdict is {} for n = {}, refusing; offending: {}",
            verdict.kind,
            p.dim(),
            describe_components(&scd, &verdict.offending_components)
        )));
    }
    let basis = construct_witness_basis(&p, &g)?;
    let mut text = format!(
        "witness basis: {} vectors, rank {}\n",
        basis.len(),
        basis.rank()
    );
    for label in &basis.labels {
        writeln!(text, "  {label}").unwrap();
    }
    writeln!(text, "rank tolerance {RANK_TOLERANCE:e}").unwrap();
    let mut report = Report::new(text, Format::Csv);
    report.csv = Some(basis.to_csv());
    report.json = Some(pretty(&json!({
        "vectors": basis.vectors,
        "labels": basis.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
        "rank": basis.rank(),
    })));
    report.emit(&args.output)
}

pub fn chart(args: ChartArgs) -> Result<()> {
    let p = load_config(&args.config)?;
    let k = match args.k {
        Some(k) => k,
        None => p.rank(None)?,
    };
    let chart = StratumChart::new(&p, k)?;
    let target = args
        .target
        .as_deref()
        .map(load_config)
        .transpose()?
        .unwrap_or_else(|| p.clone());
    let coords = chart.forward(&target)?;
    let round_trip = chart.inverse(&coords)?.distance(&target);
    let zeros = chart.forced_zero_indices();
    let slice = zeros.iter().map(|&z| coords[z].abs()).fold(0.0, f64::max);
    let d_k = stratum_dimension(k, p.num_agents(), p.dim())?;
    let text = format!(
        "stratum k = {k}: dimension {d_k}, forced zeros {}, chosen agents {}\n\
         largest forced coordinate {slice:.3e}; round trip error {round_trip:.3e}\n",
        zeros.len(),
        set(chart.index_choice()),
    );
    let mut report = Report::new(text, Format::Json);
    report.csv = Some(
        coords
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join("\n"),
    );
    report.json = Some(pretty(&json!({
        "k": k,
        "stratum_dimension": d_k,
        "index_choice": one_based(chart.index_choice()),
        "forced_zero_indices": zeros,
        "coordinates": coords,
        "max_forced_coordinate": slice,
        "round_trip_error": round_trip,
        "rank_tolerance": RANK_TOLERANCE,
    })));
    report.emit(&args.output)
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let schedule = load_schedule(&args.schedule)?;
    let p0 = load_config(&args.config)?;
    let horizon = schedule.horizon();
    let controls = match &args.controls {
        Some(path) => ControlSchedule::from_csv(&read(path)?)?,
        None => {
            let cuts: Vec<f64> = schedule
                .switch_times()
                .into_iter()
                .chain([horizon])
                .collect();
            let mut intervals = Vec::new();
            let mut start = 0.0;
            for end in cuts.into_iter().filter(|&t| t > 0.0) {
                intervals.push(formctl_core::ControlInterval {
                    start,
                    end,
                    controls: Default::default(),
                });
                start = end;
            }
            ControlSchedule::new(intervals)?
        }
    };
    let dt = args.dt.unwrap_or(horizon / 100.0);
    let traj = run_simulation(&schedule, Controls::Piecewise(&controls), &p0, dt)?;
    let last = traj.final_state();
    let text = format!(
        "simulated {} samples over [0, {horizon}] with dt {dt}\n\
         rank {} -> {}; displacement {:.6e}; control l1 norm {:.6e}\n",
        traj.len(),
        p0.rank(None)?,
        last.rank(None)?,
        last.distance(&p0),
        controls.l1_norm()
    );
    let mut report = Report::new(text, Format::Csv);
    report.csv = Some(traj.to_csv());
    report.json = Some(pretty(&json!({
        "times": traj.times,
        "final_state": serde_json::from_str::<Value>(&last.to_json())?,
        "dt": dt,
        "horizon": horizon,
    })));
    report.emit(&args.output)
}

pub fn steer(args: SteerArgs) -> Result<()> {
    let g = load_graph(&args.graph)?;
    let p0 = load_config(&args.config)?;
    let p1 = load_config(&args.target)?;
    let opts = SteerOptions {
        seed: args.seed,
        tolerance: args.tol,
        ..SteerOptions::default()
    };
    let out = run_steer(&g, &p0, &p1, args.segments, args.horizon, &opts)?;
    let mut text = format!(
        "residual {:.3e} ({:?}, start {}, {} iterations)\nsegments {}, T {}, seed {}, tolerance {:e}\n",
        out.residual,
        out.status,
        out.start_index,
        out.iterations,
        args.segments,
        args.horizon,
        args.seed,
        args.tol
    );
    for w in &out.warnings {
        writeln!(text, "warning: {w}").unwrap();
    }
    let mut report = Report::new(text, Format::Csv);
    report.csv = Some(out.schedule.to_csv());
    report.json = Some(pretty(&json!({
        "residual": out.residual,
        "status": format!("{:?}", out.status),
        "start_index": out.start_index,
        "iterations": out.iterations,
        "warnings": out.warnings,
        "final_state": serde_json::from_str::<Value>(&out.final_state.to_json())?,
        "options": serde_json::to_value(&opts)?,
        "segments": args.segments,
        "horizon": args.horizon,
    })));
    report.emit(&args.output)
}

fn load_waypoints(path: &Path) -> Result<Vec<(f64, Configuration)>> {
    let entries: Vec<Value> = serde_json::from_str(&read(path)?)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let bad = |msg: &str| Error::Parse(format!("{}: {msg}", path.display()));
    entries
        .iter()
        .map(|entry| {
            let t = entry
                .get("t")
                .and_then(Value::as_f64)
                .ok_or_else(|| bad("waypoint without numeric \"t\""))?;
            let config = match entry.get("config") {
                Some(Value::String(file)) => {
                    let resolved = path
                        .parent()
                        .map(|d| d.join(file))
                        .unwrap_or_else(|| file.into());
                    load_config(&resolved)?
                }
                Some(obj @ Value::Object(_)) => Configuration::from_json(&obj.to_string())?,
                _ => return Err(bad("waypoint without \"config\"")),
            };
            Ok((t, config))
        })
        .collect()
}

pub fn track(args: TrackArgs) -> Result<()> {
    let schedule = load_schedule(&args.schedule)?;
    let waypoints = load_waypoints(&args.waypoints)?;
    let initial = args.config.as_deref().map(load_config).transpose()?;
    let opts = TrackOptions {
        steer: SteerOptions {
            seed: args.seed,
            ..SteerOptions::default()
        },
        segments: args.segments,
        substeps: args.substeps,
        dt: args.dt,
        initial,
    };
    let out = track_path(&schedule, &waypoints, args.epsilon, &opts)?;
    let within = out.max_deviation < args.epsilon;
    let worst_leg = out.leg_residuals.iter().copied().fold(0.0, f64::max);
    let mut text = format!(
        "max deviation {:.3e} vs epsilon {}: {}\n{} waypoints, worst leg residual {worst_leg:.3e}\n\
         segments {}, substeps {}, seed {}\n",
        out.max_deviation,
        args.epsilon,
        if within { "PASS" } else { "FAIL" },
        waypoints.len(),
        args.segments,
        args.substeps,
        args.seed
    );
    for w in &out.warnings {
        writeln!(text, "warning: {w}").unwrap();
    }
    let mut report = Report::new(text, Format::Csv);
    report.csv = Some(out.trajectory.to_csv());
    report.json = Some(pretty(&json!({
        "max_deviation": out.max_deviation,
        "epsilon": args.epsilon,
        "within_epsilon": within,
        "leg_residuals": out.leg_residuals,
        "warnings": out.warnings,
        "segments": args.segments,
        "substeps": args.substeps,
        "seed": args.seed,
    })));
    report.emit(&args.output)
}

pub fn sample(args: SampleArgs) -> Result<()> {
    let mut report = match args.kind {
        SampleTarget::Config => {
            let kind = match args.rank {
                Some(k) => SampleKind::Rank(k),
                None => SampleKind::Uniform,
            };
            let p = Configuration::sample(args.dim, args.agents, kind, args.seed)?;
            let text = format!(
                "sampled configuration: n = {}, N = {}, rank {}, seed {}\n",
                args.dim,
                args.agents,
                p.rank(None)?,
                args.seed
            );
            let mut report = Report::new(text, Format::Json);
            report.json = Some(p.to_json());
            report.csv = Some(p.to_csv());
            report
        }
        SampleTarget::Graph => {
            if !(0.0..=1.0).contains(&args.density) {
                return Err(Error::InvalidArgument(format!(
                    "density {} outside [0, 1]",
                    args.density
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let g = Digraph::random_weakly_connected(args.agents, args.density, &mut rng);
            let text = format!(
                "sampled graph: {} vertices, {} edges, density {}, seed {}\n",
                g.num_vertices(),
                g.num_edges(),
                args.density,
                args.seed
            );
            let mut report = Report::new(text, Format::Text);
            report.artifact = Some(g.to_text());
            report.json = Some(pretty(
                &json!({"vertices": g.num_vertices(), "edges": edges_json(&g)}),
            ));
            report
        }
    };
    // without --out the sample itself goes to stdout so it can be redirected
    if args.output.out.is_none() && args.output.format.is_none() {
        args_default_to_artifact(&mut report);
    }
    report.emit(&args.output)
}

fn args_default_to_artifact(report: &mut Report) {
    report.text = match report.default_format {
        Format::Json => report.json.clone(),
        Format::Csv => report.csv.clone(),
        Format::Text => report.artifact.clone(),
    }
    .unwrap_or_default();
}
