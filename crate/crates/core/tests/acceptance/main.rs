//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed. Pass criterion numbers to run a subset:
//! `cargo test -p netcover-core --test acceptance -- 1 2 9`.

mod oracle;

use std::collections::BTreeSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use netcover::bench::{run_grid, sgm, BenchReport, GridConfig};
use netcover::covers::process_network;
use netcover::formulations::{Family, ModelSpec};
use netcover::graph::fixtures::{path, single_edge};
use netcover::graph::NodeId;
use netcover::instances::{gen_random, radius_for, InstanceSet, RadiusPolicy};
use netcover::pipeline::{prepare, solve_network};
use netcover::solver::{Backend, InProcess, SolveOptions, SolveResult, Status};
use netcover::verify::{decode, is_cover};
use netcover::{Network, PointOnNetwork, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oracle::{grid_covers, sampled_cover, Distances};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn progress(msg: &str) {
    let _ = writeln!(std::io::stderr(), "    {msg}");
}

fn err(e: netcover::Error) -> String {
    e.to_string()
}

// ---------------------------------------------------------------------------
// Shared runs

/// One variant solved on one instance, kept for the model-level checks.
struct Run {
    variant: Variant,
    network: Network,
    model: ModelSpec,
    result: SolveResult,
    verified: bool,
}

impl Run {
    fn objective(&self) -> f64 {
        self.result.incumbent.expect("optimal runs carry an incumbent")
    }
}

struct InstanceRuns {
    id: String,
    radius: RadiusPolicy,
    /// Optimal runs in solve order; shorter than the variant list when one stopped early.
    runs: Vec<Run>,
    complete: bool,
    stopped: Option<String>,
    sf_rows: (usize, usize),
    f_rows: usize,
    max_degree: usize,
}

impl InstanceRuns {
    fn get(&self, v: Variant) -> &Run {
        self.runs.iter().find(|r| r.variant == v).expect("variant ran")
    }
}

const AGREEMENT_LIMIT: f64 = 300.0;
// The reduced model first: it is the cheapest to certify, so an instance that
// cannot be solved to optimality is dropped before the slow variants run.
const AGREEMENT_ORDER: [Variant; 5] = [Variant::RF, Variant::SF, Variant::F, Variant::F0, Variant::SFD];

fn solve_one(net: &Network, delta: f64, variant: Variant) -> Result<Run, String> {
    let prepared = prepare(net, delta, variant).map_err(err)?;
    let result = InProcess.solve(&prepared.model, &SolveOptions::with_time_limit(AGREEMENT_LIMIT)).map_err(err)?;
    let mut verified = false;
    if result.incumbent.is_some() {
        let placement = decode(&prepared.model, &result, &prepared.network).map_err(err)?;
        let lifted = placement
            .points
            .iter()
            .map(|&p| prepared.report.mapping.lift(net, p))
            .collect::<netcover::Result<Vec<_>>>()
            .map_err(err)?;
        verified = is_cover(net, delta, &lifted).map_err(err)?.covered;
    }
    Ok(Run { variant, network: prepared.network, model: prepared.model, result, verified })
}

fn run_variant_grid() -> Vec<InstanceRuns> {
    let mut out = Vec::new();
    for radius in [RadiusPolicy::Large, RadiusPolicy::Small] {
        let set = InstanceSet::random_a(radius, 0);
        for (i, inst) in set.instances.iter().enumerate() {
            let net = set.network(i).expect("random instance");
            let delta = radius_for(&net, radius);
            let sf = prepare(&net, delta, Variant::SF).expect("SF model").model;
            let f = prepare(&net, delta, Variant::F).expect("F model");
            let mut entry = InstanceRuns {
                id: inst.id.clone(),
                radius,
                runs: Vec::new(),
                complete: true,
                stopped: None,
                sf_rows: (sf.count(Family::NodeEdgeExclusion), sf.count(Family::Neighborhood)),
                f_rows: f.model.count(Family::NodeEdgeExclusion),
                max_degree: f.network.nodes().map(|v| f.network.degree(v)).max().unwrap_or(0),
            };
            for v in AGREEMENT_ORDER {
                let start = Instant::now();
                let run = solve_one(&net, delta, v);
                let secs = start.elapsed().as_secs_f64();
                match run {
                    Ok(run) if run.result.status == Status::Optimal => {
                        progress(&format!(
                            "{} {} {v}: optimal {} in {secs:.1}s",
                            entry.id,
                            radius.label(),
                            run.objective()
                        ));
                        entry.runs.push(run);
                    }
                    Ok(run) => {
                        let why = format!("{v} {} after {secs:.0}s", run.result.status);
                        progress(&format!("{} {}: {why}, instance excluded", entry.id, radius.label()));
                        entry.stopped = Some(why);
                        entry.complete = false;
                        break;
                    }
                    Err(e) => {
                        entry.stopped = Some(format!("{v} error: {e}"));
                        entry.complete = false;
                        break;
                    }
                }
            }
            out.push(entry);
        }
    }
    out
}

#[derive(Default)]
struct Shared {
    variant_grid: Option<Vec<InstanceRuns>>,
    trend: Option<BenchReport>,
}

impl Shared {
    fn variant_grid(&mut self) -> &[InstanceRuns] {
        self.variant_grid.get_or_insert_with(run_variant_grid)
    }

    fn trend(&mut self) -> Result<&BenchReport, String> {
        if self.trend.is_none() {
            let set = InstanceSet::random_a(RadiusPolicy::Large, 0);
            let config = GridConfig { backend: "highs".into(), ..GridConfig::default() };
            self.trend = Some(run_grid(&set, &[Variant::SFD, Variant::RF], &config).map_err(err)?);
        }
        Ok(self.trend.as_ref().expect("just set"))
    }
}

// ---------------------------------------------------------------------------
// Criteria

fn c1(_: &mut Shared) -> Check {
    let mut notes = Vec::new();
    let mut failures = Vec::new();
    for (length, expected) in [(3.5, 3.0), (2.0, 1.0)] {
        let start = Instant::now();
        let o = solve_network(&single_edge(length), 1.0, Variant::RF, &InProcess, &SolveOptions::with_time_limit(5.0))
            .map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        let note = format!("l={length}: {:?} ({}) in {secs:.2}s, expected {expected}", o.incumbent, o.status);
        if o.status != Status::Optimal || o.incumbent != Some(expected) || secs >= 5.0 || !o.verified() {
            // Evidence for the record: the smallest cover found by the oracle.
            let net = single_edge(length);
            let grid = netcover::verify::grid_candidates(&net, 0.05);
            let (best, witness) = netcover::verify::brute_force_over(&net, 1.0, &grid).map_err(err)?;
            failures.push(format!(
                "{note}; grid oracle finds a {best}-point cover {:?}",
                witness.points.iter().map(ToString::to_string).collect::<Vec<_>>()
            ));
        }
        notes.push(note);
    }
    if failures.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

fn c2(_: &mut Shared) -> Check {
    let mut notes = Vec::new();
    for v in [Variant::F, Variant::SF, Variant::RF] {
        let start = Instant::now();
        let o = solve_network(&path(8), 1.2, v, &InProcess, &SolveOptions::with_time_limit(10.0)).map_err(err)?;
        let secs = start.elapsed().as_secs_f64();
        ensure(o.status == Status::Optimal && o.incumbent == Some(3.0), || {
            format!("{v}: {} {:?}", o.status, o.incumbent)
        })?;
        ensure(o.verified(), || format!("{v}: placement rejected by the verifier"))?;
        ensure(secs < 10.0, || format!("{v}: {secs:.1}s"))?;
        notes.push(format!("{v} 3 in {secs:.2}s"));
    }
    Ok(notes.join(", "))
}

fn c3(shared: &mut Shared) -> Check {
    let grid = shared.variant_grid();
    let complete: Vec<&InstanceRuns> = grid.iter().filter(|g| g.complete).collect();
    for g in &complete {
        let rf = g.get(Variant::RF).objective();
        for v in [Variant::F0, Variant::F, Variant::SF] {
            let x = g.get(v).objective();
            ensure((x - rf).abs() < 1e-6, || format!("{} {}: {v} {x} vs RF {rf}", g.id, g.radius.label()))?;
        }
        let sfd = g.get(Variant::SFD);
        ensure(sfd.objective() >= rf - 1e-6, || {
            format!("{} {}: SFD {} below RF {rf}", g.id, g.radius.label(), sfd.objective())
        })?;
        ensure(sfd.verified, || format!("{} {}: SFD placement is not a cover", g.id, g.radius.label()))?;
    }
    ensure(!complete.is_empty(), || "no instance solved to optimality by every variant".into())?;
    let unverified = complete.iter().flat_map(|g| g.runs.iter()).filter(|r| !r.verified).count();
    let excluded: Vec<String> = grid
        .iter()
        .filter(|g| !g.complete)
        .map(|g| format!("{} {} ({})", g.id, g.radius.label(), g.stopped.as_deref().unwrap_or("?")))
        .collect();
    Ok(format!(
        "{}/{} instances solved to optimality by all variants within {AGREEMENT_LIMIT}s agree; {} unverified placements; excluded: [{}]",
        complete.len(),
        grid.len(),
        unverified,
        excluded.join(", ")
    ))
}

fn c6(shared: &mut Shared) -> Check {
    let grid = shared.variant_grid();
    let mut compared = 0;
    for g in grid.iter().filter(|g| g.complete) {
        let (sf, f) = (g.get(Variant::SF).objective(), g.get(Variant::F).objective());
        ensure((sf - f).abs() < 1e-6, || format!("{} {}: SF {sf} vs F {f}", g.id, g.radius.label()))?;
        compared += 1;
    }
    let mut row_pairs = Vec::new();
    for g in grid.iter().filter(|g| g.max_degree >= 2) {
        let (ex, nb) = g.sf_rows;
        ensure(ex + nb < g.f_rows, || {
            format!(
                "{} {}: SF has {ex} exclusion + {nb} neighborhood rows, F has {} exclusion rows",
                g.id,
                g.radius.label(),
                g.f_rows
            )
        })?;
        row_pairs.push((ex + nb, g.f_rows));
    }
    let (sf_total, f_total) = row_pairs.iter().fold((0, 0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    Ok(format!(
        "SF = F on {compared} solved instances; node-edge rows SF {sf_total} < F {f_total} summed over {} models",
        row_pairs.len()
    ))
}

/// Residual each node needs from the decoded facilities: what the placement
/// leaves at `v`, but never more than covering its longest incident edge
/// entirely, nor more than the radius.
fn decoded_residuals(run: &Run) -> Result<Vec<f64>, String> {
    let placement = decode(&run.model, &run.result, &run.network).map_err(err)?;
    let dist = Distances::new(&run.network);
    let delta = run.model.delta;
    let mut values = run.result.values.clone().ok_or("no solution values")?;
    for v in run.network.nodes() {
        let j = run.model.var(netcover::formulations::Entity::Residual(v)).ok_or("missing r variable")?;
        let d = dist.to_set(&run.network, PointOnNetwork::node(v), &placement.points);
        let longest = run.network.incident(v).iter().map(|&e| run.network.edge(e).length).fold(0.0, f64::max);
        values[j] = (delta - d).max(0.0).min(longest.min(delta));
    }
    Ok(values)
}

fn c7(shared: &mut Shared) -> Check {
    let grid = shared.variant_grid();
    let (mut runs, mut rows, mut violations) = (0, 0, Vec::new());
    for g in grid {
        for run in &g.runs {
            let values = decoded_residuals(run)?;
            runs += 1;
            for c in &run.model.constraints {
                let Some(ind) = c.indicator else { continue };
                if values[ind.var] > 0.5 {
                    continue;
                }
                rows += 1;
                let viol = c.violation(&values);
                if viol > 1e-6 {
                    violations.push(format!("{} {} {}: {} by {viol:.3e}", g.id, g.radius.label(), run.variant, c.name));
                }
            }
        }
    }
    ensure(runs > 0, || "no optimal solutions to check".into())?;
    ensure(violations.is_empty(), || {
        format!(
            "{} violations: {}",
            violations.len(),
            violations.iter().take(5).cloned().collect::<Vec<_>>().join("; ")
        )
    })?;
    Ok(format!("{rows} switched-off residual rows over {runs} optimal solutions, no violations"))
}

fn c4(_: &mut Shared) -> Check {
    let mut checked = 0;
    for k in 0..20u64 {
        let n = 5 + (k % 6) as usize;
        let p = [0.3, 0.5][(k % 2) as usize];
        let net = gen_random(n, p, 100 + k).map_err(err)?;
        let max_l = net.edges().iter().map(|e| e.length).fold(0.0, f64::max);
        let delta = max_l * (1.0 + 1.5 * k as f64 / 19.0);
        let lib = process_network(&net, delta).map_err(err)?;
        let grid = grid_covers(&net, delta, 200, 1e-6);
        let tag = |what: &str, i: usize| format!("graph {k} (n={n}, delta={delta:.3}): {what} of {i} differs");
        for v in 0..n {
            let r = &lib.nodes[v];
            ensure(r.v == grid.v[v], || tag("V(v)", v))?;
            ensure(r.e == grid.e[v], || tag("E(v)", v))?;
            ensure(r.ec == grid.node_ec[v], || tag("Ec(v)", v))?;
            ensure(lib.vp[v] == grid.vp[v], || tag("Vp(v)", v))?;
            ensure(lib.ep[v] == grid.ep[v], || tag("Ep(v)", v))?;
        }
        for e in 0..net.edge_count() {
            ensure(lib.vc[e] == grid.vc[e], || tag("Vc(e)", e))?;
            ensure(lib.ec[e] == grid.ec[e], || tag("Ec(e)", e))?;
        }
        checked += 1;
    }
    Ok(format!("{checked} graphs, all cover sets equal to the 200-point grid evaluation"))
}

fn random_point(rng: &mut ChaCha8Rng, net: &Network) -> PointOnNetwork {
    if rng.random_bool(0.4) {
        PointOnNetwork::node(NodeId(rng.random_range(0..net.node_count())))
    } else {
        let e = &net.edges()[rng.random_range(0..net.edge_count())];
        PointOnNetwork::on_edge(e.id, rng.random_range(0.0..=e.length))
    }
}

fn c5(_: &mut Shared) -> Check {
    let (mut covers, mut gaps) = (0, 0);
    for k in 0..10u64 {
        let n = 6 + (k % 5) as usize;
        let net = gen_random(n, 0.4, 200 + k).map_err(err)?;
        let dist = Distances::new(&net);
        let delta = radius_for(&net, RadiusPolicy::Small) * (1.0 + 0.15 * k as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(k);
        for trial in 0..50 {
            let count = rng.random_range(1..=n);
            let points: Vec<PointOnNetwork> = (0..count).map(|_| random_point(&mut rng, &net)).collect();
            let report = is_cover(&net, delta, &points).map_err(err)?;
            let sampled = sampled_cover(&net, &dist, delta, &points, 2000, 1e-6);
            ensure(report.covered == sampled, || {
                format!("graph {k} trial {trial}: is_cover {} vs sampling {sampled}", report.covered)
            })?;
            if let Some(w) = report.witness {
                let d = dist.to_set(&net, w.midpoint(), &points);
                ensure(d > delta - 1e-6, || format!("graph {k} trial {trial}: witness at distance {d} <= {delta}"))?;
                gaps += 1;
            } else {
                covers += 1;
            }
        }
    }
    Ok(format!("500 placements on 10 graphs agree with 2000-point sampling ({covers} covers, {gaps} with a gap)"))
}

fn c8(shared: &mut Shared) -> Check {
    let value = sgm(&[1.0, 9.0], 1.0).map_err(err)?;
    ensure((value - (20f64.sqrt() - 1.0)).abs() < 1e-9, || format!("sgm({{1,9}},1) = {value}"))?;
    let mut rows = shared.trend()?.summary.clone();
    let small = InstanceSet::random_a(RadiusPolicy::Small, 0);
    let config = GridConfig { time_limit: 60.0, backend: "highs".into(), ..GridConfig::default() };
    rows.extend(run_grid(&small, &[Variant::SFD], &config).map_err(err)?.summary);
    for r in &rows {
        ensure(r.solved <= r.affected && r.affected <= r.total, || {
            format!("{} {} {}: S/A/T {}", r.benchmark, r.radius.label(), r.variant, r.sat())
        })?;
    }
    let sats: Vec<String> = rows.iter().map(|r| format!("{} {} {}", r.radius.label(), r.variant, r.sat())).collect();
    Ok(format!("sgm({{1,9}},1) = {value:.12}; S<=A<=T on {} summary rows ({})", rows.len(), sats.join(", ")))
}

/// Hub 0 joined to a 4-cycle 1-2-3-4; every node has degree 3 or 4.
fn wheel(scale: f64) -> Network {
    let edges =
        [(0, 1, 3.0), (0, 2, 3.4), (0, 3, 3.9), (0, 4, 4.5), (1, 2, 5.0), (2, 3, 3.2), (3, 4, 4.1), (4, 1, 4.8)];
    Network::new(5, edges.iter().map(|&(a, b, l)| (a, b, l * scale))).expect("wheel")
}

fn c9(_: &mut Shared) -> Check {
    let counts = |v: Variant, scale: f64| -> Result<(usize, usize), String> {
        let s = prepare(&wheel(scale), 1.0, v).map_err(err)?.model.size();
        Ok((s.variables, s.constraints))
    };
    let (rf1, rf10) = (counts(Variant::RF, 1.0)?, counts(Variant::RF, 10.0)?);
    let (sf1, sf10) = (counts(Variant::SF, 1.0)?, counts(Variant::SF, 10.0)?);
    ensure(rf1 == rf10, || format!("RF counts changed: {rf1:?} -> {rf10:?}"))?;
    ensure(sf10.0 > sf1.0 && sf10.1 > sf1.1, || format!("SF counts did not grow: {sf1:?} -> {sf10:?}"))?;
    Ok(format!("(variables, constraints) RF {rf1:?} -> {rf10:?}, SF {sf1:?} -> {sf10:?}"))
}

fn c10(shared: &mut Shared) -> Check {
    let report = shared.trend()?;
    let mut notes = Vec::new();
    for v in [Variant::SFD, Variant::RF] {
        let row = report.summary.iter().find(|r| r.variant == v).ok_or(format!("no {v} row"))?;
        ensure(row.sat() == "12/12/12", || format!("{v}: S/A/T {}", row.sat()))?;
        ensure(row.sgm_t < 60.0, || format!("{v}: SGM time {:.2}s", row.sgm_t))?;
        notes.push(format!("{v} {} SGM t {:.2}s", row.sat(), row.sgm_t));
    }
    Ok(notes.join(", "))
}

// ---------------------------------------------------------------------------

struct Criterion {
    id: u32,
    title: &'static str,
    run: fn(&mut Shared) -> Check,
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, title: "analytic single-edge optima", run: c1 },
    Criterion { id: 2, title: "path of eight nodes", run: c2 },
    Criterion { id: 3, title: "variant agreement", run: c3 },
    Criterion { id: 4, title: "cover sets vs grid oracle", run: c4 },
    Criterion { id: 5, title: "verifier vs dense sampling", run: c5 },
    Criterion { id: 6, title: "strengthening safety", run: c6 },
    Criterion { id: 7, title: "big-M validity", run: c7 },
    Criterion { id: 8, title: "SGM arithmetic and S<=A<=T", run: c8 },
    Criterion { id: 9, title: "RF size independent of lengths", run: c9 },
    Criterion { id: 10, title: "random_A large radius trend", run: c10 },
];

fn selected() -> Option<BTreeSet<u32>> {
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if args.is_empty() {
        return None;
    }
    Some(args.iter().filter_map(|a| a.parse().ok()).collect())
}

fn main() {
    let only = selected();
    let mut shared = Shared::default();
    let mut failed = Vec::new();
    for c in CRITERIA.iter().filter(|c| only.as_ref().map_or(true, |s| s.contains(&c.id))) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| (c.run)(&mut shared))).unwrap_or_else(|p| {
            Err(format!(
                "panicked: {:?}",
                p.downcast_ref::<String>().map(String::as_str).or(p.downcast_ref::<&str>().copied())
            ))
        });
        let secs = start.elapsed().as_secs_f64();
        let (label, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {:>2} {label}  {} [{secs:.1}s]: {detail}", c.id, c.title);
        let _ = std::io::stdout().flush();
        if outcome.is_err() {
            failed.push(c.id);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: {} failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
