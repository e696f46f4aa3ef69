//! Exact coverage certification, decoding of solver output into placements,
//! and a grid-restricted brute-force optimum for small instances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{Entity, ModelSpec, Variant};
use crate::graph::{EdgeId, Network, NodeId, PointOnNetwork, TOL};
use crate::solver::SolveResult;

/// A finite set of facility points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub points: Vec<PointOnNetwork>,
    pub source_variant: Option<Variant>,
    pub objective_claimed: usize,
}

impl Placement {
    pub fn new(points: Vec<PointOnNetwork>) -> Self {
        let n = points.len();
        Placement { points, source_variant: None, objective_claimed: n }
    }
}

/// An uncovered open interval of an edge, in offsets from its endpoint `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub edge: EdgeId,
    pub from: f64,
    pub to: f64,
}

impl Witness {
    pub fn midpoint(&self) -> PointOnNetwork {
        PointOnNetwork::on_edge(self.edge, (self.from + self.to) / 2.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub covered: bool,
    pub witness: Option<Witness>,
}

/// Facilities grouped for the interval test: node seeds for the distance
/// search and the offsets of interior facilities on each edge.
struct Facilities {
    seeds: Vec<(NodeId, f64)>,
    on_edge: Vec<Vec<f64>>,
}

impl Facilities {
    fn new(net: &Network, points: &[PointOnNetwork]) -> Result<Self> {
        let mut seeds = Vec::new();
        let mut on_edge = vec![Vec::new(); net.edge_count()];
        for &p in points {
            match net.canonical_point(p)? {
                PointOnNetwork::Node { node } => seeds.push((node, 0.0)),
                PointOnNetwork::Edge { edge, offset } => {
                    let e = net.edge(edge);
                    seeds.push((e.a, offset));
                    seeds.push((e.b, e.length - offset));
                    on_edge[edge.0].push(offset);
                }
            }
        }
        Ok(Facilities { seeds, on_edge })
    }
}

/// First uncovered interval of edge `e`, given the distance `da`/`db` from
/// the facilities to its endpoints and the offsets of facilities inside it.
/// Gaps no wider than twice the tolerance are ignored.
fn edge_gap(delta: f64, length: f64, da: f64, db: f64, inside: &[f64]) -> Option<(f64, f64)> {
    let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(inside.len() + 2);
    let ra = delta - da;
    let rb = delta - db;
    if ra >= -TOL {
        intervals.push((0.0, ra.max(0.0)));
    }
    if rb >= -TOL {
        intervals.push((length - rb.max(0.0), length));
    }
    for &q in inside {
        intervals.push((q - delta, q + delta));
    }
    intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut reach = 0.0;
    let mut started = false;
    for (lo, hi) in intervals {
        if hi < 0.0 {
            continue;
        }
        if !started {
            if lo > 2.0 * TOL {
                return Some((0.0, lo.min(length)));
            }
            started = true;
        } else if lo > reach + 2.0 * TOL {
            return Some((reach, lo.min(length)));
        }
        reach = f64::max(reach, hi);
        if reach >= length - 2.0 * TOL {
            return None;
        }
    }
    if !started {
        Some((0.0, length))
    } else {
        Some((reach, length))
    }
}

fn first_gap(net: &Network, delta: f64, dist: &[f64], on_edge: &[Vec<f64>]) -> Option<Witness> {
    for e in net.edges() {
        if let Some((from, to)) = edge_gap(delta, e.length, dist[e.a.0], dist[e.b.0], &on_edge[e.id.0]) {
            return Some(Witness { edge: e.id, from, to });
        }
    }
    None
}

/// Whether every point of the network lies within `delta` of some facility.
/// On failure the report carries the first uncovered interval found.
pub fn is_cover(net: &Network, delta: f64, points: &[PointOnNetwork]) -> Result<CoverReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidRadius(delta));
    }
    let fac = Facilities::new(net, points)?;
    let dist = net.multi_source_distances(&fac.seeds, delta + TOL);
    let witness = first_gap(net, delta, &dist, &fac.on_edge);
    Ok(CoverReport { covered: witness.is_none(), witness })
}

/// Candidate points of the brute-force oracle: every node, every edge
/// midpoint and the interior multiples of `step` along each edge.
pub fn grid_candidates(net: &Network, step: f64) -> Vec<PointOnNetwork> {
    let mut out: Vec<PointOnNetwork> = net.nodes().map(PointOnNetwork::node).collect();
    for e in net.edges() {
        let mut offsets = vec![e.length / 2.0];
        let mut k = 1;
        while (k as f64) * step < e.length - 1e-12 {
            offsets.push(k as f64 * step);
            k += 1;
        }
        offsets.sort_by(f64::total_cmp);
        offsets.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
        out.extend(offsets.into_iter().map(|q| PointOnNetwork::on_edge(e.id, q)));
    }
    out
}

pub const DEFAULT_MAX_CANDIDATES: usize = 60;

/// Smallest grid-restricted cover, found by exhaustive search over subsets
/// of increasing size. Refuses grids with more than `max_candidates` points.
pub fn brute_force_optimum(
    net: &Network,
    delta: f64,
    grid_step: f64,
    max_candidates: usize,
) -> Result<(usize, Placement)> {
    if grid_step.is_nan() || grid_step <= 0.0 {
        return Err(Error::InvalidArgument(format!("grid step {grid_step} must be positive")));
    }
    let candidates = grid_candidates(net, grid_step);
    if candidates.len() > max_candidates {
        return Err(Error::TooManyCandidates { count: candidates.len(), limit: max_candidates });
    }
    brute_force_over(net, delta, &candidates)
}

/// Smallest cover drawn from an explicit candidate list.
pub fn brute_force_over(net: &Network, delta: f64, candidates: &[PointOnNetwork]) -> Result<(usize, Placement)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidRadius(delta));
    }
    let n = net.node_count();
    let mut cand_dist = Vec::with_capacity(candidates.len());
    let mut cand_edge = Vec::with_capacity(candidates.len());
    for &c in candidates {
        let fac = Facilities::new(net, &[c])?;
        cand_dist.push(net.multi_source_distances(&fac.seeds, delta + TOL));
        cand_edge.push(match net.canonical_point(c)? {
            PointOnNetwork::Edge { edge, offset } => Some((edge, offset)),
            PointOnNetwork::Node { .. } => None,
        });
    }

    struct Search<'a> {
        net: &'a Network,
        delta: f64,
        cand_dist: &'a [Vec<f64>],
        cand_edge: &'a [Option<(EdgeId, f64)>],
        chosen: Vec<usize>,
    }

    impl Search<'_> {
        fn covered(&self, dist: &[f64]) -> bool {
            let mut on_edge = vec![Vec::new(); self.net.edge_count()];
            for &c in &self.chosen {
                if let Some((e, q)) = self.cand_edge[c] {
                    on_edge[e.0].push(q);
                }
            }
            first_gap(self.net, self.delta, dist, &on_edge).is_none()
        }

        fn go(&mut self, start: usize, left: usize, dist: &[f64]) -> bool {
            if left == 0 {
                return self.covered(dist);
            }
            let total = self.cand_dist.len();
            for c in start..=total - left {
                let next: Vec<f64> = dist.iter().zip(&self.cand_dist[c]).map(|(x, y)| x.min(*y)).collect();
                self.chosen.push(c);
                if self.go(c + 1, left - 1, &next) {
                    return true;
                }
                self.chosen.pop();
            }
            false
        }
    }

    let mut search = Search { net, delta, cand_dist: &cand_dist, cand_edge: &cand_edge, chosen: Vec::new() };
    search.chosen = (0..candidates.len()).collect();
    let all =
        cand_dist.iter().fold(vec![f64::INFINITY; n], |acc, d| acc.iter().zip(d).map(|(x, y)| x.min(*y)).collect());
    if !search.covered(&all) {
        return Err(Error::InvalidArgument("the candidate grid cannot cover the network".into()));
    }
    for k in 1..=candidates.len() {
        search.chosen.clear();
        if search.go(0, k, &vec![f64::INFINITY; n]) {
            let points = search.chosen.iter().map(|&c| candidates[c]).collect();
            return Ok((k, Placement::new(points)));
        }
    }
    unreachable!("the full candidate set covers the network")
}

/// Reads the facility placement encoded by a solution of `model`.
/// Long edges in reduced models yield a run of points spaced `2 delta` apart
/// starting at `q_e`; their number is `floor(l / 2 delta) + 1 - u_e`, the
/// edge's contribution to the objective.
pub fn decode(model: &ModelSpec, result: &SolveResult, net: &Network) -> Result<Placement> {
    let values = result
        .values
        .as_ref()
        .ok_or_else(|| Error::InconsistentSolution("solution carries no variable values".into()))?;
    let value = |i: usize| values[i];
    let delta = model.delta;
    let mut points = Vec::new();
    for (i, var) in model.variables.iter().enumerate() {
        match var.entity {
            Entity::NodeFacility(v) if value(i) > 0.5 => points.push(PointOnNetwork::node(v)),
            Entity::EdgeFacility(e) if value(i) > 0.5 && !model.is_long(e) => {
                let edge = net.try_edge(e)?;
                let q = model.coordinate(e).map(value).unwrap_or(0.0);
                if q > edge.length + 1e-6 || q < -1e-6 {
                    return Err(Error::InconsistentSolution(format!(
                        "edge {e} of length {} hosts a facility at offset {q}",
                        edge.length
                    )));
                }
                points.push(net.canonical_point(PointOnNetwork::on_edge(e, q.clamp(0.0, edge.length)))?);
            }
            _ => {}
        }
    }
    for &e in &model.long_edges {
        let edge = net.try_edge(e)?;
        let q = model.coordinate(e).map(value).unwrap_or(0.0).max(0.0);
        let u = model.split_indicator(e).map(value).unwrap_or(0.0) > 0.5;
        let k = long_edge_periods(edge.length, delta);
        let count = if u { k } else { k + 1 };
        for j in 0..count {
            let x = q + 2.0 * delta * j as f64;
            if x > edge.length + 1e-6 {
                return Err(Error::InconsistentSolution(format!(
                    "long edge {e}: point {j} at {x} beyond length {}",
                    edge.length
                )));
            }
            points.push(net.canonical_point(PointOnNetwork::on_edge(e, x.min(edge.length)))?);
        }
    }
    let objective_claimed = result.incumbent.map(|v| v.round().max(0.0) as usize).unwrap_or(points.len());
    Ok(Placement { points, source_variant: Some(model.variant), objective_claimed })
}

/// `floor(l / 2 delta)`, robust to rounding when the ratio is integral.
pub fn long_edge_periods(length: f64, delta: f64) -> usize {
    let ratio = length / (2.0 * delta);
    let k = ratio.floor();
    if ratio - k > 1.0 - 1e-9 {
        k as usize + 1
    } else {
        k as usize
    }
}

/// `l - 2 delta floor(l / 2 delta)`, the length left after the full periods.
pub fn tail_length(length: f64, delta: f64) -> f64 {
    (length - 2.0 * delta * long_edge_periods(length, delta) as f64).max(0.0)
}
