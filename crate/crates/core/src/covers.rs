//! Cover sets consumed by the formulations.
//!
//! For a node `v`: the potential covers `E(v)`/`V(v)` (elements with a point
//! within the radius), the edges `Ec(v)` entirely covered by a facility at
//! `v`, and the partial covers `Vp(v)`, `Ep(v)`, `EIp(v)` that reach `v` but
//! fail to cover some incident edge completely. For an edge `e`: the nodes
//! `Vc(e)` and edges `Ec(e)` whose every point covers all of `e`.

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, End, Label, Network, NodeId, TOL};
use crate::preprocess::is_long;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeCoverResult {
    pub source: NodeId,
    #[serde(rename = "Ec_v")]
    pub ec: BTreeSet<EdgeId>,
    #[serde(rename = "E_v")]
    pub e: BTreeSet<EdgeId>,
    #[serde(rename = "V_v")]
    pub v: BTreeSet<NodeId>,
    /// Distances of the nodes within the radius; everything else is unreached.
    pub dist: BTreeMap<NodeId, f64>,
}

impl NodeCoverResult {
    /// Distance to `v`, or `f64::INFINITY` when `v` lies beyond the radius.
    pub fn dist(&self, v: NodeId) -> f64 {
        self.dist.get(&v).copied().unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub heap_pops: usize,
    pub relaxations: usize,
    pub mutual_calls: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverData {
    pub delta: f64,
    pub nodes: Vec<NodeCoverResult>,
    #[serde(rename = "Vc_e")]
    pub vc: Vec<BTreeSet<NodeId>>,
    #[serde(rename = "Ec_e")]
    pub ec: Vec<BTreeSet<EdgeId>>,
    #[serde(rename = "Vp_v")]
    pub vp: Vec<BTreeSet<NodeId>>,
    #[serde(rename = "Ep_v")]
    pub ep: Vec<BTreeSet<EdgeId>>,
    #[serde(rename = "EIp_v")]
    pub eip: Vec<BTreeSet<(EdgeId, End)>>,
    pub counters: Counters,
}

impl CoverData {
    /// `d(v, w)` when it is within the radius.
    pub fn dist(&self, v: NodeId, w: NodeId) -> Option<f64> {
        self.nodes[v.0].dist.get(&w).copied()
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn check_radius(delta: f64) -> Result<()> {
    if delta > 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidRadius(delta))
    }
}

/// Radius-truncated label-setting search from `s`.
pub fn node_cover(net: &Network, delta: f64, s: NodeId) -> Result<NodeCoverResult> {
    check_radius(delta)?;
    net.check_node(s)?;
    net.require_assumption(delta)?;
    Ok(node_cover_unchecked(net, delta, s, &mut Counters::default()))
}

fn node_cover_unchecked(net: &Network, delta: f64, s: NodeId, counters: &mut Counters) -> NodeCoverResult {
    let n = net.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut out = NodeCoverResult { source: s, ..Default::default() };
    let mut undetermined = Vec::new();
    dist[s.0] = 0.0;
    out.v.insert(s);
    heap.push(Label { dist: 0.0, node: s.0 });

    while let Some(Label { dist: du, node: u }) = heap.pop() {
        if settled[u] || du > dist[u] {
            continue;
        }
        if du > delta + TOL {
            break;
        }
        settled[u] = true;
        counters.heap_pops += 1;
        for &e in net.incident(NodeId(u)) {
            let edge = net.edge(e);
            let v = edge.other(NodeId(u)).0;
            if settled[v] {
                continue;
            }
            counters.relaxations += 1;
            out.e.insert(e);
            let ell = du + edge.length;
            if ell < dist[v] {
                dist[v] = ell;
                heap.push(Label { dist: ell, node: v });
            }
            // the whole edge is within reach through u; otherwise decide once
            // both endpoint labels are final
            if ell <= delta + TOL {
                out.ec.insert(e);
                out.v.insert(NodeId(v));
            } else {
                undetermined.push(e);
            }
        }
    }

    for e in undetermined {
        let edge = net.edge(e);
        let (da, db) = (dist[edge.a.0], dist[edge.b.0]);
        if out.v.contains(&edge.a) && out.v.contains(&edge.b) && (delta - da) + (delta - db) + TOL >= edge.length {
            out.ec.insert(e);
        }
    }
    out.dist = out.v.iter().map(|&v| (v, dist[v.0])).collect();
    out
}

/// Residual `delta - d_v(q)` of node `v` at offset `q` on `e'`, where `da`
/// and `db` are the distances from `v` to the endpoints of `e'`.
fn residual(delta: f64, da: f64, db: f64, length: f64, q: f64) -> f64 {
    delta - (da + q).min(db + length - q)
}

/// Whether every point of `e2` covers all of `e`, given that `e2` is
/// completely covered from both endpoints of `e`. The residual sum is convex
/// and piecewise linear in the offset, so the two breakpoints decide it.
pub fn mutual(net: &Network, delta: f64, nodes: &[NodeCoverResult], e: EdgeId, e2: EdgeId) -> Result<bool> {
    let edge = net.edge(e);
    let other = net.edge(e2);
    let (ra, rb) = (&nodes[edge.a.0], &nodes[edge.b.0]);
    if !(ra.ec.contains(&e2) && rb.ec.contains(&e2)) {
        return Err(Error::InvalidArgument(format!(
            "edge {e2} is not completely covered by both endpoints of edge {e}"
        )));
    }
    Ok(mutual_unchecked(
        delta,
        edge.length,
        other.length,
        [ra.dist(other.a), ra.dist(other.b)],
        [rb.dist(other.a), rb.dist(other.b)],
    ))
}

fn mutual_unchecked(delta: f64, le: f64, l2: f64, from_a: [f64; 2], from_b: [f64; 2]) -> bool {
    let q_a = (from_a[1] + l2 - from_a[0]) / 2.0;
    let q_b = (from_b[1] + l2 - from_b[0]) / 2.0;
    [q_a, q_b].iter().all(|&q| {
        residual(delta, from_a[0], from_a[1], l2, q) + residual(delta, from_b[0], from_b[1], l2, q) >= le - TOL
    })
}

/// Cover sets for a network satisfying `l_e <= delta` on every edge.
pub fn process_network(net: &Network, delta: f64) -> Result<CoverData> {
    check_radius(delta)?;
    net.require_assumption(delta)?;
    Ok(process_unchecked(net, delta))
}

/// Cover sets for a network whose edges are either at most `delta` or longer
/// than `2 delta`. Long edges never enter any complete cover.
pub fn process_reduced_network(net: &Network, delta: f64) -> Result<CoverData> {
    check_radius(delta)?;
    if let Some(e) = net.edges().iter().find(|e| e.length > delta + TOL && !is_long(e.length, delta)) {
        return Err(Error::AssumptionViolated { edge: e.id, length: e.length, delta });
    }
    Ok(process_unchecked(net, delta))
}

fn process_unchecked(net: &Network, delta: f64) -> CoverData {
    let n = net.node_count();
    let m = net.edge_count();
    let mut counters = Counters::default();
    let nodes: Vec<NodeCoverResult> = net.nodes().map(|s| node_cover_unchecked(net, delta, s, &mut counters)).collect();

    let mut vc = vec![BTreeSet::new(); m];
    let mut ec = vec![BTreeSet::new(); m];
    for e in net.edges() {
        if !is_long(e.length, delta) && e.length <= delta + TOL {
            vc[e.id.0].extend([e.a, e.b]);
            ec[e.id.0].insert(e.id);
        }
    }
    for r in &nodes {
        for &e in &r.ec {
            vc[e.0].insert(r.source);
        }
    }

    for e in net.edges() {
        let (ra, rb) = (&nodes[e.a.0], &nodes[e.b.0]);
        for &e2 in ra.ec.intersection(&rb.ec) {
            if e2 <= e.id {
                continue;
            }
            counters.mutual_calls += 1;
            let other = net.edge(e2);
            let from_a = [ra.dist(other.a), ra.dist(other.b)];
            let from_b = [rb.dist(other.a), rb.dist(other.b)];
            if mutual_unchecked(delta, e.length, other.length, from_a, from_b) {
                ec[e.id.0].insert(e2);
                ec[e2.0].insert(e.id);
            }
        }
    }

    let mut vp = vec![BTreeSet::new(); n];
    let mut ep = vec![BTreeSet::new(); n];
    let mut eip = vec![BTreeSet::new(); n];
    for v in net.nodes() {
        let r = &nodes[v.0];
        let incident = net.incident(v);
        for &w in &r.v {
            if incident.iter().any(|e| !nodes[w.0].ec.contains(e)) {
                vp[v.0].insert(w);
            }
        }
        for &e2 in &r.e {
            if !incident.iter().any(|e| !ec[e.0].contains(&e2)) {
                continue;
            }
            ep[v.0].insert(e2);
            let other = net.edge(e2);
            let (da, db) = (r.dist(other.a), r.dist(other.b));
            // an endpoint route is dropped when the other one reaches every
            // point of e2 at least as fast
            if da <= delta + TOL && db + other.length > da + TOL {
                eip[v.0].insert((e2, End::A));
            }
            if db <= delta + TOL && da + other.length > db + TOL {
                eip[v.0].insert((e2, End::B));
            }
        }
    }

    CoverData { delta, nodes, vc, ec, vp, ep, eip, counters }
}

/// Operation counters of a full cover computation.
pub fn complexity_probe(net: &Network, delta: f64) -> Result<Counters> {
    Ok(process_network(net, delta)?.counters)
}
