//! Network transformations that preserve the continuum: degree-two
//! contraction and edge subdivision.
//!
//! Every transformation returns a [`NetworkMap`] describing each output edge
//! as a chain of intervals of source edges, so placements can be moved between
//! the two networks in either direction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, Network, NodeId, PointOnNetwork, TOL};

/// An interval of a source edge, traversed from offset `from` to offset `to`
/// (so `from > to` means the source edge is walked backwards).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub source: EdgeId,
    pub from: f64,
    pub to: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        (self.to - self.from).abs()
    }

    fn reversed(self) -> Segment {
        Segment { source: self.source, from: self.to, to: self.from }
    }

    /// Source offset reached after walking `t` along the segment.
    fn at(&self, t: f64) -> f64 {
        if self.to >= self.from {
            self.from + t
        } else {
            self.from - t
        }
    }
}

/// Output-to-source correspondence of a transformation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkMap {
    /// Where each output node sits in the source network.
    pub nodes: Vec<PointOnNetwork>,
    /// Each output edge as consecutive source intervals, from its `a` to its `b`.
    pub edges: Vec<Vec<Segment>>,
}

impl NetworkMap {
    pub fn identity(net: &Network) -> Self {
        NetworkMap {
            nodes: net.nodes().map(PointOnNetwork::node).collect(),
            edges: net.edges().iter().map(|e| vec![Segment { source: e.id, from: 0.0, to: e.length }]).collect(),
        }
    }

    /// Maps a point of the output network to the source network.
    pub fn lift(&self, source: &Network, p: PointOnNetwork) -> Result<PointOnNetwork> {
        match p {
            PointOnNetwork::Node { node } => self.nodes.get(node.0).copied().ok_or(Error::UnknownNode(node)),
            PointOnNetwork::Edge { edge, offset } => {
                let chain = self.edges.get(edge.0).ok_or(Error::UnknownEdge(edge))?;
                let mut start = 0.0;
                for (i, seg) in chain.iter().enumerate() {
                    let len = seg.length();
                    if offset <= start + len || i + 1 == chain.len() {
                        let l = source.try_edge(seg.source)?.length;
                        let x = seg.at((offset - start).clamp(0.0, len)).clamp(0.0, l);
                        return source.canonical_point(PointOnNetwork::on_edge(seg.source, x));
                    }
                    start += len;
                }
                Err(Error::UnknownEdge(edge))
            }
        }
    }

    /// Maps a point of the source network into the output network.
    pub fn project(&self, source: &Network, output: &Network, p: PointOnNetwork) -> Result<PointOnNetwork> {
        let p = source.canonical_point(p)?;
        if let Some(i) = self.nodes.iter().position(|q| *q == p) {
            return Ok(PointOnNetwork::node(NodeId(i)));
        }
        let (src, x) = match p {
            PointOnNetwork::Edge { edge, offset } => (edge, offset),
            PointOnNetwork::Node { node } => {
                // a removed node lies inside some output edge; reach it through an incident source edge
                let e = source.incident(node).first().copied().ok_or(Error::UnknownNode(node))?;
                let edge = source.edge(e);
                (e, if edge.a == node { 0.0 } else { edge.length })
            }
        };
        for (j, chain) in self.edges.iter().enumerate() {
            let mut start = 0.0;
            for seg in chain {
                let (lo, hi) = if seg.from <= seg.to { (seg.from, seg.to) } else { (seg.to, seg.from) };
                if seg.source == src && x >= lo - TOL && x <= hi + TOL {
                    let l = output.edge(EdgeId(j)).length;
                    let offset = (start + (x - seg.from).abs()).clamp(0.0, l);
                    return output.canonical_point(PointOnNetwork::on_edge(EdgeId(j), offset));
                }
                start += seg.length();
            }
        }
        Err(Error::InvalidArgument(format!("point {p} has no image in the transformed network")))
    }

    /// `self` maps C→B and `inner` maps B→A; the result maps C→A.
    pub fn then(&self, inner: &NetworkMap, middle: &Network) -> Result<NetworkMap> {
        let nodes = self.nodes.iter().map(|&p| lift_through(inner, middle, p)).collect::<Result<Vec<_>>>()?;
        let mut edges = Vec::with_capacity(self.edges.len());
        for chain in &self.edges {
            let mut out = Vec::new();
            for seg in chain {
                out.extend(slice_chain(&inner.edges[seg.source.0], seg.from, seg.to));
            }
            edges.push(out);
        }
        Ok(NetworkMap { nodes, edges })
    }
}

fn lift_through(inner: &NetworkMap, middle: &Network, p: PointOnNetwork) -> Result<PointOnNetwork> {
    match p {
        PointOnNetwork::Node { node } => Ok(inner.nodes[node.0]),
        PointOnNetwork::Edge { edge, offset } => {
            let chain = &inner.edges[edge.0];
            let mut start = 0.0;
            for (i, seg) in chain.iter().enumerate() {
                if offset <= start + seg.length() || i + 1 == chain.len() {
                    return Ok(PointOnNetwork::on_edge(seg.source, seg.at(offset - start)));
                }
                start += seg.length();
            }
            Err(Error::UnknownEdge(middle.edge(edge).id))
        }
    }
}

/// The part of `chain` between chain offsets `x0` and `x1`, in that direction.
fn slice_chain(chain: &[Segment], x0: f64, x1: f64) -> Vec<Segment> {
    let (lo, hi) = if x0 <= x1 { (x0, x1) } else { (x1, x0) };
    let mut out = Vec::new();
    let mut start = 0.0;
    for seg in chain {
        let len = seg.length();
        let s = lo.max(start);
        let t = hi.min(start + len);
        if t - s > TOL * len.max(1.0) {
            out.push(Segment { source: seg.source, from: seg.at(s - start), to: seg.at(t - start) });
        }
        start += len;
    }
    if x0 > x1 {
        out.reverse();
        out.iter_mut().for_each(|s| *s = s.reversed());
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub n: usize,
    pub m: usize,
}

impl Counts {
    pub fn of(net: &Network) -> Self {
        Counts { n: net.node_count(), m: net.edge_count() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub original_counts: Counts,
    pub contracted_counts: Counts,
    pub subdivided_counts: Counts,
    pub mapping: NetworkMap,
}

/// Which length condition the subdivision enforces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every edge no longer than the radius.
    Assumption,
    /// Every edge either no longer than the radius or longer than twice it.
    Reduced,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "assumption" => Ok(Mode::Assumption),
            "reduced" => Ok(Mode::Reduced),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?}"))),
        }
    }
}

/// Long edges are strictly longer than `2 delta`.
pub fn is_long(length: f64, delta: f64) -> bool {
    length > 2.0 * delta + TOL
}

struct WorkEdge {
    a: usize,
    b: usize,
    length: f64,
    chain: Vec<Segment>,
}

impl WorkEdge {
    /// Chain walked starting from endpoint `v`.
    fn chain_from(&self, v: usize) -> Vec<Segment> {
        if v == self.a {
            self.chain.clone()
        } else {
            self.chain.iter().rev().map(|s| s.reversed()).collect()
        }
    }

    fn other(&self, v: usize) -> usize {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Removes degree-two nodes by concatenating their two edges, scanning nodes
/// in ascending order until nothing changes. A node whose two edges share both
/// endpoints is kept, since removing it would create a self-loop.
pub fn contract_degree_two(net: &Network) -> (Network, PreprocessReport) {
    let n = net.node_count();
    let mut edges: Vec<Option<WorkEdge>> = net
        .edges()
        .iter()
        .map(|e| {
            Some(WorkEdge {
                a: e.a.0,
                b: e.b.0,
                length: e.length,
                chain: vec![Segment { source: e.id, from: 0.0, to: e.length }],
            })
        })
        .collect();
    let mut adjacency: Vec<Vec<usize>> = net.nodes().map(|v| net.incident(v).iter().map(|e| e.0).collect()).collect();
    let mut alive = vec![true; n];

    let mut changed = true;
    while changed {
        changed = false;
        for v in 0..n {
            if !alive[v] || adjacency[v].len() != 2 {
                continue;
            }
            let (i1, i2) = (adjacency[v][0], adjacency[v][1]);
            let (e1, e2) = (edges[i1].as_ref().unwrap(), edges[i2].as_ref().unwrap());
            let x = e1.other(v);
            let y = e2.other(v);
            if x == y {
                continue;
            }
            let mut chain: Vec<Segment> = e1.chain_from(x);
            chain.extend(e2.chain_from(v));
            let length = e1.length + e2.length;
            let (a, b) = if x < y {
                (x, y)
            } else {
                chain.reverse();
                chain.iter_mut().for_each(|s| *s = s.reversed());
                (y, x)
            };
            edges[i1] = None;
            edges[i2] = None;
            let id = edges.len();
            edges.push(Some(WorkEdge { a, b, length, chain }));
            adjacency[x].retain(|&e| e != i1);
            adjacency[y].retain(|&e| e != i2);
            adjacency[x].push(id);
            adjacency[y].push(id);
            adjacency[v].clear();
            alive[v] = false;
            changed = true;
        }
    }

    let mut renumber = vec![usize::MAX; n];
    let mut node_map = Vec::new();
    for v in 0..n {
        if alive[v] {
            renumber[v] = node_map.len();
            node_map.push(PointOnNetwork::node(NodeId(v)));
        }
    }
    let mut triples = Vec::new();
    let mut edge_map = Vec::new();
    for e in edges.into_iter().flatten() {
        triples.push((renumber[e.a], renumber[e.b], e.length));
        edge_map.push(e.chain);
    }
    let out = Network::new(node_map.len(), triples).expect("contraction preserves connectivity");
    let report = PreprocessReport {
        original_counts: Counts::of(net),
        contracted_counts: Counts::of(&out),
        subdivided_counts: Counts::of(&out),
        mapping: NetworkMap { nodes: node_map, edges: edge_map },
    };
    (out, report)
}

fn subdivide_by<F>(net: &Network, pieces: F) -> (Network, PreprocessReport)
where
    F: Fn(f64) -> usize,
{
    let mut node_map: Vec<PointOnNetwork> = net.nodes().map(PointOnNetwork::node).collect();
    let mut triples = Vec::new();
    let mut edge_map = Vec::new();
    for e in net.edges() {
        let k = pieces(e.length).max(1);
        let piece = e.length / k as f64;
        // chain of node ids along the edge from a to b
        let mut along = vec![e.a.0];
        for i in 1..k {
            along.push(node_map.len());
            node_map.push(PointOnNetwork::on_edge(e.id, e.length * i as f64 / k as f64));
        }
        along.push(e.b.0);
        for i in 0..k {
            let from = e.length * i as f64 / k as f64;
            let to = if i + 1 == k { e.length } else { e.length * (i + 1) as f64 / k as f64 };
            let (u, w) = (along[i], along[i + 1]);
            let seg = Segment { source: e.id, from, to };
            triples.push((u, w, piece));
            edge_map.push(if u < w { seg } else { seg.reversed() });
        }
    }
    let out = Network::new(node_map.len(), triples).expect("subdivision preserves connectivity");
    let report = PreprocessReport {
        original_counts: Counts::of(net),
        contracted_counts: Counts::of(net),
        subdivided_counts: Counts::of(&out),
        mapping: NetworkMap { nodes: node_map, edges: edge_map.into_iter().map(|s| vec![s]).collect() },
    };
    (out, report)
}

/// Splits every edge longer than `delta` into `ceil(l / delta)` equal pieces.
pub fn subdivide_for_assumption(net: &Network, delta: f64) -> (Network, PreprocessReport) {
    subdivide_by(net, |l| if l <= delta + TOL { 1 } else { (l / delta - TOL).ceil() as usize })
}

/// Halves every edge with `delta < l <= 2 delta`; shorter and long edges stay.
pub fn subdivide_for_reduced(net: &Network, delta: f64) -> (Network, PreprocessReport) {
    subdivide_by(net, |l| if l > delta + TOL && !is_long(l, delta) { 2 } else { 1 })
}

/// Contraction followed by the subdivision for `mode`, with a composed map
/// from the final network back to `net`.
pub fn preprocess(net: &Network, delta: f64, mode: Mode) -> Result<(Network, PreprocessReport)> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidRadius(delta));
    }
    let (contracted, first) = contract_degree_two(net);
    let (out, second) = match mode {
        Mode::Assumption => subdivide_for_assumption(&contracted, delta),
        Mode::Reduced => subdivide_for_reduced(&contracted, delta),
    };
    let mapping = second.mapping.then(&first.mapping, &contracted)?;
    let report = PreprocessReport {
        original_counts: Counts::of(net),
        contracted_counts: Counts::of(&contracted),
        subdivided_counts: Counts::of(&out),
        mapping,
    };
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::instances::gen_random;
    use proptest::prelude::*;

    fn lengths(net: &Network) -> Vec<f64> {
        net.edges().iter().map(|e| e.length).collect()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * a.abs().max(1.0)
    }

    #[test]
    fn path_contracts_to_single_edge() {
        let (out, report) = contract_degree_two(&path(3));
        assert_eq!(out.node_count(), 2);
        assert_eq!(lengths(&out), vec![2.0]);
        assert_eq!(report.mapping.nodes, vec![PointOnNetwork::node(NodeId(0)), PointOnNetwork::node(NodeId(2))]);
        assert_eq!(report.original_counts, Counts { n: 3, m: 2 });
        assert_eq!(report.contracted_counts, Counts { n: 2, m: 1 });
    }

    #[test]
    fn triangle_contracts_once_then_stops() {
        // removing node 0 merges its edges into a parallel (1, 2) edge; the
        // next candidate would close a self-loop, so the digon survives
        let (out, _) = contract_degree_two(&triangle());
        assert_eq!(out.node_count(), 2);
        assert_eq!(out.edge_count(), 2);
        let mut ls = lengths(&out);
        ls.sort_by(f64::total_cmp);
        assert_eq!(ls, vec![1.0, 2.0]);
        assert!(out.edges().iter().all(|e| e.a == NodeId(0) && e.b == NodeId(1)));
    }

    #[test]
    fn star_unchanged() {
        let (out, _) = contract_degree_two(&star(3));
        assert_eq!(out, star(3));
    }

    #[test]
    fn assumption_subdivision_examples() {
        let (out, _) = subdivide_for_assumption(&single_edge(3.5), 1.0);
        assert_eq!(lengths(&out), vec![0.875; 4]);
        let (out, _) = subdivide_for_assumption(&single_edge(0.9), 1.0);
        assert_eq!(out, single_edge(0.9));
        let (out, _) = subdivide_for_assumption(&single_edge(2.0), 1.0);
        assert_eq!(lengths(&out), vec![1.0, 1.0]);
    }

    #[test]
    fn reduced_subdivision_examples() {
        let (out, _) = subdivide_for_reduced(&single_edge(1.5), 1.0);
        assert_eq!(lengths(&out), vec![0.75, 0.75]);
        let (out, _) = subdivide_for_reduced(&single_edge(5.0), 1.0);
        assert_eq!(out, single_edge(5.0));
        let (out, _) = subdivide_for_reduced(&single_edge(2.0), 1.0);
        assert_eq!(lengths(&out), vec![1.0, 1.0]);
        let (out, _) = subdivide_for_reduced(&single_edge(0.5), 1.0);
        assert_eq!(out, single_edge(0.5));
    }

    #[test]
    fn subdivision_map_orients_last_piece() {
        let (out, report) = subdivide_for_assumption(&single_edge(3.0), 1.0);
        // pieces: (0,2), (2,3), (1,3) with the last one stored from node 1
        let last = out.edge(EdgeId(2));
        assert_eq!((last.a, last.b), (NodeId(1), NodeId(3)));
        assert_eq!(report.mapping.edges[2], vec![Segment { source: EdgeId(0), from: 3.0, to: 2.0 }]);
        let p = report.mapping.lift(&single_edge(3.0), PointOnNetwork::on_edge(EdgeId(2), 0.25)).unwrap();
        assert_eq!(p, PointOnNetwork::on_edge(EdgeId(0), 2.75));
    }

    #[test]
    fn composed_map_reaches_original() {
        let net = path(5);
        let (out, report) = preprocess(&net, 1.5, Mode::Assumption).unwrap();
        // path of 4 unit edges contracts to one edge of 4, then 3 pieces
        assert_eq!(out.edge_count(), 3);
        assert_eq!(report.contracted_counts, Counts { n: 2, m: 1 });
        for j in 0..out.edge_count() {
            for t in [0.1, 0.5, 1.2] {
                let p = PointOnNetwork::on_edge(EdgeId(j), t);
                let lifted = report.mapping.lift(&net, p).unwrap();
                let back = report.mapping.project(&net, &out, lifted).unwrap();
                match back {
                    PointOnNetwork::Edge { edge, offset } => {
                        assert_eq!(edge, EdgeId(j));
                        assert!(close(offset, t));
                    }
                    other => panic!("unexpected {other}"),
                }
            }
        }
        // removed interior nodes of the path land inside output edges
        let mid = report.mapping.project(&net, &out, PointOnNetwork::node(NodeId(2))).unwrap();
        assert!(matches!(mid, PointOnNetwork::Edge { .. }));
    }

    proptest! {
        #[test]
        fn length_conserved_and_conditions_hold(seed in 0u64..500, n in 3usize..12, delta in 0.3f64..2.5) {
            let net = gen_random(n, 0.3, seed).unwrap();
            let total = net.total_length();
            let (c, _) = contract_degree_two(&net);
            prop_assert!(close(c.total_length(), total));
            let kept_loop_guard = |v: NodeId| {
                let es = c.incident(v);
                c.edge(es[0]).other(v) == c.edge(es[1]).other(v)
            };
            prop_assert!(c.nodes().all(|v| c.degree(v) != 2 || kept_loop_guard(v)));
            let (s, _) = subdivide_for_assumption(&c, delta);
            prop_assert!(close(s.total_length(), total));
            prop_assert!(s.max_edge_length() <= delta * (1.0 + 1e-9));
            let (r, _) = subdivide_for_reduced(&c, delta);
            prop_assert!(close(r.total_length(), total));
            prop_assert!(r.edges().iter().all(|e| e.length <= delta + TOL || is_long(e.length, delta)));
        }

        #[test]
        fn lifted_points_keep_distances(seed in 0u64..200, delta in 0.3f64..2.0, frac in 0.0f64..1.0) {
            // the continuum is unchanged, so distances between lifted points agree
            let net = gen_random(8, 0.35, seed).unwrap();
            for mode in [Mode::Assumption, Mode::Reduced] {
                let (out, report) = preprocess(&net, delta, mode).unwrap();
                let e = out.edge(EdgeId(seed as usize % out.edge_count()));
                let p = PointOnNetwork::on_edge(e.id, frac * e.length);
                let v = out.nodes().next().unwrap();
                let d_out = out.point_distance(v, p).unwrap();
                let lifted_v = report.mapping.lift(&net, PointOnNetwork::node(v)).unwrap();
                let lifted_p = report.mapping.lift(&net, p).unwrap();
                let d_src = point_to_point(&net, lifted_v, lifted_p);
                prop_assert!((d_out - d_src).abs() < 1e-9, "{} vs {}", d_out, d_src);
            }
        }
    }

    /// Distance between two points by splitting the first point's edge.
    fn point_to_point(net: &Network, p: PointOnNetwork, q: PointOnNetwork) -> f64 {
        match p {
            PointOnNetwork::Node { node } => net.point_distance(node, q).unwrap(),
            PointOnNetwork::Edge { edge, offset } => {
                let e = net.edge(edge);
                let via_a = offset + net.point_distance(e.a, q).unwrap();
                let via_b = e.length - offset + net.point_distance(e.b, q).unwrap();
                let mut best = via_a.min(via_b);
                if let PointOnNetwork::Edge { edge: e2, offset: o2 } = q {
                    if e2 == edge {
                        best = best.min((offset - o2).abs());
                    }
                }
                best
            }
        }
    }
}
