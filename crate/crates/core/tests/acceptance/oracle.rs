//! Test-side reference computations, independent of the library's search
//! and cover algorithms.

use std::collections::BTreeSet;

use netcover::graph::{EdgeId, NodeId};
use netcover::{Network, PointOnNetwork};

/// All-pairs shortest path lengths by Floyd-Warshall.
pub struct Distances {
    d: Vec<Vec<f64>>,
}

impl Distances {
    pub fn new(net: &Network) -> Self {
        let n = net.node_count();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in net.edges() {
            let (a, b) = (e.a.0, e.b.0);
            if e.length < d[a][b] {
                d[a][b] = e.length;
                d[b][a] = e.length;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[i][k] + d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        Distances { d }
    }

    pub fn nodes(&self, v: usize, w: usize) -> f64 {
        self.d[v][w]
    }

    /// `(node, offset to reach it)` pairs through which a point leaves its edge.
    fn exits(net: &Network, p: PointOnNetwork) -> [(usize, f64); 2] {
        match p {
            PointOnNetwork::Node { node } => [(node.0, 0.0); 2],
            PointOnNetwork::Edge { edge, offset } => {
                let e = net.edge(edge);
                [(e.a.0, offset), (e.b.0, e.length - offset)]
            }
        }
    }

    pub fn points(&self, net: &Network, p: PointOnNetwork, q: PointOnNetwork) -> f64 {
        let mut best = f64::INFINITY;
        if let (PointOnNetwork::Edge { edge: e1, offset: s }, PointOnNetwork::Edge { edge: e2, offset: t }) = (p, q) {
            if e1 == e2 {
                best = (s - t).abs();
            }
        }
        let to = Self::exits(net, q);
        for (i, si) in Self::exits(net, p) {
            for &(j, tj) in &to {
                best = best.min(si + self.d[i][j] + tj);
            }
        }
        best
    }

    pub fn to_set(&self, net: &Network, p: PointOnNetwork, set: &[PointOnNetwork]) -> f64 {
        set.iter().map(|&f| self.points(net, p, f)).fold(f64::INFINITY, f64::min)
    }
}

/// `k` evenly spaced points on `e`, both endpoints included.
pub fn edge_grid(net: &Network, e: EdgeId, k: usize) -> Vec<PointOnNetwork> {
    let l = net.edge(e).length;
    (0..k).map(|i| PointOnNetwork::on_edge(e, l * i as f64 / (k - 1) as f64)).collect()
}

/// Cover sets evaluated straight from their definitions on an edge grid.
pub struct GridCovers {
    pub v: Vec<BTreeSet<NodeId>>,
    pub e: Vec<BTreeSet<EdgeId>>,
    pub node_ec: Vec<BTreeSet<EdgeId>>,
    pub vc: Vec<BTreeSet<NodeId>>,
    pub ec: Vec<BTreeSet<EdgeId>>,
    pub vp: Vec<BTreeSet<NodeId>>,
    pub ep: Vec<BTreeSet<EdgeId>>,
}

pub fn grid_covers(net: &Network, delta: f64, per_edge: usize, tol: f64) -> GridCovers {
    let dist = Distances::new(net);
    let n = net.node_count();
    let m = net.edge_count();
    let grids: Vec<Vec<PointOnNetwork>> = net.edges().iter().map(|e| edge_grid(net, e.id, per_edge)).collect();
    let node = |v: usize| PointOnNetwork::node(NodeId(v));

    let mut out = GridCovers {
        v: vec![BTreeSet::new(); n],
        e: vec![BTreeSet::new(); n],
        node_ec: vec![BTreeSet::new(); n],
        vc: vec![BTreeSet::new(); m],
        ec: vec![BTreeSet::new(); m],
        vp: vec![BTreeSet::new(); n],
        ep: vec![BTreeSet::new(); n],
    };
    for v in 0..n {
        for w in 0..n {
            if dist.nodes(v, w) <= delta + tol {
                out.v[v].insert(NodeId(w));
            }
        }
        for (j, grid) in grids.iter().enumerate() {
            let d: Vec<f64> = grid.iter().map(|&p| dist.points(net, node(v), p)).collect();
            if d.iter().cloned().fold(f64::INFINITY, f64::min) <= delta + tol {
                out.e[v].insert(EdgeId(j));
            }
            if d.iter().all(|&x| x <= delta + tol) {
                out.node_ec[v].insert(EdgeId(j));
                out.vc[j].insert(NodeId(v));
            }
        }
    }
    for j in 0..m {
        for k in 0..m {
            let all = grids[k].iter().all(|&p2| grids[j].iter().all(|&p| dist.points(net, p, p2) <= delta + tol));
            if all {
                out.ec[j].insert(EdgeId(k));
            }
        }
    }
    for v in 0..n {
        let incident = net.incident(NodeId(v));
        for &w in &out.v[v] {
            if incident.iter().any(|e| !out.vc[e.0].contains(&w)) {
                out.vp[v].insert(w);
            }
        }
        for &e2 in &out.e[v] {
            if incident.iter().any(|e| !out.ec[e.0].contains(&e2)) {
                out.ep[v].insert(e2);
            }
        }
    }
    out
}

/// Dense-sampling coverage check: every sample within `delta + tol` of a facility.
pub fn sampled_cover(
    net: &Network,
    dist: &Distances,
    delta: f64,
    facilities: &[PointOnNetwork],
    per_edge: usize,
    tol: f64,
) -> bool {
    net.edges()
        .iter()
        .all(|e| edge_grid(net, e.id, per_edge).into_iter().all(|p| dist.to_set(net, p, facilities) <= delta + tol))
}
