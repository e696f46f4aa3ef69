//! Undirected multigraph with positive edge lengths and exact network distances.
//!
//! Nodes are `0..n` and their numeric order is the total order used everywhere
//! else: every edge stores its endpoints with `a <= b`, and offsets along an
//! edge are measured from `a`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for ties and for every "within the radius" test.
pub const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EdgeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One of the two endpoints of an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum End {
    A,
    B,
}

impl End {
    pub fn tag(self) -> char {
        match self {
            End::A => 'a',
            End::B => 'b',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub a: NodeId,
    pub b: NodeId,
    pub length: f64,
}

impl Edge {
    pub fn endpoint(&self, end: End) -> NodeId {
        match end {
            End::A => self.a,
            End::B => self.b,
        }
    }

    pub fn other(&self, v: NodeId) -> NodeId {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }

    pub fn has_endpoint(&self, v: NodeId) -> bool {
        self.a == v || self.b == v
    }
}

/// A point of the network continuum: a node, or an interior point of an edge
/// at `offset` from its endpoint `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointOnNetwork {
    Node { node: NodeId },
    Edge { edge: EdgeId, offset: f64 },
}

impl PointOnNetwork {
    pub fn node(v: NodeId) -> Self {
        PointOnNetwork::Node { node: v }
    }

    pub fn on_edge(edge: EdgeId, offset: f64) -> Self {
        PointOnNetwork::Edge { edge, offset }
    }
}

impl fmt::Display for PointOnNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointOnNetwork::Node { node } => write!(f, "node {node}"),
            PointOnNetwork::Edge { edge, offset } => write!(f, "edge {edge} @ {offset}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    edges: Vec<Edge>,
    adjacency: Vec<Vec<EdgeId>>,
}

impl Network {
    /// Builds a network from `(a, b, length)` triples over nodes `0..n`.
    /// Rejects nonpositive lengths, self-loops and disconnected graphs.
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut list = Vec::new();
        for (index, (a, b, length)) in edges.into_iter().enumerate() {
            if a >= n {
                return Err(Error::UnknownNode(NodeId(a)));
            }
            if b >= n {
                return Err(Error::UnknownNode(NodeId(b)));
            }
            if a == b {
                return Err(Error::SelfLoop { index, node: a });
            }
            if !(length > 0.0 && length.is_finite()) {
                return Err(Error::NonPositiveLength { index, length });
            }
            let id = EdgeId(index);
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            adjacency[a].push(id);
            adjacency[b].push(id);
            list.push(Edge { id, a: NodeId(a), b: NodeId(b), length });
        }
        let net = Network { edges: list, adjacency };
        if !net.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(net)
    }

    fn is_connected(&self) -> bool {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &e in &self.adjacency[u] {
                let v = self.edges[e.0].other(NodeId(u)).0;
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(NodeId)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn try_edge(&self, e: EdgeId) -> Result<&Edge> {
        self.edges.get(e.0).ok_or(Error::UnknownEdge(e))
    }

    pub fn check_node(&self, v: NodeId) -> Result<()> {
        if v.0 < self.node_count() {
            Ok(())
        } else {
            Err(Error::UnknownNode(v))
        }
    }

    /// Edges incident to `v`.
    pub fn incident(&self, v: NodeId) -> &[EdgeId] {
        &self.adjacency[v.0]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v.0].len()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn mean_edge_length(&self) -> f64 {
        if self.edges.is_empty() {
            0.0
        } else {
            self.total_length() / self.edges.len() as f64
        }
    }

    /// True when every edge is no longer than `delta` (up to tolerance).
    pub fn satisfies_assumption(&self, delta: f64) -> bool {
        self.edges.iter().all(|e| e.length <= delta + TOL)
    }

    pub fn require_assumption(&self, delta: f64) -> Result<()> {
        match self.edges.iter().find(|e| e.length > delta + TOL) {
            Some(e) => Err(Error::AssumptionViolated { edge: e.id, length: e.length, delta }),
            None => Ok(()),
        }
    }

    /// Validates a point and maps offsets `0` and `l_e` to the endpoint nodes.
    pub fn canonical_point(&self, p: PointOnNetwork) -> Result<PointOnNetwork> {
        match p {
            PointOnNetwork::Node { node } => {
                self.check_node(node)?;
                Ok(p)
            }
            PointOnNetwork::Edge { edge, offset } => {
                let e = self.try_edge(edge)?;
                if !(offset >= 0.0 && offset <= e.length) {
                    return Err(Error::OffsetOutOfRange { edge, offset, length: e.length });
                }
                if offset == 0.0 {
                    Ok(PointOnNetwork::node(e.a))
                } else if offset == e.length {
                    Ok(PointOnNetwork::node(e.b))
                } else {
                    Ok(p)
                }
            }
        }
    }

    /// Shortest-path distances from a set of weighted seeds; unreachable nodes
    /// get `f64::INFINITY`. Search stops expanding once labels exceed `limit`.
    pub fn multi_source_distances(&self, seeds: &[(NodeId, f64)], limit: f64) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.node_count()];
        let mut heap = BinaryHeap::new();
        for &(v, d) in seeds {
            if d < dist[v.0] {
                dist[v.0] = d;
                heap.push(Label { dist: d, node: v.0 });
            }
        }
        while let Some(Label { dist: d, node: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if d > limit {
                break;
            }
            for &e in &self.adjacency[u] {
                let edge = &self.edges[e.0];
                let v = edge.other(NodeId(u)).0;
                let nd = d + edge.length;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Label { dist: nd, node: v });
                }
            }
        }
        dist
    }

    /// Distances from `s` to every node.
    pub fn distances_from(&self, s: NodeId) -> Vec<f64> {
        self.multi_source_distances(&[(s, 0.0)], f64::INFINITY)
    }

    pub fn node_distance(&self, s: NodeId, t: NodeId) -> Result<f64> {
        self.check_node(s)?;
        self.check_node(t)?;
        if s == t {
            return Ok(0.0);
        }
        Ok(self.distances_from(s)[t.0])
    }

    /// Distance from node `v` to an arbitrary point.
    pub fn point_distance(&self, v: NodeId, p: PointOnNetwork) -> Result<f64> {
        self.check_node(v)?;
        let p = self.canonical_point(p)?;
        Ok(self.point_distance_with(&self.distances_from(v), p))
    }

    /// Distance to `p` given the node distances `dist` from some fixed source:
    /// the shorter of the two endpoint routes.
    pub fn point_distance_with(&self, dist: &[f64], p: PointOnNetwork) -> f64 {
        match p {
            PointOnNetwork::Node { node } => dist[node.0],
            PointOnNetwork::Edge { edge, offset } => {
                let e = &self.edges[edge.0];
                (dist[e.a.0] + offset).min(dist[e.b.0] + e.length - offset)
            }
        }
    }

    /// Parses the plain-text graph format: `n m`, then `m` lines `a b length`.
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        Self::read(text.as_bytes())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut triples = Vec::new();
        for (index, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = index + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            let bad = |message: String| Error::Parse { line: lineno, message };
            match header {
                None => {
                    if fields.len() != 2 {
                        return Err(bad(format!("expected `n m`, found {trimmed:?}")));
                    }
                    let n = fields[0].parse().map_err(|_| bad(format!("bad node count {:?}", fields[0])))?;
                    let m = fields[1].parse().map_err(|_| bad(format!("bad edge count {:?}", fields[1])))?;
                    header = Some((n, m));
                }
                Some((_, m)) => {
                    if triples.len() == m {
                        return Err(bad("more edge lines than declared".into()));
                    }
                    if fields.len() != 3 {
                        return Err(bad(format!("expected `a b length`, found {trimmed:?}")));
                    }
                    let a: usize = fields[0].parse().map_err(|_| bad(format!("bad node {:?}", fields[0])))?;
                    let b: usize = fields[1].parse().map_err(|_| bad(format!("bad node {:?}", fields[1])))?;
                    let l: f64 = fields[2].parse().map_err(|_| bad(format!("bad length {:?}", fields[2])))?;
                    triples.push((a, b, l));
                }
            }
        }
        let (n, m) = header.ok_or(Error::Parse { line: 1, message: "missing header".into() })?;
        if triples.len() != m {
            return Err(Error::Parse { line: 0, message: format!("declared {m} edges, found {}", triples.len()) });
        }
        Self::new(n, triples)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read(std::io::BufReader::new(file))
    }

    /// Serializes in the graph file format. Lengths use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.node_count(), self.edge_count());
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.a, e.b, e.length));
        }
        out
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Heap entry ordered so that `BinaryHeap` pops the smallest distance first.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Label {
    pub dist: f64,
    pub node: usize,
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

/// Small named networks used throughout tests, benches and docs.
pub mod fixtures {
    use super::Network;

    /// Path on `n` nodes with unit edges.
    pub fn path(n: usize) -> Network {
        Network::new(n, (0..n - 1).map(|i| (i, i + 1, 1.0))).unwrap()
    }

    pub fn triangle() -> Network {
        Network::new(3, [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap()
    }

    /// Star with center `0` and `k` unit spokes.
    pub fn star(k: usize) -> Network {
        Network::new(k + 1, (1..=k).map(|i| (0, i, 1.0))).unwrap()
    }

    pub fn single_edge(length: f64) -> Network {
        Network::new(2, [(0, 1, length)]).unwrap()
    }
}
