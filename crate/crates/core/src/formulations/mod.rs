//! MILP models of the covering problem.
//!
//! A facility is either a node (`y_v`) or a point inside an edge (`y_e` with
//! coordinate `q_e`). An edge is covered either completely by a single facility
//! (`w_e`) or from both ends by residual radii `r_v`. Each node draws its
//! residual from exactly one source: `x_v` when all of its edges are completely
//! covered, otherwise one `z` variable naming a node or an edge endpoint.

mod lp;
mod model;

pub use lp::emit;
pub use model::*;

use serde::{Deserialize, Serialize};

use crate::covers::CoverData;
use crate::error::{Error, Result};
use crate::graph::{EdgeId, End, Network, NodeId, TOL};
use crate::preprocess::is_long;
use crate::verify::{long_edge_periods, tail_length};

/// Constants of one residual row `r_v <= M (1 - z) + reach - tau`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualBound {
    /// Distance from `v` to the node, or edge endpoint, the facility is reached through.
    pub dist: f64,
    pub big_m: f64,
    pub reach: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViaNode {
    pub target: NodeId,
    pub bound: ResidualBound,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViaEdge {
    pub edge: EdgeId,
    pub end: End,
    pub bound: ResidualBound,
}

/// Partial cover index sets of every node with their big-M constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BigMTable {
    /// Largest residual a node can usefully hold.
    pub u: Vec<f64>,
    pub m_v: Vec<f64>,
    pub via_node: Vec<Vec<ViaNode>>,
    pub via_edge: Vec<Vec<ViaEdge>>,
}

fn long_mask(net: &Network, delta: f64) -> Vec<bool> {
    net.edges().iter().map(|e| is_long(e.length, delta)).collect()
}

/// Greatest value `tau - dist` can take for a facility on `e`.
fn span(net: &Network, delta: f64, e: EdgeId) -> f64 {
    let l = net.edge(e).length;
    if is_long(l, delta) {
        2.0 * delta
    } else {
        l
    }
}

fn check_covers(net: &Network, delta: f64, covers: &CoverData) -> Result<()> {
    if covers.nodes.len() != net.node_count() || covers.ec.len() != net.edge_count() {
        return Err(Error::InvalidArgument(format!(
            "cover data describes {} nodes and {} edges, the network has {} and {}",
            covers.nodes.len(),
            covers.ec.len(),
            net.node_count(),
            net.edge_count()
        )));
    }
    if (covers.delta - delta).abs() > TOL {
        return Err(Error::InvalidArgument(format!(
            "cover data computed for delta {} but the model uses {delta}",
            covers.delta
        )));
    }
    Ok(())
}

/// Constants `M_v = delta`, `M_vv' = r(N)` and `M_ve'i' = r(N) + l_e'` over the
/// trivial index sets `V` and `E x {a, b}`, where `r(N)` is the largest
/// distance between two nodes.
pub fn trivial_big_m(net: &Network, delta: f64) -> BigMTable {
    let dist: Vec<Vec<f64>> = net.nodes().map(|v| net.distances_from(v)).collect();
    let radius = dist.iter().flatten().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
    let n = net.node_count();
    let mut table = BigMTable { u: vec![delta; n], m_v: vec![delta; n], via_node: Vec::new(), via_edge: Vec::new() };
    for v in net.nodes() {
        let row = &dist[v.0];
        table.via_node.push(
            net.nodes()
                .map(|w| ViaNode { target: w, bound: ResidualBound { dist: row[w.0], big_m: radius, reach: delta } })
                .collect(),
        );
        let mut via = Vec::with_capacity(2 * net.edge_count());
        for edge in net.edges() {
            for end in [End::A, End::B] {
                let bound =
                    ResidualBound { dist: row[edge.endpoint(end).0], big_m: radius + edge.length, reach: delta };
                via.push(ViaEdge { edge: edge.id, end, bound });
            }
        }
        table.via_edge.push(via);
    }
    table
}

/// Constants `M_v = delta`, `M_vv' = delta` and `M_ve'i' = delta + l_e'` over
/// the delimited partial cover sets.
pub fn naive_big_m(net: &Network, delta: f64, covers: &CoverData) -> BigMTable {
    let n = net.node_count();
    table_over_covers(net, delta, covers, vec![delta; n], vec![delta; n], |_, _, s| {
        (s.map_or(delta, |s| delta + s), delta)
    })
}

/// Tightened constants. With `U_v` the longest edge at `v`, capped at `delta`:
/// `M_v = U_v`, `M_vv' = max(0, U_v + d(v, v') - delta)` with reach
/// `min(U_v + d(v, v'), delta)`, and the same for edge rows with the edge
/// length (`2 delta` for a long edge) added to the distance.
pub fn tighten_big_m(net: &Network, delta: f64, covers: &CoverData) -> BigMTable {
    let u: Vec<f64> = net
        .nodes()
        .map(|v| net.incident(v).iter().map(|&e| net.edge(e).length).fold(0.0, f64::max).min(delta))
        .collect();
    let top_u = u.clone();
    table_over_covers(net, delta, covers, u.clone(), u, move |v, d, s| {
        let b = tightened_bound(top_u[v.0], d + s.unwrap_or(0.0), delta);
        (b.big_m, b.reach)
    })
}

/// `M = max(0, u + dist - delta)` and `reach = min(u + dist, delta)`.
pub fn tightened_bound(u: f64, dist: f64, delta: f64) -> ResidualBound {
    let top = u + dist;
    ResidualBound { dist, big_m: (top - delta).max(0.0), reach: top.min(delta) }
}

/// `constants(v, dist, span)` gives `(M, reach)`; `span` is `None` for node rows.
fn table_over_covers(
    net: &Network,
    delta: f64,
    covers: &CoverData,
    u: Vec<f64>,
    m_v: Vec<f64>,
    constants: impl Fn(NodeId, f64, Option<f64>) -> (f64, f64),
) -> BigMTable {
    let mut via_node = Vec::with_capacity(net.node_count());
    let mut via_edge = Vec::with_capacity(net.node_count());
    for v in net.nodes() {
        let d = |w: NodeId| covers.dist(v, w).expect("partial cover sets stay within the searched radius");
        via_node.push(
            covers.vp[v.0]
                .iter()
                .map(|&w| {
                    let dist = d(w);
                    let (big_m, reach) = constants(v, dist, None);
                    ViaNode { target: w, bound: ResidualBound { dist, big_m, reach } }
                })
                .collect(),
        );
        via_edge.push(
            covers.eip[v.0]
                .iter()
                .map(|&(e, end)| {
                    let dist = d(net.edge(e).endpoint(end));
                    let (big_m, reach) = constants(v, dist, Some(span(net, delta, e)));
                    ViaEdge { edge: e, end, bound: ResidualBound { dist, big_m, reach } }
                })
                .collect(),
        );
    }
    BigMTable { u, m_v, via_node, via_edge }
}

/// What goes into a model besides the big-M table.
struct Layout<'a> {
    net: &'a Network,
    delta: f64,
    variant: Variant,
    table: &'a BigMTable,
    /// Complete covers; `None` drops `w`, `x` and their linking rows.
    complete: Option<&'a CoverData>,
    long: Vec<bool>,
}

fn term(c: f64, j: usize) -> (f64, usize) {
    (c, j)
}

fn assemble(layout: Layout<'_>) -> ModelSpec {
    let Layout { net, delta, variant, table, complete, long } = layout;
    let mut model = ModelSpec::new(variant, delta);
    model.long_edges = net.edges().iter().filter(|e| long[e.id.0]).map(|e| e.id).collect();

    let y_n: Vec<usize> = net.nodes().map(|v| model.add_binary(Entity::NodeFacility(v))).collect();
    let y_e: Vec<usize> = net.edges().iter().map(|e| model.add_binary(Entity::EdgeFacility(e.id))).collect();
    let w: Vec<usize> = net.edges().iter().map(|e| model.add_binary(Entity::EdgeCovered(e.id))).collect();
    let x: Vec<usize> = net.nodes().map(|v| model.add_binary(Entity::NodeCovered(v))).collect();
    let q: Vec<usize> = net
        .edges()
        .iter()
        .map(|e| {
            let upper = if long[e.id.0] { 2.0 * delta } else { e.length };
            model.add_var(Entity::Coordinate(e.id), VarKind::Continuous, 0.0, upper)
        })
        .collect();
    let r: Vec<usize> =
        net.nodes().map(|v| model.add_var(Entity::Residual(v), VarKind::Continuous, 0.0, f64::INFINITY)).collect();
    let u: Vec<Option<usize>> =
        net.edges().iter().map(|e| long[e.id.0].then(|| model.add_binary(Entity::Split(e.id)))).collect();

    if complete.is_none() {
        for &j in w.iter().chain(&x) {
            model.fix(j, 0.0);
        }
    }
    for e in &model.long_edges.clone() {
        model.fix(y_e[e.0], 1.0);
        model.fix(w[e.0], 0.0);
    }

    // Objective.
    for v in net.nodes() {
        model.objective.push(term(1.0, y_n[v.0]));
    }
    for edge in net.edges() {
        let j = edge.id.0;
        match u[j] {
            None => model.objective.push(term(1.0, y_e[j])),
            Some(uj) => {
                model.objective.push(term(-1.0, uj));
                model.objective_offset += (long_edge_periods(edge.length, delta) + 1) as f64;
            }
        }
    }

    // Complete covers of edges and nodes.
    if let Some(covers) = complete {
        for edge in net.edges().iter().filter(|e| !long[e.id.0]) {
            let e = edge.id;
            let mut sum = vec![term(1.0, w[e.0])];
            for &v in &covers.vc[e.0] {
                model.add_constraint(
                    Family::CompleteLower,
                    &format!("e{e}_n{v}"),
                    vec![term(1.0, w[e.0]), term(-1.0, y_n[v.0])],
                    Sense::Ge,
                    0.0,
                    None,
                );
                sum.push(term(-1.0, y_n[v.0]));
            }
            for &f in &covers.ec[e.0] {
                model.add_constraint(
                    Family::CompleteLower,
                    &format!("e{e}_e{f}"),
                    vec![term(1.0, w[e.0]), term(-1.0, y_e[f.0])],
                    Sense::Ge,
                    0.0,
                    None,
                );
                sum.push(term(-1.0, y_e[f.0]));
            }
            model.add_constraint(Family::CompleteUpper, &format!("e{e}"), sum, Sense::Le, 0.0, None);
        }
        for v in net.nodes() {
            let incident = net.incident(v);
            let mut terms = vec![term(1.0, x[v.0])];
            terms.extend(incident.iter().map(|e| term(-1.0, w[e.0])));
            model.add_constraint(
                Family::IncidentLower,
                &format!("n{v}"),
                terms,
                Sense::Ge,
                1.0 - incident.len() as f64,
                None,
            );
            for &e in incident {
                model.add_constraint(
                    Family::IncidentUpper,
                    &format!("n{v}_e{e}"),
                    vec![term(1.0, x[v.0]), term(-1.0, w[e.0])],
                    Sense::Le,
                    0.0,
                    None,
                );
            }
        }
    }

    // Edge rows.
    for edge in net.edges() {
        let e = edge.id;
        let (ra, rb) = (r[edge.a.0], r[edge.b.0]);
        match u[e.0] {
            None => {
                for end in [End::A, End::B] {
                    model.add_constraint(
                        Family::NodeEdgeExclusion,
                        &format!("e{e}_{}", end.tag()),
                        vec![term(1.0, y_n[edge.endpoint(end).0]), term(1.0, y_e[e.0])],
                        Sense::Le,
                        1.0,
                        None,
                    );
                }
                model.add_constraint(
                    Family::CoordinateBound,
                    &format!("e{e}"),
                    vec![term(1.0, q[e.0]), term(-edge.length, y_e[e.0])],
                    Sense::Le,
                    0.0,
                    None,
                );
                model.add_constraint(
                    Family::EdgeCover,
                    &format!("e{e}"),
                    vec![term(1.0, ra), term(1.0, rb), term(edge.length, w[e.0])],
                    Sense::Ge,
                    edge.length,
                    None,
                );
            }
            Some(uj) => {
                let tail = tail_length(edge.length, delta);
                model.add_constraint(
                    Family::SplitUpper,
                    &format!("e{e}"),
                    vec![term(1.0, q[e.0]), term(tail - 2.0 * delta, uj)],
                    Sense::Le,
                    tail,
                    None,
                );
                model.add_constraint(
                    Family::SplitLower,
                    &format!("e{e}"),
                    vec![term(1.0, q[e.0]), term(-tail, uj)],
                    Sense::Ge,
                    0.0,
                    None,
                );
                model.add_constraint(
                    Family::LongHead,
                    &format!("e{e}"),
                    vec![term(1.0, ra), term(-1.0, q[e.0])],
                    Sense::Ge,
                    -delta,
                    None,
                );
                model.add_constraint(
                    Family::LongTail,
                    &format!("e{e}"),
                    vec![term(1.0, rb), term(1.0, q[e.0]), term(-2.0 * delta, uj)],
                    Sense::Ge,
                    tail - delta,
                    None,
                );
            }
        }
    }

    // Residual sources.
    for v in net.nodes() {
        let mut assignment = vec![term(1.0, x[v.0])];
        let m_v = table.m_v[v.0];
        model.add_constraint(
            Family::ResidualNode,
            &format!("n{v}"),
            vec![term(1.0, r[v.0]), term(m_v, x[v.0])],
            Sense::Le,
            m_v,
            Some(Indicator { var: x[v.0], big_m: m_v }),
        );
        for via in &table.via_node[v.0] {
            let t = via.target;
            let z = model.add_binary(Entity::ViaNode(v, t));
            assignment.push(term(1.0, z));
            model.add_constraint(
                Family::ViaNodeLink,
                &format!("n{v}_n{t}"),
                vec![term(1.0, z), term(-1.0, y_n[t.0])],
                Sense::Le,
                0.0,
                None,
            );
            let b = via.bound;
            model.add_constraint(
                Family::ResidualViaNode,
                &format!("n{v}_n{t}"),
                vec![term(1.0, r[v.0]), term(b.big_m, z)],
                Sense::Le,
                b.big_m + b.reach - b.dist,
                Some(Indicator { var: z, big_m: b.big_m }),
            );
        }
        for via in &table.via_edge[v.0] {
            let (e, end, b) = (via.edge, via.end, via.bound);
            let edge = net.edge(e);
            let z = model.add_binary(Entity::ViaEdge(v, e, end));
            assignment.push(term(1.0, z));
            let suffix = format!("n{v}_e{e}_{}", end.tag());
            if u[e.0].is_none() {
                model.add_constraint(
                    Family::ViaEdgeLink,
                    &suffix,
                    vec![term(1.0, z), term(-1.0, y_e[e.0])],
                    Sense::Le,
                    0.0,
                    None,
                );
            }
            let mut terms = vec![term(1.0, r[v.0]), term(b.big_m, z)];
            let mut rhs = b.big_m + b.reach - b.dist;
            match (end, u[e.0]) {
                (End::A, _) => terms.push(term(1.0, q[e.0])),
                (End::B, None) => {
                    terms.push(term(-1.0, q[e.0]));
                    rhs -= edge.length;
                }
                (End::B, Some(uj)) => {
                    terms.push(term(-1.0, q[e.0]));
                    terms.push(term(2.0 * delta, uj));
                    rhs -= tail_length(edge.length, delta);
                }
            }
            model.add_constraint(
                Family::ResidualViaEdge,
                &suffix,
                terms,
                Sense::Le,
                rhs,
                Some(Indicator { var: z, big_m: b.big_m }),
            );
        }
        model.add_constraint(Family::Assignment, &format!("n{v}"), assignment, Sense::Eq, 1.0, None);
    }

    for c in &mut model.constraints {
        c.terms.retain(|&(coef, _)| coef != 0.0);
    }
    model
}

/// Builds F0, F, SF or SFD on a network satisfying `l_e <= delta` everywhere.
///
/// F0 ignores `covers` and uses the trivial index sets. SF and SFD use the
/// tightened constants; their valid inequalities are added separately by
/// [`add_valid_inequalities`], except for SFD's fixing of every `y_e` to 0.
pub fn build_base(net: &Network, delta: f64, covers: Option<&CoverData>, cfg: VariantConfig) -> Result<ModelSpec> {
    net.require_assumption(delta)?;
    if cfg.long_edge_mode {
        return Err(Error::InvalidArgument("the reduced model is built by build_reduced".into()));
    }
    let long = vec![false; net.edge_count()];
    let table;
    let complete = if cfg.use_cover_delimitation {
        let covers =
            covers.ok_or_else(|| Error::InvalidArgument(format!("variant {} needs cover data", cfg.variant)))?;
        check_covers(net, delta, covers)?;
        table = if cfg.use_strengthening { tighten_big_m(net, delta, covers) } else { naive_big_m(net, delta, covers) };
        Some(covers)
    } else {
        table = trivial_big_m(net, delta);
        None
    };
    let mut model = assemble(Layout { net, delta, variant: cfg.variant, table: &table, complete, long });
    if cfg.fix_edge_vars_to_zero {
        for e in net.edges() {
            let j = model.var(Entity::EdgeFacility(e.id)).expect("edge facility variable");
            model.fix(j, 0.0);
        }
    }
    Ok(model)
}

/// Leaf fixing and neighborhood inequalities.
///
/// At a leaf `v` whose neighbor is not itself a leaf, `y_v` and the `y_e` of
/// its edge are fixed to 0: moving such a facility to the neighbor covers at
/// least as much. For every node, `sum of y_e over incident short edges
/// <= 1 - y_v` replaces the pairwise node/edge exclusions.
pub fn add_valid_inequalities(mut model: ModelSpec, net: &Network) -> ModelSpec {
    model.constraints.retain(|c| c.family != Family::NodeEdgeExclusion);
    for v in net.nodes() {
        let y_v = model.var(Entity::NodeFacility(v)).expect("node facility variable");
        let edges: Vec<usize> = net
            .incident(v)
            .iter()
            .filter(|&&e| !model.is_long(e))
            .map(|&e| model.var(Entity::EdgeFacility(e)).expect("edge facility variable"))
            .collect();
        if !edges.is_empty() {
            let mut terms = vec![(1.0, y_v)];
            terms.extend(edges.into_iter().map(|j| (1.0, j)));
            model.add_constraint(Family::Neighborhood, &format!("n{v}"), terms, Sense::Le, 1.0, None);
        }
        if let [e] = *net.incident(v) {
            if net.degree(net.edge(e).other(v)) > 1 {
                model.fix(y_v, 0.0);
                if !model.is_long(e) {
                    let j = model.var(Entity::EdgeFacility(e)).expect("edge facility variable");
                    model.fix(j, 0.0);
                }
            }
        }
    }
    model
}

/// Builds the reduced model RF on a degree-two-free network whose edges are
/// either at most `delta` or longer than `2 delta`.
///
/// Short edges get the strengthened treatment. A long edge keeps `y_e = 1` and
/// `w_e = 0`; its facilities are the points `q_e + 2 delta k`, and `u_e` says
/// whether the first one sits beyond the tail length, saving one facility.
pub fn build_reduced(net: &Network, delta: f64, covers: &CoverData) -> Result<ModelSpec> {
    check_covers(net, delta, covers)?;
    for edge in net.edges() {
        if edge.length > delta + TOL && !is_long(edge.length, delta) {
            return Err(Error::AssumptionViolated { edge: edge.id, length: edge.length, delta });
        }
    }
    let table = tighten_big_m(net, delta, covers);
    let long = long_mask(net, delta);
    let model = assemble(Layout { net, delta, variant: Variant::RF, table: &table, complete: Some(covers), long });
    Ok(add_valid_inequalities(model, net))
}

/// Builds any variant on a network already prepared for it.
pub fn build(net: &Network, delta: f64, covers: Option<&CoverData>, variant: Variant) -> Result<ModelSpec> {
    let cfg = VariantConfig::from(variant);
    match variant {
        Variant::RF => {
            let covers = covers.ok_or_else(|| Error::InvalidArgument("variant RF needs cover data".into()))?;
            build_reduced(net, delta, covers)
        }
        Variant::F0 | Variant::F => build_base(net, delta, covers, cfg),
        Variant::SF | Variant::SFD => Ok(add_valid_inequalities(build_base(net, delta, covers, cfg)?, net)),
    }
}
