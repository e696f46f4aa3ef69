use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, End, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    F0,
    F,
    SF,
    RF,
    SFD,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::F0, Variant::F, Variant::SF, Variant::RF, Variant::SFD];

    pub fn label(self) -> &'static str {
        match self {
            Variant::F0 => "F0",
            Variant::F => "F",
            Variant::SF => "SF",
            Variant::RF => "RF",
            Variant::SFD => "SFD",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

/// Feature switches implied by a variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantConfig {
    pub variant: Variant,
    pub use_cover_delimitation: bool,
    pub use_strengthening: bool,
    pub long_edge_mode: bool,
    pub fix_edge_vars_to_zero: bool,
}

impl From<Variant> for VariantConfig {
    fn from(variant: Variant) -> Self {
        VariantConfig {
            variant,
            use_cover_delimitation: variant != Variant::F0,
            use_strengthening: matches!(variant, Variant::SF | Variant::SFD | Variant::RF),
            long_edge_mode: variant == Variant::RF,
            fix_edge_vars_to_zero: variant == Variant::SFD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Binary,
    Continuous,
}

/// The network object a variable stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Entity {
    /// `y_v`: facility at node `v`.
    NodeFacility(NodeId),
    /// `y_e`: facility inside edge `e`.
    EdgeFacility(EdgeId),
    /// `w_e`: edge `e` completely covered by a complete-cover facility.
    EdgeCovered(EdgeId),
    /// `x_v`: every edge incident to `v` is completely covered.
    NodeCovered(NodeId),
    /// `z_vv'`: `v` is reached from a facility at node `v'`.
    ViaNode(NodeId, NodeId),
    /// `z_ve'i'`: `v` is reached from the facility on `e'` through endpoint `i'`.
    ViaEdge(NodeId, EdgeId, End),
    /// `q_e`: offset of the facility on `e` from its endpoint `a`.
    Coordinate(EdgeId),
    /// `r_v`: residual cover available at `v`.
    Residual(NodeId),
    /// `u_e`: the first facility of long edge `e` lies beyond its tail length.
    Split(EdgeId),
}

impl Entity {
    pub fn name(&self) -> String {
        match *self {
            Entity::NodeFacility(v) => format!("y_n{v}"),
            Entity::EdgeFacility(e) => format!("y_e{e}"),
            Entity::EdgeCovered(e) => format!("w_e{e}"),
            Entity::NodeCovered(v) => format!("x_n{v}"),
            Entity::ViaNode(v, w) => format!("z_n{v}_n{w}"),
            Entity::ViaEdge(v, e, i) => format!("z_n{v}_e{e}_{}", i.tag()),
            Entity::Coordinate(e) => format!("q_e{e}"),
            Entity::Residual(v) => format!("r_n{v}"),
            Entity::Split(e) => format!("u_e{e}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub entity: Entity,
}

impl Variable {
    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

/// Constraint families of the covering model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    /// `w_e >= y_f` for each complete cover `f` of `e`.
    CompleteLower,
    /// `w_e <= sum of y_f` over the complete covers of `e`.
    CompleteUpper,
    /// `x_v >= 1 - sum (1 - w_e)` over incident edges.
    IncidentLower,
    /// `x_v <= w_e` for each incident edge.
    IncidentUpper,
    /// `y_v + y_e <= 1` for each edge and endpoint.
    NodeEdgeExclusion,
    /// `q_e <= l_e y_e`.
    CoordinateBound,
    /// `l_e (1 - w_e) <= r_a + r_b`.
    EdgeCover,
    /// `x_v + sum z = 1`.
    Assignment,
    /// `z_vv' <= y_v'`.
    ViaNodeLink,
    /// `z_ve'i' <= y_e'`.
    ViaEdgeLink,
    /// `r_v <= M_v (1 - x_v)`.
    ResidualNode,
    /// `r_v <= M (1 - z_vv') + reach - d(v, v')`.
    ResidualViaNode,
    /// `r_v <= M (1 - z_ve'i') + reach - tau(q_e')`.
    ResidualViaEdge,
    /// `sum of y_e over incident edges <= 1 - y_v`.
    Neighborhood,
    /// `q_e <= tail (1 - u_e) + 2 delta u_e` on a long edge.
    SplitUpper,
    /// `q_e >= tail u_e` on a long edge.
    SplitLower,
    /// `r_a + delta >= q_e` on a long edge.
    LongHead,
    /// `r_b + q_e - (2 u_e - 1) delta >= tail` on a long edge.
    LongTail,
}

impl Family {
    pub fn tag(self) -> &'static str {
        match self {
            Family::CompleteLower => "cl",
            Family::CompleteUpper => "cu",
            Family::IncidentLower => "il",
            Family::IncidentUpper => "iu",
            Family::NodeEdgeExclusion => "ex",
            Family::CoordinateBound => "qb",
            Family::EdgeCover => "ec",
            Family::Assignment => "as",
            Family::ViaNodeLink => "ln",
            Family::ViaEdgeLink => "le",
            Family::ResidualNode => "rn",
            Family::ResidualViaNode => "rv",
            Family::ResidualViaEdge => "re",
            Family::Neighborhood => "nb",
            Family::SplitUpper => "su",
            Family::SplitLower => "sl",
            Family::LongHead => "lh",
            Family::LongTail => "lt",
        }
    }

    /// Families whose right-hand side carries a big-M term.
    pub fn is_residual(self) -> bool {
        matches!(self, Family::ResidualNode | Family::ResidualViaNode | Family::ResidualViaEdge)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// Big-M metadata of a residual row: the indicator whose value 0 switches
/// the row off, and the constant multiplying `1 - indicator`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Indicator {
    pub var: usize,
    pub big_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub family: Family,
    pub terms: Vec<(f64, usize)>,
    pub sense: Sense,
    pub rhs: f64,
    pub indicator: Option<Indicator>,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(c, j)| c * values[j]).sum()
    }

    /// Amount by which `values` violate the row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// A solver-independent mixed-integer model. Minimization is implied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub delta: f64,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(f64, usize)>,
    pub objective_offset: f64,
    pub long_edges: Vec<EdgeId>,
    #[serde(skip)]
    index: HashMap<Entity, usize>,
}

impl ModelSpec {
    pub fn new(variant: Variant, delta: f64) -> Self {
        ModelSpec {
            variant,
            delta,
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Vec::new(),
            objective_offset: 0.0,
            long_edges: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn add_var(&mut self, entity: Entity, kind: VarKind, lower: f64, upper: f64) -> usize {
        if let Some(&j) = self.index.get(&entity) {
            return j;
        }
        let j = self.variables.len();
        self.variables.push(Variable { name: entity.name(), kind, lower, upper, entity });
        self.index.insert(entity, j);
        j
    }

    pub fn add_binary(&mut self, entity: Entity) -> usize {
        self.add_var(entity, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_constraint(
        &mut self,
        family: Family,
        suffix: &str,
        terms: Vec<(f64, usize)>,
        sense: Sense,
        rhs: f64,
        indicator: Option<Indicator>,
    ) {
        let name = format!("{}_{suffix}", family.tag());
        self.constraints.push(Constraint { name, family, terms, sense, rhs, indicator });
    }

    pub fn var(&self, entity: Entity) -> Option<usize> {
        self.index.get(&entity).copied()
    }

    pub fn var_by_name(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn fix(&mut self, j: usize, value: f64) {
        self.variables[j].lower = value;
        self.variables[j].upper = value;
    }

    pub fn coordinate(&self, e: EdgeId) -> Option<usize> {
        self.var(Entity::Coordinate(e))
    }

    pub fn split_indicator(&self, e: EdgeId) -> Option<usize> {
        self.var(Entity::Split(e))
    }

    pub fn is_long(&self, e: EdgeId) -> bool {
        self.long_edges.contains(&e)
    }

    pub fn count(&self, family: Family) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    pub fn binary_count(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// Rebuilds the entity index, e.g. after deserialization.
    pub fn reindex(&mut self) {
        self.index = self.variables.iter().enumerate().map(|(j, v)| (v.entity, j)).collect();
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective_offset + self.objective.iter().map(|&(c, j)| c * values[j]).sum::<f64>()
    }

    /// Largest violation of any row or bound, scaled by `1 + |rhs|`.
    pub fn max_scaled_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(values) / (1.0 + c.rhs.abs()));
        let bounds = self
            .variables
            .iter()
            .zip(values)
            .map(|(v, &x)| ((v.lower - x).max(0.0) + (x - v.upper).max(0.0)) / (1.0 + x.abs()));
        rows.chain(bounds).fold(0.0, f64::max)
    }

    /// Checks that every referenced variable exists and binaries are in [0, 1].
    pub fn validate(&self) -> Result<()> {
        let n = self.variables.len();
        for c in &self.constraints {
            if let Some(&(_, j)) = c.terms.iter().find(|(_, j)| *j >= n) {
                return Err(Error::Model(format!("row {} references missing variable {j}", c.name)));
            }
        }
        if self.objective.iter().any(|&(_, j)| j >= n) {
            return Err(Error::Model("objective references a missing variable".into()));
        }
        for v in &self.variables {
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(Error::Model(format!("binary {} has bounds [{}, {}]", v.name, v.lower, v.upper)));
            }
        }
        let mut names = std::collections::HashSet::new();
        for name in self.variables.iter().map(|v| &v.name).chain(self.constraints.iter().map(|c| &c.name)) {
            if !names.insert(name) {
                return Err(Error::Model(format!("duplicate name {name}")));
            }
        }
        Ok(())
    }
}

/// Row and column counts of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSize {
    pub variables: usize,
    pub binaries: usize,
    pub constraints: usize,
}

impl ModelSpec {
    pub fn size(&self) -> ModelSize {
        ModelSize {
            variables: self.variables.len(),
            binaries: self.binary_count(),
            constraints: self.constraints.len(),
        }
    }
}
