//! MILP backends.
//!
//! Two backends are available. `highs` links the HiGHS library and passes the
//! model in memory. `external` writes an LP file, runs a solver executable with
//! a HiGHS-style command line and reads back the solution file. The executable
//! is taken from `NETCOVER_SOLVER`, which also makes `external` the default.

mod external;
mod highs;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formulations::{ModelSpec, VarKind};

pub use external::{parse_solution_file, External, SolutionFile};
pub use highs::{run_lp_file, InProcess, LpRun};

/// Environment variable holding the external solver command.
pub const SOLVER_ENV: &str = "NETCOVER_SOLVER";

/// Feasibility tolerance for re-checking returned solutions, relative to `1 + |rhs|`.
pub const FEASIBILITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    Timeout,
    /// The backend could not load the model.
    Unread,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Feasible => "feasible",
            Status::Infeasible => "infeasible",
            Status::Unbounded => "unbounded",
            Status::Timeout => "timeout",
            Status::Unread => "unread",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: Status,
    pub incumbent: Option<f64>,
    pub bound: Option<f64>,
    /// Variable values in model order; present iff `incumbent` is.
    pub values: Option<Vec<f64>>,
    pub wall_time: f64,
}

impl SolveResult {
    pub fn empty(status: Status, wall_time: f64) -> Self {
        SolveResult { status, incumbent: None, bound: None, values: None, wall_time }
    }

    pub fn gap(&self) -> Option<f64> {
        Some(self.incumbent? - self.bound?)
    }

    /// Values keyed by variable name.
    pub fn named_values(&self, model: &ModelSpec) -> BTreeMap<String, f64> {
        let Some(values) = &self.values else { return BTreeMap::new() };
        model.variables.iter().zip(values).map(|(v, &x)| (v.name.clone(), x)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Wall-clock limit in seconds.
    pub time_limit: f64,
    /// Absolute gap at which a solution counts as optimal. The backend is asked
    /// for `abs_gap - 1e-6` so that a gap of exactly 1 on an integral
    /// objective does not stop the search early.
    pub abs_gap: f64,
    pub threads: usize,
    pub seed: u32,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { time_limit: 1800.0, abs_gap: 1.0, threads: 1, seed: 0 }
    }
}

impl SolveOptions {
    pub fn with_time_limit(time_limit: f64) -> Self {
        SolveOptions { time_limit, ..Self::default() }
    }

    fn backend_abs_gap(&self) -> f64 {
        (self.abs_gap - 1e-6).max(0.0)
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, model: &ModelSpec, options: &SolveOptions) -> Result<SolveResult>;
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendInfo {
    pub name: String,
    pub description: String,
    pub available: bool,
}

fn external_command() -> Option<String> {
    std::env::var(SOLVER_ENV).ok().filter(|s| !s.trim().is_empty())
}

pub fn backend_list() -> Vec<BackendInfo> {
    let cmd = external_command();
    vec![
        BackendInfo {
            name: "highs".into(),
            description: format!("HiGHS {} linked in-process", highs::version()),
            available: true,
        },
        BackendInfo {
            name: "external".into(),
            description: match &cmd {
                Some(c) => format!("external process `{c}` reading LP files"),
                None => format!("external process reading LP files (set {SOLVER_ENV})"),
            },
            available: cmd.is_some(),
        },
    ]
}

pub fn backend(name: &str) -> Result<Box<dyn Backend>> {
    match name {
        "highs" => Ok(Box::new(InProcess)),
        "external" => {
            let cmd = external_command().ok_or_else(|| Error::Backend(format!("{SOLVER_ENV} is not set")))?;
            Ok(Box::new(External::from_command_line(&cmd)?))
        }
        other => Err(Error::UnknownBackend(other.to_string())),
    }
}

/// `external` when `NETCOVER_SOLVER` is set, `highs` otherwise.
pub fn default_backend_name() -> &'static str {
    if external_command().is_some() {
        "external"
    } else {
        "highs"
    }
}

pub fn default_backend() -> Result<Box<dyn Backend>> {
    backend(default_backend_name())
}

/// Solves with the default backend.
pub fn solve(model: &ModelSpec, options: &SolveOptions) -> Result<SolveResult> {
    default_backend()?.solve(model, options)
}

/// Rounds binaries at 0.5, recomputes the objective and re-checks every row.
fn finish(
    model: &ModelSpec,
    status: Status,
    values: Option<Vec<f64>>,
    bound: Option<f64>,
    wall_time: f64,
) -> Result<SolveResult> {
    let Some(mut values) = values else {
        return Ok(SolveResult { status, incumbent: None, bound, values: None, wall_time });
    };
    if values.len() != model.variables.len() {
        return Err(Error::Backend(format!(
            "backend returned {} values for {} variables",
            values.len(),
            model.variables.len()
        )));
    }
    for (x, var) in values.iter_mut().zip(&model.variables) {
        if var.kind == VarKind::Binary {
            *x = if *x > 0.5 { 1.0 } else { 0.0 };
        } else {
            *x = x.clamp(var.lower, var.upper);
        }
    }
    let violation = model.max_scaled_violation(&values);
    if violation > FEASIBILITY_TOL {
        return Err(Error::InconsistentSolution(format!("rounded solution violates the model by {violation:e}")));
    }
    let incumbent = model.objective_value(&values);
    let status = match status {
        Status::Optimal => Status::Optimal,
        Status::Timeout => Status::Timeout,
        _ => Status::Feasible,
    };
    log::debug!("solved {} model: {status}, incumbent {incumbent}, bound {bound:?}", model.variant);
    Ok(SolveResult { status, incumbent: Some(incumbent), bound, values: Some(values), wall_time })
}
