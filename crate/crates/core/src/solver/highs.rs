//! In-process HiGHS through its C interface.

use std::ffi::{c_void, CStr, CString};
use std::path::Path;
use std::ptr;
use std::time::Instant;

use highs_sys::*;

use super::{finish, Backend, SolveOptions, SolveResult, Status};
use crate::error::{Error, Result};
use crate::formulations::{ModelSpec, Sense, VarKind};

pub(super) fn version() -> String {
    // SAFETY: Highs_version returns a pointer to a static NUL-terminated string.
    unsafe { CStr::from_ptr(Highs_version()) }.to_string_lossy().into_owned()
}

/// Owned HiGHS instance.
struct Highs(*mut c_void);

impl Highs {
    fn new() -> Self {
        // SAFETY: Highs_create has no preconditions; the handle is freed in Drop.
        Highs(unsafe { Highs_create() })
    }

    fn check(code: HighsInt, what: &str) -> Result<()> {
        if code == kHighsStatusError {
            Err(Error::Backend(format!("HiGHS rejected {what}")))
        } else {
            Ok(())
        }
    }

    fn set_bool(&mut self, name: &str, value: bool) -> Result<()> {
        let key = CString::new(name).expect("option names have no NUL");
        // SAFETY: valid handle and NUL-terminated key.
        Self::check(unsafe { Highs_setBoolOptionValue(self.0, key.as_ptr(), value as HighsInt) }, name)
    }

    fn set_int(&mut self, name: &str, value: HighsInt) -> Result<()> {
        let key = CString::new(name).expect("option names have no NUL");
        // SAFETY: as above.
        Self::check(unsafe { Highs_setIntOptionValue(self.0, key.as_ptr(), value) }, name)
    }

    fn set_double(&mut self, name: &str, value: f64) -> Result<()> {
        let key = CString::new(name).expect("option names have no NUL");
        // SAFETY: as above.
        Self::check(unsafe { Highs_setDoubleOptionValue(self.0, key.as_ptr(), value) }, name)
    }

    fn apply(&mut self, options: &SolveOptions) -> Result<()> {
        self.set_bool("output_flag", false)?;
        self.set_double("time_limit", options.time_limit)?;
        self.set_double("mip_abs_gap", options.backend_abs_gap())?;
        self.set_double("mip_rel_gap", 0.0)?;
        self.set_int("threads", options.threads.max(1) as HighsInt)?;
        self.set_int("random_seed", options.seed as HighsInt)?;
        Ok(())
    }

    fn int_info(&self, name: &str) -> Option<HighsInt> {
        let key = CString::new(name).expect("info names have no NUL");
        let mut value: HighsInt = 0;
        // SAFETY: valid handle, key and output pointer.
        let code = unsafe { Highs_getIntInfoValue(self.0, key.as_ptr(), &mut value) };
        (code == kHighsStatusOk).then_some(value)
    }

    fn double_info(&self, name: &str) -> Option<f64> {
        let key = CString::new(name).expect("info names have no NUL");
        let mut value = 0.0;
        // SAFETY: valid handle, key and output pointer.
        let code = unsafe { Highs_getDoubleInfoValue(self.0, key.as_ptr(), &mut value) };
        (code == kHighsStatusOk && value.is_finite()).then_some(value)
    }

    fn model_status(&self) -> HighsInt {
        // SAFETY: valid handle.
        unsafe { Highs_getModelStatus(self.0) }
    }

    fn has_primal(&self) -> bool {
        self.int_info("primal_solution_status") == Some(kHighsSolutionStatusFeasible)
    }

    fn column_values(&self) -> Vec<f64> {
        // SAFETY: valid handle; buffers sized to the current model.
        let (n, m) = unsafe { (Highs_getNumCol(self.0), Highs_getNumRow(self.0)) };
        let mut col = vec![0.0; n as usize];
        let mut col_dual = vec![0.0; n as usize];
        let mut row = vec![0.0; m as usize];
        let mut row_dual = vec![0.0; m as usize];
        // SAFETY: every buffer has the length HiGHS writes into it.
        unsafe {
            Highs_getSolution(self.0, col.as_mut_ptr(), col_dual.as_mut_ptr(), row.as_mut_ptr(), row_dual.as_mut_ptr());
        }
        col
    }

    fn run(&mut self) -> HighsInt {
        // SAFETY: valid handle with a loaded model.
        unsafe { Highs_run(self.0) }
    }
}

impl Drop for Highs {
    fn drop(&mut self) {
        // SAFETY: the handle came from Highs_create and is dropped once.
        unsafe { Highs_destroy(self.0) }
    }
}

fn status_of(code: HighsInt, has_primal: bool) -> Status {
    match code {
        c if c == kHighsModelStatusOptimal => Status::Optimal,
        c if c == kHighsModelStatusInfeasible => Status::Infeasible,
        c if c == kHighsModelStatusUnbounded || c == kHighsModelStatusUnboundedOrInfeasible => Status::Unbounded,
        c if c == kHighsModelStatusTimeLimit => Status::Timeout,
        c if c == kHighsModelStatusLoadError || c == kHighsModelStatusModelError => Status::Unread,
        _ if has_primal => Status::Feasible,
        _ => Status::Timeout,
    }
}

/// The linked HiGHS library.
pub struct InProcess;

impl Backend for InProcess {
    fn name(&self) -> &str {
        "highs"
    }

    fn solve(&self, model: &ModelSpec, options: &SolveOptions) -> Result<SolveResult> {
        let start = Instant::now();
        if model.variables.is_empty() {
            let status = if model.constraints.iter().all(|c| c.violation(&[]) <= 0.0) {
                Status::Optimal
            } else {
                Status::Infeasible
            };
            let values = (status == Status::Optimal).then(Vec::new);
            let bound = values.as_ref().map(|_| model.objective_offset);
            return finish(model, status, values, bound, start.elapsed().as_secs_f64());
        }
        let n = model.variables.len();
        let mut cost = vec![0.0; n];
        for &(c, j) in &model.objective {
            cost[j] += c;
        }
        let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
        let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
        let integrality: Vec<HighsInt> = model
            .variables
            .iter()
            .map(|v| if v.kind == VarKind::Binary { kHighsVarTypeInteger } else { kHighsVarTypeContinuous })
            .collect();
        let mut row_lower = Vec::with_capacity(model.constraints.len());
        let mut row_upper = Vec::with_capacity(model.constraints.len());
        let mut starts = Vec::with_capacity(model.constraints.len());
        let mut index = Vec::new();
        let mut value = Vec::new();
        for c in &model.constraints {
            let (lo, hi) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            row_lower.push(lo);
            row_upper.push(hi);
            starts.push(index.len() as HighsInt);
            for &(coef, j) in &c.terms {
                index.push(j as HighsInt);
                value.push(coef);
            }
        }
        let mut highs = Highs::new();
        highs.apply(options)?;
        // SAFETY: all arrays have the lengths declared in the call.
        let code = unsafe {
            Highs_passMip(
                highs.0,
                n as HighsInt,
                model.constraints.len() as HighsInt,
                index.len() as HighsInt,
                kHighsMatrixFormatRowwise,
                kHighsObjSenseMinimize,
                model.objective_offset,
                cost.as_ptr(),
                lower.as_ptr(),
                upper.as_ptr(),
                row_lower.as_ptr(),
                row_upper.as_ptr(),
                if starts.is_empty() { ptr::null() } else { starts.as_ptr() },
                if index.is_empty() { ptr::null() } else { index.as_ptr() },
                if value.is_empty() { ptr::null() } else { value.as_ptr() },
                integrality.as_ptr(),
            )
        };
        if code == kHighsStatusError {
            return Ok(SolveResult::empty(Status::Unread, start.elapsed().as_secs_f64()));
        }
        highs.run();
        let has_primal = highs.has_primal();
        let status = status_of(highs.model_status(), has_primal);
        let bound = match status {
            Status::Infeasible | Status::Unbounded | Status::Unread => None,
            _ => highs.double_info("mip_dual_bound"),
        };
        let values =
            (has_primal && !matches!(status, Status::Infeasible | Status::Unread)).then(|| highs.column_values());
        finish(model, status, values, bound, start.elapsed().as_secs_f64())
    }
}

/// Outcome of [`run_lp_file`].
#[derive(Clone, Debug, PartialEq)]
pub struct LpRun {
    pub status: Status,
    pub objective: Option<f64>,
    pub dual_bound: Option<f64>,
}

/// Solves an LP file the way the HiGHS command-line tool does: options come
/// from an optional `key = value` file and the raw solution is written to
/// `solution`.
pub fn run_lp_file(model: &Path, options: Option<&Path>, solution: &Path) -> Result<LpRun> {
    let mut highs = Highs::new();
    highs.set_bool("output_flag", false)?;
    let c_path = |p: &Path| {
        CString::new(p.to_string_lossy().as_bytes())
            .map_err(|_| Error::InvalidArgument(format!("path {} contains NUL", p.display())))
    };
    if let Some(opts) = options {
        let file = c_path(opts)?;
        // SAFETY: valid handle and path.
        Highs::check(unsafe { Highs_readOptions(highs.0, file.as_ptr()) }, "the options file")?;
        highs.set_bool("output_flag", false)?;
    }
    let file = c_path(model)?;
    // SAFETY: valid handle and path.
    if unsafe { Highs_readModel(highs.0, file.as_ptr()) } == kHighsStatusError {
        return Ok(LpRun { status: Status::Unread, objective: None, dual_bound: None });
    }
    highs.run();
    let has_primal = highs.has_primal();
    let status = status_of(highs.model_status(), has_primal);
    let out = c_path(solution)?;
    // SAFETY: valid handle and path.
    Highs::check(unsafe { Highs_writeSolution(highs.0, out.as_ptr()) }, "writing the solution")?;
    // SAFETY: valid handle.
    let objective = has_primal.then(|| unsafe { Highs_getObjectiveValue(highs.0) });
    Ok(LpRun { status, objective, dual_bound: highs.double_info("mip_dual_bound") })
}
