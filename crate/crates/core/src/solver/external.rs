//! Solver run as a separate process on an LP file.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use super::{finish, Backend, SolveOptions, SolveResult, Status};
use crate::error::{Error, Result};
use crate::formulations::{emit, ModelSpec};

/// Runs `<program> [args] --model_file M --options_file O --solution_file S`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct External {
    pub program: String,
    pub args: Vec<String>,
}

impl External {
    /// Splits a command line on whitespace.
    pub fn from_command_line(cmd: &str) -> Result<Self> {
        let mut parts = cmd.split_whitespace().map(String::from);
        let program = parts.next().ok_or_else(|| Error::Backend("empty solver command".into()))?;
        Ok(External { program, args: parts.collect() })
    }
}

/// Contents of a raw HiGHS solution file.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionFile {
    pub model_status: String,
    pub objective: Option<f64>,
    /// Column values keyed by name; empty when no primal solution was written.
    pub values: HashMap<String, f64>,
}

fn status_from_text(text: &str) -> Status {
    let t = text.trim().to_ascii_lowercase();
    if t == "optimal" {
        Status::Optimal
    } else if t == "infeasible" {
        Status::Infeasible
    } else if t.contains("unbounded") {
        Status::Unbounded
    } else if t.contains("time limit") {
        Status::Timeout
    } else if t.contains("load error") || t.contains("model error") {
        Status::Unread
    } else {
        Status::Feasible
    }
}

/// Parses the raw solution format: a `Model status` line followed by the
/// status, then a `# Primal solution values` block with `Objective`,
/// `# Columns N` and `N` lines of `name value`.
pub fn parse_solution_file(text: &str) -> Result<SolutionFile> {
    let mut lines = text.lines().map(str::trim);
    let mut model_status = None;
    let mut objective = None;
    let mut values = HashMap::new();
    let bad = |m: String| Error::Backend(format!("malformed solution file: {m}"));
    while let Some(line) = lines.next() {
        if line == "Model status" {
            model_status = lines.next().map(str::to_string);
        } else if line == "# Primal solution values" {
            let feasible = lines.next().unwrap_or("");
            if feasible.eq_ignore_ascii_case("none") {
                continue;
            }
            for line in lines.by_ref() {
                if let Some(rest) = line.strip_prefix("Objective") {
                    objective = Some(rest.trim().parse::<f64>().map_err(|_| bad(format!("objective {rest:?}")))?);
                } else if let Some(rest) = line.strip_prefix("# Columns") {
                    let n: usize = rest.trim().parse().map_err(|_| bad(format!("column count {rest:?}")))?;
                    for _ in 0..n {
                        let entry = lines.next().ok_or_else(|| bad("truncated column block".into()))?;
                        let (name, value) =
                            entry.rsplit_once(char::is_whitespace).ok_or_else(|| bad(format!("entry {entry:?}")))?;
                        let value = value.parse::<f64>().map_err(|_| bad(format!("value in {entry:?}")))?;
                        values.insert(name.trim().to_string(), value);
                    }
                    break;
                }
            }
        }
    }
    let model_status = model_status.ok_or_else(|| bad("no model status".into()))?;
    Ok(SolutionFile { model_status, objective, values })
}

/// Finds `Dual bound <x>` in solver output.
fn dual_bound_in(output: &str) -> Option<f64> {
    output
        .lines()
        .filter_map(|l| l.trim().strip_prefix("Dual bound"))
        .filter_map(|rest| rest.trim().parse::<f64>().ok())
        .next_back()
        .filter(|b| b.is_finite())
}

impl Backend for External {
    fn name(&self) -> &str {
        "external"
    }

    fn solve(&self, model: &ModelSpec, options: &SolveOptions) -> Result<SolveResult> {
        let start = Instant::now();
        let dir = tempfile::tempdir()?;
        let model_file = dir.path().join("model.lp");
        let options_file = dir.path().join("options.txt");
        let solution_file = dir.path().join("model.sol");
        std::fs::write(&model_file, emit(model))?;
        std::fs::write(
            &options_file,
            format!(
                "time_limit = {}\nmip_abs_gap = {}\nmip_rel_gap = 0\nthreads = {}\nrandom_seed = {}\n",
                options.time_limit,
                options.backend_abs_gap(),
                options.threads.max(1),
                options.seed
            ),
        )?;
        let output = Command::new(&self.program)
            .args(&self.args)
            .arg("--model_file")
            .arg(&model_file)
            .arg("--options_file")
            .arg(&options_file)
            .arg("--solution_file")
            .arg(&solution_file)
            .output()
            .map_err(|e| Error::Backend(format!("cannot run {}: {e}", self.program)))?;
        let wall = || start.elapsed().as_secs_f64();
        if !output.status.success() || !Path::new(&solution_file).exists() {
            log::warn!(
                "{} exited with {} and no usable solution: {}",
                self.program,
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            );
            return Ok(SolveResult::empty(Status::Unread, wall()));
        }
        let parsed = parse_solution_file(&std::fs::read_to_string(&solution_file)?)?;
        let status = status_from_text(&parsed.model_status);
        let bound = match status {
            Status::Optimal | Status::Timeout | Status::Feasible => {
                dual_bound_in(&String::from_utf8_lossy(&output.stdout))
            }
            _ => None,
        };
        let values = if parsed.values.is_empty() || matches!(status, Status::Infeasible | Status::Unread) {
            None
        } else {
            let mut out = Vec::with_capacity(model.variables.len());
            for v in &model.variables {
                let x = parsed
                    .values
                    .get(&v.name)
                    .ok_or_else(|| Error::Backend(format!("solution file lacks variable {}", v.name)))?;
                out.push(*x);
            }
            Some(out)
        };
        finish(model, status, values, bound, wall())
    }
}
