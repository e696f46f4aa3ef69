//! Text LP output.

use std::fmt::Write;

use super::model::{ModelSpec, Sense, VarKind};

const TERMS_PER_LINE: usize = 8;

fn push_terms(out: &mut String, terms: &[(f64, usize)], model: &ModelSpec) {
    if terms.is_empty() {
        out.push_str(" 0 ");
        out.push_str(&model.variables.first().map_or(String::new(), |v| v.name.clone()));
        return;
    }
    for (k, &(c, j)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n  ");
        }
        let name = &model.variables[j].name;
        let sign = if c < 0.0 { '-' } else { '+' };
        let a = c.abs();
        if a == 1.0 {
            let _ = write!(out, " {sign} {name}");
        } else {
            let _ = write!(out, " {sign} {a} {name}");
        }
    }
}

fn number(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x}")
    }
}

/// Writes `model` in the text LP format read by common MILP solvers.
///
/// Output depends only on the model, so identical models give identical files.
/// A nonzero objective offset is written as a constant term.
pub fn emit(model: &ModelSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ netcover model {} delta {}", model.variant, model.delta);
    out.push_str("Minimize\n obj:");
    if model.objective.is_empty() && model.objective_offset == 0.0 {
        out.push_str(" 0");
    } else {
        push_terms(&mut out, &model.objective, model);
        if model.objective_offset != 0.0 {
            let sign = if model.objective_offset < 0.0 { '-' } else { '+' };
            let _ = write!(out, " {sign} {}", model.objective_offset.abs());
        }
    }
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        push_terms(&mut out, &c.terms, model);
        let sense = match c.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {sense} {}", number(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in &model.variables {
        if v.is_fixed() {
            let _ = writeln!(out, " {} = {}", v.name, number(v.lower));
        } else if v.kind == VarKind::Continuous && !(v.lower == 0.0 && v.upper == f64::INFINITY) {
            let _ = writeln!(out, " {} <= {} <= {}", number(v.lower), v.name, number(v.upper));
        }
    }
    let binaries: Vec<&str> =
        model.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    out.push_str("Binaries\n");
    for chunk in binaries.chunks(TERMS_PER_LINE) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    out
}
