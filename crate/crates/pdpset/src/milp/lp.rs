//! LP-format text export and solver-solution import.
//!
//! The export follows the widely supported CPLEX LP text layout with
//! `Minimize`, `Subject To`, `Bounds`, and `Binaries` sections. Variables
//! and rows are written in registration order, which is itself sorted by
//! family and index tuple, so exports are byte-stable.

use thiserror::Error;

use super::{Assignment, MilpModel, VarKind};

const WRAP_COLUMN: usize = 76;

fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

struct LineWriter {
    out: String,
    line_len: usize,
}

impl LineWriter {
    fn new(out: String) -> Self {
        LineWriter { out, line_len: 0 }
    }

    fn begin(&mut self, head: &str) {
        self.out.push_str(head);
        self.line_len = head.len();
    }

    fn push(&mut self, token: &str) {
        if self.line_len + token.len() + 1 > WRAP_COLUMN {
            self.out.push_str("\n ");
            self.line_len = 1;
        } else {
            self.out.push(' ');
            self.line_len += 1;
        }
        self.out.push_str(token);
        self.line_len += token.len();
    }

    fn end(&mut self) {
        self.out.push('\n');
        self.line_len = 0;
    }
}

/// Renders a model as LP-format text. Deterministic: exporting the same
/// model twice yields byte-identical documents.
pub fn export_lp(model: &MilpModel) -> String {
    let mut w = LineWriter::new(String::with_capacity(model.n_rows() * 48));
    w.out.push_str("\\ dispatch model with synchronized transfers\n");
    w.out.push_str("Minimize\n");
    w.begin(" obj:");
    let mut first = true;
    for var in model.vars() {
        if var.obj == 0.0 {
            continue;
        }
        push_term(&mut w, &mut first, var.obj, &var.name);
    }
    if first {
        // fully weightless objective: emit a zero term to stay parseable
        w.push("0");
        w.push(&model.vars()[0].name);
    }
    w.end();

    w.out.push_str("Subject To\n");
    for row in model.rows() {
        w.begin(&format!(" {}:", row.name));
        let mut first = true;
        for &(vi, coef) in &row.terms {
            push_term(&mut w, &mut first, coef, &model.vars()[vi].name);
        }
        w.push(&row.sense.to_string());
        w.push(&fmt_num(row.rhs));
        w.end();
    }

    w.out.push_str("Bounds\n");
    for var in model.vars() {
        if var.kind == VarKind::Continuous && var.ub.is_finite() {
            w.out.push_str(&format!(" {} <= {} <= {}\n", fmt_num(var.lb), var.name, fmt_num(var.ub)));
        }
    }

    w.out.push_str("Binaries\n");
    w.begin("");
    for var in model.vars() {
        if var.kind == VarKind::Binary {
            w.push(&var.name);
        }
    }
    w.end();
    w.out.push_str("End\n");
    w.out
}

fn push_term(w: &mut LineWriter, first: &mut bool, coef: f64, name: &str) {
    if *first {
        *first = false;
        if coef < 0.0 {
            w.push("-");
        }
    } else {
        w.push(if coef < 0.0 { "-" } else { "+" });
    }
    let mag = coef.abs();
    if mag != 1.0 {
        w.push(&fmt_num(mag));
    }
    w.push(name);
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid solution file at line {line}: {message}")]
pub struct SolutionParseError {
    pub line: usize,
    pub message: String,
}

/// Reads a plain `name value` solution dump (one variable per line; `#` and
/// `\` start comment lines). Names unknown to the model are skipped and
/// reported back as warnings.
pub fn parse_solution(
    model: &MilpModel,
    text: &str,
) -> Result<(Assignment, Vec<String>), SolutionParseError> {
    let mut asg = Assignment::new();
    let mut warnings = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('\\') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let name = parts.next().unwrap();
        let value = parts.next().ok_or_else(|| SolutionParseError {
            line: ln + 1,
            message: format!("expected `name value`, got `{line}`"),
        })?;
        if parts.next().is_some() {
            return Err(SolutionParseError {
                line: ln + 1,
                message: format!("trailing tokens after `{name} {value}`"),
            });
        }
        let value: f64 = value.parse().map_err(|e| SolutionParseError {
            line: ln + 1,
            message: format!("bad number `{value}`: {e}"),
        })?;
        if model.var_index(name).is_none() {
            warnings.push(format!("unknown variable `{name}` at line {} ignored", ln + 1));
            continue;
        }
        asg.set(name, value);
    }
    Ok((asg, warnings))
}
