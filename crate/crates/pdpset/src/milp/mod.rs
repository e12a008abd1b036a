//! Symbolic mixed-integer model of the dispatch problem.
//!
//! [`build_model`] lays out the complete formulation — vehicle and passenger
//! flows, capacity linkage, arrival-time continuity with its linearization,
//! wait-time capture, and synchronized-transfer coupling — over the grid
//! extended by a shared dummy depot node. The model is exported in LP text
//! format for external solvers ([`export_lp`]); solver output is read back
//! as an [`Assignment`] and audited row by row ([`check_assignment`]).
//!
//! Plans from the heuristic or the oracles convert into assignments via
//! [`plan_to_assignment`], which is the bridge used to cross-check the
//! model against the simulation-based cost accounting.

mod assign;
mod build;
mod lp;

pub use assign::{check_assignment, objective_value, plan_to_assignment, AssignError, Violated, ViolationKind};
pub use build::{build_model, compute_big_m};
pub use lp::{export_lp, parse_solution, SolutionParseError};

use std::collections::{BTreeMap, HashMap};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub kind: VarKind,
    pub lb: f64,
    pub ub: f64,
    /// Objective coefficient; variables enter the objective at most once.
    pub obj: f64,
    family: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

/// One linear row: `sum(terms) sense rhs`.
#[derive(Debug, Clone)]
pub struct RowDef {
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    family: &'static str,
}

/// Variable registry, linear rows, and objective of one built model.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    vars: Vec<VarDef>,
    by_name: HashMap<String, usize>,
    rows: Vec<RowDef>,
    pub big_m: f64,
    /// Id of the dummy depot node (`n + 1` on an `n`-node network).
    pub depot: u32,
}

impl MilpModel {
    fn add_var(&mut self, family: &'static str, name: String, kind: VarKind, lb: f64, ub: f64) -> usize {
        debug_assert!(!self.by_name.contains_key(&name), "duplicate variable {name}");
        let idx = self.vars.len();
        self.by_name.insert(name.clone(), idx);
        self.vars.push(VarDef { name, kind, lb, ub, obj: 0.0, family });
        idx
    }

    fn add_obj(&mut self, var: usize, coef: f64) {
        self.vars[var].obj += coef;
    }

    fn add_row(&mut self, family: &'static str, name: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        debug_assert!(!terms.is_empty(), "empty row {name}");
        self.rows.push(RowDef { name, terms, sense, rhs, family });
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn vars(&self) -> &[VarDef] {
        &self.vars
    }

    pub fn rows(&self) -> &[RowDef] {
        &self.rows
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Variable counts per family (`X`, `Y`, `V`, `F`, `TV`, `TP`, `U`,
    /// `Z`, `S`, `W`).
    pub fn var_family_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for v in &self.vars {
            *out.entry(v.family).or_insert(0) += 1;
        }
        out
    }

    /// Row counts per constraint family.
    pub fn row_family_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rows {
            *out.entry(r.family).or_insert(0) += 1;
        }
        out
    }
}

/// A concrete value for each variable; names missing from the map read as 0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    values: BTreeMap<String, f64>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        let name = name.into();
        if value == 0.0 {
            self.values.remove(&name);
        } else {
            self.values.insert(name, value);
        }
    }

    pub fn get(&self, name: &str) -> f64 {
        self.values.get(name).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl FromIterator<(String, f64)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (String, f64)>>(iter: T) -> Self {
        let mut a = Assignment::new();
        for (k, v) in iter {
            a.set(k, v);
        }
        a
    }
}
