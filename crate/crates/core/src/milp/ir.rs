//! Solver-agnostic MILP container with LP-format export.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;
use thiserror::Error;

pub type VarId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum IrError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("variable `{name}` has empty domain [{lower}, {upper}]")]
    EmptyDomain { name: String, lower: f64, upper: f64 },
    #[error("binary variable `{0}` must have bounds within [0, 1]")]
    BinaryBounds(String),
    #[error("constraint `{constraint}` references undeclared variable {var}")]
    UnknownVariable { constraint: String, var: VarId },
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("big-M `{name}` = {value} is below the operand bound {needed}")]
    BigMTooSmall { name: String, value: f64, needed: f64 },
    #[error("operand of `{0}` is unbounded")]
    Unbounded(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * x[v]).sum()
    }

    /// Amount by which `x` violates the row (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// A big-M constant together with where it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigM {
    pub name: String,
    pub value: f64,
    pub provenance: String,
    /// Expression whose magnitude the constant must dominate.
    pub operand: LinExpr,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Metadata {
    pub mode: String,
    pub big_m: Vec<BigM>,
}

/// An affine expression over model variables.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LinExpr {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn var(v: VarId) -> Self {
        Self {
            terms: vec![(v, 1.0)],
            constant: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn term(v: VarId, c: f64) -> Self {
        Self {
            terms: vec![(v, c)],
            constant: 0.0,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }

    /// Merges repeated variables and drops zero coefficients.
    pub fn compact(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(VarId, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|t| t.1 != 0.0);
        self.terms = out;
        self
    }
}

impl Add for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: LinExpr) -> LinExpr {
        self.terms.extend(rhs.terms);
        self.constant += rhs.constant;
        self
    }
}

impl Sub for LinExpr {
    type Output = LinExpr;
    fn sub(self, rhs: LinExpr) -> LinExpr {
        self + (-rhs)
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, k: f64) -> LinExpr {
        for t in &mut self.terms {
            t.1 *= k;
        }
        self.constant *= k;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ModelIR {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Minimised.
    pub objective: Vec<(VarId, f64)>,
    pub objective_constant: f64,
    pub metadata: Metadata,
    #[serde(skip)]
    var_names: HashMap<String, VarId>,
    #[serde(skip)]
    row_names: HashMap<String, usize>,
}

impl ModelIR {
    pub fn new(mode: &str) -> Self {
        Self {
            metadata: Metadata {
                mode: mode.to_string(),
                big_m: Vec::new(),
            },
            ..Default::default()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> Result<VarId, IrError> {
        let name = name.into();
        if lower > upper || lower.is_nan() || upper.is_nan() {
            return Err(IrError::EmptyDomain { name, lower, upper });
        }
        if kind == VarKind::Binary && (lower < 0.0 || upper > 1.0) {
            return Err(IrError::BinaryBounds(name));
        }
        if self.var_names.contains_key(&name) {
            return Err(IrError::DuplicateVariable(name));
        }
        let id = self.variables.len();
        self.var_names.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            kind,
            lower,
            upper,
        });
        Ok(id)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId, IrError> {
        self.add_var(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, IrError> {
        self.add_var(name, VarKind::Binary, 0.0, 1.0)
    }

    /// Adds `expr (sense) rhs`; the expression's constant moves to the right side.
    pub fn add_row(&mut self, name: impl Into<String>, expr: LinExpr, sense: Sense, rhs: f64) -> Result<usize, IrError> {
        let name = name.into();
        let expr = expr.compact();
        let rhs = rhs - expr.constant;
        if !rhs.is_finite() || expr.terms.iter().any(|t| !t.1.is_finite()) {
            return Err(IrError::NonFinite(name));
        }
        if let Some(&(var, _)) = expr.terms.iter().find(|t| t.0 >= self.variables.len()) {
            return Err(IrError::UnknownVariable { constraint: name, var });
        }
        if self.row_names.contains_key(&name) {
            return Err(IrError::DuplicateConstraint(name));
        }
        let id = self.constraints.len();
        self.row_names.insert(name.clone(), id);
        self.constraints.push(Constraint {
            name,
            terms: expr.terms,
            sense,
            rhs,
        });
        Ok(id)
    }

    pub fn add_objective(&mut self, expr: LinExpr) {
        self.objective.extend(expr.terms);
        self.objective_constant += expr.constant;
        let merged = LinExpr {
            terms: std::mem::take(&mut self.objective),
            constant: 0.0,
        }
        .compact();
        self.objective = merged.terms;
    }

    pub fn record_big_m(&mut self, name: impl Into<String>, value: f64, provenance: impl Into<String>, operand: LinExpr) {
        self.metadata.big_m.push(BigM {
            name: name.into(),
            value,
            provenance: provenance.into(),
            operand,
        });
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_names.get(name).copied()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    /// Binaries whose bounds leave both values open.
    pub fn free_binaries(&self) -> Vec<VarId> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary && v.lower < 0.5 && v.upper > 0.5)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn fix(&mut self, v: VarId, value: f64) {
        self.variables[v].lower = value;
        self.variables[v].upper = value;
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }

    /// Interval bounds of an expression from the variable bounds.
    pub fn expr_bounds(&self, e: &LinExpr) -> (f64, f64) {
        let (mut lo, mut hi) = (e.constant, e.constant);
        for &(v, c) in &e.terms {
            let var = &self.variables[v];
            let (a, b) = (c * var.lower, c * var.upper);
            if c >= 0.0 {
                lo += a;
                hi += b;
            } else {
                lo += b;
                hi += a;
            }
        }
        (lo, hi)
    }

    /// Largest bound violation and row violation of a point.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let bounds = self
            .variables
            .iter()
            .zip(x)
            .map(|(v, &xi)| (v.lower - xi).max(xi - v.upper).max(0.0))
            .fold(0.0, f64::max);
        self.constraints.iter().map(|c| c.violation(x)).fold(bounds, f64::max)
    }

    pub fn validate(&self) -> Result<(), IrError> {
        for v in &self.variables {
            if v.lower > v.upper {
                return Err(IrError::EmptyDomain {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(IrError::BinaryBounds(v.name.clone()));
            }
        }
        for c in &self.constraints {
            if let Some(&(var, _)) = c.terms.iter().find(|t| t.0 >= self.variables.len()) {
                return Err(IrError::UnknownVariable {
                    constraint: c.name.clone(),
                    var,
                });
            }
        }
        Ok(())
    }

    /// CPLEX LP text format.
    pub fn to_lp_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "\\ mode: {}", self.metadata.mode);
        for m in &self.metadata.big_m {
            let _ = writeln!(s, "\\ big-M {} = {} ({})", m.name, m.value, m.provenance);
        }
        s.push_str("Minimize\n obj:");
        self.write_terms(&mut s, &self.objective);
        if self.objective_constant != 0.0 {
            let _ = write!(s, " {:+}", self.objective_constant);
        }
        if self.objective.is_empty() && self.objective_constant == 0.0 {
            s.push_str(" 0");
        }
        s.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(s, " {}:", lp_name(&c.name));
            self.write_terms(&mut s, &c.terms);
            if c.terms.is_empty() {
                s.push_str(" 0");
            }
            let op = match c.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(s, " {op} {}", c.rhs);
        }
        s.push_str("Bounds\n");
        for v in &self.variables {
            let name = lp_name(&v.name);
            match (v.lower.is_finite(), v.upper.is_finite()) {
                (true, true) if v.lower == v.upper => {
                    let _ = writeln!(s, " {name} = {}", v.lower);
                }
                (true, true) => {
                    let _ = writeln!(s, " {} <= {name} <= {}", v.lower, v.upper);
                }
                (true, false) => {
                    let _ = writeln!(s, " {name} >= {}", v.lower);
                }
                (false, true) => {
                    let _ = writeln!(s, " -inf <= {name} <= {}", v.upper);
                }
                (false, false) => {
                    let _ = writeln!(s, " {name} free");
                }
            }
        }
        let bins: Vec<_> = self
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| lp_name(&v.name))
            .collect();
        if !bins.is_empty() {
            s.push_str("Binaries\n");
            for b in bins {
                let _ = writeln!(s, " {b}");
            }
        }
        s.push_str("End\n");
        s
    }

    fn write_terms(&self, s: &mut String, terms: &[(VarId, f64)]) {
        for &(v, c) in terms {
            let _ = write!(s, " {:+} {}", c, lp_name(&self.variables[v].name));
        }
    }
}

/// LP-format identifiers may not contain brackets, commas or spaces.
fn lp_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.".contains(c) { c } else { '_' })
        .collect()
}
