//! Turns a solver point back into an expansion plan.

use serde::Serialize;
use thiserror::Error;

use crate::case::CaseSystem;
use crate::milp::build::{Mode, VarMap};
use crate::milp::ir::{ModelIR, VarKind};
use crate::solve::{Solution, SolveStatus};

/// Largest distance of a binary value from {0, 1} accepted on extraction.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Relative agreement required between the solver objective and the
/// objective recomputed from the rounded plan.
pub const OBJECTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("binary `{name}` has value {value}, not within {INTEGRALITY_TOL} of 0 or 1")]
    NotIntegral { name: String, value: f64 },
    #[error("recomputed objective {recomputed} differs from solver objective {reported}")]
    ObjectiveMismatch { reported: f64, recomputed: f64 },
    #[error("solution has {got} values for a model with {expected} variables")]
    WrongLength { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dispatch {
    pub generator: String,
    pub period: String,
    /// MW
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineFlow {
    pub line: String,
    pub period: String,
    /// p.u.
    pub flow: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BusAngle {
    pub bus: String,
    pub period: String,
    /// rad
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineThermal {
    pub line: String,
    pub period: String,
    pub built: bool,
    /// K
    pub temperature: f64,
    /// p.u.
    pub current: f64,
    /// A
    pub current_amps: f64,
    /// W/m
    pub ohmic: f64,
    pub convection: f64,
    pub radiation: f64,
}

/// Margin left by one big-M constant at the solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigMSlack {
    pub name: String,
    pub value: f64,
    pub largest_operand: f64,
    pub slack: f64,
}

impl BigMSlack {
    pub fn is_tight(&self) -> bool {
        self.slack < -1e-6 * self.value.abs().max(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanResult {
    pub mode: Mode,
    pub status: SolveStatus,
    /// $
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    /// MW
    pub peak_demand: f64,
    pub built_lines: Vec<String>,
    pub built_generators: Vec<String>,
    pub dispatch: Vec<Dispatch>,
    pub flows: Vec<LineFlow>,
    pub angles: Vec<BusAngle>,
    pub thermal: Vec<LineThermal>,
    pub big_m: Vec<BigMSlack>,
}

impl PlanResult {
    pub fn has_plan(&self) -> bool {
        self.objective.is_some()
    }

    pub fn is_built(&self, line: &str) -> bool {
        self.built_lines.iter().any(|l| l == line)
    }
}

pub fn extract_plan(
    solution: &Solution,
    model: &ModelIR,
    vars: &VarMap,
    case: &CaseSystem,
) -> Result<PlanResult, ExtractError> {
    let mode = vars.mode.unwrap_or(Mode::DcDet);
    let mut plan = PlanResult {
        mode,
        status: solution.status,
        objective: None,
        bound: None,
        peak_demand: case.peak_demand(),
        built_lines: Vec::new(),
        built_generators: Vec::new(),
        dispatch: Vec::new(),
        flows: Vec::new(),
        angles: Vec::new(),
        thermal: Vec::new(),
        big_m: Vec::new(),
    };
    if !solution.has_point() {
        return Ok(plan);
    }
    let x = &solution.values;
    if x.len() != model.num_vars() {
        return Err(ExtractError::WrongLength {
            got: x.len(),
            expected: model.num_vars(),
        });
    }
    for (v, var) in model.variables.iter().enumerate() {
        if var.kind == VarKind::Binary && (x[v] - x[v].round()).abs() > INTEGRALITY_TOL {
            return Err(ExtractError::NotIntegral {
                name: var.name.clone(),
                value: x[v],
            });
        }
    }
    let on = |v: usize| x[v] > 0.5;

    let mut recomputed = 0.0;
    for (ci, l) in case.lines.iter().enumerate() {
        if on(vars.u_line[ci]) && l.candidate {
            plan.built_lines.push(l.id.clone());
            recomputed += l.install_cost;
        }
    }
    for (gi, g) in case.generators.iter().enumerate() {
        if on(vars.u_gen[gi]) && g.candidate {
            plan.built_generators.push(g.id.clone());
            recomputed += g.install_cost;
        }
        for (d, p) in case.periods.iter().enumerate() {
            let power = x[vars.dispatch[gi][d]];
            recomputed += power * g.op_cost * p.duration;
            plan.dispatch.push(Dispatch {
                generator: g.id.clone(),
                period: p.id.clone(),
                power,
            });
        }
    }
    let reported = solution.objective.unwrap_or(recomputed);
    if (reported - recomputed).abs() > OBJECTIVE_TOL * reported.abs().max(1.0) {
        return Err(ExtractError::ObjectiveMismatch { reported, recomputed });
    }
    plan.objective = Some(recomputed);
    plan.bound = solution.bound;

    for (ci, l) in case.lines.iter().enumerate() {
        for (d, p) in case.periods.iter().enumerate() {
            plan.flows.push(LineFlow {
                line: l.id.clone(),
                period: p.id.clone(),
                flow: x[vars.flow[ci][d]],
            });
        }
    }
    for (bi, b) in case.buses.iter().enumerate() {
        for (d, p) in case.periods.iter().enumerate() {
            plan.angles.push(BusAngle {
                bus: b.id.clone(),
                period: p.id.clone(),
                angle: x[vars.angle[bi][d]],
            });
        }
    }
    let i_base = case.i_base_amps();
    for (ci, l) in case.lines.iter().enumerate() {
        let Some(blocks) = vars.thermal.get(ci) else { break };
        for (d, t) in blocks.iter().enumerate() {
            plan.thermal.push(LineThermal {
                line: l.id.clone(),
                period: case.periods[d].id.clone(),
                built: on(vars.u_line[ci]),
                temperature: x[t.temperature],
                current: x[vars.flow[ci][d]].abs(),
                current_amps: x[vars.flow[ci][d]].abs() * i_base,
                ohmic: x[t.ohmic],
                convection: x[t.q_con1] + x[t.q_con2],
                radiation: x[t.q_rad],
            });
        }
    }
    plan.big_m = big_m_slack(model, x);
    Ok(plan)
}

/// Big-M constants against the largest operand magnitude at `x`.
pub fn big_m_slack(model: &ModelIR, x: &[f64]) -> Vec<BigMSlack> {
    model
        .metadata
        .big_m
        .iter()
        .map(|b| {
            let largest = b.operand.eval(x).abs();
            BigMSlack {
                name: b.name.clone(),
                value: b.value,
                largest_operand: largest,
                slack: b.value - largest,
            }
        })
        .collect()
}
