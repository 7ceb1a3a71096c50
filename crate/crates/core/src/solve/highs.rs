//! Adapter for the HiGHS MILP solver.

use highs::{HighsModelStatus, RowProblem, Sense as HSense};

use crate::milp::ir::{ModelIR, Sense, VarKind};

use super::{Solution, SolveConfig, SolveError, SolveStatus};

/// Largest bound or row violation accepted for an incumbent returned at a limit.
const INCUMBENT_TOL: f64 = 1e-6;

pub fn solve_highs(model: &ModelIR, cfg: &SolveConfig) -> Result<Solution, SolveError> {
    if model.variables.is_empty() {
        let feasible = model.constraints.iter().all(|c| c.violation(&[]) <= INCUMBENT_TOL);
        return Ok(if feasible {
            Solution {
                status: SolveStatus::Optimal,
                objective: Some(model.objective_constant),
                bound: Some(model.objective_constant),
                values: Vec::new(),
            }
        } else {
            Solution::without_point(SolveStatus::Infeasible)
        });
    }

    let mut cost = vec![0.0; model.variables.len()];
    for &(v, c) in &model.objective {
        cost[v] += c;
    }
    let mut pb = RowProblem::default();
    let cols: Vec<_> = model
        .variables
        .iter()
        .zip(&cost)
        .map(|(v, &c)| match v.kind {
            VarKind::Binary => pb.add_integer_column(c, v.lower..=v.upper),
            VarKind::Continuous => pb.add_column(c, v.lower..=v.upper),
        })
        .collect();
    for con in &model.constraints {
        let terms: Vec<_> = con.terms.iter().map(|&(v, c)| (cols[v], c)).collect();
        match con.sense {
            Sense::Le => pb.add_row(..=con.rhs, terms),
            Sense::Ge => pb.add_row(con.rhs.., terms),
            Sense::Eq => pb.add_row(con.rhs..=con.rhs, terms),
        }
    }

    let mut hm = pb.try_optimise(HSense::Minimise).map_err(|e| SolveError::Backend(format!("{e:?}")))?;
    hm.make_quiet();
    hm.set_option("time_limit", cfg.time_limit);
    hm.set_option("mip_rel_gap", cfg.mip_gap);
    hm.set_option("mip_abs_gap", 1e-9);
    hm.set_option("mip_feasibility_tolerance", 1e-8);
    hm.set_option("primal_feasibility_tolerance", 1e-8);
    hm.set_option("threads", 1);
    hm.set_option("random_seed", 0);
    let solved = hm.try_solve().map_err(|e| SolveError::Backend(format!("{e:?}")))?;

    let has_binaries = model.variables.iter().any(|v| v.kind == VarKind::Binary);
    let point = |solved: &highs::SolvedModel| -> Vec<f64> { solved.get_solution().columns().to_vec() };
    let finish = |status: SolveStatus, values: Vec<f64>, obj: f64, gap: f64| {
        let objective = obj + model.objective_constant;
        let bound = if has_binaries && gap.is_finite() {
            objective - gap * objective.abs()
        } else {
            objective
        };
        Solution {
            status,
            objective: Some(objective),
            bound: Some(bound),
            values,
        }
    };

    Ok(match solved.status() {
        HighsModelStatus::Optimal => {
            let gap = if has_binaries { solved.mip_gap() } else { 0.0 };
            finish(SolveStatus::Optimal, point(&solved), solved.objective_value(), gap)
        }
        HighsModelStatus::ModelEmpty => finish(SolveStatus::Optimal, vec![0.0; model.variables.len()], 0.0, 0.0),
        HighsModelStatus::Infeasible => Solution::without_point(SolveStatus::Infeasible),
        HighsModelStatus::Unbounded => Solution::without_point(SolveStatus::Unbounded),
        HighsModelStatus::UnboundedOrInfeasible => disambiguate(model, cfg)?,
        HighsModelStatus::ReachedTimeLimit | HighsModelStatus::ReachedIterationLimit => {
            let values = point(&solved);
            if values.len() == model.variables.len() && model.max_violation(&values) <= INCUMBENT_TOL {
                let gap = if has_binaries { solved.mip_gap() } else { f64::INFINITY };
                finish(SolveStatus::Limit, values, solved.objective_value(), gap)
            } else {
                Solution::without_point(SolveStatus::Limit)
            }
        }
        other => return Err(SolveError::Backend(format!("unexpected model status {other:?}"))),
    })
}

/// Resolves an "unbounded or infeasible" verdict by solving the feasibility
/// problem with a zero objective.
fn disambiguate(model: &ModelIR, cfg: &SolveConfig) -> Result<Solution, SolveError> {
    let mut feas = model.clone();
    feas.objective.clear();
    feas.objective_constant = 0.0;
    let probe = solve_highs(&feas, cfg)?;
    Ok(match probe.status {
        SolveStatus::Optimal => Solution::without_point(SolveStatus::Unbounded),
        SolveStatus::Limit => Solution::without_point(SolveStatus::Limit),
        _ => Solution::without_point(SolveStatus::Infeasible),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::ir::LinExpr;

    #[test]
    fn empty_model_is_optimal_at_zero() {
        let s = solve_highs(&ModelIR::new("empty"), &SolveConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert_eq!(s.objective, Some(0.0));
    }

    #[test]
    fn contradictory_bounds() {
        let mut m = ModelIR::new("x");
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        m.add_row("ge", LinExpr::var(x), Sense::Ge, 1.0).unwrap();
        m.add_row("le", LinExpr::var(x), Sense::Le, 0.0).unwrap();
        let s = solve_highs(&m, &SolveConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Infeasible);
    }

    #[test]
    fn unbounded_lp() {
        let mut m = ModelIR::new("x");
        let x = m.add_continuous("x", f64::NEG_INFINITY, f64::INFINITY).unwrap();
        let y = m.add_binary("y").unwrap();
        m.add_objective(LinExpr::var(x) + LinExpr::var(y));
        let s = solve_highs(&m, &SolveConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Unbounded);
    }

    #[test]
    fn small_mip() {
        let mut m = ModelIR::new("x");
        let a = m.add_binary("a").unwrap();
        let b = m.add_binary("b").unwrap();
        m.add_row("r", LinExpr::var(a) + LinExpr::var(b), Sense::Ge, 1.0).unwrap();
        m.add_objective(LinExpr::term(a, 3.0) + LinExpr::term(b, 2.0) + LinExpr::constant(1.0));
        let s = solve_highs(&m, &SolveConfig::default()).unwrap();
        assert_eq!(s.status, SolveStatus::Optimal);
        assert!((s.objective.unwrap() - 3.0).abs() < 1e-9);
        assert!(s.values[1] > 0.5 && s.values[0] < 0.5);
    }
}
