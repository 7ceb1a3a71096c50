//! Exhaustive enumeration over the free binaries, one LP per assignment.

use rayon::prelude::*;

use crate::milp::ir::ModelIR;

use super::simplex::{solve_with_bounds, LpOutcome};
use super::{Solution, SolveError, SolveStatus, MAX_ENUMERATION_CAP};

pub fn oracle_solve(model: &ModelIR, cap: usize) -> Result<Solution, SolveError> {
    let free = model.free_binaries();
    let cap = cap.min(MAX_ENUMERATION_CAP);
    if free.len() > cap {
        return Err(SolveError::CapExceeded {
            binaries: free.len(),
            cap,
        });
    }
    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();

    let outcomes: Vec<Result<LpOutcome, SolveError>> = (0u32..1u32 << free.len())
        .into_par_iter()
        .map(|mask| {
            let (mut lo, mut hi) = (lower.clone(), upper.clone());
            for (bit, &v) in free.iter().enumerate() {
                let value = f64::from((mask >> bit) & 1);
                lo[v] = value;
                hi[v] = value;
            }
            solve_with_bounds(model, &lo, &hi)
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    for outcome in outcomes {
        match outcome? {
            LpOutcome::Unbounded => return Ok(Solution::without_point(SolveStatus::Unbounded)),
            LpOutcome::Infeasible => {}
            LpOutcome::Optimal { objective, x } => {
                let better = best
                    .as_ref()
                    .map_or(true, |(b, _)| objective < b - 1e-12 * b.abs().max(1.0));
                if better {
                    best = Some((objective, x));
                }
            }
        }
    }
    Ok(match best {
        None => Solution::without_point(SolveStatus::Infeasible),
        Some((objective, values)) => Solution {
            status: SolveStatus::Optimal,
            objective: Some(objective),
            bound: Some(objective),
            values,
        },
    })
}
