//! MILP solving: an external branch-and-cut backend behind a thin adapter and
//! an exhaustive enumeration oracle for small models.

pub mod highs;
pub mod oracle;
pub mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::ir::{IrError, ModelIR};

/// Largest number of free binaries the oracle will enumerate.
pub const MAX_ENUMERATION_CAP: usize = 24;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("invalid solve configuration: {0}")]
    InvalidConfig(String),
    #[error("model has {binaries} free binaries, above the enumeration cap {cap}")]
    CapExceeded { binaries: usize, cap: usize },
    #[error("the LP solver was given {0} free binary variables")]
    HasBinaries(usize),
    #[error("simplex stopped after {0} pivots without converging")]
    PivotCap(usize),
    #[error("solver backend failed: {0}")]
    Backend(String),
    #[error(transparent)]
    Ir(#[from] IrError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// HiGHS branch-and-cut.
    External,
    /// Enumerate every binary assignment and solve each LP.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveConfig {
    pub backend: Backend,
    /// seconds
    pub time_limit: f64,
    /// relative
    pub mip_gap: f64,
    pub binary_enumeration_cap: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            backend: Backend::External,
            time_limit: 600.0,
            mip_gap: 1e-6,
            binary_enumeration_cap: 16,
        }
    }
}

impl SolveConfig {
    pub fn oracle() -> Self {
        Self {
            backend: Backend::Oracle,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.time_limit > 0.0) {
            return Err(SolveError::InvalidConfig(format!("time limit must be positive, got {}", self.time_limit)));
        }
        if !(self.mip_gap >= 0.0 && self.mip_gap < 1.0) {
            return Err(SolveError::InvalidConfig(format!("gap must lie in [0, 1), got {}", self.mip_gap)));
        }
        if self.binary_enumeration_cap > MAX_ENUMERATION_CAP {
            return Err(SolveError::InvalidConfig(format!(
                "enumeration cap {} exceeds {MAX_ENUMERATION_CAP}",
                self.binary_enumeration_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Time limit reached; values hold the best incumbent if one was found.
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// Proven lower bound on the optimum.
    pub bound: Option<f64>,
    /// One value per model variable; empty without a feasible point.
    pub values: Vec<f64>,
}

impl Solution {
    pub fn without_point(status: SolveStatus) -> Self {
        Self {
            status,
            objective: None,
            bound: None,
            values: Vec::new(),
        }
    }

    pub fn has_point(&self) -> bool {
        !self.values.is_empty()
    }
}

pub fn solve(model: &ModelIR, cfg: &SolveConfig) -> Result<Solution, SolveError> {
    cfg.validate()?;
    model.validate()?;
    match cfg.backend {
        Backend::External => highs::solve_highs(model, cfg),
        Backend::Oracle => oracle::oracle_solve(model, cfg.binary_enumeration_cap),
    }
}
