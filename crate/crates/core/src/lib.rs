//! Uncertainty-aware generation and transmission expansion planning with
//! optional dynamic thermal line rating.

pub mod case;
pub mod cli;
pub mod dtlr;
pub mod linearize;
pub mod milp;
pub mod solve;
pub mod uncertainty;
