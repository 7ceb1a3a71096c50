pub mod audit;
pub mod build;
pub mod extract;
pub mod ir;

pub use build::{build_igtep, BuildError, Mode, VarMap};
pub use extract::{extract_plan, ExtractError, PlanResult};
