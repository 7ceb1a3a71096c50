//! Post-solve check of each built line against the exact heat balance.
//!
//! The model enforces a linearized balance, so the exact residual
//! `R I² + Qs − k (T − T_E) − εK (T⁴ − T_E⁴)` of a planned line may be
//! positive. It is bounded by the trig and radiation fit certificates, the
//! chord overestimate of `I²` working in our favour, and the robust `μ` terms.

use serde::Serialize;

use crate::case::CaseSystem;
use crate::dtlr::radiation_loss;
use crate::linearize::{trig_segments, TrigSegments};
use crate::milp::build::{thermal_params, BuildError};
use crate::milp::extract::PlanResult;
use crate::uncertainty::RobustParams;

/// Absolute slack (W/m) added to every bound for solver feasibility tolerances.
pub const AUDIT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HbeResidual {
    pub line: String,
    pub period: String,
    /// rad
    pub angle_diff: f64,
    /// A, from the exact AC expression at the planned angles.
    pub current_amps: f64,
    /// K
    pub temperature: f64,
    /// W/m, gains minus losses.
    pub residual: f64,
    /// W/m, largest residual the linearization can explain.
    pub bound: f64,
}

impl HbeResidual {
    pub fn within_bound(&self) -> bool {
        self.residual <= self.bound
    }
}

/// One entry per built line and period of a thermal-mode plan.
pub fn hbe_residual_audit(
    plan: &PlanResult,
    case: &CaseSystem,
    params: &RobustParams,
) -> Result<Vec<HbeResidual>, BuildError> {
    let trig = trig_segments();
    let mut out = Vec::new();
    for th in plan.thermal.iter().filter(|t| t.built) {
        let ci = case.line_index(&th.line).expect("plan line in case");
        let d = case.period_index(&th.period).expect("plan period in case");
        let l = &case.lines[ci];
        let tp = thermal_params(case, ci, d)?;
        let angle = |bus: &str| {
            plan.angles
                .iter()
                .find(|a| a.bus == bus && a.period == th.period)
                .map_or(0.0, |a| a.angle)
        };
        let x = angle(&l.from_bus) - angle(&l.to_bus);
        let i_true = (l.conductance - l.conductance * x.cos() + l.susceptance * x.sin()).abs();
        let delta = current_error_bound(&trig, l.conductance, l.susceptance);

        let w = &tp.weather;
        let t = th.temperature;
        let residual = tp.ohmic_coef * i_true * i_true + w.solar_gain
            - tp.coeffs.dominant() * (t - w.ambient_temp)
            - radiation_loss(tp.emissivity, w.radiation_coeff, t, w.ambient_temp);
        let mu = params.mu();
        let bound = tp.ohmic_coef * (2.0 * th.current * delta + delta * delta)
            + tp.radiation.max_overestimate.max(0.0)
            + mu * (1.0 + w.solar_gain.abs().max(1.0))
            + AUDIT_TOL;
        out.push(HbeResidual {
            line: th.line.clone(),
            period: th.period.clone(),
            angle_diff: x,
            current_amps: i_true * case.i_base_amps(),
            temperature: t,
            residual,
            bound,
        });
    }
    Ok(out)
}

/// Largest gap between the exact and the linearized flow magnitude, p.u.
pub fn current_error_bound(trig: &TrigSegments, g: f64, b: f64) -> f64 {
    g.abs() * trig.cos_abs_err() + b.abs() * trig.sin.max_abs_err
}
