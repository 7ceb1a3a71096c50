//! Assembles the expansion-planning MILP in one of three modes.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::{validate_case, CaseSystem, Violation};
use crate::dtlr::{conductor_coeffs, radiation_ln_fit, ConvectionCoeffs, DtlrError, RadiationLnFit, WeatherRecord};
use crate::linearize::gadgets::{bin_cont_product, convection_select, dc_flow};
use crate::linearize::{trig_segments, TrigSegments, ANGLE_LIMIT};
use crate::milp::ir::{IrError, LinExpr, ModelIR, Sense, VarId};
use crate::uncertainty::{robust_margin, RobustParams};

/// Chords used to bound the ohmic loss `R I²` from above.
pub const OHMIC_CHORDS: usize = 20;
/// Headroom applied to the current bound derived from the heat balance.
const CURRENT_HEADROOM: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Static ratings, nodal balance as equality.
    #[value(name = "dc_det")]
    DcDet,
    /// Static ratings, robust net-demand balance.
    #[value(name = "dc_robust")]
    DcRobust,
    /// Linearized AC flow with heat-balance ratings and robust solar gain.
    #[value(name = "dtlr_robust")]
    DtlrRobust,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::DcDet, Mode::DcRobust, Mode::DtlrRobust];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::DcDet => "dc_det",
            Mode::DcRobust => "dc_robust",
            Mode::DtlrRobust => "dtlr_robust",
        }
    }

    pub fn is_dtlr(&self) -> bool {
        matches!(self, Mode::DtlrRobust)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}` (expected dc_det, dc_robust or dtlr_robust)"))
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("case is invalid ({} violations)", .0.len())]
    InvalidCase(Vec<Violation>),
    #[error("no weather for line `{line}` in period `{period}`")]
    MissingWeather { line: String, period: String },
    #[error("line `{line}` in period `{period}`: {source}")]
    Thermal {
        line: String,
        period: String,
        #[source]
        source: DtlrError,
    },
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Thermal data of one line in one period, shared by the builder and the audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalParams {
    pub weather: WeatherRecord,
    pub coeffs: ConvectionCoeffs,
    pub emissivity: f64,
    pub t_max: f64,
    /// R(T_max) per metre times I_base², W/m per p.u.²
    pub ohmic_coef: f64,
    pub radiation: RadiationLnFit,
}

pub fn thermal_params(case: &CaseSystem, line: usize, period: usize) -> Result<ThermalParams, BuildError> {
    let l = &case.lines[line];
    let pid = || case.periods[period].id.clone();
    let weather = case.weather(line, period).ok_or_else(|| BuildError::MissingWeather {
        line: l.id.clone(),
        period: pid(),
    })?;
    let wrap = |source| BuildError::Thermal {
        line: l.id.clone(),
        period: pid(),
        source,
    };
    let coeffs = conductor_coeffs(&l.conductor, &weather).map_err(wrap)?;
    let te = weather.ambient_temp;
    let range = (te.min(273.0), l.t_max.max(373.0));
    let radiation = radiation_ln_fit(l.conductor.emissivity, weather.radiation_coeff, te, range).map_err(wrap)?;
    let i_base = case.i_base_amps();
    Ok(ThermalParams {
        weather,
        coeffs,
        emissivity: l.conductor.emissivity,
        t_max: l.t_max,
        ohmic_coef: l.resistance_per_m() * i_base * i_base,
        radiation,
    })
}

/// Variables of one line-period heat-balance block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalVars {
    pub angle_diff: VarId,
    pub half: VarId,
    pub current: VarId,
    pub ohmic: VarId,
    pub temperature: VarId,
    pub q_con1: VarId,
    pub q_con2: VarId,
    pub q_rad: VarId,
    pub convection_y: VarId,
}

/// Where every decision variable lives in the model.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VarMap {
    pub mode: Option<Mode>,
    pub u_line: Vec<VarId>,
    pub u_gen: Vec<VarId>,
    /// [generator][period], MW
    pub dispatch: Vec<Vec<VarId>>,
    /// [line][period], p.u.
    pub flow: Vec<Vec<VarId>>,
    /// [bus][period], rad
    pub angle: Vec<Vec<VarId>>,
    /// [line][period]; empty outside the thermal mode.
    pub thermal: Vec<Vec<ThermalVars>>,
}

impl VarMap {
    pub fn all_vars(&self) -> Vec<VarId> {
        let mut v: Vec<VarId> = self.u_line.iter().chain(&self.u_gen).copied().collect();
        for grid in [&self.dispatch, &self.flow, &self.angle] {
            v.extend(grid.iter().flatten());
        }
        for t in self.thermal.iter().flatten() {
            v.extend([
                t.angle_diff,
                t.half,
                t.current,
                t.ohmic,
                t.temperature,
                t.q_con1,
                t.q_con2,
                t.q_rad,
                t.convection_y,
            ]);
        }
        v
    }
}

/// Balance right-hand side: forecast net demand adjusted by the robust margins.
pub fn balance_rhs(net: f64, mode: Mode, params: &RobustParams) -> f64 {
    match mode {
        Mode::DcDet => net,
        _ => {
            let m = robust_margin(net, params);
            net + m.tighten - m.relax
        }
    }
}

/// Constant solar term of the robust heat balance, W/m.
pub fn robust_solar(qs: f64, params: &RobustParams) -> f64 {
    let m = robust_margin(qs, params);
    qs + m.tighten - m.relax
}

pub fn build_igtep(case: &CaseSystem, params: &RobustParams, mode: Mode) -> Result<(ModelIR, VarMap), BuildError> {
    let violations = validate_case(case);
    if !violations.is_empty() {
        return Err(BuildError::InvalidCase(violations));
    }
    if mode.is_dtlr() {
        if let Some((line, period)) = case.missing_weather().into_iter().next() {
            return Err(BuildError::MissingWeather { line, period });
        }
    }

    let mut m = ModelIR::new(mode.as_str());
    let mut vm = VarMap {
        mode: Some(mode),
        ..Default::default()
    };
    let nd = case.periods.len();
    let pid = |d: usize| case.periods[d].id.as_str();

    for l in &case.lines {
        let u = m.add_binary(format!("u[{}]", l.id))?;
        if !l.candidate {
            m.fix(u, 1.0);
        }
        vm.u_line.push(u);
    }
    for g in &case.generators {
        let u = m.add_binary(format!("u[{}]", g.id))?;
        if !g.candidate {
            m.fix(u, 1.0);
        }
        vm.u_gen.push(u);
    }

    for (gi, g) in case.generators.iter().enumerate() {
        let mut row = Vec::with_capacity(nd);
        for d in 0..nd {
            let p = m.add_continuous(format!("P[{},{}]", g.id, pid(d)), 0.0, g.p_max)?;
            m.add_row(
                format!("cap[{},{}]", g.id, pid(d)),
                LinExpr::var(p) - LinExpr::term(vm.u_gen[gi], g.p_max),
                Sense::Le,
                0.0,
            )?;
            row.push(p);
        }
        vm.dispatch.push(row);
    }

    let reference = case.reference_bus();
    for (bi, b) in case.buses.iter().enumerate() {
        let mut row = Vec::with_capacity(nd);
        for d in 0..nd {
            let a = m.add_continuous(format!("alpha[{},{}]", b.id, pid(d)), -FRAC_PI_2, FRAC_PI_2)?;
            if Some(bi) == reference {
                m.fix(a, 0.0);
            }
            row.push(a);
        }
        vm.angle.push(row);
    }

    let bus_of = |id: &str| case.bus_index(id).expect("validated endpoint");
    let ends: Vec<(usize, usize)> = case.lines.iter().map(|l| (bus_of(&l.from_bus), bus_of(&l.to_bus))).collect();

    if mode.is_dtlr() {
        build_thermal(case, params, &mut m, &mut vm, &ends)?;
    } else {
        for (ci, l) in case.lines.iter().enumerate() {
            let mut row = Vec::with_capacity(nd);
            for d in 0..nd {
                let (s, r) = ends[ci];
                let pf = m.add_continuous(format!("pf[{},{}]", l.id, pid(d)), -l.flow_limit, l.flow_limit)?;
                let diff = LinExpr::var(vm.angle[s][d]) - LinExpr::var(vm.angle[r][d]);
                let x = m.expr_bounds(&diff).1.max(-m.expr_bounds(&diff).0);
                dc_flow(&mut m, &format!("dc[{},{}]", l.id, pid(d)), vm.u_line[ci], pf, l.susceptance, &diff, l.flow_limit, x)?;
                row.push(pf);
            }
            vm.flow.push(row);
        }
    }

    let sense = if mode == Mode::DcDet { Sense::Eq } else { Sense::Ge };
    let s_base = case.s_base();
    for (bi, b) in case.buses.iter().enumerate() {
        for d in 0..nd {
            let mut e = LinExpr::default();
            for (gi, g) in case.generators.iter().enumerate() {
                if g.bus == b.id {
                    e = e + LinExpr::var(vm.dispatch[gi][d]);
                }
            }
            for (ci, &(s, r)) in ends.iter().enumerate() {
                if s == bi {
                    e = e - LinExpr::term(vm.flow[ci][d], s_base);
                }
                if r == bi {
                    e = e + LinExpr::term(vm.flow[ci][d], s_base);
                }
            }
            let rhs = balance_rhs(case.net_demand(bi, d), mode, params);
            m.add_row(format!("balance[{},{}]", b.id, pid(d)), e, sense, rhs)?;
        }
    }

    let mut obj = LinExpr::default();
    for (ci, l) in case.lines.iter().enumerate() {
        if l.candidate {
            obj = obj + LinExpr::term(vm.u_line[ci], l.install_cost);
        }
    }
    for (gi, g) in case.generators.iter().enumerate() {
        if g.candidate {
            obj = obj + LinExpr::term(vm.u_gen[gi], g.install_cost);
        }
        for d in 0..nd {
            obj = obj + LinExpr::term(vm.dispatch[gi][d], g.op_cost * case.periods[d].duration);
        }
    }
    m.add_objective(obj);
    Ok((m, vm))
}

fn build_thermal(
    case: &CaseSystem,
    params: &RobustParams,
    m: &mut ModelIR,
    vm: &mut VarMap,
    ends: &[(usize, usize)],
) -> Result<(), BuildError> {
    let trig: TrigSegments = trig_segments();
    let nd = case.periods.len();
    let phi_omega = params.phi_omega();
    let mu = params.mu();

    for (ci, l) in case.lines.iter().enumerate() {
        let u = vm.u_line[ci];
        let (s, r) = ends[ci];
        let blocks: Vec<ThermalParams> = (0..nd).map(|d| thermal_params(case, ci, d)).collect::<Result<_, _>>()?;
        let k_max = blocks.iter().map(|b| b.coeffs.dominant()).fold(0.0, f64::max);
        let te_min = blocks.iter().map(|b| b.weather.ambient_temp).fold(f64::INFINITY, f64::min);
        let conv_m = 1.5 * k_max * (l.t_max - te_min).max(0.0) + mu;

        let mut flows = Vec::with_capacity(nd);
        let mut vars = Vec::with_capacity(nd);
        for (d, tp) in blocks.iter().enumerate() {
            let tag = format!("{},{}", l.id, case.periods[d].id);
            let te = tp.weather.ambient_temp;

            // x̂ follows the angle difference on built lines and is pinned to
            // 0 otherwise; the anchored fits give a zero flow at x̂ = 0.
            let diff = LinExpr::var(vm.angle[s][d]) - LinExpr::var(vm.angle[r][d]);
            let (dlo, dhi) = m.expr_bounds(&diff);
            let release = dhi.max(-dlo) + ANGLE_LIMIT;
            let x = m.add_continuous(format!("x[{tag}]"), -ANGLE_LIMIT, ANGLE_LIMIT)?;
            m.add_row(
                format!("xlink_hi[{tag}]"),
                LinExpr::var(x) - diff.clone() + LinExpr::term(u, release),
                Sense::Le,
                release,
            )?;
            m.add_row(
                format!("xlink_lo[{tag}]"),
                LinExpr::var(x) - diff.clone() - LinExpr::term(u, release),
                Sense::Ge,
                -release,
            )?;
            m.record_big_m(format!("xlink[{tag}]"), release, "angle-difference bound plus window", LinExpr::var(x) - diff);
            m.add_row(format!("xon_hi[{tag}]"), LinExpr::var(x) - LinExpr::term(u, ANGLE_LIMIT), Sense::Le, 0.0)?;
            m.add_row(format!("xon_lo[{tag}]"), LinExpr::var(x) + LinExpr::term(u, ANGLE_LIMIT), Sense::Ge, 0.0)?;

            // Segment selector l: x̂ ≥ −0.6(1−l) and x̂ ≤ 0.6l.
            let half = m.add_binary(format!("l[{tag}]"))?;
            m.add_row(
                format!("xseg_lo[{tag}]"),
                LinExpr::var(x) - LinExpr::term(half, ANGLE_LIMIT),
                Sense::Ge,
                -ANGLE_LIMIT,
            )?;
            m.add_row(format!("xseg_hi[{tag}]"), LinExpr::var(x) - LinExpr::term(half, ANGLE_LIMIT), Sense::Le, 0.0)?;
            let lx = bin_cont_product(m, &format!("lx[{tag}]"), half, &LinExpr::var(x), ANGLE_LIMIT)?.output;
            // l = 1 exactly when x̂ ≥ 0, so l·x̂ is the positive part of x̂.
            m.add_row(format!("xpos[{tag}]"), lx.clone(), Sense::Ge, 0.0)?;
            m.add_row(format!("xneg[{tag}]"), LinExpr::var(x) - lx.clone(), Sense::Le, 0.0)?;

            let (c1, c2) = (&trig.cos_neg, &trig.cos_pos);
            let cos = LinExpr::constant(c1.intercept)
                + LinExpr::term(x, c1.slope)
                + LinExpr::term(half, c2.intercept - c1.intercept)
                + lx * (c2.slope - c1.slope);
            let sin = LinExpr::term(x, trig.sin.slope) + LinExpr::constant(trig.sin.intercept);
            let ac = LinExpr::constant(l.conductance) - cos * l.conductance + sin * l.susceptance;
            let at = |xv: f64| l.conductance * (1.0 - trig.cos(xv)) + l.susceptance * trig.sin(xv);
            let (elo, ehi) = (at(-ANGLE_LIMIT).min(at(0.0)), at(ANGLE_LIMIT).max(at(0.0)));
            let e_bound = elo.abs().max(ehi.abs());
            let pf = m.add_continuous(format!("pf[{tag}]"), -e_bound, e_bound)?;
            m.add_row(format!("pfdef[{tag}]"), LinExpr::var(pf) - ac, Sense::Eq, 0.0)?;

            // Current bound from the most generous heat balance the rows allow.
            let rad_max = tp.radiation.eval(l.t_max).max(0.0);
            let conv_cap = (1.0 - phi_omega).max(0.0) * tp.coeffs.dominant() * (l.t_max - te).max(0.0) + mu;
            let solar = robust_solar(tp.weather.solar_gain, params);
            let qo_max = (conv_cap + rad_max - solar).max(0.0);
            let i_ub = CURRENT_HEADROOM * (qo_max / tp.ohmic_coef).sqrt() + 1e-6;
            let current = m.add_continuous(format!("I[{tag}]"), 0.0, i_ub)?;
            // I ≥ |pf|. I only feeds the ohmic term, which grows with I, so
            // any slack can be removed without breaking a row.
            m.add_row(format!("Ipos[{tag}]"), LinExpr::var(current) - LinExpr::var(pf), Sense::Ge, 0.0)?;
            m.add_row(format!("Ineg[{tag}]"), LinExpr::var(current) + LinExpr::var(pf), Sense::Ge, 0.0)?;

            let ohmic = m.add_continuous(format!("Qo[{tag}]"), 0.0, f64::INFINITY)?;
            for k in 0..OHMIC_CHORDS {
                let a = i_ub * k as f64 / OHMIC_CHORDS as f64;
                let b = i_ub * (k + 1) as f64 / OHMIC_CHORDS as f64;
                m.add_row(
                    format!("ohm{k}[{tag}]"),
                    LinExpr::var(ohmic) - LinExpr::term(current, tp.ohmic_coef * (a + b)),
                    Sense::Ge,
                    -tp.ohmic_coef * a * b,
                )?;
            }

            let temperature = m.add_continuous(format!("T[{tag}]"), te, l.t_max.max(te))?;
            m.add_row(
                format!("Tcap[{tag}]"),
                LinExpr::var(temperature) - LinExpr::term(u, (l.t_max - te).max(0.0)),
                Sense::Le,
                te,
            )?;
            // Tcap pins T to T_E on unbuilt lines, so u·(T − T_E) is just T − T_E.
            let theta = LinExpr::var(temperature) - LinExpr::constant(te);

            let q1 = m.add_continuous(format!("Qc1[{tag}]"), 0.0, conv_m)?;
            let q2 = m.add_continuous(format!("Qc2[{tag}]"), 0.0, conv_m)?;
            m.add_row(
                format!("con1[{tag}]"),
                LinExpr::var(q1) - theta.clone() * ((1.0 - phi_omega) * tp.coeffs.k_prime),
                Sense::Le,
                mu,
            )?;
            m.add_row(
                format!("con2[{tag}]"),
                LinExpr::var(q2) - theta * ((1.0 - phi_omega) * tp.coeffs.k_double_prime),
                Sense::Le,
                mu,
            )?;
            let sel = convection_select(
                m,
                &format!("conv[{tag}]"),
                tp.coeffs.k_prime,
                tp.coeffs.k_double_prime,
                q1,
                q2,
                conv_m,
            )?;
            let convection_y = sel.binaries[0];

            let rad = &tp.radiation;
            let rad_at_te = rad.eval(te);
            let q_rad = m.add_continuous(format!("Qr[{tag}]"), rad_at_te.min(0.0), rad_max)?;
            m.add_row(
                format!("radgate[{tag}]"),
                LinExpr::var(q_rad) - LinExpr::term(u, rad_max),
                Sense::Le,
                0.0,
            )?;
            let rad_m = (-rad_at_te).max(0.0);
            m.add_row(
                format!("radlink[{tag}]"),
                LinExpr::var(q_rad) - LinExpr::term(temperature, rad.link_slope) + LinExpr::term(u, rad_m),
                Sense::Le,
                rad.link_intercept + rad_m,
            )?;
            m.record_big_m(format!("radlink[{tag}]"), rad_m, "link value at ambient", LinExpr::default());

            m.add_row(
                format!("hbe[{tag}]"),
                LinExpr::var(ohmic) + LinExpr::term(u, solar) - sel.output - LinExpr::var(q_rad),
                Sense::Le,
                0.0,
            )?;

            flows.push(pf);
            vars.push(ThermalVars {
                angle_diff: x,
                half,
                current,
                ohmic,
                temperature,
                q_con1: q1,
                q_con2: q2,
                q_rad,
                convection_y,
            });
        }
        vm.flow.push(flows);
        vm.thermal.push(vars);
    }
    Ok(())
}
