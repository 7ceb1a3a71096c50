//! Batch front end: scenario files, single plans, demand sweeps and the
//! rating and fit tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::{load_case, scale_to_peak, CaseError, CaseSystem, LineWeather};
use crate::dtlr::{ampacity, conductor_coeffs, hbe_breakdown, radiation_ln_fit, DtlrError, RADIATION_FIT_RANGE};
use crate::linearize::fit::Segment;
use crate::linearize::trig_segments;
use crate::milp::audit::{hbe_residual_audit, HbeResidual};
use crate::milp::build::{build_igtep, BuildError, Mode};
use crate::milp::extract::{extract_plan, ExtractError, PlanResult};
use crate::solve::{solve, SolveConfig, SolveError, SolveStatus};
use crate::uncertainty::{RobustParams, RobustSpec, UncertaintyError};

/// Objectives are printed in units of 10⁷ $.
pub const CURRENCY_UNIT: f64 = 1e7;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Case(#[from] CaseError),
    #[error("scenario {origin}: {message}")]
    Scenario { origin: String, message: String },
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Thermal(#[from] DtlrError),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("unknown {kind} `{id}`")]
    Unknown { kind: &'static str, id: String },
    #[error("failed to write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for input problems the user must fix in the data, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Case(CaseError::Invalid(_) | CaseError::Parse { .. })
            | CliError::Build(BuildError::InvalidCase(_) | BuildError::MissingWeather { .. })
            | CliError::Scenario { .. } => 2,
            _ => 1,
        }
    }
}

/// Weather override for one line in one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioWeather {
    pub period: String,
    #[serde(flatten)]
    pub weather: LineWeather,
}

/// Uncertainty parameters and weather layered on top of a case.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub robust: Option<RobustSpec>,
    #[serde(default)]
    pub weather: Vec<ScenarioWeather>,
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, CliError> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Scenario {
        origin: origin.clone(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Scenario {
        origin,
        message: e.to_string(),
    })
}

/// Merges scenario weather into the case (later records win) and resolves
/// the robust parameters, defaulting to φ = 0.05, μ = 0.01, ℜ = 0.05.
pub fn apply_scenario(case: &CaseSystem, scenario: &Scenario) -> Result<(CaseSystem, RobustParams), CliError> {
    let mut out = case.clone();
    for w in &scenario.weather {
        let d = out.period_index(&w.period).ok_or_else(|| CliError::Unknown {
            kind: "period",
            id: w.period.clone(),
        })?;
        if out.line_index(&w.weather.line).is_none() {
            return Err(CliError::Unknown {
                kind: "line",
                id: w.weather.line.clone(),
            });
        }
        out.periods[d].weather.push(w.weather.clone());
    }
    let params = match &scenario.robust {
        Some(spec) => RobustParams::from_spec(spec)?,
        None => RobustParams::default(),
    };
    Ok((out, params))
}

/// Reads a case and an optional scenario.
pub fn load_inputs(case: &Path, scenario: Option<&Path>) -> Result<(CaseSystem, RobustParams), CliError> {
    let c = load_case(case)?;
    let s = match scenario {
        Some(p) => load_scenario(p)?,
        None => Scenario::default(),
    };
    apply_scenario(&c, &s)
}

/// A solved plan together with its heat-balance audit in thermal mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanRun {
    pub plan: PlanResult,
    pub audit: Vec<HbeResidual>,
}

pub fn run_plan(case: &CaseSystem, params: &RobustParams, mode: Mode, cfg: &SolveConfig) -> Result<PlanRun, CliError> {
    let (model, vars) = build_igtep(case, params, mode)?;
    let solution = solve(&model, cfg)?;
    let plan = extract_plan(&solution, &model, &vars, case)?;
    let audit = if mode.is_dtlr() && plan.has_plan() {
        hbe_residual_audit(&plan, case, params)?
    } else {
        Vec::new()
    };
    Ok(PlanRun { plan, audit })
}

pub fn write_lp_file(case: &CaseSystem, params: &RobustParams, mode: Mode, path: &Path) -> Result<(), CliError> {
    let (model, _) = build_igtep(case, params, mode)?;
    std::fs::write(path, model.to_lp_string()).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("result serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub fn status_label(status: SolveStatus) -> &'static str {
    match status {
        SolveStatus::Optimal => "Optimal",
        SolveStatus::Infeasible => "Infeasible",
        SolveStatus::Unbounded => "Unbounded",
        SolveStatus::Limit => "Time limit",
    }
}

fn list_or_dash(items: &[String]) -> String {
    if items.is_empty() {
        "-".to_string()
    } else {
        items.join(", ")
    }
}

fn cost_cell(status: SolveStatus, objective: Option<f64>) -> String {
    match (status, objective) {
        (SolveStatus::Optimal, Some(v)) => format!("{:.4}", v / CURRENCY_UNIT),
        (_, Some(v)) => format!("{:.4} ({})", v / CURRENCY_UNIT, status_label(status)),
        (_, None) => status_label(status).to_string(),
    }
}

fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(&widths).enumerate() {
            if i > 0 {
                s.push_str(" | ");
            }
            let pad = w - c.chars().count();
            s.push_str(c);
            s.push_str(&" ".repeat(pad));
        }
        s.trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

const PLAN_HEADER: [&str; 6] = [
    "Peak (MW)",
    "Mode",
    "Added lines",
    "Added units",
    "Added element number",
    "Total cost ($x10^7)",
];

pub fn render_plan(run: &PlanRun) -> String {
    let p = &run.plan;
    let row = vec![
        format!("{}", p.peak_demand),
        p.mode.to_string(),
        list_or_dash(&p.built_lines),
        list_or_dash(&p.built_generators),
        (p.built_lines.len() + p.built_generators.len()).to_string(),
        cost_cell(p.status, p.objective),
    ];
    let mut out = render_table(&PLAN_HEADER, &[row]);
    if !run.audit.is_empty() {
        let worst = run
            .audit
            .iter()
            .max_by(|a, b| (a.residual - a.bound).total_cmp(&(b.residual - b.bound)))
            .expect("nonempty");
        let ok = run.audit.iter().all(HbeResidual::within_bound);
        let _ = writeln!(
            out,
            "heat-balance audit: {} line-periods, {}; worst residual {:.4} W/m (bound {:.4}) on {} in {}",
            run.audit.len(),
            if ok { "all within bound" } else { "BOUND EXCEEDED" },
            worst.residual,
            worst.bound,
            worst.line,
            worst.period,
        );
    }
    let tight: Vec<&str> = p.big_m.iter().filter(|b| b.is_tight()).map(|b| b.name.as_str()).collect();
    if !tight.is_empty() {
        let _ = writeln!(out, "big-M constants exceeded at the solution: {}", tight.join(", "));
    }
    out
}

/// Peaks and modes of a demand sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// MW, strictly increasing.
    pub peaks: Vec<f64>,
    pub modes: Vec<Mode>,
    pub out: Option<PathBuf>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.peaks.is_empty() {
            return Err(CliError::Sweep("no peaks given".into()));
        }
        if let Some(p) = self.peaks.iter().find(|p| !(**p > 0.0)) {
            return Err(CliError::Sweep(format!("peaks must be positive (got {p})")));
        }
        if self.peaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::Sweep("peaks must be strictly increasing".into()));
        }
        if self.modes.is_empty() {
            return Err(CliError::Sweep("no modes given".into()));
        }
        Ok(())
    }
}

/// Parses `300,400,500` or `300:800:100` (inclusive).
pub fn parse_peaks(s: &str) -> Result<Vec<f64>, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a {
            return Err(format!("bad range `{s}`"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| a + step * i as f64).collect());
    }
    s.split(',').filter(|t| !t.trim().is_empty()).map(num).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// MW
    pub peak: f64,
    pub mode: Mode,
    pub status: Option<SolveStatus>,
    pub built_lines: Vec<String>,
    pub built_generators: Vec<String>,
    /// $
    pub objective: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn elements(&self) -> usize {
        self.built_lines.len() + self.built_generators.len()
    }

    pub fn is_feasible(&self) -> bool {
        self.status == Some(SolveStatus::Optimal) && self.objective.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub table: String,
}

/// One row per (mode, peak); rows are solved in parallel and never abort the sweep.
pub fn run_sweep(case: &CaseSystem, params: &RobustParams, spec: &SweepSpec, cfg: &SolveConfig) -> Result<SweepReport, CliError> {
    spec.validate()?;
    let jobs: Vec<(Mode, f64)> = spec
        .modes
        .iter()
        .flat_map(|&m| spec.peaks.iter().map(move |&p| (m, p)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(mode, peak)| {
            let result = scale_to_peak(case, peak)
                .map_err(CliError::from)
                .and_then(|c| run_plan(&c, params, mode, cfg));
            match result {
                Ok(run) => SweepRow {
                    peak,
                    mode,
                    status: Some(run.plan.status),
                    built_lines: run.plan.built_lines,
                    built_generators: run.plan.built_generators,
                    objective: run.plan.objective,
                    error: None,
                },
                Err(e) => SweepRow {
                    peak,
                    mode,
                    status: None,
                    built_lines: Vec::new(),
                    built_generators: Vec::new(),
                    objective: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let table = render_sweep(&rows);
    Ok(SweepReport { rows, table })
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let cost = match (&r.error, r.status) {
                (Some(e), _) => format!("error: {e}"),
                (None, Some(s)) => cost_cell(s, r.objective),
                (None, None) => "-".into(),
            };
            vec![
                format!("{}", r.peak),
                r.mode.to_string(),
                list_or_dash(&r.built_lines),
                list_or_dash(&r.built_generators),
                r.elements().to_string(),
                cost,
            ]
        })
        .collect();
    render_table(&PLAN_HEADER, &body)
}

/// Heat-balance terms of one line at its ampacity in every period.
pub fn render_rating(case: &CaseSystem, line: &str, period: Option<&str>) -> Result<String, CliError> {
    let ci = case.line_index(line).ok_or_else(|| CliError::Unknown {
        kind: "line",
        id: line.to_string(),
    })?;
    let l = &case.lines[ci];
    let periods: Vec<usize> = match period {
        Some(p) => vec![case.period_index(p).ok_or_else(|| CliError::Unknown {
            kind: "period",
            id: p.to_string(),
        })?],
        None => (0..case.periods.len()).collect(),
    };
    let r = l.resistance_per_m();
    let mut rows = Vec::new();
    for d in periods {
        let w = case.weather(ci, d).ok_or_else(|| BuildError::MissingWeather {
            line: l.id.clone(),
            period: case.periods[d].id.clone(),
        })?;
        let k = conductor_coeffs(&l.conductor, &w)?;
        let amps = ampacity(l.t_max, &w, &l.conductor, r)?;
        let h = hbe_breakdown(amps, l.t_max, &w, &l.conductor, r)?;
        rows.push(vec![
            case.periods[d].id.clone(),
            format!("{:.2}", w.ambient_temp),
            format!("{:.2}", w.wind_speed),
            format!("{:.0}", k.reynolds),
            format!("{:.4}", k.k_prime),
            format!("{:.4}", k.k_double_prime),
            format!("{:.2}", amps),
            format!("{:.4}", amps / case.i_base_amps()),
            format!("{:.3}", h.ohmic),
            format!("{:.3}", h.solar),
            format!("{:.3}", h.convection),
            format!("{:.3}", h.radiation),
        ]);
    }
    let header = [
        "Period", "T_E (K)", "Wind (m/s)", "Re", "k'", "k''", "Ampacity (A)", "Ampacity (p.u.)", "Ohmic (W/m)",
        "Solar (W/m)", "Convection (W/m)", "Radiation (W/m)",
    ];
    Ok(format!("line {} at T_max = {} K\n{}", l.id, l.t_max, render_table(&header, &rows)))
}

/// Certificates of every fitted segment.
pub fn render_fits(emissivity: f64, kr: f64, ambient: f64) -> Result<String, CliError> {
    let trig = trig_segments();
    let rad = radiation_ln_fit(emissivity, kr, ambient, RADIATION_FIT_RANGE)?;
    let seg = |name: &str, s: &Segment| {
        vec![
            name.to_string(),
            format!("{:.6}", s.slope),
            format!("{:.6}", s.intercept),
            format!("[{}, {}]", fmt_g(s.lo), fmt_g(s.hi)),
            format!("{:.3e}", s.max_abs_err),
            format!("{:.4}%", 100.0 * s.max_rel_err),
            format!("{:.4}%", 100.0 * s.boundary_rel_err),
        ]
    };
    let rows = vec![
        seg("sin", &trig.sin),
        seg("cos (x <= 0)", &trig.cos_neg),
        seg("cos (x >= 0)", &trig.cos_pos),
        seg("ln T", &rad.t_side),
        seg("ln(Q + eK T_E^4)", &rad.q_side),
    ];
    let header = ["Function", "Slope", "Intercept", "Domain", "Max abs err", "Max rel err", "Endpoint rel err"];
    let mut out = render_table(&header, &rows);
    let _ = writeln!(
        out,
        "radiation link: Q_rad <= {:.6} T + {:.6} (T_E = {ambient} K); overestimate <= {:.4} W/m, underestimate <= {:.4} W/m",
        rad.link_slope, rad.link_intercept, rad.max_overestimate, rad.max_underestimate
    );
    Ok(out)
}

fn fmt_g(x: f64) -> String {
    let s = format!("{x:.6}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
