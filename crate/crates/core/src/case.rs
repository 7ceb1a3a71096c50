//! Network data model: buses, lines, generators, periods and the case file.
//!
//! Loads and generation are kept in MW; susceptance, conductance and flow
//! limits are per-unit on the system MVA base. Conversion happens when the
//! planning model is assembled.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::dtlr::WeatherRecord;

/// Schema tag every case file must carry.
pub const CASE_SCHEMA: &str = "gridxpand/1";

/// One year split into five equal representative periods.
pub const DEFAULT_PERIOD_HOURS: f64 = 8760.0 / 5.0;

const WEIGHT_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("case failed validation:\n{}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("unknown bus `{0}`")]
    UnknownBus(String),
    #[error("unknown period `{0}`")]
    UnknownPeriod(String),
    #[error("peak demand must be positive, got {0}")]
    NonPositivePeak(f64),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  - {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A single broken invariant, reported as data rather than as an error.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub entity: String,
    pub id: String,
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(entity: &str, id: &str, field: &str, rule: impl Into<String>) -> Self {
        Self {
            entity: entity.to_string(),
            id: id.to_string(),
            field: field.to_string(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.id.is_empty() {
            write!(f, "{}.{}: {}", self.entity, self.field, self.rule)
        } else {
            write!(f, "{}[{}].{}: {}", self.entity, self.id, self.field, self.rule)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    /// Annual peak demand, MW.
    pub peak_demand: f64,
    pub s_base_mva: f64,
    pub v_base_kv: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusSpec {
    pub id: String,
    /// Share of the system peak located at this bus.
    pub load_weight: f64,
    /// MW per period. A scalar in the file applies to every period.
    #[serde(default, deserialize_with = "scalar_or_series")]
    pub ev_forecast: Vec<f64>,
    #[serde(default, deserialize_with = "scalar_or_series")]
    pub wind_forecast: Vec<f64>,
    #[serde(default, deserialize_with = "scalar_or_series")]
    pub pv_forecast: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductorSpec {
    /// m
    pub diameter: f64,
    /// kg/m³
    pub air_density: f64,
    /// kg/(m·s)
    pub air_viscosity: f64,
    /// W/(m·K)
    pub thermal_conductivity: f64,
    pub wind_angle_coeff: f64,
    pub emissivity: f64,
    /// W/(m·K⁴)
    pub radiation_coeff: f64,
    /// Ω
    pub resistance_ref: f64,
    /// K
    pub temperature_ref: f64,
    pub thermal_resistivity: f64,
    /// m above sea level
    #[serde(default)]
    pub elevation: f64,
    /// MJ/(m·K). Carried for completeness; the steady-state model never reads it.
    #[serde(default)]
    pub heat_capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSpec {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    #[serde(default)]
    pub candidate: bool,
    /// $
    #[serde(default)]
    pub install_cost: f64,
    /// p.u.
    pub susceptance: f64,
    /// p.u.
    #[serde(default)]
    pub conductance: f64,
    /// Total resistance of the line at its maximum temperature, Ω.
    pub resistance_at_tmax: f64,
    /// km
    pub length: f64,
    /// K
    pub t_max: f64,
    /// Static flow rating, p.u.
    pub flow_limit: f64,
    pub conductor: ConductorSpec,
}

impl LineSpec {
    /// Resistance at `t_max` per metre of conductor, Ω/m.
    pub fn resistance_per_m(&self) -> f64 {
        self.resistance_at_tmax / (self.length * 1000.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub id: String,
    pub bus: String,
    #[serde(default)]
    pub candidate: bool,
    /// $
    #[serde(default)]
    pub install_cost: f64,
    /// $/MWh
    pub op_cost: f64,
    /// MW
    pub p_max: f64,
}

/// Weather for one line in one period, as written in case and scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineWeather {
    pub line: String,
    pub ambient_k: f64,
    pub wind_mps: f64,
    pub solar_w_per_m: f64,
    /// Falls back to the conductor's radiation coefficient when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub id: String,
    /// hours
    #[serde(default = "default_duration")]
    pub duration: f64,
    pub load_factor: f64,
    #[serde(default)]
    pub weather: Vec<LineWeather>,
}

fn default_duration() -> f64 {
    DEFAULT_PERIOD_HOURS
}

/// Immutable description of the network and its planning horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSystem {
    pub schema: String,
    pub system: SystemSpec,
    pub buses: Vec<BusSpec>,
    pub lines: Vec<LineSpec>,
    pub generators: Vec<GeneratorSpec>,
    pub periods: Vec<PeriodSpec>,
}

fn scalar_or_series<'de, D>(de: D) -> Result<Vec<f64>, D::Error>
where
    D: Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Scalar(f64),
        Series(Vec<f64>),
    }
    Ok(match Raw::deserialize(de)? {
        Raw::Scalar(x) => vec![x],
        Raw::Series(v) => v,
    })
}

impl CaseSystem {
    pub fn s_base(&self) -> f64 {
        self.system.s_base_mva
    }

    pub fn peak_demand(&self) -> f64 {
        self.system.peak_demand
    }

    /// Base current for the single-phase per-unit convention, A.
    pub fn i_base_amps(&self) -> f64 {
        self.system.s_base_mva * 1e6 / (self.system.v_base_kv * 1e3)
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    pub fn period_index(&self, id: &str) -> Option<usize> {
        self.periods.iter().position(|p| p.id == id)
    }

    /// Reference bus: the lexicographically smallest bus id.
    pub fn reference_bus(&self) -> Option<usize> {
        self.buses
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.id.cmp(&b.1.id))
            .map(|(i, _)| i)
    }

    /// Base load at a bus in a period, MW.
    pub fn base_load(&self, bus: usize, period: usize) -> f64 {
        self.system.peak_demand * self.buses[bus].load_weight * self.periods[period].load_factor
    }

    /// Base load plus EV charging minus wind and PV, MW. May be negative.
    pub fn net_demand(&self, bus: usize, period: usize) -> f64 {
        let b = &self.buses[bus];
        self.base_load(bus, period) + series_at(&b.ev_forecast, period)
            - series_at(&b.wind_forecast, period)
            - series_at(&b.pv_forecast, period)
    }

    /// Weather seen by `line` in `period`, with the radiation coefficient resolved.
    pub fn weather(&self, line: usize, period: usize) -> Option<WeatherRecord> {
        let l = &self.lines[line];
        self.periods[period]
            .weather
            .iter()
            .rev()
            .find(|w| w.line == l.id)
            .map(|w| WeatherRecord {
                ambient_temp: w.ambient_k,
                wind_speed: w.wind_mps,
                solar_gain: w.solar_w_per_m,
                radiation_coeff: w.kr.unwrap_or(l.conductor.radiation_coeff),
            })
    }

    /// (line id, period id) pairs without a weather record.
    pub fn missing_weather(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (d, p) in self.periods.iter().enumerate() {
            for (c, l) in self.lines.iter().enumerate() {
                if self.weather(c, d).is_none() {
                    out.push((l.id.clone(), p.id.clone()));
                }
            }
        }
        out
    }

    /// Expands scalar forecasts so every series has one value per period.
    fn broadcast_forecasts(&mut self) {
        let n = self.periods.len();
        for b in &mut self.buses {
            for s in [&mut b.ev_forecast, &mut b.wind_forecast, &mut b.pv_forecast] {
                match s.len() {
                    0 => *s = vec![0.0; n],
                    1 if n > 1 => *s = vec![s[0]; n],
                    _ => {}
                }
            }
        }
    }
}

fn series_at(s: &[f64], period: usize) -> f64 {
    s.get(period).copied().unwrap_or(0.0)
}

/// Parses and validates a case document.
pub fn parse_case(text: &str, origin: &str) -> Result<CaseSystem, CaseError> {
    let mut case: CaseSystem = serde_json::from_str(text).map_err(|e| CaseError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    case.broadcast_forecasts();
    let violations = validate_case(&case);
    if violations.is_empty() {
        Ok(case)
    } else {
        Err(CaseError::Invalid(violations))
    }
}

pub fn load_case(path: impl AsRef<Path>) -> Result<CaseSystem, CaseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_case(&text, &path.display().to_string())
}

pub fn case_to_json(case: &CaseSystem) -> String {
    serde_json::to_string_pretty(case).expect("case serializes")
}

pub fn write_case(case: &CaseSystem, path: impl AsRef<Path>) -> Result<(), CaseError> {
    let path = path.as_ref();
    std::fs::write(path, case_to_json(case)).map_err(|source| CaseError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Returns a copy of `case` with its annual peak set to `peak` MW.
pub fn scale_to_peak(case: &CaseSystem, peak: f64) -> Result<CaseSystem, CaseError> {
    if !(peak > 0.0) {
        return Err(CaseError::NonPositivePeak(peak));
    }
    let mut out = case.clone();
    out.system.peak_demand = peak;
    Ok(out)
}

/// Net demand forecast at (`bus`, `period`) by id, MW.
pub fn net_demand_forecast(case: &CaseSystem, bus: &str, period: &str) -> Result<f64, CaseError> {
    let b = case
        .bus_index(bus)
        .ok_or_else(|| CaseError::UnknownBus(bus.to_string()))?;
    let d = case
        .period_index(period)
        .ok_or_else(|| CaseError::UnknownPeriod(period.to_string()))?;
    Ok(case.net_demand(b, d))
}

/// Checks every type invariant. Empty iff the case is valid.
pub fn validate_case(case: &CaseSystem) -> Vec<Violation> {
    let mut v = Vec::new();
    let n_periods = case.periods.len();

    if case.schema != CASE_SCHEMA {
        v.push(Violation::new(
            "CaseSystem",
            "",
            "schema",
            format!("must be \"{CASE_SCHEMA}\" (got \"{}\")", case.schema),
        ));
    }
    let sys = &case.system;
    for (field, value) in [
        ("peak_demand", sys.peak_demand),
        ("s_base_mva", sys.s_base_mva),
        ("v_base_kv", sys.v_base_kv),
    ] {
        if !(value > 0.0) {
            v.push(Violation::new("CaseSystem", "", field, format!("must be > 0 (got {value})")));
        }
    }
    if case.periods.is_empty() {
        v.push(Violation::new("CaseSystem", "", "periods", "at least one period is required"));
    }

    check_unique(&mut v, "BusSpec", case.buses.iter().map(|b| b.id.as_str()));
    check_unique(&mut v, "LineSpec", case.lines.iter().map(|l| l.id.as_str()));
    check_unique(&mut v, "GeneratorSpec", case.generators.iter().map(|g| g.id.as_str()));
    check_unique(&mut v, "PeriodSpec", case.periods.iter().map(|p| p.id.as_str()));

    let bus_ids: HashSet<&str> = case.buses.iter().map(|b| b.id.as_str()).collect();
    let line_ids: HashSet<&str> = case.lines.iter().map(|l| l.id.as_str()).collect();

    let mut weight_sum = 0.0;
    for b in &case.buses {
        weight_sum += b.load_weight;
        if !(b.load_weight >= 0.0) {
            v.push(Violation::new("BusSpec", &b.id, "load_weight", format!("must be >= 0 (got {})", b.load_weight)));
        }
        for (field, series) in [
            ("ev_forecast", &b.ev_forecast),
            ("wind_forecast", &b.wind_forecast),
            ("pv_forecast", &b.pv_forecast),
        ] {
            if series.len() != n_periods {
                v.push(Violation::new(
                    "BusSpec",
                    &b.id,
                    field,
                    format!("needs one value per period ({n_periods}), got {}", series.len()),
                ));
            }
            if let Some(x) = series.iter().find(|x| !(**x >= 0.0)) {
                v.push(Violation::new("BusSpec", &b.id, field, format!("forecasts must be >= 0 (got {x})")));
            }
        }
    }
    if !case.buses.is_empty() && (weight_sum - 1.0).abs() > WEIGHT_SUM_TOL {
        v.push(Violation::new(
            "BusSpec",
            "",
            "load_weight",
            format!("weights must sum to 1 (got {weight_sum})"),
        ));
    }

    for l in &case.lines {
        for (field, end) in [("from_bus", &l.from_bus), ("to_bus", &l.to_bus)] {
            if !bus_ids.contains(end.as_str()) {
                v.push(Violation::new("LineSpec", &l.id, field, format!("references undeclared bus `{end}`")));
            }
        }
        positive(&mut v, "LineSpec", &l.id, "length", l.length);
        positive(&mut v, "LineSpec", &l.id, "flow_limit", l.flow_limit);
        positive(&mut v, "LineSpec", &l.id, "susceptance", l.susceptance);
        positive(&mut v, "LineSpec", &l.id, "resistance_at_tmax", l.resistance_at_tmax);
        if !(l.t_max > 273.0) {
            v.push(Violation::new("LineSpec", &l.id, "t_max", format!("must exceed 273 K (got {})", l.t_max)));
        }
        if !(l.install_cost >= 0.0) {
            v.push(Violation::new("LineSpec", &l.id, "install_cost", format!("must be >= 0 (got {})", l.install_cost)));
        } else if l.candidate && l.install_cost == 0.0 {
            v.push(Violation::new("LineSpec", &l.id, "install_cost", "candidate lines need a positive cost"));
        }
        validate_conductor(&mut v, &l.id, &l.conductor);
    }

    for g in &case.generators {
        if !bus_ids.contains(g.bus.as_str()) {
            v.push(Violation::new("GeneratorSpec", &g.id, "bus", format!("references undeclared bus `{}`", g.bus)));
        }
        positive(&mut v, "GeneratorSpec", &g.id, "p_max", g.p_max);
        if !(g.op_cost >= 0.0) {
            v.push(Violation::new("GeneratorSpec", &g.id, "op_cost", format!("must be >= 0 (got {})", g.op_cost)));
        }
        if !(g.install_cost >= 0.0) {
            v.push(Violation::new("GeneratorSpec", &g.id, "install_cost", format!("must be >= 0 (got {})", g.install_cost)));
        }
    }

    for p in &case.periods {
        positive(&mut v, "PeriodSpec", &p.id, "duration", p.duration);
        if !(p.load_factor > 0.0 && p.load_factor <= 1.0) {
            v.push(Violation::new("PeriodSpec", &p.id, "load_factor", format!("must lie in (0, 1] (got {})", p.load_factor)));
        }
        for w in &p.weather {
            let id = format!("{}/{}", p.id, w.line);
            if !line_ids.contains(w.line.as_str()) {
                v.push(Violation::new("WeatherRecord", &id, "line", format!("references undeclared line `{}`", w.line)));
            }
            positive(&mut v, "WeatherRecord", &id, "ambient_k", w.ambient_k);
            if !(w.wind_mps >= 0.0) {
                v.push(Violation::new("WeatherRecord", &id, "wind_mps", format!("must be >= 0 (got {})", w.wind_mps)));
            }
            if !(w.solar_w_per_m >= 0.0) {
                v.push(Violation::new("WeatherRecord", &id, "solar_w_per_m", format!("must be >= 0 (got {})", w.solar_w_per_m)));
            }
            if let Some(kr) = w.kr {
                positive(&mut v, "WeatherRecord", &id, "kr", kr);
            }
        }
    }
    v
}

fn validate_conductor(v: &mut Vec<Violation>, line: &str, c: &ConductorSpec) {
    for (field, value) in [
        ("diameter", c.diameter),
        ("air_density", c.air_density),
        ("air_viscosity", c.air_viscosity),
        ("thermal_conductivity", c.thermal_conductivity),
        ("wind_angle_coeff", c.wind_angle_coeff),
        ("radiation_coeff", c.radiation_coeff),
        ("resistance_ref", c.resistance_ref),
        ("temperature_ref", c.temperature_ref),
        ("thermal_resistivity", c.thermal_resistivity),
    ] {
        positive(v, "ConductorSpec", line, field, value);
    }
    if !(c.elevation >= 0.0) {
        v.push(Violation::new("ConductorSpec", line, "elevation", format!("must be >= 0 (got {})", c.elevation)));
    }
    if !(c.heat_capacity >= 0.0) {
        v.push(Violation::new("ConductorSpec", line, "heat_capacity", format!("must be >= 0 (got {})", c.heat_capacity)));
    }
    if !(c.emissivity > 0.0 && c.emissivity <= 1.0) {
        v.push(Violation::new("ConductorSpec", line, "emissivity", format!("must lie in (0, 1] (got {})", c.emissivity)));
    }
}

fn positive(v: &mut Vec<Violation>, entity: &str, id: &str, field: &str, value: f64) {
    if !(value > 0.0) {
        v.push(Violation::new(entity, id, field, format!("must be > 0 (got {value})")));
    }
}

fn check_unique<'a>(v: &mut Vec<Violation>, entity: &str, ids: impl Iterator<Item = &'a str>) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            v.push(Violation::new(entity, id, "id", "duplicate id"));
        }
    }
}
