#![allow(dead_code)]

pub mod gadgets;
pub mod vertices;

use std::path::PathBuf;

use rand::Rng;
use serde_json::{json, Value};

use gridxpand::case::{parse_case, CaseSystem};
use gridxpand::milp::ir::{LinExpr, ModelIR};
use gridxpand::solve::oracle::oracle_solve;
use gridxpand::solve::MAX_ENUMERATION_CAP;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn reference_conductor() -> Value {
    json!({
        "diameter": 0.035, "air_density": 1.293, "air_viscosity": 1.81e-5,
        "thermal_conductivity": 0.028, "wind_angle_coeff": 1.0, "emissivity": 0.75,
        "radiation_coeff": 2.5e-9, "resistance_ref": 8.0, "temperature_ref": 293.0,
        "thermal_resistivity": 0.00403
    })
}

pub fn line_json(id: &str, from: &str, to: &str, candidate: bool, install: f64, limit: f64, t_max: f64) -> Value {
    json!({
        "id": id, "from_bus": from, "to_bus": to, "candidate": candidate, "install_cost": install,
        "susceptance": 4.099, "conductance": 1.024, "resistance_at_tmax": 10.0, "length": 50.0,
        "t_max": t_max, "flow_limit": limit, "conductor": reference_conductor()
    })
}

pub fn case_from(value: Value) -> CaseSystem {
    parse_case(&value.to_string(), "test").expect("test case is valid")
}

/// Weather for every line in every period at the reference conditions.
pub fn with_reference_weather(mut v: Value) -> Value {
    let ids: Vec<String> = v["lines"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| l["id"].as_str().unwrap().to_string())
        .collect();
    for p in v["periods"].as_array_mut().unwrap() {
        p["weather"] = ids
            .iter()
            .map(|id| json!({"line": id, "ambient_k": 298.0, "wind_mps": 2.23, "solar_w_per_m": 14.08}))
            .collect();
    }
    v
}

/// Two buses, one existing line rated `limit` p.u., a cheap unit at bus 1
/// and an optional candidate unit at the load bus.
pub fn two_bus(peak: f64, limit: f64, t_max: f64, candidate_unit: bool) -> CaseSystem {
    let mut gens = vec![json!({"id": "G1", "bus": "1", "op_cost": 10.0, "p_max": 200.0})];
    if candidate_unit {
        gens.push(json!({"id": "G2", "bus": "2", "candidate": true, "install_cost": 1e7, "op_cost": 40.0, "p_max": 100.0}));
    }
    case_from(with_reference_weather(json!({
        "schema": "gridxpand/1",
        "system": {"peak_demand": peak, "s_base_mva": 100.0, "v_base_kv": 132.0},
        "buses": [{"id": "1", "load_weight": 0.0}, {"id": "2", "load_weight": 1.0}],
        "lines": [line_json("L1", "1", "2", false, 0.0, limit, t_max)],
        "generators": gens,
        "periods": [{"id": "P1", "load_factor": 1.0, "duration": 8760.0}]
    })))
}

/// Random connected case with at most `max_free` candidate elements.
pub fn random_case(rng: &mut impl Rng, max_free: usize, periods: usize) -> CaseSystem {
    let nb = rng.gen_range(2..=4usize);
    let bus = |i: usize| (i + 1).to_string();
    let mut weights: Vec<f64> = (0..nb).map(|_| rng.gen_range(0.0..1.0)).collect();
    weights[0] = 0.0;
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        weights[nb - 1] = 1.0;
    } else {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    let fix = weights.iter().take(nb - 1).sum::<f64>();
    weights[nb - 1] = 1.0 - fix;
    let buses: Vec<Value> = (0..nb).map(|i| json!({"id": bus(i), "load_weight": weights[i]})).collect();

    let mut lines = Vec::new();
    for i in 1..nb {
        let from = rng.gen_range(0..i);
        let limit = rng.gen_range(0.3..1.5);
        lines.push(line_json(&format!("E{i}"), &bus(from), &bus(i), false, 0.0, limit, 373.0));
    }
    let n_free = rng.gen_range(1..=max_free);
    let n_lines = rng.gen_range(0..=n_free);
    for k in 0..n_lines {
        let a = rng.gen_range(0..nb);
        let mut b = rng.gen_range(0..nb);
        if a == b {
            b = (a + 1) % nb;
        }
        let limit = rng.gen_range(0.3..1.5);
        let cost = rng.gen_range(1e5..3e6);
        lines.push(line_json(&format!("L{k}"), &bus(a), &bus(b), true, cost, limit, 373.0));
    }
    let mut gens = vec![json!({"id": "G0", "bus": "1", "op_cost": rng.gen_range(5.0..30.0), "p_max": rng.gen_range(80.0..200.0)})];
    for k in 0..n_free - n_lines {
        gens.push(json!({
            "id": format!("U{k}"), "bus": bus(rng.gen_range(0..nb)), "candidate": true,
            "install_cost": rng.gen_range(1e5..3e6), "op_cost": rng.gen_range(5.0..60.0),
            "p_max": rng.gen_range(20.0..120.0)
        }));
    }
    let periods: Vec<Value> = (0..periods)
        .map(|d| json!({"id": format!("D{d}"), "load_factor": rng.gen_range(0.4..1.0), "duration": 1752.0}))
        .collect();
    case_from(with_reference_weather(json!({
        "schema": "gridxpand/1",
        "system": {"peak_demand": rng.gen_range(50.0..250.0), "s_base_mva": 100.0, "v_base_kv": 132.0},
        "buses": buses, "lines": lines, "generators": gens, "periods": periods
    })))
}

/// Smallest and largest value of `e` over the model's feasible set, by
/// enumeration. `None` when the model is infeasible.
pub fn oracle_range(model: &ModelIR, e: &LinExpr) -> Option<(f64, f64)> {
    let mut m = model.clone();
    let mut bounds = [0.0; 2];
    for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
        m.objective = e.clone().compact().terms.into_iter().map(|(v, c)| (v, sign * c)).collect();
        m.objective_constant = sign * e.constant;
        let s = oracle_solve(&m, MAX_ENUMERATION_CAP).expect("oracle runs");
        bounds[k] = sign * s.objective?;
    }
    Some((bounds[0], bounds[1]))
}
