//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::gadgets::{abs_flow_check, convection_check, dc_flow_check, max1abs_check, product_check, Tally};
use common::{data, random_case};
use gridxpand::case::{load_case, CaseSystem};
use gridxpand::cli::{load_inputs, run_plan, run_sweep, SweepReport, SweepSpec};
use gridxpand::dtlr::{ampacity, radiation_ln_fit, radiation_loss, reynolds, steady_state_temperature, WeatherRecord, RADIATION_FIT_RANGE};
use gridxpand::linearize::trig_segments;
use gridxpand::milp::build::{build_igtep, Mode};
use gridxpand::milp::ir::Sense;
use gridxpand::solve::oracle::oracle_solve;
use gridxpand::solve::{solve, SolveConfig, SolveStatus};
use gridxpand::uncertainty::{binomial_normal_approx, binomial_pmf, omega_from_reliability, RobustParams};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn linearization() -> Outcome {
    let t = trig_segments();
    let sin = 100.0 * t.sin.boundary_rel_err;
    let cos = 100.0 * t.cos_boundary_rel_err();
    let cos_pointwise = 100.0 * t.cos_rel_err();
    let ln = radiation_ln_fit(0.75, 2.5e-9, 298.0, RADIATION_FIT_RANGE).unwrap().t_side;
    let ln_err = 100.0 * ln.max_rel_err;
    let pass = within(sin, 0.94, 0.3)
        && within(cos, 3.58, 1.0)
        && within(cos_pointwise, 3.58, 1.0)
        && ln_err <= 0.25
        && within(ln.slope, 0.00312, 0.1 * 0.00312)
        && within(ln.intercept, 4.75824, 0.005 * 4.75824);
    outcome(
        pass,
        format!(
            "sin {sin:.4}% (0.94 ± 0.3), cos {cos:.4}% at the ends / {cos_pointwise:.4}% pointwise (3.58 ± 1.0), \
             ln T {ln_err:.4}% (≤ 0.25) with s = {:.6} (0.00312 ± 10%), m = {:.6} (4.75824 ± 0.5%)",
            ln.slope, ln.intercept
        ),
    )
}

fn physics() -> Outcome {
    let re = reynolds(0.035, 2.23, 1.293, 1.81e-5).unwrap();
    let rad = radiation_loss(0.75, 2.5e-9, 373.0, 298.0);
    let case = load_case(data("toy2.json")).unwrap();
    let l = &case.lines[0];
    let mut worst = 0.0f64;
    for te in [263.0, 278.0, 293.0, 308.0, 318.0] {
        for v in [0.3, 1.0, 2.23, 4.0, 8.0] {
            for qs in [0.0, 5.0, 10.0, 14.08, 25.0] {
                let w = WeatherRecord { ambient_temp: te, wind_speed: v, solar_gain: qs, radiation_coeff: 2.5e-9 };
                let amps = ampacity(l.t_max, &w, &l.conductor, l.resistance_per_m()).unwrap();
                let t = steady_state_temperature(amps, &w, &l.conductor, l.resistance_per_m()).unwrap();
                worst = worst.max((t - l.t_max).abs());
            }
        }
    }
    let pass = within(re, 5575.6, 5575.6e-3) && within(rad, 21.507, 21.507e-3) && worst <= 1e-4;
    outcome(
        pass,
        format!("Re = {re:.2} (5575.6 ± 0.1%), radiation = {rad:.4} W/m (21.507 ± 0.1%), worst round trip {worst:.2e} K over 125 weathers"),
    )
}

fn gadgets() -> Outcome {
    let n = 60;
    let (conv, conv_product) = convection_check(n, 305);
    let tallies: [(&str, Tally); 6] = [
        ("max(1,|δ|)", max1abs_check(n, 301)),
        ("y·δ", product_check(n, 302)),
        ("|pf|", abs_flow_check(n, 303)),
        ("DC flow", dc_flow_check(n, 304)),
        ("convection", conv),
        ("convection vs product form", conv_product),
    ];
    let pass = tallies.iter().all(|(_, t)| t.instances >= 50 && t.mismatches == 0);
    let detail = tallies
        .iter()
        .map(|(name, t)| format!("{name} {}/{}", t.instances - t.mismatches, t.instances))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, detail)
}

fn robust_reduction() -> Outcome {
    let case = load_case(data("case6_reconstruction.json")).unwrap();
    let zero = RobustParams::new(0.0, 0.0, 0.05).unwrap();
    let (det, _) = build_igtep(&case, &zero, Mode::DcDet).unwrap();
    let (rob, _) = build_igtep(&case, &zero, Mode::DcRobust).unwrap();
    let rows_match = det.constraints.len() == rob.constraints.len()
        && det.constraints.iter().zip(&rob.constraints).all(|(a, b)| {
            let sense_ok = if a.name.starts_with("balance[") {
                a.sense == Sense::Eq && b.sense == Sense::Ge
            } else {
                a.sense == b.sense
            };
            a.name == b.name && a.terms == b.terms && a.rhs == b.rhs && sense_ok
        });
    let peak = 500.0;
    let case = gridxpand::case::scale_to_peak(&case, peak).unwrap();
    let objectives: Vec<Option<f64>> = [0.0, 0.02, 0.05, 0.1]
        .iter()
        .map(|&phi| {
            let p = RobustParams::new(phi, 0.01, 0.05).unwrap();
            run_plan(&case, &p, Mode::DcRobust, &SolveConfig::default()).unwrap().plan.objective
        })
        .collect();
    let monotone = objectives.iter().all(Option::is_some)
        && objectives.windows(2).all(|w| w[0].unwrap() <= w[1].unwrap() * (1.0 + 1e-6));
    let shown: Vec<String> = objectives.iter().map(|o| o.map_or("infeasible".into(), |v| format!("{:.5e}", v))).collect();
    outcome(
        rows_match && monotone,
        format!("rows equivalent: {rows_match}; φ = 0, 0.02, 0.05, 0.1 at {peak} MW → {}", shown.join(", ")),
    )
}

fn first_infeasible(report: &SweepReport, mode: Mode) -> Option<f64> {
    report.rows.iter().filter(|r| r.mode == mode && !r.is_feasible()).map(|r| r.peak).next()
}

fn objective_at(report: &SweepReport, mode: Mode, peak: f64) -> Option<f64> {
    report.rows.iter().find(|r| r.mode == mode && r.peak == peak && r.is_feasible()).and_then(|r| r.objective)
}

fn check_sweep(name: &str, case: &CaseSystem, params: &RobustParams, peaks: Vec<f64>) -> (bool, String) {
    let spec = SweepSpec { peaks: peaks.clone(), modes: Mode::ALL.to_vec(), out: None };
    let report = run_sweep(case, params, &spec, &SolveConfig::default()).unwrap();
    let errors: Vec<&String> = report.rows.iter().filter_map(|r| r.error.as_ref()).collect();
    let mut increasing = true;
    for mode in Mode::ALL {
        let objs: Vec<f64> = peaks.iter().filter_map(|&p| objective_at(&report, mode, p)).collect();
        increasing &= objs.windows(2).all(|w| w[0] < w[1]);
    }
    let mut dominated = true;
    for &p in &peaks {
        if let (Some(d), Some(s)) = (objective_at(&report, Mode::DtlrRobust, p), objective_at(&report, Mode::DcRobust, p)) {
            dominated &= d <= s + 1e-6 * s.abs();
        }
    }
    let onset = |m| first_infeasible(&report, m);
    let later = |dc: Option<f64>| match (onset(Mode::DtlrRobust), dc) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(d), Some(s)) => d >= s,
    };
    let onset_ok = later(onset(Mode::DcDet)) && later(onset(Mode::DcRobust));
    let show = |o: Option<f64>| o.map_or("none".to_string(), |p| format!("{p}"));
    (
        errors.is_empty() && increasing && dominated && onset_ok,
        format!(
            "{name}: (a) {increasing} (b) {dominated} (c) {onset_ok}, first infeasible dc_det {} / dc_robust {} / dtlr_robust {}{}",
            show(onset(Mode::DcDet)),
            show(onset(Mode::DcRobust)),
            show(onset(Mode::DtlrRobust)),
            if errors.is_empty() { String::new() } else { format!(", errors {errors:?}") }
        ),
    )
}

fn sweeps() -> Outcome {
    let (c6, p6) = load_inputs(&data("case6_reconstruction.json"), None).unwrap();
    let (c24, p24) = load_inputs(&data("case24_reconstruction.json"), None).unwrap();
    let peaks6: Vec<f64> = (0..=14).map(|k| 300.0 + 50.0 * k as f64).collect();
    let peaks24: Vec<f64> = (0..=6).map(|k| 2100.0 + 300.0 * k as f64).collect();
    let (a, da) = check_sweep("6-bus", &c6, &p6, peaks6);
    let (b, db) = check_sweep("24-bus", &c24, &p24, peaks24);
    outcome(a && b, format!("{da}; {db}"))
}

fn audit_24() -> Outcome {
    let (case, params) = load_inputs(&data("case24_reconstruction.json"), None).unwrap();
    let start = Instant::now();
    let run = run_plan(&case, &params, Mode::DtlrRobust, &SolveConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let optimal = run.plan.status == SolveStatus::Optimal;
    let inside = run.audit.iter().filter(|r| r.within_bound()).count();
    let worst = run.audit.iter().max_by(|a, b| (a.residual - a.bound).total_cmp(&(b.residual - b.bound)));
    outcome(
        optimal && secs < 120.0 && !run.audit.is_empty() && inside == run.audit.len(),
        format!(
            "solve {secs:.1} s (< 120), {inside}/{} line-periods within bound, tightest {}",
            run.audit.len(),
            worst.map_or("-".into(), |w| format!("{} {} residual {:.3} W/m vs bound {:.3}", w.line, w.period, w.residual, w.bound))
        ),
    )
}

fn oracle_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = SolveConfig { mip_gap: 1e-9, ..SolveConfig::default() };
    let (mut status_ok, mut obj_ok, mut feasible, mut thermal) = (0, 0, 0, 0);
    let total = 100;
    for i in 0..total {
        let mode = [Mode::DcDet, Mode::DcRobust, Mode::DtlrRobust][i % 3];
        let (model, _) = loop {
            let periods = if mode.is_dtlr() { 1 } else { rng.gen_range(1..=2) };
            let case = random_case(&mut rng, if mode.is_dtlr() { 4 } else { 10 }, periods);
            let built = build_igtep(&case, &RobustParams::default(), mode).unwrap();
            if built.0.free_binaries().len() <= 10 {
                break built;
            }
        };
        thermal += usize::from(mode.is_dtlr());
        let a = solve(&model, &cfg).unwrap();
        let b = oracle_solve(&model, 10).unwrap();
        if a.status == b.status {
            status_ok += 1;
        }
        match (a.objective, b.objective) {
            (Some(x), Some(y)) => {
                feasible += 1;
                if (x - y).abs() <= 1e-6 * y.abs().max(1.0) {
                    obj_ok += 1;
                }
            }
            (None, None) => obj_ok += 1,
            _ => {}
        }
    }
    outcome(
        status_ok == total && obj_ok == total,
        format!("status {status_ok}/{total}, objective {obj_ok}/{total} ({feasible} feasible, {thermal} thermal)"),
    )
}

/// Φ by Simpson's rule on the density, independent of the library's CDF.
fn phi_simpson(x: f64) -> f64 {
    let n = 20_000;
    let h = x / n as f64;
    let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let s: f64 = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            w * f(k as f64 * h)
        })
        .sum();
    0.5 + s * h / 3.0
}

fn uncertainty_math() -> Outcome {
    let mut worst_phi = 0.0f64;
    for k in 1..=49 {
        let r = k as f64 / 100.0;
        let w = omega_from_reliability(r).unwrap();
        worst_phi = worst_phi.max((phi_simpson(w) - (1.0 - r)).abs());
    }
    let mut worst_sum = 0.0f64;
    for n in 1..=500u64 {
        for rho in [0.05, 0.3, 0.5, 0.8] {
            let s: f64 = (0..=n).map(|x| binomial_pmf(n, x, rho).unwrap()).sum();
            worst_sum = worst_sum.max((s - 1.0).abs());
        }
    }
    let (n, rho) = (1000u64, 0.5);
    let normal = binomial_normal_approx(n, rho).unwrap();
    let tv = 0.5
        * (0..=n)
            .map(|x| {
                let xf = x as f64;
                (binomial_pmf(n, x, rho).unwrap() - (normal.cdf(xf + 0.5) - normal.cdf(xf - 0.5))).abs()
            })
            .sum::<f64>();
    outcome(
        worst_phi <= 1e-7 && worst_sum <= 1e-12 && tv < 0.02,
        format!("|Φ(ω) − (1 − ℜ)| ≤ {worst_phi:.2e} over 49 levels, pmf sums within {worst_sum:.2e} up to n = 500, TV(n = 1000) = {tv:.2e}"),
    )
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 8] = [
        ("linearization certificates", Duration::from_secs(5), linearization),
        ("line thermal physics", Duration::from_secs(10), physics),
        ("gadget exactness", Duration::from_secs(60), gadgets),
        ("robust reduction", Duration::from_secs(120), robust_reduction),
        ("expansion sweeps", Duration::from_secs(600), sweeps),
        ("24-bus linear solve and audit", Duration::from_secs(120), audit_24),
        ("oracle agreement", Duration::from_secs(300), oracle_agreement),
        ("uncertainty math", Duration::from_secs(60), uncertainty_math),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let took = start.elapsed();
        let pass = o.pass && took <= *budget;
        failed += usize::from(!pass);
        println!(
            "criterion {} [{name}]: {} ({:.1} s, budget {} s) {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
