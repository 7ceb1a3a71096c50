//! Each gadget checked against the nonlinear relation it replaces: the
//! output's smallest and largest feasible value, found by enumeration, must
//! both equal the direct evaluation.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gridxpand::linearize::gadgets::{abs_flow, bin_cont_product, convection_select, dc_flow, max1abs};
use gridxpand::milp::ir::{LinExpr, ModelIR, Sense};

use super::oracle_range;

#[derive(Debug, Default, Clone, Copy)]
pub struct Tally {
    pub instances: usize,
    pub mismatches: usize,
}

impl Tally {
    fn record(&mut self, ok: bool) {
        self.instances += 1;
        if !ok {
            self.mismatches += 1;
        }
    }
}

fn same(range: Option<(f64, f64)>, want: Option<f64>) -> bool {
    match (range, want) {
        (None, None) => true,
        (Some((lo, hi)), Some(w)) => {
            let tol = 1e-7 * w.abs().max(1.0);
            (lo - w).abs() <= tol && (hi - w).abs() <= tol
        }
        _ => false,
    }
}

/// A continuous variable on `[-bound, bound]` pinned to `value` by a row.
fn pinned(m: &mut ModelIR, name: &str, bound: f64, value: f64) -> usize {
    let v = m.add_continuous(name, -bound, bound).unwrap();
    m.add_row(format!("{name}.pin"), LinExpr::var(v), Sense::Eq, value).unwrap();
    v
}

fn sample(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    match rng.gen_range(0..6) {
        0 => 0.0,
        1 => bound * if rng.gen() { 1.0 } else { -1.0 },
        2 => rng.gen_range(-1.0..1.0),
        _ => rng.gen_range(-bound..bound),
    }
}

pub fn max1abs_check(n: usize, seed: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for _ in 0..n {
        let bound = rng.gen_range(0.5..10.0);
        let v = sample(&mut rng, bound);
        let mut m = ModelIR::new("check");
        let d = pinned(&mut m, "d", bound, v);
        let g = max1abs(&mut m, "g", &LinExpr::var(d)).unwrap();
        t.record(same(oracle_range(&m, &g.output), Some(v.abs().max(1.0))));
    }
    t
}

pub fn product_check(n: usize, seed: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for _ in 0..n {
        let bound = rng.gen_range(0.1..50.0);
        let v = sample(&mut rng, bound);
        let y_val = f64::from(rng.gen_range(0..2u8));
        let mut m = ModelIR::new("check");
        let d = pinned(&mut m, "d", bound, v);
        let y = m.add_binary("y").unwrap();
        m.fix(y, y_val);
        let x1 = bound * rng.gen_range(1.0..2.0);
        let g = bin_cont_product(&mut m, "p", y, &LinExpr::var(d), x1).unwrap();
        t.record(same(oracle_range(&m, &g.output), Some(y_val * v)));
    }
    t
}

pub fn abs_flow_check(n: usize, seed: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for _ in 0..n {
        let bound = rng.gen_range(0.1..20.0);
        let v = sample(&mut rng, bound);
        let mut m = ModelIR::new("check");
        let pf = pinned(&mut m, "pf", bound, v);
        let g = abs_flow(&mut m, "a", pf, bound).unwrap();
        t.record(same(oracle_range(&m, &g.output), Some(v.abs())));
    }
    t
}

pub fn dc_flow_check(n: usize, seed: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::default();
    for _ in 0..n {
        let beta = rng.gen_range(0.5..30.0);
        let pf_max = rng.gen_range(0.2..5.0);
        let (a_s, a_r) = (sample(&mut rng, FRAC_PI_2), sample(&mut rng, FRAC_PI_2));
        let u_val = f64::from(rng.gen_range(0..2u8));
        let mut m = ModelIR::new("check");
        let s = pinned(&mut m, "as", FRAC_PI_2, a_s);
        let r = pinned(&mut m, "ar", FRAC_PI_2, a_r);
        let u = m.add_binary("u").unwrap();
        m.fix(u, u_val);
        let pf = m.add_continuous("pf", -pf_max, pf_max).unwrap();
        let g = dc_flow(&mut m, "f", u, pf, beta, &(LinExpr::var(s) - LinExpr::var(r)), pf_max, PI).unwrap();
        let flow = u_val * beta * (a_s - a_r);
        let want = (flow.abs() <= pf_max).then_some(flow);
        t.record(same(oracle_range(&m, &g.output), want));
    }
    t
}

/// max{Q1, Q2} written as `y Q1 + (1-y) Q2` with `Q1 ≥ Q2 y` and
/// `Q1 (1-y) ≤ Q2`: every admissible `y` and the value it selects.
pub fn product_form_max(q1: f64, q2: f64) -> Vec<f64> {
    [0.0, 1.0]
        .into_iter()
        .filter(|&y| q1 >= q2 * y && q1 * (1.0 - y) <= q2)
        .map(|y| y * q1 + (1.0 - y) * q2)
        .collect()
}

/// Returns (direct-definition tally, product-form tally).
pub fn convection_check(n: usize, seed: u64) -> (Tally, Tally) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut direct, mut product) = (Tally::default(), Tally::default());
    for i in 0..n {
        let k1: f64 = rng.gen_range(0.2..5.0);
        let k2 = if i % 10 == 0 { k1 } else { rng.gen_range(0.2..5.0) };
        let theta = if i % 7 == 0 { 0.0 } else { rng.gen_range(0.0..100.0) };
        let cap = 1.5 * k1.max(k2) * 100.0;
        let mut m = ModelIR::new("check");
        let q1 = m.add_continuous("q1", 0.0, cap).unwrap();
        let q2 = m.add_continuous("q2", 0.0, cap).unwrap();
        m.add_row("q1.law", LinExpr::var(q1), Sense::Le, k1 * theta).unwrap();
        m.add_row("q2.law", LinExpr::var(q2), Sense::Le, k2 * theta).unwrap();
        let g = convection_select(&mut m, "c", k1, k2, q1, q2, cap).unwrap();
        // The heat balance only ever pushes the convective loss up.
        let best = oracle_range(&m, &g.output).map(|(_, hi)| (hi, hi));
        let want = k1.max(k2) * theta;
        direct.record(same(best, Some(want)));
        let forms = product_form_max(k1 * theta, k2 * theta);
        product.record(!forms.is_empty() && forms.iter().all(|&f| same(best, Some(f))));
    }
    (direct, product)
}
