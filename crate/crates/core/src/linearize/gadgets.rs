//! Mixed-integer fragments that replace products, absolute values, maxima and
//! disjunctions by linear rows.

use serde::Serialize;

use crate::milp::ir::{IrError, LinExpr, ModelIR, Sense, VarId};

/// Slack allowed when comparing a big-M against an operand bound.
const BOUND_TOL: f64 = 1e-9;

/// What a gadget appended to the model.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GadgetFragment {
    pub vars: Vec<VarId>,
    pub binaries: Vec<VarId>,
    pub constraints: Vec<usize>,
    pub output: LinExpr,
}

impl GadgetFragment {
    fn absorb(&mut self, other: GadgetFragment) {
        self.vars.extend(other.vars);
        self.binaries.extend(other.binaries);
        self.constraints.extend(other.constraints);
    }
}

fn operand_bound(model: &ModelIR, name: &str, e: &LinExpr) -> Result<f64, IrError> {
    let (lo, hi) = model.expr_bounds(e);
    if !lo.is_finite() || !hi.is_finite() {
        return Err(IrError::Unbounded(name.to_string()));
    }
    Ok(lo.abs().max(hi.abs()))
}

fn row(model: &mut ModelIR, frag: &mut GadgetFragment, name: String, e: LinExpr, sense: Sense, rhs: f64) -> Result<(), IrError> {
    frag.constraints.push(model.add_row(name, e, sense, rhs)?);
    Ok(())
}

/// θ = y·δ for binary `y` and a bounded expression `δ` with |δ| ≤ `x1`.
pub fn bin_cont_product(model: &mut ModelIR, name: &str, y: VarId, delta: &LinExpr, x1: f64) -> Result<GadgetFragment, IrError> {
    let needed = operand_bound(model, name, delta)?;
    if !(x1 >= needed - BOUND_TOL * needed.max(1.0)) {
        return Err(IrError::BigMTooSmall {
            name: name.to_string(),
            value: x1,
            needed,
        });
    }
    let mut frag = GadgetFragment::default();
    let theta = model.add_continuous(name, -x1, x1)?;
    frag.vars.push(theta);
    let th = || LinExpr::var(theta);
    let yx = || LinExpr::term(y, x1);
    row(model, &mut frag, format!("{name}.le_y"), th() - yx(), Sense::Le, 0.0)?;
    row(model, &mut frag, format!("{name}.ge_y"), th() + yx(), Sense::Ge, 0.0)?;
    // θ ≥ δ − (1−y)X₁  and  θ ≤ δ + (1−y)X₁
    row(model, &mut frag, format!("{name}.ge_d"), th() - delta.clone() - yx(), Sense::Ge, -x1)?;
    row(model, &mut frag, format!("{name}.le_d"), th() - delta.clone() + yx(), Sense::Le, x1)?;
    model.record_big_m(name, x1, format!("operand bound {needed:.6}"), delta.clone());
    frag.output = LinExpr::var(theta);
    Ok(frag)
}

/// Output equals max(1, |δ|) for every feasible δ.
pub fn max1abs(model: &mut ModelIR, name: &str, delta: &LinExpr) -> Result<GadgetFragment, IrError> {
    let x1 = operand_bound(model, name, delta)?.max(1.0);
    let mut frag = GadgetFragment::default();
    let th: Vec<VarId> = (1..=4)
        .map(|i| model.add_binary(format!("{name}.v{i}")))
        .collect::<Result<_, _>>()?;
    frag.vars.extend(&th);
    frag.binaries.extend(&th);
    let (v1, v2, v3, v4) = (th[0], th[1], th[2], th[3]);

    let neg = bin_cont_product(model, &format!("{name}.neg"), v2, delta, x1)?;
    let pos = bin_cont_product(model, &format!("{name}.pos"), v3, delta, x1)?;
    let a = neg.output.clone();
    let b = pos.output.clone();
    frag.absorb(neg);
    frag.absorb(pos);

    // t = ϑ₂(−δ) + ϑ₃δ
    let t = model.add_continuous(format!("{name}.abs"), 0.0, x1)?;
    frag.vars.push(t);
    row(model, &mut frag, format!("{name}.abs_def"), LinExpr::var(t) - b.clone() + a.clone(), Sense::Eq, 0.0)?;
    row(model, &mut frag, format!("{name}.pos_sign"), b, Sense::Ge, 0.0)?;
    row(model, &mut frag, format!("{name}.neg_sign"), a, Sense::Le, 0.0)?;

    let c = bin_cont_product(model, &format!("{name}.big"), v4, &LinExpr::var(t), x1)?;
    let e = bin_cont_product(model, &format!("{name}.small"), v1, &LinExpr::var(t), x1)?;
    let c_out = c.output.clone();
    let e_out = e.output.clone();
    frag.absorb(c);
    frag.absorb(e);
    row(model, &mut frag, format!("{name}.at_least_one"), c_out.clone() - LinExpr::var(v4), Sense::Ge, 0.0)?;
    row(model, &mut frag, format!("{name}.at_most_one"), e_out - LinExpr::var(v1), Sense::Le, 0.0)?;
    row(model, &mut frag, format!("{name}.sign_choice"), LinExpr::var(v2) + LinExpr::var(v3), Sense::Eq, 1.0)?;
    row(model, &mut frag, format!("{name}.clamp_choice"), LinExpr::var(v1) + LinExpr::var(v4), Sense::Eq, 1.0)?;
    frag.output = LinExpr::var(v1) + c_out;
    Ok(frag)
}

/// Disjunctive DC flow: `pf = β(α_s − α_r)` when `u = 1`, `pf = 0` when `u = 0`.
pub fn dc_flow(
    model: &mut ModelIR,
    name: &str,
    u: VarId,
    pf: VarId,
    beta: f64,
    angle_diff: &LinExpr,
    pf_max: f64,
    x: f64,
) -> Result<GadgetFragment, IrError> {
    let needed = operand_bound(model, name, angle_diff)?;
    if !(x >= needed - BOUND_TOL * needed.max(1.0)) {
        return Err(IrError::BigMTooSmall {
            name: name.to_string(),
            value: x,
            needed,
        });
    }
    let mut frag = GadgetFragment::default();
    let p = || LinExpr::var(pf);
    row(model, &mut frag, format!("{name}.max"), p() - LinExpr::term(u, pf_max), Sense::Le, 0.0)?;
    row(model, &mut frag, format!("{name}.min"), p() + LinExpr::term(u, pf_max), Sense::Ge, 0.0)?;
    let law = || p() * (1.0 / beta) - angle_diff.clone();
    // −(1−u)X ≤ pf/β − Δα ≤ (1−u)X
    row(model, &mut frag, format!("{name}.law_hi"), law() + LinExpr::term(u, x), Sense::Le, x)?;
    row(model, &mut frag, format!("{name}.law_lo"), law() - LinExpr::term(u, x), Sense::Ge, -x)?;
    model.record_big_m(name, x, format!("angle-difference bound {needed:.6} rad"), law());
    frag.output = p();
    Ok(frag)
}

/// Output equals |pf| for a flow variable with |pf| ≤ `x`.
pub fn abs_flow(model: &mut ModelIR, name: &str, pf: VarId, x: f64) -> Result<GadgetFragment, IrError> {
    let mut frag = GadgetFragment::default();
    let d = model.add_binary(format!("{name}.dir"))?;
    frag.vars.push(d);
    frag.binaries.push(d);
    let prod = bin_cont_product(model, &format!("{name}.zeta"), d, &LinExpr::var(pf), x)?;
    let zeta = prod.output.clone();
    frag.absorb(prod);
    row(model, &mut frag, format!("{name}.fwd"), LinExpr::var(pf) - LinExpr::term(d, x), Sense::Le, 0.0)?;
    row(model, &mut frag, format!("{name}.rev"), LinExpr::var(pf) - LinExpr::term(d, x), Sense::Ge, -x)?;
    frag.output = zeta * 2.0 - LinExpr::var(pf);
    Ok(frag)
}

/// Keeps only the forced-convection branch with the larger coefficient.
/// The heat balance uses `q1 + q2`; at most one of them is nonzero.
pub fn convection_select(
    model: &mut ModelIR,
    name: &str,
    k1: f64,
    k2: f64,
    q1: VarId,
    q2: VarId,
    m: f64,
) -> Result<GadgetFragment, IrError> {
    let needed = model.variables[q1].upper.max(model.variables[q2].upper);
    let mut frag = GadgetFragment::default();
    let y = model.add_binary(format!("{name}.y"))?;
    frag.vars.push(y);
    frag.binaries.push(y);
    row(model, &mut frag, format!("{name}.k1_ge"), LinExpr::term(y, k2), Sense::Le, k1)?;
    // k′(1−y) ≤ k″
    row(model, &mut frag, format!("{name}.k1_le"), LinExpr::term(y, -k1), Sense::Le, k2 - k1)?;
    row(model, &mut frag, format!("{name}.q1_gate"), LinExpr::var(q1) - LinExpr::term(y, m), Sense::Le, 0.0)?;
    row(model, &mut frag, format!("{name}.q2_gate"), LinExpr::var(q2) + LinExpr::term(y, m), Sense::Le, m)?;
    model.record_big_m(name, m, format!("convection bound, branch upper bound {needed:.6}"),
        LinExpr::var(q1) + LinExpr::var(q2),
    );
    frag.output = LinExpr::var(q1) + LinExpr::var(q2);
    Ok(frag)
}
