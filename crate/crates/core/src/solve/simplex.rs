//! Dense two-phase primal simplex for the continuous relaxations solved by the
//! enumeration oracle.
//!
//! Every variable is shifted or split so that the working columns are
//! non-negative, finite upper bounds become rows, and fixed variables are
//! folded into the right-hand side. Pricing is Dantzig's rule until a run of
//! degenerate pivots is seen, after which Bland's rule takes over for the
//! rest of the phase.

use crate::milp::ir::{ModelIR, Sense};

use super::SolveError;

/// Pivot-element and reduced-cost tolerance.
const EPS: f64 = 1e-9;
/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
const DEGENERATE_RUN: usize = 50;
/// Hard pivot limit per phase.
pub const PIVOT_CAP: usize = 50_000;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { objective: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

/// Solves the model with every variable treated as continuous.
pub fn simplex_lp(model: &ModelIR) -> Result<LpOutcome, SolveError> {
    if !model.free_binaries().is_empty() {
        return Err(SolveError::HasBinaries(model.free_binaries().len()));
    }
    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    solve_with_bounds(model, &lower, &upper)
}

/// How an original variable is expressed in working columns.
#[derive(Clone, Copy)]
enum Map {
    Fixed(f64),
    /// x = offset + col
    Shift(f64, usize),
    /// x = offset - col
    Mirror(f64, usize),
    /// x = pos - neg
    Split(usize, usize),
}

/// Solves the model's LP relaxation with the given bound vectors.
pub fn solve_with_bounds(model: &ModelIR, lower: &[f64], upper: &[f64]) -> Result<LpOutcome, SolveError> {
    let nv = model.variables.len();
    let mut maps = Vec::with_capacity(nv);
    let mut ncols = 0usize;
    // (column, capacity) rows for finite ranges
    let mut caps: Vec<(usize, f64)> = Vec::new();
    for j in 0..nv {
        let (l, u) = (lower[j], upper[j]);
        if l > u + EPS {
            return Ok(LpOutcome::Infeasible);
        }
        let m = if l.is_finite() && u.is_finite() && (u - l).abs() <= 0.0 {
            Map::Fixed(l)
        } else if l.is_finite() {
            let c = ncols;
            ncols += 1;
            if u.is_finite() {
                caps.push((c, u - l));
            }
            Map::Shift(l, c)
        } else if u.is_finite() {
            let c = ncols;
            ncols += 1;
            Map::Mirror(u, c)
        } else {
            let c = ncols;
            ncols += 2;
            Map::Split(c, c + 1)
        };
        maps.push(m);
    }

    // Working rows: (coefficients over working columns, sense, rhs).
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::with_capacity(model.constraints.len() + caps.len());
    for con in &model.constraints {
        let mut a = vec![0.0; ncols];
        let mut rhs = con.rhs;
        for &(v, c) in &con.terms {
            match maps[v] {
                Map::Fixed(x) => rhs -= c * x,
                Map::Shift(off, k) => {
                    rhs -= c * off;
                    a[k] += c;
                }
                Map::Mirror(off, k) => {
                    rhs -= c * off;
                    a[k] -= c;
                }
                Map::Split(p, n) => {
                    a[p] += c;
                    a[n] -= c;
                }
            }
        }
        rows.push((a, con.sense, rhs));
    }
    for &(k, cap) in &caps {
        let mut a = vec![0.0; ncols];
        a[k] = 1.0;
        rows.push((a, Sense::Le, cap));
    }

    let mut cost = vec![0.0; ncols];
    let mut obj_const = model.objective_constant;
    for &(v, c) in &model.objective {
        match maps[v] {
            Map::Fixed(x) => obj_const += c * x,
            Map::Shift(off, k) => {
                obj_const += c * off;
                cost[k] += c;
            }
            Map::Mirror(off, k) => {
                obj_const += c * off;
                cost[k] -= c;
            }
            Map::Split(p, n) => {
                cost[p] += c;
                cost[n] -= c;
            }
        }
    }

    let outcome = Tableau::solve(&rows, &cost, ncols)?;
    Ok(match outcome {
        Phase::Infeasible => LpOutcome::Infeasible,
        Phase::Unbounded => LpOutcome::Unbounded,
        Phase::Optimal(w, obj) => {
            let x = maps
                .iter()
                .map(|m| match *m {
                    Map::Fixed(x) => x,
                    Map::Shift(off, k) => off + w[k],
                    Map::Mirror(off, k) => off - w[k],
                    Map::Split(p, n) => w[p] - w[n],
                })
                .collect();
            LpOutcome::Optimal {
                objective: obj + obj_const,
                x,
            }
        }
    })
}

enum Phase {
    Optimal(Vec<f64>, f64),
    Infeasible,
    Unbounded,
}

struct Tableau {
    m: usize,
    /// Columns excluding the right-hand side.
    n: usize,
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Columns that may never enter (artificials in phase two).
    banned: Vec<bool>,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.n + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.a[i * (self.n + 1) + self.n]
    }

    fn solve(rows: &[(Vec<f64>, Sense, f64)], cost: &[f64], nx: usize) -> Result<Phase, SolveError> {
        let m = rows.len();
        // Column layout: structural | slack/surplus (one per inequality) | artificials.
        let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
        let mut needs_art = Vec::with_capacity(m);
        let mut normalized: Vec<(Vec<f64>, Option<f64>, f64)> = Vec::with_capacity(m);
        for (a, sense, rhs) in rows {
            let flip = *rhs < 0.0;
            let sgn = if flip { -1.0 } else { 1.0 };
            let slack = match sense {
                Sense::Le => Some(sgn),
                Sense::Ge => Some(-sgn),
                Sense::Eq => None,
            };
            needs_art.push(slack != Some(1.0));
            normalized.push((a.iter().map(|x| x * sgn).collect(), slack, rhs * sgn));
        }
        let n_art = needs_art.iter().filter(|b| **b).count();
        let n = nx + n_slack + n_art;
        let w = n + 1;
        let mut t = Tableau {
            m,
            n,
            a: vec![0.0; m * w],
            basis: vec![0; m],
            banned: vec![false; n],
        };
        let (mut s_idx, mut a_idx) = (nx, nx + n_slack);
        for (i, (a, slack, rhs)) in normalized.iter().enumerate() {
            t.a[i * w..i * w + nx].copy_from_slice(a);
            t.a[i * w + n] = *rhs;
            if let Some(sc) = slack {
                t.a[i * w + s_idx] = *sc;
                if *sc == 1.0 {
                    t.basis[i] = s_idx;
                }
                s_idx += 1;
            }
            if needs_art[i] {
                t.a[i * w + a_idx] = 1.0;
                t.basis[i] = a_idx;
                a_idx += 1;
            }
        }

        // Phase one: minimise the sum of artificials.
        if n_art > 0 {
            let mut rc = vec![0.0; w];
            for j in nx + n_slack..n {
                rc[j] = 1.0;
            }
            for i in 0..m {
                if t.basis[i] >= nx + n_slack {
                    for j in 0..w {
                        rc[j] -= t.a[i * w + j];
                    }
                }
            }
            if t.iterate(&mut rc)? {
                // Phase one is bounded below by zero.
                unreachable!("phase one cannot be unbounded");
            }
            let infeas = -rc[n];
            let scale = 1.0 + normalized.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
            if infeas > 1e-9 * scale {
                return Ok(Phase::Infeasible);
            }
            // Drive zero-valued artificials out of the basis, dropping redundant rows.
            let mut keep = vec![true; m];
            for i in 0..m {
                if t.basis[i] >= nx + n_slack {
                    let col = (0..nx + n_slack).find(|&j| t.at(i, j).abs() > EPS);
                    match col {
                        Some(j) => t.pivot(i, j, &mut rc),
                        None => keep[i] = false,
                    }
                }
            }
            if keep.iter().any(|k| !k) {
                t.drop_rows(&keep);
            }
            for j in nx + n_slack..n {
                t.banned[j] = true;
            }
        }

        // Phase two.
        let mut rc = vec![0.0; w];
        rc[..nx].copy_from_slice(cost);
        for i in 0..t.m {
            let cb = if t.basis[i] < nx { cost[t.basis[i]] } else { 0.0 };
            if cb != 0.0 {
                for j in 0..w {
                    rc[j] -= cb * t.a[i * w + j];
                }
            }
        }
        if t.iterate(&mut rc)? {
            return Ok(Phase::Unbounded);
        }
        let mut x = vec![0.0; nx];
        for i in 0..t.m {
            if t.basis[i] < nx {
                x[t.basis[i]] = t.rhs(i).max(0.0);
            }
        }
        let obj: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(Phase::Optimal(x, obj))
    }

    fn drop_rows(&mut self, keep: &[bool]) {
        let w = self.n + 1;
        let mut a = Vec::with_capacity(self.a.len());
        let mut basis = Vec::with_capacity(self.m);
        for i in 0..self.m {
            if keep[i] {
                a.extend_from_slice(&self.a[i * w..(i + 1) * w]);
                basis.push(self.basis[i]);
            }
        }
        self.a = a;
        self.basis = basis;
        self.m = self.basis.len();
    }

    /// Runs primal simplex on reduced-cost row `rc`. Returns true if unbounded.
    fn iterate(&mut self, rc: &mut [f64]) -> Result<bool, SolveError> {
        let mut bland = false;
        let mut degenerate = 0usize;
        for _ in 0..PIVOT_CAP {
            let enter = if bland {
                (0..self.n).find(|&j| !self.banned[j] && rc[j] < -EPS)
            } else {
                let mut best = None;
                let mut most = -EPS;
                for j in 0..self.n {
                    if !self.banned[j] && rc[j] < most {
                        most = rc[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(col) = enter else {
                return Ok(false);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let aij = self.at(i, col);
                if aij > EPS {
                    let ratio = self.rhs(i).max(0.0) / aij;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - 1e-12
                                || (ratio <= best + 1e-12 && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((row, ratio)) = leave else {
                return Ok(true);
            };
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(row, col, rc);
        }
        Err(SolveError::PivotCap(PIVOT_CAP))
    }

    fn pivot(&mut self, r: usize, c: usize, rc: &mut [f64]) {
        let w = self.n + 1;
        let p = self.a[r * w + c];
        for j in 0..w {
            self.a[r * w + j] /= p;
        }
        let pivot_row: Vec<f64> = self.a[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * w + c];
            if f != 0.0 {
                let row = &mut self.a[i * w..(i + 1) * w];
                for (x, pr) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        let f = rc[c];
        if f != 0.0 {
            for (x, pr) in rc.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            rc[c] = 0.0;
        }
        self.basis[r] = c;
    }
}
