//! LP optimum by enumerating basic solutions of a bounded model.

use gridxpand::milp::ir::{ModelIR, Sense};

const TOL: f64 = 1e-9;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Minimum objective over all vertices, `None` if no vertex is feasible.
/// Every variable must have finite bounds.
pub fn vertex_optimum(model: &ModelIR) -> Option<f64> {
    let n = model.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for c in &model.constraints {
        let mut row = vec![0.0; n];
        for &(v, k) in &c.terms {
            row[v] += k;
        }
        planes.push((row, c.rhs));
    }
    for (j, v) in model.variables.iter().enumerate() {
        assert!(v.lower.is_finite() && v.upper.is_finite(), "vertex enumeration needs finite bounds");
        for b in [v.lower, v.upper] {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            planes.push((row, b));
        }
    }
    let feasible = |x: &[f64]| {
        let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let tol = TOL * scale * 100.0;
        model.variables.iter().zip(x).all(|(v, &xi)| xi >= v.lower - tol && xi <= v.upper + tol)
            && model.constraints.iter().all(|c| {
                let a = c.activity(x);
                match c.sense {
                    Sense::Le => a <= c.rhs + tol,
                    Sense::Ge => a >= c.rhs - tol,
                    Sense::Eq => (a - c.rhs).abs() <= tol,
                }
            })
    };
    let mut best: Option<f64> = None;
    combinations(planes.len(), n, &mut |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let obj = model.objective_value(&x);
                best = Some(best.map_or(obj, |b| b.min(obj)));
            }
        }
    });
    best
}
