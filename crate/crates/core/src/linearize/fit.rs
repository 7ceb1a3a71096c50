//! Single-segment minimax line fits for scalar functions.
//!
//! For a trial slope `s` the deviation `f(x) - s x` attains its extremes
//! either at the interval ends or where `f'(x) = s`. Those candidates give the
//! best intercept and the worst-case error for that slope in closed form, so
//! only the slope needs to be searched. The slope grid starts at the decade of
//! the chord slope and is refined by factors of ten.

use serde::Serialize;

/// Points used to certify the error of a fitted segment.
pub const CERT_GRID_POINTS: usize = 10_001;

const SCAN_POINTS: usize = 512;

/// An affine approximation `slope * x + intercept` of a function on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub slope: f64,
    pub intercept: f64,
    pub lo: f64,
    pub hi: f64,
    /// max |f - g| over the certification grid.
    pub max_abs_err: f64,
    /// max |f - g| / |f| over grid points where f is not zero.
    pub max_rel_err: f64,
    /// max |f - g| / |g| at the two interval ends.
    pub boundary_rel_err: f64,
}

impl Segment {
    pub fn eval(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// How the intercept is chosen once a slope is fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InterceptRule {
    /// Centre the line between the largest and smallest deviation.
    Minimax,
    /// Force the line through `(x, f(x))`.
    Anchored(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub intercept: InterceptRule,
    /// Number of tenfold slope-grid refinements after the initial decade grid.
    pub refinements: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            intercept: InterceptRule::Minimax,
            refinements: 2,
        }
    }
}

/// Minimax line fit with the default two refinements and a free intercept.
pub fn fit_line_minmax(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Segment {
    fit_line(f, lo, hi, FitOptions::default())
}

pub fn fit_line(f: impl Fn(f64) -> f64, lo: f64, hi: f64, opts: FitOptions) -> Segment {
    assert!(lo < hi, "degenerate fit interval [{lo}, {hi}]");
    let chord = (f(hi) - f(lo)) / (hi - lo);
    let mut step = if chord.abs() < 1e-300 {
        1.0
    } else {
        10f64.powf(chord.abs().log10().ceil())
    };

    let mut best = search(&f, lo, hi, opts.intercept, chord - 2.0 * step, chord + 2.0 * step, step);
    for _ in 0..opts.refinements {
        let (s, _, _) = best;
        let next = step / 10.0;
        best = search(&f, lo, hi, opts.intercept, s - step, s + step, next);
        step = next;
    }
    let (slope, intercept, _) = best;
    certify(&f, lo, hi, slope, intercept)
}

/// Best (slope, intercept, error) over slopes `k * step` within `[from, to]`.
fn search(
    f: &impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    rule: InterceptRule,
    from: f64,
    to: f64,
    step: f64,
) -> (f64, f64, f64) {
    let k0 = (from / step - 1e-9).ceil() as i64;
    let k1 = (to / step + 1e-9).floor() as i64;
    let mut best: Option<(f64, f64, f64)> = None;
    for k in k0..=k1 {
        let s = k as f64 * step;
        let (m, err) = best_intercept(f, lo, hi, s, rule);
        if best.map_or(true, |(_, _, e)| err < e - 1e-15) {
            best = Some((s, m, err));
        }
    }
    best.expect("slope grid is never empty")
}

/// Intercept and worst-case error for a fixed slope, from the extremum candidates.
pub fn best_intercept(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, s: f64, rule: InterceptRule) -> (f64, f64) {
    let dev = |x: f64| f(x) - s * x;
    let mut lo_dev = f64::INFINITY;
    let mut hi_dev = f64::NEG_INFINITY;
    for x in extremum_candidates(f, lo, hi, s) {
        let d = dev(x);
        lo_dev = lo_dev.min(d);
        hi_dev = hi_dev.max(d);
    }
    match rule {
        InterceptRule::Minimax => (0.5 * (lo_dev + hi_dev), 0.5 * (hi_dev - lo_dev)),
        InterceptRule::Anchored(x0) => {
            let m = dev(x0);
            (m, (hi_dev - m).abs().max((m - lo_dev).abs()))
        }
    }
}

/// Interval ends plus every point where `f'(x) = s`, located by scanning a
/// central-difference derivative and bisecting sign changes.
pub fn extremum_candidates(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, s: f64) -> Vec<f64> {
    let h = (hi - lo) * 1e-6;
    let g = |x: f64| (f(x + h) - f(x - h)) / (2.0 * h) - s;
    let mut out = vec![lo, hi];
    let dx = (hi - lo) / SCAN_POINTS as f64;
    let mut a = lo;
    let mut ga = g(a);
    for i in 1..=SCAN_POINTS {
        let b = lo + dx * i as f64;
        let gb = g(b);
        if ga == 0.0 {
            out.push(a);
        } else if ga * gb < 0.0 {
            let (mut l, mut r, mut gl) = (a, b, ga);
            for _ in 0..60 {
                let mid = 0.5 * (l + r);
                let gm = g(mid);
                if gl * gm <= 0.0 {
                    r = mid;
                } else {
                    l = mid;
                    gl = gm;
                }
            }
            out.push(0.5 * (l + r));
        }
        a = b;
        ga = gb;
    }
    out
}

/// Measures the errors of `s x + m` against `f` on a dense grid plus the
/// extremum candidates.
pub fn certify(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, s: f64, m: f64) -> Segment {
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let n = CERT_GRID_POINTS - 1;
    let grid = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64);
    for x in grid.chain(extremum_candidates(f, lo, hi, s)) {
        let fx = f(x);
        let err = (fx - (s * x + m)).abs();
        max_abs = max_abs.max(err);
        if fx.abs() > 1e-9 {
            max_rel = max_rel.max(err / fx.abs());
        }
    }
    let mut boundary_rel: f64 = 0.0;
    for x in [lo, hi] {
        let g = s * x + m;
        if g.abs() > 1e-12 {
            boundary_rel = boundary_rel.max((f(x) - g).abs() / g.abs());
        }
    }
    Segment {
        slope: s,
        intercept: m,
        lo,
        hi,
        max_abs_err: max_abs,
        max_rel_err: max_rel,
        boundary_rel_err: boundary_rel,
    }
}
