//! Piecewise-linear fits and the mixed-integer gadgets built on them.

pub mod fit;
pub mod gadgets;

use serde::Serialize;

use fit::{fit_line, FitOptions, InterceptRule, Segment};

/// Half-width of the angle-difference window covered by the trig fits, rad.
pub const ANGLE_LIMIT: f64 = 0.6;

/// Cosine by two segments meeting at the origin, sine by one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrigSegments {
    /// Used when the angle difference is non-positive (`l = 0`).
    pub cos_neg: Segment,
    /// Used when the angle difference is non-negative (`l = 1`).
    pub cos_pos: Segment,
    pub sin: Segment,
}

impl TrigSegments {
    pub fn cos(&self, x: f64) -> f64 {
        if x < 0.0 {
            self.cos_neg.eval(x)
        } else {
            self.cos_pos.eval(x)
        }
    }

    pub fn sin(&self, x: f64) -> f64 {
        self.sin.eval(x)
    }

    /// Largest absolute cosine error of the pair.
    pub fn cos_abs_err(&self) -> f64 {
        self.cos_neg.max_abs_err.max(self.cos_pos.max_abs_err)
    }

    pub fn cos_rel_err(&self) -> f64 {
        self.cos_neg.max_rel_err.max(self.cos_pos.max_rel_err)
    }

    pub fn cos_boundary_rel_err(&self) -> f64 {
        self.cos_neg.boundary_rel_err.max(self.cos_pos.boundary_rel_err)
    }
}

/// Fits the trig segments with `refinements` slope-grid refinements.
/// Both cosine segments are anchored at `cos 0 = 1` so they meet at the knot.
pub fn trig_segments_with(refinements: usize) -> TrigSegments {
    let anchored = FitOptions {
        intercept: InterceptRule::Anchored(0.0),
        refinements,
    };
    let free = FitOptions {
        intercept: InterceptRule::Minimax,
        refinements,
    };
    TrigSegments {
        cos_neg: fit_line(f64::cos, -ANGLE_LIMIT, 0.0, anchored),
        cos_pos: fit_line(f64::cos, 0.0, ANGLE_LIMIT, anchored),
        sin: fit_line(f64::sin, -ANGLE_LIMIT, ANGLE_LIMIT, free),
    }
}

pub fn trig_segments() -> TrigSegments {
    trig_segments_with(2)
}
