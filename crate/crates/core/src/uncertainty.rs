//! Chance-constraint machinery: the reliability quantile, the binomial EV
//! connection model, the linear robust margin used by every applied
//! constraint, and an evaluator for the full square-root robust form.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum UncertaintyError {
    #[error("reliability level must lie in (0, 1), got {0}")]
    ReliabilityOutOfRange(f64),
    #[error("robust parameters need reliability in (0, 0.5], got {0}")]
    LoosensConstraints(f64),
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("probability must lie in [0, 1], got {0}")]
    ProbabilityOutOfRange(f64),
    #[error("outcome {x} exceeds trial count {n}")]
    OutcomeExceedsTrials { n: u64, x: u64 },
    #[error("trial count must be at least 1")]
    NoTrials,
}

/// The `{phi, mu, reliability}` block of a scenario file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustSpec {
    pub phi: f64,
    pub mu: f64,
    pub reliability: f64,
}

/// Uncertainty level φ, infeasibility tolerance μ, reliability ℜ and the
/// derived quantile ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustParams {
    phi: f64,
    mu: f64,
    reliability: f64,
    omega: f64,
}

impl RobustParams {
    pub fn new(phi: f64, mu: f64, reliability: f64) -> Result<Self, UncertaintyError> {
        if !(phi >= 0.0) {
            return Err(UncertaintyError::Negative { name: "phi", value: phi });
        }
        if !(mu >= 0.0) {
            return Err(UncertaintyError::Negative { name: "mu", value: mu });
        }
        if !(reliability > 0.0 && reliability <= 0.5) {
            return Err(UncertaintyError::LoosensConstraints(reliability));
        }
        let omega = omega_from_reliability(reliability)?.max(0.0);
        Ok(Self {
            phi,
            mu,
            reliability,
            omega,
        })
    }

    /// φ = μ = 0: every robust row collapses to its deterministic form.
    pub fn deterministic() -> Self {
        Self::new(0.0, 0.0, 0.5).expect("valid parameters")
    }

    pub fn from_spec(spec: &RobustSpec) -> Result<Self, UncertaintyError> {
        Self::new(spec.phi, spec.mu, spec.reliability)
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn reliability(&self) -> f64 {
        self.reliability
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// φ·ω, the factor applied to every forecast.
    pub fn phi_omega(&self) -> f64 {
        self.phi * self.omega
    }
}

impl Default for RobustParams {
    fn default() -> Self {
        Self::new(0.05, 0.01, 0.05).expect("valid parameters")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalApprox {
    pub mean: f64,
    pub std_dev: f64,
}

impl NormalApprox {
    pub fn pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.std_dev;
        (-0.5 * z * z).exp() / (self.std_dev * (2.0 * std::f64::consts::PI).sqrt())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        normal_cdf((x - self.mean) / self.std_dev)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Inverse standard normal CDF: Acklam's rational approximation followed by
/// two Halley steps against the erfc-based CDF.
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;

    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let u = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

/// ω = Φ⁻¹(1 − ℜ).
pub fn omega_from_reliability(reliability: f64) -> Result<f64, UncertaintyError> {
    if !(reliability > 0.0 && reliability < 1.0) {
        return Err(UncertaintyError::ReliabilityOutOfRange(reliability));
    }
    // Φ⁻¹(1 − ℜ) = −Φ⁻¹(ℜ) avoids cancellation in 1 − ℜ for small ℜ.
    Ok(-normal_quantile(reliability))
}

/// Probability that exactly `x` of `n` vehicles are connected.
pub fn binomial_pmf(n: u64, x: u64, rho: f64) -> Result<f64, UncertaintyError> {
    if x > n {
        return Err(UncertaintyError::OutcomeExceedsTrials { n, x });
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(UncertaintyError::ProbabilityOutOfRange(rho));
    }
    let q = 1.0 - rho;
    if rho == 0.0 {
        return Ok(if x == 0 { 1.0 } else { 0.0 });
    }
    if q == 0.0 {
        return Ok(if x == n { 1.0 } else { 0.0 });
    }
    // ln C(n, k) with k = min(x, n - x) so mirrored outcomes share the same sum.
    let k = x.min(n - x);
    let ln_choose: f64 = (1..=k).map(|i| ((n - k + i) as f64 / i as f64).ln()).sum();
    let ln_p = x as f64 * rho.ln() + (n - x) as f64 * q.ln();
    Ok((ln_choose + ln_p).exp())
}

pub fn binomial_normal_approx(n: u64, rho: f64) -> Result<NormalApprox, UncertaintyError> {
    if n == 0 {
        return Err(UncertaintyError::NoTrials);
    }
    if !(0.0..=1.0).contains(&rho) {
        return Err(UncertaintyError::ProbabilityOutOfRange(rho));
    }
    let nf = n as f64;
    Ok(NormalApprox {
        mean: nf * rho,
        std_dev: (nf * rho * (1.0 - rho)).sqrt(),
    })
}

/// Build-time margins for an uncertain forecast parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustMargin {
    /// φ·ω·forecast
    pub tighten: f64,
    /// μ·max(1, |forecast|)
    pub relax: f64,
}

pub fn robust_margin(forecast: f64, params: &RobustParams) -> RobustMargin {
    RobustMargin {
        tighten: params.phi_omega() * forecast,
        relax: params.mu() * forecast.abs().max(1.0),
    }
}

/// One `≤` row with uncertain coefficients: `Σ f·n + Σ p·m ≤ j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertainRow {
    /// Forecast coefficients of the continuous variables.
    pub f: Vec<f64>,
    /// Forecast coefficients of the binary variables.
    pub p: Vec<f64>,
    /// Forecast right-hand side.
    pub j: f64,
}

/// Left side minus right side of the square-root robust counterpart at a
/// fixed candidate solution. Non-positive means the row holds.
pub fn eq15_audit(row: &UncertainRow, n: &[f64], m: &[f64], params: &RobustParams) -> f64 {
    assert_eq!(row.f.len(), n.len(), "continuous coefficient count");
    assert_eq!(row.p.len(), m.len(), "binary coefficient count");
    let fn_sum: f64 = row.f.iter().zip(n).map(|(f, x)| f * x).sum();
    let pm_sum: f64 = row.p.iter().zip(m).map(|(p, y)| p * y).sum();
    let spread: f64 = row.f.iter().zip(n).map(|(f, x)| (f * x).powi(2)).sum::<f64>()
        + row.p.iter().zip(m).map(|(p, y)| p * p * y).sum::<f64>()
        + row.j * row.j;
    fn_sum + params.phi_omega() * spread.sqrt() + pm_sum - row.j - params.mu() * row.j.abs().max(1.0)
}
