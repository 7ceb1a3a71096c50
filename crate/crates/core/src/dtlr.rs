//! Conductor heat balance: convection, radiation, resistance, steady-state
//! temperature and ampacity, all per metre of conductor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::case::ConductorSpec;
use crate::linearize::fit::{certify, fit_line_minmax, Segment, CERT_GRID_POINTS};

/// Upper end of the temperature bracket used by the root finders, K.
pub const T_SAFETY_CAP: f64 = 2000.0;

/// Default temperature window of the logarithmic radiation fit, K.
pub const RADIATION_FIT_RANGE: (f64, f64) = (273.0, 373.0);

#[derive(Debug, Error, PartialEq)]
pub enum DtlrError {
    #[error("{name} must be positive (got {value})")]
    NonPositive { name: &'static str, value: f64 },
    #[error("conductor temperature {t} K is below ambient {ambient} K")]
    BelowAmbient { t: f64, ambient: f64 },
    #[error("resistance {0} Ω is not positive at the requested temperature")]
    NonPositiveResistance(f64),
    #[error("heat balance has no root below {T_SAFETY_CAP} K")]
    NoRoot,
    #[error("degenerate temperature range [{0}, {1}]")]
    DegenerateRange(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    /// K
    pub ambient_temp: f64,
    /// m/s
    pub wind_speed: f64,
    /// W/m
    pub solar_gain: f64,
    /// W/(m·K⁴)
    pub radiation_coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvectionCoeffs {
    pub k_prime: f64,
    pub k_double_prime: f64,
    pub reynolds: f64,
}

impl ConvectionCoeffs {
    /// Coefficient of the dominant forced-convection branch.
    pub fn dominant(&self) -> f64 {
        self.k_prime.max(self.k_double_prime)
    }
}

/// Every heat-balance term at one operating point, W/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HbeBreakdown {
    pub ohmic: f64,
    pub solar: f64,
    pub convection: f64,
    pub radiation: f64,
    pub temperature: f64,
}

impl HbeBreakdown {
    /// Gains minus losses.
    pub fn residual(&self) -> f64 {
        self.ohmic + self.solar - self.convection - self.radiation
    }
}

pub fn reynolds(d: f64, v: f64, rho: f64, nu: f64) -> Result<f64, DtlrError> {
    for (name, value) in [("diameter", d), ("air density", rho), ("air viscosity", nu)] {
        if !(value > 0.0) {
            return Err(DtlrError::NonPositive { name, value });
        }
    }
    if v <= 0.0 {
        return Ok(0.0);
    }
    Ok(d * v * rho / nu)
}

pub fn convection_coeffs(a: f64, re: f64, gamma: f64) -> ConvectionCoeffs {
    ConvectionCoeffs {
        k_prime: a * (1.01 + 1.35 * re.powf(0.52)) * gamma,
        k_double_prime: a * 0.754 * re.sqrt() * gamma,
        reynolds: re,
    }
}

/// Convection coefficients of a conductor under the given wind.
pub fn conductor_coeffs(c: &ConductorSpec, w: &WeatherRecord) -> Result<ConvectionCoeffs, DtlrError> {
    let re = reynolds(c.diameter, w.wind_speed, c.air_density, c.air_viscosity)?;
    Ok(convection_coeffs(c.wind_angle_coeff, re, c.thermal_conductivity))
}

pub fn forced_convection(k: f64, t: f64, ambient: f64) -> Result<f64, DtlrError> {
    if t < ambient {
        return Err(DtlrError::BelowAmbient { t, ambient });
    }
    Ok(k * (t - ambient))
}

/// `f_nw` is the still-air coefficient, W/(m·K^1.25).
pub fn natural_convection(f_nw: f64, t: f64, ambient: f64) -> Result<f64, DtlrError> {
    if t < ambient {
        return Err(DtlrError::BelowAmbient { t, ambient });
    }
    Ok(f_nw * (t - ambient).powf(1.25))
}

pub fn radiation_loss(emissivity: f64, kr: f64, t: f64, ambient: f64) -> f64 {
    emissivity * kr * (t.powi(4) - ambient.powi(4))
}

/// Linear resistance-temperature law; `hbar` is the aggregate coefficient in Ω/K per Ω.
pub fn resistance_at(t: f64, r_ref: f64, t_ref: f64, hbar: f64) -> Result<f64, DtlrError> {
    let r = r_ref * (1.0 + hbar * (t - t_ref));
    if r > 0.0 {
        Ok(r)
    } else {
        Err(DtlrError::NonPositiveResistance(r))
    }
}

/// All heat-balance terms for current `amps` at temperature `t`.
pub fn hbe_breakdown(
    amps: f64,
    t: f64,
    w: &WeatherRecord,
    c: &ConductorSpec,
    r_per_m: f64,
) -> Result<HbeBreakdown, DtlrError> {
    let k = conductor_coeffs(c, w)?.dominant();
    Ok(HbeBreakdown {
        ohmic: amps * amps * r_per_m,
        solar: w.solar_gain,
        convection: k * (t - w.ambient_temp),
        radiation: radiation_loss(c.emissivity, w.radiation_coeff, t, w.ambient_temp),
        temperature: t,
    })
}

/// Conductor temperature at which heat gains and losses balance.
pub fn steady_state_temperature(
    amps: f64,
    w: &WeatherRecord,
    c: &ConductorSpec,
    r_per_m: f64,
) -> Result<f64, DtlrError> {
    let k = conductor_coeffs(c, w)?.dominant();
    let eps_kr = c.emissivity * w.radiation_coeff;
    let te = w.ambient_temp;
    let gain = amps * amps * r_per_m + w.solar_gain;
    let loss = |t: f64| k * (t - te) + eps_kr * (t.powi(4) - te.powi(4));
    if gain <= 0.0 {
        return Ok(te);
    }
    if loss(T_SAFETY_CAP) < gain {
        return Err(DtlrError::NoRoot);
    }
    let (mut lo, mut hi) = (te, T_SAFETY_CAP);
    // Bisect to the last representable bit; the residual tolerance in W/m is
    // much tighter than a 1e-6 K bracket would give.
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if loss(mid) < gain {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rl, rh) = ((loss(lo) - gain).abs(), (loss(hi) - gain).abs());
    Ok(if rl <= rh { lo } else { hi })
}

/// Largest current keeping the conductor at or below `t_max`, A.
pub fn ampacity(t_max: f64, w: &WeatherRecord, c: &ConductorSpec, r_per_m: f64) -> Result<f64, DtlrError> {
    if !(r_per_m > 0.0) {
        return Err(DtlrError::NonPositive {
            name: "resistance per metre",
            value: r_per_m,
        });
    }
    let k = conductor_coeffs(c, w)?.dominant();
    let te = w.ambient_temp;
    let num = k * (t_max - te) + radiation_loss(c.emissivity, w.radiation_coeff, t_max, te) - w.solar_gain;
    Ok(if num <= 0.0 { 0.0 } else { (num / r_per_m).sqrt() })
}

/// Affine replacement of the quartic radiation law obtained by fitting the
/// logarithm on both sides of `Q + εK T_E⁴ = εK T⁴`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiationLnFit {
    /// `ln T ≈ s T + m` on the temperature range.
    pub t_side: Segment,
    /// `ln z ≈ s z + m` for `z = Q + εK T_E⁴` over the matching range.
    pub q_side: Segment,
    /// Resulting link `Q ≈ slope · T + intercept`.
    pub link_slope: f64,
    pub link_intercept: f64,
    /// Largest `link - true` over the range above ambient, W/m (may be negative).
    pub max_overestimate: f64,
    /// Largest `true - link` over the same range, W/m.
    pub max_underestimate: f64,
    /// Pointwise relative error of the temperature-side fit.
    pub max_rel_err: f64,
}

impl RadiationLnFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.link_slope * t + self.link_intercept
    }
}

pub fn radiation_ln_fit(
    emissivity: f64,
    kr: f64,
    ambient: f64,
    range: (f64, f64),
) -> Result<RadiationLnFit, DtlrError> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo) {
        return Err(DtlrError::DegenerateRange(lo, hi));
    }
    let ek = emissivity * kr;
    if !(ek > 0.0) {
        return Err(DtlrError::NonPositive {
            name: "emissivity times radiation coefficient",
            value: ek,
        });
    }
    let t_side = fit_line_minmax(f64::ln, lo, hi);
    let q_side = fit_line_minmax(f64::ln, ek * lo.powi(4), ek * hi.powi(4));
    let link_slope = 4.0 * t_side.slope / q_side.slope;
    let link_intercept =
        (ek.ln() + 4.0 * t_side.intercept - q_side.intercept) / q_side.slope - ek * ambient.powi(4);

    let from = ambient.max(lo);
    let mut over = f64::NEG_INFINITY;
    let mut under = f64::NEG_INFINITY;
    if from < hi {
        let n = CERT_GRID_POINTS - 1;
        for i in 0..=n {
            let t = from + (hi - from) * i as f64 / n as f64;
            let diff = link_slope * t + link_intercept - radiation_loss(emissivity, kr, t, ambient);
            over = over.max(diff);
            under = under.max(-diff);
        }
    } else {
        over = 0.0;
        under = 0.0;
    }
    Ok(RadiationLnFit {
        t_side,
        q_side,
        link_slope,
        link_intercept,
        max_overestimate: over,
        max_underestimate: under,
        max_rel_err: t_side.max_rel_err,
    })
}

/// The logarithm fit evaluated with fixed coefficients, for comparison with
/// published values.
pub fn ln_segment(slope: f64, intercept: f64, range: (f64, f64)) -> Segment {
    certify(&f64::ln, range.0, range.1, slope, intercept)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::case::tests::conductor;

    pub(crate) fn weather(te: f64) -> WeatherRecord {
        WeatherRecord {
            ambient_temp: te,
            wind_speed: 2.23,
            solar_gain: 14.08,
            radiation_coeff: 2.5e-9,
        }
    }

    #[test]
    fn reynolds_reference_value() {
        let re = reynolds(0.035, 2.23, 1.293, 1.81e-5).unwrap();
        assert!((re - 5575.6).abs() / 5575.6 < 1e-4);
        assert_eq!(reynolds(0.035, 0.0, 1.293, 1.81e-5).unwrap(), 0.0);
        let doubled = reynolds(0.035, 4.46, 1.293, 1.81e-5).unwrap();
        assert!((doubled - 2.0 * re).abs() < 1e-9);
        assert!(reynolds(0.0, 2.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn convection_reference_coefficients() {
        let k = convection_coeffs(1.0, 5575.6, 0.028);
        assert!((k.k_prime - 3.382).abs() < 1e-3);
        assert!((k.k_double_prime - 1.576).abs() < 1e-3);
        let still = convection_coeffs(1.0, 0.0, 0.028);
        assert!((still.k_prime - 1.01 * 0.028).abs() < 1e-15);
        assert_eq!(still.k_double_prime, 0.0);
    }

    #[test]
    fn convection_terms() {
        assert!((forced_convection(3.382, 373.0, 298.0).unwrap() - 253.65).abs() < 1e-9);
        assert_eq!(forced_convection(3.0, 300.0, 300.0).unwrap(), 0.0);
        assert!(forced_convection(3.0, 290.0, 300.0).is_err());
        assert!((natural_convection(1.0, 316.0, 300.0).unwrap() - 32.0).abs() < 1e-12);
        assert_eq!(natural_convection(1.0, 300.0, 300.0).unwrap(), 0.0);
    }

    #[test]
    fn radiation_reference_value() {
        let q = radiation_loss(0.75, 2.5e-9, 373.0, 298.0);
        assert!((q - 21.507).abs() / 21.507 < 1e-3);
        assert_eq!(radiation_loss(0.75, 2.5e-9, 298.0, 298.0), 0.0);
    }

    #[test]
    fn resistance_law() {
        assert_eq!(resistance_at(293.0, 8.0, 293.0, 0.0341).unwrap(), 8.0);
        let r = resistance_at(373.0, 8.0, 293.0, 0.0341).unwrap();
        assert!((r - 29.824).abs() < 1e-9);
        let fd = (resistance_at(350.0 + 1e-3, 8.0, 293.0, 0.0341).unwrap()
            - resistance_at(350.0 - 1e-3, 8.0, 293.0, 0.0341).unwrap())
            / 2e-3;
        assert!((fd - 8.0 * 0.0341).abs() < 1e-9);
        assert!(resistance_at(0.0, 8.0, 293.0, 0.01).is_err());
    }

    #[test]
    fn zero_gain_stays_at_ambient() {
        let mut w = weather(298.0);
        w.solar_gain = 0.0;
        assert_eq!(steady_state_temperature(0.0, &w, &conductor(), 2e-4).unwrap(), 298.0);
    }

    #[test]
    fn solar_only_heating() {
        let w = weather(298.0);
        let t = steady_state_temperature(0.0, &w, &conductor(), 2e-4).unwrap();
        assert!((t - 301.93).abs() < 0.01, "{t}");
        let b = hbe_breakdown(0.0, t, &w, &conductor(), 2e-4).unwrap();
        assert!(b.residual().abs() <= 1e-6);
    }

    #[test]
    fn ampacity_reference_and_round_trip() {
        let w = weather(298.0);
        let c = conductor();
        let i = ampacity(373.0, &w, &c, 2e-4).unwrap();
        assert!((i - 1142.55).abs() < 0.1, "{i}");
        let t = steady_state_temperature(i, &w, &c, 2e-4).unwrap();
        assert!((t - 373.0).abs() < 1e-4);
        let mut hot = w;
        hot.ambient_temp = 373.0;
        assert_eq!(ampacity(373.0, &hot, &c, 2e-4).unwrap(), 0.0);
        assert!(ampacity(373.0, &w, &c, 0.0).is_err());
    }

    #[test]
    fn absurd_current_has_no_root() {
        let w = weather(298.0);
        assert_eq!(
            steady_state_temperature(1e7, &w, &conductor(), 2e-4),
            Err(DtlrError::NoRoot)
        );
    }

    #[test]
    fn published_ln_coefficients() {
        let seg = ln_segment(0.00312, 4.75824, RADIATION_FIT_RANGE);
        let at300 = seg.eval(300.0);
        assert!((at300 - 5.69424).abs() < 1e-9);
        assert!(((300f64.ln() - at300) / 300f64.ln() - 0.00167).abs() < 5e-5);
        assert!(seg.max_rel_err <= 0.0025);
    }

    #[test]
    fn radiation_link_stays_within_its_certificate() {
        let fit = radiation_ln_fit(0.75, 2.5e-9, 298.0, RADIATION_FIT_RANGE).unwrap();
        assert!((fit.t_side.slope - 0.00312).abs() / 0.00312 < 0.1);
        assert!(fit.max_rel_err <= 0.0025);
        for i in 0..=75 {
            let t = 298.0 + i as f64;
            let diff = fit.eval(t) - radiation_loss(0.75, 2.5e-9, t, 298.0);
            assert!(diff <= fit.max_overestimate + 1e-9);
            assert!(-diff <= fit.max_underestimate + 1e-9);
        }
        assert!(radiation_ln_fit(0.75, 2.5e-9, 298.0, (300.0, 300.0)).is_err());
    }
}
