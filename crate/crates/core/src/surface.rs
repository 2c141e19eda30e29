//! Yield surfaces in the (p, q) invariant plane: an exponential
//! pressure-dependent strength surface on the dilative side, a
//! modified-Cam-Clay-style elliptical cap on the compactive side, and
//! the continuity condition that ties the two together at the critical
//! state as the cap hardens and the CSL slope degrades.
//!
//! Sign convention: p is the tension-positive mean stress, so compaction
//! lives at p < 0 and the cap pressure p_c and critical-state pressure
//! p_cs = p_c/2 are negative. q = sqrt(3/2) ||s|| >= 0.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("invalid yield parameter: {0}")]
    InvalidParameter(String),
    /// The strength-surface merge denominator R*exp(p_cs/P_y) - 1
    /// vanished; the surface pair cannot be joined at this cap pressure.
    #[error("degenerate merge denominator {denom:.3e} at p_cs = {p_cs:.6e} Pa")]
    DegenerateDenominator { denom: f64, p_cs: f64 },
}

/// Strength, cap and damage-coupling constants. Immutable once built;
/// `r_ratio` and `m0` are derived from the rest in `new`.
#[derive(Debug, Clone, Copy)]
pub struct YieldParams {
    /// Strength-surface asymptote at p -> -inf (Pa).
    pub alpha0: f64,
    /// Strength-surface intercept scale (Pa); q(0) = alpha0 - gamma0.
    pub gamma0: f64,
    /// Pressure scale of the exponential strength term (Pa).
    pub p_y: f64,
    /// Damage coupling exponent weight, 0 (none) to 1 (full).
    pub x_damage: f64,
    /// Initial cap (crush onset) pressure (Pa), negative.
    pub p_c0: f64,
    /// R := gamma0/alpha0, in (0, 1]. Held fixed as the surface evolves.
    pub r_ratio: f64,
    /// Initial critical-state-line slope, from the continuity condition
    /// at the initial cap.
    pub m0: f64,
}

impl YieldParams {
    pub fn new(
        alpha0: f64,
        gamma0: f64,
        p_y: f64,
        x_damage: f64,
        p_c0: f64,
    ) -> Result<Self, SurfaceError> {
        let bad = |msg: String| Err(SurfaceError::InvalidParameter(msg));
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return bad(format!("alpha0 must be positive, got {alpha0:e}"));
        }
        if !(gamma0 > 0.0 && gamma0 <= alpha0) {
            return bad(format!(
                "gamma0 must satisfy 0 < gamma0 <= alpha0, got {gamma0:e} vs alpha0 {alpha0:e}"
            ));
        }
        if !(p_y > 0.0 && p_y.is_finite()) {
            return bad(format!("P_y must be positive, got {p_y:e}"));
        }
        if !(0.0..=1.0).contains(&x_damage) {
            return bad(format!("X must lie in [0, 1], got {x_damage:e}"));
        }
        if !(p_c0 < 0.0 && p_c0.is_finite()) {
            return bad(format!("p_c0 must be negative (compressive), got {p_c0:e}"));
        }
        let r_ratio = gamma0 / alpha0;
        let m0 = solve_m0(alpha0, gamma0, p_c0, p_y);
        Ok(Self {
            alpha0,
            gamma0,
            p_y,
            x_damage,
            p_c0,
            r_ratio,
            m0,
        })
    }

    /// Width of the critical-state classification band (Pa).
    pub fn locus_band(&self) -> f64 {
        1e-9 * self.p_c0.abs()
    }
}

/// Dilative-side strength surface
/// f = q - alpha + gamma * exp(p / P_y); yield when f > 0.
pub fn f_yp(p: f64, q: f64, alpha: f64, gamma: f64, p_y: f64) -> f64 {
    q - alpha + gamma * (p / p_y).exp()
}

/// Tensile apex of the strength surface: the p at which q drops to zero,
/// a = P_y * ln(alpha/gamma) >= 0 for gamma <= alpha.
pub fn yp_apex(alpha: f64, gamma: f64, p_y: f64) -> f64 {
    p_y * (alpha / gamma).ln()
}

/// Critical-state-line slope at the current cap pressure:
/// M = (X * p_c0/p_c + (1 - X)) * M0. X = 1 preserves the cap peak
/// deviatoric strength as the cap grows; X = 0 leaves M fixed.
pub fn csl_slope(p_c: f64, params: &YieldParams) -> f64 {
    (params.x_damage * params.p_c0 / p_c + (1.0 - params.x_damage)) * params.m0
}

/// Compactive cap f = (q/M)^2 + p (p - p_c); yield when f > 0. Units Pa^2.
pub fn f_mcc(p: f64, q: f64, p_c: f64, m: f64) -> f64 {
    (q / m) * (q / m) + p * (p - p_c)
}

/// Apex of the cap ellipse: (p_cs, q_cs) = (p_c/2, -M p_c/2), the point
/// the two surfaces share.
pub fn critical_state(p_c: f64, m: f64) -> (f64, f64) {
    let p_cs = 0.5 * p_c;
    (p_cs, -m * p_cs)
}

/// Strength-surface scale that keeps the two surfaces continuous at the
/// critical state: alpha = M p_cs / (R exp(p_cs/P_y) - 1).
pub fn alpha_update(p_c: f64, m: f64, params: &YieldParams) -> Result<f64, SurfaceError> {
    let p_cs = 0.5 * p_c;
    let denom = params.r_ratio * (p_cs / params.p_y).exp() - 1.0;
    if denom.abs() < 1e-12 {
        return Err(SurfaceError::DegenerateDenominator { denom, p_cs });
    }
    Ok(m * p_cs / denom)
}

/// Initial CSL slope from the continuity condition at the initial cap:
/// the unique M0 with alpha(p_c0, M0) = alpha0.
pub fn solve_m0(alpha0: f64, gamma0: f64, p_c0: f64, p_y: f64) -> f64 {
    let r = gamma0 / alpha0;
    let p_cs0 = 0.5 * p_c0;
    alpha0 * (r * (p_cs0 / p_y).exp() - 1.0) / p_cs0
}

/// Current strength/cap pair, kept mutually continuous. Rebuilt from the
/// cap pressure whenever hardening moves it.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceState {
    /// Cap pressure (Pa), negative.
    pub p_c: f64,
    /// CSL slope at this cap pressure.
    pub m: f64,
    /// Strength asymptote (Pa).
    pub alpha: f64,
    /// Strength intercept scale (Pa), gamma = R * alpha.
    pub gamma: f64,
}

impl SurfaceState {
    pub fn from_cap(p_c: f64, params: &YieldParams) -> Result<Self, SurfaceError> {
        let m = csl_slope(p_c, params);
        let alpha = alpha_update(p_c, m, params)?;
        Ok(Self {
            p_c,
            m,
            alpha,
            gamma: params.r_ratio * alpha,
        })
    }

    /// Shared point of the two surfaces at the current cap.
    pub fn critical_state(&self) -> (f64, f64) {
        critical_state(self.p_c, self.m)
    }
}

/// Which yield branch a trial stress belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StressLocus {
    /// Dilative side: strength surface governs.
    YpSide,
    /// Compactive side: the cap governs.
    MccSide,
    /// Within the classification band at the shared point with
    /// q_tr above it: clamp to (p_cs, q_cs).
    CriticalState,
}

/// Route a trial state to a yield branch. A fully crushed-out state
/// (hardened) has a frozen cap and always uses the strength surface.
/// Inside the +-tol_p band around p_cs, trial states above q_cs are
/// clamped to the critical state; at or below it both surfaces agree
/// and the Yp-side elastic check decides.
pub fn classify_locus(
    p_tr: f64,
    q_tr: f64,
    p_cs: f64,
    q_cs: f64,
    tol_p: f64,
    hardened: bool,
) -> StressLocus {
    if hardened {
        return StressLocus::YpSide;
    }
    if p_tr > p_cs + tol_p {
        StressLocus::YpSide
    } else if p_tr < p_cs - tol_p {
        StressLocus::MccSide
    } else if q_tr > q_cs {
        StressLocus::CriticalState
    } else {
        StressLocus::YpSide
    }
}
