//! Equation-of-state closure for the solid+liquid mixture: pressure and
//! specific internal energy as functions of (density, temperature), the
//! two inverse lookups the stress update needs, and the tangent bulk
//! modulus. Pressure here is compression-positive, as in any published
//! EOS table; the constitutive kernel flips the sign at its boundary to
//! its tension-positive mean stress.
//!
//! Two backends: a closed-form analytic EOS used for testing and desk
//! fixtures, and a rectilinear (rho, T) table with bilinear
//! interpolation for user-supplied data.

mod table;

pub use table::{EosTable, RangePolicy, TableError};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EosError {
    /// Query left the valid domain of the backend.
    #[error("{what} = {value:.6e} outside range [{lo:.6e}, {hi:.6e}]")]
    OutOfTableRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    /// Tangent bulk modulus came out non-positive; the state is outside
    /// the material's stable compression branch.
    #[error("non-positive tangent bulk modulus {k:.6e} Pa at rho = {rho:.6e} kg/m^3, T = {t:.6e} K")]
    NonPositiveModulus { k: f64, rho: f64, t: f64 },
}

/// Closed-form test EOS, linear in density and temperature:
///
/// ```text
/// E(rho, T) = cv * T
/// P(rho, T) = k0 * (rho/rho_ref - 1) + gamma0 * rho_ref * cv * (T - t_ref)
/// ```
///
/// Both lookups invert exactly, which makes it the reference surface for
/// the tabular backend's tests.
#[derive(Debug, Clone, Copy)]
pub struct AnalyticEos {
    /// Reference density (kg/m^3); P = 0 there at T = t_ref.
    pub rho_ref: f64,
    /// Reference temperature (K).
    pub t_ref: f64,
    /// Isothermal bulk modulus at the reference state (Pa).
    pub k0: f64,
    /// Thermal pressure coefficient (Grueneisen-like, -).
    pub gamma0: f64,
    /// Specific heat at constant volume (J/(kg K)).
    pub cv: f64,
}

impl AnalyticEos {
    pub fn new(rho_ref: f64, t_ref: f64, k0: f64, gamma0: f64, cv: f64) -> Self {
        assert!(rho_ref > 0.0 && rho_ref.is_finite());
        assert!(t_ref >= 0.0 && t_ref.is_finite());
        assert!(k0 > 0.0 && k0.is_finite());
        assert!(gamma0 >= 0.0 && gamma0.is_finite());
        assert!(cv > 0.0 && cv.is_finite());
        Self {
            rho_ref,
            t_ref,
            k0,
            gamma0,
            cv,
        }
    }

    fn thermal_pressure(&self, t: f64) -> f64 {
        self.gamma0 * self.rho_ref * self.cv * (t - self.t_ref)
    }
}

/// EOS backend. All queries share one signature set so the kernel and
/// the drivers never care which one is loaded.
#[derive(Debug, Clone)]
pub enum Eos {
    Analytic(AnalyticEos),
    Table(EosTable),
}

impl Eos {
    /// Pressure (Pa, compression-positive) at (rho, T).
    pub fn pressure(&self, rho: f64, t: f64) -> Result<f64, EosError> {
        match self {
            Eos::Analytic(a) => Ok(a.k0 * (rho / a.rho_ref - 1.0) + a.thermal_pressure(t)),
            Eos::Table(tab) => tab.pressure(rho, t),
        }
    }

    /// Specific internal energy (J/kg) at (rho, T).
    pub fn energy(&self, rho: f64, t: f64) -> Result<f64, EosError> {
        match self {
            Eos::Analytic(a) => {
                let _ = rho;
                Ok(a.cv * t)
            }
            Eos::Table(tab) => tab.energy(rho, t),
        }
    }

    /// Temperature (K) from (rho, E). Tabular backend solves
    /// E(rho, T) = E by bisection on the interpolated isochore.
    pub fn temperature_from_energy(&self, rho: f64, e: f64) -> Result<f64, EosError> {
        match self {
            Eos::Analytic(a) => Ok(e / a.cv),
            Eos::Table(tab) => tab.temperature_from_energy(rho, e),
        }
    }

    /// Density (kg/m^3) from (P, T). Tabular backend solves
    /// P(rho, T) = P by bisection on the interpolated isotherm.
    pub fn density_from_pressure(&self, p: f64, t: f64) -> Result<f64, EosError> {
        match self {
            Eos::Analytic(a) => {
                let rho = a.rho_ref * (1.0 + (p - a.thermal_pressure(t)) / a.k0);
                if rho <= 0.0 {
                    return Err(EosError::OutOfTableRange {
                        what: "rho",
                        value: rho,
                        lo: 0.0,
                        hi: f64::INFINITY,
                    });
                }
                Ok(rho)
            }
            Eos::Table(tab) => tab.density_from_pressure(p, t),
        }
    }

    /// Isothermal tangent bulk modulus K = rho * dP/drho|_T (Pa).
    /// Closed form for the analytic backend, central difference with
    /// relative step 1e-6 for the tabular one.
    pub fn tangent_bulk_modulus(&self, rho: f64, t: f64) -> Result<f64, EosError> {
        match self {
            Eos::Analytic(a) => {
                let _ = t;
                Ok(rho * a.k0 / a.rho_ref)
            }
            Eos::Table(tab) => tab.tangent_bulk_modulus(rho, t),
        }
    }
}
