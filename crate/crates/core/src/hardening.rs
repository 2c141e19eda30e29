//! Pore-crush hardening: the internal variable z (crushed-out porosity,
//! also the damage measure) stores energy through a convex potential
//! whose derivative is the hardening force beta that drives the cap
//! pressure away from its initial value, p_c = p_c0 - beta.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HardeningError {
    #[error("invalid crush parameter: {0}")]
    InvalidParameter(String),
}

/// Crush-hardening constants.
#[derive(Debug, Clone, Copy)]
pub struct CrushParams {
    /// Linear hardening modulus (Pa).
    pub h: f64,
    /// Exponential hardening scale (Pa).
    pub beta_max: f64,
    /// Exponential hardening rate (-).
    pub omega: f64,
    /// Crush-out porosity: z saturates here and the cap freezes (-).
    pub z_max: f64,
}

impl CrushParams {
    pub fn new(h: f64, beta_max: f64, omega: f64, z_max: f64) -> Result<Self, HardeningError> {
        let bad = |msg: String| Err(HardeningError::InvalidParameter(msg));
        if !(h >= 0.0 && h.is_finite()) {
            return bad(format!("H must be non-negative, got {h:e}"));
        }
        if !(beta_max > 0.0 && beta_max.is_finite()) {
            return bad(format!("beta_max must be positive, got {beta_max:e}"));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return bad(format!("omega must be positive, got {omega:e}"));
        }
        // z_max = 0 is the fully saturated limit: no crushable porosity,
        // the cap is frozen from the start.
        if !(0.0..1.0).contains(&z_max) {
            return bad(format!("z_max must lie in [0, 1), got {z_max:e}"));
        }
        Ok(Self {
            h,
            beta_max,
            omega,
            z_max,
        })
    }

    /// Stored energy of crush (Pa, per unit volume):
    /// Psi(z) = H z^2/2 + beta_max (exp(omega z)/omega - z). Convex, with
    /// Psi(0) = beta_max/omega.
    pub fn stored_energy(&self, z: f64) -> f64 {
        0.5 * self.h * z * z + self.beta_max * ((self.omega * z).exp() / self.omega - z)
    }

    /// Hardening force beta = dPsi/dz = H z + beta_max (exp(omega z) - 1)
    /// (Pa). Zero at z = 0, strictly increasing.
    pub fn beta_of_z(&self, z: f64) -> f64 {
        self.h * z + self.beta_max * ((self.omega * z).exp() - 1.0)
    }

    /// Slope of the hardening force, d beta/dz = H + beta_max omega
    /// exp(omega z) (Pa). Also the curvature of Psi, positive everywhere.
    pub fn beta_slope(&self, z: f64) -> f64 {
        self.h + self.beta_max * self.omega * (self.omega * z).exp()
    }
}

/// Cap pressure under a hardening force: p_c = p_c0 - beta. Both p_c0
/// and the result are negative; crush pushes the cap deeper.
pub fn p_c_of_beta(beta: f64, p_c0: f64) -> f64 {
    p_c0 - beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Dry-alluvium-like crush constants.
    fn crush() -> CrushParams {
        CrushParams::new(1.0e9, 0.5e6, 50.0, 0.20).unwrap()
    }

    #[test]
    fn stored_energy_reference_values() {
        let c = crush();
        // Psi(0) = beta_max / omega
        assert_relative_eq!(c.stored_energy(0.0), 1.0e4, max_relative = 1e-14);
        // hand evaluation at z = 0.1:
        // 1e9*0.01/2 + 0.5e6*(e^5/50 - 0.1) = 5e6 + 1.4341316e6
        assert_relative_eq!(
            c.stored_energy(0.1),
            6.434131591025766e6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn hardening_force_reference_values() {
        let c = crush();
        assert_eq!(c.beta_of_z(0.0), 0.0);
        // 1e8 + 0.5e6*(e^5 - 1) = 0.173707 GPa
        assert_relative_eq!(c.beta_of_z(0.1), 1.737065795512883e8, max_relative = 1e-12);
    }

    #[test]
    fn force_is_energy_derivative() {
        let c = crush();
        // skip z = 0 where beta vanishes and a relative check is meaningless
        for k in 1..20 {
            let z = 0.21 * k as f64 / 19.0;
            let h = 1e-6;
            let fd = (c.stored_energy(z + h) - c.stored_energy(z - h)) / (2.0 * h);
            assert_relative_eq!(c.beta_of_z(z), fd, max_relative = 1e-6);
            let fd2 = (c.beta_of_z(z + h) - c.beta_of_z(z - h)) / (2.0 * h);
            assert_relative_eq!(c.beta_slope(z), fd2, max_relative = 1e-6);
        }
    }

    #[test]
    fn energy_is_convex() {
        let c = crush();
        // positive second difference across the crush range
        let dz = 0.01;
        for k in 1..25 {
            let z = k as f64 * dz;
            let dd = c.stored_energy(z + dz) - 2.0 * c.stored_energy(z) + c.stored_energy(z - dz);
            assert!(dd > 0.0);
        }
    }

    #[test]
    fn cap_pressure_descends_with_crush() {
        let c = crush();
        let p_c0 = -950.0e6;
        assert_eq!(p_c_of_beta(0.0, p_c0), p_c0);
        let mut last = 0.0;
        for k in 0..=20 {
            let z = 0.20 * k as f64 / 20.0;
            let p_c = p_c_of_beta(c.beta_of_z(z), p_c0);
            assert!(p_c <= p_c0);
            assert!(k == 0 || p_c < last);
            last = p_c;
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(CrushParams::new(-1.0, 0.5e6, 50.0, 0.2).is_err());
        assert!(CrushParams::new(1.0e9, 0.0, 50.0, 0.2).is_err());
        assert!(CrushParams::new(1.0e9, 0.5e6, -1.0, 0.2).is_err());
        assert!(CrushParams::new(1.0e9, 0.5e6, 50.0, 1.0).is_err());
        // fully saturated limit is allowed
        assert!(CrushParams::new(1.0e9, 0.5e6, 50.0, 0.0).is_ok());
    }
}
