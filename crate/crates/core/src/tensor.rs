//! Symmetric second-order tensors in 3D, stored as six independent
//! components. Used for stress (Pa) and small-strain increments (-)
//! under a tension-positive sign convention.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Symmetric 3x3 tensor. Off-diagonal fields store tensor components
/// (for strain: eps_xy, not the engineering shear 2*eps_xy).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub yz: f64,
    pub zx: f64,
}

impl SymTensor {
    pub const ZERO: SymTensor = SymTensor {
        xx: 0.0,
        yy: 0.0,
        zz: 0.0,
        xy: 0.0,
        yz: 0.0,
        zx: 0.0,
    };

    /// Identity tensor.
    pub const IDENTITY: SymTensor = SymTensor {
        xx: 1.0,
        yy: 1.0,
        zz: 1.0,
        xy: 0.0,
        yz: 0.0,
        zx: 0.0,
    };

    pub fn new(xx: f64, yy: f64, zz: f64, xy: f64, yz: f64, zx: f64) -> Self {
        Self {
            xx,
            yy,
            zz,
            xy,
            yz,
            zx,
        }
    }

    /// Diagonal tensor with the given principal values.
    pub fn diag(xx: f64, yy: f64, zz: f64) -> Self {
        Self {
            xx,
            yy,
            zz,
            ..Self::ZERO
        }
    }

    /// Isotropic tensor s * I.
    pub fn iso(s: f64) -> Self {
        Self::diag(s, s, s)
    }

    /// First invariant tr(A).
    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    /// Mean of the diagonal, tr(A)/3.
    pub fn mean(&self) -> f64 {
        self.trace() / 3.0
    }

    /// Deviatoric part A - tr(A)/3 * I.
    pub fn dev(&self) -> SymTensor {
        let m = self.mean();
        SymTensor {
            xx: self.xx - m,
            yy: self.yy - m,
            zz: self.zz - m,
            ..*self
        }
    }

    /// Full contraction A : B, counting off-diagonal terms twice.
    pub fn double_dot(&self, other: &SymTensor) -> f64 {
        self.xx * other.xx
            + self.yy * other.yy
            + self.zz * other.zz
            + 2.0 * (self.xy * other.xy + self.yz * other.yz + self.zx * other.zx)
    }

    /// Frobenius norm sqrt(A : A); off-diagonals contribute twice.
    pub fn norm(&self) -> f64 {
        self.double_dot(self).sqrt()
    }

    /// Unit tensor A / ||A||, or None for a (numerically) zero tensor.
    pub fn unit(&self) -> Option<SymTensor> {
        let n = self.norm();
        if n == 0.0 {
            None
        } else {
            Some(*self * (1.0 / n))
        }
    }
}

impl Add for SymTensor {
    type Output = SymTensor;
    fn add(self, o: SymTensor) -> SymTensor {
        SymTensor {
            xx: self.xx + o.xx,
            yy: self.yy + o.yy,
            zz: self.zz + o.zz,
            xy: self.xy + o.xy,
            yz: self.yz + o.yz,
            zx: self.zx + o.zx,
        }
    }
}

impl AddAssign for SymTensor {
    fn add_assign(&mut self, o: SymTensor) {
        *self = *self + o;
    }
}

impl Sub for SymTensor {
    type Output = SymTensor;
    fn sub(self, o: SymTensor) -> SymTensor {
        self + (-o)
    }
}

impl Neg for SymTensor {
    type Output = SymTensor;
    fn neg(self) -> SymTensor {
        self * -1.0
    }
}

impl Mul<f64> for SymTensor {
    type Output = SymTensor;
    fn mul(self, k: f64) -> SymTensor {
        SymTensor {
            xx: self.xx * k,
            yy: self.yy * k,
            zz: self.zz * k,
            xy: self.xy * k,
            yz: self.yz * k,
            zx: self.zx * k,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn deviator_is_traceless() {
        let a = SymTensor::new(3.0, -1.0, 5.0, 0.2, -0.7, 1.1);
        assert_relative_eq!(a.dev().trace(), 0.0, epsilon = 1e-12);
        // dev + mean * I reassembles the tensor
        let back = a.dev() + SymTensor::iso(a.mean());
        assert_relative_eq!((back - a).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn norm_counts_off_diagonals_twice() {
        let s = SymTensor {
            xy: 2.0,
            ..SymTensor::ZERO
        };
        // ||s||^2 = s_xy^2 + s_yx^2 = 8
        assert_relative_eq!(s.norm(), 8.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn pure_shear_mises_invariant() {
        // For s with only s_xy = tau, q = sqrt(3/2)*||s|| = tau*sqrt(3).
        let tau = 7.5;
        let s = SymTensor {
            xy: tau,
            ..SymTensor::ZERO
        };
        let q = (1.5f64).sqrt() * s.norm();
        assert_relative_eq!(q, tau * 3.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn unit_of_zero_is_none() {
        assert!(SymTensor::ZERO.unit().is_none());
        let u = SymTensor::diag(1.0, -0.5, -0.5).unit().unwrap();
        assert_relative_eq!(u.norm(), 1.0, epsilon = 1e-14);
    }
}
