//! Closest-point return to the hardening cap: a damped Newton solve on
//! the four unknowns x = {mu, p, q, beta}, where mu := G_nr * dlambda
//! keeps the multiplier dimensionless. The residual couples the cap
//! value, the pressure and deviator updates, and consistency between
//! the hardening force and the crush increment
//!
//! ```text
//! dz = dlambda * (2 q^2/M^3 * X p_c0 M0/p_c^2  -  p)
//! ```
//!
//! whose exponential hardening makes the system stiff enough to need
//! the step-halving safeguard. Residual rows and unknowns are scaled by
//! |p_c0| so tolerances are dimensionless.

use super::{ModelError, SolverParams};
use crate::hardening::CrushParams;
use crate::surface::YieldParams;
use nalgebra::{Matrix4, Vector4};

/// Frozen inputs of one cap return.
#[derive(Debug, Clone, Copy)]
pub struct MccInput<'a> {
    /// Trial mean stress (Pa), tension-positive.
    pub p_tr: f64,
    /// Trial von Mises invariant (Pa).
    pub q_tr: f64,
    /// Crush variable at the start of the step.
    pub z_n: f64,
    /// Tangent bulk modulus (Pa).
    pub k_nr: f64,
    /// Shear modulus (Pa).
    pub g_nr: f64,
    pub yld: &'a YieldParams,
    pub crush: &'a CrushParams,
}

/// Converged return data.
#[derive(Debug, Clone, Copy)]
pub struct MccSolution {
    /// Dimensionless multiplier G_nr * dlambda.
    pub mu: f64,
    /// Plastic multiplier (1/Pa).
    pub dlambda: f64,
    /// Returned mean stress (Pa).
    pub p: f64,
    /// Returned von Mises invariant (Pa).
    pub q: f64,
    /// Hardening force consistent with the crush increment (Pa).
    pub beta: f64,
    /// z_n plus the converged crush increment.
    pub z_new: f64,
    /// Newton steps taken.
    pub iterations: usize,
    /// Scaled residual norm at exit.
    pub residual: f64,
}

/// CSL slope and its beta-derivative at a hardening force.
fn slope_terms(inp: &MccInput, beta: f64) -> (f64, f64, f64) {
    let yld = inp.yld;
    let p_c = yld.p_c0 - beta;
    let m = (yld.x_damage * yld.p_c0 / p_c + (1.0 - yld.x_damage)) * yld.m0;
    // dM/dbeta through dp_c/dbeta = -1
    let dm_dbeta = yld.x_damage * yld.p_c0 * yld.m0 / (p_c * p_c);
    (p_c, m, dm_dbeta)
}

/// Crush increment implied by x.
fn dz_of(x: &[f64; 4], inp: &MccInput) -> f64 {
    let [mu, p, q, beta] = *x;
    let (_, m, dm_dbeta) = slope_terms(inp, beta);
    mu / inp.g_nr * (2.0 * q * q / (m * m * m) * dm_dbeta - p)
}

/// Residual of the coupled return at x = [mu, p, q, beta]:
/// cap value (Pa^2), pressure update (Pa), deviator update (Pa),
/// hardening consistency (Pa).
pub fn mcc_residual(x: &[f64; 4], inp: &MccInput) -> [f64; 4] {
    let [mu, p, q, beta] = *x;
    let (p_c, m, _) = slope_terms(inp, beta);
    let kg = inp.k_nr / inp.g_nr;
    let dz = dz_of(x, inp);
    let c = inp.crush;
    let beta_target = c.h * (inp.z_n + dz) + c.beta_max * ((c.omega * (inp.z_n + dz)).exp() - 1.0);
    [
        (q / m) * (q / m) + p * (p - p_c),
        p * (1.0 + 2.0 * mu * kg) - inp.p_tr - mu * p_c * kg,
        q * (1.0 + 6.0 * mu / (m * m)) - inp.q_tr,
        beta - beta_target,
    ]
}

/// Analytic Jacobian d(residual)/d[mu, p, q, beta], row-major.
pub fn mcc_jacobian(x: &[f64; 4], inp: &MccInput) -> [[f64; 4]; 4] {
    let [mu, p, q, beta] = *x;
    let (p_c, m, dm_dbeta) = slope_terms(inp, beta);
    let g = inp.g_nr;
    let kg = inp.k_nr / g;
    let c = inp.crush;

    let m2 = m * m;
    let m3 = m2 * m;
    let dz = dz_of(x, inp);
    // slope of the hardening force at z_n + dz
    let hp = c.h + c.beta_max * c.omega * (c.omega * (inp.z_n + dz)).exp();

    // partials of dz; dm_dbeta itself depends on beta through p_c
    let ddmdb_dbeta = 2.0 * inp.yld.x_damage * inp.yld.p_c0 * inp.yld.m0 / (p_c * p_c * p_c);
    let ddz_dmu = (2.0 * q * q / m3 * dm_dbeta - p) / g;
    let ddz_dp = -mu / g;
    let ddz_dq = mu / g * 4.0 * q / m3 * dm_dbeta;
    let ddz_dbeta = mu / g * (2.0 * q * q / m3 * ddmdb_dbeta
        - 6.0 * q * q / (m3 * m) * dm_dbeta * dm_dbeta);

    [
        [
            0.0,
            2.0 * p - p_c,
            2.0 * q / m2,
            p - 2.0 * q * q / m3 * dm_dbeta,
        ],
        [(2.0 * p - p_c) * kg, 1.0 + 2.0 * mu * kg, 0.0, mu * kg],
        [
            6.0 * q / m2,
            0.0,
            1.0 + 6.0 * mu / m2,
            -12.0 * q * mu / m3 * dm_dbeta,
        ],
        [-hp * ddz_dmu, -hp * ddz_dp, -hp * ddz_dq, 1.0 - hp * ddz_dbeta],
    ]
}

/// Damped Newton solve from x0 = [0, p_tr, q_tr, beta(z_n)].
///
/// Safeguards: up to 10 step halvings when the scaled residual norm
/// fails to decrease (or leaves the finite range), a hardening-force
/// corridor that keeps p_c in [50 p_c0, p_c0/2] during iteration (runaway
/// beyond it is NoConvergence), and a final sign check on the
/// multiplier that reports a misclassified elastic state as
/// NegativeDlambda.
pub fn mcc_return(inp: &MccInput, solver: &SolverParams) -> Result<MccSolution, ModelError> {
    let ps = inp.yld.p_c0.abs();
    let r_scale = [1.0 / (ps * ps), 1.0 / ps, 1.0 / ps, 1.0 / ps];
    let col_scale = [1.0, ps, ps, ps];
    let beta_cap = 49.0 * ps;
    let beta_floor = -0.5 * ps;

    let scaled_norm = |r: &[f64; 4]| -> f64 {
        r.iter()
            .zip(r_scale)
            .map(|(v, s)| (v * s) * (v * s))
            .sum::<f64>()
            .sqrt()
    };

    let beta_tr = inp.crush.beta_of_z(inp.z_n);
    let mut x = [0.0, inp.p_tr, inp.q_tr, beta_tr];
    let mut rn = scaled_norm(&mcc_residual(&x, inp));
    let mut iterations = 0usize;
    let mut guard_hit = false;

    while rn > solver.tol {
        if iterations >= solver.max_iter {
            return Err(ModelError::NoConvergence {
                iterations,
                residual: rn,
                guard_hit,
            });
        }
        let j = mcc_jacobian(&x, inp);
        let js = Matrix4::from_fn(|i, k| j[i][k] * r_scale[i] * col_scale[k]);
        let r = mcc_residual(&x, inp);
        let rs = Vector4::from_fn(|i, _| -r[i] * r_scale[i]);
        let Some(du) = js.lu().solve(&rs) else {
            return Err(ModelError::NoConvergence {
                iterations,
                residual: rn,
                guard_hit,
            });
        };
        let dx: Vec<f64> = (0..4).map(|k| du[k] * col_scale[k]).collect();

        // Step halving: first strict descent wins; a finite uphill step
        // at the smallest scale is still accepted so Newton can escape
        // shallow humps.
        let mut accepted = None;
        let mut fallback = None;
        let mut t = 1.0;
        for _ in 0..=10 {
            let x_try = [
                x[0] + t * dx[0],
                x[1] + t * dx[1],
                x[2] + t * dx[2],
                x[3] + t * dx[3],
            ];
            if x_try[3] > beta_cap || x_try[3] < beta_floor {
                guard_hit = true;
                t *= 0.5;
                continue;
            }
            let rn_try = scaled_norm(&mcc_residual(&x_try, inp));
            if rn_try.is_finite() {
                if rn_try < rn {
                    accepted = Some((x_try, rn_try));
                    break;
                }
                fallback = Some((x_try, rn_try));
            }
            t *= 0.5;
        }
        let Some((x_new, rn_new)) = accepted.or(fallback) else {
            return Err(ModelError::NoConvergence {
                iterations,
                residual: rn,
                guard_hit,
            });
        };
        x = x_new;
        rn = rn_new;
        iterations += 1;
    }

    let mu = x[0];
    if mu < -solver.tol {
        return Err(ModelError::NegativeDlambda {
            dlambda: mu / inp.g_nr,
        });
    }
    let mu = mu.max(0.0);
    let dz = dz_of(&[mu, x[1], x[2], x[3]], inp);
    Ok(MccSolution {
        mu,
        dlambda: mu / inp.g_nr,
        p: x[1],
        q: x[2],
        beta: x[3],
        z_new: inp.z_n + dz,
        iterations,
        residual: rn,
    })
}
