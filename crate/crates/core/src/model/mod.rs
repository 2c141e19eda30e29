//! Coupled stress update: EOS-driven volumetric response, incremental
//! hypoelastic deviatoric response, pore-crush cap plasticity with
//! damage-coupled strength, and the dilative-side strength surface.
//!
//! The volumetric/deviatoric time split: each increment carries its own
//! deviatoric part but the previous increment's volumetric part, so the
//! trial pressure is a pure EOS evaluation at the known trial density
//! and no EOS lookups happen inside the plastic return. Densities,
//! energy and all incremental updates below use the split increment.
//!
//! Mean stress p is tension-positive; the EOS backends speak
//! compression-positive pressure P = -p and the sign flips here.

mod mcc;

pub use mcc::{mcc_jacobian, mcc_residual, MccInput, MccSolution};

use crate::eos::{Eos, EosError};
use crate::hardening::CrushParams;
use crate::surface::{
    classify_locus, critical_state, csl_slope, f_mcc, f_yp, yp_apex, StressLocus, SurfaceError,
    SurfaceState, YieldParams,
};
use crate::tensor::SymTensor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Eos(#[from] EosError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error("return mapping did not converge: scaled residual {residual:.3e} after {iterations} iterations{}", if *guard_hit { " (cap pressure guard hit)" } else { "" })]
    NoConvergence {
        iterations: usize,
        residual: f64,
        guard_hit: bool,
    },
    /// Converged plastic multiplier came out negative: the trial state
    /// was misclassified and the step is elastic. Callers treat this as
    /// a signal, not a failure.
    #[error("negative plastic multiplier {dlambda:.3e}")]
    NegativeDlambda { dlambda: f64 },
    /// Radial return asked for a flow direction from a zero deviator.
    /// Unreachable for trial states that actually violate the strength
    /// surface below its apex; kept as a defensive error.
    #[error("zero trial deviator in radial return")]
    ZeroDeviatorReturn,
    #[error("invalid material parameter: {0}")]
    InvalidParameter(String),
}

/// How the shear modulus follows the nonlinear bulk modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShearMode {
    /// G fixed at G0.
    ConstantG,
    /// Constant Poisson ratio: G = 3 K_nr (1 - 2 nu0) / (2 (1 + nu0)).
    ConstantNu,
}

#[derive(Debug, Clone, Copy)]
pub struct ElasticParams {
    /// Reference shear modulus (Pa).
    pub g0: f64,
    /// Poisson ratio used by `ShearMode::ConstantNu`.
    pub nu0: f64,
    pub mode: ShearMode,
}

impl ElasticParams {
    pub fn new(g0: f64, nu0: f64, mode: ShearMode) -> Result<Self, ModelError> {
        if !(g0 > 0.0 && g0.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "G0 must be positive, got {g0:e}"
            )));
        }
        if mode == ShearMode::ConstantNu && !(nu0 > 0.0 && nu0 < 0.5) {
            return Err(ModelError::InvalidParameter(format!(
                "nu0 must lie in (0, 0.5) for constant-nu shear, got {nu0:e}"
            )));
        }
        Ok(Self { g0, nu0, mode })
    }
}

/// Return-mapping controls.
#[derive(Debug, Clone, Copy)]
pub struct SolverParams {
    /// Convergence tolerance on the scaled residual norm.
    pub tol: f64,
    /// Newton iteration cap.
    pub max_iter: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
        }
    }
}

/// Everything constant over a simulation. Immutable after load.
#[derive(Debug, Clone, Copy)]
pub struct MaterialParams {
    /// Initial bulk density, gas porosity included (kg/m^3).
    pub rho0: f64,
    /// Initial temperature (K).
    pub t0: f64,
    pub elastic: ElasticParams,
    pub crush: CrushParams,
    pub yld: YieldParams,
    pub solver: SolverParams,
}

impl MaterialParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "rho0 must be positive, got {:e}",
                self.rho0
            )));
        }
        if !(self.t0 >= 0.0 && self.t0.is_finite()) {
            return Err(ModelError::InvalidParameter(format!(
                "T0 must be non-negative, got {:e}",
                self.t0
            )));
        }
        if !(self.solver.tol > 0.0 && self.solver.max_iter > 0) {
            return Err(ModelError::InvalidParameter(
                "solver tolerance and iteration cap must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Evolving state of one material point.
#[derive(Debug, Clone, Copy)]
pub struct MaterialState {
    /// Cauchy stress (Pa), tension-positive.
    pub stress: SymTensor,
    /// Elastic deviatoric strain bookkeeping, s / (2 G_nr).
    pub eps_dev_e: SymTensor,
    /// Accumulated elastic volume strain (-).
    pub e_v_e: f64,
    /// Crushed porosity / damage variable (-), in [0, z_max].
    pub z: f64,
    /// Hardening force (Pa), beta_of_z(z).
    pub beta: f64,
    /// Cap pressure (Pa), negative.
    pub p_c: f64,
    /// CSL slope at the current cap.
    pub m: f64,
    /// Strength asymptote (Pa).
    pub alpha: f64,
    /// Strength intercept scale (Pa).
    pub gamma: f64,
    /// Bulk density including gas porosity (kg/m^3).
    pub rho: f64,
    /// Solid+liquid mixture density the EOS sees (kg/m^3).
    pub rho_sl: f64,
    /// Specific internal energy (J/kg).
    pub energy: f64,
    /// Temperature of the last EOS evaluation (K).
    pub temp: f64,
    /// Crush-out reached: cap frozen, strength surface only.
    pub hardened: bool,
    /// Previous step's total volume strain increment (the lagged
    /// volumetric part the split hands to this step).
    pub de_v_prev: f64,
    /// Accumulated plastic work sigma : deps_p (J/m^3), diagnostic.
    pub plastic_work: f64,
}

impl MaterialState {
    /// Mean stress (Pa), tension-positive.
    pub fn p(&self) -> f64 {
        self.stress.mean()
    }

    /// Von Mises invariant q = sqrt(3/2) ||dev sigma|| (Pa).
    pub fn q(&self) -> f64 {
        mises_q(&self.stress.dev())
    }

    /// Remaining gas porosity z_max - z.
    pub fn gas_porosity(&self, crush: &CrushParams) -> f64 {
        (crush.z_max - self.z).max(0.0)
    }
}

/// q = sqrt(3/2) ||s|| for a deviator s.
pub fn mises_q(s: &SymTensor) -> f64 {
    (1.5f64).sqrt() * s.norm()
}

/// Liquid saturation of the pore space, S = phi_l / (phi_l + phi_g).
/// No pore space at all counts as saturated.
pub fn saturation(phi_l: f64, phi_g: f64) -> f64 {
    let pores = phi_l + phi_g;
    if pores == 0.0 {
        1.0
    } else {
        phi_l / pores
    }
}

/// Which branch the step took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepBranch {
    Elastic,
    /// Radial return to the strength surface (or its apex).
    YieldYp,
    /// Coupled Newton return to the hardening cap.
    YieldMcc,
    /// Trial in the critical-state band above the shared point,
    /// clamped onto it.
    CriticalClamp,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub branch: StepBranch,
    /// Newton iterations (cap branch only).
    pub iterations: usize,
    /// Plastic multiplier (1/Pa).
    pub dlambda: f64,
    /// Crush increment.
    pub dz: f64,
    /// Flow-rule plastic volume strain increment.
    pub de_v_plastic: f64,
    /// Elastic volume strain increment actually applied to rho_sl.
    pub de_v_elastic: f64,
    /// sigma_{n+1} : deps_p - dz * beta_{n+1} (J/m^3); non-negative up
    /// to round-off for a well-posed step.
    pub dissipation: f64,
    /// Final scaled residual norm (cap branch only).
    pub residual: f64,
    /// Trial yield value: Pa^2 on the cap branch, Pa on the strength
    /// surface.
    pub f_trial: f64,
    pub p_trial: f64,
    pub q_trial: f64,
}

impl StepReport {
    fn elastic(p_tr: f64, q_tr: f64, f_tr: f64, de_v_e: f64) -> Self {
        Self {
            branch: StepBranch::Elastic,
            iterations: 0,
            dlambda: 0.0,
            dz: 0.0,
            de_v_plastic: 0.0,
            de_v_elastic: de_v_e,
            dissipation: 0.0,
            residual: 0.0,
            f_trial: f_tr,
            p_trial: p_tr,
            q_trial: q_tr,
        }
    }
}

/// A material definition bound to its EOS backend. Immutable during a
/// run; states are per point, so cells can be stepped independently.
#[derive(Debug, Clone)]
pub struct MaterialModel {
    pub params: MaterialParams,
    pub eos: Eos,
    /// When false, the cap and crush machinery are bypassed and only the
    /// strength surface acts (sensitivity-study switch).
    pub cap_enabled: bool,
}

impl MaterialModel {
    pub fn new(params: MaterialParams, eos: Eos) -> Result<Self, ModelError> {
        params.validate()?;
        Ok(Self {
            params,
            eos,
            cap_enabled: true,
        })
    }

    /// Initial mixture density rho0 / (1 - z_max): the EOS tracks the
    /// solid+liquid phases only, with the gas porosity carved out of the
    /// bulk density.
    pub fn rho_sl0(&self) -> f64 {
        self.params.rho0 / (1.0 - self.params.crush.z_max)
    }

    /// Build the initial state at (rho0, T0). Stress starts at the EOS
    /// pressure of the reference state, which is zero for a consistent
    /// parameterization; callers may warn when |p| exceeds ~1 kPa.
    pub fn init_state(&self) -> Result<MaterialState, ModelError> {
        let p = &self.params;
        let rho_sl = self.rho_sl0();
        let energy = self.eos.energy(rho_sl, p.t0)?;
        let p0 = -self.eos.pressure(rho_sl, p.t0)?;
        let surf = SurfaceState::from_cap(p.yld.p_c0, &p.yld)?;
        Ok(MaterialState {
            stress: SymTensor::iso(p0),
            eps_dev_e: SymTensor::ZERO,
            e_v_e: 0.0,
            z: 0.0,
            beta: 0.0,
            p_c: surf.p_c,
            m: surf.m,
            alpha: surf.alpha,
            gamma: surf.gamma,
            rho: p.rho0,
            rho_sl,
            energy,
            temp: p.t0,
            hardened: p.crush.z_max <= Z_MAX_SNAP,
            de_v_prev: 0.0,
            plastic_work: 0.0,
        })
    }

    /// Advance one strain increment. Mutates `state`; the report carries
    /// the branch taken and the step diagnostics. On error the state is
    /// left exactly as it was, so callers may retry with a smaller
    /// increment.
    pub fn update_step(
        &self,
        state: &mut MaterialState,
        d_eps: &SymTensor,
    ) -> Result<StepReport, ModelError> {
        let mut work = *state;
        let report = self.update_step_inner(&mut work, d_eps)?;
        *state = work;
        Ok(report)
    }

    fn update_step_inner(
        &self,
        state: &mut MaterialState,
        d_eps: &SymTensor,
    ) -> Result<StepReport, ModelError> {
        let prm = &self.params;
        let (yld, crush) = (&prm.yld, &prm.crush);

        // Time split: this step's deviatoric part, last step's
        // volumetric part.
        let de_v_split = state.de_v_prev;
        let d_eps_split = d_eps.dev() + SymTensor::iso(de_v_split / 3.0);
        state.de_v_prev = d_eps.trace();

        // Trial state: temperature from the previously converged
        // (density, energy) pair, then pressure and tangent modulus at
        // the elastically compressed trial density. Putting the split
        // volume strain into the density before the lookup is what makes
        // the return mapping's pressure relation agree with the EOS.
        let t = self
            .eos
            .temperature_from_energy(state.rho_sl, state.energy)?;
        let rho_sl_tr = state.rho_sl / (1.0 + de_v_split);
        let p_tr = -self.eos.pressure(rho_sl_tr, t)?;
        let k_nr = self.eos.tangent_bulk_modulus(rho_sl_tr, t)?;
        let g_nr = match prm.elastic.mode {
            ShearMode::ConstantG => prm.elastic.g0,
            ShearMode::ConstantNu => {
                3.0 * k_nr * (1.0 - 2.0 * prm.elastic.nu0) / (2.0 * (1.0 + prm.elastic.nu0))
            }
        };
        let s_tr = state.stress.dev() + d_eps_split.dev() * (2.0 * g_nr);
        let q_tr = mises_q(&s_tr);

        let (p_cs, q_cs) = critical_state(state.p_c, state.m);
        let locus = if self.cap_enabled {
            classify_locus(p_tr, q_tr, p_cs, q_cs, yld.locus_band(), state.hardened)
        } else {
            StressLocus::YpSide
        };

        let sigma_n = state.stress;
        let rho_n = state.rho;
        let report = match locus {
            StressLocus::CriticalState => {
                self.apply_deviatoric_return(
                    state,
                    StepBranch::CriticalClamp,
                    p_cs,
                    q_cs,
                    &s_tr,
                    q_tr,
                    g_nr,
                    de_v_split,
                    rho_sl_tr,
                    f_mcc(p_tr, q_tr, state.p_c, state.m),
                )?
            }
            StressLocus::YpSide => {
                let f_tr = f_yp(p_tr, q_tr, state.alpha, state.gamma, yld.p_y);
                if f_tr <= 0.0 {
                    self.apply_elastic(state, p_tr, &s_tr, q_tr, f_tr, de_v_split, rho_sl_tr, g_nr)
                } else {
                    let apex = yp_apex(state.alpha, state.gamma, yld.p_y);
                    if p_tr >= apex {
                        // Tensile apex clamp: stress collapses to the
                        // hydrostatic apex point, deviator drops.
                        self.apply_deviatoric_return(
                            state,
                            StepBranch::YieldYp,
                            apex,
                            0.0,
                            &s_tr,
                            q_tr,
                            g_nr,
                            de_v_split,
                            rho_sl_tr,
                            f_tr,
                        )?
                    } else {
                        let q_new = state.alpha - state.gamma * (p_tr / yld.p_y).exp();
                        self.apply_deviatoric_return(
                            state,
                            StepBranch::YieldYp,
                            p_tr,
                            q_new,
                            &s_tr,
                            q_tr,
                            g_nr,
                            de_v_split,
                            rho_sl_tr,
                            f_tr,
                        )?
                    }
                }
            }
            StressLocus::MccSide => {
                let f_tr = f_mcc(p_tr, q_tr, state.p_c, state.m);
                if f_tr <= 0.0 {
                    self.apply_elastic(state, p_tr, &s_tr, q_tr, f_tr, de_v_split, rho_sl_tr, g_nr)
                } else {
                    let input = MccInput {
                        p_tr,
                        q_tr,
                        z_n: state.z,
                        k_nr,
                        g_nr,
                        yld,
                        crush,
                    };
                    match mcc::mcc_return(&input, &prm.solver) {
                        Ok(sol) => self.apply_mcc(state, &s_tr, q_tr, t, g_nr, f_tr, sol)?,
                        Err(ModelError::NegativeDlambda { .. }) => {
                            // Misclassified locus: accept the trial
                            // elastically.
                            self.apply_elastic(
                                state, p_tr, &s_tr, q_tr, f_tr, de_v_split, rho_sl_tr, g_nr,
                            )
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        };
        // beta must track z to within the Newton tolerance scale
        debug_assert!(
            (state.beta - crush.beta_of_z(state.z)).abs() <= 1e-7 * yld.p_c0.abs(),
            "beta drifted from beta(z)"
        );

        // Densities and energy close the step: bulk density follows the
        // full split increment, and the trapezoidal work of the split
        // increment lands in specific internal energy.
        state.rho = rho_n / (1.0 + de_v_split);
        let rho_mid = 0.5 * (rho_n + state.rho);
        state.energy += 0.5 * (sigma_n + state.stress).double_dot(&d_eps_split) / rho_mid;
        state.temp = t;
        Ok(report)
    }

    /// Elastic acceptance of the trial state.
    #[allow(clippy::too_many_arguments)]
    fn apply_elastic(
        &self,
        state: &mut MaterialState,
        p_new: f64,
        s_new: &SymTensor,
        q_tr: f64,
        f_tr: f64,
        de_v_split: f64,
        rho_sl_tr: f64,
        g_nr: f64,
    ) -> StepReport {
        state.stress = *s_new + SymTensor::iso(p_new);
        state.eps_dev_e = *s_new * (1.0 / (2.0 * g_nr));
        state.e_v_e += de_v_split;
        state.rho_sl = rho_sl_tr;
        StepReport::elastic(p_new, q_tr, f_tr, de_v_split)
    }

    /// Purely deviatoric plastic correction to a prescribed (p, q):
    /// strength-surface radial return, its apex clamp, and the
    /// critical-state clamp. No crush, no cap motion, kinematic density.
    #[allow(clippy::too_many_arguments)]
    fn apply_deviatoric_return(
        &self,
        state: &mut MaterialState,
        branch: StepBranch,
        p_new: f64,
        q_new: f64,
        s_tr: &SymTensor,
        q_tr: f64,
        g_nr: f64,
        de_v_split: f64,
        rho_sl_tr: f64,
        f_tr: f64,
    ) -> Result<StepReport, ModelError> {
        let s_new = if q_new == 0.0 {
            SymTensor::ZERO
        } else {
            let n = s_tr.unit().ok_or(ModelError::ZeroDeviatorReturn)?;
            n * ((2.0f64 / 3.0).sqrt() * q_new)
        };
        let deps_p = (*s_tr - s_new) * (1.0 / (2.0 * g_nr));
        let sigma_new = s_new + SymTensor::iso(p_new);
        let work = sigma_new.double_dot(&deps_p);
        state.stress = sigma_new;
        state.eps_dev_e = s_new * (1.0 / (2.0 * g_nr));
        state.e_v_e += de_v_split;
        state.rho_sl = rho_sl_tr;
        state.plastic_work += work;
        Ok(StepReport {
            branch,
            iterations: 0,
            dlambda: 0.0,
            dz: 0.0,
            de_v_plastic: 0.0,
            de_v_elastic: de_v_split,
            dissipation: work,
            residual: 0.0,
            f_trial: f_tr,
            p_trial: p_new,
            q_trial: q_tr,
        })
    }

    /// Commit a converged cap return: stress, crush/hardening variables,
    /// rebuilt surface pair, EOS-consistent mixture density.
    #[allow(clippy::too_many_arguments)]
    fn apply_mcc(
        &self,
        state: &mut MaterialState,
        s_tr: &SymTensor,
        q_tr: f64,
        t: f64,
        g_nr: f64,
        f_tr: f64,
        sol: MccSolution,
    ) -> Result<StepReport, ModelError> {
        let crush = &self.params.crush;
        let yld = &self.params.yld;

        let mut z_new = sol.z_new;
        let mut beta_new = sol.beta;
        if z_new >= crush.z_max - Z_MAX_SNAP {
            z_new = crush.z_max;
            beta_new = crush.beta_of_z(z_new);
            state.hardened = true;
        }
        let dz_applied = z_new - state.z;

        let surf = SurfaceState::from_cap(yld.p_c0 - beta_new, yld)?;

        let n_tr = s_tr.unit();
        let s_new = match n_tr {
            Some(n) => n * ((2.0f64 / 3.0).sqrt() * sol.q),
            // Hydrostatic trial: converged q is zero up to round-off.
            None => SymTensor::ZERO,
        };
        let sigma_new = s_new + SymTensor::iso(sol.p);

        // Flow-rule plastic strain increments at the converged state,
        // with the CSL slope the solve itself used.
        let p_c_conv = yld.p_c0 - sol.beta;
        let m_conv = csl_slope(p_c_conv, yld);
        let de_v_p = sol.dlambda * (2.0 * sol.p - p_c_conv);
        let deps_p_dev = match n_tr {
            Some(n) => n * (6.0f64.sqrt() * sol.q / (m_conv * m_conv) * sol.dlambda),
            None => SymTensor::ZERO,
        };
        let deps_p = deps_p_dev + SymTensor::iso(de_v_p / 3.0);
        let work = sigma_new.double_dot(&deps_p);
        let dissipation = work - dz_applied * beta_new;

        // Mixture density consistent with the returned pressure at the
        // step's temperature.
        let rho_sl_new = self.eos.density_from_pressure(-sol.p, t)?;
        let de_v_e = state.rho_sl / rho_sl_new - 1.0;

        state.stress = sigma_new;
        state.eps_dev_e = s_new * (1.0 / (2.0 * g_nr));
        state.e_v_e += de_v_e;
        state.z = z_new;
        state.beta = beta_new;
        state.p_c = surf.p_c;
        state.m = surf.m;
        state.alpha = surf.alpha;
        state.gamma = surf.gamma;
        state.rho_sl = rho_sl_new;
        state.plastic_work += work;

        Ok(StepReport {
            branch: StepBranch::YieldMcc,
            iterations: sol.iterations,
            dlambda: sol.dlambda,
            dz: dz_applied,
            de_v_plastic: de_v_p,
            de_v_elastic: de_v_e,
            dissipation,
            residual: sol.residual,
            f_trial: f_tr,
            p_trial: sol.p,
            q_trial: q_tr,
        })
    }
}

/// Snap width for the crush-out flag: z within this of z_max is clamped.
const Z_MAX_SNAP: f64 = 1e-12;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::AnalyticEos;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const GPA: f64 = 1.0e9;

    /// Bulk modulus matching a shear modulus at Poisson ratio 0.25.
    fn k_from_g(g0: f64) -> f64 {
        2.0 * g0 * 1.25 / 1.5
    }

    /// Dry-alluvium-like material point: 20% crushable porosity, deep cap.
    fn matpoint_model(gamma0_eos: f64) -> MaterialModel {
        let rho0 = 1608.80;
        let z_max = 0.20;
        let elastic = ElasticParams::new(4.557 * GPA, 0.25, ShearMode::ConstantG).unwrap();
        let crush = CrushParams::new(1.0 * GPA, 0.5e6, 50.0, z_max).unwrap();
        let yld = YieldParams::new(0.6396 * GPA, 0.6396 * GPA, 0.35 * GPA, 1.0, -0.95 * GPA).unwrap();
        let params = MaterialParams {
            rho0,
            t0: 298.15,
            elastic,
            crush,
            yld,
            solver: SolverParams::default(),
        };
        let eos = Eos::Analytic(AnalyticEos::new(
            rho0 / (1.0 - z_max),
            298.15,
            k_from_g(4.557 * GPA),
            gamma0_eos,
            1000.0,
        ));
        MaterialModel::new(params, eos).unwrap()
    }

    /// Tuff-like near-saturated material: 2.17% porosity, shallow cap.
    fn npe_model() -> MaterialModel {
        let rho0 = 1910.25;
        let z_max = 0.0217;
        let elastic = ElasticParams::new(3.972 * GPA, 0.25, ShearMode::ConstantG).unwrap();
        let crush = CrushParams::new(7.0 * GPA, 2.0e6, 255.0, z_max).unwrap();
        let yld =
            YieldParams::new(0.1617 * GPA, 0.1436 * GPA, 0.175 * GPA, 1.0, -0.095 * GPA).unwrap();
        let params = MaterialParams {
            rho0,
            t0: 298.15,
            elastic,
            crush,
            yld,
            solver: SolverParams::default(),
        };
        let eos = Eos::Analytic(AnalyticEos::new(
            rho0 / (1.0 - z_max),
            298.15,
            k_from_g(3.972 * GPA),
            1.0,
            1000.0,
        ));
        MaterialModel::new(params, eos).unwrap()
    }

    #[test]
    fn init_state_reference_densities() {
        let m = matpoint_model(1.0);
        let s = m.init_state().unwrap();
        assert_relative_eq!(m.rho_sl0(), 2011.0, max_relative = 1e-12);
        assert_relative_eq!(s.rho_sl, 2011.0, max_relative = 1e-12);
        assert_eq!(s.rho, 1608.80);
        assert!(s.stress.norm() < 1e-6);
        assert!(!s.hardened);
        assert_eq!(s.z, 0.0);
        assert_eq!(s.p_c, -0.95 * GPA);

        let n = npe_model();
        assert_relative_eq!(n.rho_sl0(), 1952.62, max_relative = 1e-5);
        let sn = n.init_state().unwrap();
        assert_relative_eq!(sn.energy, 1000.0 * 298.15, max_relative = 1e-12);
        assert_eq!(sn.temp, 298.15);
    }

    #[test]
    fn saturated_material_starts_hardened() {
        let mut m = matpoint_model(1.0);
        m.params.crush.z_max = 0.0;
        let s = m.init_state().unwrap();
        assert_eq!(s.rho_sl, m.params.rho0);
        assert!(s.hardened);
        assert_eq!(s.gas_porosity(&m.params.crush), 0.0);
    }

    #[test]
    fn zero_increment_is_a_no_op() {
        let m = matpoint_model(1.0);
        let mut s = m.init_state().unwrap();
        let r = m.update_step(&mut s, &SymTensor::ZERO).unwrap();
        assert_eq!(r.branch, StepBranch::Elastic);
        assert_eq!(r.dissipation, 0.0);
        assert_eq!(s.rho, m.params.rho0);
        assert!(s.stress.norm() < 1e-6);
        assert_relative_eq!(s.energy, 1000.0 * 298.15, max_relative = 1e-12);
    }

    /// The time split hands each step the previous step's volume strain:
    /// the stress response to a volumetric increment appears one step
    /// after the increment is applied.
    #[test]
    fn volume_strain_lags_one_step() {
        let m = matpoint_model(1.0);
        let mut s = m.init_state().unwrap();
        let dv = -1e-3;
        let step = SymTensor::iso(dv / 3.0);

        let r1 = m.update_step(&mut s, &step).unwrap();
        assert_eq!(r1.de_v_elastic, 0.0);
        assert_eq!(s.rho, m.params.rho0);
        assert!(s.p().abs() < 1e-6, "volumetric input is deferred a step");

        let r2 = m.update_step(&mut s, &SymTensor::ZERO).unwrap();
        assert_eq!(r2.de_v_elastic, dv);
        assert_relative_eq!(s.rho, m.params.rho0 / (1.0 + dv), max_relative = 1e-14);
        let k0 = k_from_g(4.557 * GPA);
        let p_expect = -k0 * (1.0 / (1.0 + dv) - 1.0);
        assert_relative_eq!(s.p(), p_expect, max_relative = 1e-3);

        let r3 = m.update_step(&mut s, &SymTensor::ZERO).unwrap();
        assert_eq!(r3.de_v_elastic, 0.0);
        assert_relative_eq!(s.rho, m.params.rho0 / (1.0 + dv), max_relative = 1e-14);
    }

    /// Small shear on the tuff-like material stays elastic; the
    /// dry-alluvium parameters have alpha0 = gamma0 and no shear
    /// strength at all at zero pressure.
    #[test]
    fn pure_shear_elastic_trial() {
        let m = npe_model();
        let mut s = m.init_state().unwrap();
        let exy = 1e-5;
        let d = SymTensor::new(0.0, 0.0, 0.0, exy, 0.0, 0.0);
        let r = m.update_step(&mut s, &d).unwrap();
        assert_eq!(r.branch, StepBranch::Elastic);
        let g0 = m.params.elastic.g0;
        assert_relative_eq!(s.q(), 3f64.sqrt() * 2.0 * g0 * exy, max_relative = 1e-12);
        assert!(s.p().abs() < 1e-6);

        let m2 = matpoint_model(1.0);
        let mut s2 = m2.init_state().unwrap();
        let r2 = m2.update_step(&mut s2, &d).unwrap();
        assert_eq!(r2.branch, StepBranch::YieldYp);
        assert!(s2.q() < 1e-6, "zero strength at zero pressure");
    }

    #[test]
    fn strength_surface_radial_return() {
        let m = npe_model();
        let mut s = m.init_state().unwrap();
        let exy = 5e-3;
        let d = SymTensor::new(0.0, 0.0, 0.0, exy, 0.0, 0.0);
        let r = m.update_step(&mut s, &d).unwrap();
        assert_eq!(r.branch, StepBranch::YieldYp);

        let g0 = m.params.elastic.g0;
        let q_tr = 3f64.sqrt() * 2.0 * g0 * exy;
        assert_relative_eq!(r.q_trial, q_tr, max_relative = 1e-12);

        // At zero pressure the surface sits at alpha - gamma.
        let q_new = (0.1617 - 0.1436) * GPA;
        assert_relative_eq!(s.q(), q_new, max_relative = 1e-9);
        assert!(s.p().abs() < 1e-6);

        // Return is radial: deviator keeps the trial direction.
        let dir = s.stress.dev().unit().unwrap();
        assert_relative_eq!(dir.xy, (0.5f64).sqrt(), max_relative = 1e-12);
        assert!(dir.xx.abs() < 1e-14 && dir.yz.abs() < 1e-14);

        let d_expect = q_new * (q_tr - q_new) / (3.0 * g0);
        assert_relative_eq!(r.dissipation, d_expect, max_relative = 1e-9);
        assert_relative_eq!(s.plastic_work, d_expect, max_relative = 1e-9);
    }

    #[test]
    fn tensile_apex_clamp() {
        let m = npe_model();
        let mut s = m.init_state().unwrap();
        let grow = SymTensor::iso(0.01 / 3.0);
        m.update_step(&mut s, &grow).unwrap();
        m.update_step(&mut s, &SymTensor::ZERO).unwrap();
        let r = m.update_step(&mut s, &SymTensor::ZERO).unwrap();
        assert_eq!(r.branch, StepBranch::YieldYp);
        // apex = P_y ln(alpha/gamma)
        let apex = 0.175 * GPA * (0.1617f64 / 0.1436).ln();
        assert_relative_eq!(s.p(), apex, max_relative = 1e-9);
        assert_eq!(s.q(), 0.0);
        assert_eq!(r.dissipation, 0.0);
    }

    /// A closed small-strain loading loop with a temperature-decoupled
    /// EOS walks energy, temperature, stress and densities back to their
    /// initial values: the trapezoidal work bookkeeping is reversible.
    #[test]
    fn elastic_cycle_is_reversible() {
        let m = matpoint_model(0.0);
        let mut s = m.init_state().unwrap();
        let e0 = s.energy;
        let n = 30;
        let d = -1e-4;
        let load = SymTensor::iso(d / 3.0);
        let unload = SymTensor::iso(-d / (1.0 + d) / 3.0);
        for _ in 0..n {
            let r = m.update_step(&mut s, &load).unwrap();
            assert_eq!(r.branch, StepBranch::Elastic);
        }
        for _ in 0..n {
            let r = m.update_step(&mut s, &unload).unwrap();
            assert_eq!(r.branch, StepBranch::Elastic);
        }
        // two flushes: one to commit the deferred volume strain, one so
        // the reported temperature reflects the settled energy
        m.update_step(&mut s, &SymTensor::ZERO).unwrap();
        m.update_step(&mut s, &SymTensor::ZERO).unwrap();

        assert_relative_eq!(s.energy, e0, max_relative = 1e-8);
        assert_relative_eq!(s.temp, 298.15, max_relative = 1e-8);
        assert_relative_eq!(s.rho, m.params.rho0, max_relative = 1e-12);
        assert_relative_eq!(s.rho_sl, m.rho_sl0(), max_relative = 1e-12);
        assert!(s.stress.norm() < 1e-3);
        // summed engineering increments close only to second order
        assert!(s.e_v_e.abs() < 2.0 * n as f64 * d * d);
    }

    /// Hydrostatic compression crushes all the porosity out, the crush
    /// variable saturating exactly at z_max with the flow-rule identity
    /// dz = -de_v^p holding step by step, and unloading leaves z frozen.
    #[test]
    fn hydrostatic_crush_runs_to_crush_out() {
        let m = matpoint_model(1.0);
        let mut s = m.init_state().unwrap();
        let step = SymTensor::iso(-2e-3 / 3.0);
        let mut sum_de_v_p = 0.0;
        let mut z_prev = 0.0;
        let mut steps = 0;
        while !s.hardened {
            let r = m.update_step(&mut s, &step).unwrap();
            assert!(r.dissipation >= -1e-12 * s.stress.norm().max(1.0));
            assert!(s.z >= z_prev, "crush never reverses");
            if r.branch == StepBranch::YieldMcc && !s.hardened {
                // on the hydrostat the crush increment is exactly the
                // negative plastic volume strain increment
                assert_relative_eq!(r.dz, -r.de_v_plastic, max_relative = 1e-6);
            }
            sum_de_v_p += r.de_v_plastic;
            z_prev = s.z;
            steps += 1;
            assert!(steps < 5000, "crush-out never reached");
        }
        assert_eq!(s.z, 0.20);
        assert!((sum_de_v_p + 0.20).abs() < 2e-3);
        assert!(s.p() < -5.0 * GPA, "cap had to travel deep to crush out");

        // Unload: expansion off the crushed state is elastic, no
        // crush recovery, the cap stays frozen.
        let p_c_frozen = s.p_c;
        let back = SymTensor::iso(2e-3 / 3.0);
        for _ in 0..50 {
            let r = m.update_step(&mut s, &back).unwrap();
            assert_eq!(r.dz, 0.0);
        }
        assert_eq!(s.z, 0.20);
        assert_eq!(s.p_c, p_c_frozen);
        assert!(s.hardened);
    }

    #[test]
    fn cap_disabled_skips_crush() {
        let mut m = matpoint_model(1.0);
        m.cap_enabled = false;
        let mut s = m.init_state().unwrap();
        let step = SymTensor::iso(-2e-3 / 3.0);
        for _ in 0..200 {
            let r = m.update_step(&mut s, &step).unwrap();
            assert_eq!(r.branch, StepBranch::Elastic);
            assert_eq!(r.dz, 0.0);
        }
        assert_eq!(s.z, 0.0);
        assert!(s.p() < -1.0 * GPA, "EOS alone carries the compression");
    }

    /// Random mixed loading walks through elastic, cap and strength
    /// branches without convergence failures, never produces negative
    /// dissipation beyond round-off, and never un-crushes.
    #[test]
    fn random_walk_dissipation_never_negative() {
        let m = npe_model();
        let mut s = m.init_state().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut seen_mcc = false;
        let mut seen_yp = false;
        let mut z_prev = 0.0;
        for _ in 0..400 {
            let dv = rng.gen_range(-1.5e-3..5e-4);
            let g = 5e-4;
            let d = SymTensor::new(
                dv / 3.0 + rng.gen_range(-g..g),
                dv / 3.0 + rng.gen_range(-g..g),
                dv / 3.0,
                rng.gen_range(-g..g),
                0.0,
                rng.gen_range(-g..g),
            );
            let r = m.update_step(&mut s, &d).unwrap();
            assert!(
                r.dissipation >= -1e-12 * s.stress.norm().max(1.0),
                "dissipation {} at sigma {:e}",
                r.dissipation,
                s.stress.norm()
            );
            assert!(s.z >= z_prev && s.z <= m.params.crush.z_max + 1e-15);
            z_prev = s.z;
            seen_mcc |= r.branch == StepBranch::YieldMcc;
            seen_yp |= r.branch == StepBranch::YieldYp || r.branch == StepBranch::CriticalClamp;
        }
        assert!(seen_mcc, "walk never hit the cap");
        assert!(seen_yp, "walk never hit the strength surface");
    }

    #[test]
    fn saturation_helper() {
        assert_relative_eq!(saturation(0.326, 0.20), 0.62, max_relative = 1e-2);
        assert_eq!(saturation(0.3, 0.0), 1.0);
        assert_eq!(saturation(0.0, 0.0), 1.0);
    }

    #[test]
    fn parameter_validation_rejects_bad_inputs() {
        assert!(ElasticParams::new(-1.0, 0.25, ShearMode::ConstantG).is_err());
        assert!(ElasticParams::new(1e9, 0.5, ShearMode::ConstantNu).is_err());
        // nu is ignored when G is held constant
        assert!(ElasticParams::new(1e9, 0.9, ShearMode::ConstantG).is_ok());

        let mut p = matpoint_model(1.0).params;
        p.rho0 = 0.0;
        assert!(p.validate().is_err());
    }
}
