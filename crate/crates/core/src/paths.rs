//! Strain-driven material-point loading programs: hydrostatic
//! compression and unloading for crush curves, and triaxial compression
//! at fixed confining pressure.
//!
//! The model is rate independent, so programs are parameterized by
//! strain increments and step counts; the triaxial t column is a pseudo
//! time that just counts steps by default.

use crate::model::{MaterialModel, MaterialState, ModelError};
use crate::tensor::SymTensor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("lateral stress control failed at step {step}: target {target:.6e} Pa, best miss {miss:.3e} Pa")]
    LateralControlFailure { step: usize, target: f64, miss: f64 },
    #[error("pressure ramp did not settle: |p| = {pressure:.6e} Pa after {steps} steps")]
    TargetNotReached { steps: usize, pressure: f64 },
    #[error("invalid loading program: {0}")]
    InvalidProgram(String),
}

/// What a hydrostatic program drives toward.
#[derive(Debug, Clone, Copy)]
pub enum HydroTarget {
    /// Total volumetric strain (negative = compression).
    VolStrain(f64),
    /// Mean-stress magnitude (Pa, positive = compression); reached by
    /// adaptive density targeting through the EOS.
    Pressure(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct HydrostaticProgram {
    pub target: HydroTarget,
    /// Step count for a volumetric-strain target; step cap for a
    /// pressure target.
    pub n_steps: usize,
    /// Reverse the applied increments after loading, stopping once the
    /// mean stress returns to (nearly) zero.
    pub unload: bool,
}

impl HydrostaticProgram {
    fn validate(&self) -> Result<(), PathError> {
        if self.n_steps == 0 {
            return Err(PathError::InvalidProgram("n_steps must be at least 1".into()));
        }
        match self.target {
            HydroTarget::VolStrain(e) if !e.is_finite() => Err(PathError::InvalidProgram(
                format!("volumetric strain target must be finite, got {e:e}"),
            )),
            HydroTarget::Pressure(p) if !(p >= 0.0 && p.is_finite()) => {
                Err(PathError::InvalidProgram(format!(
                    "pressure target must be non-negative, got {p:e}"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// One output row of a hydrostatic run. `e_v` is the committed
/// engineering volume change v/v0 - 1; `p` is tension-positive mean
/// stress and `press` its compression-positive mirror.
#[derive(Debug, Clone, Copy)]
pub struct HydroRow {
    pub step: usize,
    pub e_v: f64,
    pub p: f64,
    pub press: f64,
    pub rho: f64,
    pub rho_sl: f64,
    pub z: f64,
    pub p_c: f64,
}

impl HydroRow {
    pub const CSV_HEADER: &'static str = "step,e_v,p,P,rho,rho_sl,z,p_c";

    fn of(step: usize, rho0: f64, s: &MaterialState) -> Self {
        Self {
            step,
            e_v: rho0 / s.rho - 1.0,
            p: s.p(),
            press: -s.p(),
            rho: s.rho,
            rho_sl: s.rho_sl,
            z: s.z,
            p_c: s.p_c,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            self.step, self.e_v, self.p, self.press, self.rho, self.rho_sl, self.z, self.p_c
        )
    }
}

/// Largest volumetric strain increment the adaptive pressure ramp will
/// take in one step.
const RAMP_MAX_DE: f64 = 2e-3;

/// Apply one equal-triaxial increment of volume strain de_v.
fn hydro_step(
    model: &MaterialModel,
    state: &mut MaterialState,
    de_v: f64,
) -> Result<(), ModelError> {
    model.update_step(state, &SymTensor::iso(de_v / 3.0))?;
    Ok(())
}

/// Drive the state to mean stress -p_mag by retargeting the mixture
/// density through the EOS each step. Returns the applied increments.
/// The closure sees the state after every step so callers can record.
fn ramp_to_pressure(
    model: &MaterialModel,
    state: &mut MaterialState,
    p_mag: f64,
    tol: f64,
    step_cap: usize,
    mut after_step: impl FnMut(&MaterialState),
) -> Result<Vec<f64>, PathError> {
    let mut applied = Vec::new();
    for _ in 0..step_cap {
        let p_ok = (state.p() + p_mag).abs() <= tol;
        if p_ok && state.de_v_prev == 0.0 {
            return Ok(applied);
        }
        let de = if p_ok {
            0.0 // flush the deferred increment so the check settles
        } else {
            let rho_target = model
                .eos
                .density_from_pressure(p_mag, state.temp)
                .map_err(ModelError::from)?;
            // density with the deferred increment folded in
            let rho_now = state.rho_sl / (1.0 + state.de_v_prev);
            (rho_now / rho_target - 1.0).clamp(-RAMP_MAX_DE, RAMP_MAX_DE)
        };
        hydro_step(model, state, de)?;
        applied.push(de);
        after_step(state);
    }
    Err(PathError::TargetNotReached {
        steps: step_cap,
        pressure: state.p().abs(),
    })
}

/// Run a hydrostatic program from the model's initial state.
pub fn run_hydrostatic(
    model: &MaterialModel,
    program: &HydrostaticProgram,
) -> Result<Vec<HydroRow>, PathError> {
    program.validate()?;
    let rho0 = model.params.rho0;
    let mut state = model.init_state()?;
    let mut rows = vec![HydroRow::of(0, rho0, &state)];
    let mut step = 0;
    let record = |step: usize, s: &MaterialState, rows: &mut Vec<HydroRow>| {
        rows.push(HydroRow::of(step, rho0, s));
    };

    // Load.
    let applied: Vec<f64> = match program.target {
        HydroTarget::VolStrain(e_v) => {
            let de = e_v / program.n_steps as f64;
            for _ in 0..program.n_steps {
                hydro_step(model, &mut state, de)?;
                step += 1;
                record(step, &state, &mut rows);
            }
            // flush the deferred final increment
            hydro_step(model, &mut state, 0.0)?;
            step += 1;
            record(step, &state, &mut rows);
            vec![de; program.n_steps]
        }
        HydroTarget::Pressure(p_mag) => {
            let tol = (1e-3 * p_mag).max(1.0);
            ramp_to_pressure(model, &mut state, p_mag, tol, program.n_steps, |s| {
                step += 1;
                rows.push(HydroRow::of(step, rho0, s));
            })?
        }
    };

    // Unload: replay exact inverses of the applied increments, newest
    // first. Stop before the step that would carry the mixture below
    // its zero-pressure density, so the unload toe never swings tensile.
    if program.unload {
        for &de in applied.iter().rev() {
            let u = -de / (1.0 + de);
            let rho_zero = model
                .eos
                .density_from_pressure(0.0, state.temp)
                .map_err(ModelError::from)?;
            let rho_pending = state.rho_sl / (1.0 + state.de_v_prev);
            if rho_pending / (1.0 + u) < rho_zero {
                break;
            }
            hydro_step(model, &mut state, u)?;
            step += 1;
            record(step, &state, &mut rows);
        }
        hydro_step(model, &mut state, 0.0)?;
        step += 1;
        record(step, &state, &mut rows);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy)]
pub struct TriaxialProgram {
    /// Confining pressure magnitude (Pa, compression positive).
    pub confinement: f64,
    /// Axial strain magnitude applied per step (compressive).
    pub axial_step: f64,
    /// Number of axial (phase 2) steps.
    pub n_steps: usize,
    /// Pseudo time per step for the t column.
    pub dt: f64,
}

impl TriaxialProgram {
    fn validate(&self) -> Result<(), PathError> {
        if !(self.confinement >= 0.0 && self.confinement.is_finite()) {
            return Err(PathError::InvalidProgram(format!(
                "confinement must be non-negative, got {:e}",
                self.confinement
            )));
        }
        if !(self.axial_step > 0.0 && self.axial_step.is_finite()) {
            return Err(PathError::InvalidProgram(format!(
                "axial_step must be positive, got {:e}",
                self.axial_step
            )));
        }
        if self.n_steps == 0 || self.dt <= 0.0 {
            return Err(PathError::InvalidProgram(
                "n_steps and dt must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One output row of a triaxial run.
#[derive(Debug, Clone, Copy)]
pub struct TriaxRow {
    pub step: usize,
    pub t: f64,
    pub eps_axial: f64,
    pub p: f64,
    pub q: f64,
    pub z: f64,
    pub p_c: f64,
    pub m: f64,
    pub alpha: f64,
}

impl TriaxRow {
    pub const CSV_HEADER: &'static str = "step,t,eps_axial,p,q,z,p_c,m,alpha";

    fn of(step: usize, dt: f64, eps_axial: f64, s: &MaterialState) -> Self {
        Self {
            step,
            t: step as f64 * dt,
            eps_axial,
            p: s.p(),
            q: s.q(),
            z: s.z,
            p_c: s.p_c,
            m: s.m,
            alpha: s.alpha,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            self.step, self.t, self.eps_axial, self.p, self.q, self.z, self.p_c, self.m, self.alpha
        )
    }
}

/// A finished triaxial run: the rows, and where phase 2 starts in them.
#[derive(Debug, Clone)]
pub struct TriaxialRun {
    pub rows: Vec<TriaxRow>,
    /// Steps spent ramping to confinement; rows[phase1_steps..] are the
    /// axial loading phase.
    pub phase1_steps: usize,
}

/// Step cap for the confinement ramp.
const PHASE1_CAP: usize = 20_000;
/// Secant iteration cap for the lateral stress control.
const LATERAL_MAX_ITER: usize = 30;

/// Run a triaxial program: ramp hydrostatically to the confining
/// pressure, then march axial strain while a secant iteration on the
/// lateral strain increment holds the lateral stress at the confinement
/// (within 0.1%, floor 1 Pa).
pub fn run_triaxial(
    model: &MaterialModel,
    program: &TriaxialProgram,
) -> Result<TriaxialRun, PathError> {
    program.validate()?;
    let conf = program.confinement;
    let mut state = model.init_state()?;
    let mut rows = vec![TriaxRow::of(0, program.dt, 0.0, &state)];
    let mut eps_axial = 0.0;
    let mut step = 0;

    // Phase 1: hydrostatic ramp to the confining pressure.
    let tol_p = (1e-3 * conf).max(1.0);
    if conf > 0.0 {
        ramp_to_pressure(model, &mut state, conf, tol_p, PHASE1_CAP, |s| {
            step += 1;
            eps_axial = (model.params.rho0 / s.rho - 1.0) / 3.0;
            rows.push(TriaxRow::of(step, program.dt, eps_axial, s));
        })?;
    }
    let phase1_steps = step;

    // Phase 2: strain-driven axial compression under lateral stress
    // control. The kernel defers each step's volume strain by one step,
    // and on the strength surface the returned deviator is set by the
    // (stale) pressure alone, so the raw post-step lateral stress is
    // blind to de_lat. Probing the settled stress instead, one strain
    // step plus one zero step, restores a strong monotone sensitivity
    // (~2K de_lat), and the real state is marched the same way so the
    // recorded rows are settled states.
    let de_ax = -program.axial_step;
    let tol_lat = tol_p;
    let mut de_lat_warm = elastic_lateral_guess(model, &state, de_ax);
    for _ in 0..program.n_steps {
        let probe = |de_lat: f64| -> Result<f64, ModelError> {
            let mut trial = state;
            model.update_step(&mut trial, &SymTensor::diag(de_ax, de_lat, de_lat))?;
            model.update_step(&mut trial, &SymTensor::iso(0.0))?;
            Ok(trial.stress.yy + conf)
        };

        let mut x0 = de_lat_warm;
        let mut g0 = probe(x0)?;
        // second point: nudge proportionally, with an absolute floor so
        // a zero warm start still separates
        let mut x1 = x0 + (0.05 * x0.abs()).max(0.1 * program.axial_step);
        let mut g1 = probe(x1)?;
        let mut best = (x0, g0.abs());
        let mut iters = 0;
        while g1.abs() > tol_lat {
            iters += 1;
            if iters > LATERAL_MAX_ITER || (g1 - g0) == 0.0 {
                return Err(PathError::LateralControlFailure {
                    step: step + 1,
                    target: -conf,
                    miss: best.1.min(g1.abs()),
                });
            }
            let x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
            x0 = x1;
            g0 = g1;
            x1 = x2;
            g1 = probe(x1)?;
            if g1.abs() < best.1 {
                best = (x1, g1.abs());
            }
        }

        model.update_step(&mut state, &SymTensor::diag(de_ax, x1, x1))?;
        model.update_step(&mut state, &SymTensor::iso(0.0))?;
        de_lat_warm = x1;
        eps_axial += de_ax;
        step += 1;
        rows.push(TriaxRow::of(step, program.dt, eps_axial, &state));
    }

    Ok(TriaxialRun { rows, phase1_steps })
}

/// Lateral strain increment that would hold lateral stress constant in
/// a linear elastic step: de_lat = -de_ax nu/(1 - nu) with nu implied
/// by the current tangent bulk modulus and shear modulus.
fn elastic_lateral_guess(model: &MaterialModel, state: &MaterialState, de_ax: f64) -> f64 {
    let g = model.params.elastic.g0;
    let k = model
        .eos
        .tangent_bulk_modulus(state.rho_sl, state.temp)
        .unwrap_or(2.0 * g);
    let nu = (3.0 * k - 2.0 * g) / (2.0 * (3.0 * k + g));
    -de_ax * nu / (1.0 - nu)
}
