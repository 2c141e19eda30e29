//! 1D spherically symmetric Lagrangian explicit dynamics: a cavity
//! pressure pulse drives the material kernel cell by cell, staggered
//! leapfrog in time, linear-plus-quadratic artificial viscosity for
//! shock capture, velocity gauges and radial field snapshots out the
//! back.
//!
//! Per unit solid angle throughout: cell masses are rho0 (r_R^3 -
//! r_L^3)/3 and never change, node forces are stresses times r^2.
//!
//! The kernel defers each increment's volumetric stress response by one
//! step, which a raw leapfrog coupling turns into an unconditional
//! weak instability (delayed restoring force). Each dynamics step
//! therefore runs the kernel twice per cell, the real increment and a
//! zero-increment settle, so the momentum update always sees stress
//! consistent with the cell's current volume.

use crate::model::{MaterialModel, MaterialState, ModelError, ShearMode};
use crate::tensor::SymTensor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShockError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("mesh tangled at node {node}: r = {r_left:.6e} .. {r_right:.6e}")]
    MeshTangled { node: usize, r_left: f64, r_right: f64 },
    #[error("invalid shock config: {0}")]
    InvalidConfig(String),
}

/// Exponential cavity pressure pulse: P(t) = p_peak exp(-t/tau) up to
/// t_end, zero afterwards.
#[derive(Debug, Clone, Copy)]
pub struct CavityLoad {
    /// Peak wall pressure at t = 0 (Pa).
    pub p_peak: f64,
    /// Decay time (s).
    pub tau: f64,
    /// Loading cutoff (s).
    pub t_end: f64,
}

impl CavityLoad {
    pub fn new(p_peak: f64, tau: f64, t_end: f64) -> Result<Self, ShockError> {
        if !(p_peak > 0.0 && p_peak.is_finite()) {
            return Err(ShockError::InvalidConfig(format!(
                "cavity p_peak must be positive, got {p_peak:e}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(ShockError::InvalidConfig(format!(
                "cavity tau must be positive, got {tau:e}"
            )));
        }
        Ok(Self { p_peak, tau, t_end })
    }

    /// Wall pressure at time t (Pa).
    pub fn pressure(&self, t: f64) -> f64 {
        if t <= self.t_end {
            self.p_peak * (-t / self.tau).exp()
        } else {
            0.0
        }
    }
}

/// Artificial viscosity coefficients (quadratic, linear).
#[derive(Debug, Clone, Copy)]
pub struct Viscosity {
    pub c_q: f64,
    pub c_l: f64,
}

impl Default for Viscosity {
    fn default() -> Self {
        Self { c_q: 2.0, c_l: 0.06 }
    }
}

/// Shock-capture pressure, active only in compression (Pa).
pub fn artificial_viscosity(rho: f64, c_sound: f64, dx: f64, e_v_rate: f64, visc: &Viscosity) -> f64 {
    if e_v_rate >= 0.0 {
        return 0.0;
    }
    let r = e_v_rate.abs();
    rho * (visc.c_q * visc.c_q * dx * dx * r * r + visc.c_l * c_sound * dx * r)
}

/// A shock front can dump several percent volume strain into one cell
/// in a single CFL step, more than the return mapping's Newton will
/// swallow at once. Retry with the increment subdivided: deviator
/// split linearly, volume split multiplicatively so the composed
/// volume ratio is unchanged.
fn kernel_with_subdivision(
    model: &MaterialModel,
    state: &mut MaterialState,
    d_eps: &SymTensor,
    depth: u32,
) -> Result<(), ModelError> {
    match model.update_step(state, d_eps) {
        Err(ModelError::NoConvergence { .. }) if depth > 0 => {
            let tr_half = (1.0 + d_eps.trace()).sqrt() - 1.0;
            let half = d_eps.dev() * 0.5 + SymTensor::iso(tr_half / 3.0);
            kernel_with_subdivision(model, state, &half, depth - 1)?;
            kernel_with_subdivision(model, state, &half, depth - 1)
        }
        other => other.map(|_| ()),
    }
}

/// Subdivision depth: 2^12 sub-increments before giving up.
const MAX_SUBDIVIDE: u32 = 12;

/// Lagrangian mesh: nodes carry radius and velocity, cells carry a
/// material state and a constant mass per unit solid angle. Mutate
/// radii only through `step`; it owns the tangling check.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    /// Node radii (m), strictly increasing, cells + 1 of them.
    pub r: Vec<f64>,
    /// Node radial velocities (m/s).
    pub v: Vec<f64>,
    /// Material state per cell.
    pub cells: Vec<MaterialState>,
    /// Cell masses per unit solid angle (kg/sr), fixed.
    pub cell_mass: Vec<f64>,
    /// Lumped node masses (kg/sr), fixed.
    node_mass: Vec<f64>,
    /// Current time (s).
    pub t: f64,
    /// Previous step size, for the leapfrog half-kick (s).
    prev_dt: f64,
}

impl Mesh1D {
    /// Uniform mesh of n cells on [r_inner, r_outer], all cells at the
    /// model's initial state, everything at rest.
    pub fn uniform(
        model: &MaterialModel,
        r_inner: f64,
        r_outer: f64,
        n: usize,
    ) -> Result<Self, ShockError> {
        if !(r_inner > 0.0 && r_outer > r_inner) || n == 0 {
            return Err(ShockError::InvalidConfig(format!(
                "need 0 < r_inner < r_outer and n >= 1, got [{r_inner}, {r_outer}] x {n}"
            )));
        }
        let dx = (r_outer - r_inner) / n as f64;
        let r: Vec<f64> = (0..=n).map(|i| r_inner + i as f64 * dx).collect();
        let state = model.init_state()?;
        let rho0 = model.params.rho0;
        let cell_mass: Vec<f64> = (0..n)
            .map(|j| rho0 * (r[j + 1].powi(3) - r[j].powi(3)) / 3.0)
            .collect();
        let mut node_mass = vec![0.0; n + 1];
        for j in 0..n {
            node_mass[j] += 0.5 * cell_mass[j];
            node_mass[j + 1] += 0.5 * cell_mass[j];
        }
        Ok(Self {
            r,
            v: vec![0.0; n + 1],
            cells: vec![state; n],
            cell_mass,
            node_mass,
            t: 0.0,
            prev_dt: 0.0,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Total mass per unit solid angle (kg/sr).
    pub fn total_mass(&self) -> f64 {
        self.cell_mass.iter().sum()
    }

    pub fn cell_center(&self, j: usize) -> f64 {
        0.5 * (self.r[j] + self.r[j + 1])
    }

    /// Volumetric strain rate of cell j from the current node motion
    /// (exact spherical form, d(ln V)/dt).
    fn e_v_rate(&self, j: usize) -> f64 {
        let (rl, rr) = (self.r[j], self.r[j + 1]);
        3.0 * (self.v[j + 1] * rr * rr - self.v[j] * rl * rl) / (rr.powi(3) - rl.powi(3))
    }

    /// Longitudinal sound speed of cell j at its current state (m/s).
    fn sound_speed(&self, model: &MaterialModel, j: usize) -> Result<f64, ModelError> {
        let s = &self.cells[j];
        let k = model.eos.tangent_bulk_modulus(s.rho_sl, s.temp)?;
        let g = match model.params.elastic.mode {
            ShearMode::ConstantG => model.params.elastic.g0,
            ShearMode::ConstantNu => {
                3.0 * k * (1.0 - 2.0 * model.params.elastic.nu0)
                    / (2.0 * (1.0 + model.params.elastic.nu0))
            }
        };
        Ok(((k + 4.0 * g / 3.0) / s.rho).sqrt())
    }

    /// CFL-limited time step, viscosity-augmented. Starts small and
    /// grows at most 10% per step so an impulsive boundary load is
    /// resolved instead of arriving as one giant first increment.
    pub fn cfl_dt(
        &self,
        model: &MaterialModel,
        visc: &Viscosity,
        cfl: f64,
    ) -> Result<f64, ShockError> {
        let mut dt = f64::INFINITY;
        for j in 0..self.n_cells() {
            let dx = self.r[j + 1] - self.r[j];
            let c = self.sound_speed(model, j)?;
            let rate = self.e_v_rate(j).min(0.0).abs();
            let signal = c + 2.0 * visc.c_q * visc.c_q * dx * rate + visc.c_l * c;
            dt = dt.min(dx / signal);
        }
        let raw = cfl * dt;
        Ok(if self.prev_dt > 0.0 {
            raw.min(1.05 * self.prev_dt)
        } else {
            0.01 * raw
        })
    }

    /// Per-cell shock viscosities from the current velocity field (Pa).
    fn viscosities(&self, model: &MaterialModel, visc: &Viscosity) -> Result<Vec<f64>, ModelError> {
        (0..self.n_cells())
            .map(|j| {
                let c = self.sound_speed(model, j)?;
                let dx = self.r[j + 1] - self.r[j];
                Ok(artificial_viscosity(
                    self.cells[j].rho,
                    c,
                    dx,
                    self.e_v_rate(j),
                    visc,
                ))
            })
            .collect()
    }

    /// One explicit step. Returns the boundary work done on the mesh by
    /// the cavity pressure during the step (J/sr).
    pub fn step(
        &mut self,
        model: &MaterialModel,
        visc: &Viscosity,
        load: Option<&CavityLoad>,
        damping: f64,
        dt: f64,
    ) -> Result<f64, ShockError> {
        let n = self.n_cells();
        let q_av = self.viscosities(model, visc)?;
        // midpoint sampling: P decays fast against the step size early on
        let p_wall = load.map_or(0.0, |l| l.pressure(self.t + 0.5 * dt));
        let r0_wall = self.r[0];

        // Nodal accelerations from the dual-cell momentum balance:
        // M a = [sigma_rr r^2] between the flanking cell centers minus
        // the hoop-stress surface term, all per unit solid angle. A
        // uniform stress field balances exactly.
        let sig_rr = |j: usize| self.cells[j].stress.xx - q_av[j];
        let sig_hoop = |j: usize| self.cells[j].stress.yy - q_av[j];
        let center =
            |j: usize| 0.5 * (self.r[j] + self.r[j + 1]);
        let mut accel = vec![0.0; n + 1];
        for i in 0..n {
            let ri = self.r[i];
            let (f_left, hoop_left) = if i == 0 {
                // cavity wall: boundary traction -P on the inner face
                (p_wall * ri * ri, 0.0)
            } else {
                let rc = center(i - 1);
                (
                    -sig_rr(i - 1) * rc * rc,
                    -sig_hoop(i - 1) * (ri * ri - rc * rc),
                )
            };
            let rc_r = center(i);
            let f_right = sig_rr(i) * rc_r * rc_r;
            let hoop_right = -sig_hoop(i) * (rc_r * rc_r - ri * ri);
            accel[i] =
                (f_left + f_right + hoop_left + hoop_right) / self.node_mass[i] - damping * self.v[i];
        }
        // outer boundary pinned
        accel[n] = 0.0;

        // Leapfrog kick spanning the half steps on either side of t.
        let dt_kick = 0.5 * (self.prev_dt + dt);
        for i in 0..n {
            self.v[i] += accel[i] * dt_kick;
        }
        self.v[n] = 0.0;
        // Wall work uses the same impulse quadrature as the kick (force
        // times time-centered velocity times dt_kick), so the ledger's
        // external input equals what the momentum update actually
        // delivered. Pairing the force with the end-of-kick velocity
        // instead overcounts by O(dt^2) per step, which accumulates to
        // percent level across a shock transit.
        let wall_work = p_wall
            * r0_wall
            * r0_wall
            * (self.v[0] - 0.5 * accel[0] * dt_kick)
            * dt_kick;

        // Drift, with the tangling check.
        let du: Vec<f64> = self.v.iter().map(|v| v * dt).collect();
        for i in 0..=n {
            self.r[i] += du[i];
        }
        for i in 0..n {
            if self.r[i + 1] <= self.r[i] || self.r[0] <= 0.0 {
                return Err(ShockError::MeshTangled {
                    node: i,
                    r_left: self.r[i],
                    r_right: self.r[i + 1],
                });
            }
        }

        // Cell strain increments at midpoint geometry, volume-matched:
        // an isotropic correction pins 1 + tr to the exact cell volume
        // ratio so kernel density stays mass/volume to round-off.
        for j in 0..n {
            let (rl_new, rr_new) = (self.r[j], self.r[j + 1]);
            let (rl_old, rr_old) = (rl_new - du[j], rr_new - du[j + 1]);
            let (rl_mid, rr_mid) = (rl_new - 0.5 * du[j], rr_new - 0.5 * du[j + 1]);
            let de_rr = (du[j + 1] - du[j]) / (rr_mid - rl_mid);
            let de_hoop = 0.5 * (du[j] + du[j + 1]) / (0.5 * (rl_mid + rr_mid));
            let v_ratio =
                (rr_new.powi(3) - rl_new.powi(3)) / (rr_old.powi(3) - rl_old.powi(3));
            let corr = (v_ratio - 1.0 - (de_rr + 2.0 * de_hoop)) / 3.0;
            let d_eps = SymTensor::diag(de_rr + corr, de_hoop + corr, de_hoop + corr);

            let state = &mut self.cells[j];
            let rho_before = state.rho;
            kernel_with_subdivision(model, state, &d_eps, MAX_SUBDIVIDE)?;
            model.update_step(state, &SymTensor::iso(0.0))?;
            // viscous heating: q_av resists the volume change it saw
            state.energy -= q_av[j] * (v_ratio - 1.0) / rho_before;
        }

        self.t += dt;
        self.prev_dt = dt;
        Ok(wall_work)
    }
}

/// Velocity/stress history at one radius.
#[derive(Debug, Clone)]
pub struct GaugeRecord {
    /// Nominal gauge radius (m, initial node position).
    pub radius: f64,
    node: usize,
    cell: usize,
    pub times: Vec<f64>,
    pub v_r: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl GaugeRecord {
    pub const CSV_HEADER: &'static str = "t,v_r,p,q";

    fn sample(&mut self, mesh: &Mesh1D) {
        self.times.push(mesh.t);
        self.v_r.push(mesh.v[self.node]);
        self.p.push(mesh.cells[self.cell].p());
        self.q.push(mesh.cells[self.cell].q());
    }

    pub fn peak_velocity(&self) -> f64 {
        self.v_r.iter().fold(0.0f64, |m, v| m.max(*v))
    }

    /// Full CSV content, header included.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.times.len() {
            out.push_str(&format!(
                "{:.9e},{:.9e},{:.9e},{:.9e}\n",
                self.times[i], self.v_r[i], self.p[i], self.q[i]
            ));
        }
        out
    }
}

/// Radial field snapshot row (cell-centered).
#[derive(Debug, Clone, Copy)]
pub struct SnapshotRow {
    pub r: f64,
    pub v_r: f64,
    pub z: f64,
    pub p: f64,
    pub q: f64,
    pub rho: f64,
}

impl SnapshotRow {
    pub const CSV_HEADER: &'static str = "r,v_r,z,p,q,rho";

    pub fn csv_line(&self) -> String {
        format!(
            "{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
            self.r, self.v_r, self.z, self.p, self.q, self.rho
        )
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub rows: Vec<SnapshotRow>,
}

impl Snapshot {
    fn take(mesh: &Mesh1D) -> Self {
        let rows = (0..mesh.n_cells())
            .map(|j| SnapshotRow {
                r: mesh.cell_center(j),
                v_r: 0.5 * (mesh.v[j] + mesh.v[j + 1]),
                z: mesh.cells[j].z,
                p: mesh.cells[j].p(),
                q: mesh.cells[j].q(),
                rho: mesh.cells[j].rho,
            })
            .collect();
        Self { t: mesh.t, rows }
    }
}

/// Running energy accounts per unit solid angle (J/sr).
#[derive(Debug, Clone, Copy, Default)]
pub struct EnergyLedger {
    pub kinetic: f64,
    pub internal: f64,
    pub boundary_work: f64,
    pub peak_boundary_work: f64,
}

impl EnergyLedger {
    /// (KE + IE - W) / peak W; should stay small for a closed budget.
    pub fn drift_fraction(&self) -> f64 {
        (self.kinetic + self.internal - self.boundary_work) / self.peak_boundary_work.max(1e-300)
    }
}

#[derive(Debug, Clone)]
pub struct ShockConfig {
    pub n_cells: usize,
    /// Cavity (inner boundary) radius (m).
    pub r_inner: f64,
    /// Fixed outer boundary radius (m); size the domain so nothing
    /// reflects back into the gauges before t_final.
    pub r_outer: f64,
    pub load: Option<CavityLoad>,
    pub t_final: f64,
    pub cfl: f64,
    pub visc: Viscosity,
    /// Mass-proportional damping (1/s); nonzero turns the run into a
    /// ringdown toward static equilibrium.
    pub damping: f64,
    /// Gauge radii (m).
    pub gauges: Vec<f64>,
    /// Record gauges every this many steps.
    pub stride: usize,
    /// Times at which to take radial field snapshots (s).
    pub snapshot_times: Vec<f64>,
}

impl Default for ShockConfig {
    fn default() -> Self {
        Self {
            n_cells: 500,
            r_inner: 12.0,
            r_outer: 400.0,
            load: None,
            t_final: 0.1,
            cfl: 0.5,
            visc: Viscosity::default(),
            damping: 0.0,
            gauges: vec![55.0, 114.0, 191.0],
            stride: 1,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShockResult {
    pub gauges: Vec<GaugeRecord>,
    pub snapshots: Vec<Snapshot>,
    pub ledger: EnergyLedger,
    pub steps: usize,
    pub t_final: f64,
    /// Mesh at the end of the run, for field post-processing.
    pub mesh: Mesh1D,
}

/// Drive a full cavity-loaded run.
pub fn run(model: &MaterialModel, config: &ShockConfig) -> Result<ShockResult, ShockError> {
    if !(config.t_final > 0.0) || config.stride == 0 || !(config.cfl > 0.0 && config.cfl <= 1.0) {
        return Err(ShockError::InvalidConfig(
            "need t_final > 0, stride >= 1, 0 < cfl <= 1".into(),
        ));
    }
    let mut mesh = Mesh1D::uniform(model, config.r_inner, config.r_outer, config.n_cells)?;
    let e0: Vec<f64> = mesh.cells.iter().map(|c| c.energy).collect();

    let mut gauges: Vec<GaugeRecord> = config
        .gauges
        .iter()
        .map(|&radius| {
            let node = (0..mesh.r.len())
                .min_by(|&a, &b| {
                    (mesh.r[a] - radius)
                        .abs()
                        .total_cmp(&(mesh.r[b] - radius).abs())
                })
                .unwrap();
            let cell = node.min(mesh.n_cells() - 1);
            GaugeRecord {
                radius: mesh.r[node],
                node,
                cell,
                times: vec![],
                v_r: vec![],
                p: vec![],
                q: vec![],
            }
        })
        .collect();
    for g in &mut gauges {
        g.sample(&mesh);
    }

    let mut snapshots = Vec::new();
    let mut snap_iter = config.snapshot_times.iter().copied().peekable();
    let mut ledger = EnergyLedger::default();
    let mut steps = 0;

    while mesh.t < config.t_final {
        let dt = mesh
            .cfl_dt(model, &config.visc, config.cfl)?
            .min(config.t_final - mesh.t);
        let dw = mesh.step(model, &config.visc, config.load.as_ref(), config.damping, dt)?;
        steps += 1;

        ledger.boundary_work += dw;
        ledger.peak_boundary_work = ledger.peak_boundary_work.max(ledger.boundary_work);

        if steps % config.stride == 0 {
            for g in &mut gauges {
                g.sample(&mesh);
            }
        }
        while let Some(&ts) = snap_iter.peek() {
            if mesh.t >= ts {
                snapshots.push(Snapshot::take(&mesh));
                snap_iter.next();
            } else {
                break;
            }
        }
    }

    ledger.kinetic = (0..mesh.r.len())
        .map(|i| 0.5 * mesh.node_mass[i] * mesh.v[i] * mesh.v[i])
        .sum();
    ledger.internal = (0..mesh.n_cells())
        .map(|j| mesh.cell_mass[j] * (mesh.cells[j].energy - e0[j]))
        .sum();

    Ok(ShockResult {
        gauges,
        snapshots,
        ledger,
        steps,
        t_final: mesh.t,
        mesh,
    })
}
