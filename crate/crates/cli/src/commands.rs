//! Subcommand execution: wire a parsed config into the core drivers,
//! write CSVs, and drop a run manifest beside them.
//!
//! Exit-code contract: anything wrong with the inputs (config syntax,
//! violated invariants, missing files, bad flag values) is an `Input`
//! error and exits 1; any numerical failure during a run (return
//! mapping that will not converge, lateral control misses, a tangled
//! mesh, EOS range violations) is a `Solver` error and exits 2.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use ypcap_core::paths::{
    run_hydrostatic, run_triaxial, HydroRow, HydroTarget, HydrostaticProgram, PathError,
    TriaxRow, TriaxialProgram,
};
use ypcap_core::shock1d::{
    run as run_shock, CavityLoad, ShockConfig, ShockError, SnapshotRow, Viscosity,
};
use ypcap_core::{
    hardening, surface, AnalyticEos, Eos, MaterialModel, ModelError, RangePolicy, SurfaceState,
};

use crate::config::{
    material_params, parse_config, to_ini, ConfigError, CrushTarget, EosSpec, RunConfig,
};
use crate::table_io::load_table;

/// What went wrong, sorted by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad inputs: exit 1.
    Input(String),
    /// Numerical failure during the run: exit 2.
    Solver(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn from_path_error(e: PathError) -> CliError {
    match e {
        PathError::InvalidProgram(m) => CliError::Input(m),
        other => CliError::Solver(other.to_string()),
    }
}

fn from_shock_error(e: ShockError) -> CliError {
    match e {
        ShockError::InvalidConfig(m) => CliError::Input(m),
        other => CliError::Solver(other.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Surface,
    Crush,
    Triax,
    Shock,
    Eos,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Surface => "surface",
            Command::Crush => "crush",
            Command::Triax => "triax",
            Command::Shock => "shock",
            Command::Eos => "eos",
        }
    }
}

/// Flag-level overrides applied on top of the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub cells: Option<usize>,
    pub clamp_eos: bool,
    pub yp_only: bool,
    pub x_override: Option<f64>,
}

/// Load, override, run, write. Returns the output directory.
pub fn execute(cmd: Command, config_path: &Path, ov: &Overrides) -> Result<PathBuf, CliError> {
    let started = Instant::now();
    let mut cfg = parse_config(config_path)?;

    if let Some(x) = ov.x_override {
        cfg.material.x = x;
        material_params(&cfg.material)?; // recheck the range
    }
    if let Some(n) = ov.cells {
        if n < 2 {
            return Err(CliError::Input(format!(
                "--cells must be at least 2, got {n}"
            )));
        }
        cfg.solver.cells = n;
    }

    let model = build_model(&cfg, config_path, ov.clamp_eos, ov.yp_only)?;

    let (files, notes) = match cmd {
        Command::Surface => cmd_surface(&cfg, &model)?,
        Command::Crush => cmd_crush(&cfg, &model)?,
        Command::Triax => cmd_triax(&cfg, &model)?,
        Command::Shock => cmd_shock(&cfg, &model)?,
        Command::Eos => cmd_eos(&cfg, &model)?,
    };

    let out_dir = ov
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", out_dir.display())))?;
    for (name, content) in &files {
        let path = out_dir.join(name);
        std::fs::write(&path, content)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }

    let manifest = manifest_text(cmd, ov, &cfg, started.elapsed().as_secs_f64(), &notes);
    let mpath = out_dir.join("manifest.txt");
    std::fs::write(&mpath, manifest)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", mpath.display())))?;
    Ok(out_dir)
}

/// Assemble the constitutive model from the config blocks.
pub fn build_model(
    cfg: &RunConfig,
    config_path: &Path,
    clamp_eos: bool,
    yp_only: bool,
) -> Result<MaterialModel, CliError> {
    let params = material_params(&cfg.material)?;
    let eos = match &cfg.eos.spec {
        EosSpec::Analytic {
            k0,
            rho_ref,
            t_ref,
            gamma0,
            cv,
        } => Eos::Analytic(AnalyticEos::new(*rho_ref, *t_ref, *k0, *gamma0, *cv)),
        EosSpec::Table { path } => {
            let resolved = config_path
                .parent()
                .map(|d| d.join(path))
                .unwrap_or_else(|| PathBuf::from(path));
            let mut table = load_table(&resolved)?;
            if clamp_eos {
                table = table.with_policy(RangePolicy::Clamp);
            }
            Eos::Table(table)
        }
    };
    let mut model = MaterialModel::new(params, eos).map_err(|e: ModelError| match e {
        ModelError::InvalidParameter(m) => CliError::Input(m),
        other => CliError::Solver(other.to_string()),
    })?;
    model.cap_enabled = !yp_only;
    Ok(model)
}

// ---------------------------------------------------------------------
// manifest

fn manifest_text(
    cmd: Command,
    ov: &Overrides,
    cfg: &RunConfig,
    wall: f64,
    notes: &[String],
) -> String {
    let echo = to_ini(cfg);
    let framed = format!("blob {}\0{echo}", echo.len());
    let digest = Sha256::digest(framed.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }

    let mut flags = String::new();
    if ov.clamp_eos {
        flags.push_str(" --clamp-eos");
    }
    if ov.yp_only {
        flags.push_str(" --yp-only");
    }

    let mut out = String::new();
    out.push_str("# ypcap run manifest\n");
    let _ = writeln!(out, "# command: {}{flags}", cmd.name());
    let _ = writeln!(out, "# config_sha256: {hex}");
    let _ = writeln!(out, "# wall_seconds: {wall:.3}");
    for n in notes {
        let _ = writeln!(out, "# {n}");
    }
    out.push('\n');
    out.push_str(&echo);
    out
}

// ---------------------------------------------------------------------
// subcommands

type CmdOutput = (Vec<(String, String)>, Vec<String>);

/// Sample the composite yield envelope at the configured crush state:
/// cap branch from p_c to the shared critical state, strength branch
/// from there to the apex.
fn cmd_surface(cfg: &RunConfig, model: &MaterialModel) -> Result<CmdOutput, CliError> {
    let params = &model.params;
    let z = cfg.surface.z;
    let beta = params.crush.beta_of_z(z);
    let p_c = hardening::p_c_of_beta(beta, params.yld.p_c0);
    let surf = SurfaceState::from_cap(p_c, &params.yld)
        .map_err(|e| CliError::Input(e.to_string()))?;
    let (p_cs, q_cs) = surf.critical_state();
    let apex = surface::yp_apex(surf.alpha, surf.gamma, params.yld.p_y);

    let n = cfg.surface.n_points;
    let mut csv = String::from("p,q,branch\n");
    for i in 0..n {
        let p = p_c + (apex - p_c) * (i as f64) / ((n - 1) as f64);
        let (q, branch) = if p <= p_cs {
            let q2 = -p * (p - p_c);
            (surf.m * q2.max(0.0).sqrt(), "cap")
        } else {
            let q = surf.alpha - surf.gamma * (p / params.yld.p_y).exp();
            (q.max(0.0), "yp")
        };
        let _ = writeln!(csv, "{p:.9e},{q:.9e},{branch}");
    }

    let notes = vec![
        format!("surface_z: {z}"),
        format!("surface_p_c: {p_c:.9e}"),
        format!("surface_critical_state: p {p_cs:.9e} q {q_cs:.9e}"),
        format!("surface_apex: {apex:.9e}"),
        format!("surface_m: {:.9e}", surf.m),
        format!("surface_alpha: {:.9e}", surf.alpha),
    ];
    Ok((vec![("surface.csv".into(), csv)], notes))
}

fn cmd_crush(cfg: &RunConfig, model: &MaterialModel) -> Result<CmdOutput, CliError> {
    let block = cfg
        .crush
        .as_ref()
        .ok_or_else(|| CliError::Input("the crush subcommand needs a [crush] section".into()))?;
    let program = HydrostaticProgram {
        target: match block.target {
            CrushTarget::VolStrain(e) => HydroTarget::VolStrain(e),
            CrushTarget::Pressure(p) => HydroTarget::Pressure(p),
        },
        n_steps: block.n_steps,
        unload: block.unload,
    };
    let rows = run_hydrostatic(model, &program).map_err(from_path_error)?;

    let mut csv = String::from(HydroRow::CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
    }
    let last = rows.last().expect("at least the initial row");
    let notes = vec![
        format!("crush_rows: {}", rows.len()),
        format!("crush_final_z: {:.9e}", last.z),
        format!("crush_final_e_v: {:.9e}", last.e_v),
        format!("crush_final_p: {:.9e}", last.p),
    ];
    Ok((vec![("crush.csv".into(), csv)], notes))
}

fn cmd_triax(cfg: &RunConfig, model: &MaterialModel) -> Result<CmdOutput, CliError> {
    let block = cfg
        .triax
        .as_ref()
        .ok_or_else(|| CliError::Input("the triax subcommand needs a [triax] section".into()))?;
    let program = TriaxialProgram {
        confinement: block.confinement,
        axial_step: block.axial_step,
        n_steps: block.n_steps,
        dt: block.dt,
    };
    let run = run_triaxial(model, &program).map_err(from_path_error)?;

    let mut csv = String::from(TriaxRow::CSV_HEADER);
    csv.push('\n');
    for row in &run.rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
    }
    let peak_q = run.rows.iter().fold(0.0f64, |m, r| m.max(r.q));
    let last = run.rows.last().expect("rows");
    let notes = vec![
        format!("triax_phase1_steps: {}", run.phase1_steps),
        format!("triax_peak_q: {peak_q:.9e}"),
        format!("triax_final_z: {:.9e}", last.z),
    ];
    Ok((vec![("triax.csv".into(), csv)], notes))
}

fn cmd_shock(cfg: &RunConfig, model: &MaterialModel) -> Result<CmdOutput, CliError> {
    let block = cfg
        .shock
        .as_ref()
        .ok_or_else(|| CliError::Input("the shock subcommand needs a [shock] section".into()))?;

    let load = if block.p_peak > 0.0 {
        Some(
            CavityLoad::new(block.p_peak, block.tau, block.t_end)
                .map_err(|e| CliError::Input(e.to_string()))?,
        )
    } else {
        None
    };
    let mut snapshot_times = block.snapshots.clone();
    snapshot_times.sort_by(f64::total_cmp);
    snapshot_times.dedup();

    let shock_cfg = ShockConfig {
        n_cells: cfg.solver.cells,
        r_inner: block.r_inner,
        r_outer: block.r_outer,
        load,
        t_final: block.t_final,
        cfl: cfg.solver.cfl,
        visc: Viscosity {
            c_q: block.c_q,
            c_l: block.c_l,
        },
        damping: block.damping,
        gauges: block.gauges.clone(),
        stride: cfg.output.stride,
        snapshot_times: snapshot_times.clone(),
    };
    let result = run_shock(model, &shock_cfg).map_err(from_shock_error)?;

    let mut files = Vec::new();
    let mut notes = vec![
        format!("shock_steps: {}", result.steps),
        format!("shock_t_final: {:.9e}", result.t_final),
        format!(
            "shock_energy_drift_fraction: {:.6e}",
            result.ledger.drift_fraction()
        ),
        format!(
            "shock_energy: kinetic {:.6e} internal {:.6e} boundary_work {:.6e}",
            result.ledger.kinetic, result.ledger.internal, result.ledger.boundary_work
        ),
    ];
    for (requested, gauge) in block.gauges.iter().zip(&result.gauges) {
        files.push((format!("gauge_{requested}.csv"), gauge.to_csv()));
        notes.push(format!(
            "gauge {requested} m: node radius {:.6e}, peak v_r {:.6e}",
            gauge.radius,
            gauge.peak_velocity()
        ));
    }
    for (requested, snap) in snapshot_times.iter().zip(&result.snapshots) {
        let mut csv = String::from(SnapshotRow::CSV_HEADER);
        csv.push('\n');
        for row in &snap.rows {
            csv.push_str(&row.csv_line());
            csv.push('\n');
        }
        files.push((format!("snap_{requested}.csv"), csv));
        notes.push(format!("snapshot {requested} s: taken at {:.6e} s", snap.t));
    }
    Ok((files, notes))
}

/// Tabulate the loaded EOS over a rho x T window.
fn cmd_eos(cfg: &RunConfig, model: &MaterialModel) -> Result<CmdOutput, CliError> {
    let scan = &cfg.eos.scan;
    let (rho_lo, rho_hi, t_lo, t_hi) = match &cfg.eos.spec {
        EosSpec::Analytic { rho_ref, t_ref, .. } => (
            scan.rho_min.unwrap_or(0.95 * rho_ref),
            scan.rho_max.unwrap_or(1.35 * rho_ref),
            scan.t_min.unwrap_or(*t_ref),
            scan.t_max.unwrap_or(t_ref + 1200.0),
        ),
        EosSpec::Table { .. } => {
            let need = |v: Option<f64>, key: &str| {
                v.ok_or_else(|| {
                    CliError::Input(format!(
                        "[eos] table scans need explicit `{key}` (no reference state to default from)"
                    ))
                })
            };
            (
                need(scan.rho_min, "rho_min")?,
                need(scan.rho_max, "rho_max")?,
                need(scan.t_min, "t_min")?,
                need(scan.t_max, "t_max")?,
            )
        }
    };
    let n_rho = scan.n_rho.unwrap_or(60);
    let n_t = scan.n_t.unwrap_or(7);

    let mut csv = String::from("rho,t,p,e,k_t\n");
    for i in 0..n_rho {
        let rho = rho_lo + (rho_hi - rho_lo) * (i as f64) / ((n_rho - 1) as f64);
        for j in 0..n_t {
            let t = t_lo + (t_hi - t_lo) * (j as f64) / ((n_t - 1) as f64);
            let eos = &model.eos;
            let p = eos.pressure(rho, t).map_err(|e| CliError::Solver(e.to_string()))?;
            let e = eos.energy(rho, t).map_err(|e| CliError::Solver(e.to_string()))?;
            let k = eos
                .tangent_bulk_modulus(rho, t)
                .map_err(|e| CliError::Solver(e.to_string()))?;
            let _ = writeln!(csv, "{rho:.9e},{t:.9e},{p:.9e},{e:.9e},{k:.9e}");
        }
    }
    let notes = vec![format!(
        "eos_scan: rho {rho_lo:.6e}..{rho_hi:.6e} x{n_rho}, T {t_lo:.6e}..{t_hi:.6e} x{n_t}"
    )];
    Ok((vec![("eos.csv".into(), csv)], notes))
}
