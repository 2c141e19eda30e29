//! Run configuration: a flat INI file with one section per concern.
//!
//! `[material]` carries the constitutive parameters under their usual
//! symbols (rho0, G0, H, beta_max, omega, p_c0, X, alpha0, gamma0, P_y,
//! z_max, ...), `[eos]` selects the volumetric backend, `[solver]` and
//! `[output]` hold numerics and plumbing, and one optional section per
//! subcommand (`[surface]`, `[crush]`, `[triax]`, `[shock]`) holds that
//! program's knobs. All values are SI: Pa, kg/m^3, K, s.
//!
//! Parsing is strict: unknown sections or keys are errors with the
//! offending line and column, as are duplicates. `to_ini` writes a
//! normalized echo that re-parses to an equal config, which is what the
//! run manifest stores.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use ypcap_core::{CrushParams, ElasticParams, MaterialParams, ShearMode, SolverParams, YieldParams};

/// Configuration failure, split the way the exit codes want it: syntax
/// problems carry a position, invariant violations carry the rule.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("invalid config: {msg}")]
    Validation { msg: String },
}

impl ConfigError {
    fn parse(line: usize, col: usize, msg: impl Into<String>) -> Self {
        ConfigError::Parse {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn invalid(msg: impl Into<String>) -> Self {
        ConfigError::Validation { msg: msg.into() }
    }
}

/// Material parameter block, keyed exactly like the calibration tables.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialBlock {
    /// Bulk density with gas porosity (kg/m^3).
    pub rho0: f64,
    /// Initial temperature (K).
    pub t0: f64,
    /// Shear modulus (Pa).
    pub g0: f64,
    /// Linear crush hardening modulus (Pa).
    pub h: f64,
    /// Exponential crush hardening scale (Pa).
    pub beta_max: f64,
    /// Exponential crush hardening rate (-).
    pub omega: f64,
    /// Crush onset mean stress (Pa, negative).
    pub p_c0: f64,
    /// Damage coupling weight in [0, 1].
    pub x: f64,
    /// Strength asymptote (Pa).
    pub alpha0: f64,
    /// Strength intercept scale (Pa).
    pub gamma0: f64,
    /// Strength pressure scale (Pa).
    pub p_y: f64,
    /// Crushable gas porosity (-).
    pub z_max: f64,
    pub shear_mode: ShearMode,
    /// Poisson ratio, used only by `constant_nu` shear.
    pub nu0: f64,
}

/// Analytic EOS constants or a path to a tabulated surface.
#[derive(Debug, Clone, PartialEq)]
pub enum EosSpec {
    Analytic {
        /// Isothermal bulk modulus at the reference state (Pa).
        k0: f64,
        /// Reference solid+liquid density (kg/m^3).
        rho_ref: f64,
        /// Reference temperature (K).
        t_ref: f64,
        /// Thermal pressure coefficient (-).
        gamma0: f64,
        /// Specific heat (J/(kg K)).
        cv: f64,
    },
    Table {
        /// CSV path, resolved relative to the config file.
        path: String,
    },
}

/// Density/temperature window for the `eos` subcommand's tabulation.
/// Unset bounds fall back to a band around the reference state; a table
/// backend has no such state, so there they must be given.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScanBlock {
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    pub n_rho: Option<usize>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub n_t: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EosBlock {
    pub spec: EosSpec,
    pub scan: ScanBlock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverBlock {
    /// Return-mapping residual tolerance.
    pub tol: f64,
    /// Return-mapping Newton iteration cap.
    pub max_iter: usize,
    /// Explicit time step safety factor in (0, 1].
    pub cfl: f64,
    /// Shock mesh cell count.
    pub cells: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50,
            cfl: 0.5,
            cells: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    /// Output directory, created if absent.
    pub dir: String,
    /// Gauge recording stride (steps).
    pub stride: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceBlock {
    /// Mean-stress sample count from the cap to the apex.
    pub n_points: usize,
    /// Crush state at which to evaluate the surface.
    pub z: f64,
}

impl Default for SurfaceBlock {
    fn default() -> Self {
        Self {
            n_points: 200,
            z: 0.0,
        }
    }
}

/// Hydrostatic program target: exactly one of the two keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrushTarget {
    /// `target_e_v`: total volumetric strain, negative = compression.
    VolStrain(f64),
    /// `target_pressure`: compressive mean stress magnitude (Pa).
    Pressure(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrushBlock {
    pub target: CrushTarget,
    pub n_steps: usize,
    pub unload: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriaxBlock {
    /// Confining pressure magnitude (Pa, compressive).
    pub confinement: f64,
    /// Axial strain increment per step (negative = compression applied
    /// internally; give the magnitude here).
    pub axial_step: f64,
    pub n_steps: usize,
    /// Nominal step duration for the time column (s).
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShockBlock {
    /// Cavity radius (m).
    pub r_inner: f64,
    /// Fixed outer boundary radius (m).
    pub r_outer: f64,
    /// End time (s).
    pub t_final: f64,
    /// Cavity pressure peak (Pa); zero disables the load.
    pub p_peak: f64,
    /// Pulse decay time (s).
    pub tau: f64,
    /// Load cutoff time (s).
    pub t_end: f64,
    /// Gauge radii (m), strictly inside the domain.
    pub gauges: Vec<f64>,
    /// Field snapshot times (s).
    pub snapshots: Vec<f64>,
    /// Mass-proportional damping (1/s).
    pub damping: f64,
    /// Quadratic artificial viscosity coefficient.
    pub c_q: f64,
    /// Linear artificial viscosity coefficient.
    pub c_l: f64,
}

/// One fully validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub material: MaterialBlock,
    pub eos: EosBlock,
    pub solver: SolverBlock,
    pub output: OutputBlock,
    pub surface: SurfaceBlock,
    pub crush: Option<CrushBlock>,
    pub triax: Option<TriaxBlock>,
    pub shock: Option<ShockBlock>,
}

// ---------------------------------------------------------------------
// raw INI scanning

#[derive(Debug)]
struct RawEntry {
    value: String,
    line: usize,
    key_col: usize,
    val_col: usize,
}

#[derive(Debug)]
struct RawSection {
    line: usize,
    entries: BTreeMap<String, RawEntry>,
}

fn strip_comment(s: &str) -> &str {
    match s.find('#') {
        Some(i) => &s[..i],
        None => s,
    }
}

fn scan(text: &str) -> Result<BTreeMap<String, RawSection>, ConfigError> {
    let mut sections: BTreeMap<String, RawSection> = BTreeMap::new();
    let mut current: Option<String> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = strip_comment(raw_line);
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let col_of = |needle: &str| raw_line.find(needle).map_or(1, |i| i + 1);

        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(ConfigError::parse(
                    line_no,
                    col_of("["),
                    "section header must look like [name]",
                ));
            };
            let name = name.trim();
            if name.is_empty() {
                return Err(ConfigError::parse(line_no, col_of("["), "empty section name"));
            }
            if let Some(prev) = sections.get(name) {
                return Err(ConfigError::parse(
                    line_no,
                    col_of("["),
                    format!("duplicate section [{name}] (first at line {})", prev.line),
                ));
            }
            sections.insert(
                name.to_string(),
                RawSection {
                    line: line_no,
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name.to_string());
            continue;
        }

        let Some(eq) = body.find('=') else {
            return Err(ConfigError::parse(
                line_no,
                col_of(trimmed),
                "expected `key = value`",
            ));
        };
        let key = body[..eq].trim();
        let value = body[eq + 1..].trim();
        let key_col = col_of(key);
        if key.is_empty() {
            return Err(ConfigError::parse(line_no, 1, "missing key before `=`"));
        }
        if !key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return Err(ConfigError::parse(
                line_no,
                key_col,
                format!("key `{key}` has characters outside [A-Za-z0-9_]"),
            ));
        }
        let Some(section) = current.as_ref() else {
            return Err(ConfigError::parse(
                line_no,
                key_col,
                format!("key `{key}` appears before any [section]"),
            ));
        };
        let val_col = if value.is_empty() { eq + 2 } else { col_of(value) };
        let sec = sections.get_mut(section).expect("section exists");
        if let Some(prev) = sec.entries.get(key) {
            return Err(ConfigError::parse(
                line_no,
                key_col,
                format!(
                    "duplicate key `{key}` in [{section}] (first at line {})",
                    prev.line
                ),
            ));
        }
        sec.entries.insert(
            key.to_string(),
            RawEntry {
                value: value.to_string(),
                line: line_no,
                key_col,
                val_col,
            },
        );
    }
    Ok(sections)
}

// ---------------------------------------------------------------------
// typed extraction

struct SectionView {
    name: &'static str,
    line: usize,
    entries: BTreeMap<String, RawEntry>,
}

impl SectionView {
    fn take_raw(&mut self, key: &str) -> Option<RawEntry> {
        self.entries.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<f64>()
                .map_err(|_| {
                    ConfigError::parse(
                        e.line,
                        e.val_col,
                        format!("`{key}` wants a number, got `{}`", e.value),
                    )
                })
                .and_then(|v| {
                    if v.is_finite() {
                        Ok(Some(v))
                    } else {
                        Err(ConfigError::parse(
                            e.line,
                            e.val_col,
                            format!("`{key}` must be finite"),
                        ))
                    }
                }),
        }
    }

    fn need_f64(&mut self, key: &str) -> Result<f64, ConfigError> {
        self.take_f64(key)?.ok_or_else(|| self.missing(key))
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<usize>().map(Some).map_err(|_| {
                ConfigError::parse(
                    e.line,
                    e.val_col,
                    format!("`{key}` wants a non-negative integer, got `{}`", e.value),
                )
            }),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) => match e.value.as_str() {
                "true" => Ok(Some(true)),
                "false" => Ok(Some(false)),
                other => Err(ConfigError::parse(
                    e.line,
                    e.val_col,
                    format!("`{key}` wants true or false, got `{other}`"),
                )),
            },
        }
    }

    fn take_string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) if e.value.is_empty() => Err(ConfigError::parse(
                e.line,
                e.val_col,
                format!("`{key}` must not be empty"),
            )),
            Some(e) => Ok(Some(e.value)),
        }
    }

    fn take_list_f64(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.take_raw(key) {
            None => Ok(None),
            Some(e) => {
                if e.value.is_empty() {
                    return Ok(Some(Vec::new()));
                }
                e.value
                    .split(',')
                    .map(|piece| {
                        piece.trim().parse::<f64>().map_err(|_| {
                            ConfigError::parse(
                                e.line,
                                e.val_col,
                                format!("`{key}` wants comma-separated numbers, got `{}`", e.value),
                            )
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map(Some)
            }
        }
    }

    fn missing(&self, key: &str) -> ConfigError {
        ConfigError::invalid(format!(
            "[{}] is missing required key `{key}` (section at line {})",
            self.name, self.line
        ))
    }

    /// Everything must have been taken by now.
    fn finish(self) -> Result<(), ConfigError> {
        if let Some((key, e)) = self.entries.into_iter().next() {
            return Err(ConfigError::parse(
                e.line,
                e.key_col,
                format!("unknown key `{key}` in [{}]", self.name),
            ));
        }
        Ok(())
    }
}

const KNOWN_SECTIONS: &[&str] = &[
    "material", "eos", "solver", "output", "surface", "crush", "triax", "shock",
];

fn view(
    sections: &mut BTreeMap<String, RawSection>,
    name: &'static str,
) -> Option<SectionView> {
    sections.remove(name).map(|s| SectionView {
        name,
        line: s.line,
        entries: s.entries,
    })
}

/// Parse and validate a config from text. See `parse_config` for the
/// file-path form.
pub fn parse_config_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut sections = scan(text)?;
    if let Some((name, sec)) = sections
        .iter()
        .find(|(name, _)| !KNOWN_SECTIONS.contains(&name.as_str()))
    {
        return Err(ConfigError::parse(
            sec.line,
            1,
            format!("unknown section [{name}]"),
        ));
    }

    let mut mat_view = view(&mut sections, "material")
        .ok_or_else(|| ConfigError::invalid("missing required section [material]"))?;
    let material = parse_material(&mut mat_view)?;
    mat_view.finish()?;

    let mut eos_view = view(&mut sections, "eos")
        .ok_or_else(|| ConfigError::invalid("missing required section [eos]"))?;
    let eos = parse_eos(&mut eos_view, material.t0)?;
    eos_view.finish()?;

    let solver = match view(&mut sections, "solver") {
        None => SolverBlock::default(),
        Some(mut v) => {
            let d = SolverBlock::default();
            let b = SolverBlock {
                tol: v.take_f64("tol")?.unwrap_or(d.tol),
                max_iter: v.take_usize("max_iter")?.unwrap_or(d.max_iter),
                cfl: v.take_f64("cfl")?.unwrap_or(d.cfl),
                cells: v.take_usize("cells")?.unwrap_or(d.cells),
            };
            v.finish()?;
            b
        }
    };

    let output = match view(&mut sections, "output") {
        None => OutputBlock::default(),
        Some(mut v) => {
            let d = OutputBlock::default();
            let b = OutputBlock {
                dir: v.take_string("dir")?.unwrap_or(d.dir),
                stride: v.take_usize("stride")?.unwrap_or(d.stride),
            };
            v.finish()?;
            b
        }
    };

    let surface = match view(&mut sections, "surface") {
        None => SurfaceBlock::default(),
        Some(mut v) => {
            let d = SurfaceBlock::default();
            let b = SurfaceBlock {
                n_points: v.take_usize("n_points")?.unwrap_or(d.n_points),
                z: v.take_f64("z")?.unwrap_or(d.z),
            };
            v.finish()?;
            b
        }
    };

    let crush = match view(&mut sections, "crush") {
        None => None,
        Some(mut v) => {
            let e_v = v.take_f64("target_e_v")?;
            let press = v.take_f64("target_pressure")?;
            let target = match (e_v, press) {
                (Some(e), None) => CrushTarget::VolStrain(e),
                (None, Some(p)) => CrushTarget::Pressure(p),
                (None, None) => {
                    return Err(ConfigError::invalid(
                        "[crush] needs one of `target_e_v` or `target_pressure`",
                    ))
                }
                (Some(_), Some(_)) => {
                    return Err(ConfigError::invalid(
                        "[crush] takes only one of `target_e_v` and `target_pressure`",
                    ))
                }
            };
            let b = CrushBlock {
                target,
                n_steps: v.take_usize("n_steps")?.unwrap_or(300),
                unload: v.take_bool("unload")?.unwrap_or(true),
            };
            v.finish()?;
            Some(b)
        }
    };

    let triax = match view(&mut sections, "triax") {
        None => None,
        Some(mut v) => {
            let b = TriaxBlock {
                confinement: v.need_f64("confinement")?,
                axial_step: v.take_f64("axial_step")?.unwrap_or(2e-5),
                n_steps: v.take_usize("n_steps")?.unwrap_or(2000),
                dt: v.take_f64("dt")?.unwrap_or(1e-3),
            };
            v.finish()?;
            Some(b)
        }
    };

    let shock = match view(&mut sections, "shock") {
        None => None,
        Some(mut v) => {
            let b = ShockBlock {
                r_inner: v.take_f64("r_inner")?.unwrap_or(12.0),
                r_outer: v.take_f64("r_outer")?.unwrap_or(400.0),
                t_final: v.take_f64("t_final")?.unwrap_or(0.1),
                p_peak: v.need_f64("p_peak")?,
                tau: v.need_f64("tau")?,
                t_end: v.need_f64("t_end")?,
                gauges: v
                    .take_list_f64("gauges")?
                    .unwrap_or_else(|| vec![55.0, 114.0, 191.0]),
                snapshots: v.take_list_f64("snapshots")?.unwrap_or_default(),
                damping: v.take_f64("damping")?.unwrap_or(0.0),
                c_q: v.take_f64("c_q")?.unwrap_or(2.0),
                c_l: v.take_f64("c_l")?.unwrap_or(0.06),
            };
            v.finish()?;
            Some(b)
        }
    };

    let cfg = RunConfig {
        material,
        eos,
        solver,
        output,
        surface,
        crush,
        triax,
        shock,
    };
    validate(&cfg)?;
    Ok(cfg)
}

/// Parse and validate the config file at `path`.
pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_config_str(&text)
}

fn parse_material(v: &mut SectionView) -> Result<MaterialBlock, ConfigError> {
    let shear_mode = match v.take_string("shear_mode")? {
        None => return Err(v.missing("shear_mode")),
        Some(s) => match s.as_str() {
            "constant_g" => ShearMode::ConstantG,
            "constant_nu" => ShearMode::ConstantNu,
            other => {
                return Err(ConfigError::invalid(format!(
                    "shear_mode must be constant_g or constant_nu, got `{other}`"
                )))
            }
        },
    };
    let nu0 = v.take_f64("nu0")?;
    if shear_mode == ShearMode::ConstantNu && nu0.is_none() {
        return Err(ConfigError::invalid(
            "[material] shear_mode = constant_nu requires `nu0`",
        ));
    }
    Ok(MaterialBlock {
        rho0: v.need_f64("rho0")?,
        t0: v.need_f64("T0")?,
        g0: v.need_f64("G0")?,
        h: v.need_f64("H")?,
        beta_max: v.need_f64("beta_max")?,
        omega: v.need_f64("omega")?,
        p_c0: v.need_f64("p_c0")?,
        x: v.need_f64("X")?,
        alpha0: v.need_f64("alpha0")?,
        gamma0: v.need_f64("gamma0")?,
        p_y: v.need_f64("P_y")?,
        z_max: v.need_f64("z_max")?,
        shear_mode,
        nu0: nu0.unwrap_or(0.25),
    })
}

fn parse_eos(v: &mut SectionView, t0: f64) -> Result<EosBlock, ConfigError> {
    let kind = v
        .take_string("kind")?
        .ok_or_else(|| v.missing("kind"))?;
    let spec = match kind.as_str() {
        "analytic" => EosSpec::Analytic {
            k0: v.need_f64("k0")?,
            rho_ref: v.need_f64("rho_ref")?,
            t_ref: v.take_f64("t_ref")?.unwrap_or(t0),
            gamma0: v.need_f64("gamma0")?,
            cv: v.need_f64("cv")?,
        },
        "table" => EosSpec::Table {
            path: v.take_string("path")?.ok_or_else(|| v.missing("path"))?,
        },
        other => {
            return Err(ConfigError::invalid(format!(
                "[eos] kind must be analytic or table, got `{other}`"
            )))
        }
    };
    let scan = ScanBlock {
        rho_min: v.take_f64("rho_min")?,
        rho_max: v.take_f64("rho_max")?,
        n_rho: v.take_usize("n_rho")?,
        t_min: v.take_f64("t_min")?,
        t_max: v.take_f64("t_max")?,
        n_t: v.take_usize("n_t")?,
    };
    Ok(EosBlock { spec, scan })
}

// ---------------------------------------------------------------------
// validation

/// Build the core parameter set from the material block, running every
/// constitutive-level invariant check on the way.
pub fn material_params(m: &MaterialBlock) -> Result<MaterialParams, ConfigError> {
    let as_invalid = |e: &dyn fmt::Display| ConfigError::invalid(e.to_string());
    let elastic = ElasticParams::new(m.g0, m.nu0, m.shear_mode).map_err(|e| as_invalid(&e))?;
    let crush =
        CrushParams::new(m.h, m.beta_max, m.omega, m.z_max).map_err(|e| as_invalid(&e))?;
    let yld = YieldParams::new(m.alpha0, m.gamma0, m.p_y, m.x, m.p_c0).map_err(|e| as_invalid(&e))?;
    let params = MaterialParams {
        rho0: m.rho0,
        t0: m.t0,
        elastic,
        crush,
        yld,
        solver: SolverParams {
            tol: 1e-10,
            max_iter: 50,
        },
    };
    params.validate().map_err(|e| as_invalid(&e))?;
    Ok(params)
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    material_params(&cfg.material)?;
    let bad = |msg: String| Err(ConfigError::invalid(msg));

    match &cfg.eos.spec {
        EosSpec::Analytic {
            k0,
            rho_ref,
            t_ref,
            gamma0,
            cv,
        } => {
            if !(*k0 > 0.0) {
                return bad(format!("[eos] k0 must be positive, got {k0:e}"));
            }
            if !(*rho_ref > 0.0) {
                return bad(format!("[eos] rho_ref must be positive, got {rho_ref:e}"));
            }
            if !(*t_ref >= 0.0) {
                return bad(format!("[eos] t_ref must be non-negative, got {t_ref:e}"));
            }
            if !(*gamma0 >= 0.0) {
                return bad(format!("[eos] gamma0 must be non-negative, got {gamma0:e}"));
            }
            if !(*cv > 0.0) {
                return bad(format!("[eos] cv must be positive, got {cv:e}"));
            }
        }
        EosSpec::Table { .. } => {}
    }
    let scan = &cfg.eos.scan;
    if let (Some(lo), Some(hi)) = (scan.rho_min, scan.rho_max) {
        if !(lo > 0.0 && hi > lo) {
            return bad(format!(
                "[eos] scan range needs 0 < rho_min < rho_max, got {lo:e}..{hi:e}"
            ));
        }
    }
    if let (Some(lo), Some(hi)) = (scan.t_min, scan.t_max) {
        if !(lo >= 0.0 && hi > lo) {
            return bad(format!(
                "[eos] scan range needs 0 <= t_min < t_max, got {lo:e}..{hi:e}"
            ));
        }
    }
    for (key, n) in [("n_rho", scan.n_rho), ("n_t", scan.n_t)] {
        if let Some(n) = n {
            if n < 2 {
                return bad(format!("[eos] {key} must be at least 2, got {n}"));
            }
        }
    }

    let s = &cfg.solver;
    if !(s.tol > 0.0) {
        return bad(format!("[solver] tol must be positive, got {:e}", s.tol));
    }
    if s.max_iter == 0 {
        return bad("[solver] max_iter must be at least 1".into());
    }
    if !(s.cfl > 0.0 && s.cfl <= 1.0) {
        return bad(format!("[solver] cfl must lie in (0, 1], got {:e}", s.cfl));
    }
    if s.cells < 2 {
        return bad(format!("[solver] cells must be at least 2, got {}", s.cells));
    }

    if cfg.output.stride == 0 {
        return bad("[output] stride must be at least 1".into());
    }

    if cfg.surface.n_points < 2 {
        return bad(format!(
            "[surface] n_points must be at least 2, got {}",
            cfg.surface.n_points
        ));
    }
    if !(cfg.surface.z >= 0.0 && cfg.surface.z <= cfg.material.z_max) {
        return bad(format!(
            "[surface] z must lie in [0, z_max], got {:e} with z_max {:e}",
            cfg.surface.z, cfg.material.z_max
        ));
    }

    if let Some(c) = &cfg.crush {
        if c.n_steps == 0 {
            return bad("[crush] n_steps must be at least 1".into());
        }
        if let CrushTarget::Pressure(p) = c.target {
            if !(p >= 0.0) {
                return bad(format!(
                    "[crush] target_pressure must be non-negative, got {p:e}"
                ));
            }
        }
    }

    if let Some(t) = &cfg.triax {
        if !(t.confinement >= 0.0) {
            return bad(format!(
                "[triax] confinement must be non-negative, got {:e}",
                t.confinement
            ));
        }
        if !(t.axial_step > 0.0) {
            return bad(format!(
                "[triax] axial_step must be positive, got {:e}",
                t.axial_step
            ));
        }
        if t.n_steps == 0 {
            return bad("[triax] n_steps must be at least 1".into());
        }
        if !(t.dt > 0.0) {
            return bad(format!("[triax] dt must be positive, got {:e}", t.dt));
        }
    }

    if let Some(sh) = &cfg.shock {
        if !(sh.r_inner > 0.0 && sh.r_outer > sh.r_inner) {
            return bad(format!(
                "[shock] needs 0 < r_inner < r_outer, got {:e} and {:e}",
                sh.r_inner, sh.r_outer
            ));
        }
        if !(sh.t_final > 0.0) {
            return bad(format!(
                "[shock] t_final must be positive, got {:e}",
                sh.t_final
            ));
        }
        if !(sh.p_peak >= 0.0) {
            return bad(format!(
                "[shock] p_peak must be non-negative, got {:e}",
                sh.p_peak
            ));
        }
        if sh.p_peak > 0.0 && !(sh.tau > 0.0 && sh.t_end > 0.0) {
            return bad(format!(
                "[shock] a live load needs tau > 0 and t_end > 0, got {:e} and {:e}",
                sh.tau, sh.t_end
            ));
        }
        for &g in &sh.gauges {
            if !(g > sh.r_inner && g < sh.r_outer) {
                return bad(format!(
                    "[shock] gauge at {g:e} m falls outside the open domain ({:e}, {:e})",
                    sh.r_inner, sh.r_outer
                ));
            }
        }
        for &ts in &sh.snapshots {
            if !(ts >= 0.0) {
                return bad(format!("[shock] snapshot time {ts:e} must be non-negative"));
            }
        }
        if !(sh.damping >= 0.0) {
            return bad(format!(
                "[shock] damping must be non-negative, got {:e}",
                sh.damping
            ));
        }
        if !(sh.c_q >= 0.0 && sh.c_l >= 0.0) {
            return bad(format!(
                "[shock] viscosity coefficients must be non-negative, got c_q {:e}, c_l {:e}",
                sh.c_q, sh.c_l
            ));
        }
    }

    Ok(())
}

// ---------------------------------------------------------------------
// normalized echo

fn push_kv(out: &mut String, key: &str, v: impl fmt::Display) {
    out.push_str(key);
    out.push_str(" = ");
    out.push_str(&v.to_string());
    out.push('\n');
}

fn push_list(out: &mut String, key: &str, vs: &[f64]) {
    let joined = vs
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ");
    push_kv(out, key, joined);
}

/// Serialize to the normalized INI echo. `parse_config_str(to_ini(c))`
/// returns a config equal to `c`; the float formatting round-trips
/// exactly.
pub fn to_ini(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let m = &cfg.material;
    out.push_str("[material]\n");
    push_kv(&mut out, "rho0", m.rho0);
    push_kv(&mut out, "T0", m.t0);
    push_kv(&mut out, "G0", m.g0);
    push_kv(&mut out, "H", m.h);
    push_kv(&mut out, "beta_max", m.beta_max);
    push_kv(&mut out, "omega", m.omega);
    push_kv(&mut out, "p_c0", m.p_c0);
    push_kv(&mut out, "X", m.x);
    push_kv(&mut out, "alpha0", m.alpha0);
    push_kv(&mut out, "gamma0", m.gamma0);
    push_kv(&mut out, "P_y", m.p_y);
    push_kv(&mut out, "z_max", m.z_max);
    push_kv(
        &mut out,
        "shear_mode",
        match m.shear_mode {
            ShearMode::ConstantG => "constant_g",
            ShearMode::ConstantNu => "constant_nu",
        },
    );
    push_kv(&mut out, "nu0", m.nu0);

    out.push_str("\n[eos]\n");
    match &cfg.eos.spec {
        EosSpec::Analytic {
            k0,
            rho_ref,
            t_ref,
            gamma0,
            cv,
        } => {
            push_kv(&mut out, "kind", "analytic");
            push_kv(&mut out, "k0", k0);
            push_kv(&mut out, "rho_ref", rho_ref);
            push_kv(&mut out, "t_ref", t_ref);
            push_kv(&mut out, "gamma0", gamma0);
            push_kv(&mut out, "cv", cv);
        }
        EosSpec::Table { path } => {
            push_kv(&mut out, "kind", "table");
            push_kv(&mut out, "path", path);
        }
    }
    let scan = &cfg.eos.scan;
    for (key, v) in [
        ("rho_min", scan.rho_min),
        ("rho_max", scan.rho_max),
        ("t_min", scan.t_min),
        ("t_max", scan.t_max),
    ] {
        if let Some(v) = v {
            push_kv(&mut out, key, v);
        }
    }
    for (key, n) in [("n_rho", scan.n_rho), ("n_t", scan.n_t)] {
        if let Some(n) = n {
            push_kv(&mut out, key, n);
        }
    }

    out.push_str("\n[solver]\n");
    push_kv(&mut out, "tol", cfg.solver.tol);
    push_kv(&mut out, "max_iter", cfg.solver.max_iter);
    push_kv(&mut out, "cfl", cfg.solver.cfl);
    push_kv(&mut out, "cells", cfg.solver.cells);

    out.push_str("\n[output]\n");
    push_kv(&mut out, "dir", &cfg.output.dir);
    push_kv(&mut out, "stride", cfg.output.stride);

    out.push_str("\n[surface]\n");
    push_kv(&mut out, "n_points", cfg.surface.n_points);
    push_kv(&mut out, "z", cfg.surface.z);

    if let Some(c) = &cfg.crush {
        out.push_str("\n[crush]\n");
        match c.target {
            CrushTarget::VolStrain(e) => push_kv(&mut out, "target_e_v", e),
            CrushTarget::Pressure(p) => push_kv(&mut out, "target_pressure", p),
        }
        push_kv(&mut out, "n_steps", c.n_steps);
        push_kv(&mut out, "unload", c.unload);
    }

    if let Some(t) = &cfg.triax {
        out.push_str("\n[triax]\n");
        push_kv(&mut out, "confinement", t.confinement);
        push_kv(&mut out, "axial_step", t.axial_step);
        push_kv(&mut out, "n_steps", t.n_steps);
        push_kv(&mut out, "dt", t.dt);
    }

    if let Some(sh) = &cfg.shock {
        out.push_str("\n[shock]\n");
        push_kv(&mut out, "r_inner", sh.r_inner);
        push_kv(&mut out, "r_outer", sh.r_outer);
        push_kv(&mut out, "t_final", sh.t_final);
        push_kv(&mut out, "p_peak", sh.p_peak);
        push_kv(&mut out, "tau", sh.tau);
        push_kv(&mut out, "t_end", sh.t_end);
        push_list(&mut out, "gauges", &sh.gauges);
        push_list(&mut out, "snapshots", &sh.snapshots);
        push_kv(&mut out, "damping", sh.damping);
        push_kv(&mut out, "c_q", sh.c_q);
        push_kv(&mut out, "c_l", sh.c_l);
    }

    out
}
