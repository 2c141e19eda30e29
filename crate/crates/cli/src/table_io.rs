//! Loader for tabulated EOS surfaces.
//!
//! The file is a CSV with header `rho,t,p,e` and one row per grid
//! point: density (kg/m^3), temperature (K), pressure (Pa), specific
//! internal energy (J/kg). Rows may come in any order but must fill a
//! complete rectangular rho x T grid; the structural invariants
//! (monotone grids, invertible surfaces) are then checked by the core
//! table constructor.

use std::path::Path;

use ypcap_core::EosTable;

use crate::config::ConfigError;

fn invalid(path: &Path, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError::Validation {
        msg: format!("EOS table {}: {msg}", path.display()),
    }
}

/// Read and assemble the table at `path`.
pub fn load_table(path: &Path) -> Result<EosTable, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;

    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(invalid(path, "empty file")),
            Some((_, l)) if l.trim().is_empty() || l.trim_start().starts_with('#') => continue,
            Some((_, l)) => break l,
        }
    };
    if header.trim() != "rho,t,p,e" {
        return Err(invalid(
            path,
            format!("header must be `rho,t,p,e`, got `{}`", header.trim()),
        ));
    }

    let mut points: Vec<(f64, f64, f64, f64)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(invalid(
                path,
                format!("line {line_no}: expected 4 fields, got {}", fields.len()),
            ));
        }
        let mut vals = [0.0f64; 4];
        for (slot, field) in vals.iter_mut().zip(&fields) {
            *slot = field.parse().map_err(|_| {
                invalid(path, format!("line {line_no}: `{field}` is not a number"))
            })?;
        }
        points.push((vals[0], vals[1], vals[2], vals[3]));
    }
    if points.is_empty() {
        return Err(invalid(path, "no data rows"));
    }

    let mut rho: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut t: Vec<f64> = points.iter().map(|p| p.1).collect();
    rho.sort_by(f64::total_cmp);
    rho.dedup();
    t.sort_by(f64::total_cmp);
    t.dedup();
    let (nr, nt) = (rho.len(), t.len());
    if nr * nt != points.len() {
        return Err(invalid(
            path,
            format!(
                "grid is not rectangular: {} rows but {nr} densities x {nt} temperatures",
                points.len()
            ),
        ));
    }

    // rho-major fill, with duplicate detection via NaN sentinels
    let mut p_surf = vec![f64::NAN; nr * nt];
    let mut e_surf = vec![f64::NAN; nr * nt];
    for (r, tt, p, e) in points {
        let i = rho.partition_point(|&x| x < r);
        let j = t.partition_point(|&x| x < tt);
        let idx = i * nt + j;
        if !p_surf[idx].is_nan() {
            return Err(invalid(
                path,
                format!("duplicate grid point at rho = {r}, t = {tt}"),
            ));
        }
        p_surf[idx] = p;
        e_surf[idx] = e;
    }

    EosTable::new(rho, t, p_surf, e_surf).map_err(|e| invalid(path, e))
}
