//! Rectilinear EOS table on strictly increasing (rho, T) grids with
//! bilinear interpolation, plus the plain-text exchange format:
//!
//! ```text
//! ypcap-eos 1
//! NR <int> NT <int>
//! RHO <NR floats, ascending>        # kg/m^3
//! T   <NT floats, ascending>        # K
//! P   <NR*NT floats, rho-major>     # Pa
//! E   <NR*NT floats, rho-major>     # J/kg
//! ```
//!
//! `#` starts a comment that runs to end of line. Surfaces are stored
//! rho-major: all NT values for the first density, then the next.

use super::EosError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("table invariant violated: {0}")]
    Invariant(String),
}

/// How queries outside the grid hull are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RangePolicy {
    /// Hard error (the default): out-of-range states are a physics bug.
    #[default]
    Error,
    /// Clamp the query onto the hull boundary and keep going.
    Clamp,
}

/// Tabulated EOS. Invariants checked at construction:
/// grids strictly increasing with at least two points each, energy
/// strictly increasing in T on every isochore, pressure non-decreasing
/// in rho on every isotherm (so both inversions are well-posed).
#[derive(Debug, Clone)]
pub struct EosTable {
    rho: Vec<f64>,
    t: Vec<f64>,
    /// Pressure surface (Pa), rho-major.
    p: Vec<f64>,
    /// Specific internal energy surface (J/kg), rho-major.
    e: Vec<f64>,
    policy: RangePolicy,
}

/// Relative tolerance for the bisection inversions.
const INVERT_REL_TOL: f64 = 1e-10;
/// Relative density step for the finite-difference tangent modulus.
const TANGENT_REL_STEP: f64 = 1e-6;

impl EosTable {
    pub fn new(rho: Vec<f64>, t: Vec<f64>, p: Vec<f64>, e: Vec<f64>) -> Result<Self, TableError> {
        let (nr, nt) = (rho.len(), t.len());
        if nr < 2 || nt < 2 {
            return Err(TableError::Invariant(format!(
                "need at least a 2x2 grid, got {nr}x{nt}"
            )));
        }
        if p.len() != nr * nt || e.len() != nr * nt {
            return Err(TableError::Invariant(format!(
                "surface size mismatch: grid {nr}x{nt} but P has {} and E has {} entries",
                p.len(),
                e.len()
            )));
        }
        for (name, grid) in [("RHO", &rho), ("T", &t)] {
            if grid.iter().any(|v| !v.is_finite()) {
                return Err(TableError::Invariant(format!("{name} grid has a non-finite entry")));
            }
            if grid.windows(2).any(|w| w[1] <= w[0]) {
                return Err(TableError::Invariant(format!(
                    "{name} grid is not strictly increasing"
                )));
            }
        }
        if p.iter().chain(e.iter()).any(|v| !v.is_finite()) {
            return Err(TableError::Invariant("surface has a non-finite entry".into()));
        }
        // E strictly increasing in T along each isochore keeps T(rho, E) unique.
        for i in 0..nr {
            for j in 1..nt {
                if e[i * nt + j] <= e[i * nt + j - 1] {
                    return Err(TableError::Invariant(format!(
                        "E not strictly increasing in T at rho index {i} between T indices {} and {j}",
                        j - 1
                    )));
                }
            }
        }
        // P non-decreasing in rho along each isotherm keeps rho(P, T) well-posed.
        for j in 0..nt {
            for i in 1..nr {
                if p[i * nt + j] < p[(i - 1) * nt + j] {
                    return Err(TableError::Invariant(format!(
                        "P decreasing in rho at T index {j} between rho indices {} and {i}",
                        i - 1
                    )));
                }
            }
        }
        Ok(Self {
            rho,
            t,
            p,
            e,
            policy: RangePolicy::Error,
        })
    }

    /// Sample closed-form surfaces onto the given grids.
    pub fn from_fn(
        rho: Vec<f64>,
        t: Vec<f64>,
        mut p_of: impl FnMut(f64, f64) -> f64,
        mut e_of: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self, TableError> {
        let mut p = Vec::with_capacity(rho.len() * t.len());
        let mut e = Vec::with_capacity(rho.len() * t.len());
        for &r in &rho {
            for &tt in &t {
                p.push(p_of(r, tt));
                e.push(e_of(r, tt));
            }
        }
        Self::new(rho, t, p, e)
    }

    pub fn with_policy(mut self, policy: RangePolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn policy(&self) -> RangePolicy {
        self.policy
    }

    pub fn rho_range(&self) -> (f64, f64) {
        (self.rho[0], *self.rho.last().unwrap())
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.t[0], *self.t.last().unwrap())
    }

    pub fn grid_dims(&self) -> (usize, usize) {
        (self.rho.len(), self.t.len())
    }

    /// Clamp-or-error on a grid axis, then locate the bracketing cell.
    /// Returns (lower index, interpolation fraction).
    fn locate(
        grid: &[f64],
        what: &'static str,
        x: f64,
        policy: RangePolicy,
    ) -> Result<(usize, f64), EosError> {
        let (lo, hi) = (grid[0], *grid.last().unwrap());
        let x = if x < lo || x > hi || !x.is_finite() {
            match policy {
                RangePolicy::Clamp if x.is_finite() => x.clamp(lo, hi),
                _ => {
                    return Err(EosError::OutOfTableRange {
                        what,
                        value: x,
                        lo,
                        hi,
                    })
                }
            }
        } else {
            x
        };
        // partition_point gives the first index with grid[i] > x
        let i = grid.partition_point(|&g| g <= x).min(grid.len() - 1) - 1;
        let frac = (x - grid[i]) / (grid[i + 1] - grid[i]);
        Ok((i, frac))
    }

    fn bilinear(&self, surface: &[f64], rho: f64, t: f64) -> Result<f64, EosError> {
        let nt = self.t.len();
        let (i, fr) = Self::locate(&self.rho, "rho", rho, self.policy)?;
        let (j, ft) = Self::locate(&self.t, "T", t, self.policy)?;
        let f00 = surface[i * nt + j];
        let f01 = surface[i * nt + j + 1];
        let f10 = surface[(i + 1) * nt + j];
        let f11 = surface[(i + 1) * nt + j + 1];
        Ok(f00 * (1.0 - fr) * (1.0 - ft)
            + f10 * fr * (1.0 - ft)
            + f01 * (1.0 - fr) * ft
            + f11 * fr * ft)
    }

    pub fn pressure(&self, rho: f64, t: f64) -> Result<f64, EosError> {
        self.bilinear(&self.p, rho, t)
    }

    pub fn energy(&self, rho: f64, t: f64) -> Result<f64, EosError> {
        self.bilinear(&self.e, rho, t)
    }

    /// Bisect f on [lo, hi] assuming f is monotone non-decreasing with
    /// f(lo) <= 0 <= f(hi). Converges to relative tolerance on x.
    fn bisect(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= INVERT_REL_TOL * mid.abs().max(1.0) {
                return mid;
            }
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn temperature_from_energy(&self, rho: f64, e: f64) -> Result<f64, EosError> {
        let (t_lo, t_hi) = self.t_range();
        // Isochore endpoints bound the attainable energies at this rho.
        let e_lo = self.energy(rho, t_lo)?;
        let e_hi = self.energy(rho, t_hi)?;
        let e = if e < e_lo || e > e_hi {
            match self.policy {
                RangePolicy::Clamp if e.is_finite() => e.clamp(e_lo, e_hi),
                _ => {
                    return Err(EosError::OutOfTableRange {
                        what: "E",
                        value: e,
                        lo: e_lo,
                        hi: e_hi,
                    })
                }
            }
        } else {
            e
        };
        Ok(Self::bisect(t_lo, t_hi, |t| {
            self.energy(rho, t).expect("in range") - e
        }))
    }

    pub fn density_from_pressure(&self, p: f64, t: f64) -> Result<f64, EosError> {
        let (r_lo, r_hi) = self.rho_range();
        let p_lo = self.pressure(r_lo, t)?;
        let p_hi = self.pressure(r_hi, t)?;
        let p = if p < p_lo || p > p_hi {
            match self.policy {
                RangePolicy::Clamp if p.is_finite() => p.clamp(p_lo, p_hi),
                _ => {
                    return Err(EosError::OutOfTableRange {
                        what: "P",
                        value: p,
                        lo: p_lo,
                        hi: p_hi,
                    })
                }
            }
        } else {
            p
        };
        Ok(Self::bisect(r_lo, r_hi, |r| {
            self.pressure(r, t).expect("in range") - p
        }))
    }

    /// K = rho * dP/drho|_T by central difference; the stencil is pulled
    /// inside the grid near its edges.
    pub fn tangent_bulk_modulus(&self, rho: f64, t: f64) -> Result<f64, EosError> {
        let (r_lo, r_hi) = self.rho_range();
        if (rho < r_lo || rho > r_hi) && self.policy == RangePolicy::Error {
            return Err(EosError::OutOfTableRange {
                what: "rho",
                value: rho,
                lo: r_lo,
                hi: r_hi,
            });
        }
        let rho_c = rho.clamp(r_lo, r_hi);
        let h = TANGENT_REL_STEP * rho_c.abs().max(1.0);
        let a = (rho_c - h).max(r_lo);
        let b = (rho_c + h).min(r_hi);
        let k = rho_c * (self.pressure(b, t)? - self.pressure(a, t)?) / (b - a);
        if k <= 0.0 {
            return Err(EosError::NonPositiveModulus { k, rho, t });
        }
        Ok(k)
    }

    /// Parse the `ypcap-eos 1` text format.
    pub fn from_text(text: &str) -> Result<Self, TableError> {
        let mut tokens = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            for tok in line.split_whitespace() {
                tokens.push((idx + 1, tok));
            }
        }
        let mut cursor = 0usize;
        let mut next = |expect: &str| -> Result<(usize, &str), TableError> {
            let got = tokens.get(cursor).copied().ok_or_else(|| TableError::Parse {
                line: tokens.last().map_or(1, |t| t.0),
                msg: format!("unexpected end of file, expected {expect}"),
            })?;
            cursor += 1;
            Ok(got)
        };
        let keyword = |tok: (usize, &str), want: &str| -> Result<(), TableError> {
            if tok.1 != want {
                return Err(TableError::Parse {
                    line: tok.0,
                    msg: format!("expected `{want}`, found `{}`", tok.1),
                });
            }
            Ok(())
        };
        let int = |tok: (usize, &str)| -> Result<usize, TableError> {
            tok.1.parse().map_err(|_| TableError::Parse {
                line: tok.0,
                msg: format!("expected an integer, found `{}`", tok.1),
            })
        };

        keyword(next("`ypcap-eos`")?, "ypcap-eos")?;
        let version = next("format version")?;
        if version.1 != "1" {
            return Err(TableError::Parse {
                line: version.0,
                msg: format!("unsupported format version `{}`", version.1),
            });
        }
        keyword(next("`NR`")?, "NR")?;
        let nr = int(next("NR value")?)?;
        keyword(next("`NT`")?, "NT")?;
        let nt = int(next("NT value")?)?;

        let mut floats = |want: &str, n: usize| -> Result<Vec<f64>, TableError> {
            let head = next(&format!("`{want}`"))?;
            keyword(head, want)?;
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let tok = next(&format!("{want} value"))?;
                let v: f64 = tok.1.parse().map_err(|_| TableError::Parse {
                    line: tok.0,
                    msg: format!("expected a number in {want} block, found `{}`", tok.1),
                })?;
                out.push(v);
            }
            Ok(out)
        };

        let rho = floats("RHO", nr)?;
        let t = floats("T", nt)?;
        let p = floats("P", nr * nt)?;
        let e = floats("E", nr * nt)?;
        if let Some(&(line, tok)) = tokens.get(cursor) {
            return Err(TableError::Parse {
                line,
                msg: format!("trailing content `{tok}` after E block"),
            });
        }
        Self::new(rho, t, p, e)
    }

    /// Emit the canonical text form; `from_text` of the output
    /// reconstructs the table bit-exactly (floats round-trip via Rust's
    /// shortest-exact formatting).
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let (nr, nt) = self.grid_dims();
        let mut s = String::new();
        writeln!(s, "ypcap-eos 1").unwrap();
        writeln!(s, "NR {nr} NT {nt}").unwrap();
        let block = |s: &mut String, name: &str, vals: &[f64], per_line: usize| {
            write!(s, "{name}").unwrap();
            for (k, v) in vals.iter().enumerate() {
                if k > 0 && k % per_line == 0 {
                    write!(s, "\n ").unwrap();
                }
                write!(s, " {v}").unwrap();
            }
            writeln!(s).unwrap();
        };
        block(&mut s, "RHO", &self.rho, 8);
        block(&mut s, "T", &self.t, 8);
        block(&mut s, "P", &self.p, nt.min(8));
        block(&mut s, "E", &self.e, nt.min(8));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::super::{AnalyticEos, Eos};
    use super::*;
    use approx::assert_relative_eq;

    /// 2x2 table of the plane P = rho + T, E = T (units abused, fine for math).
    fn tiny() -> EosTable {
        EosTable::new(
            vec![1.0, 2.0],
            vec![10.0, 20.0],
            vec![11.0, 21.0, 12.0, 22.0],
            vec![10.0, 20.0, 10.5, 20.5],
        )
        .unwrap()
    }

    fn sampled_analytic(nr: usize, nt: usize) -> EosTable {
        let a = AnalyticEos::new(2000.0, 298.15, 10.0e9, 1.0, 1000.0);
        let eos = Eos::Analytic(a);
        let rho: Vec<f64> = (0..nr)
            .map(|i| 1600.0 + 1200.0 * i as f64 / (nr - 1) as f64)
            .collect();
        let t: Vec<f64> = (0..nt)
            .map(|j| 200.0 + 800.0 * j as f64 / (nt - 1) as f64)
            .collect();
        EosTable::from_fn(
            rho,
            t,
            |r, tt| eos.pressure(r, tt).unwrap(),
            |r, tt| eos.energy(r, tt).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn interpolation_hits_grid_nodes() {
        let tab = tiny();
        assert_eq!(tab.pressure(1.0, 10.0).unwrap(), 11.0);
        assert_eq!(tab.pressure(2.0, 20.0).unwrap(), 22.0);
        assert_eq!(tab.energy(2.0, 10.0).unwrap(), 10.5);
        // bilinear midpoint of a plane is exact
        assert_relative_eq!(tab.pressure(1.5, 15.0).unwrap(), 16.5, epsilon = 1e-12);
    }

    #[test]
    fn linear_surface_reproduced_exactly() {
        let tab = sampled_analytic(7, 5);
        let eos = Eos::Analytic(AnalyticEos::new(2000.0, 298.15, 10.0e9, 1.0, 1000.0));
        // The analytic surface is bilinear, so off-node queries are exact.
        for &(r, t) in &[(1713.0, 333.3), (2481.5, 901.0), (1600.0, 1000.0)] {
            assert_relative_eq!(
                tab.pressure(r, t).unwrap(),
                eos.pressure(r, t).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn inversions_round_trip() {
        let tab = sampled_analytic(12, 9);
        let (rho, t) = (2217.0, 641.0);
        let e = tab.energy(rho, t).unwrap();
        assert_relative_eq!(
            tab.temperature_from_energy(rho, e).unwrap(),
            t,
            max_relative = 1e-9
        );
        let p = tab.pressure(rho, t).unwrap();
        assert_relative_eq!(
            tab.density_from_pressure(p, t).unwrap(),
            rho,
            max_relative = 1e-9
        );
    }

    #[test]
    fn tangent_modulus_matches_slope() {
        // Pressure linear in rho: slope is k0/rho_ref everywhere on the table.
        let tab = sampled_analytic(4, 3);
        let k = tab.tangent_bulk_modulus(2000.0, 400.0).unwrap();
        assert_relative_eq!(k, 10.0e9, max_relative = 1e-9);
        // edge of the grid pulls the stencil inward rather than erroring
        let k_edge = tab.tangent_bulk_modulus(1600.0, 400.0).unwrap();
        assert_relative_eq!(k_edge, 1600.0 / 2000.0 * 10.0e9, max_relative = 1e-9);
    }

    #[test]
    fn out_of_range_errors_and_clamping() {
        let tab = sampled_analytic(4, 3);
        assert!(matches!(
            tab.pressure(100.0, 400.0),
            Err(EosError::OutOfTableRange { what: "rho", .. })
        ));
        assert!(matches!(
            tab.temperature_from_energy(2000.0, 1.0e12),
            Err(EosError::OutOfTableRange { what: "E", .. })
        ));
        let clamped = tab.clone().with_policy(RangePolicy::Clamp);
        // clamped onto the grid edge: equals the edge value
        assert_relative_eq!(
            clamped.pressure(100.0, 400.0).unwrap(),
            clamped.pressure(1600.0, 400.0).unwrap(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            clamped.temperature_from_energy(2000.0, 1.0e12).unwrap(),
            1000.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn constructor_rejects_bad_tables() {
        // non-monotone rho grid
        assert!(EosTable::new(
            vec![2.0, 1.0],
            vec![10.0, 20.0],
            vec![0.0; 4],
            vec![1.0, 2.0, 1.0, 2.0],
        )
        .is_err());
        // E not increasing in T
        assert!(EosTable::new(
            vec![1.0, 2.0],
            vec![10.0, 20.0],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![2.0, 1.0, 1.0, 2.0],
        )
        .is_err());
        // P decreasing in rho
        assert!(EosTable::new(
            vec![1.0, 2.0],
            vec![10.0, 20.0],
            vec![5.0, 5.0, 4.0, 5.0],
            vec![1.0, 2.0, 1.0, 2.0],
        )
        .is_err());
    }

    #[test]
    fn text_format_round_trips() {
        let tab = sampled_analytic(5, 4);
        let text = tab.to_text();
        let back = EosTable::from_text(&text).unwrap();
        assert_eq!(back.grid_dims(), (5, 4));
        let (r, t) = (1900.0, 537.0);
        assert_eq!(
            back.pressure(r, t).unwrap().to_bits(),
            tab.pressure(r, t).unwrap().to_bits()
        );
    }

    #[test]
    fn parser_reports_line_numbers() {
        let bad = "ypcap-eos 1\nNR 2 NT 2\nRHO 1 2\nT 10 20\nP 1 2 x 4\nE 1 2 1.5 2.5\n";
        match EosTable::from_text(bad) {
            Err(TableError::Parse { line, msg }) => {
                assert_eq!(line, 5);
                assert!(msg.contains('x'), "{msg}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        // comments and inline comments are stripped
        let ok = "# header\nypcap-eos 1\nNR 2 NT 2 # dims\nRHO 1 2\nT 10 20\nP 1 2 1 2\nE 1 2 1.5 2.5\n";
        assert!(EosTable::from_text(ok).is_ok());
        // wrong magic
        assert!(matches!(
            EosTable::from_text("nope 1\n"),
            Err(TableError::Parse { line: 1, .. })
        ));
    }
}
