//! Frozen-field GL minimization on magnetic-periodic boxes and per-cell
//! density statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{
    flux_quanta, link_phases, local_energy, side_for_quanta, Box3, ComplexField, EnergyBreakdown, Potential,
};
use crate::minimize::{minimize_periodic, MinResult, SolverConfig};
use crate::spectral::{project_lll, LLLBasis};
use crate::verify::{CheckReport, FittedConstant, InequalityReport, Inputs};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedParams {
    pub b: f64,
    /// Cross-section side; `R^2 / 2 pi` must be a positive integer.
    pub r: f64,
    /// Height of the box.
    pub l: f64,
}

impl ReducedParams {
    pub fn new(b: f64, r: f64, l: f64) -> Result<Self> {
        let p = Self { b, r, l };
        p.validate()?;
        Ok(p)
    }

    /// Cubic box carrying `n` flux quanta.
    pub fn cubic(b: f64, n: u64) -> Result<Self> {
        let r = side_for_quanta(n);
        Self::new(b, r, r)
    }

    pub fn validate(&self) -> Result<()> {
        flux_quanta(self.r)?;
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::InvalidParameter(format!("b = {} must be positive", self.b)));
        }
        if !(self.l > 0.0 && self.l.is_finite()) {
            return Err(Error::InvalidParameter(format!("L = {} must be positive", self.l)));
        }
        Ok(())
    }

    pub fn flux_quanta(&self) -> u64 {
        flux_quanta(self.r).unwrap_or(0)
    }
}

/// Minimizer of the full functional on the magnetic-periodic box.
///
/// `counts` sites per cross-section axis, `counts3` along `x3`.
pub fn solve_periodic_gl(params: &ReducedParams, counts: usize, counts3: usize, cfg: &SolverConfig) -> Result<MinResult> {
    params.validate()?;
    let n = params.flux_quanta() as usize;
    if counts * counts < 64 * n {
        return Err(Error::InvalidCounts(format!(
            "{counts}^2 sites cannot resolve {n} flux quanta (need counts^2 >= 64 n)"
        )));
    }
    minimize_periodic(params.b, params.r, params.l, counts, counts3, cfg)
}

/// Diagnostics of a periodic minimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicDiagnostics {
    /// Scaled Euler-Lagrange residual from the solver.
    pub gl_residual: f64,
    pub max_modulus_sq: f64,
    /// Largest spread of `|u|^2` along an `x3` line.
    pub x3_variation: f64,
    /// `|E + int |u|^4 / 2| / (1 + |E|)`.
    pub virial_defect: f64,
    /// `|u|_2 / sqrt(volume)`.
    pub rms: f64,
}

/// `|E + int |u|^4 / 2| / (1 + |E|)`, zero at every critical point.
pub fn virial_defect(e: &EnergyBreakdown) -> f64 {
    (e.total + e.quartic).abs() / (1.0 + e.total.abs())
}

pub fn diagnostics(m: &MinResult) -> PeriodicDiagnostics {
    let g = m.field.grid();
    let n = g.counts();
    let plane = n[0] * n.get(1).copied().unwrap_or(1);
    let layers = g.site_count() / plane;
    let v = m.field.values();
    let mut x3_variation: f64 = 0.0;
    for s in 0..plane {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..layers {
            let a = v[s + k * plane].norm_sqr();
            lo = lo.min(a);
            hi = hi.max(a);
        }
        x3_variation = x3_variation.max(hi - lo);
    }
    PeriodicDiagnostics {
        gl_residual: m.residual,
        max_modulus_sq: m.field.norm_inf().powi(2),
        x3_variation,
        virial_defect: virial_defect(&m.breakdown),
        rms: m.field.norm_l2() / g.site_volume().sqrt(),
    }
}

/// Tiling of the box into `tiles[a]` equal cells per axis, shifted by `offset`
/// (cells wrap around the periodic directions).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSpec {
    pub tiles: [usize; 3],
    pub offset: [f64; 3],
}

impl PartitionSpec {
    pub fn uniform(t: usize) -> Self {
        Self {
            tiles: [t; 3],
            offset: [0.0; 3],
        }
    }

    pub fn shifted(mut self, offset: [f64; 3]) -> Self {
        self.offset = offset;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    /// Cell in unshifted coordinates (may extend past the domain when shifted).
    pub cell: Box3,
    pub sites: usize,
    pub mean_l2: f64,
    pub mean_l4: f64,
    /// Local energy, available for unshifted tilings.
    pub local: Option<EnergyBreakdown>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub cells: Vec<CellRecord>,
    pub mean_l2: f64,
    pub mean_l4: f64,
    /// `(max - min) / global mean` of the per-cell `|u|^4` means.
    pub l4_spread: f64,
}

/// Per-cell and global means of `|u|^2` and `|u|^4`.
pub fn cell_statistics(m: &MinResult, spec: &PartitionSpec) -> Result<CellStats> {
    let field = &m.field;
    let g = field.grid();
    let dim = g.dim();
    if spec.tiles[..dim].contains(&0) {
        return Err(Error::PartitionInvalid("tile counts must be positive".into()));
    }
    let ext = g.extents();
    let tiles: Vec<usize> = (0..3).map(|a| if a < dim { spec.tiles[a] } else { 1 }).collect();
    let total: usize = tiles.iter().product();
    let mut sites = vec![0usize; total];
    let mut s2 = vec![0.0; total];
    let mut s4 = vec![0.0; total];
    let v = field.values();
    for (s, u) in v.iter().enumerate() {
        let p = g.position(s);
        let mut idx = 0;
        for a in (0..dim).rev() {
            let w = ext[a] / tiles[a] as f64;
            let x = (p[a] + 0.5 * ext[a] - spec.offset[a]).rem_euclid(ext[a]);
            let t = ((x / w).floor() as usize).min(tiles[a] - 1);
            idx = idx * tiles[a] + t;
        }
        let q = u.norm_sqr();
        sites[idx] += 1;
        s2[idx] += q;
        s4[idx] += q * q;
    }
    if sites.contains(&0) {
        return Err(Error::PartitionInvalid("a cell contains no grid site".into()));
    }
    let unshifted = spec.offset[..dim].iter().all(|o| *o == 0.0);
    let potential = if dim == 2 { Potential::A0 } else { Potential::F };
    let links = link_phases(g, potential)?;
    let mut cells = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..3 {
            let t = rem % tiles[a];
            rem /= tiles[a];
            if a < dim {
                let w = ext[a] / tiles[a] as f64;
                lo[a] = -0.5 * ext[a] + spec.offset[a] + t as f64 * w;
                hi[a] = lo[a] + w;
            } else {
                lo[a] = -0.5;
                hi[a] = 0.5;
            }
        }
        let cell = Box3::from_bounds(lo, hi);
        let local = if unshifted {
            Some(local_energy(field, &links, m.breakdown.b, &cell)?)
        } else {
            None
        };
        let c = sites[idx] as f64;
        cells.push(CellRecord {
            cell,
            sites: sites[idx],
            mean_l2: s2[idx] / c,
            mean_l4: s4[idx] / c,
            local,
        });
    }
    let n = v.len() as f64;
    let mean_l2 = s2.iter().sum::<f64>() / n;
    let mean_l4 = s4.iter().sum::<f64>() / n;
    let (lo, hi) = cells
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.mean_l4), hi.max(c.mean_l4)));
    let l4_spread = if mean_l4 > 0.0 { (hi - lo) / mean_l4 } else { 0.0 };
    Ok(CellStats {
        cells,
        mean_l2,
        mean_l4,
        l4_spread,
    })
}

/// `|u - P u|_2 / |u|_2` with `P` the slice-wise projection onto the basis.
pub fn lll_distance(field: &ComplexField, basis: &LLLBasis) -> Result<f64> {
    let norm = field.norm_l2();
    if norm == 0.0 {
        return Ok(0.0);
    }
    let p = project_lll(field, basis)?;
    Ok(field.axpy(crate::C64::new(-1.0, 0.0), &p).norm_l2() / norm)
}

/// Density ratios of one periodic minimizer against `E_Ab`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub b: f64,
    pub n: u64,
    /// Cross-section grid spacing; zero for extrapolated rows.
    pub h: f64,
    pub mean_l2: f64,
    pub mean_l4: f64,
    /// `mean |u|^4 / (-2 E_Ab (1-b)^2)`.
    pub rho4: f64,
    /// `mean |u|^2 / (-2 E_Ab (1-b))`.
    pub rho2: f64,
    pub lll_distance: f64,
    pub diagnostics: PeriodicDiagnostics,
    pub energy_density: f64,
}

pub fn density_row(m: &MinResult, eab: f64, basis: &LLLBasis) -> Result<DensityRow> {
    let b = m.provenance.b;
    let stats = cell_statistics(m, &PartitionSpec::uniform(1))?;
    let gap = 1.0 - b;
    Ok(DensityRow {
        b,
        n: m.field.grid().flux_quanta().unwrap_or(0),
        h: m.field.grid().spacing()[0],
        mean_l2: stats.mean_l2,
        mean_l4: stats.mean_l4,
        rho4: stats.mean_l4 / (-2.0 * eab * gap * gap),
        rho2: stats.mean_l2 / (-2.0 * eab * gap),
        lll_distance: lll_distance(&m.field, basis)?,
        diagnostics: diagnostics(m),
        energy_density: m.value / m.field.grid().site_volume(),
    })
}

/// Richardson step removing an `O(h^2)` error from two grid values.
pub fn richardson_h2(coarse: f64, h_coarse: f64, fine: f64, h_fine: f64) -> f64 {
    let (a, b) = (h_coarse * h_coarse, h_fine * h_fine);
    (a * fine - b * coarse) / (a - b)
}

/// Means and ratios extrapolated to `h = 0` from two grids at the same `b`.
///
/// The LLL distance and diagnostics are taken from the finer grid.
pub fn extrapolate_rows(coarse: &DensityRow, fine: &DensityRow) -> Result<DensityRow> {
    if coarse.b != fine.b || coarse.n != fine.n {
        return Err(Error::InvalidParameter("rows differ in b or flux".into()));
    }
    if !(coarse.h > fine.h && fine.h > 0.0) {
        return Err(Error::InvalidParameter("need a coarse and a strictly finer grid".into()));
    }
    let x = |c: f64, f: f64| richardson_h2(c, coarse.h, f, fine.h);
    Ok(DensityRow {
        h: 0.0,
        mean_l2: x(coarse.mean_l2, fine.mean_l2),
        mean_l4: x(coarse.mean_l4, fine.mean_l4),
        rho4: x(coarse.rho4, fine.rho4),
        rho2: x(coarse.rho2, fine.rho2),
        energy_density: x(coarse.energy_density, fine.energy_density),
        ..fine.clone()
    })
}

/// Window the density ratios must fall in.
pub const RATIO_WINDOW: (f64, f64) = (0.8, 1.2);

fn ratio_check(name: &str, rows: &[DensityRow], ratio: impl Fn(&DensityRow) -> f64) -> Result<CheckReport> {
    if rows.windows(2).any(|w| w[1].b <= w[0].b) {
        return Err(Error::InvalidParameter("b list must be increasing".into()));
    }
    let mut reports = Vec::new();
    let mut diagnostics = Vec::new();
    let live: Vec<&DensityRow> = rows.iter().filter(|r| r.b < 1.0).collect();
    for r in rows.iter().filter(|r| r.b >= 1.0) {
        diagnostics.push((format!("degenerate(b={})", r.b), r.mean_l2));
    }
    for r in &live {
        let inputs = Inputs {
            b: vec![r.b],
            ..Default::default()
        };
        let v = ratio(r);
        diagnostics.push((format!("{name}(b={})", r.b), v));
        reports.push(InequalityReport::new(format!("{} <= {name} (b={})", RATIO_WINDOW.0, r.b), RATIO_WINDOW.0, v, 0.0, true, inputs.clone()));
        reports.push(InequalityReport::new(format!("{name} <= {} (b={})", RATIO_WINDOW.1, r.b), v, RATIO_WINDOW.1, 0.0, true, inputs));
    }
    for w in live.windows(2) {
        reports.push(InequalityReport::new(
            format!("|{name}-1| non-increasing (b={} -> {})", w[0].b, w[1].b),
            (ratio(w[1]) - 1.0).abs(),
            (ratio(w[0]) - 1.0).abs(),
            0.0,
            true,
            Inputs {
                b: vec![w[0].b, w[1].b],
                ..Default::default()
            },
        ));
    }
    Ok(CheckReport::new(format!("{name}_ratio"), reports, vec![], diagnostics))
}

/// `rho4 = mean |u|^4 / (-2 E_Ab (1-b)^2)` in the window and approaching one along `b`.
pub fn check_thm_l4(rows: &[DensityRow]) -> Result<CheckReport> {
    ratio_check("rho4", rows, |r| r.rho4)
}

/// `rho2 = mean |u|^2 / (-2 E_Ab (1-b))` in the window and approaching one
/// along `b`, plus one constant `C` with `|u - P u| <= C sqrt(1-b) |u|`.
pub fn check_thm_l2(rows: &[DensityRow]) -> Result<CheckReport> {
    let mut out = ratio_check("rho2", rows, |r| r.rho2)?;
    let cs: Vec<f64> = rows
        .iter()
        .filter(|r| r.b < 1.0)
        .map(|r| r.lll_distance / (1.0 - r.b).sqrt())
        .collect();
    for (r, c) in rows.iter().filter(|r| r.b < 1.0).zip(&cs) {
        out.diagnostics.push((format!("lll_distance(b={})", r.b), r.lll_distance));
        out.diagnostics.push((format!("C_lll(b={})", r.b), *c));
    }
    let fitted = FittedConstant::new("C_lll", cs, true);
    let c = fitted.sweep_value();
    for r in rows.iter().filter(|r| r.b < 1.0) {
        out.reports.push(InequalityReport::new(
            format!("|u - Pu|/|u| <= C sqrt(1-b) (b={})", r.b),
            r.lll_distance,
            c * (1.0 - r.b).sqrt(),
            0.0,
            false,
            Inputs {
                b: vec![r.b],
                ..Default::default()
            },
        ));
    }
    out.fitted.push(fitted);
    Ok(CheckReport::new(out.name, out.reports, out.fitted, out.diagnostics))
}
