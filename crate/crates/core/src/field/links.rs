use serde::{Deserialize, Serialize};

use super::grid::{Boundary, Grid};
use crate::error::{Error, Result};
use crate::C64;

/// Magnetic potential encoded by a set of links.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Potential {
    /// `A0(x1,x2) = (-x2/2, x1/2)` in 2D.
    A0,
    /// `F(x) = (-x2/2, x1/2, 0)` in 3D.
    F,
    /// Anything else (e.g. the result of a gauge transformation).
    Custom,
}

/// Unit-modulus phases on the forward edge of every site along every axis.
///
/// The phase on the edge `x -> x + h e_a` is `exp(-i int_edge A.dl)`. Wrap-around
/// edges of a magnetic-periodic grid also carry the magnetic-translation phase
/// `u(x + R e1) = exp(i R x2 / 2) u(x)`, `u(x + R e2) = exp(-i R x1 / 2) u(x)`.
/// For Dirichlet grids the forward edge of the last site on an axis ends on the
/// boundary where the field vanishes, so its phase never enters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeLinks {
    grid: Grid,
    potential: Potential,
    phases: Vec<Vec<C64>>,
}

impl GaugeLinks {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn potential(&self) -> Potential {
        self.potential
    }

    pub(crate) fn set_potential(&mut self, p: Potential) {
        self.potential = p;
    }

    /// Phases of the forward edges along `axis`, indexed by tail site.
    pub fn axis(&self, axis: usize) -> &[C64] {
        &self.phases[axis]
    }

    /// Build links from explicit phases (one vector per axis).
    pub fn from_phases(grid: Grid, phases: Vec<Vec<C64>>) -> Result<Self> {
        if phases.len() != grid.dim() || phases.iter().any(|p| p.len() != grid.site_count()) {
            return Err(Error::DimensionMismatch(
                "phase arrays do not match the grid".into(),
            ));
        }
        if phases
            .iter()
            .flatten()
            .any(|z| !z.re.is_finite() || (z.norm() - 1.0).abs() > 1e-12)
        {
            return Err(Error::InvalidParameter("link phases must have modulus 1".into()));
        }
        Ok(Self {
            grid,
            potential: Potential::Custom,
            phases,
        })
    }

    /// Product of the four links around the `(a, b)` plaquette with lower corner `s`.
    ///
    /// Returns `None` if the plaquette leaves a Dirichlet grid.
    pub fn plaquette(&self, s: usize, a: usize, b: usize) -> Option<C64> {
        let sa = self.neighbour(s, a)?;
        let sb = self.neighbour(s, b)?;
        Some(self.phases[a][s] * self.phases[b][sa] * self.phases[a][sb].conj() * self.phases[b][s].conj())
    }

    /// Forward neighbour of `s` along `axis` (wrapping on periodic grids).
    pub(crate) fn neighbour(&self, s: usize, axis: usize) -> Option<usize> {
        neighbour(&self.grid, s, axis)
    }
}

pub(crate) fn neighbour(grid: &Grid, s: usize, axis: usize) -> Option<usize> {
    let n = grid.counts3();
    let stride = match axis {
        0 => 1,
        1 => n[0],
        _ => n[0] * n[1],
    };
    let idx = grid.unindex(s)[axis];
    if idx + 1 < n[axis] {
        Some(s + stride)
    } else {
        match grid.boundary() {
            Boundary::Dirichlet => None,
            Boundary::MagneticPeriodic => Some(s - idx * stride),
        }
    }
}

/// Exact link phases for the constant unit field `curl A = e3`.
///
/// `A` is linear, so the midpoint rule gives the line integrals exactly.
pub fn link_phases(grid: &Grid, potential: Potential) -> Result<GaugeLinks> {
    match (potential, grid.dim()) {
        (Potential::A0, 2) | (Potential::F, 3) => {}
        (Potential::Custom, _) => {
            return Err(Error::InvalidParameter(
                "custom links are built with GaugeLinks::from_phases".into(),
            ))
        }
        (p, d) => {
            return Err(Error::DimensionMismatch(format!(
                "potential {p:?} is not defined on a {d}D grid"
            )))
        }
    }
    let n = grid.counts3();
    let h = grid.spacing3();
    let r = grid.extents()[0];
    let periodic = grid.boundary() == Boundary::MagneticPeriodic;
    let sites = grid.site_count();
    let mut phases = vec![vec![C64::new(1.0, 0.0); sites]; grid.dim()];
    for s in 0..sites {
        let [i, j, _] = grid.unindex(s);
        let x1 = grid.coord(0, i);
        let x2 = grid.coord(1, j);
        // int A1 dx1 = -x2 h1 / 2 ; int A2 dx2 = x1 h2 / 2
        let mut t1 = 0.5 * x2 * h[0];
        let mut t2 = -0.5 * x1 * h[1];
        if periodic && i + 1 == n[0] {
            t1 += 0.5 * r * x2;
        }
        if periodic && j + 1 == n[1] {
            t2 -= 0.5 * r * x1;
        }
        phases[0][s] = C64::from_polar(1.0, t1);
        phases[1][s] = C64::from_polar(1.0, t2);
    }
    Ok(GaugeLinks {
        grid: grid.clone(),
        potential,
        phases,
    })
}
