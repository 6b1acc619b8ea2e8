use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary realization of a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    /// Interior sites only; the field vanishes on the (implicit) boundary layer.
    Dirichlet,
    /// Opposite cross-section faces identified up to magnetic-translation phases;
    /// the third axis (if any) is plainly periodic.
    MagneticPeriodic,
}

/// Rectangular lattice over a square, a cube or a box `(-R/2,R/2)^2 x (-L/2,L/2)`.
///
/// Unused axes (the third one in 2D) carry count 1 so that site indexing is
/// uniform: `index = i + n0 * (j + n1 * k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    extents: [f64; 3],
    counts: [usize; 3],
    spacing: [f64; 3],
    bc: Boundary,
    flux_quanta: Option<u64>,
}

const QUANTIZATION_TOL: f64 = 1e-9;

/// Number of flux quanta through a square cross-section of side `r`, if integral.
pub fn flux_quanta(r: f64) -> Result<u64> {
    let flux = r * r / (2.0 * PI);
    let n = flux.round();
    if n >= 1.0 && (flux - n).abs() <= QUANTIZATION_TOL * n {
        Ok(n as u64)
    } else {
        Err(Error::NonQuantizedFlux { flux })
    }
}

/// Side length carrying exactly `n` flux quanta.
pub fn side_for_quanta(n: u64) -> f64 {
    (2.0 * PI * n as f64).sqrt()
}

impl Grid {
    /// Generic constructor; `extents` and `counts` must have length 2 or 3.
    pub fn new(extents: &[f64], counts: &[usize], bc: Boundary) -> Result<Self> {
        let dim = extents.len();
        if !(dim == 2 || dim == 3) || counts.len() != dim {
            return Err(Error::InvalidCounts(format!(
                "expected 2 or 3 axes, got extents {} / counts {}",
                extents.len(),
                counts.len()
            )));
        }
        if let Some(&e) = extents.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::InvalidCounts(format!("extent {e} is not positive")));
        }
        if let Some(&c) = counts.iter().find(|c| **c < 2) {
            return Err(Error::InvalidCounts(format!("count {c} < 2")));
        }
        let mut flux = None;
        if bc == Boundary::MagneticPeriodic {
            if (extents[0] - extents[1]).abs() > 1e-12 * extents[0] {
                return Err(Error::InvalidCounts(
                    "magnetic-periodic cross-section must be square".into(),
                ));
            }
            if counts[0] != counts[1] {
                return Err(Error::InvalidCounts(
                    "magnetic-periodic cross-section needs equal counts".into(),
                ));
            }
            flux = Some(flux_quanta(extents[0])?);
        }
        let mut ext = [1.0; 3];
        let mut cnt = [1usize; 3];
        let mut h = [1.0; 3];
        for a in 0..dim {
            ext[a] = extents[a];
            cnt[a] = counts[a];
            h[a] = match bc {
                Boundary::Dirichlet => extents[a] / (counts[a] + 1) as f64,
                Boundary::MagneticPeriodic => extents[a] / counts[a] as f64,
            };
        }
        Ok(Self {
            dim,
            extents: ext,
            counts: cnt,
            spacing: h,
            bc,
            flux_quanta: flux,
        })
    }

    /// Square `K_R` with `n` sites per axis.
    pub fn square(r: f64, n: usize, bc: Boundary) -> Result<Self> {
        Self::new(&[r, r], &[n, n], bc)
    }

    /// Cube `Q_R` with `n` sites per axis.
    pub fn cube(r: f64, n: usize, bc: Boundary) -> Result<Self> {
        Self::new(&[r, r, r], &[n, n, n], bc)
    }

    /// Magnetic-periodic box `Q_{R,L}`.
    pub fn periodic_box(r: f64, l: f64, n: usize, n3: usize) -> Result<Self> {
        Self::new(&[r, r, l], &[n, n, n3], Boundary::MagneticPeriodic)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents[..self.dim]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub(crate) fn counts3(&self) -> [usize; 3] {
        self.counts
    }

    pub(crate) fn spacing3(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn boundary(&self) -> Boundary {
        self.bc
    }

    pub fn flux_quanta(&self) -> Option<u64> {
        self.flux_quanta
    }

    pub fn site_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Volume element `prod h_a`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Volume of the continuum domain.
    pub fn domain_volume(&self) -> f64 {
        self.extents().iter().product()
    }

    /// Total volume represented by the sites (`site_count * cell_volume`).
    pub fn site_volume(&self) -> f64 {
        self.site_count() as f64 * self.cell_volume()
    }

    /// Coordinate of site `i` along `axis`.
    #[inline]
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let lo = -0.5 * self.extents[axis];
        match self.bc {
            Boundary::Dirichlet => lo + (i + 1) as f64 * self.spacing[axis],
            Boundary::MagneticPeriodic => lo + i as f64 * self.spacing[axis],
        }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.counts[0] * (j + self.counts[1] * k)
    }

    #[inline]
    pub fn unindex(&self, s: usize) -> [usize; 3] {
        let i = s % self.counts[0];
        let r = s / self.counts[0];
        [i, r % self.counts[1], r / self.counts[1]]
    }

    /// Position of site `s` (unused axes are 0).
    pub fn position(&self, s: usize) -> [f64; 3] {
        let idx = self.unindex(s);
        let mut p = [0.0; 3];
        for (a, pa) in p.iter_mut().enumerate().take(self.dim) {
            *pa = self.coord(a, idx[a]);
        }
        p
    }

    /// Grid of the `(x1, x2)` cross-section.
    pub fn cross_section(&self) -> Result<Grid> {
        Grid::new(&self.extents[..2], &self.counts[..2], self.bc)
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_flux_quantum() {
        let g = Grid::square((2.0 * PI).sqrt(), 32, Boundary::MagneticPeriodic).unwrap();
        assert_eq!(g.flux_quanta(), Some(1));
    }

    #[test]
    fn two_flux_quanta() {
        let g = Grid::square((4.0 * PI).sqrt(), 32, Boundary::MagneticPeriodic).unwrap();
        assert_eq!(g.flux_quanta(), Some(2));
    }

    #[test]
    fn non_quantized_flux_rejected() {
        let err = Grid::square(3.0, 32, Boundary::MagneticPeriodic).unwrap_err();
        assert!(matches!(err, Error::NonQuantizedFlux { .. }));
        // Dirichlet grids carry no flux hypothesis.
        assert!(Grid::square(3.0, 32, Boundary::Dirichlet).is_ok());
    }

    #[test]
    fn invalid_counts_rejected() {
        assert!(matches!(
            Grid::square(4.0, 1, Boundary::Dirichlet),
            Err(Error::InvalidCounts(_))
        ));
        assert!(matches!(
            Grid::new(&[4.0], &[8], Boundary::Dirichlet),
            Err(Error::InvalidCounts(_))
        ));
        assert!(matches!(
            Grid::new(&[4.0, -1.0], &[8, 8], Boundary::Dirichlet),
            Err(Error::InvalidCounts(_))
        ));
    }

    #[test]
    fn spacing_invariants() {
        let d = Grid::new(&[8.0, 6.0, 5.0], &[15, 11, 9], Boundary::Dirichlet).unwrap();
        for a in 0..3 {
            assert!((d.spacing()[a] * (d.counts()[a] + 1) as f64 - d.extents()[a]).abs() < 1e-14);
        }
        let r = side_for_quanta(3);
        let p = Grid::periodic_box(r, 2.0, 24, 6).unwrap();
        for a in 0..3 {
            assert!((p.spacing()[a] * p.counts()[a] as f64 - p.extents()[a]).abs() < 1e-14);
        }
        assert_eq!(p.flux_quanta(), Some(3));
    }

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(&[1.0, 2.0, 3.0], &[3, 4, 5], Boundary::Dirichlet).unwrap();
        for s in 0..g.site_count() {
            let [i, j, k] = g.unindex(s);
            assert_eq!(g.index(i, j, k), s);
        }
    }
}
