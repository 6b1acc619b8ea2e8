use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::links::{neighbour, GaugeLinks};
use super::operator::{site_sum, MagneticOperator};
use super::ComplexField;
use crate::error::{Error, Result};
use crate::C64;

/// Components of `int ( b |(grad - iA)u|^2 - |u|^2 + |u|^4 / 2 )`.
///
/// `kinetic` is stored without the factor `b`, so the same evaluation serves
/// both the full functional and its quadratic part.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub mass: f64,
    pub quartic: f64,
    pub total: f64,
    pub b: f64,
}

impl EnergyBreakdown {
    pub fn new(b: f64, kinetic: f64, mass: f64, quartic: f64) -> Self {
        Self {
            kinetic,
            mass,
            quartic,
            total: b * kinetic + mass + quartic,
            b,
        }
    }

    /// `b * kinetic`.
    pub fn scaled_kinetic(&self) -> f64 {
        self.b * self.kinetic
    }

    /// Quadratic part `b * kinetic + mass`.
    pub fn linear_part(&self) -> f64 {
        self.b * self.kinetic + self.mass
    }

    /// `int |u|^4`.
    pub fn l4_pow4(&self) -> f64 {
        2.0 * self.quartic
    }
}

/// Axis-aligned box `center +- half` (only the first `dim` axes are used).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Box3 {
    pub center: [f64; 3],
    pub half: [f64; 3],
}

impl Box3 {
    /// The `(ell, L)`-box: side `ell` in the cross-section and height `l`.
    pub fn new(center: [f64; 3], ell: f64, l: f64) -> Self {
        Self {
            center,
            half: [0.5 * ell, 0.5 * ell, 0.5 * l],
        }
    }

    pub fn from_bounds(lo: [f64; 3], hi: [f64; 3]) -> Self {
        let mut center = [0.0; 3];
        let mut half = [0.0; 3];
        for a in 0..3 {
            center[a] = 0.5 * (lo[a] + hi[a]);
            half[a] = 0.5 * (hi[a] - lo[a]);
        }
        Self { center, half }
    }

    /// Box covering the whole domain of `grid`.
    pub fn domain(grid: &Grid) -> Self {
        let mut half = [1.0; 3];
        for (a, e) in grid.extents().iter().enumerate() {
            half[a] = 0.5 * e;
        }
        Self {
            center: [0.0; 3],
            half,
        }
    }

    pub fn lo(&self, a: usize) -> f64 {
        self.center[a] - self.half[a]
    }

    pub fn hi(&self, a: usize) -> f64 {
        self.center[a] + self.half[a]
    }

    /// Half-open membership `lo <= x < hi` on the first `dim` axes.
    pub fn contains(&self, p: &[f64; 3], dim: usize) -> bool {
        (0..dim).all(|a| p[a] >= self.lo(a) && p[a] < self.hi(a))
    }

    pub fn volume(&self, dim: usize) -> f64 {
        (0..dim).map(|a| 2.0 * self.half[a]).product()
    }

    pub fn inside(&self, grid: &Grid) -> bool {
        let tol = 1e-12 * grid.extents().iter().cloned().fold(1.0, f64::max);
        grid.extents()
            .iter()
            .enumerate()
            .all(|(a, e)| self.lo(a) >= -0.5 * e - tol && self.hi(a) <= 0.5 * e + tol && self.half[a] > 0.0)
    }
}

fn check(field: &ComplexField, links: &GaugeLinks) -> Result<()> {
    if field.grid() != links.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// `int |u|^4` by site sums.
pub fn quartic_integral(field: &ComplexField) -> f64 {
    let v = field.values();
    let n0 = field.grid().counts()[0];
    site_sum(v.len(), n0, |s| {
        let m = v[s].norm_sqr();
        m * m
    }) * field.grid().cell_volume()
}

/// Discrete `G_{b,D}` (2D) / `F_{b,D}` (3D) with gauge-covariant differences.
pub fn energy(field: &ComplexField, links: &GaugeLinks, b: f64) -> Result<EnergyBreakdown> {
    check(field, links)?;
    let grid = field.grid();
    let vol = grid.cell_volume();
    let v = field.values();
    let n0 = grid.counts()[0];
    let kinetic = MagneticOperator::new(links).kinetic_sum(v) * vol;
    let mass = -site_sum(v.len(), n0, |s| v[s].norm_sqr()) * vol;
    let quartic = 0.5
        * site_sum(v.len(), n0, |s| {
            let m = v[s].norm_sqr();
            m * m
        })
        * vol;
    Ok(EnergyBreakdown::new(b, kinetic, mass, quartic))
}

/// `dE/d(conj u)` at every site, so that `dE[delta] = 2 Re sum conj(grad) delta`.
pub fn gradient(field: &ComplexField, links: &GaugeLinks, b: f64) -> Result<ComplexField> {
    check(field, links)?;
    let grid = field.grid();
    let vol = grid.cell_volume();
    let mut out = vec![C64::new(0.0, 0.0); field.len()];
    MagneticOperator::new(links).apply(field.values(), &mut out);
    out.par_iter_mut().zip(field.values().par_iter()).for_each(|(g, u)| {
        *g = (*g * b - u + u * u.norm_sqr()) * vol;
    });
    ComplexField::from_values(grid, out)
}

/// Energy restricted to a box: sites by position, edges by midpoint.
pub fn local_energy(
    field: &ComplexField,
    links: &GaugeLinks,
    b: f64,
    bx: &Box3,
) -> Result<EnergyBreakdown> {
    check(field, links)?;
    let grid = field.grid();
    if !bx.inside(grid) {
        return Err(Error::BoxOutOfDomain);
    }
    let dim = grid.dim();
    let h = grid.spacing3();
    let vol = grid.cell_volume();
    let v = field.values();
    let n0 = grid.counts()[0];
    let kinetic = MagneticOperator::new(links).kinetic_sum_filtered(v, |a, s, entering| {
        let mut p = grid.position(s);
        p[a] += if entering { -0.5 * h[a] } else { 0.5 * h[a] };
        bx.contains(&p, dim)
    }) * vol;
    let inside = |s: usize| bx.contains(&grid.position(s), dim);
    let mass = -site_sum(v.len(), n0, |s| if inside(s) { v[s].norm_sqr() } else { 0.0 }) * vol;
    let quartic = 0.5
        * site_sum(v.len(), n0, |s| {
            if inside(s) {
                let m = v[s].norm_sqr();
                m * m
            } else {
                0.0
            }
        })
        * vol;
    Ok(EnergyBreakdown::new(b, kinetic, mass, quartic))
}

/// `u -> e^{i theta} u` with links adjusted so that every covariant difference
/// transforms by the tail phase; the energy is unchanged.
pub fn gauge_transform(
    field: &ComplexField,
    links: &GaugeLinks,
    theta: &[f64],
) -> Result<(ComplexField, GaugeLinks)> {
    check(field, links)?;
    let grid = field.grid();
    if theta.len() != grid.site_count() {
        return Err(Error::DimensionMismatch("phase field length".into()));
    }
    let values = field
        .values()
        .iter()
        .zip(theta)
        .map(|(u, t)| u * C64::from_polar(1.0, *t))
        .collect();
    let mut phases = Vec::with_capacity(grid.dim());
    for a in 0..grid.dim() {
        let la = links.axis(a);
        let p = (0..grid.site_count())
            .map(|s| match neighbour(grid, s, a) {
                Some(t) => la[s] * C64::from_polar(1.0, theta[s] - theta[t]),
                None => la[s],
            })
            .collect();
        phases.push(p);
    }
    let mut out_links = GaugeLinks::from_phases(grid.clone(), phases)?;
    if theta.iter().all(|t| *t == theta[0]) {
        out_links.set_potential(links.potential());
    }
    Ok((ComplexField::from_values(grid, values)?, out_links))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{link_phases, side_for_quanta, Boundary, Potential};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dirichlet2() -> (Grid, GaugeLinks) {
        let g = Grid::square(5.0, 14, Boundary::Dirichlet).unwrap();
        let l = link_phases(&g, Potential::A0).unwrap();
        (g, l)
    }

    fn periodic3() -> (Grid, GaugeLinks) {
        let g = Grid::periodic_box(side_for_quanta(2), 2.5, 10, 5).unwrap();
        let l = link_phases(&g, Potential::F).unwrap();
        (g, l)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn zero_field_has_zero_energy() {
        let (g, l) = dirichlet2();
        let e = energy(&ComplexField::zeros(&g), &l, 0.7).unwrap();
        assert_eq!(e.total, 0.0);
        let gr = gradient(&ComplexField::zeros(&g), &l, 0.7).unwrap();
        assert!(gr.values().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn constant_field_site_sums() {
        let (g, l) = periodic3();
        let c = C64::new(0.6, -0.3);
        let e = energy(&ComplexField::constant(&g, c), &l, 0.9).unwrap();
        let vol = g.domain_volume();
        assert!(rel(e.mass, -c.norm_sqr() * vol) < 1e-12);
        assert!(rel(e.quartic, 0.5 * c.norm_sqr().powi(2) * vol) < 1e-12);
    }

    #[test]
    fn total_is_consistent() {
        let (g, l) = periodic3();
        let e = energy(&ComplexField::random(&g, 3), &l, 0.8).unwrap();
        assert!(rel(e.total, 0.8 * e.kinetic + e.mass + e.quartic) < 1e-12);
    }

    #[test]
    fn form_matches_operator_pairing() {
        for (g, l) in [dirichlet2(), periodic3()] {
            let u = ComplexField::random(&g, 11);
            let op = MagneticOperator::new(&l);
            let mut hu = vec![C64::new(0.0, 0.0); u.len()];
            op.apply(u.values(), &mut hu);
            let pairing: f64 = u.values().iter().zip(&hu).map(|(a, b)| (a.conj() * b).re).sum();
            assert!(rel(pairing, op.kinetic_sum(u.values())) < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        for (g, l) in [dirichlet2(), periodic3()] {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for probe in 0..20u64 {
                let u = ComplexField::random(&g, 100 + probe).scaled(C64::new(0.7, 0.0));
                let d = ComplexField::random(&g, 200 + probe);
                let b = rng.random_range(0.3..1.2);
                let gr = gradient(&u, &l, b).unwrap();
                let analytic: f64 =
                    2.0 * gr.values().iter().zip(d.values()).map(|(x, y)| (x.conj() * y).re).sum::<f64>();
                let eps = 1e-5;
                let ep = energy(&u.axpy(C64::new(eps, 0.0), &d), &l, b).unwrap().total;
                let em = energy(&u.axpy(C64::new(-eps, 0.0), &d), &l, b).unwrap().total;
                let fd = (ep - em) / (2.0 * eps);
                assert!(rel(analytic, fd) < 1e-6, "probe {probe}: {analytic} vs {fd}");
            }
        }
    }

    #[test]
    fn gauge_invariance() {
        for (g, l) in [dirichlet2(), periodic3()] {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let u = ComplexField::random(&g, 1);
            let theta: Vec<f64> = (0..g.site_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (u2, l2) = gauge_transform(&u, &l, &theta).unwrap();
            let e1 = energy(&u, &l, 0.9).unwrap();
            let e2 = energy(&u2, &l2, 0.9).unwrap();
            assert!(rel(e1.total, e2.total) < 1e-12);
            assert!(rel(e1.kinetic, e2.kinetic) < 1e-12);
        }
    }

    #[test]
    fn gauge_identity_and_global_phase() {
        let (g, l) = dirichlet2();
        let u = ComplexField::random(&g, 2);
        let (u0, l0) = gauge_transform(&u, &l, &vec![0.0; g.site_count()]).unwrap();
        assert_eq!(u0, u);
        assert_eq!(l0, l);
        let (u1, l1) = gauge_transform(&u, &l, &vec![1.3; g.site_count()]).unwrap();
        for a in 0..2 {
            for (p, q) in l1.axis(a).iter().zip(l.axis(a)) {
                assert!((p - q).norm() < 1e-15);
            }
        }
        let e0 = energy(&u, &l, 0.5).unwrap().total;
        let e1 = energy(&u1, &l1, 0.5).unwrap().total;
        assert!(rel(e0, e1) < 1e-12);
    }

    #[test]
    fn diamagnetic_inequality() {
        for (g, l) in [dirichlet2(), periodic3()] {
            let flat = GaugeLinks::from_phases(
                g.clone(),
                vec![vec![C64::new(1.0, 0.0); g.site_count()]; g.dim()],
            )
            .unwrap();
            for seed in 0..10 {
                let u = ComplexField::random(&g, seed);
                let abs = ComplexField::from_values(
                    &g,
                    u.values().iter().map(|z| C64::new(z.norm(), 0.0)).collect(),
                )
                .unwrap();
                let k_abs = MagneticOperator::new(&flat).form(abs.values());
                let k = MagneticOperator::new(&l).form(u.values());
                assert!(k_abs <= k * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn local_energy_full_box_is_global() {
        for (g, l) in [dirichlet2(), periodic3()] {
            let u = ComplexField::random(&g, 4);
            let full = local_energy(&u, &l, 0.8, &Box3::domain(&g)).unwrap();
            let e = energy(&u, &l, 0.8).unwrap();
            assert!(rel(full.total, e.total) < 1e-12);
            let z = local_energy(&ComplexField::zeros(&g), &l, 0.8, &Box3::domain(&g)).unwrap();
            assert_eq!(z.total, 0.0);
        }
    }

    #[test]
    fn local_energy_partition_is_additive() {
        let (g, l) = dirichlet2();
        let u = ComplexField::random(&g, 8);
        let r = g.extents()[0];
        let left = Box3::from_bounds([-r / 2.0, -r / 2.0, 0.0], [0.3, r / 2.0, 0.0]);
        let right = Box3::from_bounds([0.3, -r / 2.0, 0.0], [r / 2.0, r / 2.0, 0.0]);
        let a = local_energy(&u, &l, 1.0, &left).unwrap();
        let b = local_energy(&u, &l, 1.0, &right).unwrap();
        let e = energy(&u, &l, 1.0).unwrap();
        assert!(rel(a.mass + b.mass, e.mass) < 1e-12);
        assert!(rel(a.quartic + b.quartic, e.quartic) < 1e-12);
        let h = g.spacing()[0];
        let cut_edges = (g.counts()[1] + 1) as f64;
        let bound = cut_edges * h * u.norm_inf().powi(2) * 4.0 / (h * h);
        assert!((a.kinetic + b.kinetic - e.kinetic).abs() <= bound);
        assert!(rel(a.kinetic + b.kinetic, e.kinetic) < 1e-12);
    }

    #[test]
    fn box_out_of_domain() {
        let (g, l) = dirichlet2();
        let bx = Box3::new([2.0, 0.0, 0.0], 2.0, 1.0);
        assert!(matches!(
            local_energy(&ComplexField::zeros(&g), &l, 1.0, &bx),
            Err(Error::BoxOutOfDomain)
        ));
    }

    #[test]
    fn grid_mismatch() {
        let (g, l) = dirichlet2();
        let other = Grid::square(5.0, 13, Boundary::Dirichlet).unwrap();
        assert_eq!(energy(&ComplexField::zeros(&other), &l, 1.0), Err(Error::GridMismatch));
        assert!(gradient(&ComplexField::zeros(&g), &l, 1.0).is_ok());
    }
}
