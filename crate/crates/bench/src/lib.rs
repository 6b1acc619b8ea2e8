//! Fixtures shared by the benchmarks.

use glvortex::field::{link_phases, side_for_quanta, Boundary, Grid, Potential};
use glvortex::{ComplexField, GaugeLinks};

/// Magnetic-periodic square carrying `n` flux quanta with `counts` sites per axis.
pub fn periodic_square(n: u64, counts: usize) -> (ComplexField, GaugeLinks) {
    let grid = Grid::square(side_for_quanta(n), counts, Boundary::MagneticPeriodic).expect("valid grid");
    let links = link_phases(&grid, Potential::A0).expect("valid links");
    (ComplexField::random(&grid, 1), links)
}

/// Dirichlet cube of side `r` with `counts` interior sites per axis.
pub fn dirichlet_cube(r: f64, counts: usize) -> (ComplexField, GaugeLinks) {
    let grid = Grid::cube(r, counts, Boundary::Dirichlet).expect("valid grid");
    let links = link_phases(&grid, Potential::F).expect("valid links");
    (ComplexField::random(&grid, 2), links)
}
