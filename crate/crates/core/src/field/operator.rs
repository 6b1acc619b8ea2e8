use rayon::prelude::*;

use super::grid::Boundary;
use super::links::GaugeLinks;
use crate::C64;

/// The gauge-covariant finite-difference operator `-(grad - iA)^2`.
///
/// Work is split by `x1`-rows; reductions are summed row by row in a fixed
/// order so results do not depend on the thread count.
#[derive(Clone, Copy, Debug)]
pub struct MagneticOperator<'a> {
    links: &'a GaugeLinks,
}

struct RowNeighbours {
    fwd: [Option<usize>; 3],
    bwd: [Option<usize>; 3],
}

impl<'a> MagneticOperator<'a> {
    pub fn new(links: &'a GaugeLinks) -> Self {
        Self { links }
    }

    pub fn links(&self) -> &GaugeLinks {
        self.links
    }

    fn rows(&self) -> usize {
        let n = self.links.grid().counts3();
        n[1] * n[2]
    }

    fn row_neighbours(&self, r: usize) -> RowNeighbours {
        let grid = self.links.grid();
        let n = grid.counts3();
        let periodic = grid.boundary() == Boundary::MagneticPeriodic;
        let (j, k) = (r % n[1], r / n[1]);
        let mut fwd = [None; 3];
        let mut bwd = [None; 3];
        for (a, (idx, stride, count)) in [(j, 1, n[1]), (k, n[1], n[2])].into_iter().enumerate() {
            let axis = a + 1;
            if axis >= grid.dim() {
                break;
            }
            fwd[axis] = if idx + 1 < count {
                Some(r + stride)
            } else if periodic {
                Some(r - idx * stride)
            } else {
                None
            };
            bwd[axis] = if idx > 0 {
                Some(r - stride)
            } else if periodic {
                Some(r + (count - 1) * stride)
            } else {
                None
            };
        }
        RowNeighbours { fwd, bwd }
    }

    /// `out = -(grad - iA)^2 u` (per unit volume).
    pub fn apply(&self, u: &[C64], out: &mut [C64]) {
        let grid = self.links.grid();
        let n0 = grid.counts3()[0];
        let h = grid.spacing3();
        let dim = grid.dim();
        let periodic = grid.boundary() == Boundary::MagneticPeriodic;
        let w = [1.0 / (h[0] * h[0]), 1.0 / (h[1] * h[1]), 1.0 / (h[2] * h[2])];
        let diag: f64 = (0..dim).map(|a| 2.0 * w[a]).sum();
        out.par_chunks_mut(n0).enumerate().for_each(|(r, o)| {
            let nb = self.row_neighbours(r);
            let base = r * n0;
            let l0 = &self.links.axis(0)[base..base + n0];
            for i in 0..n0 {
                let s = base + i;
                let mut off = C64::new(0.0, 0.0);
                if i + 1 < n0 {
                    off += l0[i] * u[s + 1];
                } else if periodic {
                    off += l0[i] * u[base];
                }
                if i > 0 {
                    off += l0[i - 1].conj() * u[s - 1];
                } else if periodic {
                    off += l0[n0 - 1].conj() * u[base + n0 - 1];
                }
                let mut acc = u[s] * diag - off * w[0];
                for a in 1..dim {
                    let la = self.links.axis(a);
                    if let Some(fr) = nb.fwd[a] {
                        acc -= la[s] * u[fr * n0 + i] * w[a];
                    }
                    if let Some(br) = nb.bwd[a] {
                        let t = br * n0 + i;
                        acc -= la[t].conj() * u[t] * w[a];
                    }
                }
                o[i] = acc;
            }
        });
    }

    /// `sum_edges |U u(head) - u(tail)|^2 / h^2` restricted by `keep`, without the volume element.
    ///
    /// `keep(axis, site, entering)` decides edge membership: `entering == false`
    /// is the forward edge of `site`, `entering == true` the Dirichlet edge from
    /// the boundary into the first site of a line.
    pub(crate) fn kinetic_sum_filtered<F>(&self, u: &[C64], keep: F) -> f64
    where
        F: Fn(usize, usize, bool) -> bool + Sync,
    {
        let grid = self.links.grid();
        let n0 = grid.counts3()[0];
        let h = grid.spacing3();
        let dim = grid.dim();
        let periodic = grid.boundary() == Boundary::MagneticPeriodic;
        let w = [1.0 / (h[0] * h[0]), 1.0 / (h[1] * h[1]), 1.0 / (h[2] * h[2])];
        let partial: Vec<f64> = (0..self.rows())
            .into_par_iter()
            .map(|r| {
                let nb = self.row_neighbours(r);
                let base = r * n0;
                let mut sum = 0.0;
                for i in 0..n0 {
                    let s = base + i;
                    for a in 0..dim {
                        let head = if a == 0 {
                            if i + 1 < n0 {
                                Some(s + 1)
                            } else if periodic {
                                Some(base)
                            } else {
                                None
                            }
                        } else {
                            nb.fwd[a].map(|fr| fr * n0 + i)
                        };
                        if keep(a, s, false) {
                            let d = match head {
                                Some(t) => self.links.axis(a)[s] * u[t] - u[s],
                                None => -u[s],
                            };
                            sum += d.norm_sqr() * w[a];
                        }
                        if !periodic {
                            let first = if a == 0 { i == 0 } else { nb.bwd[a].is_none() };
                            if first && keep(a, s, true) {
                                sum += u[s].norm_sqr() * w[a];
                            }
                        }
                    }
                }
                sum
            })
            .collect();
        partial.iter().sum()
    }

    /// `sum_edges |U u(head) - u(tail)|^2 / h^2` without the volume element.
    pub fn kinetic_sum(&self, u: &[C64]) -> f64 {
        self.kinetic_sum_filtered(u, |_, _, _| true)
    }

    /// Quadratic form `int |(grad - iA) u|^2`.
    pub fn form(&self, u: &[C64]) -> f64 {
        self.kinetic_sum(u) * self.links.grid().cell_volume()
    }
}

/// Row-ordered deterministic sum of `f(site)` over all sites.
pub(crate) fn site_sum<F>(n_sites: usize, row: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let rows = n_sites / row;
    let partial: Vec<f64> = (0..rows)
        .into_par_iter()
        .map(|r| (r * row..(r + 1) * row).map(&f).sum::<f64>())
        .collect();
    partial.iter().sum()
}
