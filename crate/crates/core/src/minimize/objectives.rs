use rayon::prelude::*;

use super::descent::{chunked_sum, Objective};
use crate::field::{GaugeLinks, MagneticOperator};
use crate::C64;

/// Largest eigenvalue bound of the discrete operator, `sum_a 4 / h_a^2`.
fn operator_bound(links: &GaugeLinks) -> f64 {
    let g = links.grid();
    g.spacing().iter().map(|h| 4.0 / (h * h)).sum()
}

/// Reduced functional divided by the volume element.
///
/// The gradient is `b L u - u + |u|^2 u`, the Euler-Lagrange residual.
pub(crate) struct GlEnergy<'a> {
    op: MagneticOperator<'a>,
    b: f64,
    lipschitz: f64,
}

impl<'a> GlEnergy<'a> {
    pub fn new(links: &'a GaugeLinks, b: f64) -> Self {
        Self {
            op: MagneticOperator::new(links),
            b,
            lipschitz: 2.0 * (b * operator_bound(links) + 2.0),
        }
    }
}

impl Objective for GlEnergy<'_> {
    fn evaluate(&self, u: &[C64], r: &mut [C64]) -> f64 {
        self.op.apply(u, r);
        let b = self.b;
        let value = chunked_sum(u.len(), |s| {
            let m = u[s].norm_sqr();
            b * (u[s].re * r[s].re + u[s].im * r[s].im) - m + 0.5 * m * m
        });
        r.par_iter_mut()
            .zip(u.par_iter())
            .for_each(|(g, x)| *g = *g * b - x + x * x.norm_sqr());
        value
    }

    fn initial_step(&self) -> f64 {
        1.0 / self.lipschitz
    }
}

/// `(b int |D u|^2 - int |u|^2) / (int |u|^4)^(1/2)` on the sphere `int |u|^4 = 1`.
pub(crate) struct Quotient<'a> {
    op: MagneticOperator<'a>,
    b: f64,
    vol: f64,
    lipschitz: f64,
}

impl<'a> Quotient<'a> {
    pub fn new(links: &'a GaugeLinks, b: f64) -> Self {
        Self {
            op: MagneticOperator::new(links),
            b,
            vol: links.grid().cell_volume(),
            lipschitz: 2.0 * (b * operator_bound(links) + 1.0),
        }
    }

    fn l4_pow4(&self, u: &[C64]) -> f64 {
        chunked_sum(u.len(), |s| {
            let m = u[s].norm_sqr();
            m * m
        }) * self.vol
    }
}

impl Objective for Quotient<'_> {
    fn evaluate(&self, u: &[C64], r: &mut [C64]) -> f64 {
        self.op.apply(u, r);
        let b = self.b;
        let lin = chunked_sum(u.len(), |s| {
            b * (u[s].re * r[s].re + u[s].im * r[s].im) - u[s].norm_sqr()
        }) * self.vol;
        let d = self.l4_pow4(u);
        let sd = d.sqrt();
        let q = lin / sd;
        r.par_iter_mut().zip(u.par_iter()).for_each(|(g, x)| {
            *g = (*g * b - x) / sd - x * (q * x.norm_sqr() / d);
        });
        q / self.vol
    }

    fn project(&self, u: &mut [C64]) {
        let d = self.l4_pow4(u);
        if d > 0.0 {
            let s = d.powf(-0.25);
            u.par_iter_mut().for_each(|z| *z *= s);
        }
    }

    fn initial_step(&self) -> f64 {
        1.0 / self.lipschitz
    }
}
