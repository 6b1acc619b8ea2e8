//! Discretization substrate: grids, link phases, gauge-covariant energies.

mod energy;
mod grid;
mod links;
mod operator;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use energy::{
    energy, gauge_transform, gradient, local_energy, quartic_integral, Box3, EnergyBreakdown,
};
pub use grid::{flux_quanta, side_for_quanta, Boundary, Grid};
pub use links::{link_phases, GaugeLinks, Potential};
pub use operator::MagneticOperator;

use crate::C64;

/// Complex values on the sites of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<C64>,
}

impl ComplexField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            values: vec![C64::new(0.0, 0.0); grid.site_count()],
            grid: grid.clone(),
        }
    }

    pub fn constant(grid: &Grid, c: C64) -> Self {
        Self {
            values: vec![c; grid.site_count()],
            grid: grid.clone(),
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<C64>) -> crate::Result<Self> {
        if values.len() != grid.site_count() {
            return Err(crate::Error::DimensionMismatch(format!(
                "{} values for {} sites",
                values.len(),
                grid.site_count()
            )));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(crate::Error::InvalidParameter("non-finite field value".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Field with `f(position)` at every site.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> C64) -> Self {
        let values = (0..grid.site_count()).map(|s| f(grid.position(s))).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// I.i.d. standard complex Gaussian values, deterministic in `seed`.
    pub fn random(grid: &Grid, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.site_count())
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scale(&mut self, a: C64) {
        self.values.iter_mut().for_each(|z| *z *= a);
    }

    pub fn scaled(&self, a: C64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: C64, other: &ComplexField) -> Self {
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x + a * y)
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// `int conj(other) self`.
    pub fn inner(&self, other: &ComplexField) -> C64 {
        let s: C64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| y.conj() * x)
            .sum();
        s * self.grid.cell_volume()
    }

    pub fn norm_l2(&self) -> f64 {
        self.integral_pow(2).sqrt()
    }

    /// `(int |u|^p)^(1/p)`.
    pub fn norm_lp(&self, p: u32) -> f64 {
        self.integral_pow(p).powf(1.0 / p as f64)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `int |u|^p`.
    pub fn integral_pow(&self, p: u32) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .map(|z| {
                let m = z.norm_sqr();
                match p {
                    2 => m,
                    4 => m * m,
                    6 => m * m * m,
                    _ => m.powf(0.5 * p as f64),
                }
            })
            .sum();
        s * self.grid.cell_volume()
    }
}
