//! Variational solvers for the Dirichlet ground-state energies, the
//! L4-normalized quotient and the thermodynamic-limit extrapolation.

mod descent;
mod objectives;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use descent::StepRule;
pub(crate) use descent::{chunked_sum, descend, Objective};
pub(crate) use objectives::{GlEnergy, Quotient};

use crate::error::{Error, Result};
use crate::field::{energy, link_phases, Boundary, ComplexField, EnergyBreakdown, Grid, Potential};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Bound on the sup-norm of the Euler-Lagrange residual.
    pub grad_tolerance: f64,
    pub step_rule: StepRule,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            grad_tolerance: 1e-8,
            step_rule: StepRule::QuasiNewton,
            restarts: 1,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tolerance > 0.0) {
            return Err(Error::InvalidParameter("grad_tolerance must be positive".into()));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidParameter("restarts must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.grad_tolerance = tol;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }
}

/// Which functional a [`MinResult`] minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Problem {
    /// `m0(b,R)` on the Dirichlet square.
    SquareEnergy,
    /// `M0(b,R)` on the Dirichlet cube.
    CubeEnergy,
    /// L4-normalized quotient on the Dirichlet cube.
    CubeQuotient,
    /// Full functional on the magnetic-periodic box.
    PeriodicEnergy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub problem: Problem,
    pub b: f64,
    pub r: f64,
    pub l: Option<f64>,
    pub counts: Vec<usize>,
    pub seed: u64,
    pub grad_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinResult {
    /// Achieved energy (or quotient value).
    pub value: f64,
    pub field: ComplexField,
    pub breakdown: EnergyBreakdown,
    /// Final scaled Euler-Lagrange residual.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub provenance: Provenance,
}

impl MinResult {
    /// `int |u|^4` of the returned field.
    pub fn l4_pow4(&self) -> f64 {
        self.breakdown.l4_pow4()
    }

    /// `int |u|^2` of the returned field.
    pub fn l2_pow2(&self) -> f64 {
        -self.breakdown.mass
    }
}

/// Interior sites per axis for a Dirichlet grid of side `r` at spacing about `h`.
pub fn dirichlet_counts(r: f64, h: f64) -> usize {
    ((r / h).round() as usize).saturating_sub(1).max(2)
}

/// Deterministic starting field: complex Gaussian scaled to `int |u|^2 = mass`.
pub(crate) fn initial_field(grid: &Grid, seed: u64, mass: f64) -> Vec<C64> {
    initial_coefficients(grid.site_count(), seed, mass / grid.cell_volume())
}

/// Deterministic complex Gaussian vector with `sum |c|^2 = mass`.
pub(crate) fn initial_coefficients(n: usize, seed: u64, mass: f64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut v: Vec<C64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let s = (mass / norm2).sqrt();
    v.iter_mut().for_each(|z| *z *= s);
    v
}

fn check_b(b: f64) -> Result<()> {
    if !(b.is_finite() && b >= 0.0) {
        return Err(Error::InvalidParameter(format!("b = {b} must be >= 0")));
    }
    Ok(())
}

/// Best of `restarts` descents of the full functional on `grid`.
fn minimize_energy(grid: &Grid, b: f64, cfg: &SolverConfig, problem: Problem) -> Result<MinResult> {
    check_b(b)?;
    cfg.validate()?;
    let potential = if grid.dim() == 2 { Potential::A0 } else { Potential::F };
    let links = link_phases(grid, potential)?;
    let provenance = Provenance {
        problem,
        b,
        r: grid.extents()[0],
        l: (grid.dim() == 3).then(|| grid.extents()[2]),
        counts: grid.counts().to_vec(),
        seed: cfg.seed,
        grad_tolerance: cfg.grad_tolerance,
    };
    if b == 0.0 {
        // Without the kinetic term every site minimizes -|u|^2 + |u|^4/2 on its own.
        let field = ComplexField::constant(grid, C64::new(1.0, 0.0));
        let breakdown = energy(&field, &links, 0.0)?;
        return Ok(MinResult {
            value: breakdown.total,
            field,
            breakdown,
            residual: 0.0,
            iterations: 0,
            converged: true,
            provenance,
        });
    }
    let obj = GlEnergy::new(&links, b);
    let mass = (1.0 - b).max(1e-2) * grid.site_volume();
    let runs: Vec<_> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let u0 = initial_field(grid, cfg.seed.wrapping_add(k as u64), mass);
            descend(&obj, u0, cfg.max_iterations, cfg.grad_tolerance, cfg.step_rule)
        })
        .collect();
    let mut best = best_of(runs);
    let mut field = ComplexField::from_values(grid, best.u)?;
    let mut breakdown = energy(&field, &links, b)?;
    if breakdown.total > 0.0 {
        // the zero field is admissible and critical
        field = ComplexField::zeros(grid);
        breakdown = energy(&field, &links, b)?;
        best.residual = 0.0;
        best.converged = true;
    }
    Ok(MinResult {
        value: breakdown.total,
        field,
        breakdown,
        residual: best.residual,
        iterations: best.iterations,
        converged: best.converged,
        provenance,
    })
}

/// Lowest value; ties go to the earliest restart.
fn best_of(runs: Vec<descent::Outcome>) -> descent::Outcome {
    let mut best: Option<descent::Outcome> = None;
    for r in runs {
        match &best {
            Some(b) if !(r.value < b.value) => {}
            _ => best = Some(r),
        }
    }
    best.expect("at least one restart")
}

/// `m0(b,R)`: minimum of the reduced functional on the Dirichlet square `K_R`.
pub fn minimize_m0(b: f64, r: f64, counts: usize, cfg: &SolverConfig) -> Result<MinResult> {
    let grid = Grid::square(r, counts, Boundary::Dirichlet)?;
    minimize_energy(&grid, b, cfg, Problem::SquareEnergy)
}

/// `M0(b,R)`: minimum of the reduced functional on the Dirichlet cube `Q_R`.
pub fn minimize_m0_3d(b: f64, r: f64, counts: usize, cfg: &SolverConfig) -> Result<MinResult> {
    let grid = Grid::cube(r, counts, Boundary::Dirichlet)?;
    minimize_energy(&grid, b, cfg, Problem::CubeEnergy)
}

/// Minimum of the full functional on the magnetic-periodic box `Q_{R,L}`.
pub fn minimize_periodic(
    b: f64,
    r: f64,
    l: f64,
    counts: usize,
    counts3: usize,
    cfg: &SolverConfig,
) -> Result<MinResult> {
    let grid = Grid::periodic_box(r, l, counts, counts3)?;
    minimize_energy(&grid, b, cfg, Problem::PeriodicEnergy)
}

/// Minimum over the Dirichlet cube of `F_lin(u) / (int |u|^4)^(1/2)`.
///
/// The returned field is normalized to `int |u|^4 = 1`; `breakdown` is its
/// energy at `b` (so `breakdown.linear_part() == value`).
pub fn minimize_quotient(b: f64, r: f64, counts: usize, cfg: &SolverConfig) -> Result<MinResult> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::InvalidParameter(format!("quotient needs b in (0,1), got {b}")));
    }
    cfg.validate()?;
    let grid = Grid::cube(r, counts, Boundary::Dirichlet)?;
    let links = link_phases(&grid, Potential::F)?;
    let obj = Quotient::new(&links, b);
    let runs: Vec<_> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let u0 = initial_field(&grid, cfg.seed.wrapping_add(k as u64), 1.0);
            descend(&obj, u0, cfg.max_iterations, cfg.grad_tolerance, cfg.step_rule)
        })
        .collect();
    let best = best_of(runs);
    let field = ComplexField::from_values(&grid, best.u)?;
    let breakdown = energy(&field, &links, b)?;
    Ok(MinResult {
        value: quotient_value(&breakdown),
        field,
        breakdown,
        residual: best.residual,
        iterations: best.iterations,
        converged: best.converged,
        provenance: Provenance {
            problem: Problem::CubeQuotient,
            b,
            r,
            l: Some(r),
            counts: grid.counts().to_vec(),
            seed: cfg.seed,
            grad_tolerance: cfg.grad_tolerance,
        },
    })
}

/// `F_lin(u) / (int |u|^4)^(1/2)` from an energy breakdown.
pub fn quotient_value(e: &EnergyBreakdown) -> f64 {
    e.linear_part() / e.l4_pow4().sqrt()
}

/// Quotient of an arbitrary nonzero field.
pub fn quotient_of(field: &ComplexField, b: f64) -> Result<f64> {
    let potential = if field.grid().dim() == 2 { Potential::A0 } else { Potential::F };
    let links = link_phases(field.grid(), potential)?;
    let e = energy(field, &links, b)?;
    if e.quartic == 0.0 {
        return Err(Error::InvalidParameter("quotient of the zero field".into()));
    }
    Ok(quotient_value(&e))
}

/// Thermodynamic-limit estimate of `g(b)` from `m0(b,R)/R^2` on several squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GEstimate {
    pub b: f64,
    /// `(R, m0(b,R)/R^2)`, sorted by `R`.
    pub values: Vec<(f64, f64)>,
    /// Intercept of the `g + C/R` fit, clamped to `[-1/2, 0]`.
    pub extrapolated_g: f64,
    /// Unclamped intercept.
    pub raw_intercept: f64,
    pub fitted_c: f64,
    /// Largest absolute residual of the two-parameter fit.
    pub fit_residual: f64,
    /// Whether `m0/R^2` is non-increasing along `R` up to ten solver tolerances.
    pub monotone: bool,
    pub all_converged: bool,
    pub results: Vec<MinResult>,
}

impl GEstimate {
    /// Error bar used by the inequality harness.
    pub fn error_bar(&self) -> f64 {
        self.fit_residual
    }
}

/// Least-squares line `y = a + c x`; returns `(a, c, max |residual|)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - c * mx;
    let res = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - c * x).abs())
        .fold(0.0, f64::max);
    (a, c, res)
}

/// Fit `m0(b,R)/R^2 = g + C/R` over `r_list`, with grid spacing about `h`.
pub fn estimate_g(b: f64, r_list: &[f64], h: f64, cfg: &SolverConfig) -> Result<GEstimate> {
    if r_list.len() < 3 || r_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "R list must be increasing with at least 3 entries".into(),
        ));
    }
    let results: Vec<MinResult> = r_list
        .par_iter()
        .map(|&r| minimize_m0(b, r, dirichlet_counts(r, h), cfg))
        .collect::<Result<_>>()?;
    Ok(g_from_results(b, results))
}

/// Assemble a [`GEstimate`] from already computed square minimizers.
pub fn g_from_results(b: f64, mut results: Vec<MinResult>) -> GEstimate {
    results.sort_by(|x, y| x.provenance.r.total_cmp(&y.provenance.r));
    let values: Vec<(f64, f64)> = results
        .iter()
        .map(|m| (m.provenance.r, m.value / (m.provenance.r * m.provenance.r)))
        .collect();
    let xs: Vec<f64> = values.iter().map(|(r, _)| 1.0 / r).collect();
    let ys: Vec<f64> = values.iter().map(|(_, y)| *y).collect();
    let (a, c, res) = fit_line(&xs, &ys);
    let tol = 10.0 * results.iter().map(|m| m.provenance.grad_tolerance).fold(0.0, f64::max);
    let monotone = ys.windows(2).all(|w| w[1] <= w[0] + tol);
    GEstimate {
        b,
        extrapolated_g: a.clamp(-0.5, 0.0),
        raw_intercept: a,
        fitted_c: c,
        fit_residual: res,
        monotone,
        all_converged: results.iter().all(|m| m.converged),
        values,
        results,
    }
}
