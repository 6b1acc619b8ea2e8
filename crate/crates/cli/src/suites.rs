//! Check suites over cached solves.

use glvortex::abrikosov::{assemble_estimate, check_eab, AbrikosovEstimate, AbrikosovResult};
use glvortex::field::side_for_quanta;
use glvortex::gl3d::{
    cell_statistics, check_thm_l2, check_thm_l4, density_row, extrapolate_rows, DensityRow, PartitionSpec,
    ReducedParams,
};
use glvortex::minimize::{dirichlet_counts, GEstimate, MinResult, Problem};
use glvortex::spectral::lll_basis;
use glvortex::verify::{check_g_bounds, check_ka, CheckReport, LemmaSweep};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::context::Context;
use crate::error::CliResult;

/// Scalar summary of a [`MinResult`] (the field itself is omitted).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinSummary {
    pub problem: Problem,
    pub b: f64,
    pub r: f64,
    pub l: Option<f64>,
    pub counts: Vec<usize>,
    pub seed: u64,
    pub grad_tolerance: f64,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kinetic: f64,
    pub l2_pow2: f64,
    pub l4_pow4: f64,
}

impl From<&MinResult> for MinSummary {
    fn from(m: &MinResult) -> Self {
        let p = &m.provenance;
        Self {
            problem: p.problem,
            b: p.b,
            r: p.r,
            l: p.l,
            counts: p.counts.clone(),
            seed: p.seed,
            grad_tolerance: p.grad_tolerance,
            value: m.value,
            residual: m.residual,
            iterations: m.iterations,
            converged: m.converged,
            kinetic: m.breakdown.kinetic,
            l2_pow2: m.l2_pow2(),
            l4_pow4: m.l4_pow4(),
        }
    }
}

/// [`GEstimate`] without the fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GSummary {
    pub b: f64,
    pub values: Vec<(f64, f64)>,
    pub extrapolated_g: f64,
    pub raw_intercept: f64,
    pub fitted_c: f64,
    pub fit_residual: f64,
    pub monotone: bool,
    pub all_converged: bool,
    pub minima: Vec<MinSummary>,
}

impl From<&GEstimate> for GSummary {
    fn from(g: &GEstimate) -> Self {
        Self {
            b: g.b,
            values: g.values.clone(),
            extrapolated_g: g.extrapolated_g,
            raw_intercept: g.raw_intercept,
            fitted_c: g.fitted_c,
            fit_residual: g.fit_residual,
            monotone: g.monotone,
            all_converged: g.all_converged,
            minima: g.results.iter().map(MinSummary::from).collect(),
        }
    }
}

/// Outcome of a suite: the checks plus the data they were computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub suite: String,
    pub checks: Vec<CheckReport>,
    pub minima: Vec<MinSummary>,
    pub g_estimates: Vec<GSummary>,
    pub density_rows: Vec<DensityRow>,
    pub abrikosov: Vec<AbrikosovResult>,
    pub eab: Option<f64>,
    /// True iff every asserted check passed.
    pub passed: bool,
}

impl SweepReport {
    fn new(suite: &str, checks: Vec<CheckReport>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self {
            suite: suite.into(),
            checks,
            minima: vec![],
            g_estimates: vec![],
            density_rows: vec![],
            abrikosov: vec![],
            eab: None,
            passed,
        }
    }
}

pub fn g_suite(ctx: &Context, b_list: &[f64], r_list: &[f64], h: f64) -> CliResult<(Vec<GEstimate>, SweepReport)> {
    let gs: Vec<GEstimate> = b_list.iter().map(|&b| ctx.g(b, r_list, h)).collect::<CliResult<_>>()?;
    let mut report = SweepReport::new("g", vec![check_g_bounds(&gs)?]);
    report.g_estimates = gs.iter().map(GSummary::from).collect();
    Ok((gs, report))
}

pub fn lemma_suite(ctx: &Context, b_list: &[f64], r_list: &[f64], h: f64) -> CliResult<(Vec<LemmaSweep>, SweepReport)> {
    let mut sweeps = Vec::new();
    for &b in b_list {
        let g = ctx.g(b, r_list, h)?;
        let cubes: Vec<MinResult> = r_list
            .par_iter()
            .map(|&r| ctx.m0_cube(b, r, dirichlet_counts(r, h)))
            .collect::<CliResult<_>>()?;
        let quotients: Vec<MinResult> = if b > 0.0 && b < 1.0 {
            r_list
                .par_iter()
                .map(|&r| ctx.quotient(b, r, dirichlet_counts(r, h)))
                .collect::<CliResult<_>>()?
        } else {
            vec![]
        };
        sweeps.push(LemmaSweep {
            b,
            h,
            g,
            cubes,
            quotients,
        });
    }
    let mut checks = Vec::new();
    let mut minima = Vec::new();
    let mut g_estimates = Vec::new();
    for s in &sweeps {
        checks.extend(s.checks()?);
        minima.extend(s.cubes.iter().chain(&s.quotients).map(MinSummary::from));
        g_estimates.push(GSummary::from(&s.g));
    }
    let mut report = SweepReport::new("lemmas", checks);
    report.minima = minima;
    report.g_estimates = g_estimates;
    Ok((sweeps, report))
}

/// Cross-check parameters for the Abrikosov suite.
pub struct CrossCheck<'a> {
    pub b_list: &'a [f64],
    pub r_list: &'a [f64],
    pub h: f64,
}

pub fn abrikosov_estimate(ctx: &Context, n_list: &[u64], grid: usize, cross: Option<CrossCheck>) -> CliResult<AbrikosovEstimate> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(glvortex::Error::InvalidParameter("n list must be increasing and positive".into()).into());
    }
    let results: Vec<AbrikosovResult> = n_list.iter().map(|&n| ctx.abrikosov(n, grid)).collect::<CliResult<_>>()?;
    let gs = match cross {
        Some(c) => c.b_list.iter().map(|&b| ctx.g(b, c.r_list, c.h)).collect::<CliResult<_>>()?,
        None => vec![],
    };
    Ok(assemble_estimate(results, gs))
}

pub fn abrikosov_suite(ctx: &Context, n_list: &[u64], grid: usize, cross: Option<CrossCheck>) -> CliResult<(AbrikosovEstimate, SweepReport)> {
    let est = abrikosov_estimate(ctx, n_list, grid, cross)?;
    let mut report = SweepReport::new("abrikosov", vec![check_eab(&est)]);
    report.g_estimates = est.g_estimates.iter().map(GSummary::from).collect();
    report.abrikosov = est.results.clone();
    report.eab = Some(est.extrapolated_eab);
    Ok((est, report))
}

pub fn ka_suite(ctx: &Context, b_list: &[f64], n_list: &[u64], grid: usize, h: f64) -> CliResult<SweepReport> {
    let mut points = Vec::new();
    let mut abrikosov = Vec::new();
    for &n in n_list {
        let ab = ctx.abrikosov(n, grid)?;
        let r = side_for_quanta(n);
        let squares: Vec<MinResult> = b_list
            .par_iter()
            .map(|&b| ctx.m0(b, r, dirichlet_counts(r, h)))
            .collect::<CliResult<_>>()?;
        for m in squares {
            points.push((m, ab.clone()));
        }
        abrikosov.push(ab);
    }
    let mut report = SweepReport::new("ka", vec![check_ka(&points)?]);
    report.minima = points.iter().map(|(m, _)| MinSummary::from(m)).collect();
    report.abrikosov = abrikosov;
    Ok(report)
}

/// Density rows on one grid.
pub fn density_rows(ctx: &Context, b_list: &[f64], n: u64, grid: usize, grid3: usize, eab: f64) -> CliResult<Vec<(MinResult, DensityRow)>> {
    let r = side_for_quanta(n);
    let basis = lll_basis(r, grid, glvortex::abrikosov::DEFAULT_CLUSTER_TOL)?;
    b_list
        .par_iter()
        .map(|&b| {
            let params = ReducedParams::new(b, r, r)?;
            let m = ctx.periodic(&params, grid, grid3)?;
            let row = density_row(&m, eab, &basis)?;
            Ok((m, row))
        })
        .collect()
}

/// Raw rows on both grids and the extrapolated rows, with the ratio checks on the latter.
pub struct DensityOutcome {
    pub fine: Vec<(MinResult, DensityRow)>,
    pub coarse: Vec<DensityRow>,
    pub extrapolated: Vec<DensityRow>,
    pub report: SweepReport,
}

pub fn density_suite(
    ctx: &Context,
    b_list: &[f64],
    n: u64,
    grid: usize,
    grid_coarse: usize,
    grid3: usize,
    eab: f64,
) -> CliResult<DensityOutcome> {
    let fine = density_rows(ctx, b_list, n, grid, grid3, eab)?;
    let coarse: Vec<DensityRow> = density_rows(ctx, b_list, n, grid_coarse, grid3, eab)?
        .into_iter()
        .map(|(_, r)| r)
        .collect();
    let extrapolated: Vec<DensityRow> = coarse
        .iter()
        .zip(&fine)
        .map(|(c, (_, f))| extrapolate_rows(c, f))
        .collect::<glvortex::Result<_>>()?;
    let mut report = SweepReport::new("density", vec![check_thm_l4(&extrapolated)?, check_thm_l2(&extrapolated)?]);
    report.minima = fine.iter().map(|(m, _)| MinSummary::from(m)).collect();
    report.density_rows = fine
        .iter()
        .map(|(_, r)| r.clone())
        .chain(coarse.iter().cloned())
        .chain(extrapolated.iter().cloned())
        .collect();
    report.eab = Some(eab);
    Ok(DensityOutcome {
        fine,
        coarse,
        extrapolated,
        report,
    })
}

/// `(max - min)/mean` of per-cell `|u|^4` means over a uniform tiling.
pub fn cell_spread(m: &MinResult, tiles: usize) -> CliResult<f64> {
    Ok(cell_statistics(m, &PartitionSpec::uniform(tiles))?.l4_spread)
}
