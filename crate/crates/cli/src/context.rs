//! Cached wrappers around the core solvers.

use glvortex::abrikosov::{minimize_cr, AbrikosovResult, DEFAULT_RESTARTS};
use glvortex::field::side_for_quanta;
use glvortex::gl3d::{solve_periodic_gl, ReducedParams};
use glvortex::minimize::{
    dirichlet_counts, g_from_results, minimize_m0, minimize_m0_3d, minimize_quotient, GEstimate, MinResult,
    SolverConfig,
};
use glvortex::spectral::{spectrum2d, spectrum3d, Spectrum};
use rayon::prelude::*;

use crate::args::SolverFlags;
use crate::cache::Cache;
use crate::error::CliResult;

pub struct Context {
    pub solver: SolverFlags,
    pub cache: Cache,
}

impl Context {
    pub fn new(solver: SolverFlags, cache: Cache) -> Self {
        Self { solver, cache }
    }

    /// Solver settings for energy minimizations.
    pub fn cfg(&self) -> SolverConfig {
        self.solver.config(1)
    }

    /// Solver settings for Abrikosov minimizations.
    pub fn ab_cfg(&self) -> SolverConfig {
        self.solver.config(DEFAULT_RESTARTS)
    }

    pub fn m0(&self, b: f64, r: f64, counts: usize) -> CliResult<MinResult> {
        let cfg = self.cfg();
        self.cache
            .get_or_compute("m0_square", &(b, r, counts, &cfg), || Ok(minimize_m0(b, r, counts, &cfg)?))
    }

    pub fn m0_cube(&self, b: f64, r: f64, counts: usize) -> CliResult<MinResult> {
        let cfg = self.cfg();
        self.cache
            .get_or_compute("m0_cube", &(b, r, counts, &cfg), || Ok(minimize_m0_3d(b, r, counts, &cfg)?))
    }

    pub fn quotient(&self, b: f64, r: f64, counts: usize) -> CliResult<MinResult> {
        let cfg = self.cfg();
        self.cache
            .get_or_compute("quotient", &(b, r, counts, &cfg), || Ok(minimize_quotient(b, r, counts, &cfg)?))
    }

    pub fn periodic(&self, params: &ReducedParams, counts: usize, counts3: usize) -> CliResult<MinResult> {
        let cfg = self.cfg();
        self.cache.get_or_compute("periodic", &(params, counts, counts3, &cfg), || {
            Ok(solve_periodic_gl(params, counts, counts3, &cfg)?)
        })
    }

    pub fn abrikosov(&self, n: u64, counts: usize) -> CliResult<AbrikosovResult> {
        let cfg = self.ab_cfg();
        self.cache
            .get_or_compute("abrikosov", &(n, counts, &cfg), || Ok(minimize_cr(n, counts, &cfg)?))
    }

    pub fn spectrum2d(&self, n: u64, counts: usize, k: usize) -> CliResult<Spectrum> {
        let r = side_for_quanta(n);
        self.cache
            .get_or_compute("spectrum2d", &(n, counts, k), || Ok(spectrum2d(r, counts, k)?))
    }

    pub fn spectrum3d(&self, n: u64, l: f64, counts: usize, k: usize) -> CliResult<Spectrum> {
        let r = side_for_quanta(n);
        self.cache
            .get_or_compute("spectrum3d", &(n, l, counts, k), || Ok(spectrum3d(r, l, counts, k)?))
    }

    /// `g(b)` from squares of the given sides at spacing about `h`.
    pub fn g(&self, b: f64, r_list: &[f64], h: f64) -> CliResult<GEstimate> {
        if r_list.len() < 3 || r_list.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(glvortex::Error::InvalidParameter("R list must be increasing with at least 3 entries".into()).into());
        }
        let results: Vec<MinResult> = r_list
            .par_iter()
            .map(|&r| self.m0(b, r, dirichlet_counts(r, h)))
            .collect::<CliResult<_>>()?;
        Ok(g_from_results(b, results))
    }
}
