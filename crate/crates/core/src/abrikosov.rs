//! The Abrikosov energy `F_R(v) = int (|v|^4/2 - |v|^2)` over the lowest Landau
//! level, its minimum `c(R)` and the limit `E_Ab = lim c(R)/R^2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{side_for_quanta, ComplexField, EnergyBreakdown};
use crate::minimize::{descend, estimate_g, initial_coefficients, GEstimate, Objective, SolverConfig};
use crate::spectral::{lll_basis, LLLBasis};
use crate::verify::{CheckReport, InequalityReport, Inputs};
use crate::C64;

/// Random starts per flux value unless configured otherwise.
pub const DEFAULT_RESTARTS: usize = 16;

/// Default separation margin when extracting the lowest cluster.
pub const DEFAULT_CLUSTER_TOL: f64 = 0.1;

/// `F_R` of `v = sum c_m f_m`, evaluated on the grid.
///
/// `kinetic` holds `int |v|^2` (the eigenvalue-one identity) for diagnostics;
/// the breakdown uses `b = 0` so that `total = F_R(v)`.
pub fn abrikosov_energy(coefficients: &[C64], basis: &LLLBasis) -> Result<EnergyBreakdown> {
    let v = basis.assemble(coefficients)?;
    Ok(field_breakdown(&v))
}

fn field_breakdown(v: &ComplexField) -> EnergyBreakdown {
    let l2 = v.integral_pow(2);
    let l4 = v.integral_pow(4);
    EnergyBreakdown::new(0.0, l2, -l2, 0.5 * l4)
}

/// Coefficient-space form of `F_R`: the Gram matrix and the interaction tensor
/// `T[m,m',k,k'] = int conj(f_m f_m') f_k f_k'`.
#[derive(Clone, Debug)]
pub struct AbrikosovModel {
    basis: LLLBasis,
    gram: Vec<C64>,
    tensor: Vec<C64>,
}

impl AbrikosovModel {
    pub fn new(basis: LLLBasis) -> Self {
        let n = basis.dimension();
        let f = basis.vectors();
        let vol = basis.grid().cell_volume();
        let mut gram = vec![C64::new(0.0, 0.0); n * n];
        for m in 0..n {
            for k in 0..n {
                gram[m * n + k] = f[k].inner(&f[m]);
            }
        }
        let sites = basis.grid().site_count();
        let mut tensor = vec![C64::new(0.0, 0.0); n * n * n * n];
        for m in 0..n {
            for mp in 0..n {
                let left: Vec<C64> = (0..sites).map(|s| (f[m].values()[s] * f[mp].values()[s]).conj()).collect();
                for k in 0..n {
                    for kp in 0..n {
                        let mut acc = C64::new(0.0, 0.0);
                        for s in 0..sites {
                            acc += left[s] * f[k].values()[s] * f[kp].values()[s];
                        }
                        tensor[((m * n + mp) * n + k) * n + kp] = acc * vol;
                    }
                }
            }
        }
        Self { basis, gram, tensor }
    }

    pub fn basis(&self) -> &LLLBasis {
        &self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.dimension()
    }

    /// `(int |v|^2, int |v|^4)` from the precomputed tensors.
    pub fn moments(&self, c: &[C64]) -> (f64, f64) {
        let n = self.dimension();
        let mut l2 = C64::new(0.0, 0.0);
        for m in 0..n {
            for k in 0..n {
                l2 += c[m].conj() * c[k] * self.gram[m * n + k];
            }
        }
        let mut l4 = C64::new(0.0, 0.0);
        for m in 0..n {
            for mp in 0..n {
                let a = (c[m] * c[mp]).conj();
                for k in 0..n {
                    for kp in 0..n {
                        l4 += a * c[k] * c[kp] * self.tensor[((m * n + mp) * n + k) * n + kp];
                    }
                }
            }
        }
        (l2.re, l4.re)
    }

    /// `F_R` of the coefficient vector.
    pub fn energy(&self, c: &[C64]) -> f64 {
        let (l2, l4) = self.moments(c);
        0.5 * l4 - l2
    }

    /// `dF/d(conj c_m)`; vanishes exactly when the projected GL equation holds.
    pub fn gradient(&self, c: &[C64], out: &mut [C64]) {
        let n = self.dimension();
        for m in 0..n {
            let mut g = C64::new(0.0, 0.0);
            for mp in 0..n {
                let a = c[mp].conj();
                for k in 0..n {
                    for kp in 0..n {
                        g += a * c[k] * c[kp] * self.tensor[((m * n + mp) * n + k) * n + kp];
                    }
                }
            }
            for k in 0..n {
                g -= self.gram[m * n + k] * c[k];
            }
            out[m] = g;
        }
    }
}

impl Objective for AbrikosovModel {
    fn evaluate(&self, u: &[C64], r: &mut [C64]) -> f64 {
        self.gradient(u, r);
        self.energy(u)
    }

    fn residual(&self, _u: &[C64], r: &[C64]) -> f64 {
        r.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn initial_step(&self) -> f64 {
        0.1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbrikosovResult {
    pub n: u64,
    pub r: f64,
    pub coefficients: Vec<C64>,
    /// Best `c(R)` over the restarts.
    pub value: f64,
    /// Sup-norm of the coefficient gradient at the returned point.
    pub stationarity_defect: f64,
    /// `int |v|^4 - int |v|^2`.
    pub pairing_defect: f64,
    pub l2_pow2: f64,
    pub l4_pow4: f64,
    /// Largest minus smallest restart value.
    pub spread: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
    pub seed: u64,
}

/// One-mode closed form `-S2^2 / (2 S4)` for a single basis function.
pub fn one_mode_value(f: &ComplexField) -> f64 {
    let s2 = f.integral_pow(2);
    let s4 = f.integral_pow(4);
    -s2 * s2 / (2.0 * s4)
}

/// `c(R)` for `R = sqrt(2 pi n)` by descent over the coefficients.
pub fn minimize_cr(n: u64, counts: usize, cfg: &SolverConfig) -> Result<AbrikosovResult> {
    cfg.validate()?;
    let r = side_for_quanta(n);
    let basis = lll_basis(r, counts, DEFAULT_CLUSTER_TOL)?;
    let model = AbrikosovModel::new(basis);
    Ok(minimize_model(&model, n, r, cfg))
}

pub fn minimize_model(model: &AbrikosovModel, n: u64, r: f64, cfg: &SolverConfig) -> AbrikosovResult {
    let dim = model.dimension();
    let runs: Vec<_> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| {
            let seed = cfg.seed.wrapping_add(k as u64);
            let c0 = initial_coefficients(dim, seed, 0.5 * r * r);
            descend(model, c0, cfg.max_iterations, cfg.grad_tolerance, cfg.step_rule)
        })
        .collect();
    let lo = runs.iter().map(|o| o.value).fold(f64::INFINITY, f64::min);
    let hi = runs.iter().map(|o| o.value).fold(f64::NEG_INFINITY, f64::max);
    let mut best = 0;
    for (i, o) in runs.iter().enumerate() {
        if o.value < runs[best].value {
            best = i;
        }
    }
    let out = &runs[best];
    let mut g = vec![C64::new(0.0, 0.0); dim];
    model.gradient(&out.u, &mut g);
    let (l2, l4) = model.moments(&out.u);
    AbrikosovResult {
        n,
        r,
        coefficients: out.u.clone(),
        value: model.energy(&out.u),
        stationarity_defect: g.iter().map(|z| z.norm()).fold(0.0, f64::max),
        pairing_defect: l4 - l2,
        l2_pow2: l2,
        l4_pow4: l4,
        spread: hi - lo,
        iterations: out.iterations,
        converged: out.converged,
        restarts: cfg.restarts,
        seed: cfg.seed,
    }
}

/// How the cross-check from `g(b)/(1-b)^2` is computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckSpec {
    pub b_list: Vec<f64>,
    pub r_list: Vec<f64>,
    /// Grid spacing of the square solves.
    pub h: f64,
}

impl Default for CrossCheckSpec {
    fn default() -> Self {
        Self {
            b_list: vec![0.85, 0.9, 0.95],
            r_list: vec![8.0, 12.0, 16.0],
            h: 0.125,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbrikosovEstimate {
    /// `(n, R, c(R)/R^2)`.
    pub sequence: Vec<(u64, f64, f64)>,
    /// `c(R)/R^2` at the largest `n`.
    pub extrapolated_eab: f64,
    /// Successive differences of the sequence.
    pub differences: Vec<f64>,
    /// Least-squares `E` in `g(b) = E (1-b)^2`.
    pub cross_check_eab: Option<f64>,
    pub g_estimates: Vec<GEstimate>,
    pub results: Vec<AbrikosovResult>,
}

/// Weighted least squares for `y = E x` with `x = (1-b)^2`.
pub fn fit_eab(points: &[(f64, f64)]) -> f64 {
    let num: f64 = points.iter().map(|(b, g)| g * (1.0 - b).powi(2)).sum();
    let den: f64 = points.iter().map(|(b, _)| (1.0 - b).powi(4)).sum();
    num / den
}

/// Sequence `c(R)/R^2` over `n_list` and, if requested, the cross-check from `g`.
pub fn estimate_eab(
    n_list: &[u64],
    counts: usize,
    cfg: &SolverConfig,
    cross: Option<(&CrossCheckSpec, &SolverConfig)>,
) -> Result<AbrikosovEstimate> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) || n_list[0] == 0 {
        return Err(Error::InvalidParameter("n list must be increasing and positive".into()));
    }
    let results: Vec<AbrikosovResult> = n_list
        .iter()
        .map(|&n| minimize_cr(n, counts, cfg))
        .collect::<Result<_>>()?;
    let g_estimates = match cross {
        Some((spec, gcfg)) => spec
            .b_list
            .iter()
            .map(|&b| estimate_g(b, &spec.r_list, spec.h, gcfg))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    Ok(assemble_estimate(results, g_estimates))
}

/// Estimate from already computed `c(R)` values (increasing `n`) and `g` estimates.
pub fn assemble_estimate(results: Vec<AbrikosovResult>, g_estimates: Vec<GEstimate>) -> AbrikosovEstimate {
    let sequence: Vec<(u64, f64, f64)> = results.iter().map(|a| (a.n, a.r, a.value / (a.r * a.r))).collect();
    let differences = sequence.windows(2).map(|w| w[1].2 - w[0].2).collect();
    let extrapolated_eab = sequence.last().map(|s| s.2).unwrap_or(0.0);
    let cross_check_eab = if g_estimates.is_empty() {
        None
    } else {
        let pts: Vec<(f64, f64)> = g_estimates.iter().map(|g| (g.b, g.extrapolated_g)).collect();
        Some(fit_eab(&pts))
    };
    AbrikosovEstimate {
        sequence,
        extrapolated_eab,
        differences,
        cross_check_eab,
        g_estimates,
        results,
    }
}

/// Largest relative gap between the two `E_Ab` estimates.
pub const CROSS_CHECK_TOL: f64 = 0.1;

/// Range of every `c(R)/R^2`, decay of the successive differences and
/// agreement with the cross-check when present.
pub fn check_eab(est: &AbrikosovEstimate) -> CheckReport {
    let mut reports = Vec::new();
    let mut diagnostics = Vec::new();
    for &(n, r, v) in &est.sequence {
        let inputs = Inputs {
            r: vec![r],
            ..Default::default()
        };
        diagnostics.push((format!("c/R^2(n={n})"), v));
        reports.push(InequalityReport::new(format!("-1/2 <= c/R^2 (n={n})"), -0.5, v, 0.0, true, inputs.clone()));
        reports.push(InequalityReport::new(format!("c/R^2 < 0 (n={n})"), v, -f64::MIN_POSITIVE, 0.0, true, inputs));
    }
    if let (Some(first), Some(last)) = (est.differences.first(), est.differences.last()) {
        if est.differences.len() > 1 {
            reports.push(InequalityReport::new(
                "|last difference| <= |first difference|",
                last.abs(),
                first.abs(),
                0.0,
                true,
                Inputs::default(),
            ));
        }
    }
    if let Some(cross) = est.cross_check_eab {
        diagnostics.push(("cross_check_eab".into(), cross));
        reports.push(InequalityReport::new(
            format!("|E_tail - E_cross| <= {CROSS_CHECK_TOL} |E_tail|"),
            (est.extrapolated_eab - cross).abs(),
            CROSS_CHECK_TOL * est.extrapolated_eab.abs(),
            0.0,
            true,
            Inputs {
                b: est.g_estimates.iter().map(|g| g.b).collect(),
                ..Default::default()
            },
        ));
    }
    CheckReport::new("abrikosov", reports, vec![], diagnostics)
}
