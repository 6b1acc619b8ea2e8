//! Spectra of the magnetic-periodic Landau operators, the lowest-Landau-level
//! basis and the projection onto it.

mod eigs;

use std::f64::consts::PI;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub(crate) use eigs::HermitianOp;
use eigs::{lowest_eigenpairs, EigOptions};

use crate::error::{Error, Result};
use crate::field::{link_phases, Boundary, ComplexField, GaugeLinks, Grid, MagneticOperator, Potential};
use crate::C64;

/// Values below this threshold form the lowest cluster (midpoint of the gap `[1, 3]`).
pub const LLL_THRESHOLD: f64 = 2.0;

/// Consecutive eigenvalues further apart than this start a new cluster.
pub const CLUSTER_GAP: f64 = 0.5;

const SEED: u64 = 0x5eed;

struct LinkOperator<'a> {
    op: MagneticOperator<'a>,
    n: usize,
    bound: f64,
}

impl<'a> LinkOperator<'a> {
    fn new(links: &'a GaugeLinks) -> Self {
        let g = links.grid();
        Self {
            op: MagneticOperator::new(links),
            n: g.site_count(),
            bound: g.spacing().iter().map(|h| 4.0 / (h * h)).sum(),
        }
    }
}

impl HermitianOp for LinkOperator<'_> {
    fn size(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.op.apply(x, y)
    }

    fn upper_bound(&self) -> f64 {
        self.bound
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Ascending eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// Index ranges of near-degenerate clusters, in order.
    pub clusters: Vec<Range<usize>>,
    /// `(2D index, x3 Fourier mode)` of each value; the mode is 0 in 2D.
    pub labels: Vec<(usize, i64)>,
    /// 2D eigenvalues the 3D values were assembled from (equal to `eigenvalues` in 2D).
    pub base: Vec<f64>,
    pub r: f64,
    pub l: Option<f64>,
    pub counts: usize,
    pub flux_quanta: u64,
    /// Eigen-residual norms of the 2D pairs.
    pub residuals: Vec<f64>,
}

impl Spectrum {
    fn new(values: Vec<f64>, labels: Vec<(usize, i64)>, base: Vec<f64>, residuals: Vec<f64>, grid: &Grid, l: Option<f64>) -> Self {
        let clusters = partition(&values);
        Self {
            eigenvalues: values,
            clusters,
            labels,
            base,
            r: grid.extents()[0],
            l,
            counts: grid.counts()[0],
            flux_quanta: grid.flux_quanta().unwrap_or(0),
            residuals,
        }
    }

    /// Eigenvalues below [`LLL_THRESHOLD`].
    pub fn lowest_cluster(&self) -> &[f64] {
        let m = self.eigenvalues.iter().take_while(|v| **v < LLL_THRESHOLD).count();
        &self.eigenvalues[..m]
    }

    /// First eigenvalue at or above [`LLL_THRESHOLD`], if computed.
    pub fn first_above_cluster(&self) -> Option<f64> {
        self.eigenvalues.get(self.lowest_cluster().len()).copied()
    }
}

fn partition(values: &[f64]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > CLUSTER_GAP {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Lowest `k` eigenpairs of the magnetic-periodic operator on the square of side `r`.
///
/// Eigenvectors are normalized to `int |f|^2 = 1`.
pub fn eigenpairs2d(r: f64, counts: usize, k: usize) -> Result<(Spectrum, Vec<ComplexField>)> {
    let grid = Grid::square(r, counts, Boundary::MagneticPeriodic)?;
    let links = link_phases(&grid, Potential::A0)?;
    let op = LinkOperator::new(&links);
    let pairs = lowest_eigenpairs(&op, &EigOptions::new(k, SEED))?;
    let scale = grid.cell_volume().sqrt().recip();
    let vectors = pairs
        .vectors
        .into_iter()
        .map(|v| ComplexField::from_values(&grid, v.into_iter().map(|z| z * scale).collect()))
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..k).map(|j| (j, 0)).collect();
    let spec = Spectrum::new(pairs.values.clone(), labels, pairs.values, pairs.residuals, &grid, None);
    Ok((spec, vectors))
}

/// `k` smallest eigenvalues of the 2D magnetic-periodic operator.
pub fn spectrum2d(r: f64, counts: usize, k: usize) -> Result<Spectrum> {
    let n = crate::field::flux_quanta(r)?;
    if (k as u64) < n + 1 {
        return Err(Error::InvalidParameter(format!("k = {k} must exceed the {n} flux quanta")));
    }
    Ok(eigenpairs2d(r, counts, k)?.0)
}

/// Smallest `n_max` with `(2 pi n_max / l)^2 > window`.
pub fn mode_cutoff(l: f64, window: f64) -> i64 {
    let mut n = 0i64;
    while (2.0 * PI * n as f64 / l).powi(2) <= window {
        n += 1;
    }
    n
}

/// `k` smallest eigenvalues of the 3D operator on the box of height `l`, periodic in `x3`,
/// assembled from the 2D values as `mu_j + (2 pi m / l)^2`.
pub fn spectrum3d(r: f64, l: f64, counts: usize, k: usize) -> Result<Spectrum> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidParameter(format!("height L = {l} must be positive")));
    }
    let s2 = spectrum2d(r, counts, k)?;
    let base = s2.eigenvalues.clone();
    // the k smallest 3D values are at most base[k-1]
    let window = base[k - 1] - base[0];
    let n_max = mode_cutoff(l, window);
    let mut all: Vec<(f64, (usize, i64))> = Vec::new();
    for m in -n_max..=n_max {
        let shift = (2.0 * PI * m as f64 / l).powi(2);
        for (j, mu) in base.iter().enumerate() {
            all.push((mu + shift, (j, m)));
        }
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    let grid = Grid::square(r, counts, Boundary::MagneticPeriodic)?;
    Ok(Spectrum::new(
        all.iter().map(|a| a.0).collect(),
        all.iter().map(|a| a.1).collect(),
        base,
        s2.residuals,
        &grid,
        Some(l),
    ))
}

/// Orthonormal basis of the lowest cluster (the discrete lowest Landau level).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LLLBasis {
    grid: Grid,
    vectors: Vec<ComplexField>,
    eigenvalues: Vec<f64>,
    next_eigenvalue: f64,
    max_eigenvalue_deviation: f64,
    cluster_tol: f64,
}

impl LLLBasis {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn vectors(&self) -> &[ComplexField] {
        &self.vectors
    }

    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn next_eigenvalue(&self) -> f64 {
        self.next_eigenvalue
    }

    /// `max |mu - 1|` over the cluster.
    pub fn max_eigenvalue_deviation(&self) -> f64 {
        self.max_eigenvalue_deviation
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    pub fn flux_quanta(&self) -> u64 {
        self.grid.flux_quanta().unwrap_or(0)
    }

    /// Largest entry of `|Gram - I|`.
    pub fn gram_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((b.inner(a) - C64::new(e, 0.0)).norm());
            }
        }
        worst
    }

    /// Coefficients `int conj(f_m) u` of a cross-section field.
    pub fn coefficients(&self, field: &ComplexField) -> Result<Vec<C64>> {
        if field.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self.vectors.iter().map(|f| field.inner(f)).collect())
    }

    /// `sum_m c_m f_m`.
    pub fn assemble(&self, coefficients: &[C64]) -> Result<ComplexField> {
        if coefficients.len() != self.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for a basis of dimension {}",
                coefficients.len(),
                self.dimension()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.grid.site_count()];
        for (c, f) in coefficients.iter().zip(&self.vectors) {
            out.iter_mut().zip(f.values()).for_each(|(o, v)| *o += c * v);
        }
        ComplexField::from_values(&self.grid, out)
    }
}

/// Basis of the lowest cluster on the magnetic-periodic square of side `r`.
pub fn lll_basis(r: f64, counts: usize, cluster_tol: f64) -> Result<LLLBasis> {
    let n = crate::field::flux_quanta(r)? as usize;
    let grid = Grid::square(r, counts, Boundary::MagneticPeriodic)?;
    let k = (n + 1).min(grid.site_count());
    let (spec, vectors) = eigenpairs2d(r, counts, k)?;
    let found = spec.lowest_cluster().len();
    if found != n {
        return Err(Error::WrongDegeneracy { found, expected: n });
    }
    let cluster_max = spec.eigenvalues[n - 1];
    let next = spec.eigenvalues.get(n).copied().unwrap_or(f64::INFINITY);
    if !(cluster_max + cluster_tol < next) {
        return Err(Error::ClusterNotSeparated {
            cluster_max,
            next,
            tol: cluster_tol,
        });
    }
    let eigenvalues = spec.eigenvalues[..n].to_vec();
    let max_eigenvalue_deviation = eigenvalues.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    Ok(LLLBasis {
        grid,
        vectors: vectors.into_iter().take(n).collect(),
        eigenvalues,
        next_eigenvalue: next,
        max_eigenvalue_deviation,
        cluster_tol,
    })
}

/// Orthogonal projection onto the span of the basis; 3D fields are projected slice by slice in `x3`.
pub fn project_lll(field: &ComplexField, basis: &LLLBasis) -> Result<ComplexField> {
    let g = field.grid();
    if g.dim() == 2 {
        let c = basis.coefficients(field)?;
        return basis.assemble(&c);
    }
    if &g.cross_section()? != basis.grid() {
        return Err(Error::GridMismatch);
    }
    let plane = basis.grid().site_count();
    let vol2 = basis.grid().cell_volume();
    let u = field.values();
    let mut out = vec![C64::new(0.0, 0.0); u.len()];
    for (slice, o) in u.chunks(plane).zip(out.chunks_mut(plane)) {
        for f in basis.vectors() {
            let fv = f.values();
            let c: C64 = fv.iter().zip(slice).map(|(a, b)| a.conj() * b).sum::<C64>() * vol2;
            o.iter_mut().zip(fv).for_each(|(o, v)| *o += c * v);
        }
    }
    ComplexField::from_values(g, out)
}

/// Quadratic form `int |(grad - iA) u|^2` with the standard potential of the field's grid.
pub fn quadratic_form(field: &ComplexField) -> Result<f64> {
    let potential = if field.grid().dim() == 2 { Potential::A0 } else { Potential::F };
    let links = link_phases(field.grid(), potential)?;
    Ok(MagneticOperator::new(&links).form(field.values()))
}

/// `|u - P u|_p / (sqrt(gamma) |u|_2)` for a field with `Q(u) <= (1 + gamma) |u|_2^2`.
pub fn gap_defect(field: &ComplexField, basis: &LLLBasis, gamma: f64, p: u32) -> Result<f64> {
    if ![2, 4, 6].contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} must be 2, 4 or 6")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma = {gamma} must be positive")));
    }
    let form = quadratic_form(field)?;
    let mass = field.integral_pow(2);
    let bound = (1.0 + gamma) * mass;
    if form > bound * (1.0 + 1e-12) {
        return Err(Error::HypothesisViolated { form, bound });
    }
    if mass == 0.0 {
        return Ok(0.0);
    }
    let proj = project_lll(field, basis)?;
    let rest = field.axpy(C64::new(-1.0, 0.0), &proj);
    Ok(rest.norm_lp(p) / (gamma.sqrt() * mass.sqrt()))
}
