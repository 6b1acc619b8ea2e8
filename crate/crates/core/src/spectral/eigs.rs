//! Lowest eigenpairs of a Hermitian operator by Chebyshev-filtered subspace
//! iteration with Rayleigh-Ritz extraction.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::minimize::chunked_sum;
use crate::C64;

/// Hermitian operator on `C^n` given by its action.
pub(crate) trait HermitianOp: Sync {
    fn size(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]);
    /// Upper bound on the spectrum.
    fn upper_bound(&self) -> f64;
}

pub(crate) struct EigOptions {
    pub wanted: usize,
    pub guard: usize,
    pub degree: usize,
    pub max_restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl EigOptions {
    pub fn new(wanted: usize, seed: u64) -> Self {
        Self {
            wanted,
            guard: wanted.max(4),
            degree: 24,
            max_restarts: 400,
            tol: 1e-9,
            seed,
        }
    }
}

/// Eigenpairs sorted ascending; vectors are orthonormal in the plain `C^n` product.
pub(crate) struct EigPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
    pub residuals: Vec<f64>,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    // conj(a) . b
    let re = chunked_sum(a.len(), |i| a[i].re * b[i].re + a[i].im * b[i].im);
    let im = chunked_sum(a.len(), |i| a[i].re * b[i].im - a[i].im * b[i].re);
    C64::new(re, im)
}

fn norm(a: &[C64]) -> f64 {
    chunked_sum(a.len(), |i| a[i].norm_sqr()).sqrt()
}

/// Gram-Schmidt with one reorthogonalization pass; dependent columns are
/// replaced by fresh random vectors.
fn orthonormalize(x: &mut [Vec<C64>], rng: &mut ChaCha8Rng) {
    for j in 0..x.len() {
        for _attempt in 0..3 {
            let before = norm(&x[j]);
            for _pass in 0..2 {
                for i in 0..j {
                    let c = dot(&x[i], &x[j]);
                    let (head, tail) = x.split_at_mut(j);
                    tail[0].iter_mut().zip(&head[i]).for_each(|(y, q)| *y -= q * c);
                }
            }
            let nrm = norm(&x[j]);
            if nrm > 1e-10 * before.max(f64::MIN_POSITIVE) {
                x[j].iter_mut().for_each(|z| *z /= nrm);
                break;
            }
            x[j] = random_vector(x[j].len(), rng);
        }
    }
}

fn random_vector(n: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect()
}

/// Ritz values and rotated basis/images of an orthonormal block.
fn rayleigh_ritz<O: HermitianOp>(op: &O, x: &[Vec<C64>]) -> (Vec<f64>, Vec<Vec<C64>>, Vec<Vec<C64>>) {
    let n = op.size();
    let p = x.len();
    let ax: Vec<Vec<C64>> = x
        .iter()
        .map(|v| {
            let mut y = vec![C64::new(0.0, 0.0); n];
            op.apply(v, &mut y);
            y
        })
        .collect();
    let mut h = DMatrix::<C64>::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = dot(&x[i], &ax[j]);
            h[(i, j)] = v;
            h[(j, i)] = v.conj();
        }
        h[(i, i)] = C64::new(h[(i, i)].re, 0.0);
    }
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let rotate = |src: &[Vec<C64>]| -> Vec<Vec<C64>> {
        order
            .iter()
            .map(|&k| {
                let mut out = vec![C64::new(0.0, 0.0); n];
                for (i, v) in src.iter().enumerate() {
                    let c = eig.eigenvectors[(i, k)];
                    out.iter_mut().zip(v).for_each(|(o, x)| *o += x * c);
                }
                out
            })
            .collect()
    };
    (values, rotate(x), rotate(&ax))
}

/// Apply the degree-`m` Chebyshev filter damping `[a, b]` (scaled at `a0`) to every column.
fn filter<O: HermitianOp>(op: &O, x: &mut [Vec<C64>], m: usize, a: f64, b: f64, a0: f64) {
    let n = op.size();
    let e = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    let sigma1 = e / (a0 - c);
    let mut ay = vec![C64::new(0.0, 0.0); n];
    for col in x.iter_mut() {
        let mut sigma = sigma1;
        let mut prev = col.clone();
        op.apply(&prev, &mut ay);
        let mut y: Vec<C64> = ay
            .iter()
            .zip(&prev)
            .map(|(ax, x)| (ax - x * c) * (sigma1 / e))
            .collect();
        for _ in 1..m {
            let sigma2 = 1.0 / (2.0 / sigma1 - sigma);
            op.apply(&y, &mut ay);
            let next: Vec<C64> = ay
                .iter()
                .zip(&y)
                .zip(&prev)
                .map(|((ay, y), x)| (ay - y * c) * (2.0 * sigma2 / e) - x * (sigma * sigma2))
                .collect();
            prev = std::mem::replace(&mut y, next);
            sigma = sigma2;
            // keep magnitudes bounded
            let s = norm(&y);
            if s > 1e100 {
                y.iter_mut().for_each(|z| *z /= s);
                prev.iter_mut().for_each(|z| *z /= s);
            }
        }
        *col = y;
    }
}

pub(crate) fn lowest_eigenpairs<O: HermitianOp>(op: &O, opts: &EigOptions) -> Result<EigPairs> {
    let n = op.size();
    let k = opts.wanted;
    let p = (k + opts.guard).min(n);
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("cannot compute {k} eigenpairs of a size-{n} operator")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<C64>> = (0..p).map(|_| random_vector(n, &mut rng)).collect();
    orthonormalize(&mut x, &mut rng);
    let upper = op.upper_bound();
    let mut converged = 0;
    for restart in 0..=opts.max_restarts {
        let (values, vecs, images) = rayleigh_ritz(op, &x);
        let residuals: Vec<f64> = (0..p)
            .map(|i| {
                let r: Vec<C64> = images[i].iter().zip(&vecs[i]).map(|(a, v)| a - v * values[i]).collect();
                norm(&r)
            })
            .collect();
        converged = (0..k)
            .take_while(|&i| residuals[i] <= opts.tol * values[i].abs().max(1.0))
            .count();
        if converged == k || p == n {
            return Ok(EigPairs {
                values: values[..k].to_vec(),
                vectors: vecs[..k].to_vec(),
                residuals: residuals[..k].to_vec(),
            });
        }
        if restart == opts.max_restarts {
            break;
        }
        x = vecs;
        let a = values[p - 1];
        let a0 = values[0];
        if !(a < upper) {
            break;
        }
        filter(op, &mut x, opts.degree, a, upper, a0.min(a - 1e-6 * (upper - a)));
        orthonormalize(&mut x, &mut rng);
    }
    Err(Error::EigsNotConverged {
        converged,
        wanted: k,
        iterations: opts.max_restarts,
    })
}
