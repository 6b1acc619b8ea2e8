//! Gradient descent over complex site vectors with two-point
//! (Barzilai-Borwein) or limited-memory quasi-Newton steps and a
//! non-monotone Armijo safeguard.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::C64;

/// Step-size rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StepRule {
    /// Fixed step `initial_step` with backtracking only.
    Fixed,
    /// Alternating BB1/BB2 steps.
    AdaptiveTwoPoint,
    /// L-BFGS directions built from the last few step/gradient pairs.
    QuasiNewton,
}

pub(crate) trait Objective: Sync {
    /// Value at `u`; writes the `L^2` gradient (per unit volume) into `r`.
    fn evaluate(&self, u: &[C64], r: &mut [C64]) -> f64;

    /// Map back onto the constraint set (identity for unconstrained problems).
    fn project(&self, _u: &mut [C64]) {}

    /// Scaled residual compared against the tolerance.
    fn residual(&self, u: &[C64], r: &[C64]) -> f64 {
        linf(r) / linf(u).max(1.0)
    }

    /// A safe first step (about the inverse Lipschitz constant).
    fn initial_step(&self) -> f64;
}

pub(crate) struct Outcome {
    pub u: Vec<C64>,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn linf(v: &[C64]) -> f64 {
    v.par_iter().map(|z| z.norm()).reduce(|| 0.0, f64::max)
}

const CHUNK: usize = 4096;

/// Sum of `f(i)` for `i < n` with fixed chunking, so the result does not
/// depend on the thread count.
pub(crate) fn chunked_sum<F: Fn(usize) -> f64 + Sync>(n: usize, f: F) -> f64 {
    let parts: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum::<f64>())
        .collect();
    parts.iter().sum()
}

/// Deterministic `Re sum conj(a) b`.
pub(crate) fn re_dot(a: &[C64], b: &[C64]) -> f64 {
    chunked_sum(a.len(), |i| a[i].re * b[i].re + a[i].im * b[i].im)
}

const MEMORY: usize = 10;
const PAIRS: usize = 8;
const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 40;

/// Step/gradient-change pairs for the two-loop recursion.
struct History {
    s: std::collections::VecDeque<Vec<C64>>,
    y: std::collections::VecDeque<Vec<C64>>,
    rho: std::collections::VecDeque<f64>,
}

impl History {
    fn new() -> Self {
        Self {
            s: Default::default(),
            y: Default::default(),
            rho: Default::default(),
        }
    }

    fn clear(&mut self) {
        self.s.clear();
        self.y.clear();
        self.rho.clear();
    }

    fn push(&mut self, s: Vec<C64>, y: Vec<C64>, sy: f64) {
        if self.s.len() == PAIRS {
            self.s.pop_front();
            self.y.pop_front();
            self.rho.pop_front();
        }
        self.s.push_back(s);
        self.y.push_back(y);
        self.rho.push_back(1.0 / sy);
    }

    /// `d = -H r`; `None` when no pairs are stored.
    fn direction(&self, r: &[C64]) -> Option<Vec<C64>> {
        let m = self.s.len();
        if m == 0 {
            return None;
        }
        let mut q = r.to_vec();
        let mut a = vec![0.0; m];
        for k in (0..m).rev() {
            a[k] = self.rho[k] * re_dot(&self.s[k], &q);
            axpy(&mut q, -a[k], &self.y[k]);
        }
        let last = m - 1;
        let gamma = 1.0 / (self.rho[last] * re_dot(&self.y[last], &self.y[last]));
        q.par_iter_mut().for_each(|z| *z *= gamma);
        for k in 0..m {
            let beta = self.rho[k] * re_dot(&self.y[k], &q);
            axpy(&mut q, a[k] - beta, &self.s[k]);
        }
        q.par_iter_mut().for_each(|z| *z = -*z);
        Some(q)
    }
}

fn axpy(x: &mut [C64], a: f64, y: &[C64]) {
    x.par_iter_mut().zip(y.par_iter()).for_each(|(x, y)| *x += y * a);
}

fn diff(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.par_iter().zip(b.par_iter()).map(|(a, b)| a - b).collect()
}

pub(crate) fn descend<O: Objective>(
    obj: &O,
    mut u: Vec<C64>,
    max_iterations: usize,
    tol: f64,
    rule: StepRule,
) -> Outcome {
    let n = u.len();
    obj.project(&mut u);
    let mut r = vec![C64::new(0.0, 0.0); n];
    let mut value = obj.evaluate(&u, &mut r);
    let mut recent = std::collections::VecDeque::with_capacity(MEMORY);
    recent.push_back(value);
    let step0 = obj.initial_step();
    let mut alpha = step0;
    let mut pairs = History::new();
    let mut trial = vec![C64::new(0.0, 0.0); n];
    let mut r_trial = vec![C64::new(0.0, 0.0); n];
    let mut residual = obj.residual(&u, &r);
    let mut iterations = 0;
    while iterations < max_iterations && residual > tol {
        iterations += 1;
        let reference = recent.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let quasi = if rule == StepRule::QuasiNewton {
            pairs.direction(&r).filter(|d| re_dot(d, &r) < 0.0)
        } else {
            None
        };
        if rule == StepRule::QuasiNewton {
            alpha = if quasi.is_some() { 1.0 } else { step0 };
            if quasi.is_none() {
                pairs.clear();
            }
        }
        let mut accepted = false;
        let mut trial_value = value;
        for _ in 0..MAX_BACKTRACK {
            match &quasi {
                Some(d) => trial
                    .par_iter_mut()
                    .zip(u.par_iter().zip(d.par_iter()))
                    .for_each(|(t, (x, d))| *t = x + d * alpha),
                None => trial
                    .par_iter_mut()
                    .zip(u.par_iter().zip(r.par_iter()))
                    .for_each(|(t, (x, g))| *t = x - g * alpha),
            }
            obj.project(&mut trial);
            trial_value = obj.evaluate(&trial, &mut r_trial);
            // predicted decrease along the (projected) step
            let decrease = chunked_sum(n, |i| {
                let d = u[i] - trial[i];
                r[i].re * d.re + r[i].im * d.im
            });
            if trial_value.is_finite() && trial_value <= reference - ARMIJO * decrease.max(0.0) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            if rule == StepRule::QuasiNewton && quasi.is_some() {
                // retry from a plain gradient step
                pairs.clear();
                continue;
            }
            // no admissible step at working precision
            break;
        }
        let (s, y) = match rule {
            StepRule::Fixed => (Vec::new(), Vec::new()),
            _ => (diff(&trial, &u), diff(&r_trial, &r)),
        };
        let (ss, sy, yy) = if s.is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            (re_dot(&s, &s), re_dot(&s, &y), re_dot(&y, &y))
        };
        std::mem::swap(&mut u, &mut trial);
        std::mem::swap(&mut r, &mut r_trial);
        value = trial_value;
        if recent.len() == MEMORY {
            recent.pop_front();
        }
        recent.push_back(value);
        residual = obj.residual(&u, &r);
        alpha = match rule {
            StepRule::Fixed => step0,
            StepRule::AdaptiveTwoPoint => {
                if sy > 0.0 && ss > 0.0 {
                    if iterations % 2 == 0 {
                        ss / sy
                    } else {
                        sy / yy
                    }
                } else {
                    step0
                }
                .clamp(1e-3 * step0, 1e6 * step0)
            }
            StepRule::QuasiNewton => {
                if sy > 1e-12 * (ss * yy).sqrt() && sy > 0.0 {
                    pairs.push(s, y, sy);
                }
                1.0
            }
        };
    }
    let converged = residual <= tol;
    Outcome {
        u,
        value,
        residual,
        iterations,
        converged,
    }
}
