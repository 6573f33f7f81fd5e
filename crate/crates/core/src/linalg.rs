//! Linear solvers for `(I - eta * Laplacian) w = r` on a grid domain.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::calculus::laplacian_values;
use crate::grid::GridDomain;
use crate::reduce::pairwise_sum_by;
use crate::{Error, Result};

/// LU factors of a tridiagonal matrix (Thomas algorithm).
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    // sub-diagonal a[i] couples i to i-1, super-diagonal c[i] couples i to i+1
    lower: Vec<f64>,
    upper: Vec<f64>,
    // modified diagonal after forward elimination
    pivots: Vec<f64>,
}

impl Tridiagonal {
    /// Factors the matrix with rows `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`.
    pub fn factor(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Tridiagonal> {
        let n = diag.len();
        let mut pivots = vec![0.0; n];
        for i in 0..n {
            let p = if i == 0 {
                diag[0]
            } else {
                diag[i] - lower[i] * upper[i - 1] / pivots[i - 1]
            };
            if p == 0.0 || !p.is_finite() {
                return Err(Error::SolveDiverged {
                    residual: f64::INFINITY,
                    iterations: i,
                });
            }
            pivots[i] = p;
        }
        Ok(Tridiagonal {
            lower,
            upper,
            pivots,
        })
    }

    pub fn solve(&self, rhs: &[f64], out: &mut [f64]) {
        let n = rhs.len();
        if n == 0 {
            return;
        }
        out[0] = rhs[0];
        for i in 1..n {
            out[i] = rhs[i] - self.lower[i] * out[i - 1] / self.pivots[i - 1];
        }
        out[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            out[i] = (out[i] - self.upper[i] * out[i + 1]) / self.pivots[i];
        }
    }
}

/// Solver for `(I - eta * Δ_Λ) w = r`.
///
/// One-dimensional domains use a direct tridiagonal factorization; higher
/// dimensions use conjugate gradients (the operator is symmetric positive
/// definite because the Neumann Laplacian is a negative semidefinite graph
/// Laplacian).
#[derive(Debug, Clone)]
pub enum HelmholtzSolver {
    Direct(Tridiagonal),
    ConjugateGradient { eta: f64, tol: f64, max_iter: usize },
}

impl HelmholtzSolver {
    pub fn new(domain: &GridDomain, eta: f64, tol: f64) -> Result<HelmholtzSolver> {
        if !(eta >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "eta must be >= 0, got {eta}"
            )));
        }
        let n = domain.len();
        if domain.dim() == 1 {
            let k = eta / (domain.eps() * domain.eps());
            let mut lower = vec![0.0; n];
            let mut upper = vec![0.0; n];
            let mut diag = vec![1.0; n];
            for s in 0..n {
                if let Some(p) = domain.plus(s, 0) {
                    debug_assert_eq!(p, s + 1);
                    upper[s] = -k;
                    diag[s] += k;
                }
                if let Some(m) = domain.minus(s, 0) {
                    debug_assert_eq!(m + 1, s);
                    lower[s] = -k;
                    diag[s] += k;
                }
            }
            Ok(HelmholtzSolver::Direct(Tridiagonal::factor(
                lower, diag, upper,
            )?))
        } else {
            Ok(HelmholtzSolver::ConjugateGradient {
                eta,
                tol,
                max_iter: 20 * n + 100,
            })
        }
    }

    pub fn solve(&self, domain: &GridDomain, rhs: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            HelmholtzSolver::Direct(t) => {
                t.solve(rhs, out);
                Ok(())
            }
            HelmholtzSolver::ConjugateGradient { eta, tol, max_iter } => {
                conjugate_gradient(domain, *eta, rhs, out, *tol, *max_iter).map(|_| ())
            }
        }
    }
}

fn apply(domain: &GridDomain, eta: f64, x: &[f64], lap: &mut [f64], out: &mut [f64]) {
    laplacian_values(domain, x, lap);
    for i in 0..x.len() {
        out[i] = x[i] - eta * lap[i];
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    pairwise_sum_by(a.len(), |i| a[i] * b[i])
}

/// Conjugate gradients from a zero start; returns the iteration count.
///
/// Stops when `|r| <= tol * max(|rhs|, 1e-300)`.
pub fn conjugate_gradient(
    domain: &GridDomain,
    eta: f64,
    rhs: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = rhs.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut lap = vec![0.0; n];
    let target = tol * dot(rhs, rhs).sqrt().max(1e-300);
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= target {
        return Ok(0);
    }
    for it in 1..=max_iter {
        apply(domain, eta, &p, &mut lap, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            return Ok(it);
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::SolveDiverged {
        residual: rr.sqrt(),
        iterations: max_iter,
    })
}
