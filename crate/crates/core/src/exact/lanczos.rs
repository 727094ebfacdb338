//! Restarted Lanczos for the lowest eigenpair of a real symmetric operator.
//!
//! Each cycle builds at most `krylov_dim` vectors with full
//! reorthogonalization, then restarts from the current Ritz vector. Vectors
//! in `deflate` are projected out of every Krylov vector, which turns the
//! solver into one for the lowest eigenpair of the operator restricted to
//! their orthogonal complement.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::symmetric_eigen;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosConfig {
    /// Stop when `‖Hx − θx‖ ≤ tolerance · max(1, |θ|)`.
    pub tolerance: f64,
    /// Total matrix-vector products allowed.
    pub max_iterations: usize,
    pub krylov_dim: usize,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        LanczosConfig {
            tolerance: 1e-9,
            max_iterations: 2000,
            krylov_dim: 60,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// Relative residual of the returned pair, recomputed explicitly.
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(b, v);
        axpy(-c, b, v);
    }
}

/// Lowest eigenvalue and eigenvector of the tridiagonal `(alpha, beta)`.
fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let k = alpha.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let (vals, vecs) = symmetric_eigen(&t)?;
    Ok((vals[0], (0..k).map(|i| vecs[(i, 0)]).collect()))
}

pub fn lowest_eigenpair<F>(
    dim: usize,
    mut apply: F,
    deflate: &[Vec<f64>],
    cfg: &LanczosConfig,
) -> Result<Eigenpair>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 || deflate.len() >= dim {
        return Err(Error::Sector("no vectors left to search".into()));
    }
    // A start vector reused across deflation levels has no weight on the
    // degenerate partners of the vectors already found.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(deflate.len() as u64);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    project_out(&mut start, deflate);
    project_out(&mut start, deflate);
    normalize(&mut start);

    let m = cfg.krylov_dim.max(2).min(dim - deflate.len());
    let mut w = vec![0.0; dim];
    let mut iterations = 0usize;
    let mut best: Option<(f64, Vec<f64>)> = None;

    while iterations < cfg.max_iterations {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut converged = false;
        let mut ritz = (0.0, vec![1.0]);

        for k in 0..m {
            apply(&basis[k], &mut w);
            iterations += 1;
            project_out(&mut w, deflate);
            let a = dot(&basis[k], &w);
            alpha.push(a);
            // Full reorthogonalization, two passes.
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    axpy(-c, v, &mut w);
                }
                project_out(&mut w, deflate);
            }
            let b = dot(&w, &w).sqrt();

            ritz = tridiagonal_lowest(&alpha, &beta)?;
            let estimate = b * ritz.1[k].abs();
            let exhausted = b <= 1e-13 * a.abs().max(1.0) || basis.len() + deflate.len() >= dim;
            if estimate <= 0.1 * cfg.tolerance * ritz.0.abs().max(1.0) || exhausted {
                converged = true;
                break;
            }
            if iterations >= cfg.max_iterations || k + 1 == m {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }

        let mut x = vec![0.0; dim];
        for (v, &c) in basis.iter().zip(&ritz.1) {
            axpy(c, v, &mut x);
        }
        project_out(&mut x, deflate);
        normalize(&mut x);
        best = Some((ritz.0, x.clone()));
        start = x;

        if converged {
            // Confirm with an explicit residual; a loose Ritz estimate
            // sends us around another cycle.
            apply(&start, &mut w);
            iterations += 1;
            let theta = dot(&start, &w);
            axpy(-theta, &start, &mut w);
            project_out(&mut w, deflate);
            let res = dot(&w, &w).sqrt() / theta.abs().max(1.0);
            if res <= cfg.tolerance {
                return Ok(Eigenpair {
                    value: theta,
                    vector: start,
                    residual: res,
                    iterations,
                });
            }
        }
    }

    let (_, x) = best.expect("at least one cycle ran");
    apply(&x, &mut w);
    let theta = dot(&x, &w);
    axpy(-theta, &x, &mut w);
    Err(Error::NoConvergence {
        iterations,
        residual: dot(&w, &w).sqrt() / theta.abs().max(1.0),
    })
}
