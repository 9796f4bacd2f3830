//! Self-representation LASSO solved against the Gram matrix.
//!
//! For target column `t` the problem is
//!
//! ```text
//! minimize  ||y_t - Y w||^2 + 2 lambda ||w||_1   subject to  w_t = 0
//! ```
//!
//! which depends on the data only through `G = Y^T Y`:
//! `w^T G w - 2 G(:,t)^T w + G(t,t) + 2 lambda ||w||_1`.
//! Cyclic coordinate descent with exact soft-threshold updates solves it and
//! the KKT residual certifies the result.

use crate::embed::{mean_abs_entry, LayerEmbedding};
use crate::error::{Error, Result};
use crate::types::GramMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LassoOptions {
    /// Converged once no coordinate moves more than this in a sweep...
    pub tol: f64,
    /// ...and the KKT residual is below this.
    pub kkt_tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            kkt_tol: 1e-6,
            max_sweeps: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LassoSolution {
    /// Length `L`, exactly zero at the target.
    pub weights: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub sweeps: usize,
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn check(gram: &GramMatrix, target: usize, w: Option<&[f64]>) -> Result<()> {
    let l = gram.dim();
    if target >= l {
        return Err(Error::Dimension(format!(
            "target {target} outside a {l}-layer Gram matrix"
        )));
    }
    if let Some(w) = w {
        if w.len() != l {
            return Err(Error::Dimension(format!(
                "weight vector has {} entries, expected {l}",
                w.len()
            )));
        }
    }
    Ok(())
}

/// `||y_t - Y w||^2 + 2 lambda ||w||_1` evaluated through the Gram matrix.
pub fn objective(gram: &GramMatrix, target: usize, lambda: f64, w: &[f64]) -> f64 {
    let g = gram.matrix();
    let l = gram.dim();
    let mut quad = 0.0;
    let mut lin = 0.0;
    for i in 0..l {
        if w[i] == 0.0 {
            continue;
        }
        lin += g[(i, target)] * w[i];
        for j in 0..l {
            quad += w[i] * g[(i, j)] * w[j];
        }
    }
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    quad - 2.0 * lin + g[(target, target)] + 2.0 * lambda * l1
}

/// Largest violation of the optimality conditions over the free coordinates.
///
/// With `r = 2 (G w - G(:,t))`, a nonzero `w_j` contributes
/// `|r_j + 2 lambda sign(w_j)|` and a zero `w_j` contributes
/// `max(0, |r_j| - 2 lambda)`.
pub fn kkt_residual(gram: &GramMatrix, target: usize, lambda: f64, w: &[f64]) -> f64 {
    let g = gram.matrix();
    let l = gram.dim();
    let mut worst = 0.0f64;
    for j in 0..l {
        if j == target {
            continue;
        }
        let gw: f64 = (0..l).map(|k| g[(j, k)] * w[k]).sum();
        let r = 2.0 * (gw - g[(j, target)]);
        let v = if w[j] != 0.0 {
            (r + 2.0 * lambda * w[j].signum()).abs()
        } else {
            (r.abs() - 2.0 * lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Solve the LASSO for one target column. `target` is a 0-based layer index.
pub fn solve_column(
    gram: &GramMatrix,
    target: usize,
    lambda: f64,
    opts: &LassoOptions,
) -> Result<LassoSolution> {
    check(gram, target, None)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Validation(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let g = gram.matrix();
    let l = gram.dim();
    let mut w = vec![0.0; l];
    // gw = G w, kept current after every coordinate update
    let mut gw = vec![0.0; l];
    let mut last_objective = objective(gram, target, lambda, &w);
    let mut kkt = kkt_residual(gram, target, lambda, &w);

    for sweep in 1..=opts.max_sweeps {
        let mut max_change = 0.0f64;
        for j in 0..l {
            if j == target {
                continue;
            }
            let gjj = g[(j, j)];
            let old = w[j];
            let new = if gjj > 0.0 {
                // partial residual correlation with coordinate j removed
                let rho = g[(j, target)] - (gw[j] - gjj * old);
                soft_threshold(rho, lambda) / gjj
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                w[j] = new;
                for (k, v) in gw.iter_mut().enumerate() {
                    *v += delta * g[(k, j)];
                }
                max_change = max_change.max(delta.abs());
            }
        }
        if cfg!(debug_assertions) {
            let obj = objective(gram, target, lambda, &w);
            debug_assert!(
                obj <= last_objective + 1e-10 * (1.0 + last_objective.abs()),
                "objective increased from {last_objective} to {obj}"
            );
            last_objective = obj;
        }
        if max_change < opts.tol {
            kkt = kkt_residual(gram, target, lambda, &w);
            if kkt < opts.kkt_tol {
                return Ok(LassoSolution {
                    objective: objective(gram, target, lambda, &w),
                    weights: w,
                    kkt_residual: kkt,
                    sweeps: sweep,
                });
            }
        }
    }
    if opts.max_sweeps > 0 {
        kkt = kkt_residual(gram, target, lambda, &w);
    }
    Err(Error::NotConverged {
        target,
        sweeps: opts.max_sweeps,
        kkt_residual: kkt,
        best: w,
    })
}

/// `4 x` the mean absolute entry of the unnormalized vectorized layer
/// approximations.
pub fn default_lambda(embeddings: &[LayerEmbedding]) -> f64 {
    4.0 * mean_abs_entry(embeddings)
}
