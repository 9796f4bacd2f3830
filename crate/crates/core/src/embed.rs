//! Per-layer preprocessing for the self-representation step.
//!
//! Each layer is double-centered, `(I - 11^T/n) A (I - 11^T/n)`, and
//! truncated to its best rank `K-1` approximation, kept in factored form
//! `U diag(s) U^T`. The vectorized approximations (length `n^2`) are never
//! formed: their inner products come from
//!
//! ```text
//! <vec(U1 D1 U1^T), vec(U2 D2 U2^T)> = sum_ij D1_i D2_j (U1^T U2)_ij^2
//! ```
//!
//! which costs `O(n K^2)` per pair.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{top_abs_eigs, RankKFactors};
use crate::types::{AdjacencyTensor, GramMatrix};

/// Rank `K-1` factors of one centered layer.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerEmbedding {
    factors: RankKFactors,
    frob_norm: f64,
    degenerate: bool,
}

impl LayerEmbedding {
    pub fn factors(&self) -> &RankKFactors {
        &self.factors
    }

    /// Frobenius norm of the approximation, `sqrt(sum s_k^2)`; set to exactly
    /// zero when it falls below `1e-12 * n`.
    pub fn frob_norm(&self) -> f64 {
        self.frob_norm
    }

    /// True when the approximation is numerically zero (empty or complete
    /// graph, or any layer whose centered matrix vanishes).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn n(&self) -> usize {
        self.factors.dim()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.factors.reconstruct()
    }
}

/// `(I - 11^T/n) A (I - 11^T/n)`, computed by subtracting row and column
/// means and adding back the grand mean.
pub fn center(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    if n == 0 {
        return a.clone();
    }
    let inv = 1.0 / n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| a.row(i).sum() * inv).collect();
    let col_means: Vec<f64> = (0..n).map(|j| a.column(j).sum() * inv).collect();
    let grand = row_means.iter().sum::<f64>() * inv;
    DMatrix::from_fn(n, n, |i, j| a[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// Center `a` and keep its top `k - 1` eigenpairs by absolute value.
pub fn embed_layer(a: &DMatrix<f64>, k: usize) -> Result<LayerEmbedding> {
    if k < 2 {
        return Err(Error::Unsupported(format!(
            "K = {k}: centered layers need at least two communities"
        )));
    }
    let centered = center(a);
    let factors = top_abs_eigs(&centered, k - 1)?;
    let norm = factors.values().iter().map(|s| s * s).sum::<f64>().sqrt();
    let degenerate = norm < 1e-12 * a.nrows() as f64;
    Ok(LayerEmbedding {
        factors,
        frob_norm: if degenerate { 0.0 } else { norm },
        degenerate,
    })
}

/// Embed every layer of the tensor, in parallel.
pub fn embed_tensor(tensor: &AdjacencyTensor, k: usize) -> Result<Vec<LayerEmbedding>> {
    (0..tensor.num_layers())
        .into_par_iter()
        .map(|l| embed_layer(&tensor.layer_f64(l), k))
        .collect()
}

/// `<vec(P1), vec(P2)>` for two factored approximations.
pub fn factored_inner(a: &LayerEmbedding, b: &LayerEmbedding) -> f64 {
    let fa = a.factors();
    let fb = b.factors();
    let cross = fa.vectors().transpose() * fb.vectors();
    let mut total = 0.0;
    for (i, &si) in fa.values().iter().enumerate() {
        for (j, &sj) in fb.values().iter().enumerate() {
            let c = cross[(i, j)];
            total += si * sj * c * c;
        }
    }
    total
}

/// Inner products of the vectorized approximations.
pub fn raw_gram(embeddings: &[LayerEmbedding]) -> Result<GramMatrix> {
    let l = embeddings.len();
    if let Some(first) = embeddings.first() {
        if let Some((i, e)) = embeddings
            .iter()
            .enumerate()
            .find(|(_, e)| e.n() != first.n())
        {
            return Err(Error::Dimension(format!(
                "embedding {i} has n = {}, expected {}",
                e.n(),
                first.n()
            )));
        }
    }
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|i| (i..l).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| factored_inner(&embeddings[i], &embeddings[j]))
        .collect();
    let mut g = DMatrix::zeros(l, l);
    for (&(i, j), v) in pairs.iter().zip(values) {
        g[(i, j)] = v;
        g[(j, i)] = v;
    }
    GramMatrix::new(g)
}

/// Scale a Gram matrix to unit diagonal: `G(i,j) / (norm_i norm_j)`.
pub fn normalized_gram(raw: &GramMatrix, norms: &[f64]) -> Result<GramMatrix> {
    let l = raw.dim();
    if norms.len() != l {
        return Err(Error::Dimension(format!(
            "{} norms for a {l}x{l} Gram matrix",
            norms.len()
        )));
    }
    if let Some(layer) = norms.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateLayer { layer });
    }
    let g = DMatrix::from_fn(l, l, |i, j| {
        if i == j {
            1.0
        } else {
            raw.get(i, j) / (norms[i] * norms[j])
        }
    });
    GramMatrix::new(g)
}

/// Normalized Gram of the embeddings, the only view of the data the LASSO needs.
pub fn unit_gram(embeddings: &[LayerEmbedding]) -> Result<GramMatrix> {
    let norms: Vec<f64> = embeddings.iter().map(LayerEmbedding::frob_norm).collect();
    normalized_gram(&raw_gram(embeddings)?, &norms)
}

/// Mean absolute entry of the `n^2 x L` matrix of vectorized
/// approximations, reconstructing one layer at a time.
pub fn mean_abs_entry(embeddings: &[LayerEmbedding]) -> f64 {
    let Some(first) = embeddings.first() else {
        return 0.0;
    };
    let n = first.n();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = embeddings
        .par_iter()
        .map(|e| e.reconstruct().iter().map(|v| v.abs()).sum::<f64>())
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    total / ((n * n) as f64 * embeddings.len() as f64)
}
