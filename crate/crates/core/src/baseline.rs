//! Spectral between-layer baseline: cluster layers by the leading right
//! singular vectors of the matrix whose columns are `vec(U_l U_l^T)`.
//!
//! That matrix has `n^2` rows and is never formed. Its `L x L` Gram matrix
//! has entries `||U_a^T U_b||_F^2`, and the right singular vectors are that
//! Gram matrix's eigenvectors.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result, StageExt};
use crate::linalg::{kmeans, largest_eigs, top_abs_eigs};
use crate::types::{AdjacencyTensor, ClusteringAssignment};

/// Top-`k` eigenvector block (by absolute eigenvalue) of every layer.
pub fn layer_bases(tensor: &AdjacencyTensor, k: usize) -> Result<Vec<DMatrix<f64>>> {
    if k == 0 || k > tensor.n() {
        return Err(Error::Dimension(format!(
            "cannot take {k} eigenvectors of {}-node layers",
            tensor.n()
        )));
    }
    (0..tensor.num_layers())
        .into_par_iter()
        .map(|l| top_abs_eigs(&tensor.layer_f64(l), k).map(|f| f.vectors().clone()))
        .collect()
}

/// `G(a, b) = ||U_a^T U_b||_F^2`, computed in parallel over pairs.
pub fn projection_gram(bases: &[DMatrix<f64>]) -> DMatrix<f64> {
    let l = bases.len();
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|i| (i..l).map(move |j| (i, j))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| (bases[i].transpose() * &bases[j]).norm_squared())
        .collect();
    let mut g = DMatrix::zeros(l, l);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        g[(i, j)] = v;
        g[(j, i)] = v;
    }
    g
}

/// Cluster the layers into `groups` groups with the baseline method.
pub fn pw_between_cluster(
    tensor: &AdjacencyTensor,
    communities: usize,
    groups: usize,
    restarts: usize,
    seed: u64,
) -> Result<ClusteringAssignment> {
    if groups == 0 || groups > tensor.num_layers() {
        return Err(Error::Dimension(format!(
            "cannot split {} layers into {groups} groups",
            tensor.num_layers()
        )));
    }
    let bases = layer_bases(tensor, communities).stage("baseline eigenvectors")?;
    let gram = projection_gram(&bases);
    let right = largest_eigs(&gram, groups).stage("baseline gram")?;
    kmeans(right.vectors(), groups, restarts, seed).stage("baseline kmeans")
}
