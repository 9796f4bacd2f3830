//! Within-layer clustering: bias-adjusted squared adjacency matrices are
//! averaged over each estimated layer group and the communities are read off
//! the leading eigenvectors of the average.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result, StageExt};
use crate::linalg::{kmeans, top_abs_eigs};
use crate::rng::derive_seed;
use crate::types::{AdjacencyTensor, ClusteringAssignment};

/// `A^2 - diag(A 1)`. The diagonal of `A^2` counts each node's degree, so the
/// result has an exactly zero diagonal.
pub fn debiased_square(layer: &DMatrix<u8>) -> DMatrix<f64> {
    let a = layer.map(f64::from);
    let mut g = &a * &a;
    for i in 0..g.nrows() {
        g[(i, i)] = 0.0;
    }
    g
}

/// `L_m^{-1/2}` times the sum of `G_l` over the layers in group `m`, for
/// every group. Any empty group is an error.
pub fn group_average(
    squares: &[DMatrix<f64>],
    c_hat: &ClusteringAssignment,
) -> Result<Vec<DMatrix<f64>>> {
    if squares.len() != c_hat.len() {
        return Err(Error::Dimension(format!(
            "{} layer matrices but {} layer labels",
            squares.len(),
            c_hat.len()
        )));
    }
    c_hat.require_occupied("layer groups")?;
    let n = squares.first().map_or(0, |g| g.nrows());
    Ok((0..c_hat.num_groups())
        .map(|m| {
            let members = c_hat.members(m);
            let mut h = DMatrix::zeros(n, n);
            for &l in &members {
                h += &squares[l];
            }
            h / (members.len() as f64).sqrt()
        })
        .collect())
}

/// Communities of one group; `degenerate` is set when the aggregated matrix
/// is zero and the partition is arbitrary.
#[derive(Clone, Debug, PartialEq)]
pub struct WithinFit {
    pub assignment: ClusteringAssignment,
    pub degenerate: bool,
}

/// k-means on the rows of the top-`k` eigenvectors (by absolute eigenvalue).
pub fn within_cluster(h: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<WithinFit> {
    if k == 0 || k > h.nrows() {
        return Err(Error::Dimension(format!(
            "cannot split {} nodes into {k} communities",
            h.nrows()
        )));
    }
    let basis = top_abs_eigs(h, k)?;
    let assignment = kmeans(basis.vectors(), k, restarts, seed)?;
    Ok(WithinFit {
        assignment,
        degenerate: h.iter().all(|&v| v == 0.0),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupCommunityResult {
    /// Node communities of every estimated layer group.
    pub assignments: Vec<ClusteringAssignment>,
    /// The aggregated matrix of every group.
    pub aggregated: Vec<DMatrix<f64>>,
    /// Groups whose aggregated matrix was zero.
    pub degenerate: Vec<bool>,
}

/// Run the whole within-layer step for the layer grouping `c_hat`.
pub fn within_pipeline(
    tensor: &AdjacencyTensor,
    c_hat: &ClusteringAssignment,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<GroupCommunityResult> {
    if c_hat.len() != tensor.num_layers() {
        return Err(Error::Dimension(format!(
            "{} layer labels for {} layers",
            c_hat.len(),
            tensor.num_layers()
        )));
    }
    c_hat.require_occupied("layer groups")?;
    let n = tensor.n();
    // one group at a time keeps at most one n x n sum per worker alive
    let per_group: Vec<(DMatrix<f64>, WithinFit)> = (0..c_hat.num_groups())
        .into_par_iter()
        .map(|m| {
            let members = c_hat.members(m);
            let mut h = DMatrix::zeros(n, n);
            for &l in &members {
                h += debiased_square(tensor.layer(l));
            }
            h /= (members.len() as f64).sqrt();
            let fit = within_cluster(&h, k, restarts, derive_seed(seed, m as u64))?;
            Ok((h, fit))
        })
        .collect::<Result<_>>()
        .stage("within")?;
    let mut out = GroupCommunityResult {
        assignments: Vec::with_capacity(per_group.len()),
        aggregated: Vec::with_capacity(per_group.len()),
        degenerate: Vec::with_capacity(per_group.len()),
    };
    for (h, fit) in per_group {
        out.assignments.push(fit.assignment);
        out.aggregated.push(h);
        out.degenerate.push(fit.degenerate);
    }
    Ok(out)
}
