//! Independent oracles shared by the integration tests. Each one takes the
//! long way round: materialized vectors, dense matrices, exhaustive
//! enumeration.

#![allow(dead_code)]

use dimple::embed::embed_tensor;
use dimple::{AdjacencyTensor, ClusteringAssignment};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every permutation of `0..k`.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

pub fn random_assignment(r: &mut impl Rng, len: usize, groups: usize) -> ClusteringAssignment {
    let labels = (0..len).map(|_| r.random_range(0..groups)).collect();
    ClusteringAssignment::from_zero_based(labels, groups).unwrap()
}

/// Fewest mismatches over every relabeling of `est`, by enumeration.
pub fn brute_mismatches(
    truth: &ClusteringAssignment,
    est: &ClusteringAssignment,
    groups: usize,
) -> usize {
    let mut confusion = vec![vec![0usize; groups]; groups];
    for (&t, &e) in truth.as_zero_based().iter().zip(est.as_zero_based()) {
        confusion[t][e] += 1;
    }
    permutations(groups)
        .iter()
        .map(|p| truth.len() - (0..groups).map(|g| confusion[g][p[g]]).sum::<usize>())
        .min()
        .unwrap()
}

/// `min_P ||Z_hat - Z P||_F^2 / (2N)` with membership matrices, the textbook
/// form of the error. Exponential in `groups`; keep it small.
pub fn frobenius_error(
    truth: &ClusteringAssignment,
    est: &ClusteringAssignment,
    groups: usize,
) -> f64 {
    let z = membership(truth, groups);
    let zh = membership(est, groups);
    permutations(groups)
        .iter()
        .map(|p| {
            let perm = DMatrix::from_fn(groups, groups, |i, j| if p[i] == j { 1.0 } else { 0.0 });
            (&zh - &z * perm).norm_squared()
        })
        .fold(f64::INFINITY, f64::min)
        / (2.0 * truth.len() as f64)
}

fn membership(a: &ClusteringAssignment, groups: usize) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), groups, |i, g| {
        if a.as_zero_based()[i] == g {
            1.0
        } else {
            0.0
        }
    })
}

/// Between-layer error by enumeration over all `M!` permutations.
pub fn brute_between(
    truth: &ClusteringAssignment,
    est: &ClusteringAssignment,
    groups: usize,
) -> f64 {
    brute_mismatches(truth, est, groups) as f64 / truth.len() as f64
}

/// Within-layer error by enumeration: every pairing of groups and, inside
/// every pair, every community permutation.
pub fn brute_within(truth: &[ClusteringAssignment], est: &[ClusteringAssignment], k: usize) -> f64 {
    let m = truth.len();
    let n = truth[0].len();
    let inner: Vec<Vec<usize>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| brute_mismatches(&truth[a], &est[b], k))
                .collect()
        })
        .collect();
    permutations(m)
        .iter()
        .map(|s| (0..m).map(|a| inner[a][s[a]]).sum::<usize>())
        .min()
        .unwrap() as f64
        / (m * n) as f64
}

/// Random symmetric binary layer with zero diagonal.
pub fn random_layer(r: &mut impl Rng, n: usize, p: f64) -> DMatrix<u8> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if r.random_bool(p) {
                a[(i, j)] = 1;
                a[(j, i)] = 1;
            }
        }
    }
    a
}

pub fn random_tensor(r: &mut impl Rng, n: usize, l: usize) -> AdjacencyTensor {
    let layers = (0..l)
        .map(|_| {
            let p = r.random_range(0.2..0.7);
            random_layer(r, n, p)
        })
        .collect();
    AdjacencyTensor::new(layers).unwrap()
}

/// Eigenpairs sorted by decreasing absolute value, straight from nalgebra.
pub fn sorted_eigs(s: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let e = s.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..s.nrows()).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[b].abs().total_cmp(&e.eigenvalues[a].abs()));
    let values = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(s.nrows(), s.nrows(), |i, j| e.eigenvectors[(i, idx[j])]);
    (values, vectors)
}

/// `(I - 11^T/n) A (I - 11^T/n)` by explicit products.
pub fn dense_center(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let p = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    &p * a * &p
}

/// Rank-`r` truncation of a symmetric matrix.
pub fn dense_truncation(s: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let (values, vectors) = sorted_eigs(s);
    let mut out = DMatrix::zeros(s.nrows(), s.nrows());
    for k in 0..r {
        let u = vectors.column(k);
        out += values[k] * &u * u.transpose();
    }
    out
}

/// The `n^2 x L` matrix whose columns are the vectorized rank-`(K-1)`
/// approximations of the centered layers.
pub fn dense_q(layers: &[DMatrix<f64>], k: usize) -> DMatrix<f64> {
    let n = layers[0].nrows();
    let mut q = DMatrix::zeros(n * n, layers.len());
    for (l, a) in layers.iter().enumerate() {
        let p = dense_truncation(&dense_center(a), k - 1);
        q.set_column(l, &DVector::from_column_slice(p.as_slice()));
    }
    q
}

/// Columns of `q` scaled to unit norm.
pub fn dense_y(q: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = q.clone();
    for mut c in y.column_iter_mut() {
        let norm = c.norm();
        c /= norm;
    }
    y
}

/// `||y_t - Y w||^2 + 2 lambda ||w||_1` with `w_t = 0`, solved by proximal
/// gradient descent on the materialized design matrix.
pub fn dense_lasso(y: &DMatrix<f64>, target: usize, lambda: f64) -> Vec<f64> {
    let l = y.ncols();
    let yt = y.column(target).into_owned();
    let gram = y.transpose() * y;
    let step = 1.0 / (2.0 * gram.symmetric_eigen().eigenvalues.amax());
    let mut w = DVector::zeros(l);
    for _ in 0..2_000_000 {
        let grad = 2.0 * y.transpose() * (y * &w - &yt);
        let mut next = &w - step * grad;
        for j in 0..l {
            let v = next[j];
            next[j] = v.signum() * (v.abs() - 2.0 * lambda * step).max(0.0);
        }
        next[target] = 0.0;
        let moved = (&next - &w).amax();
        w = next;
        if moved < 1e-15 {
            break;
        }
    }
    w.iter().copied().collect()
}

/// Baseline clustering with the `n^2 x L` projection matrix materialized and
/// its right singular vectors taken from a dense SVD.
pub fn dense_baseline(
    tensor: &AdjacencyTensor,
    k: usize,
    groups: usize,
    restarts: usize,
    seed: u64,
) -> ClusteringAssignment {
    let n = tensor.n();
    let l = tensor.num_layers();
    let mut theta = DMatrix::zeros(n * n, l);
    for j in 0..l {
        let (_, vectors) = sorted_eigs(&tensor.layer_f64(j));
        let u = vectors.columns(0, k);
        let proj = &u * u.transpose();
        theta.set_column(j, &DVector::from_column_slice(proj.as_slice()));
    }
    let svd = theta.svd(false, true);
    let vt = svd.v_t.unwrap();
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let rows = DMatrix::from_fn(l, groups, |i, j| vt[(idx[j], i)]);
    dimple::linalg::kmeans(&rows, groups, restarts, seed).unwrap()
}

/// True when the two label vectors induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Multiply column `j` by `signs[j]`: another valid eigenvector basis when
/// the signs are +-1.
pub fn flip_columns(v: &DMatrix<f64>, signs: &[f64]) -> DMatrix<f64> {
    let mut out = v.clone();
    for (j, &s) in signs.iter().enumerate() {
        out.column_mut(j).scale_mut(s);
    }
    out
}

/// A DIMPLE model reduced to a multilayer mixture SBM: every layer of a
/// group reuses the block matrix of the group's first layer.
pub fn sample_mmlsbm(
    cfg: &dimple::generator::GenConfig,
) -> (dimple::GroundTruthModel, AdjacencyTensor) {
    let base = dimple::generator::sample_model(cfg).unwrap();
    let c = base.layer_labels().as_zero_based().to_vec();
    let blocks: Vec<DMatrix<f64>> = c
        .iter()
        .map(|&g| base.block_matrices()[c.iter().position(|&h| h == g).unwrap()].clone())
        .collect();
    let model = dimple::GroundTruthModel::new(
        base.layer_labels().clone(),
        base.node_labels().to_vec(),
        blocks,
    )
    .unwrap();
    let tensor = dimple::generator::sample_adjacency(&model, cfg.seed).unwrap();
    (model, tensor)
}

/// The rank-`r` truncation is unique only when `|s_r| > |s_{r+1}|`.
pub fn has_gap(a: &DMatrix<f64>, r: usize) -> bool {
    let (values, _) = sorted_eigs(&dense_center(a));
    values[r - 1].abs() - values[r].abs() > 1e-6 * values[0].abs().max(1.0)
}

/// Random layers whose centered truncations are unique and nonzero.
pub fn small_instance(r: &mut impl Rng) -> (usize, AdjacencyTensor) {
    let k = r.random_range(2..=4);
    let n = r.random_range((k + 2).max(5)..=12);
    let l = r.random_range(2..=8);
    loop {
        let t = random_tensor(r, n, l);
        if (0..l).all(|j| has_gap(&t.layer_f64(j), k - 1))
            && embed_tensor(&t, k)
                .unwrap()
                .iter()
                .all(|e| !e.is_degenerate())
        {
            return (k, t);
        }
    }
}
