//! Dense numerical kernels: symmetric eigendecomposition with eigenpair
//! selection, best rank-`r` projection, and seeded k-means.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::types::ClusteringAssignment;

/// Restarts used when the caller does not choose.
pub const DEFAULT_RESTARTS: usize = 10;
/// Cap on Lloyd iterations per restart.
pub const MAX_LLOYD_ITERATIONS: usize = 300;
/// Lloyd stops once no center moves farther than this.
pub const CENTER_TOLERANCE: f64 = 1e-9;

/// Orthonormal `n x r` eigenvector block with its signed eigenvalues,
/// ordered by descending absolute value.
#[derive(Clone, Debug, PartialEq)]
pub struct RankKFactors {
    vectors: DMatrix<f64>,
    values: Vec<f64>,
}

impl RankKFactors {
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rank(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    /// `U diag(s) U^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (k, &s) in self.values.iter().enumerate() {
            scaled.column_mut(k).scale_mut(s);
        }
        scaled * self.vectors.transpose()
    }
}

pub fn check_symmetric(s: &DMatrix<f64>, what: &str) -> Result<()> {
    if s.nrows() != s.ncols() {
        return Err(Error::Dimension(format!(
            "{what} is {}x{}, expected square",
            s.nrows(),
            s.ncols()
        )));
    }
    let tol = 1e-10 * s.amax().max(1.0);
    for j in 0..s.ncols() {
        for i in (j + 1)..s.nrows() {
            let d = s[(i, j)] - s[(j, i)];
            if d.is_nan() || d.abs() > tol {
                return Err(Error::Validation(format!(
                    "{what} is not symmetric at ({i},{j})"
                )));
            }
        }
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix, unsorted.
///
/// The QR iteration at machine precision occasionally returns NaN on
/// matrices with many exactly-zero rows (a Laplacian with isolated
/// vertices); slightly looser tolerances are tried before giving up.
fn eigen(s: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    for eps in [f64::EPSILON, 1e-14, 1e-12] {
        if let Some(e) = s.clone().try_symmetric_eigen(eps, 0) {
            if e.eigenvalues
                .iter()
                .chain(e.eigenvectors.iter())
                .all(|v| v.is_finite())
            {
                return Ok((e.eigenvalues.iter().copied().collect(), e.eigenvectors));
            }
        }
    }
    Err(Error::Numerical(format!(
        "symmetric eigendecomposition of a {}x{} matrix did not produce finite values",
        s.nrows(),
        s.ncols()
    )))
}

/// Flip the column so that its largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut DMatrix<f64>, col: usize) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.column(col).iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        v.column_mut(col).neg_mut();
    }
}

fn select(values: &[f64], vectors: &DMatrix<f64>, order: &[usize]) -> RankKFactors {
    let mut out = DMatrix::zeros(vectors.nrows(), order.len());
    for (k, &idx) in order.iter().enumerate() {
        out.set_column(k, &vectors.column(idx));
        fix_sign(&mut out, k);
    }
    RankKFactors {
        vectors: out,
        values: order.iter().map(|&i| values[i]).collect(),
    }
}

fn check_rank(n: usize, r: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::Dimension(format!(
            "requested {r} eigenpairs of a {n}x{n} matrix"
        )));
    }
    Ok(())
}

/// The `r` eigenpairs of largest absolute eigenvalue. Ties prefer the larger
/// algebraic value, then the lower index of the underlying solver.
pub fn top_abs_eigs(s: &DMatrix<f64>, r: usize) -> Result<RankKFactors> {
    check_symmetric(s, "matrix")?;
    check_rank(s.nrows(), r)?;
    let (values, vectors) = eigen(s)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .abs()
            .total_cmp(&values[a].abs())
            .then(values[b].total_cmp(&values[a]))
            .then(a.cmp(&b))
    });
    order.truncate(r);
    Ok(select(&values, &vectors, &order))
}

/// Eigenvectors for the `r` algebraically smallest eigenvalues, ascending.
pub fn smallest_eigs(s: &DMatrix<f64>, r: usize) -> Result<RankKFactors> {
    check_symmetric(s, "matrix")?;
    check_rank(s.nrows(), r)?;
    let (values, vectors) = eigen(s)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order.truncate(r);
    Ok(select(&values, &vectors, &order))
}

/// Eigenvectors for the `r` algebraically largest eigenvalues, descending.
pub fn largest_eigs(s: &DMatrix<f64>, r: usize) -> Result<RankKFactors> {
    check_symmetric(s, "matrix")?;
    check_rank(s.nrows(), r)?;
    let (values, vectors) = eigen(s)?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(r);
    Ok(select(&values, &vectors, &order))
}

/// Best rank-`r` approximation of a symmetric matrix in Frobenius norm.
pub fn rank_k_project(s: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    Ok(top_abs_eigs(s, r)?.reconstruct())
}

/// Result of [`kmeans_fit`].
#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub assignment: ClusteringAssignment,
    /// Within-cluster sum of squared distances.
    pub cost: f64,
    /// `G x d` centers.
    pub centers: DMatrix<f64>,
    /// Index of the winning restart.
    pub restart: usize,
}

/// Seeded k-means returning only the labels. See [`kmeans_fit`].
pub fn kmeans(
    points: &DMatrix<f64>,
    groups: usize,
    restarts: usize,
    seed: u64,
) -> Result<ClusteringAssignment> {
    Ok(kmeans_fit(points, groups, restarts, seed)?.assignment)
}

/// k-means++ seeding followed by Lloyd iterations, repeated `restarts`
/// times; the lowest-cost run wins, ties going to the lower restart index.
///
/// Restart `i` draws from stream `i` of the generator seeded with `seed`, so
/// the result does not depend on how restarts are scheduled across threads.
/// Assignment ties go to the lowest center index. A cluster that empties
/// during Lloyd keeps its previous center.
pub fn kmeans_fit(
    points: &DMatrix<f64>,
    groups: usize,
    restarts: usize,
    seed: u64,
) -> Result<KMeansFit> {
    let n = points.nrows();
    let d = points.ncols();
    if groups == 0 {
        return Err(Error::Validation(
            "k-means needs at least one cluster".into(),
        ));
    }
    if groups > n {
        return Err(Error::Dimension(format!(
            "cannot form {groups} clusters from {n} points"
        )));
    }
    if restarts == 0 {
        return Err(Error::Validation(
            "k-means needs at least one restart".into(),
        ));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::Validation(
            "k-means input has non-finite values".into(),
        ));
    }

    let mut rows = vec![0.0; n * d];
    for i in 0..n {
        for j in 0..d {
            rows[i * d + j] = points[(i, j)];
        }
    }
    let data = Points { rows, d };

    let runs: Vec<Run> = (0..restarts)
        .into_par_iter()
        .map(|r| lloyd(&data, groups, seed, r as u64))
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|acc, cur| if cur.1.cost < acc.1.cost { cur } else { acc })
        .expect("restarts >= 1");

    // relabel clusters in order of first appearance; empty ones go last
    let mut relabel = vec![usize::MAX; groups];
    let mut next = 0;
    for &g in &best.labels {
        if relabel[g] == usize::MAX {
            relabel[g] = next;
            next += 1;
        }
    }
    for slot in relabel.iter_mut().filter(|s| **s == usize::MAX) {
        *slot = next;
        next += 1;
    }
    let labels = best.labels.iter().map(|&g| relabel[g]).collect();
    let mut centers = DMatrix::zeros(groups, d);
    for (old, &new) in relabel.iter().enumerate() {
        for j in 0..d {
            centers[(new, j)] = best.centers[old * d + j];
        }
    }

    Ok(KMeansFit {
        assignment: ClusteringAssignment::from_zero_based(labels, groups)?,
        cost: best.cost,
        centers,
        restart,
    })
}

struct Points {
    rows: Vec<f64>,
    d: usize,
}

impl Points {
    fn len(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.rows.len() / self.d
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.d..(i + 1) * self.d]
    }
}

struct Run {
    labels: Vec<usize>,
    centers: Vec<f64>,
    cost: f64,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus(data: &Points, groups: usize, rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(groups);
    chosen.push(rng.random_range(0..n));
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| dist2(data.row(i), data.row(chosen[0])))
        .collect();
    while chosen.len() < groups {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = 0;
            for (i, &w) in nearest.iter().enumerate() {
                if w > 0.0 {
                    last_positive = i;
                    acc += w;
                    if acc > target {
                        pick = Some(i);
                        break;
                    }
                }
            }
            pick.unwrap_or(last_positive)
        } else {
            // every point sits on a center already
            (0..n).find(|i| !chosen.contains(i)).expect("groups <= n")
        };
        chosen.push(next);
        for (i, w) in nearest.iter_mut().enumerate() {
            *w = w.min(dist2(data.row(i), data.row(next)));
        }
    }
    chosen
}

fn assign(data: &Points, centers: &[f64], groups: usize, labels: &mut [usize]) -> f64 {
    let d = data.d;
    let mut cost = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let row = data.row(i);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for g in 0..groups {
            let dd = dist2(row, &centers[g * d..(g + 1) * d]);
            if dd < best_d {
                best_d = dd;
                best = g;
            }
        }
        *label = best;
        cost += best_d;
    }
    cost
}

fn lloyd(data: &Points, groups: usize, seed: u64, restart: u64) -> Run {
    let n = data.len();
    let d = data.d;
    let mut rng = stream_rng(seed, restart);
    let mut centers = Vec::with_capacity(groups * d);
    if d > 0 {
        for i in plus_plus(data, groups, &mut rng, n) {
            centers.extend_from_slice(data.row(i));
        }
    }
    let mut labels = vec![0; n];
    if d == 0 {
        // zero-dimensional points: everything coincides
        return Run {
            labels,
            centers,
            cost: 0.0,
        };
    }

    let mut cost = assign(data, &centers, groups, &mut labels);
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut sums = vec![0.0; groups * d];
        let mut counts = vec![0usize; groups];
        for (i, &g) in labels.iter().enumerate() {
            counts[g] += 1;
            for (s, x) in sums[g * d..(g + 1) * d].iter_mut().zip(data.row(i)) {
                *s += x;
            }
        }
        let mut moved = 0.0f64;
        for g in 0..groups {
            if counts[g] == 0 {
                continue;
            }
            let inv = 1.0 / counts[g] as f64;
            let mut shift = 0.0;
            for j in 0..d {
                let c = sums[g * d + j] * inv;
                shift += (c - centers[g * d + j]).powi(2);
                centers[g * d + j] = c;
            }
            moved = moved.max(shift.sqrt());
        }
        let next = assign(data, &centers, groups, &mut labels);
        debug_assert!(
            next <= cost + 1e-9 * (1.0 + cost),
            "k-means cost increased from {cost} to {next}"
        );
        cost = next;
        if moved < CENTER_TOLERANCE {
            break;
        }
    }
    Run {
        labels,
        centers,
        cost,
    }
}
