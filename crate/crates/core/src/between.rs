//! Between-layer clustering: LASSO weight matrix, spectral clustering of the
//! symmetrized weights, connected components of the weight graph, and the
//! merge of surplus components into `M` groups.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::embed::{embed_tensor, unit_gram};
use crate::error::{Error, Result, StageExt};
use crate::lasso::{default_lambda, solve_column, LassoOptions};
use crate::linalg::{kmeans, smallest_eigs, top_abs_eigs, DEFAULT_RESTARTS};
use crate::rng::derive_seed;
use crate::types::{AdjacencyTensor, ClusteringAssignment, GramMatrix};

/// Weights at or below this count as absent when finding components.
pub const EDGE_EPSILON: f64 = 1e-10;

/// LASSO weights, column `l` representing layer `l`, and the affinity
/// `|W| + |W^T|`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix {
    weights: DMatrix<f64>,
    affinity: DMatrix<f64>,
}

impl WeightMatrix {
    pub fn from_weights(weights: DMatrix<f64>) -> Result<Self> {
        let l = weights.nrows();
        if weights.ncols() != l {
            return Err(Error::Dimension("weight matrix must be square".into()));
        }
        if (0..l).any(|i| weights[(i, i)] != 0.0) {
            return Err(Error::Validation(
                "weight matrix diagonal must be zero".into(),
            ));
        }
        let abs = weights.abs();
        let affinity = &abs + abs.transpose();
        Ok(Self { weights, affinity })
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn affinity(&self) -> &DMatrix<f64> {
        &self.affinity
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&v| v == 0.0)
    }
}

/// Solve every column's LASSO (in parallel) and assemble the weight matrix.
pub fn weight_matrix(gram: &GramMatrix, lambda: f64, opts: &LassoOptions) -> Result<WeightMatrix> {
    let l = gram.dim();
    let columns = (0..l)
        .into_par_iter()
        .map(|t| solve_column(gram, t, lambda, opts).map(|s| s.weights))
        .collect::<Result<Vec<_>>>()?;
    let mut w = DMatrix::zeros(l, l);
    for (t, col) in columns.iter().enumerate() {
        for (k, &v) in col.iter().enumerate() {
            w[(k, t)] = v;
        }
    }
    WeightMatrix::from_weights(w)
}

/// `diag(W 1) - W`.
pub fn laplacian(affinity: &DMatrix<f64>) -> DMatrix<f64> {
    let l = affinity.nrows();
    let mut lap = -affinity.clone();
    for i in 0..l {
        lap[(i, i)] += affinity.row(i).sum();
    }
    lap
}

fn check_affinity(affinity: &DMatrix<f64>) -> Result<()> {
    crate::linalg::check_symmetric(affinity, "affinity")?;
    if affinity.iter().any(|&v| v < 0.0) {
        return Err(Error::Validation("affinity has negative entries".into()));
    }
    Ok(())
}

/// k-means on the rows of the eigenvectors of the `groups` smallest
/// eigenvalues of the unnormalized Laplacian.
pub fn spectral_cluster_affinity(
    affinity: &DMatrix<f64>,
    groups: usize,
    restarts: usize,
    seed: u64,
) -> Result<ClusteringAssignment> {
    check_affinity(affinity)?;
    let l = affinity.nrows();
    if groups == 0 || groups > l {
        return Err(Error::Dimension(format!(
            "cannot split {l} layers into {groups} groups"
        )));
    }
    let embedding = smallest_eigs(&laplacian(affinity), groups)?;
    kmeans(embedding.vectors(), groups, restarts, seed)
}

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Components of the graph with an edge wherever the affinity exceeds
/// `epsilon`. Component labels follow the first layer of each component.
pub fn connected_components(
    affinity: &DMatrix<f64>,
    epsilon: f64,
) -> (usize, ClusteringAssignment) {
    let l = affinity.nrows();
    let mut dsu = DisjointSet::new(l);
    for i in 0..l {
        for j in (i + 1)..l {
            if affinity[(i, j)] > epsilon || affinity[(j, i)] > epsilon {
                dsu.union(i, j);
            }
        }
    }
    let mut label_of_root = vec![usize::MAX; l];
    let mut labels = Vec::with_capacity(l);
    let mut count = 0;
    for i in 0..l {
        let r = dsu.find(i);
        if label_of_root[r] == usize::MAX {
            label_of_root[r] = count;
            count += 1;
        }
        labels.push(label_of_root[r]);
    }
    let phi = if l == 0 {
        ClusteringAssignment::single_group(0)
    } else {
        ClusteringAssignment::from_zero_based(labels, count).expect("labels < count")
    };
    (count, phi)
}

/// Component-level similarity
/// `D^{-1/2} Phi^T |G| Phi D^{-1/2}`, where `Phi` is the membership matrix
/// of `phi` and `D = Phi^T Phi`.
pub fn component_similarity(gram: &GramMatrix, phi: &ClusteringAssignment) -> Result<DMatrix<f64>> {
    if phi.len() != gram.dim() {
        return Err(Error::Dimension(format!(
            "{} component labels for {} layers",
            phi.len(),
            gram.dim()
        )));
    }
    phi.require_occupied("components")?;
    let sizes = phi.group_sizes();
    let labels = phi.as_zero_based();
    let mt = phi.num_groups();
    let mut sums = DMatrix::<f64>::zeros(mt, mt);
    for i in 0..gram.dim() {
        for j in 0..gram.dim() {
            sums[(labels[i], labels[j])] += gram.get(i, j).abs();
        }
    }
    Ok(DMatrix::from_fn(mt, mt, |a, b| {
        sums[(a, b)] / ((sizes[a] * sizes[b]) as f64).sqrt()
    }))
}

/// Threshold picked from the component similarity matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdChoice {
    pub value: f64,
    /// No gap existed: every off-diagonal entry was equal.
    pub degenerate: bool,
}

/// Midpoint of the largest gap between consecutive sorted off-diagonal
/// entries (upper triangle). With no gap the threshold sits just above the
/// common value, which makes the thresholded matrix the identity.
pub fn default_threshold(upsilon: &DMatrix<f64>) -> Result<ThresholdChoice> {
    let mt = upsilon.nrows();
    if mt < 2 || upsilon.ncols() != mt {
        return Err(Error::Dimension(format!(
            "threshold needs at least two components, got {mt}"
        )));
    }
    let mut entries: Vec<f64> = (0..mt)
        .flat_map(|i| ((i + 1)..mt).map(move |j| (i, j)))
        .map(|(i, j)| upsilon[(i, j)])
        .collect();
    entries.sort_by(f64::total_cmp);
    let mut best_gap = 0.0;
    let mut value = None;
    for w in entries.windows(2) {
        let gap = w[1] - w[0];
        if gap > best_gap {
            best_gap = gap;
            value = Some(0.5 * (w[0] + w[1]));
        }
    }
    Ok(match value {
        Some(value) => ThresholdChoice {
            value,
            degenerate: false,
        },
        None => ThresholdChoice {
            value: entries[0] + 1e-9,
            degenerate: true,
        },
    })
}

/// Everything the merge step computed.
#[derive(Clone, Debug, PartialEq)]
pub struct MergeReport {
    pub m_tilde: usize,
    /// Layers to components.
    pub phi: ClusteringAssignment,
    /// Component similarity, `m_tilde x m_tilde`.
    pub upsilon: DMatrix<f64>,
    /// Absent for the normalized merge.
    pub threshold: Option<f64>,
    /// `1[upsilon > threshold]`, symmetrized by logical OR. Absent for the
    /// normalized merge.
    pub adjacency: Option<DMatrix<f64>>,
    /// Components to final groups.
    pub theta: ClusteringAssignment,
    /// Set when the threshold leaves no off-diagonal links (the merge is
    /// then arbitrary), no gap existed to place it in, or the normalized
    /// spectrum has no gap after the `groups`-th eigenvalue.
    pub low_confidence: bool,
}

/// How surplus components are merged when no threshold is given.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MergeRule {
    /// Normalized spectral clustering of the mean absolute Gram entry
    /// between components. Needs no threshold.
    #[default]
    Normalized,
    /// Threshold at [`default_threshold`] and cluster the binary graph.
    LargestGap,
}

impl std::str::FromStr for MergeRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "normalized" => Ok(Self::Normalized),
            "gap" | "largest_gap" => Ok(Self::LargestGap),
            other => Err(format!("unknown merge rule {other:?}")),
        }
    }
}

fn compose(
    phi: &ClusteringAssignment,
    theta: &ClusteringAssignment,
    groups: usize,
) -> Result<ClusteringAssignment> {
    let t = theta.as_zero_based();
    let labels: Vec<usize> = phi.as_zero_based().iter().map(|&c| t[c]).collect();
    ClusteringAssignment::from_zero_based(labels, groups)
}

/// Merge components by normalized spectral clustering. Layers `i, j` get
/// affinity equal to the mean `|G|` over distinct layer pairs drawn from
/// their two components (zero for a singleton with itself); the top
/// `groups` eigenvectors of `D^{-1/2} B D^{-1/2}` are row-normalized and
/// clustered. Weakly linked components (often a single noisy layer) follow
/// their strongest links instead of needing to clear a threshold.
pub fn merge_components_normalized(
    gram: &GramMatrix,
    phi: &ClusteringAssignment,
    groups: usize,
    restarts: usize,
    seed: u64,
) -> Result<(ClusteringAssignment, MergeReport)> {
    let m_tilde = phi.num_groups();
    if groups == 0 || m_tilde < groups {
        return Err(Error::Dimension(format!(
            "cannot merge {m_tilde} components into {groups} groups"
        )));
    }
    let upsilon = component_similarity(gram, phi)?;
    let sizes = phi.group_sizes();
    let labels = phi.as_zero_based();
    let l = labels.len();
    // mean |G| over distinct layer pairs; leaving out self-pairs keeps a
    // singleton's unit diagonal from swamping its weak links
    let mut self_sum = vec![0.0; m_tilde];
    for (i, &c) in labels.iter().enumerate() {
        self_sum[c] += gram.get(i, i).abs();
    }
    let mean = |a: usize, b: usize| {
        let total =
            0.5 * (upsilon[(a, b)] + upsilon[(b, a)]) * ((sizes[a] * sizes[b]) as f64).sqrt();
        if a != b {
            total / (sizes[a] * sizes[b]) as f64
        } else if sizes[a] > 1 {
            (total - self_sum[a]) / (sizes[a] * (sizes[a] - 1)) as f64
        } else {
            0.0
        }
    };
    // layers of one component get identical rows
    let b = DMatrix::from_fn(l, l, |i, j| mean(labels[i], labels[j]));
    let degree: Vec<f64> = (0..l).map(|i| b.row(i).sum()).collect();
    let normalized = DMatrix::from_fn(l, l, |i, j| {
        let d = degree[i] * degree[j];
        if d > 0.0 {
            b[(i, j)] / d.sqrt()
        } else {
            0.0
        }
    });

    let probe = (groups + 1).min(l);
    let eig = top_abs_eigs(&normalized, probe)?;
    let values = eig.values();
    let low_confidence = probe > groups
        && (values[groups - 1].abs() - values[groups].abs()).abs()
            <= 1e-9 * values[0].abs().max(1.0);
    let mut rows = eig.vectors().columns(0, groups).into_owned();
    for mut r in rows.row_iter_mut() {
        let norm = r.norm();
        if norm > 0.0 {
            r /= norm;
        }
    }
    let by_layer = kmeans(&rows, groups, restarts, seed)?;
    let mut theta = vec![0; m_tilde];
    for (i, &c) in labels.iter().enumerate() {
        theta[c] = by_layer.as_zero_based()[i];
    }
    let theta = ClusteringAssignment::from_zero_based(theta, groups)?;
    let assignment = compose(phi, &theta, groups)?;
    Ok((
        assignment,
        MergeReport {
            m_tilde,
            phi: phi.clone(),
            upsilon,
            threshold: None,
            adjacency: None,
            theta,
            low_confidence,
        },
    ))
}

/// Merge `m_tilde >= groups` components into `groups` groups. The final
/// label of layer `l` is `theta(phi(l))`.
pub fn merge_components(
    gram: &GramMatrix,
    phi: &ClusteringAssignment,
    groups: usize,
    threshold: Option<f64>,
    restarts: usize,
    seed: u64,
) -> Result<(ClusteringAssignment, MergeReport)> {
    let m_tilde = phi.num_groups();
    if groups == 0 || m_tilde < groups {
        return Err(Error::Dimension(format!(
            "cannot merge {m_tilde} components into {groups} groups"
        )));
    }
    let upsilon = component_similarity(gram, phi)?;
    let (t, mut low_confidence) = match threshold {
        Some(t) => (t, false),
        None if m_tilde >= 2 => {
            let c = default_threshold(&upsilon)?;
            (c.value, c.degenerate)
        }
        None => (0.0, true),
    };
    let mut adjacency = DMatrix::zeros(m_tilde, m_tilde);
    for i in 0..m_tilde {
        for j in 0..m_tilde {
            if upsilon[(i, j)] > t || upsilon[(j, i)] > t {
                adjacency[(i, j)] = 1.0;
            }
        }
    }
    let off_diagonal_links = (0..m_tilde)
        .flat_map(|i| (0..m_tilde).map(move |j| (i, j)))
        .any(|(i, j)| i != j && adjacency[(i, j)] != 0.0);
    if !off_diagonal_links && m_tilde > groups {
        low_confidence = true;
    }

    let basis = top_abs_eigs(&adjacency, groups)?;
    let theta = kmeans(basis.vectors(), groups, restarts, seed)?;
    let assignment = compose(phi, &theta, groups)?;
    Ok((
        assignment,
        MergeReport {
            m_tilde,
            phi: phi.clone(),
            upsilon,
            threshold: Some(t),
            adjacency: Some(adjacency),
            theta,
            low_confidence,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetweenOptions {
    /// Defaults to four times the mean absolute entry of the embeddings.
    pub lambda: Option<f64>,
    /// When set, merge by thresholding at this value; otherwise `merge`
    /// decides.
    pub threshold: Option<f64>,
    pub merge: MergeRule,
    pub kmeans_restarts: usize,
    pub lasso: LassoOptions,
    pub edge_epsilon: f64,
}

impl Default for BetweenOptions {
    fn default() -> Self {
        Self {
            lambda: None,
            threshold: None,
            merge: MergeRule::default(),
            kmeans_restarts: DEFAULT_RESTARTS,
            lasso: LassoOptions::default(),
            edge_epsilon: EDGE_EPSILON,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BetweenOutcome {
    /// Final layer groups.
    pub assignment: ClusteringAssignment,
    /// Spectral clustering of the affinity, before any merge.
    pub spectral: ClusteringAssignment,
    pub lambda: f64,
    pub weights: WeightMatrix,
    pub m_tilde: usize,
    pub components: ClusteringAssignment,
    /// Present when there were more components than groups.
    pub merge: Option<MergeReport>,
    /// The merge was low-confidence, or the weight graph had fewer
    /// components than groups.
    pub low_confidence: bool,
}

/// Full between-layer pipeline on an adjacency tensor.
pub fn between_layer_cluster(
    tensor: &AdjacencyTensor,
    communities: usize,
    groups: usize,
    opts: &BetweenOptions,
    seed: u64,
) -> Result<BetweenOutcome> {
    if groups == 0 || groups > tensor.num_layers() {
        return Err(Error::Dimension(format!(
            "cannot split {} layers into {groups} groups",
            tensor.num_layers()
        )));
    }
    let embeddings = embed_tensor(tensor, communities).stage("embed")?;
    let lambda = match opts.lambda {
        Some(l) => l,
        None => default_lambda(&embeddings),
    };
    let gram = unit_gram(&embeddings).stage("gram")?;
    cluster_gram(&gram, groups, lambda, opts, seed)
}

/// Between-layer clustering from a unit-diagonal Gram matrix and a fixed
/// penalty; `opts.lambda` is ignored.
pub fn cluster_gram(
    gram: &GramMatrix,
    groups: usize,
    lambda: f64,
    opts: &BetweenOptions,
    seed: u64,
) -> Result<BetweenOutcome> {
    if !(lambda > 0.0) {
        return Err(
            Error::Validation(format!("lambda must be positive, got {lambda}")).in_stage("lambda"),
        );
    }
    let weights = weight_matrix(gram, lambda, &opts.lasso).stage("weights")?;
    let spectral = spectral_cluster_affinity(
        weights.affinity(),
        groups,
        opts.kmeans_restarts,
        derive_seed(seed, 1),
    )
    .stage("spectral")?;
    let (m_tilde, components) = connected_components(weights.affinity(), opts.edge_epsilon);

    if m_tilde <= groups {
        return Ok(BetweenOutcome {
            assignment: spectral.clone(),
            spectral,
            lambda,
            weights,
            m_tilde,
            components,
            merge: None,
            low_confidence: m_tilde < groups,
        });
    }
    let merge_seed = derive_seed(seed, 2);
    let (assignment, report) = match (opts.threshold, opts.merge) {
        (None, MergeRule::Normalized) => {
            merge_components_normalized(gram, &components, groups, opts.kmeans_restarts, merge_seed)
        }
        (t, _) => merge_components(
            gram,
            &components,
            groups,
            t,
            opts.kmeans_restarts,
            merge_seed,
        ),
    }
    .stage("merge")?;
    Ok(BetweenOutcome {
        assignment,
        spectral,
        lambda,
        weights,
        m_tilde,
        components,
        low_confidence: report.low_confidence,
        merge: Some(report),
    })
}
