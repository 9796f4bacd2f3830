//! Shared data types: the observed multiplex network, clustering assignments,
//! ground-truth model descriptions and Gram matrices.
//!
//! All types validate on construction and are immutable afterwards.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `L` symmetric binary `n x n` layers with zero diagonals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdjacencyTensor {
    n: usize,
    layers: Vec<DMatrix<u8>>,
}

impl AdjacencyTensor {
    pub fn new(layers: Vec<DMatrix<u8>>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Validation("adjacency tensor needs at least one layer".into()))?;
        let n = first.nrows();
        for (l, layer) in layers.iter().enumerate() {
            if layer.nrows() != n || layer.ncols() != n {
                return Err(Error::Dimension(format!(
                    "layer {l} is {}x{}, expected {n}x{n}",
                    layer.nrows(),
                    layer.ncols()
                )));
            }
            for i in 0..n {
                if layer[(i, i)] != 0 {
                    return Err(Error::Validation(format!(
                        "layer {l} has a self-loop at node {i}"
                    )));
                }
                for j in 0..i {
                    let v = layer[(i, j)];
                    if v > 1 {
                        return Err(Error::Validation(format!(
                            "layer {l} entry ({i},{j}) = {v} is not binary"
                        )));
                    }
                    if v != layer[(j, i)] {
                        return Err(Error::Validation(format!(
                            "layer {l} is not symmetric at ({i},{j})"
                        )));
                    }
                }
            }
        }
        Ok(Self { n, layers })
    }

    /// Build from real-valued layers whose entries must be exactly 0 or 1.
    pub fn from_f64_layers(layers: &[DMatrix<f64>]) -> Result<Self> {
        let mut out = Vec::with_capacity(layers.len());
        for (l, layer) in layers.iter().enumerate() {
            let mut m = DMatrix::<u8>::zeros(layer.nrows(), layer.ncols());
            for (dst, &src) in m.iter_mut().zip(layer.iter()) {
                *dst = if src == 0.0 {
                    0
                } else if src == 1.0 {
                    1
                } else {
                    return Err(Error::Validation(format!(
                        "layer {l} has non-binary entry {src}"
                    )));
                };
            }
            out.push(m);
        }
        Self::new(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, l: usize) -> &DMatrix<u8> {
        &self.layers[l]
    }

    pub fn layers(&self) -> &[DMatrix<u8>] {
        &self.layers
    }

    pub fn layer_f64(&self, l: usize) -> DMatrix<f64> {
        self.layers[l].map(f64::from)
    }

    pub fn degrees(&self, l: usize) -> Vec<usize> {
        let layer = &self.layers[l];
        (0..self.n)
            .map(|i| layer.column(i).iter().map(|&v| v as usize).sum())
            .collect()
    }

    pub fn edge_count(&self, l: usize) -> usize {
        self.degrees(l).iter().sum::<usize>() / 2
    }
}

/// A label vector over `N` items (layers or nodes) into `G` groups.
///
/// Labels are 1-based at the API surface (`label`, `labels`, `new`) and
/// 0-based internally (`as_zero_based`, `from_zero_based`). Empty groups are
/// representable; entry points that need every group occupied call
/// [`ClusteringAssignment::require_occupied`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClusteringAssignment {
    labels: Vec<usize>,
    groups: usize,
}

impl ClusteringAssignment {
    /// `labels` are 1-based, each in `1..=groups`.
    pub fn new(labels: Vec<usize>, groups: usize) -> Result<Self> {
        if groups == 0 {
            return Err(Error::Validation("group count must be at least 1".into()));
        }
        let mut zero = Vec::with_capacity(labels.len());
        for (i, &g) in labels.iter().enumerate() {
            if g == 0 || g > groups {
                return Err(Error::Validation(format!(
                    "label {g} of item {i} is outside 1..={groups}"
                )));
            }
            zero.push(g - 1);
        }
        Ok(Self {
            labels: zero,
            groups,
        })
    }

    pub fn from_zero_based(labels: Vec<usize>, groups: usize) -> Result<Self> {
        if groups == 0 {
            return Err(Error::Validation("group count must be at least 1".into()));
        }
        if let Some((i, &g)) = labels.iter().enumerate().find(|(_, &g)| g >= groups) {
            return Err(Error::Validation(format!(
                "zero-based label {g} of item {i} is outside 0..{groups}"
            )));
        }
        Ok(Self { labels, groups })
    }

    /// Every item in group 1.
    pub fn single_group(len: usize) -> Self {
        Self {
            labels: vec![0; len],
            groups: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_groups(&self) -> usize {
        self.groups
    }

    /// 1-based label of item `i`.
    pub fn label(&self, i: usize) -> usize {
        self.labels[i] + 1
    }

    /// 1-based labels.
    pub fn labels(&self) -> Vec<usize> {
        self.labels.iter().map(|g| g + 1).collect()
    }

    pub fn as_zero_based(&self) -> &[usize] {
        &self.labels
    }

    /// Binary `N x G` matrix with a single 1 per row, in column `labels[i]`.
    pub fn membership_matrix(&self) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.labels.len(), self.groups);
        for (i, &g) in self.labels.iter().enumerate() {
            z[(i, g)] = 1.0;
        }
        z
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.groups];
        for &g in &self.labels {
            sizes[g] += 1;
        }
        sizes
    }

    pub fn occupied_groups(&self) -> usize {
        self.group_sizes().iter().filter(|&&s| s > 0).count()
    }

    /// Indices of items in the zero-based group `g`.
    pub fn members(&self, g: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &x)| (x == g).then_some(i))
            .collect()
    }

    pub fn require_occupied(&self, what: &str) -> Result<()> {
        match self.group_sizes().iter().position(|&s| s == 0) {
            Some(g) => Err(Error::Validation(format!(
                "{what}: group {} of {} is empty",
                g + 1,
                self.groups
            ))),
            None => Ok(()),
        }
    }
}

/// Ground truth of a DIMPLE network: layer groups, per-group node
/// communities, and one block probability matrix per layer.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthModel {
    layer_labels: ClusteringAssignment,
    node_labels: Vec<ClusteringAssignment>,
    block_matrices: Vec<DMatrix<f64>>,
}

impl GroundTruthModel {
    pub fn new(
        layer_labels: ClusteringAssignment,
        node_labels: Vec<ClusteringAssignment>,
        block_matrices: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let m = layer_labels.num_groups();
        if node_labels.len() != m {
            return Err(Error::Dimension(format!(
                "{} node assignments for {m} layer groups",
                node_labels.len()
            )));
        }
        if block_matrices.len() != layer_labels.len() {
            return Err(Error::Dimension(format!(
                "{} block matrices for {} layers",
                block_matrices.len(),
                layer_labels.len()
            )));
        }
        let n = node_labels[0].len();
        let k = node_labels[0].num_groups();
        if node_labels
            .iter()
            .any(|z| z.len() != n || z.num_groups() != k)
        {
            return Err(Error::Dimension(
                "node assignments disagree on node or community count".into(),
            ));
        }
        for (l, b) in block_matrices.iter().enumerate() {
            if b.nrows() != k || b.ncols() != k {
                return Err(Error::Dimension(format!(
                    "block matrix {l} is {}x{}, expected {k}x{k}",
                    b.nrows(),
                    b.ncols()
                )));
            }
            for i in 0..k {
                for j in 0..k {
                    let v = b[(i, j)];
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::Validation(format!(
                            "block matrix {l} entry ({i},{j}) = {v} outside [0,1]"
                        )));
                    }
                    if v != b[(j, i)] {
                        return Err(Error::Validation(format!(
                            "block matrix {l} is not symmetric"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            layer_labels,
            node_labels,
            block_matrices,
        })
    }

    pub fn layer_labels(&self) -> &ClusteringAssignment {
        &self.layer_labels
    }

    pub fn node_labels(&self) -> &[ClusteringAssignment] {
        &self.node_labels
    }

    pub fn block_matrices(&self) -> &[DMatrix<f64>] {
        &self.block_matrices
    }

    pub fn n(&self) -> usize {
        self.node_labels[0].len()
    }

    pub fn num_layers(&self) -> usize {
        self.layer_labels.len()
    }

    pub fn num_groups(&self) -> usize {
        self.layer_labels.num_groups()
    }

    pub fn num_communities(&self) -> usize {
        self.node_labels[0].num_groups()
    }

    /// Node assignment governing layer `l`.
    pub fn communities_of_layer(&self, l: usize) -> &ClusteringAssignment {
        &self.node_labels[self.layer_labels.as_zero_based()[l]]
    }
}

/// Symmetric positive semidefinite `L x L` inner-product matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
}

impl GramMatrix {
    /// Asymmetry up to `1e-10` relative is accepted and removed by averaging.
    /// The minimum eigenvalue must be at least `-1e-8 * max(1, trace)`.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Dimension(format!(
                "Gram matrix is {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(
                "Gram matrix has non-finite entries".into(),
            ));
        }
        let scale = entries.amax().max(1.0);
        let l = entries.nrows();
        for i in 0..l {
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::Validation(format!(
                        "Gram matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        if l > 0 {
            let min_eig = entries.clone().symmetric_eigenvalues().min();
            let tol = 1e-8 * entries.trace().abs().max(1.0);
            if min_eig < -tol {
                return Err(Error::Validation(format!(
                    "Gram matrix is not positive semidefinite (min eigenvalue {min_eig:.3e})"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}
