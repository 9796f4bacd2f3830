//! Synthetic DIMPLE networks with known ground truth.
//!
//! Layer groups and node communities are i.i.d. multinomial draws; every
//! block matrix has its diagonal and lower triangle drawn uniformly on
//! `[a, b]`, is symmetrized, and has its off-diagonal entries multiplied by
//! the layer's assortativity `omega` before clamping to `[0, 1]`.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{stream_rng, ADJACENCY_STREAM, MODEL_STREAM};
use crate::types::{AdjacencyTensor, ClusteringAssignment, GroundTruthModel};

/// Resampling attempts per label vector before giving up on occupancy.
pub const MAX_OCCUPANCY_ATTEMPTS: usize = 1000;

/// Assortativity multiplier, shared by all layers or given per layer.
#[derive(Clone, Debug, PartialEq)]
pub enum Omega {
    Single(f64),
    PerLayer(Vec<f64>),
}

impl Omega {
    /// Split `layers` into consecutive, near-equal blocks, one per value.
    /// With three values and 60 layers, layers 0..20 get the first value.
    pub fn mixture(values: &[f64], layers: usize) -> Omega {
        let k = values.len().max(1);
        Omega::PerLayer((0..layers).map(|l| values[l * k / layers.max(1)]).collect())
    }

    pub fn for_layer(&self, l: usize) -> f64 {
        match self {
            Omega::Single(w) => *w,
            Omega::PerLayer(ws) => ws[l],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub nodes: usize,
    pub layers: usize,
    pub communities: usize,
    pub groups: usize,
    pub a: f64,
    pub b: f64,
    pub omega: Omega,
    /// Community probabilities; uniform when `None`.
    pub pi: Option<Vec<f64>>,
    /// Layer-group probabilities; uniform when `None`.
    pub varpi: Option<Vec<f64>>,
    pub seed: u64,
}

impl GenConfig {
    /// Uniform `pi` and `varpi`, single `omega`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nodes: usize,
        layers: usize,
        communities: usize,
        groups: usize,
        a: f64,
        b: f64,
        omega: f64,
        seed: u64,
    ) -> Self {
        Self {
            nodes,
            layers,
            communities,
            groups,
            a,
            b,
            omega: Omega::Single(omega),
            pi: None,
            varpi: None,
            seed,
        }
    }

    pub fn community_probs(&self) -> Vec<f64> {
        self.pi
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.communities as f64; self.communities])
    }

    pub fn group_probs(&self) -> Vec<f64> {
        self.varpi
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.groups as f64; self.groups])
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 || self.layers == 0 || self.communities == 0 || self.groups == 0 {
            return Err(Error::Validation(
                "n, L, K and M must all be positive".into(),
            ));
        }
        if !(0.0 <= self.a && self.a <= self.b && self.b <= 1.0) {
            return Err(Error::Validation(format!(
                "need 0 <= a <= b <= 1, got a={}, b={}",
                self.a, self.b
            )));
        }
        match &self.omega {
            Omega::Single(w) => check_omega(*w)?,
            Omega::PerLayer(ws) => {
                if ws.len() != self.layers {
                    return Err(Error::Dimension(format!(
                        "{} omega values for {} layers",
                        ws.len(),
                        self.layers
                    )));
                }
                ws.iter().try_for_each(|&w| check_omega(w))?;
            }
        }
        check_probs("pi", &self.community_probs(), self.communities)?;
        check_probs("varpi", &self.group_probs(), self.groups)?;
        Ok(())
    }
}

fn check_omega(w: f64) -> Result<()> {
    if w.is_finite() && w > 0.0 {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "omega must be positive, got {w}"
        )))
    }
}

fn check_probs(name: &str, p: &[f64], len: usize) -> Result<()> {
    if p.len() != len {
        return Err(Error::Dimension(format!(
            "{name} has {} entries, expected {len}",
            p.len()
        )));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Validation(format!("{name} has a negative entry")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

/// Draw `len` i.i.d. categorical labels, redrawing the whole vector until
/// every category occurs.
fn occupied_labels(
    rng: &mut impl Rng,
    len: usize,
    probs: &[f64],
    what: &str,
) -> Result<ClusteringAssignment> {
    let groups = probs.len();
    if len < groups || probs.iter().any(|&p| p == 0.0) {
        return Err(Error::Infeasible(format!(
            "cannot occupy all {groups} {what} with {len} items and probabilities {probs:?}"
        )));
    }
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::Validation(format!("{what} probabilities: {e}")))?;
    for _ in 0..MAX_OCCUPANCY_ATTEMPTS {
        let labels: Vec<usize> = (0..len).map(|_| dist.sample(rng)).collect();
        let a = ClusteringAssignment::from_zero_based(labels, groups)?;
        if a.occupied_groups() == groups {
            return Ok(a);
        }
    }
    Err(Error::Infeasible(format!(
        "no draw occupied all {groups} {what} in {MAX_OCCUPANCY_ATTEMPTS} attempts"
    )))
}

/// Sample layer groups, per-group communities and block matrices from the
/// model stream of `cfg.seed`.
pub fn sample_model(cfg: &GenConfig) -> Result<GroundTruthModel> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, MODEL_STREAM);
    let layer_labels = occupied_labels(&mut rng, cfg.layers, &cfg.group_probs(), "layer groups")?;
    let pi = cfg.community_probs();
    let node_labels = (0..cfg.groups)
        .map(|_| occupied_labels(&mut rng, cfg.nodes, &pi, "communities"))
        .collect::<Result<Vec<_>>>()?;

    let k = cfg.communities;
    let mut blocks = Vec::with_capacity(cfg.layers);
    for l in 0..cfg.layers {
        let omega = cfg.omega.for_layer(l);
        let mut b = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let mut v = cfg.a + (cfg.b - cfg.a) * rng.random::<f64>();
                if i != j {
                    v *= omega;
                }
                let v = v.clamp(0.0, 1.0);
                b[(i, j)] = v;
                b[(j, i)] = v;
            }
        }
        blocks.push(b);
    }
    GroundTruthModel::new(layer_labels, node_labels, blocks)
}

/// `P = Z B Z^T` for layer `l`, diagonal included.
pub fn probability_layer(model: &GroundTruthModel, l: usize) -> DMatrix<f64> {
    let z = model.communities_of_layer(l).as_zero_based();
    let b = &model.block_matrices()[l];
    let n = z.len();
    DMatrix::from_fn(n, n, |i, j| b[(z[i], z[j])])
}

pub fn probability_tensor(model: &GroundTruthModel) -> Vec<DMatrix<f64>> {
    (0..model.num_layers())
        .map(|l| probability_layer(model, l))
        .collect()
}

/// Bernoulli draws for `i > j` from the adjacency stream of `seed`, mirrored
/// to the upper triangle, zero diagonal.
pub fn sample_adjacency(model: &GroundTruthModel, seed: u64) -> Result<AdjacencyTensor> {
    let mut rng = stream_rng(seed, ADJACENCY_STREAM);
    let n = model.n();
    let mut layers = Vec::with_capacity(model.num_layers());
    for l in 0..model.num_layers() {
        let z = model.communities_of_layer(l).as_zero_based();
        let b = &model.block_matrices()[l];
        let mut a = DMatrix::<u8>::zeros(n, n);
        for i in 1..n {
            for j in 0..i {
                if rng.random::<f64>() < b[(z[i], z[j])] {
                    a[(i, j)] = 1;
                    a[(j, i)] = 1;
                }
            }
        }
        layers.push(a);
    }
    AdjacencyTensor::new(layers)
}

/// Model and adjacency tensor from the two streams of `cfg.seed`.
pub fn sample(cfg: &GenConfig) -> Result<(GroundTruthModel, AdjacencyTensor)> {
    let model = sample_model(cfg)?;
    let tensor = sample_adjacency(&model, cfg.seed)?;
    Ok((model, tensor))
}
