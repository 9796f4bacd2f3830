//! Monte Carlo grid runner.

use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, GridPoint, Method};
use crate::baseline::pw_between_cluster;
use crate::between::{between_layer_cluster, BetweenOptions, MergeRule};
use crate::error::{Error, Result};
use crate::generator::sample;
use crate::linalg::DEFAULT_RESTARTS;
use crate::metrics::error_report;
use crate::rng::derive_seed;
use crate::types::{AdjacencyTensor, ClusteringAssignment, GroundTruthModel};
use crate::within::within_pipeline;

const BETWEEN_SEED_TAG: u64 = 0x6265_7477;
const WITHIN_SEED_TAG: u64 = 0x7769_7468;

/// One (grid point, replicate, method) outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub n: usize,
    pub layers: usize,
    pub communities: usize,
    pub groups: usize,
    pub omega_scenario: String,
    pub a: f64,
    pub b: f64,
    pub replicate: usize,
    pub seed: u64,
    pub method: Method,
    /// `None` when the row failed.
    pub err_between: Option<f64>,
    pub r_wl: Option<f64>,
    /// Components of the weight graph; SSC only.
    pub m_tilde: Option<usize>,
    pub low_confidence: bool,
    pub wall_time_ms: f64,
    pub error: Option<String>,
}

/// Estimates from one method on one dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodOutput {
    pub layer_groups: ClusteringAssignment,
    pub communities: Vec<ClusteringAssignment>,
    pub m_tilde: Option<usize>,
    pub low_confidence: bool,
}

/// Tuning shared by every grid point. `lambda`, `threshold` and `merge`
/// apply to SSC only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodParams {
    pub lambda: Option<f64>,
    pub threshold: Option<f64>,
    pub merge: MergeRule,
    pub kmeans_restarts: usize,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            lambda: None,
            threshold: None,
            merge: MergeRule::default(),
            kmeans_restarts: DEFAULT_RESTARTS,
        }
    }
}

/// Between-layer clustering by `method` followed by within-layer clustering
/// of the estimated groups.
pub fn run_method(
    tensor: &AdjacencyTensor,
    communities: usize,
    groups: usize,
    method: Method,
    params: &MethodParams,
    seed: u64,
) -> Result<MethodOutput> {
    let restarts = params.kmeans_restarts;
    let between_seed = derive_seed(seed, BETWEEN_SEED_TAG);
    let (layer_groups, m_tilde, low_confidence) = match method {
        Method::Ssc => {
            let opts = BetweenOptions {
                lambda: params.lambda,
                threshold: params.threshold,
                merge: params.merge,
                kmeans_restarts: restarts,
                ..Default::default()
            };
            let out = between_layer_cluster(tensor, communities, groups, &opts, between_seed)?;
            (out.assignment, Some(out.m_tilde), out.low_confidence)
        }
        Method::Pw => (
            pw_between_cluster(tensor, communities, groups, restarts, between_seed)?,
            None,
            false,
        ),
    };
    let within = within_pipeline(
        tensor,
        &layer_groups,
        communities,
        restarts,
        derive_seed(seed, WITHIN_SEED_TAG),
    )?;
    Ok(MethodOutput {
        layer_groups,
        communities: within.assignments,
        m_tilde,
        low_confidence: low_confidence || within.degenerate.iter().any(|&d| d),
    })
}

fn base_row(
    cfg: &ExperimentConfig,
    point: &GridPoint,
    replicate: usize,
    seed: u64,
    method: Method,
) -> ResultRow {
    ResultRow {
        n: point.nodes,
        layers: point.layers,
        communities: point.communities,
        groups: point.groups,
        omega_scenario: point.omega.to_string(),
        a: cfg.a,
        b: cfg.b,
        replicate,
        seed,
        method,
        err_between: None,
        r_wl: None,
        m_tilde: None,
        low_confidence: false,
        wall_time_ms: 0.0,
        error: None,
    }
}

fn score(
    model: &GroundTruthModel,
    tensor: &AdjacencyTensor,
    point: &GridPoint,
    method: Method,
    cfg: &ExperimentConfig,
    seed: u64,
    row: &mut ResultRow,
) -> Result<()> {
    let start = Instant::now();
    let out = run_method(
        tensor,
        point.communities,
        point.groups,
        method,
        &cfg.params(),
        seed,
    );
    if cfg.record_wall_time {
        row.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    let out = out?;
    row.m_tilde = out.m_tilde;
    row.low_confidence = out.low_confidence;
    let report = error_report(model, &out.layer_groups, &out.communities)?;
    row.err_between = Some(report.err_between);
    row.r_wl = Some(report.r_wl);
    Ok(())
}

fn run_replicate(cfg: &ExperimentConfig, point: &GridPoint, replicate: usize) -> Vec<ResultRow> {
    let seed = point.seed(cfg.base_seed, replicate);
    let data = sample(&point.gen_config(cfg.a, cfg.b, seed));
    cfg.methods
        .iter()
        .map(|&method| {
            let mut row = base_row(cfg, point, replicate, seed, method);
            let outcome = match &data {
                Ok((model, tensor)) => score(model, tensor, point, method, cfg, seed, &mut row),
                Err(e) => Err(Error::Validation(format!("generation failed: {e}"))),
            };
            if let Err(e) = outcome {
                row.err_between = None;
                row.r_wl = None;
                row.error = Some(e.to_string());
            }
            row
        })
        .collect()
}

/// Run every grid point, replicate and method. Failures are recorded in the
/// row's `error` field. Rows come back in grid order, then replicate, then
/// method order, independent of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let grid = cfg.grid();
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|p| (0..cfg.replicates).map(move |r| (p, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Validation(format!("cannot start worker pool: {e}")))?;
    let mut chunks: Vec<((usize, usize), Vec<ResultRow>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, r)| ((p, r), run_replicate(cfg, &grid[p], r)))
            .collect()
    });
    chunks.sort_by_key(|(key, _)| *key);
    Ok(chunks.into_iter().flat_map(|(_, rows)| rows).collect())
}
