//! Acceptance suite. One line per criterion, nonzero exit if any fails.
//!
//! Run alone with `cargo test -p dimple --test acceptance`; pass criterion
//! numbers as arguments to run a subset, e.g. `-- 1 2 9`.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use dimple::baseline::pw_between_cluster;
use dimple::between::{
    between_layer_cluster, connected_components, spectral_cluster_affinity, weight_matrix,
    BetweenOptions, EDGE_EPSILON,
};
use dimple::embed::{embed_layer, embed_tensor, raw_gram, unit_gram};
use dimple::generator::{probability_layer, sample, sample_model, GenConfig};
use dimple::harness::{run_experiment, write_results, ExperimentConfig, Method, ResultRow};
use dimple::lasso::{default_lambda, kkt_residual, solve_column, LassoOptions};
use dimple::linalg::{rank_k_project, DEFAULT_RESTARTS};
use dimple::metrics::{between_error, within_error};
use dimple::within::{debiased_square, within_pipeline};
use dimple::{AdjacencyTensor, GramMatrix};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn within_budget(v: Verdict, elapsed: Duration, budget: Duration) -> Verdict {
    if elapsed <= budget {
        v
    } else {
        verdict(false, format!("{}; over the {budget:?} budget", v.detail))
    }
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn layers_f64(t: &AdjacencyTensor) -> Vec<DMatrix<f64>> {
    (0..t.num_layers()).map(|l| t.layer_f64(l)).collect()
}

fn metric_oracles() -> Verdict {
    let mut r = rng(101);
    let mut between_bad = 0;
    for _ in 0..200 {
        let m = r.random_range(1..=8);
        let l = r.random_range(1..=20);
        let truth = random_assignment(&mut r, l, m);
        let est = random_assignment(&mut r, l, m);
        if between_error(&truth, &est).unwrap().err != brute_between(&truth, &est, m) {
            between_bad += 1;
        }
    }
    let mut within_bad = 0;
    for _ in 0..100 {
        let m = r.random_range(1..=4);
        let k = r.random_range(1..=4);
        let n = r.random_range(1..=12);
        let zt: Vec<_> = (0..m).map(|_| random_assignment(&mut r, n, k)).collect();
        let zh: Vec<_> = (0..m).map(|_| random_assignment(&mut r, n, k)).collect();
        if within_error(&zt, &zh).unwrap().r_wl != brute_within(&zt, &zh, k) {
            within_bad += 1;
        }
    }
    verdict(
        between_bad == 0 && within_bad == 0,
        format!("between mismatches {between_bad}/200, within mismatches {within_bad}/100"),
    )
}

const TIGHT: LassoOptions = LassoOptions {
    tol: 1e-13,
    kkt_tol: 1e-11,
    max_sweeps: 1_000_000,
};

/// Adjacency spectrum separated at `k`, so the baseline's subspace is unique.
fn adjacency_gap(a: &DMatrix<f64>, k: usize) -> bool {
    let (values, _) = sorted_eigs(a);
    k >= values.len() || values[k - 1].abs() - values[k].abs() > 1e-6 * values[0].abs().max(1.0)
}

fn gram_trick_oracles() -> Verdict {
    let mut r = rng(202);
    let (mut gram_worst, mut lasso_worst, mut kkt_worst) = (0.0f64, 0.0f64, 0.0f64);
    let mut baseline_bad = 0;
    for _ in 0..50 {
        let (k, t) = small_instance(&mut r);
        let layers = layers_f64(&t);
        let embs = embed_tensor(&t, k).unwrap();
        let q = dense_q(&layers, k);
        let dense = q.transpose() * &q;
        let raw = raw_gram(&embs).unwrap();
        gram_worst = gram_worst.max((raw.matrix() - &dense).amax() / dense.amax());

        let gram = unit_gram(&embs).unwrap();
        let y = dense_y(&q);
        let l = t.num_layers();
        let target = r.random_range(0..l);
        let max_corr = (0..l)
            .filter(|&j| j != target)
            .map(|j| gram.get(j, target).abs())
            .fold(0.0, f64::max);
        if max_corr > 0.0 {
            let lambda = r.random_range(0.05..0.9) * max_corr;
            let sol = solve_column(&gram, target, lambda, &TIGHT).unwrap();
            let want = dense_lasso(&y, target, lambda);
            for (a, b) in sol.weights.iter().zip(&want) {
                lasso_worst = lasso_worst.max((a - b).abs());
            }
            kkt_worst = kkt_worst.max(sol.kkt_residual);
        }

        let groups = r.random_range(1..=l.min(3));
        if layers.iter().all(|a| adjacency_gap(a, k)) {
            let seed = r.random();
            let got = pw_between_cluster(&t, k, groups, DEFAULT_RESTARTS, seed).unwrap();
            let want = dense_baseline(&t, k, groups, DEFAULT_RESTARTS, seed);
            if !same_partition(got.as_zero_based(), want.as_zero_based()) {
                baseline_bad += 1;
            }
        }
    }
    verdict(
        gram_worst <= 1e-10 && lasso_worst <= 1e-8 && kkt_worst <= 1e-6 && baseline_bad == 0,
        format!(
            "gram rel err {gram_worst:.1e}, lasso max diff {lasso_worst:.1e}, baseline label mismatches {baseline_bad}"
        ),
    )
}

fn random_gram(r: &mut impl Rng, d: usize, l: usize) -> GramMatrix {
    let mut x = DMatrix::from_fn(d, l, |_, _| r.random_range(-1.0..1.0));
    for mut c in x.column_iter_mut() {
        let norm = c.norm();
        c /= norm;
    }
    let mut g = x.transpose() * &x;
    g.fill_diagonal(1.0);
    GramMatrix::new(g).unwrap()
}

fn lasso_certificates() -> Verdict {
    let mut r = rng(303);
    let opts = LassoOptions::default();
    let (mut kkt_worst, mut zero_bad, mut solved) = (0.0f64, 0, 0);
    for _ in 0..100 {
        let l = r.random_range(2..=30);
        let d = r.random_range(2..=12);
        let g = random_gram(&mut r, d, l);
        let target = r.random_range(0..l);
        let max_corr = (0..l)
            .filter(|&j| j != target)
            .map(|j| g.get(j, target).abs())
            .fold(0.0, f64::max);
        for frac in [0.05, 0.3, 0.7] {
            let lambda = frac * max_corr;
            if lambda > 0.0 {
                let sol = solve_column(&g, target, lambda, &opts).unwrap();
                kkt_worst = kkt_worst.max(kkt_residual(&g, target, lambda, &sol.weights));
                solved += 1;
            }
        }
        for scale in [1.0, 1.0 + 1e-12, 2.0] {
            let lambda = scale * max_corr;
            if lambda > 0.0 {
                let sol = solve_column(&g, target, lambda, &opts).unwrap();
                if sol.weights.iter().any(|&w| w != 0.0) {
                    zero_bad += 1;
                }
            }
        }
    }
    // every column of the weight matrices on real pipelines, too
    for seed in 0..5 {
        let (_, t) = sample(&GenConfig::new(80, 20, 3, 2, 0.3, 0.8, 1.0, seed)).unwrap();
        let embs = embed_tensor(&t, 3).unwrap();
        let gram = unit_gram(&embs).unwrap();
        let lambda = default_lambda(&embs);
        let w = weight_matrix(&gram, lambda, &opts).unwrap();
        for c in 0..20 {
            let col: Vec<f64> = w.weights().column(c).iter().copied().collect();
            kkt_worst = kkt_worst.max(kkt_residual(&gram, c, lambda, &col));
            solved += 1;
        }
    }
    verdict(
        kkt_worst <= 1e-6 && zero_bad == 0,
        format!("{solved} solves, worst KKT residual {kkt_worst:.1e}, nonzero above lambda_max {zero_bad}"),
    )
}

fn noiseless_sep() -> Verdict {
    let mut clean = 0;
    for seed in 0..20 {
        let model = sample_model(&GenConfig::new(200, 40, 3, 3, 0.3, 0.8, 1.0, seed)).unwrap();
        let embs: Vec<_> = (0..40)
            .map(|l| embed_layer(&probability_layer(&model, l), 3).unwrap())
            .collect();
        let gram = unit_gram(&embs).unwrap();
        let w = weight_matrix(&gram, default_lambda(&embs), &LassoOptions::default()).unwrap();
        let c = model.layer_labels().as_zero_based();
        let ok = (0..40).all(|i| (0..40).all(|j| w.weights()[(i, j)] == 0.0 || c[i] == c[j]));
        clean += ok as usize;
    }
    verdict(
        clean >= 19,
        format!("{clean}/20 seeds with same-group support only"),
    )
}

fn experiment(text: &str) -> Vec<ResultRow> {
    let cfg = ExperimentConfig::parse(text, "acceptance").unwrap();
    let rows = run_experiment(&cfg).unwrap();
    if let Some(bad) = rows.iter().find(|r| r.error.is_some()) {
        panic!("replicate failed: {:?}", bad.error);
    }
    rows
}

/// Mean and standard error of `err_between` per `n` for one method.
fn by_n(rows: &[ResultRow], method: Method) -> BTreeMap<usize, (f64, f64)> {
    let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.method == method) {
        groups.entry(r.n).or_default().push(r.err_between.unwrap());
    }
    groups.into_iter().map(|(n, v)| (n, mean_se(&v))).collect()
}

fn consistency_trend() -> Verdict {
    let rows = experiment(
        "n = 60 120 180 240 300 360\nL = 60\nK = 3\nM = 3\nomega = 1.25\n\
         replicates = 20\nbase_seed = 1\nmethod = ssc\nrecord_wall_time = false\n",
    );
    let stats = by_n(&rows, Method::Ssc);
    let points: Vec<(usize, (f64, f64))> = stats.into_iter().collect();
    // an increase counts against the trend only beyond one standard error of the difference
    let mut violations = Vec::new();
    for w in points.windows(2) {
        let ((n0, (m0, s0)), (n1, (m1, s1))) = (w[0], w[1]);
        if m1 > m0 + s0.hypot(s1) {
            violations.push(format!("{n0}->{n1}"));
        }
    }
    let at_300 = points.iter().find(|p| p.0 == 300).unwrap().1 .0;
    let table: Vec<String> = points
        .iter()
        .map(|(n, (m, s))| format!("{n}:{m:.4}±{s:.4}"))
        .collect();
    verdict(
        violations.is_empty() && at_300 <= 0.02,
        format!(
            "mean err {}; n=300 mean {at_300:.4}; trend violations [{}]",
            table.join(" "),
            violations.join(", ")
        ),
    )
}

fn mmlsbm_exact() -> Verdict {
    let mut exact = 0;
    for seed in 1..=20 {
        let (model, t) = sample_mmlsbm(&GenConfig::new(150, 30, 3, 2, 0.3, 0.8, 1.0, seed));
        let out = between_layer_cluster(&t, 3, 2, &BetweenOptions::default(), seed).unwrap();
        if between_error(model.layer_labels(), &out.assignment)
            .unwrap()
            .err
            == 0.0
        {
            exact += 1;
        }
    }
    verdict(exact >= 19, format!("{exact}/20 seeds with zero error"))
}

/// Mean `R_WL` over 20 seeds with the ground-truth or the estimated grouping.
fn mean_r_wl(n: usize, estimated: bool) -> f64 {
    let errs: Vec<f64> = (1..=20)
        .map(|seed| {
            let (model, t) = sample(&GenConfig::new(n, 40, 3, 2, 0.3, 0.8, 1.25, seed)).unwrap();
            let groups = if estimated {
                between_layer_cluster(&t, 3, 2, &BetweenOptions::default(), seed)
                    .unwrap()
                    .assignment
            } else {
                model.layer_labels().clone()
            };
            let out = within_pipeline(&t, &groups, 3, DEFAULT_RESTARTS, seed).unwrap();
            within_error(model.node_labels(), &out.assignments)
                .unwrap()
                .r_wl
        })
        .collect();
    mean_se(&errs).0
}

fn within_layer_error() -> Verdict {
    let gt_200 = mean_r_wl(200, false);
    let gt_300 = mean_r_wl(300, false);
    let est_300 = mean_r_wl(300, true);
    verdict(
        gt_200 <= 0.02 && est_300 <= 2.0 * gt_300,
        format!("truth-grouped R_WL at n=200 {gt_200:.4}; n=300 estimated {est_300:.4} vs truth-grouped {gt_300:.4}"),
    )
}

fn baseline_comparison() -> Verdict {
    let rows = experiment(
        "n = 30 50 70 90\nL = 60\nK = 3\nM = 3\nomega = 1.25\nreplicates = 20\n\
         base_seed = 1\nmethod = ssc\nmethod = pw\nrecord_wall_time = false\n",
    );
    let ssc = by_n(&rows, Method::Ssc);
    let pw = by_n(&rows, Method::Pw);
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, &(ms, ss)) in &ssc {
        let (mp, sp) = pw[n];
        pass &= ms <= mp + ss.hypot(sp);
        parts.push(format!("n={n} ssc {ms:.3} pw {mp:.3}"));
    }
    verdict(pass, parts.join("; "))
}

fn invariant_suite() -> Verdict {
    let mut r = rng(909);
    let mut tail_worst = 0.0f64;
    for _ in 0..200 {
        let n = r.random_range(2..=20);
        let x = DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0));
        let s = &x + x.transpose();
        let k = r.random_range(1..=n);
        let (values, _) = sorted_eigs(&s);
        let tail: f64 = values[k..].iter().map(|v| v * v).sum();
        let got = (&s - rank_k_project(&s, k).unwrap()).norm_squared();
        tail_worst = tail_worst.max((got - tail).abs() / s.norm_squared());
    }

    let mut blocks_bad = 0;
    for seed in 0..100 {
        let groups = r.random_range(1..=5);
        let l = groups + r.random_range(0..15);
        let mut labels: Vec<usize> = (0..l)
            .map(|i| {
                if i < groups {
                    i
                } else {
                    r.random_range(0..groups)
                }
            })
            .collect();
        labels.shuffle(&mut r);
        let mut w = DMatrix::zeros(l, l);
        for i in 0..l {
            for j in 0..i {
                let linked = j + 1 == i || r.random_bool(0.5);
                if labels[i] == labels[j] && linked {
                    let v = r.random_range(0.05..1.0);
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
        }
        // keep each group connected through its first member
        for i in 0..l {
            let first = labels.iter().position(|&g| g == labels[i]).unwrap();
            if first != i && w[(i, first)] == 0.0 {
                w[(i, first)] = 0.5;
                w[(first, i)] = 0.5;
            }
        }
        let spectral = spectral_cluster_affinity(&w, groups, DEFAULT_RESTARTS, seed).unwrap();
        let (count, components) = connected_components(&w, EDGE_EPSILON);
        if !same_partition(spectral.as_zero_based(), &labels)
            || count != groups
            || !same_partition(components.as_zero_based(), &labels)
        {
            blocks_bad += 1;
        }
    }

    let mut diagonal_bad = 0;
    for _ in 0..100 {
        let n = r.random_range(1..=30);
        let p = r.random_range(0.0..1.0);
        let g = debiased_square(&random_layer(&mut r, n, p));
        diagonal_bad += (0..n).any(|i| g[(i, i)] != 0.0) as usize;
    }

    let config = "n = 40 60\nL = 8\nK = 2\nM = 2\nomega = 1.25\nomega = mix 0.75 1.25\n\
                  replicates = 3\nbase_seed = 3\nmethod = ssc\nmethod = pw\nrecord_wall_time = false\n";
    let csv = || {
        let mut out = Vec::new();
        write_results(&experiment(config), &mut out).unwrap();
        out
    };
    let stable = csv() == csv();

    verdict(
        tail_worst <= 1e-10 && blocks_bad == 0 && diagonal_bad == 0 && stable,
        format!(
            "tail-energy rel err {tail_worst:.1e}, block recovery failures {blocks_bad}/100, \
             nonzero diagonals {diagonal_bad}/100, CSV byte-identical {stable}"
        ),
    )
}

type Check = fn() -> Verdict;

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let criteria: [(u32, &str, Check, Duration); 9] = [
        (1, "metric oracles", metric_oracles, secs(30)),
        (2, "gram trick oracles", gram_trick_oracles, secs(60)),
        (3, "lasso certificates", lasso_certificates, secs(60)),
        (4, "noiseless self-expressiveness", noiseless_sep, secs(120)),
        (
            5,
            "between-layer consistency trend",
            consistency_trend,
            secs(600),
        ),
        (
            6,
            "mixture multilayer SBM recovery",
            mmlsbm_exact,
            secs(120),
        ),
        (7, "within-layer error", within_layer_error, secs(600)),
        (8, "baseline comparison", baseline_comparison, secs(300)),
        (9, "numerical invariants", invariant_suite, secs(60)),
    ];
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, check, budget) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(v) => within_budget(v, start.elapsed(), budget),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            }
        };
        let status = if v.pass { "PASS" } else { "FAIL" };
        failed += !v.pass as usize;
        println!(
            "{status} criterion {id} ({name}): {} [{:.1} s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
