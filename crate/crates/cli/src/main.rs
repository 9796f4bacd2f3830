use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dimple::between::MergeRule;
use dimple::generator::{sample, GenConfig, Omega};
use dimple::harness::{
    load_multiplex, preprocess_multiplex, read_results_file, render_svg, run_experiment,
    run_method, write_ground_truth, write_multiplex, write_results_file, ExperimentConfig, Method,
    MethodParams, Metric, MultiplexDataset, XAxis,
};
use dimple::linalg::DEFAULT_RESTARTS;

#[derive(Parser)]
#[command(name = "dimple", version, about = "Multiplex network layer clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Ssc,
    Pw,
    Both,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Ssc => vec![Method::Ssc],
            MethodArg::Pw => vec![Method::Pw],
            MethodArg::Both => vec![Method::Ssc, Method::Pw],
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    N,
    L,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Between,
    Within,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic multiplex network and write it with its ground truth.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, short = 'n')]
        nodes: usize,
        #[arg(long, short = 'L')]
        layers: usize,
        #[arg(long, short = 'K')]
        communities: usize,
        #[arg(long, short = 'M')]
        groups: usize,
        /// Repeat to split the layers into consecutive blocks with these values.
        #[arg(long, default_value = "1.0")]
        omega: Vec<f64>,
        #[arg(long, default_value_t = 0.3)]
        a: f64,
        #[arg(long, default_value_t = 0.8)]
        b: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Cluster the layers of a dataset and the nodes within each layer group.
    Cluster {
        /// Dataset directory with nodes.txt and layers/*.edges.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, short = 'K')]
        communities: usize,
        #[arg(long, short = 'M')]
        groups: usize,
        #[arg(long, value_enum, default_value = "ssc")]
        method: MethodArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        lambda: Option<f64>,
        /// Merge components by thresholding at this value.
        #[arg(long)]
        threshold: Option<f64>,
        /// Merge rule used without --threshold: normalized or gap.
        #[arg(long, default_value = "normalized")]
        merge: MergeRule,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        /// Keep nodes with edges in at least this fraction of layers.
        #[arg(long, default_value_t = 0.0)]
        min_node_activity: f64,
        /// Keep layers with at least this average degree after node filtering.
        #[arg(long, default_value_t = 0.0)]
        min_avg_degree: f64,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a Monte Carlo grid and write one CSV row per replicate and method.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides base_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
    },
    /// Draw mean error against n or L from an experiment CSV.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "n")]
        x: AxisArg,
        #[arg(long, value_enum, default_value = "between")]
        metric: MetricArg,
    },
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring worker threads")?;
    }
    Ok(())
}

fn print_clusters(
    ds: &MultiplexDataset,
    layer_groups: &[usize],
    communities: &[Vec<usize>],
    groups: usize,
) {
    println!("# layer\tgroup");
    for (name, g) in ds.layer_names().iter().zip(layer_groups) {
        println!("{name}\t{g}");
    }
    let header: Vec<String> = (1..=groups).map(|m| format!("group{m}")).collect();
    println!("# node\t{}", header.join("\t"));
    for (i, name) in ds.node_names().iter().enumerate() {
        let labels: Vec<String> = communities.iter().map(|z| z[i].to_string()).collect();
        println!("{name}\t{}", labels.join("\t"));
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Generate {
            out,
            nodes,
            layers,
            communities,
            groups,
            omega,
            a,
            b,
            seed,
        } => {
            let omega = match omega.as_slice() {
                [w] => Omega::Single(*w),
                ws => Omega::mixture(ws, layers),
            };
            let cfg = GenConfig {
                omega,
                ..GenConfig::new(nodes, layers, communities, groups, a, b, 1.0, seed)
            };
            let (model, tensor) = sample(&cfg)?;
            let ds = MultiplexDataset::with_default_names(tensor);
            write_multiplex(&out, &ds)?;
            write_ground_truth(&out, &ds, &model)?;
            eprintln!(
                "wrote {nodes} nodes and {layers} layers to {}",
                out.display()
            );
        }
        Command::Cluster {
            data,
            communities,
            groups,
            method,
            seed,
            lambda,
            threshold,
            merge,
            restarts,
            min_node_activity,
            min_avg_degree,
            threads,
        } => {
            set_threads(threads)?;
            let method = match method {
                MethodArg::Ssc => Method::Ssc,
                MethodArg::Pw => Method::Pw,
                MethodArg::Both => bail!("cluster runs a single method"),
            };
            let raw = load_multiplex(&data)?;
            let ds = preprocess_multiplex(&raw, min_node_activity, min_avg_degree)?;
            if ds.tensor().n() != raw.tensor().n()
                || ds.tensor().num_layers() != raw.tensor().num_layers()
            {
                eprintln!(
                    "kept {} of {} nodes and {} of {} layers",
                    ds.tensor().n(),
                    raw.tensor().n(),
                    ds.tensor().num_layers(),
                    raw.tensor().num_layers()
                );
            }
            let out = run_method(
                ds.tensor(),
                communities,
                groups,
                method,
                &MethodParams {
                    lambda,
                    threshold,
                    merge,
                    kmeans_restarts: restarts,
                },
                seed,
            )?;
            if let Some(m) = out.m_tilde {
                eprintln!("weight graph components: {m}");
            }
            if out.low_confidence {
                eprintln!("warning: result is low-confidence");
            }
            let z: Vec<Vec<usize>> = out.communities.iter().map(|z| z.labels()).collect();
            print_clusters(&ds, &out.layer_groups.labels(), &z, groups);
        }
        Command::Experiment {
            config,
            out,
            seed,
            threads,
            method,
        } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(t) = threads {
                cfg.threads = t;
            }
            if let Some(m) = method {
                cfg.methods = m.methods();
            }
            let rows = run_experiment(&cfg)?;
            write_results_file(&rows, &out)?;
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            eprintln!(
                "wrote {} rows ({failed} failed) to {}",
                rows.len(),
                out.display()
            );
        }
        Command::Plot {
            input,
            out,
            x,
            metric,
        } => {
            let rows = read_results_file(&input)?;
            let x = match x {
                AxisArg::N => XAxis::Nodes,
                AxisArg::L => XAxis::Layers,
            };
            let metric = match metric {
                MetricArg::Between => Metric::Between,
                MetricArg::Within => Metric::Within,
            };
            std::fs::write(&out, render_svg(&rows, x, metric)?)
                .with_context(|| format!("writing {}", out.display()))?;
        }
    }
    Ok(())
}
