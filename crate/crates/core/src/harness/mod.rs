//! Experiment configuration, the Monte Carlo grid runner, CSV output,
//! dataset ingestion and plotting.

pub mod config;
pub mod dataset;
pub mod output;
pub mod plot;
pub mod runner;

pub use config::{ExperimentConfig, GridPoint, Method, OmegaScenario};
pub use dataset::{
    load_multiplex, preprocess_multiplex, write_ground_truth, write_multiplex, MultiplexDataset,
};
pub use output::{read_results, read_results_file, write_results, write_results_file, CSV_HEADER};
pub use plot::{render_svg, Metric, XAxis};
pub use runner::{run_experiment, run_method, MethodOutput, MethodParams, ResultRow};
