//! Multiplex datasets on disk.
//!
//! Layout:
//!
//! ```text
//! <dir>/nodes.txt              one node name per line
//! <dir>/layers/<name>.edges    one `u v` pair per line
//! ```
//!
//! Blank lines and anything after `#` are ignored in both files. Edges are
//! undirected: `u v` and `v u` describe the same edge and duplicates
//! collapse. Layers are read in file-name order. Synthetic datasets also
//! carry `<dir>/truth/layer_groups.txt` (`layer group` per line) and
//! `<dir>/truth/communities.txt` (`node` followed by one community per
//! group), with 1-based labels.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::types::{AdjacencyTensor, GroundTruthModel};

/// Tolerance on the filter comparisons, so that a node active in exactly
/// the required fraction of layers is kept.
const FILTER_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplexDataset {
    node_names: Vec<String>,
    layer_names: Vec<String>,
    tensor: AdjacencyTensor,
}

impl MultiplexDataset {
    pub fn new(
        node_names: Vec<String>,
        layer_names: Vec<String>,
        tensor: AdjacencyTensor,
    ) -> Result<Self> {
        if node_names.len() != tensor.n() || layer_names.len() != tensor.num_layers() {
            return Err(Error::Dimension(format!(
                "{} node names and {} layer names for a tensor of {} nodes and {} layers",
                node_names.len(),
                layer_names.len(),
                tensor.n(),
                tensor.num_layers()
            )));
        }
        Ok(Self {
            node_names,
            layer_names,
            tensor,
        })
    }

    /// Names `node1..noden` and `layer1..layerL`.
    pub fn with_default_names(tensor: AdjacencyTensor) -> Self {
        let node_names = (1..=tensor.n()).map(|i| format!("node{i}")).collect();
        let width = tensor.num_layers().to_string().len();
        let layer_names = (1..=tensor.num_layers())
            .map(|l| format!("layer{l:0width$}"))
            .collect();
        Self {
            node_names,
            layer_names,
            tensor,
        }
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn layer_names(&self) -> &[String] {
        &self.layer_names
    }

    pub fn tensor(&self) -> &AdjacencyTensor {
        &self.tensor
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_error(path: &Path, line: usize, message: String) -> Error {
    Error::Parse {
        file: path.display().to_string(),
        line,
        message,
    }
}

/// Read a dataset directory.
pub fn load_multiplex(dir: &Path) -> Result<MultiplexDataset> {
    let nodes_path = dir.join("nodes.txt");
    let text = fs::read_to_string(&nodes_path)?;
    let mut node_names = Vec::new();
    let mut index = HashMap::new();
    for (line, name) in content_lines(&text) {
        if index.insert(name.to_string(), node_names.len()).is_some() {
            return Err(parse_error(
                &nodes_path,
                line,
                format!("duplicate node {name:?}"),
            ));
        }
        node_names.push(name.to_string());
    }
    let n = node_names.len();

    let mut files: Vec<PathBuf> = fs::read_dir(dir.join("layers"))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "edges"));
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!(
            "no .edges files in {}",
            dir.join("layers").display()
        )));
    }

    let mut layer_names = Vec::with_capacity(files.len());
    let mut layers = Vec::with_capacity(files.len());
    for path in &files {
        let text = fs::read_to_string(path)?;
        let mut a = DMatrix::<u8>::zeros(n, n);
        for (line, content) in content_lines(&text) {
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(parse_error(
                    path,
                    line,
                    format!("expected `u v`, got {content:?}"),
                ));
            }
            let mut ends = [0usize; 2];
            for (slot, name) in ends.iter_mut().zip(&tokens) {
                *slot = *index
                    .get(*name)
                    .ok_or_else(|| parse_error(path, line, format!("unknown node {name:?}")))?;
            }
            if ends[0] == ends[1] {
                return Err(parse_error(
                    path,
                    line,
                    format!("self-loop on {:?}", tokens[0]),
                ));
            }
            a[(ends[0], ends[1])] = 1;
            a[(ends[1], ends[0])] = 1;
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        layer_names.push(stem);
        layers.push(a);
    }
    MultiplexDataset::new(node_names, layer_names, AdjacencyTensor::new(layers)?)
}

/// Write a dataset in the layout read by [`load_multiplex`].
pub fn write_multiplex(dir: &Path, ds: &MultiplexDataset) -> Result<()> {
    let layers_dir = dir.join("layers");
    fs::create_dir_all(&layers_dir)?;
    let mut nodes = fs::File::create(dir.join("nodes.txt"))?;
    for name in &ds.node_names {
        writeln!(nodes, "{name}")?;
    }
    for (l, name) in ds.layer_names.iter().enumerate() {
        let mut out =
            std::io::BufWriter::new(fs::File::create(layers_dir.join(format!("{name}.edges")))?);
        let a = ds.tensor.layer(l);
        for i in 0..ds.tensor.n() {
            for j in (i + 1)..ds.tensor.n() {
                if a[(i, j)] == 1 {
                    writeln!(out, "{} {}", ds.node_names[i], ds.node_names[j])?;
                }
            }
        }
        out.flush()?;
    }
    Ok(())
}

/// Write the generating labels next to a synthetic dataset.
pub fn write_ground_truth(
    dir: &Path,
    ds: &MultiplexDataset,
    model: &GroundTruthModel,
) -> Result<()> {
    if model.n() != ds.tensor.n() || model.num_layers() != ds.tensor.num_layers() {
        return Err(Error::Dimension(
            "ground truth does not match the dataset".into(),
        ));
    }
    let truth = dir.join("truth");
    fs::create_dir_all(&truth)?;
    let mut groups = fs::File::create(truth.join("layer_groups.txt"))?;
    for (name, g) in ds.layer_names.iter().zip(model.layer_labels().labels()) {
        writeln!(groups, "{name} {g}")?;
    }
    let mut comms = fs::File::create(truth.join("communities.txt"))?;
    for (i, name) in ds.node_names.iter().enumerate() {
        let labels: Vec<String> = model
            .node_labels()
            .iter()
            .map(|z| z.label(i).to_string())
            .collect();
        writeln!(comms, "{name} {}", labels.join(" "))?;
    }
    Ok(())
}

/// Drop nodes with positive degree in fewer than `min_node_activity * L`
/// layers, then drop layers whose average degree `2E / n` on the remaining
/// nodes is below `min_avg_degree`. Both comparisons are inclusive.
pub fn preprocess_multiplex(
    ds: &MultiplexDataset,
    min_node_activity: f64,
    min_avg_degree: f64,
) -> Result<MultiplexDataset> {
    if !(0.0..=1.0).contains(&min_node_activity) {
        return Err(Error::Validation(format!(
            "node activity fraction must lie in [0, 1], got {min_node_activity}"
        )));
    }
    if !(min_avg_degree >= 0.0) {
        return Err(Error::Validation(format!(
            "minimum average degree must be nonnegative, got {min_avg_degree}"
        )));
    }
    let t = &ds.tensor;
    let (n, l) = (t.n(), t.num_layers());
    let degrees: Vec<Vec<usize>> = (0..l).map(|k| t.degrees(k)).collect();
    let needed = min_node_activity * l as f64;
    let keep_nodes: Vec<usize> = (0..n)
        .filter(|&i| {
            let active = degrees.iter().filter(|d| d[i] > 0).count();
            active as f64 + FILTER_SLACK >= needed
        })
        .collect();
    if keep_nodes.is_empty() {
        return Err(Error::Validation("every node was filtered out".into()));
    }
    let m = keep_nodes.len();
    let mut layer_names = Vec::new();
    let mut layers = Vec::new();
    for k in 0..l {
        let a = t.layer(k);
        let sub = DMatrix::from_fn(m, m, |i, j| a[(keep_nodes[i], keep_nodes[j])]);
        let edges: usize = sub.iter().map(|&v| v as usize).sum::<usize>() / 2;
        let avg = 2.0 * edges as f64 / m as f64;
        if avg + FILTER_SLACK >= min_avg_degree {
            layer_names.push(ds.layer_names[k].clone());
            layers.push(sub);
        }
    }
    if layers.is_empty() {
        return Err(Error::Validation("every layer was filtered out".into()));
    }
    let node_names = keep_nodes
        .iter()
        .map(|&i| ds.node_names[i].clone())
        .collect();
    MultiplexDataset::new(node_names, layer_names, AdjacencyTensor::new(layers)?)
}
