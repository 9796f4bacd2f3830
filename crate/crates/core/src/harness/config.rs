//! Experiment configuration file.
//!
//! A flat `key = value` format, one entry per line, `#` starts a comment.
//! Grid keys (`n`, `L`, `K`, `M`, `omega`) may repeat and may list several
//! whitespace-separated values; every value adds a grid coordinate. A line
//! `omega = mix 0.75 0.95 1.25` adds a single mixture scenario in which
//! consecutive thirds of the layers use the listed values.
//!
//! ```text
//! n = 60 120 180
//! L = 60
//! K = 3
//! M = 3
//! omega = 0.75
//! omega = mix 0.75 0.95 1.25
//! a = 0.3
//! b = 0.8
//! replicates = 20
//! base_seed = 7
//! method = ssc
//! method = pw
//! ```
//!
//! Scalar keys: `a`, `b`, `replicates`, `base_seed`, `lambda`, `threshold`,
//! `merge` (`normalized` or `gap`), `kmeans_restarts`, `threads` (0 uses every core), `record_wall_time`
//! (`true`/`false`). A repeated scalar key keeps its last value.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::runner::MethodParams;
use crate::between::MergeRule;
use crate::error::{Error, Result};
use crate::generator::{GenConfig, Omega};
use crate::linalg::DEFAULT_RESTARTS;
use crate::rng::splitmix64;

/// How the assortativity multiplier is assigned to layers.
#[derive(Clone, Debug, PartialEq)]
pub enum OmegaScenario {
    Single(f64),
    /// Consecutive equal blocks of layers take the listed values in order.
    Mixture(Vec<f64>),
}

impl OmegaScenario {
    pub fn to_omega(&self, layers: usize) -> Omega {
        match self {
            OmegaScenario::Single(w) => Omega::Single(*w),
            OmegaScenario::Mixture(ws) => Omega::mixture(ws, layers),
        }
    }

    fn hash_into(&self, mut h: u64) -> u64 {
        match self {
            OmegaScenario::Single(w) => {
                h = splitmix64(h ^ 1);
                splitmix64(h ^ w.to_bits())
            }
            OmegaScenario::Mixture(ws) => {
                h = splitmix64(h ^ 2);
                h = splitmix64(h ^ ws.len() as u64);
                for w in ws {
                    h = splitmix64(h ^ w.to_bits());
                }
                h
            }
        }
    }
}

/// `1.25` or `mix:0.75/0.95/1.25`; contains no commas or spaces so it is a
/// plain CSV field.
impl fmt::Display for OmegaScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OmegaScenario::Single(w) => write!(f, "{w}"),
            OmegaScenario::Mixture(ws) => {
                let parts: Vec<String> = ws.iter().map(|w| w.to_string()).collect();
                write!(f, "mix:{}", parts.join("/"))
            }
        }
    }
}

impl FromStr for OmegaScenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| format!("bad omega value {t:?}"))
        };
        match s.strip_prefix("mix:") {
            Some(rest) => Ok(OmegaScenario::Mixture(
                rest.split('/')
                    .map(parse)
                    .collect::<std::result::Result<_, _>>()?,
            )),
            None => Ok(OmegaScenario::Single(parse(s)?)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// Sparse subspace clustering of layers.
    Ssc,
    /// Spectral projection baseline.
    Pw,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ssc => "ssc",
            Method::Pw => "pw",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ssc" => Ok(Method::Ssc),
            "pw" | "pw_baseline" => Ok(Method::Pw),
            other => Err(format!("unknown method {other:?} (expected ssc or pw)")),
        }
    }
}

/// One combination of the grid coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub nodes: usize,
    pub layers: usize,
    pub communities: usize,
    pub groups: usize,
    pub omega: OmegaScenario,
}

impl GridPoint {
    /// Seed of a replicate: `base_seed` xor a hash of every coordinate.
    pub fn seed(&self, base_seed: u64, replicate: usize) -> u64 {
        let mut h = splitmix64(self.nodes as u64);
        h = splitmix64(h ^ self.layers as u64);
        h = splitmix64(h ^ self.communities as u64);
        h = splitmix64(h ^ self.groups as u64);
        h = self.omega.hash_into(h);
        h = splitmix64(h ^ replicate as u64);
        base_seed ^ h
    }

    pub fn gen_config(&self, a: f64, b: f64, seed: u64) -> GenConfig {
        GenConfig {
            omega: self.omega.to_omega(self.layers),
            ..GenConfig::new(
                self.nodes,
                self.layers,
                self.communities,
                self.groups,
                a,
                b,
                1.0,
                seed,
            )
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub nodes: Vec<usize>,
    pub layers: Vec<usize>,
    pub communities: Vec<usize>,
    pub groups: Vec<usize>,
    pub omegas: Vec<OmegaScenario>,
    pub a: f64,
    pub b: f64,
    pub replicates: usize,
    pub base_seed: u64,
    pub lambda: Option<f64>,
    pub threshold: Option<f64>,
    pub merge: MergeRule,
    pub kmeans_restarts: usize,
    pub methods: Vec<Method>,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// When false the wall-time column is written as 0, which makes repeated
    /// runs byte-identical.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            layers: Vec::new(),
            communities: Vec::new(),
            groups: Vec::new(),
            omegas: Vec::new(),
            a: 0.3,
            b: 0.8,
            replicates: 1,
            base_seed: 0,
            lambda: None,
            threshold: None,
            merge: MergeRule::default(),
            kmeans_restarts: DEFAULT_RESTARTS,
            methods: Vec::new(),
            threads: 0,
            record_wall_time: true,
        }
    }
}

fn parse_value<T: FromStr>(file: &str, line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Parse {
        file: file.to_string(),
        line,
        message: format!("bad value {v:?} for {key}"),
    })
}

impl ExperimentConfig {
    /// Parse the text of a config file; `file` is used in error messages.
    /// Methods default to `ssc` when none is given.
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                file: file.to_string(),
                line,
                message: format!("expected key = value, got {content:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let values: Vec<&str> = value.split_whitespace().collect();
            if values.is_empty() {
                return Err(Error::Parse {
                    file: file.to_string(),
                    line,
                    message: format!("missing value for {key}"),
                });
            }
            match key {
                "n" | "L" | "K" | "M" => {
                    let target = match key {
                        "n" => &mut cfg.nodes,
                        "L" => &mut cfg.layers,
                        "K" => &mut cfg.communities,
                        _ => &mut cfg.groups,
                    };
                    for v in &values {
                        target.push(parse_value(file, line, key, v)?);
                    }
                }
                "omega" => {
                    if values[0] == "mix" {
                        let ws = values[1..]
                            .iter()
                            .map(|v| parse_value(file, line, key, v))
                            .collect::<Result<Vec<f64>>>()?;
                        if ws.is_empty() {
                            return Err(Error::Parse {
                                file: file.to_string(),
                                line,
                                message: "mixture needs at least one value".into(),
                            });
                        }
                        cfg.omegas.push(OmegaScenario::Mixture(ws));
                    } else {
                        for v in &values {
                            cfg.omegas
                                .push(OmegaScenario::Single(parse_value(file, line, key, v)?));
                        }
                    }
                }
                "method" => {
                    for v in &values {
                        let m: Method = v.parse().map_err(|message| Error::Parse {
                            file: file.to_string(),
                            line,
                            message,
                        })?;
                        if !cfg.methods.contains(&m) {
                            cfg.methods.push(m);
                        }
                    }
                }
                _ => {
                    if values.len() != 1 {
                        return Err(Error::Parse {
                            file: file.to_string(),
                            line,
                            message: format!("{key} takes a single value"),
                        });
                    }
                    let v = values[0];
                    match key {
                        "a" => cfg.a = parse_value(file, line, key, v)?,
                        "b" => cfg.b = parse_value(file, line, key, v)?,
                        "replicates" => cfg.replicates = parse_value(file, line, key, v)?,
                        "base_seed" => cfg.base_seed = parse_value(file, line, key, v)?,
                        "lambda" => cfg.lambda = Some(parse_value(file, line, key, v)?),
                        "threshold" => cfg.threshold = Some(parse_value(file, line, key, v)?),
                        "merge" => cfg.merge = parse_value(file, line, key, v)?,
                        "kmeans_restarts" => cfg.kmeans_restarts = parse_value(file, line, key, v)?,
                        "threads" => cfg.threads = parse_value(file, line, key, v)?,
                        "record_wall_time" => {
                            cfg.record_wall_time = parse_value(file, line, key, v)?
                        }
                        _ => {
                            return Err(Error::Parse {
                                file: file.to_string(),
                                line,
                                message: format!("unknown key {key:?}"),
                            })
                        }
                    }
                }
            }
        }
        if cfg.methods.is_empty() {
            cfg.methods.push(Method::Ssc);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<()> {
        let axes: [(&str, bool); 5] = [
            ("n", self.nodes.is_empty()),
            ("L", self.layers.is_empty()),
            ("K", self.communities.is_empty()),
            ("M", self.groups.is_empty()),
            ("omega", self.omegas.is_empty()),
        ];
        if let Some((name, _)) = axes.iter().find(|(_, empty)| *empty) {
            return Err(Error::Validation(format!("grid axis {name} has no values")));
        }
        if self.replicates == 0 {
            return Err(Error::Validation("replicates must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Validation("no methods selected".into()));
        }
        if self.kmeans_restarts == 0 {
            return Err(Error::Validation(
                "kmeans_restarts must be at least 1".into(),
            ));
        }
        if !(0.0 <= self.a && self.a <= self.b && self.b <= 1.0) {
            return Err(Error::Validation(format!(
                "need 0 <= a <= b <= 1, got a={}, b={}",
                self.a, self.b
            )));
        }
        if let Some(l) = self.lambda {
            if !(l > 0.0) {
                return Err(Error::Validation(format!(
                    "lambda must be positive, got {l}"
                )));
            }
        }
        Ok(())
    }

    /// Grid points in a fixed order: `n`, then `L`, `K`, `M`, `omega`, each
    /// in the order listed.
    pub fn params(&self) -> MethodParams {
        MethodParams {
            lambda: self.lambda,
            threshold: self.threshold,
            merge: self.merge,
            kmeans_restarts: self.kmeans_restarts,
        }
    }

    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &nodes in &self.nodes {
            for &layers in &self.layers {
                for &communities in &self.communities {
                    for &groups in &self.groups {
                        for omega in &self.omegas {
                            out.push(GridPoint {
                                nodes,
                                layers,
                                communities,
                                groups,
                                omega: omega.clone(),
                            });
                        }
                    }
                }
            }
        }
        out
    }
}
