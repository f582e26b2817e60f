//! Seeded modular graph generator and dataset writer.
//!
//! Nodes are split into contiguous communities and carry two uniform latent
//! values: a connection propensity and a morphology score. A pair is linked
//! when the endpoints' propensities sum past the quantile that makes the link
//! probability exactly `p_in` (same community) or `p_out`; a share of pairs
//! instead flips an independent coin with the same probability. Edge weights
//! are truncated normals centred on the endpoints' morphological similarity,
//! and the graph is divided by its maximum weight.
//! Weights are rounded to the on-disk precision so a written dataset loads
//! back to exactly the graphs generated in memory.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{format_sig9, GraphError, GraphPair, WeightedGraph};
use crate::train::{kfold_split, Folds};

/// Number of folds recorded in the dataset manifest.
pub const MANIFEST_FOLDS: usize = 5;

const WEIGHT_SD: f64 = 0.1;
const WEIGHT_FLOOR: f64 = 0.1;
const RANDOM_EDGE_SHARE: f64 = 0.2;
const POWER: f64 = 0.7;
/// Smallest target weight on a source edge, so support is preserved.
const MIN_TARGET: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
}

/// How the supervised target is derived from the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// `t = s + perturbation`
    Identity,
    /// `t = s^0.7 + perturbation`
    #[default]
    PowerPerturb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_graphs: usize,
    pub n: usize,
    pub modules: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub noise_sigma: f64,
    pub transform: Transform,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_graphs: 341,
            n: 35,
            modules: 4,
            p_in: 0.6,
            p_out: 0.15,
            noise_sigma: 0.05,
            transform: Transform::PowerPerturb,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.to_string()));
        if self.n < 2 {
            return bad("n must be at least 2");
        }
        if self.modules == 0 || self.modules > self.n {
            return bad("modules must be in 1..=n");
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            return bad("densities must lie in [0, 1]");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and nonnegative");
        }
        Ok(())
    }

    pub fn community(&self, v: usize) -> usize {
        v * self.modules / self.n
    }

    /// Expected edge count of one source graph.
    pub fn expected_edges(&self) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                e += if self.community(i) == self.community(j) {
                    self.p_in
                } else {
                    self.p_out
                };
            }
        }
        e
    }

    /// Zero-padded pair identifier, e.g. `g007`.
    pub fn id(&self, index: usize) -> String {
        let width = self.n_graphs.saturating_sub(1).to_string().len().max(3);
        format!("g{index:0width$}")
    }
}

fn quantize(x: f64) -> f64 {
    format_sig9(x).parse().expect("formatted float")
}

fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `q` with `P(u + v > q) = p` for independent `u, v ~ U(0, 1)`.
fn triangular_quantile(p: f64) -> f64 {
    if p <= 0.5 {
        2.0 - (2.0 * p).sqrt()
    } else {
        (2.0 * (1.0 - p)).sqrt()
    }
}

fn truncated(rng: &mut ChaCha8Rng, dist: &Normal<f64>) -> f64 {
    loop {
        let w = dist.sample(rng);
        if w > 0.0 && w <= 1.0 {
            return w;
        }
    }
}

/// A generated pair and the divisor that normalized its source.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub pair: GraphPair,
    pub scale_factor: f64,
}

/// Generates pair `index`; fully determined by `(cfg, index)`.
pub fn generate_pair(cfg: &SynthConfig, index: usize) -> Result<Generated, SynthError> {
    cfg.validate()?;
    let n = cfg.n;
    let mut rng = rng_for(cfg.seed, index);
    let propensity: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let morphology: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if cfg.community(i) == cfg.community(j) {
                cfg.p_in
            } else {
                cfg.p_out
            };
            let linked = if rng.random::<f64>() < RANDOM_EDGE_SHARE {
                rng.random::<f64>() < p
            } else {
                propensity[i] + propensity[j] > triangular_quantile(p)
            };
            if linked {
                let mean = WEIGHT_FLOOR
                    + (1.0 - WEIGHT_FLOOR) * (1.0 - (morphology[i] - morphology[j]).abs());
                let dist = Normal::new(mean, WEIGHT_SD).expect("valid normal");
                edges.push((i, j, truncated(&mut rng, &dist)));
            }
        }
    }
    let raw = WeightedGraph::from_edges(n, &edges)?;
    let (normalized, scale_factor) = raw.minmax_normalize();
    let source = WeightedGraph::from_dense(
        n,
        normalized.as_slice().iter().map(|&w| quantize(w)).collect(),
    )?;

    // Low-rank perturbation: each node carries a latent offset and an edge
    // moves by the mean of its endpoints' offsets.
    let offsets: Vec<f64> = (0..n)
        .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal) * cfg.noise_sigma)
        .collect();
    let mut target = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let s = source.weight(i, j);
            if s <= 0.0 {
                continue;
            }
            let base = match cfg.transform {
                Transform::Identity => s,
                Transform::PowerPerturb => s.powf(POWER),
            };
            let t = if cfg.noise_sigma == 0.0 {
                base
            } else {
                (base + 0.5 * (offsets[i] + offsets[j])).clamp(MIN_TARGET, 1.0)
            };
            let t = quantize(t);
            target[i * n + j] = t;
            target[j * n + i] = t;
        }
    }
    let target = WeightedGraph::from_dense(n, target)?;
    Ok(Generated {
        pair: GraphPair::new(cfg.id(index), source, target)?,
        scale_factor,
    })
}

/// Generates every pair of the dataset in index order.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<Vec<Generated>, SynthError> {
    cfg.validate()?;
    (0..cfg.n_graphs)
        .into_par_iter()
        .map(|i| generate_pair(cfg, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub ids: Vec<String>,
    pub seed: u64,
    pub cfg: SynthConfig,
    /// Divisor applied to each raw source graph, keyed like `ids`.
    pub scale_factors: Vec<f64>,
    /// Fold 0 is the held-out test set. Absent when there are too few pairs.
    pub folds: Option<Folds<String>>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, SynthError> {
        let text = fs::read_to_string(path).map_err(|e| io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn io(path: &Path, source: std::io::Error) -> SynthError {
    SynthError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `root/source/<id>.csv`, `root/target/<id>.csv` and
/// `root/manifest.json`. `root` itself is created if missing; its parent
/// must exist.
pub fn write_dataset(cfg: &SynthConfig, root: &Path) -> Result<Manifest, SynthError> {
    let data = generate_dataset(cfg)?;
    if !root.exists() {
        fs::create_dir(root).map_err(|e| io(root, e))?;
    }
    for sub in ["source", "target"] {
        let dir = root.join(sub);
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    }
    data.par_iter()
        .try_for_each(|g| -> Result<(), SynthError> {
            let file = format!("{}.csv", g.pair.id);
            g.pair.source.save(root.join("source").join(&file))?;
            g.pair.target.save(root.join("target").join(&file))?;
            Ok(())
        })?;
    let ids: Vec<String> = data.iter().map(|g| g.pair.id.clone()).collect();
    let manifest = Manifest {
        folds: kfold_split(&ids, MANIFEST_FOLDS, cfg.seed).ok(),
        ids,
        seed: cfg.seed,
        cfg: cfg.clone(),
        scale_factors: data.iter().map(|g| g.scale_factor).collect(),
    };
    let path = root.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| io(&path, e))?;
    Ok(manifest)
}
