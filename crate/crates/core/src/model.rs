//! The generator network: tree encoder, bipartite cross-tree aggregator,
//! and the two-branch pairwise decoder.
//!
//! Data flow for one source graph with `n` nodes and `m` subtrees:
//!
//! 1. every subtree is embedded by a shared GCN over its own tree adjacency,
//!    mean-pooled and projected affinely (`m x d_out` matrix `T`);
//! 2. node features (adjacency rows) and `T` are projected to a common width
//!    and propagated over the node/subtree membership graph;
//! 3. every node pair `i<j` gets the feature `[h_i | h_j | |h_i - h_j|]`,
//!    scored by a structure MLP (logit) and a weight MLP (sigmoid).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{Tape, Tensor, TensorError, Var};
use crate::graph::{normalize_adjacency, GraphError, WeightedGraph};
use crate::subtree::{extract_all, Subtree, SubtreeError};

/// Stand-in for a `-inf` self-loop logit.
pub const DIAG_LOGIT: f64 = -1e9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Subtree(#[from] SubtreeError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("graph has {found} nodes but the model expects {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("parameter {0} is missing")]
    MissingParam(String),
    #[error("parameter {name} has shape {found:?}, expected {expected:?}")]
    ParamShape {
        name: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Which decoder heads exist. The reduced variants reproduce the
/// branch-removal ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoderVariant {
    #[default]
    Full,
    /// No structure head: every off-diagonal logit is 0, so fusion keeps
    /// all weights.
    NoStructBranch,
    /// No weight head: the structure probability doubles as the weight.
    NoWeightBranch,
}

impl DecoderVariant {
    pub fn has_struct(self) -> bool {
        self != DecoderVariant::NoStructBranch
    }

    pub fn has_weight(self) -> bool {
        self != DecoderVariant::NoWeightBranch
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub d_hidden: usize,
    pub d_out: usize,
    pub layers_encoder: usize,
    pub layers_aggregator: usize,
    pub decoder_hidden: usize,
    pub variant: DecoderVariant,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n: 35,
            m: 15,
            k: 1,
            d_hidden: 32,
            d_out: 16,
            layers_encoder: 2,
            layers_aggregator: 2,
            decoder_hidden: 32,
            variant: DecoderVariant::Full,
        }
    }
}

impl ModelConfig {
    /// Six nodes, two subtrees, width four. Used for gradient checks.
    pub fn tiny() -> Self {
        Self {
            n: 6,
            m: 2,
            k: 1,
            d_hidden: 4,
            d_out: 4,
            layers_encoder: 2,
            layers_aggregator: 2,
            decoder_hidden: 4,
            variant: DecoderVariant::Full,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("n", self.n),
            ("m", self.m),
            ("k", self.k),
            ("d_hidden", self.d_hidden),
            ("d_out", self.d_out),
            ("layers_encoder", self.layers_encoder),
            ("layers_aggregator", self.layers_aggregator),
            ("decoder_hidden", self.decoder_hidden),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::Config(format!("{name} must be positive")));
        }
        if self.n < 2 {
            return Err(ModelError::Config("n must be at least 2".into()));
        }
        if self.m > self.n {
            return Err(ModelError::Config(format!(
                "m = {} exceeds n = {}",
                self.m, self.n
            )));
        }
        Ok(())
    }

    /// Layer widths `[in, hidden.., out]` for an `layers`-deep GCN stack.
    fn gcn_widths(&self, input: usize, layers: usize) -> Vec<usize> {
        let mut w = vec![input];
        w.extend(std::iter::repeat_n(self.d_hidden, layers - 1));
        w.push(self.d_out);
        w
    }

    /// Every trainable tensor as `(name, shape)`, in initialization order.
    pub fn param_shapes(&self) -> Vec<(String, (usize, usize))> {
        let d = self.d_out;
        let mut out = Vec::new();
        let enc = self.gcn_widths(self.n, self.layers_encoder);
        for l in 0..self.layers_encoder {
            out.push((format!("encoder.gcn.{l}.weight"), (enc[l], enc[l + 1])));
        }
        out.push(("encoder.proj.weight".into(), (d, d)));
        out.push(("encoder.proj.bias".into(), (1, d)));
        out.push(("aggregator.node_proj.weight".into(), (self.n, d)));
        out.push(("aggregator.tree_proj.weight".into(), (d, d)));
        let agg = self.gcn_widths(d, self.layers_aggregator);
        for l in 0..self.layers_aggregator {
            out.push((format!("aggregator.gcn.{l}.weight"), (agg[l], agg[l + 1])));
        }
        let mut heads = Vec::new();
        if self.variant.has_struct() {
            heads.push("struct");
        }
        if self.variant.has_weight() {
            heads.push("weight");
        }
        for head in heads {
            out.push((
                format!("decoder.{head}.fc1.weight"),
                (3 * d, self.decoder_hidden),
            ));
            out.push((format!("decoder.{head}.fc1.bias"), (1, self.decoder_hidden)));
            out.push((
                format!("decoder.{head}.fc2.weight"),
                (self.decoder_hidden, 1),
            ));
            out.push((format!("decoder.{head}.fc2.bias"), (1, 1)));
        }
        out
    }
}

/// All trainable tensors, keyed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    tensors: BTreeMap<String, Tensor>,
}

/// Glorot-uniform bound `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Glorot-uniform weights and zero biases, fully determined by `seed`.
pub fn init_params(config: &ModelConfig, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = BTreeMap::new();
    for (name, (rows, cols)) in config.param_shapes() {
        let t = if name.ends_with(".bias") {
            Tensor::zeros(rows, cols)
        } else {
            let b = glorot_bound(rows, cols);
            let data = (0..rows * cols).map(|_| rng.random_range(-b..b)).collect();
            Tensor::new(rows, cols, data).expect("shape")
        };
        tensors.insert(name, t);
    }
    ModelParams { tensors }
}

impl ModelParams {
    pub fn from_tensors(
        config: &ModelConfig,
        tensors: BTreeMap<String, Tensor>,
    ) -> Result<Self, ModelError> {
        let p = Self { tensors };
        p.check(config)?;
        Ok(p)
    }

    /// Verifies names and shapes against `config`.
    pub fn check(&self, config: &ModelConfig) -> Result<(), ModelError> {
        let shapes = config.param_shapes();
        for (name, shape) in &shapes {
            let t = self
                .tensors
                .get(name)
                .ok_or_else(|| ModelError::MissingParam(name.clone()))?;
            if t.shape() != *shape {
                return Err(ModelError::ParamShape {
                    name: name.clone(),
                    expected: *shape,
                    found: t.shape(),
                });
            }
            if !t.is_finite() {
                return Err(ModelError::Checkpoint(format!(
                    "{name} has non-finite entries"
                )));
            }
        }
        if shapes.len() != self.tensors.len() {
            let extra = self
                .tensors
                .keys()
                .find(|k| !shapes.iter().any(|(n, _)| n == *k))
                .cloned()
                .unwrap_or_default();
            return Err(ModelError::Checkpoint(format!(
                "unexpected parameter {extra}"
            )));
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor)> {
        self.tensors.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&String, &mut Tensor)> {
        self.tensors.iter_mut()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.tensors.keys()
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    /// All entries concatenated in name order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors
            .values()
            .flat_map(|t| t.data().iter().copied())
            .collect()
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn with_flat(&self, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), self.count());
        let mut offset = 0;
        let tensors = self
            .tensors
            .iter()
            .map(|(k, t)| {
                let data = flat[offset..offset + t.len()].to_vec();
                offset += t.len();
                (k.clone(), Tensor::new(t.rows(), t.cols(), data).unwrap())
            })
            .collect();
        Self { tensors }
    }

    /// Registers every tensor as a tape leaf.
    pub fn bind(&self, tape: &mut Tape) -> BoundParams {
        BoundParams {
            vars: self
                .tensors
                .iter()
                .map(|(k, t)| (k.clone(), tape.leaf(t.clone())))
                .collect(),
        }
    }
}

/// Tape handles for a [`ModelParams`] set.
#[derive(Debug, Clone)]
pub struct BoundParams {
    vars: BTreeMap<String, Var>,
}

impl BoundParams {
    pub fn var(&self, name: &str) -> Result<Var, ModelError> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::MissingParam(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }
}

/// Node/subtree membership graph. Rows `0..n` are graph nodes, rows
/// `n..n+m` are subtrees.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    pub n: usize,
    pub m: usize,
    /// `(n+m) x (n+m)` symmetric 0/1 matrix, row-major.
    pub adj: Vec<f64>,
}

impl BipartiteGraph {
    pub fn size(&self) -> usize {
        self.n + self.m
    }

    pub fn edge_count(&self) -> usize {
        let s = self.size();
        (0..s)
            .map(|i| ((i + 1)..s).filter(|&j| self.adj[i * s + j] != 0.0).count())
            .sum()
    }

    pub fn has_edge(&self, node: usize, tree: usize) -> bool {
        self.adj[node * self.size() + self.n + tree] != 0.0
    }
}

pub fn build_bipartite(n: usize, trees: &[Subtree]) -> BipartiteGraph {
    let m = trees.len();
    let s = n + m;
    let mut adj = vec![0.0; s * s];
    for (k, t) in trees.iter().enumerate() {
        for &v in &t.nodes {
            assert!(v < n, "subtree node {v} out of range");
            adj[v * s + n + k] = 1.0;
            adj[(n + k) * s + v] = 1.0;
        }
    }
    BipartiteGraph { n, m, adj }
}

/// Per-subtree encoder inputs.
#[derive(Debug, Clone)]
pub struct TreeInput {
    /// Normalized tree adjacency over the subtree's local node order.
    pub a_norm: Tensor,
    /// Adjacency rows of the subtree's nodes, `len x n`.
    pub features: Tensor,
}

impl TreeInput {
    pub fn new(t: &Subtree, g: &WeightedGraph) -> Self {
        let k = t.len();
        let a_norm = Tensor::new(k, k, normalize_adjacency(k, &t.local_adjacency())).unwrap();
        let mut data = Vec::with_capacity(k * g.n());
        for &v in &t.nodes {
            data.extend_from_slice(g.row(v));
        }
        let features = Tensor::new(k, g.n(), data).unwrap();
        Self { a_norm, features }
    }
}

/// Everything about a source graph the forward pass needs, computed once.
#[derive(Debug, Clone)]
pub struct PreparedGraph {
    pub n: usize,
    pub features: Tensor,
    pub trees: Vec<Subtree>,
    pub tree_inputs: Vec<TreeInput>,
    pub bipartite: BipartiteGraph,
    pub bip_norm: Tensor,
}

impl PreparedGraph {
    pub fn new(g: &WeightedGraph, config: &ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        if g.n() != config.n {
            return Err(ModelError::SizeMismatch {
                expected: config.n,
                found: g.n(),
            });
        }
        let trees = extract_all(g, config.m, config.k)?;
        Ok(Self::from_trees(g, trees))
    }

    /// Uses the given subtrees instead of extracting them.
    pub fn from_trees(g: &WeightedGraph, trees: Vec<Subtree>) -> Self {
        let n = g.n();
        let tree_inputs = trees.iter().map(|t| TreeInput::new(t, g)).collect();
        let bipartite = build_bipartite(n, &trees);
        let s = bipartite.size();
        let bip_norm = Tensor::new(s, s, normalize_adjacency(s, &bipartite.adj)).unwrap();
        Self {
            n,
            features: Tensor::new(n, n, g.as_slice().to_vec()).unwrap(),
            trees,
            tree_inputs,
            bipartite,
            bip_norm,
        }
    }
}

/// `relu(a_norm · h · w)`.
pub fn gcn_layer(tape: &mut Tape, a_norm: Var, h: Var, w: Var) -> Result<Var, ModelError> {
    let hw = tape.matmul(h, w)?;
    let ahw = tape.matmul(a_norm, hw)?;
    Ok(tape.relu(ahw)?)
}

/// Embeds one subtree as a `1 x d_out` row.
pub fn encode_subtree(
    tape: &mut Tape,
    input: &TreeInput,
    params: &BoundParams,
    config: &ModelConfig,
) -> Result<Var, ModelError> {
    let a = tape.constant(input.a_norm.clone());
    let mut h = tape.constant(input.features.clone());
    for l in 0..config.layers_encoder {
        let w = params.var(&format!("encoder.gcn.{l}.weight"))?;
        h = gcn_layer(tape, a, h, w)?;
    }
    let pooled = tape.mean_rows(h)?;
    let projected = tape.matmul(pooled, params.var("encoder.proj.weight")?)?;
    Ok(tape.add_rowvec(projected, params.var("encoder.proj.bias")?)?)
}

/// Stacks subtree embeddings into an `m x d_out` matrix.
pub fn encode_all(
    tape: &mut Tape,
    inputs: &[TreeInput],
    params: &BoundParams,
    config: &ModelConfig,
) -> Result<Var, ModelError> {
    let rows = inputs
        .iter()
        .map(|t| encode_subtree(tape, t, params, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(tape.concat_rows(&rows)?)
}

/// Message passing over the membership graph. Returns `(h_node, h_tree)`.
pub fn aggregate(
    tape: &mut Tape,
    bip_norm: &Tensor,
    features: Var,
    trees: Var,
    params: &BoundParams,
    config: &ModelConfig,
) -> Result<(Var, Var), ModelError> {
    let n = tape.shape(features).0;
    let m = tape.shape(trees).0;
    if bip_norm.shape() != (n + m, n + m) {
        return Err(TensorError::ShapeMismatch {
            op: "aggregate",
            left: bip_norm.shape(),
            right: (n + m, n + m),
        }
        .into());
    }
    let xn = tape.matmul(features, params.var("aggregator.node_proj.weight")?)?;
    let xt = tape.matmul(trees, params.var("aggregator.tree_proj.weight")?)?;
    let mut h = tape.concat_rows(&[xn, xt])?;
    let a = tape.constant(bip_norm.clone());
    for l in 0..config.layers_aggregator {
        let w = params.var(&format!("aggregator.gcn.{l}.weight"))?;
        h = gcn_layer(tape, a, h, w)?;
    }
    let h_node = tape.slice_rows(h, 0, n)?;
    let h_tree = tape.slice_rows(h, n, m)?;
    Ok((h_node, h_tree))
}

/// Index lists `(I, J)` enumerating pairs `i<j` lexicographically.
pub fn pair_indices(n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut is = Vec::with_capacity(n * (n - 1) / 2);
    let mut js = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            is.push(i);
            js.push(j);
        }
    }
    (is, js)
}

/// `[h_i | h_j | |h_i - h_j|]` for each pair `i<j`.
pub fn pair_features(tape: &mut Tape, h: Var) -> Result<Var, ModelError> {
    let n = tape.shape(h).0;
    if n < 2 {
        return Err(ModelError::Config(
            "pair features need at least two nodes".into(),
        ));
    }
    let (is, js) = pair_indices(n);
    let hi = tape.gather_rows(h, &is)?;
    let hj = tape.gather_rows(h, &js)?;
    let diff = tape.sub(hi, hj)?;
    let adiff = tape.abs(diff)?;
    Ok(tape.concat_cols(&[hi, hj, adiff])?)
}

fn mlp_head(
    tape: &mut Tape,
    phi: Var,
    params: &BoundParams,
    head: &str,
) -> Result<Var, ModelError> {
    let w1 = params.var(&format!("decoder.{head}.fc1.weight"))?;
    let b1 = params.var(&format!("decoder.{head}.fc1.bias"))?;
    let w2 = params.var(&format!("decoder.{head}.fc2.weight"))?;
    let b2 = params.var(&format!("decoder.{head}.fc2.bias"))?;
    let z = tape.matmul(phi, w1)?;
    let z = tape.add_rowvec(z, b1)?;
    let z = tape.relu(z)?;
    let z = tape.matmul(z, w2)?;
    Ok(tape.add_rowvec(z, b2)?)
}

/// Tape handles for the decoder outputs, both `n x n`.
#[derive(Debug, Clone, Copy)]
pub struct DecoderOutput {
    pub logits: Var,
    pub weights: Var,
}

pub fn decode(
    tape: &mut Tape,
    h_node: Var,
    params: &BoundParams,
    config: &ModelConfig,
) -> Result<DecoderOutput, ModelError> {
    let n = tape.shape(h_node).0;
    let phi = pair_features(tape, h_node)?;
    let struct_out = if config.variant.has_struct() {
        Some(mlp_head(tape, phi, params, "struct")?)
    } else {
        None
    };
    let logits = match struct_out {
        Some(s) => tape.symmetrize_pairs(s, n, DIAG_LOGIT)?,
        None => {
            let mut t = Tensor::zeros(n, n);
            for i in 0..n {
                t.set(i, i, DIAG_LOGIT);
            }
            tape.constant(t)
        }
    };
    let weight_src = if config.variant.has_weight() {
        mlp_head(tape, phi, params, "weight")?
    } else {
        struct_out.expect("a decoder keeps at least one branch")
    };
    let squashed = tape.sigmoid(weight_src)?;
    let weights = tape.symmetrize_pairs(squashed, n, 0.0)?;
    Ok(DecoderOutput { logits, weights })
}

/// Output handles of a full forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardOutput {
    pub logits: Var,
    pub weights: Var,
    pub h_node: Var,
    pub h_tree: Var,
    pub trees: Var,
}

pub fn forward(
    tape: &mut Tape,
    prepared: &PreparedGraph,
    params: &BoundParams,
    config: &ModelConfig,
) -> Result<ForwardOutput, ModelError> {
    if prepared.n != config.n {
        return Err(ModelError::SizeMismatch {
            expected: config.n,
            found: prepared.n,
        });
    }
    let trees = encode_all(tape, &prepared.tree_inputs, params, config)?;
    let features = tape.constant(prepared.features.clone());
    let (h_node, h_tree) = aggregate(tape, &prepared.bip_norm, features, trees, params, config)?;
    let out = decode(tape, h_node, params, config)?;
    Ok(ForwardOutput {
        logits: out.logits,
        weights: out.weights,
        h_node,
        h_tree,
        trees,
    })
}

/// Decoder heads plus their fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedGraph {
    pub logits: Tensor,
    pub weights: Tensor,
    /// `weights[i][j]` where `sigmoid(logits[i][j]) >= 0.5`, else 0.
    pub fused: WeightedGraph,
}

impl DecodedGraph {
    pub fn from_heads(logits: Tensor, weights: Tensor) -> Result<Self, ModelError> {
        let n = logits.rows();
        let fused: Vec<f64> = logits
            .data()
            .iter()
            .zip(weights.data())
            .map(|(&l, &w)| if l >= 0.0 { w } else { 0.0 })
            .collect();
        let fused = WeightedGraph::from_dense(n, fused)?;
        Ok(Self {
            logits,
            weights,
            fused,
        })
    }

    pub fn n(&self) -> usize {
        self.logits.rows()
    }

    /// The weight head alone, as a graph.
    pub fn raw(&self) -> Result<WeightedGraph, GraphError> {
        WeightedGraph::from_dense(self.n(), self.weights.data().to_vec())
    }
}

/// Runs the full pipeline on `g`.
pub fn predict(
    g: &WeightedGraph,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<DecodedGraph, ModelError> {
    let prepared = PreparedGraph::new(g, config)?;
    predict_prepared(&prepared, params, config)
}

pub fn predict_prepared(
    prepared: &PreparedGraph,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<DecodedGraph, ModelError> {
    let mut tape = Tape::new();
    let bound = params.bind(&mut tape);
    let out = forward(&mut tape, prepared, &bound, config)?;
    DecodedGraph::from_heads(
        tape.value(out.logits).clone(),
        tape.value(out.weights).clone(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorRecord {
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

/// On-disk parameter snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub seed: u64,
    pub tensors: BTreeMap<String, TensorRecord>,
}

impl Checkpoint {
    pub fn new(config: &ModelConfig, seed: u64, params: &ModelParams) -> Self {
        let tensors = params
            .iter()
            .map(|(k, t)| {
                (
                    k.clone(),
                    TensorRecord {
                        shape: [t.rows(), t.cols()],
                        data: t.data().to_vec(),
                    },
                )
            })
            .collect();
        Self {
            config: config.clone(),
            seed,
            tensors,
        }
    }

    pub fn params(&self) -> Result<ModelParams, ModelError> {
        let tensors = self
            .tensors
            .iter()
            .map(|(k, r)| {
                Tensor::new(r.shape[0], r.shape[1], r.data.clone())
                    .map(|t| (k.clone(), t))
                    .map_err(|e| ModelError::Checkpoint(format!("{k}: {e}")))
            })
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        ModelParams::from_tensors(&self.config, tensors)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let c: Checkpoint =
            serde_json::from_str(text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        c.config.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        crate::graph::write_text(path, &self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = fs::read_to_string(path).map_err(|e| GraphError::io(path, e))?;
        Self::from_json(&text)
    }
}
