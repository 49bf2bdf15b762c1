//! Pointer-network ranking model over operation paths.
//!
//! Per candidate, the model embeds the leaf's sub-tokens (summed rows of a
//! learned matrix), the AST path (final states of a bi-directional LSTM over
//! node-kind embeddings), and the change operator (one learned row). The
//! concatenation passes a fully-connected tanh layer, then an LSTM
//! encoder-decoder over the candidate sequence; attention between encoder
//! and decoder states yields one score per candidate, and a softmax turns
//! the scores into the ranking distribution.

mod forward;
mod gradcheck;
mod train;
#[cfg(test)]
mod tests;

pub use forward::{embed_operation_path, forward, loss, predict_ranked, EmbeddedPath, PredictScope};
pub use gradcheck::{gradient_check, GradCheckReport};
pub use train::{train, train_with_config, EpochStat, TrainConfig, Trainer};

use crate::diff::OperationPath;
use crate::lang::{split_subtokens, NodeKind};
use crate::rng::Rng;
use crate::tensor::{checkpoint, Tensor, TensorError};
use crate::PatchRecord;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

/// Architecture switches for the ablation variants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationFlags {
    /// Feed whole tokens to the token embedding instead of sub-tokens.
    #[serde(default)]
    pub no_token_split: bool,
    /// Replace the path LSTM with one learned row per distinct kind chain.
    #[serde(default)]
    pub whole_path_embedding: bool,
    /// Drop the fully-connected fusion layer; the encoder consumes the raw
    /// concatenation.
    #[serde(default)]
    pub no_fc_layer: bool,
}

/// Model and training hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Token embedding width.
    pub d_t: usize,
    /// Path-node embedding width; each LSTM direction also uses this width.
    pub d_p: usize,
    /// Operator embedding width.
    pub d_o: usize,
    /// Fused width used by the encoder, decoder, and attention.
    pub d_hidden: usize,
    /// Maximum AST path length kept (leaf end wins).
    pub max_l: usize,
    /// Maximum operation paths fed to the network at once.
    pub max_k: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub ablation: AblationFlags,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            d_t: 128,
            d_p: 128,
            d_o: 128,
            d_hidden: 128,
            max_l: 15,
            max_k: 150,
            lr: 0.001,
            epochs: 40,
            batch_size: 128,
            ablation: AblationFlags::default(),
        }
    }
}

impl HyperParams {
    /// Width of the concatenated per-path representation.
    pub fn concat_width(&self) -> usize {
        self.d_t + 2 * self.d_p + self.d_o
    }

    /// Width of the sequence the encoder consumes.
    pub fn encoder_input_width(&self) -> usize {
        if self.ablation.no_fc_layer {
            self.concat_width()
        } else {
            self.d_hidden
        }
    }
}

/// Lookup tables for sub-tokens (index 0 reserved for unknowns), node
/// kinds (fixed), operators (fixed), and — for the whole-path ablation —
/// distinct truncated kind chains (index 0 reserved).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocab {
    subtokens: Vec<String>,
    paths: Vec<String>,
    no_token_split: bool,
    #[serde(skip)]
    sub_index: HashMap<String, usize>,
    #[serde(skip)]
    path_index: HashMap<String, usize>,
}

pub const UNK: usize = 0;

impl Vocab {
    /// Build from training records: tokens of every buggy method, in record
    /// and leaf order, so the same data always yields the same indices.
    pub fn build(records: &[PatchRecord], hp: &HyperParams) -> Result<Vocab, ModelError> {
        let mut vocab = Vocab {
            subtokens: vec!["<unk>".to_string()],
            paths: vec!["<unk>".to_string()],
            no_token_split: hp.ablation.no_token_split,
            sub_index: HashMap::new(),
            path_index: HashMap::new(),
        };
        vocab.rebuild_indices();
        for record in records {
            let ast = crate::lang::parse(&record.buggy_src).map_err(ModelError::Syntax)?;
            for i in 0..ast.leaf_count() {
                for part in vocab.parts_of(ast.leaf_token(i)) {
                    if !vocab.sub_index.contains_key(&part) {
                        vocab.sub_index.insert(part.clone(), vocab.subtokens.len());
                        vocab.subtokens.push(part);
                    }
                }
                if hp.ablation.whole_path_embedding {
                    let key = Self::path_key(ast.path_of_leaf(i).truncated_kinds(hp.max_l));
                    if !vocab.path_index.contains_key(&key) {
                        vocab.path_index.insert(key.clone(), vocab.paths.len());
                        vocab.paths.push(key);
                    }
                }
            }
        }
        Ok(vocab)
    }

    fn parts_of(&self, token: &str) -> Vec<String> {
        if self.no_token_split {
            vec![token.to_string()]
        } else {
            split_subtokens(token)
        }
    }

    fn path_key(kinds: &[NodeKind]) -> String {
        let names: Vec<String> = kinds.iter().map(|k| k.to_string()).collect();
        names.join(">")
    }

    /// Restore the lookup maps after deserialization.
    pub fn rebuild_indices(&mut self) {
        self.sub_index = self
            .subtokens
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        self.path_index = self
            .paths
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
    }

    /// Embedding rows for a token; unknown parts map to [`UNK`].
    pub fn token_rows(&self, token: &str) -> Vec<usize> {
        self.parts_of(token)
            .into_iter()
            .map(|p| self.sub_index.get(&p).copied().unwrap_or(UNK))
            .collect()
    }

    /// Embedding row for a truncated kind chain (whole-path ablation).
    pub fn path_row(&self, kinds: &[NodeKind]) -> usize {
        self.path_index
            .get(&Self::path_key(kinds))
            .copied()
            .unwrap_or(UNK)
    }

    pub fn subtoken_count(&self) -> usize {
        self.subtokens.len()
    }

    pub fn path_count(&self) -> usize {
        self.paths.len()
    }
}

/// One LSTM's weights: per-gate input matrices over `[x; h]` and biases.
#[derive(Debug, Clone)]
pub struct LstmParams {
    pub w_i: Tensor,
    pub w_f: Tensor,
    pub w_o: Tensor,
    pub w_g: Tensor,
    pub b_i: Tensor,
    pub b_f: Tensor,
    pub b_o: Tensor,
    pub b_g: Tensor,
}

impl LstmParams {
    fn init(input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let mut w = || init_tensor(&[hidden, input + hidden], input + hidden, rng);
        LstmParams {
            w_i: w(),
            w_f: w(),
            w_o: w(),
            w_g: w(),
            b_i: Tensor::zeros(&[hidden]),
            b_f: Tensor::zeros(&[hidden]),
            b_o: Tensor::zeros(&[hidden]),
            b_g: Tensor::zeros(&[hidden]),
        }
    }

    fn zeros(input: usize, hidden: usize) -> Self {
        LstmParams {
            w_i: Tensor::zeros(&[hidden, input + hidden]),
            w_f: Tensor::zeros(&[hidden, input + hidden]),
            w_o: Tensor::zeros(&[hidden, input + hidden]),
            w_g: Tensor::zeros(&[hidden, input + hidden]),
            b_i: Tensor::zeros(&[hidden]),
            b_f: Tensor::zeros(&[hidden]),
            b_o: Tensor::zeros(&[hidden]),
            b_g: Tensor::zeros(&[hidden]),
        }
    }

    pub fn hidden_width(&self) -> usize {
        self.b_i.shape()[0]
    }
}

fn init_tensor(shape: &[usize], fan_in: usize, rng: &mut Rng) -> Tensor {
    let width = 1.0 / (fan_in as f64).sqrt();
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| rng.next_symmetric(width)).collect();
    Tensor::from_vec(shape, data)
}

/// Every learnable tensor of the model.
#[derive(Debug, Clone)]
pub struct ModelParams {
    /// Sub-token embeddings, `[vocab, d_t]`.
    pub e_t: Tensor,
    /// Operator embeddings, `[3, d_o]`.
    pub e_o: Tensor,
    /// Node-kind embeddings, `[kind count, d_p]`.
    pub e_p: Tensor,
    /// Whole-path embeddings, `[path vocab, 2*d_p]`; only for the ablation.
    pub e_paths: Option<Tensor>,
    pub path_fwd: LstmParams,
    pub path_bwd: LstmParams,
    /// Fusion weight, stored `[d_hidden, d_t + 2*d_p + d_o]` so that
    /// `w_in . concat` is a matrix-vector product.
    pub w_in: Tensor,
    pub enc: LstmParams,
    pub dec: LstmParams,
    /// Attention parameters: score_j = v . tanh(w1 e_j + w2 b_j).
    pub v: Tensor,
    pub w1: Tensor,
    pub w2: Tensor,
}

impl ModelParams {
    pub fn init(hp: &HyperParams, vocab: &Vocab, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let e_paths = if hp.ablation.whole_path_embedding {
            Some(init_tensor(
                &[vocab.path_count(), 2 * hp.d_p],
                2 * hp.d_p,
                &mut rng,
            ))
        } else {
            None
        };
        ModelParams {
            e_t: init_tensor(&[vocab.subtoken_count(), hp.d_t], hp.d_t, &mut rng),
            e_o: init_tensor(&[3, hp.d_o], hp.d_o, &mut rng),
            e_p: init_tensor(&[NodeKind::COUNT, hp.d_p], hp.d_p, &mut rng),
            e_paths,
            path_fwd: LstmParams::init(hp.d_p, hp.d_p, &mut rng),
            path_bwd: LstmParams::init(hp.d_p, hp.d_p, &mut rng),
            w_in: init_tensor(&[hp.d_hidden, hp.concat_width()], hp.concat_width(), &mut rng),
            enc: LstmParams::init(hp.encoder_input_width(), hp.d_hidden, &mut rng),
            dec: LstmParams::init(hp.d_hidden, hp.d_hidden, &mut rng),
            v: init_tensor(&[hp.d_hidden], hp.d_hidden, &mut rng),
            w1: init_tensor(&[hp.d_hidden, hp.d_hidden], hp.d_hidden, &mut rng),
            w2: init_tensor(&[hp.d_hidden, hp.d_hidden], hp.d_hidden, &mut rng),
        }
    }

    /// All-zero parameters; with these, every input ranks uniformly.
    pub fn zeros(hp: &HyperParams, vocab: &Vocab) -> Self {
        let e_paths = if hp.ablation.whole_path_embedding {
            Some(Tensor::zeros(&[vocab.path_count(), 2 * hp.d_p]))
        } else {
            None
        };
        ModelParams {
            e_t: Tensor::zeros(&[vocab.subtoken_count(), hp.d_t]),
            e_o: Tensor::zeros(&[3, hp.d_o]),
            e_p: Tensor::zeros(&[NodeKind::COUNT, hp.d_p]),
            e_paths,
            path_fwd: LstmParams::zeros(hp.d_p, hp.d_p),
            path_bwd: LstmParams::zeros(hp.d_p, hp.d_p),
            w_in: Tensor::zeros(&[hp.d_hidden, hp.concat_width()]),
            enc: LstmParams::zeros(hp.encoder_input_width(), hp.d_hidden),
            dec: LstmParams::zeros(hp.d_hidden, hp.d_hidden),
            v: Tensor::zeros(&[hp.d_hidden]),
            w1: Tensor::zeros(&[hp.d_hidden, hp.d_hidden]),
            w2: Tensor::zeros(&[hp.d_hidden, hp.d_hidden]),
        }
    }

    /// Named tensors in the canonical (checkpoint and optimizer) order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out: Vec<(String, &Tensor)> = Vec::new();
        out.push(("e_t".into(), &self.e_t));
        out.push(("e_o".into(), &self.e_o));
        out.push(("e_p".into(), &self.e_p));
        if let Some(ep) = &self.e_paths {
            out.push(("e_paths".into(), ep));
        }
        for (prefix, lstm) in [
            ("path_fwd", &self.path_fwd),
            ("path_bwd", &self.path_bwd),
            ("enc", &self.enc),
            ("dec", &self.dec),
        ] {
            out.push((format!("{prefix}.w_i"), &lstm.w_i));
            out.push((format!("{prefix}.w_f"), &lstm.w_f));
            out.push((format!("{prefix}.w_o"), &lstm.w_o));
            out.push((format!("{prefix}.w_g"), &lstm.w_g));
            out.push((format!("{prefix}.b_i"), &lstm.b_i));
            out.push((format!("{prefix}.b_f"), &lstm.b_f));
            out.push((format!("{prefix}.b_o"), &lstm.b_o));
            out.push((format!("{prefix}.b_g"), &lstm.b_g));
        }
        out.push(("w_in".into(), &self.w_in));
        out.push(("v".into(), &self.v));
        out.push(("w1".into(), &self.w1));
        out.push(("w2".into(), &self.w2));
        out
    }

    /// Named mutable tensors, same order as [`Self::named_tensors`].
    pub fn named_tensors_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let ModelParams {
            e_t,
            e_o,
            e_p,
            e_paths,
            path_fwd,
            path_bwd,
            w_in,
            enc,
            dec,
            v,
            w1,
            w2,
        } = self;
        let mut out: Vec<(String, &mut Tensor)> = Vec::new();
        out.push(("e_t".into(), e_t));
        out.push(("e_o".into(), e_o));
        out.push(("e_p".into(), e_p));
        if let Some(ep) = e_paths.as_mut() {
            out.push(("e_paths".into(), ep));
        }
        for (prefix, lstm) in [
            ("path_fwd", path_fwd),
            ("path_bwd", path_bwd),
            ("enc", enc),
            ("dec", dec),
        ] {
            out.push((format!("{prefix}.w_i"), &mut lstm.w_i));
            out.push((format!("{prefix}.w_f"), &mut lstm.w_f));
            out.push((format!("{prefix}.w_o"), &mut lstm.w_o));
            out.push((format!("{prefix}.w_g"), &mut lstm.w_g));
            out.push((format!("{prefix}.b_i"), &mut lstm.b_i));
            out.push((format!("{prefix}.b_f"), &mut lstm.b_f));
            out.push((format!("{prefix}.b_o"), &mut lstm.b_o));
            out.push((format!("{prefix}.b_g"), &mut lstm.b_g));
        }
        out.push(("w_in".into(), w_in));
        out.push(("v".into(), v));
        out.push(("w1".into(), w1));
        out.push(("w2".into(), w2));
        out
    }

    /// Mutable access by canonical name.
    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        let (prefix, field) = match name.split_once('.') {
            Some((p, f)) => (p, f),
            None => {
                return match name {
                    "e_t" => Some(&mut self.e_t),
                    "e_o" => Some(&mut self.e_o),
                    "e_p" => Some(&mut self.e_p),
                    "e_paths" => self.e_paths.as_mut(),
                    "w_in" => Some(&mut self.w_in),
                    "v" => Some(&mut self.v),
                    "w1" => Some(&mut self.w1),
                    "w2" => Some(&mut self.w2),
                    _ => None,
                }
            }
        };
        let lstm = match prefix {
            "path_fwd" => &mut self.path_fwd,
            "path_bwd" => &mut self.path_bwd,
            "enc" => &mut self.enc,
            "dec" => &mut self.dec,
            _ => return None,
        };
        match field {
            "w_i" => Some(&mut lstm.w_i),
            "w_f" => Some(&mut lstm.w_f),
            "w_o" => Some(&mut lstm.w_o),
            "w_g" => Some(&mut lstm.w_g),
            "b_i" => Some(&mut lstm.b_i),
            "b_f" => Some(&mut lstm.b_f),
            "b_o" => Some(&mut lstm.b_o),
            "b_g" => Some(&mut lstm.b_g),
            _ => None,
        }
    }
}

/// One ranked candidate.
#[derive(Debug, Clone)]
pub struct RankedEntry {
    pub op: OperationPath,
    pub probability: f64,
    pub score: f64,
}

/// Descending-probability ranking over a method's candidates. Ties break by
/// `(leaf_index, operator)`, so the order is total and reproducible.
#[derive(Debug, Clone)]
pub struct RankedPrediction {
    pub entries: Vec<RankedEntry>,
}

impl RankedPrediction {
    pub(crate) fn from_scored(mut entries: Vec<RankedEntry>) -> Self {
        entries.sort_by(|a, b| {
            b.probability
                .partial_cmp(&a.probability)
                .unwrap()
                .then_with(|| a.op.leaf_index().cmp(&b.op.leaf_index()))
                .then_with(|| a.op.operator.index().cmp(&b.op.operator.index()))
        });
        RankedPrediction { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug)]
pub enum ModelError {
    TooManyPaths { k: usize, max_k: usize },
    LengthMismatch { predictions: usize, labels: usize },
    EmptyDataset,
    EmptyScope { line: u32 },
    Syntax(crate::lang::SyntaxError),
    Tensor(TensorError),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::TooManyPaths { k, max_k } => {
                write!(f, "{} operation paths exceed max_k = {}", k, max_k)
            }
            ModelError::LengthMismatch { predictions, labels } => {
                write!(f, "{} predictions vs {} labels", predictions, labels)
            }
            ModelError::EmptyDataset => write!(f, "empty training dataset"),
            ModelError::EmptyScope { line } => {
                write!(f, "no leaf tokens on line {}", line)
            }
            ModelError::Syntax(e) => write!(f, "{}", e),
            ModelError::Tensor(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for ModelError {}

impl From<TensorError> for ModelError {
    fn from(e: TensorError) -> Self {
        ModelError::Tensor(e)
    }
}

impl From<crate::lang::SyntaxError> for ModelError {
    fn from(e: crate::lang::SyntaxError) -> Self {
        ModelError::Syntax(e)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    hyper_params: HyperParams,
    vocab: Vocab,
}

/// Write parameters, hyper-parameters, and vocabulary as one checkpoint.
pub fn save_checkpoint<W: Write>(
    w: W,
    params: &ModelParams,
    hp: &HyperParams,
    vocab: &Vocab,
) -> std::io::Result<()> {
    let meta = serde_json::to_string(&CheckpointMeta {
        hyper_params: hp.clone(),
        vocab: vocab.clone(),
    })?;
    let named = params.named_tensors();
    checkpoint::write_container(w, &meta, &named)
}

/// Read a checkpoint back. Shapes are validated against the restored
/// hyper-parameters by reconstruction.
pub fn load_checkpoint<R: Read>(r: R) -> std::io::Result<(ModelParams, HyperParams, Vocab)> {
    let (meta, tensors) = checkpoint::read_container(r)?;
    let meta: CheckpointMeta = serde_json::from_str(&meta)?;
    let mut vocab = meta.vocab;
    vocab.rebuild_indices();
    let hp = meta.hyper_params;
    let mut params = ModelParams::zeros(&hp, &vocab);
    for (name, tensor) in tensors {
        match params.tensor_mut(&name) {
            Some(slot) => {
                if slot.shape() != tensor.shape() {
                    return Err(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!(
                            "tensor '{}' has shape {:?}, expected {:?}",
                            name,
                            tensor.shape(),
                            slot.shape()
                        ),
                    ));
                }
                *slot = tensor;
            }
            None => {
                return Err(std::io::Error::new(
                    std::io::ErrorKind::InvalidData,
                    format!("unknown tensor '{}' in checkpoint", name),
                ));
            }
        }
    }
    Ok((params, hp, vocab))
}
