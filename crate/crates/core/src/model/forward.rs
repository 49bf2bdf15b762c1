//! Graph construction for the forward pass, the pointer scores, and ranked
//! prediction (with window merging for methods above `max_k`).

use super::{HyperParams, LstmParams, ModelError, ModelParams, RankedEntry, RankedPrediction, Vocab};
use crate::diff::{enumerate_operation_paths, OperationPath};
use crate::lang::parse;
use crate::tensor::{Graph, NodeId, Tensor};
use std::collections::HashMap;

pub(crate) struct BoundLstm {
    w_i: NodeId,
    w_f: NodeId,
    w_o: NodeId,
    w_g: NodeId,
    b_i: NodeId,
    b_f: NodeId,
    b_o: NodeId,
    b_g: NodeId,
}

fn bind_lstm<'p>(g: &mut Graph<'p>, prefix: &str, p: &'p LstmParams) -> BoundLstm {
    BoundLstm {
        w_i: g.parameter(&format!("{prefix}.w_i"), &p.w_i),
        w_f: g.parameter(&format!("{prefix}.w_f"), &p.w_f),
        w_o: g.parameter(&format!("{prefix}.w_o"), &p.w_o),
        w_g: g.parameter(&format!("{prefix}.w_g"), &p.w_g),
        b_i: g.parameter(&format!("{prefix}.b_i"), &p.b_i),
        b_f: g.parameter(&format!("{prefix}.b_f"), &p.b_f),
        b_o: g.parameter(&format!("{prefix}.b_o"), &p.b_o),
        b_g: g.parameter(&format!("{prefix}.b_g"), &p.b_g),
    }
}

pub(crate) struct Bound {
    e_t: NodeId,
    e_o: NodeId,
    e_p: NodeId,
    e_paths: Option<NodeId>,
    path_fwd: BoundLstm,
    path_bwd: BoundLstm,
    enc: BoundLstm,
    dec: BoundLstm,
    w_in: NodeId,
    v: NodeId,
    w1: NodeId,
    w2: NodeId,
}

/// Bind every parameter tensor into the graph, in the canonical
/// `named_tensors` order so gradient vectors align by index.
pub(crate) fn bind<'p>(g: &mut Graph<'p>, p: &'p ModelParams) -> Bound {
    let e_t = g.parameter("e_t", &p.e_t);
    let e_o = g.parameter("e_o", &p.e_o);
    let e_p = g.parameter("e_p", &p.e_p);
    let e_paths = p.e_paths.as_ref().map(|t| g.parameter("e_paths", t));
    let path_fwd = bind_lstm(g, "path_fwd", &p.path_fwd);
    let path_bwd = bind_lstm(g, "path_bwd", &p.path_bwd);
    let enc = bind_lstm(g, "enc", &p.enc);
    let dec = bind_lstm(g, "dec", &p.dec);
    let w_in = g.parameter("w_in", &p.w_in);
    let v = g.parameter("v", &p.v);
    let w1 = g.parameter("w1", &p.w1);
    let w2 = g.parameter("w2", &p.w2);
    Bound {
        e_t,
        e_o,
        e_p,
        e_paths,
        path_fwd,
        path_bwd,
        enc,
        dec,
        w_in,
        v,
        w1,
        w2,
    }
}

fn lstm_step(
    g: &mut Graph<'_>,
    lstm: &BoundLstm,
    x: NodeId,
    h: NodeId,
    c: NodeId,
) -> Result<(NodeId, NodeId), ModelError> {
    let xs = g.concat(&[x, h])?;
    let pre_i = g.matmul(lstm.w_i, xs)?;
    let pre_i = g.add(pre_i, lstm.b_i)?;
    let gate_i = g.sigmoid(pre_i);
    let pre_f = g.matmul(lstm.w_f, xs)?;
    let pre_f = g.add(pre_f, lstm.b_f)?;
    let gate_f = g.sigmoid(pre_f);
    let pre_o = g.matmul(lstm.w_o, xs)?;
    let pre_o = g.add(pre_o, lstm.b_o)?;
    let gate_o = g.sigmoid(pre_o);
    let pre_g = g.matmul(lstm.w_g, xs)?;
    let pre_g = g.add(pre_g, lstm.b_g)?;
    let cell_in = g.tanh(pre_g);
    let keep = g.mul(gate_f, c)?;
    let write = g.mul(gate_i, cell_in)?;
    let c_next = g.add(keep, write)?;
    let c_act = g.tanh(c_next);
    let h_next = g.mul(gate_o, c_act)?;
    Ok((h_next, c_next))
}

/// A built forward graph over one window of candidates, ready for either
/// reading out scores or extending with a loss.
pub(crate) struct BuiltForward<'p> {
    pub graph: Graph<'p>,
    /// Raw attention scores u, one per candidate, `[k]`.
    pub score_node: NodeId,
    /// softmax(u), `[k]`.
    pub prob_node: NodeId,
}

/// Build the forward graph for candidates given in canonical order.
pub(crate) fn build_forward<'p>(
    cands: &[&OperationPath],
    params: &'p ModelParams,
    vocab: &Vocab,
    hp: &HyperParams,
) -> Result<BuiltForward<'p>, ModelError> {
    assert!(!cands.is_empty());
    let mut g = Graph::new();
    let bound = bind(&mut g, params);
    let zero_p = g.constant(Tensor::zeros(&[hp.d_p]));
    let zero_h = g.constant(Tensor::zeros(&[hp.d_hidden]));

    // The three operators of one leaf share the token and path embeddings;
    // cache them per leaf.
    let mut leaf_cache: HashMap<usize, (NodeId, NodeId)> = HashMap::new();
    let mut op_cache: [Option<NodeId>; 3] = [None; 3];

    let mut fused: Vec<NodeId> = Vec::with_capacity(cands.len());
    for cand in cands {
        let (v_t, v_p) = match leaf_cache.get(&cand.leaf_index()) {
            Some(pair) => *pair,
            None => {
                let rows = vocab.token_rows(&cand.token);
                let v_t = g.rows_sum(bound.e_t, &rows)?;
                let kinds = cand.path.truncated_kinds(hp.max_l);
                let v_p = if let Some(e_paths) = bound.e_paths {
                    g.rows_sum(e_paths, &[vocab.path_row(kinds)])?
                } else {
                    let inputs: Vec<NodeId> = kinds
                        .iter()
                        .map(|k| g.rows_sum(bound.e_p, &[k.index()]))
                        .collect::<Result<_, _>>()?;
                    let (mut h, mut c) = (zero_p, zero_p);
                    for x in &inputs {
                        (h, c) = lstm_step(&mut g, &bound.path_fwd, *x, h, c)?;
                    }
                    let fwd_final = h;
                    let (mut h, mut c) = (zero_p, zero_p);
                    for x in inputs.iter().rev() {
                        (h, c) = lstm_step(&mut g, &bound.path_bwd, *x, h, c)?;
                    }
                    g.concat(&[fwd_final, h])?
                };
                leaf_cache.insert(cand.leaf_index(), (v_t, v_p));
                (v_t, v_p)
            }
        };
        let oi = cand.operator.index();
        let v_o = match op_cache[oi] {
            Some(id) => id,
            None => {
                let id = g.rows_sum(bound.e_o, &[oi])?;
                op_cache[oi] = Some(id);
                id
            }
        };
        let cat = g.concat(&[v_t, v_p, v_o])?;
        let z = if hp.ablation.no_fc_layer {
            cat
        } else {
            let pre = g.matmul(bound.w_in, cat)?;
            g.tanh(pre)
        };
        fused.push(z);
    }

    // Encoder over the candidate sequence.
    let (mut h, mut c) = (zero_h, zero_h);
    let mut enc_states: Vec<NodeId> = Vec::with_capacity(fused.len());
    for z in &fused {
        (h, c) = lstm_step(&mut g, &bound.enc, *z, h, c)?;
        enc_states.push(h);
    }
    // Decoder starts from the encoder's final state and consumes the
    // encoder outputs.
    let (mut h, mut c) = (h, c);
    let mut dec_states: Vec<NodeId> = Vec::with_capacity(fused.len());
    for e in &enc_states {
        (h, c) = lstm_step(&mut g, &bound.dec, *e, h, c)?;
        dec_states.push(h);
    }

    // Pointer attention: u_j = v . tanh(W1 e_j + W2 b_j).
    let mut scores: Vec<NodeId> = Vec::with_capacity(fused.len());
    for (e, b) in enc_states.iter().zip(dec_states.iter()) {
        let we = g.matmul(bound.w1, *e)?;
        let wb = g.matmul(bound.w2, *b)?;
        let mix = g.add(we, wb)?;
        let act = g.tanh(mix);
        scores.push(g.dot(bound.v, act)?);
    }
    let score_node = g.concat(&scores)?;
    let prob_node = g.softmax(score_node);
    Ok(BuiltForward {
        graph: g,
        score_node,
        prob_node,
    })
}

/// Cross-entropy loss over the window, on the graph:
/// `-sum(Y log P + (1-Y) log(1-P))` with P clamped into [1e-7, 1-1e-7].
pub(crate) fn build_loss(
    built: &mut BuiltForward<'_>,
    labels: &[u8],
) -> Result<NodeId, ModelError> {
    let g = &mut built.graph;
    let k = g.value(built.prob_node).len();
    if labels.len() != k {
        return Err(ModelError::LengthMismatch {
            predictions: k,
            labels: labels.len(),
        });
    }
    let clamped = g.clamp(built.prob_node, 1e-7, 1.0 - 1e-7);
    let y: Vec<f64> = labels.iter().map(|l| f64::from(*l)).collect();
    let y_inv: Vec<f64> = y.iter().map(|v| 1.0 - v).collect();
    let y = g.constant(Tensor::from_vec(&[k], y));
    let y_inv = g.constant(Tensor::from_vec(&[k], y_inv));
    let log_p = g.log(clamped);
    let hit = g.mul(y, log_p)?;
    let one_minus = g.affine(clamped, -1.0, 1.0);
    let log_q = g.log(one_minus);
    let miss = g.mul(y_inv, log_q)?;
    let both = g.add(hit, miss)?;
    let total = g.sum(both);
    Ok(g.affine(total, -1.0, 0.0))
}

fn canonical_order(paths: &[OperationPath]) -> Vec<&OperationPath> {
    let mut refs: Vec<&OperationPath> = paths.iter().collect();
    refs.sort_by(|a, b| {
        a.leaf_index()
            .cmp(&b.leaf_index())
            .then_with(|| a.operator.index().cmp(&b.operator.index()))
            .then_with(|| a.token.cmp(&b.token))
    });
    refs
}

fn softmax_values(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|x| (x - max).exp()).collect();
    let denom: f64 = exps.iter().sum();
    exps.iter().map(|e| e / denom).collect()
}

/// Score one set of candidates (at most `max_k`) and rank them.
///
/// The input order does not matter: candidates are brought into canonical
/// `(leaf_index, operator)` order before the sequence model runs, so a
/// permuted input yields the identical path-to-probability map.
pub fn forward(
    paths: &[OperationPath],
    params: &ModelParams,
    vocab: &Vocab,
    hp: &HyperParams,
) -> Result<RankedPrediction, ModelError> {
    if paths.len() > hp.max_k {
        return Err(ModelError::TooManyPaths {
            k: paths.len(),
            max_k: hp.max_k,
        });
    }
    if paths.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let ordered = canonical_order(paths);
    let built = build_forward(&ordered, params, vocab, hp)?;
    let scores = built.graph.value(built.score_node).data().to_vec();
    let probs = built.graph.value(built.prob_node).data().to_vec();
    let entries = ordered
        .into_iter()
        .zip(scores.iter().zip(probs.iter()))
        .map(|(op, (score, probability))| RankedEntry {
            op: op.clone(),
            probability: *probability,
            score: *score,
        })
        .collect();
    Ok(RankedPrediction::from_scored(entries))
}

/// Prediction scope: the whole method, or only leaves on one source line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictScope {
    WholeMethod,
    Line(u32),
}

/// Raw scores for an arbitrary number of candidates: windows of `max_k`
/// share the parameters, and their scores merge before one global softmax.
pub(crate) fn score_all(
    ordered: &[&OperationPath],
    params: &ModelParams,
    vocab: &Vocab,
    hp: &HyperParams,
) -> Result<Vec<f64>, ModelError> {
    let mut scores = Vec::with_capacity(ordered.len());
    for window in ordered.chunks(hp.max_k) {
        let built = build_forward(window, params, vocab, hp)?;
        scores.extend_from_slice(built.graph.value(built.score_node).data());
    }
    Ok(scores)
}

/// Parse a method, enumerate candidates in scope, and rank them all.
pub fn predict_ranked(
    method_src: &str,
    params: &ModelParams,
    vocab: &Vocab,
    hp: &HyperParams,
    scope: PredictScope,
) -> Result<RankedPrediction, ModelError> {
    let ast = parse(method_src)?;
    let all = enumerate_operation_paths(&ast);
    let in_scope: Vec<OperationPath> = match scope {
        PredictScope::WholeMethod => all,
        PredictScope::Line(line) => all
            .into_iter()
            .filter(|op| ast.leaf_pos(op.leaf_index()).0 == line)
            .collect(),
    };
    if in_scope.is_empty() {
        let line = match scope {
            PredictScope::Line(l) => l,
            PredictScope::WholeMethod => 0,
        };
        return Err(ModelError::EmptyScope { line });
    }
    let ordered = canonical_order(&in_scope);
    let scores = score_all(&ordered, params, vocab, hp)?;
    let probs = softmax_values(&scores);
    let entries = ordered
        .into_iter()
        .zip(scores.iter().zip(probs.iter()))
        .map(|(op, (score, probability))| RankedEntry {
            op: op.clone(),
            probability: *probability,
            score: *score,
        })
        .collect();
    Ok(RankedPrediction::from_scored(entries))
}

/// Cross-entropy of a ranked prediction against labels aligned with its
/// entries, per the training objective.
pub fn loss(pred: &RankedPrediction, labels: &[u8]) -> Result<f64, ModelError> {
    if pred.entries.len() != labels.len() {
        return Err(ModelError::LengthMismatch {
            predictions: pred.entries.len(),
            labels: labels.len(),
        });
    }
    let mut total = 0.0;
    for (entry, label) in pred.entries.iter().zip(labels) {
        let p = entry.probability.clamp(1e-7, 1.0 - 1e-7);
        let y = f64::from(*label);
        total -= y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(total)
}

/// Token, path, and operator embedding vectors of one operation path.
pub type EmbeddedPath = (Vec<f64>, Vec<f64>, Vec<f64>);

/// The three embedding vectors of one operation path: token (sub-token row
/// sum), path (bi-LSTM final states, or the learned whole-path row under
/// that ablation), and operator.
pub fn embed_operation_path(
    op: &OperationPath,
    params: &ModelParams,
    vocab: &Vocab,
    hp: &HyperParams,
) -> Result<EmbeddedPath, ModelError> {
    let mut g = Graph::new();
    let bound = bind(&mut g, params);
    let zero_p = g.constant(Tensor::zeros(&[hp.d_p]));

    let rows = vocab.token_rows(&op.token);
    let v_t = g.rows_sum(bound.e_t, &rows)?;
    let kinds = op.path.truncated_kinds(hp.max_l);
    let v_p = if let Some(e_paths) = bound.e_paths {
        g.rows_sum(e_paths, &[vocab.path_row(kinds)])?
    } else {
        let inputs: Vec<NodeId> = kinds
            .iter()
            .map(|k| g.rows_sum(bound.e_p, &[k.index()]))
            .collect::<Result<_, _>>()?;
        let (mut h, mut c) = (zero_p, zero_p);
        for x in &inputs {
            (h, c) = lstm_step(&mut g, &bound.path_fwd, *x, h, c)?;
        }
        let fwd = h;
        let (mut h, mut c) = (zero_p, zero_p);
        for x in inputs.iter().rev() {
            (h, c) = lstm_step(&mut g, &bound.path_bwd, *x, h, c)?;
        }
        g.concat(&[fwd, h])?
    };
    let v_o = g.rows_sum(bound.e_o, &[op.operator.index()])?;
    Ok((
        g.value(v_t).data().to_vec(),
        g.value(v_p).data().to_vec(),
        g.value(v_o).data().to_vec(),
    ))
}
