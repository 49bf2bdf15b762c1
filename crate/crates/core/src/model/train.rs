//! Mini-batch Adam training over patch records.
//!
//! [`Trainer`] owns the whole training state and advances one epoch at a
//! time, which interactive callers (the browser demo) use to stream
//! progress; [`train_with_config`] is the batch wrapper around it.

use super::forward::{build_forward, build_loss, score_all};
use super::{HyperParams, ModelError, ModelParams, Vocab};
use crate::diff::{enumerate_operation_paths, label_paths, ChangeOperator, OperationPath};
use crate::lang::parse;
use crate::rng::{derive_seed, Rng};
use crate::tensor::{AdamState, Tensor};
use crate::PatchRecord;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub seed: u64,
    /// Stop once train-set Recall@1 (token and operator) reaches this value.
    pub stop_at_train_recall1: Option<f64>,
}

impl TrainConfig {
    pub fn new(seed: u64) -> Self {
        TrainConfig {
            seed,
            stop_at_train_recall1: None,
        }
    }
}

/// Per-epoch log row; serialized to CSV by the command-line driver.
#[derive(Debug, Clone)]
pub struct EpochStat {
    pub epoch: usize,
    pub mean_loss: f64,
    pub train_recall1: f64,
}

struct Prepared {
    candidates: Vec<OperationPath>,
    labels: Vec<u8>,
    /// Uncapped candidates for the recall probe.
    full: Vec<OperationPath>,
    oracle_keys: Vec<(usize, ChangeOperator)>,
}

/// Incremental trainer: one call per epoch.
pub struct Trainer {
    hp: HyperParams,
    seed: u64,
    vocab: Vocab,
    params: ModelParams,
    prepared: Vec<Prepared>,
    adam: AdamState,
    names: Vec<String>,
    next_epoch: usize,
}

impl Trainer {
    pub fn new(records: &[PatchRecord], hp: &HyperParams, seed: u64) -> Result<Self, ModelError> {
        if records.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        let vocab = Vocab::build(records, hp)?;
        let mut cap_rng = Rng::new(derive_seed(seed, "negative-sample"));
        let mut prepared = Vec::with_capacity(records.len());
        for record in records {
            prepared.push(prepare(record, hp, &mut cap_rng)?);
        }
        let params = ModelParams::init(hp, &vocab, derive_seed(seed, "init"));
        let names: Vec<String> = params
            .named_tensors()
            .iter()
            .map(|(n, _)| n.clone())
            .collect();
        let adam = {
            let tensors = params.named_tensors();
            let refs: Vec<&Tensor> = tensors.iter().map(|(_, t)| *t).collect();
            AdamState::new(hp.lr, &refs)
        };
        Ok(Trainer {
            hp: hp.clone(),
            seed,
            vocab,
            params,
            prepared,
            adam,
            names,
            next_epoch: 0,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    pub fn epochs_run(&self) -> usize {
        self.next_epoch
    }

    pub fn record_count(&self) -> usize {
        self.prepared.len()
    }

    /// One pass over the data: shuffled mini-batches, summed-then-averaged
    /// gradients per batch, one Adam step each, then the recall probe.
    pub fn run_epoch(&mut self) -> Result<EpochStat, ModelError> {
        let epoch = self.next_epoch;
        self.next_epoch += 1;
        let mut order: Vec<usize> = (0..self.prepared.len()).collect();
        let mut epoch_rng = Rng::new(derive_seed(self.seed, &format!("epoch-{epoch}")));
        epoch_rng.shuffle(&mut order);

        let mut epoch_loss = 0.0;
        for batch in order.chunks(self.hp.batch_size.max(1)) {
            let mut accum: Vec<Tensor> = self
                .params
                .named_tensors()
                .iter()
                .map(|(_, t)| Tensor::zeros(t.shape()))
                .collect();
            for &ri in batch {
                let rec = &self.prepared[ri];
                let refs: Vec<&OperationPath> = rec.candidates.iter().collect();
                let mut built = build_forward(&refs, &self.params, &self.vocab, &self.hp)?;
                let loss_node = build_loss(&mut built, &rec.labels)?;
                epoch_loss += built.graph.value(loss_node).item();
                let grads = built.graph.backward(loss_node)?;
                for (i, (name, g)) in grads.params(&built.graph).iter().enumerate() {
                    debug_assert_eq!(*name, self.names[i]);
                    for (acc, d) in accum[i].data_mut().iter_mut().zip(g.data()) {
                        *acc += d;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            let grads: Vec<(String, Tensor)> = self
                .names
                .iter()
                .zip(accum)
                .map(|(n, mut t)| {
                    for x in t.data_mut() {
                        *x *= scale;
                    }
                    (n.clone(), t)
                })
                .collect();
            let mut named_mut = self.params.named_tensors_mut();
            let mut slots: Vec<&mut Tensor> =
                named_mut.iter_mut().map(|(_, t)| &mut **t).collect();
            self.adam.step(&mut slots, &grads)?;
        }

        let mean_loss = epoch_loss / self.prepared.len() as f64;
        let train_recall1 = recall_at_one(&self.prepared, &self.params, &self.vocab, &self.hp)?;
        Ok(EpochStat {
            epoch,
            mean_loss,
            train_recall1,
        })
    }

    pub fn into_parts(self) -> (ModelParams, Vocab) {
        (self.params, self.vocab)
    }
}

/// Train with the default configuration (no early stop).
pub fn train(
    records: &[PatchRecord],
    hp: &HyperParams,
    seed: u64,
) -> Result<(ModelParams, Vocab, Vec<EpochStat>), ModelError> {
    train_with_config(records, hp, &TrainConfig::new(seed))
}

pub fn train_with_config(
    records: &[PatchRecord],
    hp: &HyperParams,
    cfg: &TrainConfig,
) -> Result<(ModelParams, Vocab, Vec<EpochStat>), ModelError> {
    let mut trainer = Trainer::new(records, hp, cfg.seed)?;
    let mut stats = Vec::with_capacity(hp.epochs);
    for _ in 0..hp.epochs {
        let stat = trainer.run_epoch()?;
        let recall = stat.train_recall1;
        stats.push(stat);
        if let Some(target) = cfg.stop_at_train_recall1 {
            if recall >= target {
                break;
            }
        }
    }
    let (params, vocab) = trainer.into_parts();
    Ok((params, vocab, stats))
}

fn prepare(record: &PatchRecord, hp: &HyperParams, rng: &mut Rng) -> Result<Prepared, ModelError> {
    let ast = parse(&record.buggy_src)?;
    let full = enumerate_operation_paths(&ast);
    let labels_full = label_paths(&full, &record.oracle).map_err(|e| {
        ModelError::Syntax(crate::lang::SyntaxError {
            line: 0,
            col: 0,
            message: format!("record '{}': {}", record.id, e),
        })
    })?;
    let oracle_keys = record
        .oracle
        .iter()
        .map(|o| (o.leaf_index(), o.operator))
        .collect();

    let (candidates, labels) = if full.len() > hp.max_k {
        // Keep every positive; fill the rest with a seeded sample of
        // negatives, preserving canonical order.
        let positives: Vec<usize> = labels_full
            .iter()
            .enumerate()
            .filter_map(|(i, l)| (*l == 1).then_some(i))
            .collect();
        let negatives: Vec<usize> = labels_full
            .iter()
            .enumerate()
            .filter_map(|(i, l)| (*l == 0).then_some(i))
            .collect();
        let need = hp.max_k.saturating_sub(positives.len());
        let chosen = rng.sample_indices(negatives.len(), need.min(negatives.len()));
        let mut keep: Vec<usize> = positives;
        keep.extend(chosen.into_iter().map(|i| negatives[i]));
        keep.sort_unstable();
        let candidates: Vec<OperationPath> = keep.iter().map(|&i| full[i].clone()).collect();
        let labels: Vec<u8> = keep.iter().map(|&i| labels_full[i]).collect();
        (candidates, labels)
    } else {
        (full.clone(), labels_full)
    };

    Ok(Prepared {
        candidates,
        labels,
        full,
        oracle_keys,
    })
}

/// Fraction of records whose top-1 prediction over the full candidate set
/// matches an oracle (leaf index and operator both).
fn recall_at_one(
    prepared: &[Prepared],
    params: &ModelParams,
    vocab: &Vocab,
    hp: &HyperParams,
) -> Result<f64, ModelError> {
    let mut hits = 0usize;
    for rec in prepared {
        let refs: Vec<&OperationPath> = rec.full.iter().collect();
        let scores = score_all(&refs, params, vocab, hp)?;
        let best = scores
            .iter()
            .enumerate()
            .max_by(|(ia, a), (ib, b)| a.partial_cmp(b).unwrap().then_with(|| ib.cmp(ia)))
            .map(|(i, _)| i)
            .expect("non-empty candidates");
        let key = (rec.full[best].leaf_index(), rec.full[best].operator);
        if rec.oracle_keys.contains(&key) {
            hits += 1;
        }
    }
    Ok(hits as f64 / prepared.len() as f64)
}
