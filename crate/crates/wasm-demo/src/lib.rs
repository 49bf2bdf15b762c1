//! Browser demo: parse and inspect methods, inject seeded bugs, and train
//! a small ranking model live to watch it localize and repair mutants.
//! Every export returns JSON strings; the page renders them without any
//! framework.

use fixloc_core::corpus::{self, MutationKind};
use fixloc_core::diff::enumerate_operation_paths;
use fixloc_core::eval::{first_rank, MatchMode, RankOutcome};
use fixloc_core::lang::{self, parse, render_tokens};
use fixloc_core::model::{predict_ranked, AblationFlags, PredictScope, Trainer};
use fixloc_core::repair::{generate_and_validate, OracleValidator, RepairStatus};
use fixloc_core::{HyperParams, PatchRecord};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct TokenView {
    text: String,
    leaf: Option<usize>,
    kind: Option<String>,
}

fn token_views(src: &str) -> Result<Vec<TokenView>, String> {
    let ast = parse(src).map_err(|e| e.to_string())?;
    Ok(render_tokens(&ast)
        .into_iter()
        .map(|t| {
            let leaf = t.leaf.and_then(|id| ast.leaf_index_of(id));
            TokenView {
                kind: leaf.map(|i| ast.kind(ast.leaf_id(i)).to_string()),
                text: t.text,
                leaf,
            }
        })
        .collect())
}

fn err_json(message: String) -> String {
    #[derive(Serialize)]
    struct ErrView {
        ok: bool,
        error: String,
    }
    serde_json::to_string(&ErrView {
        ok: false,
        error: message,
    })
    .unwrap()
}

/// Parse a method and describe its leaves and root-to-leaf paths.
#[wasm_bindgen]
pub fn parse_method(src: &str) -> String {
    #[derive(Serialize)]
    struct LeafView {
        index: usize,
        token: String,
        kind: String,
        line: u32,
        col: u32,
        path: String,
    }
    #[derive(Serialize)]
    struct ParseView {
        ok: bool,
        canonical: String,
        tokens: Vec<TokenView>,
        leaves: Vec<LeafView>,
    }
    let ast = match parse(src) {
        Ok(a) => a,
        Err(e) => return err_json(e.to_string()),
    };
    let leaves = (0..ast.leaf_count())
        .map(|i| {
            let (line, col) = ast.leaf_pos(i);
            LeafView {
                index: i,
                token: ast.leaf_token(i).to_string(),
                kind: ast.kind(ast.leaf_id(i)).to_string(),
                line,
                col,
                path: ast.path_of_leaf(i).to_string(),
            }
        })
        .collect();
    let view = ParseView {
        ok: true,
        canonical: lang::render(&ast),
        tokens: token_views(src).unwrap_or_default(),
        leaves,
    };
    serde_json::to_string(&view).unwrap()
}

/// Names of the available mutation kinds.
#[wasm_bindgen]
pub fn mutation_kinds() -> String {
    let names: Vec<String> = MutationKind::ALL.iter().map(|k| k.to_string()).collect();
    serde_json::to_string(&names).unwrap()
}

/// Inject one seeded bug of the given kind ("Any" picks one) and report the
/// pair with its oracle.
#[wasm_bindgen]
pub fn mutate_method(src: &str, kind: &str, seed: u32) -> String {
    #[derive(Serialize)]
    struct OracleView {
        operator: String,
        token: String,
        leaf_index: usize,
        path: String,
    }
    #[derive(Serialize)]
    struct MutateView {
        ok: bool,
        kind: String,
        buggy_src: String,
        fixed_src: String,
        buggy_tokens: Vec<TokenView>,
        oracle: Vec<OracleView>,
    }
    let kind = if kind == "Any" {
        None
    } else {
        match MutationKind::ALL.iter().find(|k| k.to_string() == kind) {
            Some(k) => Some(*k),
            None => return err_json(format!("unknown mutation kind '{kind}'")),
        }
    };
    let mutant = match corpus::mutate(src, kind, u64::from(seed)) {
        Ok(m) => m,
        Err(e) => return err_json(e.to_string()),
    };
    let buggy_tokens = match token_views(&mutant.record.buggy_src) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };
    let view = MutateView {
        ok: true,
        kind: mutant.mutation_kind.to_string(),
        buggy_tokens,
        oracle: mutant
            .record
            .oracle
            .iter()
            .map(|o| OracleView {
                operator: o.operator.to_string(),
                token: o.token.clone(),
                leaf_index: o.leaf_index(),
                path: o.path.to_string(),
            })
            .collect(),
        buggy_src: mutant.record.buggy_src,
        fixed_src: mutant.record.fixed_src,
    };
    serde_json::to_string(&view).unwrap()
}

/// A live training session over a generated corpus, with a held-out slice
/// for honest localization demos.
#[wasm_bindgen]
pub struct DemoSession {
    trainer: Trainer,
    holdout: Vec<PatchRecord>,
}

#[derive(Serialize)]
struct EpochView {
    ok: bool,
    epoch: usize,
    mean_loss: f64,
    train_recall1: f64,
}

#[wasm_bindgen]
impl DemoSession {
    /// Generate `n_mutants` bugs over `n_seeds` synthetic methods and set
    /// up a trainer at the given width; one tenth is held out.
    #[wasm_bindgen(constructor)]
    pub fn new(
        seed: u32,
        n_seeds: u32,
        n_mutants: u32,
        dims: u32,
        lr: f64,
    ) -> Result<DemoSession, JsValue> {
        let seeds = corpus::synth_seed_methods(n_seeds as usize, u64::from(seed));
        let (mutants, _) = corpus::generate_corpus(
            &seeds,
            n_mutants as usize,
            &corpus::default_mix(),
            u64::from(seed),
        )
        .map_err(|e| JsValue::from_str(&e.to_string()))?;
        let mut records: Vec<PatchRecord> = mutants.into_iter().map(|m| m.record).collect();
        let holdout_len = (records.len() / 10).max(1);
        let holdout = records.split_off(records.len() - holdout_len);
        let hp = HyperParams {
            d_t: dims as usize,
            d_p: dims as usize,
            d_o: dims as usize,
            d_hidden: dims as usize,
            max_l: 10,
            max_k: 150,
            lr,
            epochs: 1,
            batch_size: 16,
            ablation: AblationFlags::default(),
        };
        let trainer = Trainer::new(&records, &hp, u64::from(seed))
            .map_err(|e| JsValue::from_str(&e.to_string()))?;
        Ok(DemoSession { trainer, holdout })
    }

    pub fn train_count(&self) -> u32 {
        self.trainer.record_count() as u32
    }

    pub fn holdout_count(&self) -> u32 {
        self.holdout.len() as u32
    }

    /// Run one epoch and report its loss and train recall.
    pub fn train_epoch(&mut self) -> Result<String, JsValue> {
        let stat = self
            .trainer
            .run_epoch()
            .map_err(|e| JsValue::from_str(&e.to_string()))?;
        Ok(serde_json::to_string(&EpochView {
            ok: true,
            epoch: stat.epoch,
            mean_loss: stat.mean_loss,
            train_recall1: stat.train_recall1,
        })
        .unwrap())
    }

    /// One held-out record, for the localization panel.
    pub fn holdout_record(&self, index: u32) -> String {
        #[derive(Serialize)]
        struct RecordView<'a> {
            ok: bool,
            id: &'a str,
            buggy_src: &'a str,
            fixed_src: &'a str,
        }
        match self.holdout.get(index as usize) {
            Some(r) => serde_json::to_string(&RecordView {
                ok: true,
                id: &r.id,
                buggy_src: &r.buggy_src,
                fixed_src: &r.fixed_src,
            })
            .unwrap(),
            None => err_json(format!("holdout index {index} out of range")),
        }
    }

    /// Rank every operation path of a method with the current parameters.
    pub fn localize(&self, src: &str) -> String {
        #[derive(Serialize)]
        struct EntryView {
            rank: usize,
            probability: f64,
            operator: String,
            token: String,
            leaf_index: usize,
            line: u32,
            col: u32,
            path: String,
        }
        #[derive(Serialize)]
        struct LocalizeView {
            ok: bool,
            tokens: Vec<TokenView>,
            entries: Vec<EntryView>,
            /// Max probability per leaf, for the heat map.
            leaf_heat: Vec<f64>,
        }
        let ast = match parse(src) {
            Ok(a) => a,
            Err(e) => return err_json(e.to_string()),
        };
        let pred = match predict_ranked(
            src,
            self.trainer.params(),
            self.trainer.vocab(),
            self.trainer.hyper_params(),
            PredictScope::WholeMethod,
        ) {
            Ok(p) => p,
            Err(e) => return err_json(e.to_string()),
        };
        let mut leaf_heat = vec![0.0f64; ast.leaf_count()];
        for e in &pred.entries {
            let i = e.op.leaf_index();
            if e.probability > leaf_heat[i] {
                leaf_heat[i] = e.probability;
            }
        }
        let entries = pred
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let (line, col) = ast.leaf_pos(e.op.leaf_index());
                EntryView {
                    rank: i + 1,
                    probability: e.probability,
                    operator: e.op.operator.to_string(),
                    token: e.op.token.clone(),
                    leaf_index: e.op.leaf_index(),
                    line,
                    col,
                    path: e.op.path.to_string(),
                }
            })
            .collect();
        let tokens = match token_views(src) {
            Ok(t) => t,
            Err(e) => return err_json(e),
        };
        serde_json::to_string(&LocalizeView {
            ok: true,
            tokens,
            entries,
            leaf_heat,
        })
        .unwrap()
    }

    /// Localize a held-out mutant with the model, then run the heuristic
    /// repair schedule against the oracle validator.
    pub fn repair_holdout(&self, index: u32) -> String {
        #[derive(Serialize)]
        struct RepairView {
            ok: bool,
            plausible: bool,
            npc: usize,
            first_rank: Option<usize>,
            patched_src: Option<String>,
        }
        let record = match self.holdout.get(index as usize) {
            Some(r) => r,
            None => return err_json(format!("holdout index {index} out of range")),
        };
        let pred = match predict_ranked(
            &record.buggy_src,
            self.trainer.params(),
            self.trainer.vocab(),
            self.trainer.hyper_params(),
            PredictScope::WholeMethod,
        ) {
            Ok(p) => p,
            Err(e) => return err_json(e.to_string()),
        };
        let rank = match first_rank(&pred, &record.oracle, MatchMode::TokenAndOperator) {
            RankOutcome::Found(r) => Some(r),
            RankOutcome::Missing(_) => None,
        };
        let mut validator = match OracleValidator::new(&record.fixed_src) {
            Ok(v) => v,
            Err(e) => return err_json(e.to_string()),
        };
        let outcome = match generate_and_validate(&record.buggy_src, &pred, &mut validator, 20) {
            Ok(o) => o,
            Err(e) => return err_json(e.to_string()),
        };
        let plausible = outcome.status == RepairStatus::Plausible;
        serde_json::to_string(&RepairView {
            ok: true,
            plausible,
            npc: outcome.npc,
            first_rank: rank,
            patched_src: outcome.patch.map(|p| p.patched_src),
        })
        .unwrap()
    }
}

/// Candidate operation-path count of a method (3 per leaf).
#[wasm_bindgen]
pub fn candidate_count(src: &str) -> i32 {
    match parse(src) {
        Ok(ast) => (enumerate_operation_paths(&ast).len()) as i32,
        Err(_) => -1,
    }
}
