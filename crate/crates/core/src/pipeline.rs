//! End-to-end evaluation pipelines: k-fold cross validation of the pointer
//! model against both baselines, and single-model evaluation of a trained
//! checkpoint. Folds run on worker threads and merge in fold order, so
//! results are reproducible regardless of scheduling.

use crate::baselines::{fit_forest, fit_statistics, rank_forest, rank_statistical, ForestConfig};
use crate::eval::{
    first_rank, first_rank_leaves, EvalReport, FoldPlan, MatchMode, RankOutcome, Scenario,
};
use crate::lang::parse;
use crate::model::{predict_ranked, train, HyperParams, ModelParams, PredictScope, Vocab};
use crate::rng::derive_seed;
use crate::PatchRecord;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum System {
    /// The pointer-network ranker.
    Pointer,
    /// Statistics over leaf kinds.
    Statistical,
    /// Random forest over token features.
    Forest,
}

impl System {
    pub const ALL: [System; 3] = [System::Pointer, System::Statistical, System::Forest];

    pub fn id(self) -> &'static str {
        match self {
            System::Pointer => "pointer",
            System::Statistical => "stat",
            System::Forest => "forest",
        }
    }

    pub fn from_id(s: &str) -> Option<System> {
        match s {
            "pointer" => Some(System::Pointer),
            "stat" => Some(System::Statistical),
            "forest" => Some(System::Forest),
            _ => None,
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug)]
pub enum PipelineError {
    Model(crate::model::ModelError),
    Baseline(crate::baselines::BaselineError),
    Eval(crate::eval::EvalError),
    Syntax(crate::lang::SyntaxError),
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PipelineError::Model(e) => write!(f, "{}", e),
            PipelineError::Baseline(e) => write!(f, "{}", e),
            PipelineError::Eval(e) => write!(f, "{}", e),
            PipelineError::Syntax(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for PipelineError {}

impl From<crate::model::ModelError> for PipelineError {
    fn from(e: crate::model::ModelError) -> Self {
        PipelineError::Model(e)
    }
}

impl From<crate::baselines::BaselineError> for PipelineError {
    fn from(e: crate::baselines::BaselineError) -> Self {
        PipelineError::Baseline(e)
    }
}

impl From<crate::eval::EvalError> for PipelineError {
    fn from(e: crate::eval::EvalError) -> Self {
        PipelineError::Eval(e)
    }
}

impl From<crate::lang::SyntaxError> for PipelineError {
    fn from(e: crate::lang::SyntaxError) -> Self {
        PipelineError::Syntax(e)
    }
}

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub hp: HyperParams,
    pub scenario: Scenario,
    pub match_mode: MatchMode,
    pub systems: Vec<System>,
    pub forest: ForestConfig,
}

pub struct CvOutcome {
    pub fold_plan: FoldPlan,
    pub reports: BTreeMap<&'static str, EvalReport>,
}

/// The buggy line of a record: the source line of its first oracle leaf.
fn buggy_line(record: &PatchRecord) -> Result<u32, PipelineError> {
    let ast = parse(&record.buggy_src)?;
    let leaf = record.oracle.first().expect("records carry an oracle").leaf_index();
    Ok(ast.leaf_pos(leaf).0)
}

/// Rank one test record with the pointer model.
fn pointer_outcome(
    record: &PatchRecord,
    params: &ModelParams,
    vocab: &Vocab,
    hp: &HyperParams,
    scenario: Scenario,
    mode: MatchMode,
) -> Result<RankOutcome, PipelineError> {
    let scope = match scenario {
        Scenario::Method => PredictScope::WholeMethod,
        Scenario::Line => PredictScope::Line(buggy_line(record)?),
    };
    let pred = predict_ranked(&record.buggy_src, params, vocab, hp, scope)?;
    Ok(first_rank(&pred, &record.oracle, mode))
}

/// Rank one test record with a baseline's leaf ordering, restricted to the
/// buggy line when the scenario asks for it.
fn baseline_outcome(
    record: &PatchRecord,
    ranked: Vec<usize>,
    scenario: Scenario,
) -> Result<RankOutcome, PipelineError> {
    let filtered = match scenario {
        Scenario::Method => ranked,
        Scenario::Line => {
            let ast = parse(&record.buggy_src)?;
            let line = buggy_line(record)?;
            ranked
                .into_iter()
                .filter(|i| ast.leaf_pos(*i).0 == line)
                .collect()
        }
    };
    Ok(first_rank_leaves(&filtered, &record.oracle))
}

type FoldResult = Result<BTreeMap<&'static str, Vec<RankOutcome>>, PipelineError>;

fn run_fold(
    records: &[PatchRecord],
    plan: &FoldPlan,
    fold: usize,
    cfg: &CvConfig,
) -> FoldResult {
    let (train_refs, test_refs) = plan.split(records, fold);
    let train_set: Vec<PatchRecord> = train_refs.into_iter().cloned().collect();
    let mut out: BTreeMap<&'static str, Vec<RankOutcome>> = BTreeMap::new();

    for system in &cfg.systems {
        let outcomes = match system {
            System::Pointer => {
                let seed = derive_seed(cfg.seed, &format!("fold-{fold}-train"));
                let (params, vocab, _) = train(&train_set, &cfg.hp, seed)?;
                test_refs
                    .iter()
                    .map(|r| pointer_outcome(r, &params, &vocab, &cfg.hp, cfg.scenario, cfg.match_mode))
                    .collect::<Result<Vec<_>, _>>()?
            }
            System::Statistical => {
                let table = fit_statistics(&train_set)?;
                test_refs
                    .iter()
                    .map(|r| {
                        let ast = parse(&r.buggy_src)?;
                        baseline_outcome(r, rank_statistical(&ast, &table), cfg.scenario)
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
            System::Forest => {
                let mut fc = cfg.forest;
                fc.seed = derive_seed(cfg.seed, &format!("fold-{fold}-forest"));
                let forest = fit_forest(&train_set, fc)?;
                test_refs
                    .iter()
                    .map(|r| {
                        let ast = parse(&r.buggy_src)?;
                        baseline_outcome(r, rank_forest(&ast, &forest), cfg.scenario)
                    })
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        out.insert(system.id(), outcomes);
    }
    Ok(out)
}

/// k-fold cross validation of the configured systems. Each fold trains on
/// the other folds and ranks its own test records; outcomes concatenate in
/// fold order before the per-system reports are built.
pub fn cross_validate(records: &[PatchRecord], cfg: &CvConfig) -> Result<CvOutcome, PipelineError> {
    let plan = crate::eval::kfold(records, cfg.folds, derive_seed(cfg.seed, "folds"))?;

    let fold_results: Vec<FoldResult> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.folds)
            .map(|fold| {
                let plan = &plan;
                scope.spawn(move || run_fold(records, plan, fold, cfg))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fold worker panicked")).collect()
    });

    let mut merged: BTreeMap<&'static str, Vec<RankOutcome>> = BTreeMap::new();
    for result in fold_results {
        let fold_map = result?;
        for (system, outcomes) in fold_map {
            merged.entry(system).or_default().extend(outcomes);
        }
    }
    let reports = merged
        .into_iter()
        .map(|(system, outcomes)| {
            (system, EvalReport::from_outcomes(&outcomes, cfg.scenario))
        })
        .collect();
    Ok(CvOutcome {
        fold_plan: plan,
        reports,
    })
}

/// Evaluate one pretrained model over a record set (no folding).
pub fn evaluate_model(
    records: &[PatchRecord],
    params: &ModelParams,
    vocab: &Vocab,
    hp: &HyperParams,
    scenario: Scenario,
    mode: MatchMode,
) -> Result<EvalReport, PipelineError> {
    let outcomes = records
        .iter()
        .map(|r| pointer_outcome(r, params, vocab, hp, scenario, mode))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_outcomes(&outcomes, scenario))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, synth_seed_methods, MutationKind};
    use crate::model::AblationFlags;

    fn small_hp() -> HyperParams {
        HyperParams {
            d_t: 8,
            d_p: 8,
            d_o: 8,
            d_hidden: 8,
            max_l: 8,
            max_k: 120,
            lr: 0.02,
            epochs: 3,
            batch_size: 16,
            ablation: AblationFlags::default(),
        }
    }

    #[test]
    fn cross_validation_produces_reports_for_every_system() {
        let seeds = synth_seed_methods(12, 3);
        let (mutants, _) = generate_corpus(
            &seeds,
            40,
            &[(MutationKind::OperatorSwap, 0.5), (MutationKind::BooleanFlip, 0.5)],
            5,
        )
        .unwrap();
        let records: Vec<PatchRecord> = mutants.into_iter().map(|m| m.record).collect();
        let cfg = CvConfig {
            folds: 4,
            seed: 17,
            hp: small_hp(),
            scenario: Scenario::Method,
            match_mode: MatchMode::TokenOnly,
            systems: System::ALL.to_vec(),
            forest: ForestConfig { n_trees: 10, max_depth: 4, seed: 0, bootstrap: true },
        };
        let outcome = cross_validate(&records, &cfg).unwrap();
        assert_eq!(outcome.reports.len(), 3);
        for (_, report) in &outcome.reports {
            assert_eq!(report.n_bugs, 40);
        }
        // Determinism across repeated runs (thread scheduling must not
        // leak into results).
        let again = cross_validate(&records, &cfg).unwrap();
        for (system, report) in &outcome.reports {
            let b = &again.reports[system];
            assert_eq!(report.per_bug_first_rank, b.per_bug_first_rank, "{system}");
            assert_eq!(report.mfr, b.mfr);
        }
    }

    #[test]
    fn line_scenario_shrinks_the_search() {
        let seeds = synth_seed_methods(12, 8);
        let (mutants, _) =
            generate_corpus(&seeds, 30, &[(MutationKind::OperatorSwap, 1.0)], 6).unwrap();
        let records: Vec<PatchRecord> = mutants.into_iter().map(|m| m.record).collect();
        let mut cfg = CvConfig {
            folds: 3,
            seed: 2,
            hp: small_hp(),
            scenario: Scenario::Line,
            match_mode: MatchMode::TokenOnly,
            systems: vec![System::Statistical],
            forest: ForestConfig::default(),
        };
        let line = cross_validate(&records, &cfg).unwrap();
        cfg.scenario = Scenario::Method;
        let method = cross_validate(&records, &cfg).unwrap();
        // Ranks within a line cannot exceed ranks within the method.
        let l = line.reports["stat"].mfr.unwrap();
        let m = method.reports["stat"].mfr.unwrap();
        assert!(l <= m, "line MFR {} vs method MFR {}", l, m);
    }
}
