//! Ranking metrics (Recall@Top-n, mean first rank), dataset deduplication,
//! k-fold cross validation, and debugging-effort token counts.

use crate::diff::OperationPath;
use crate::lang::is_language_keyword;
use crate::model::RankedPrediction;
use crate::rng::Rng;
use crate::PatchRecord;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;

pub const RECALL_CUTOFFS: [usize; 5] = [1, 3, 5, 10, 20];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Method,
    Line,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Method => write!(f, "method"),
            Scenario::Line => write!(f, "line"),
        }
    }
}

/// How a prediction entry must match an oracle element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchMode {
    /// Same leaf (position and token); the operator is ignored.
    TokenOnly,
    /// Same leaf and same change operator.
    TokenAndOperator,
}

/// First-rank lookup result: the 1-based rank of the first hit, or a miss
/// carrying `list length + 1` as its pessimistic rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankOutcome {
    Found(usize),
    Missing(usize),
}

impl RankOutcome {
    pub fn found_rank(&self) -> Option<usize> {
        match self {
            RankOutcome::Found(r) => Some(*r),
            RankOutcome::Missing(_) => None,
        }
    }
}

/// Rank of the first entry matching any oracle element.
pub fn first_rank(
    pred: &RankedPrediction,
    oracle: &[OperationPath],
    mode: MatchMode,
) -> RankOutcome {
    for (i, entry) in pred.entries.iter().enumerate() {
        let hit = oracle.iter().any(|o| {
            entry.op.leaf_index() == o.leaf_index()
                && entry.op.token == o.token
                && (mode == MatchMode::TokenOnly || entry.op.operator == o.operator)
        });
        if hit {
            return RankOutcome::Found(i + 1);
        }
    }
    RankOutcome::Missing(pred.entries.len() + 1)
}

/// Rank of the first leaf index matching any oracle element, for the
/// baselines' leaf rankings (token-only by construction).
pub fn first_rank_leaves(ranked_leaves: &[usize], oracle: &[OperationPath]) -> RankOutcome {
    for (i, leaf) in ranked_leaves.iter().enumerate() {
        if oracle.iter().any(|o| o.leaf_index() == *leaf) {
            return RankOutcome::Found(i + 1);
        }
    }
    RankOutcome::Missing(ranked_leaves.len() + 1)
}

/// Fraction of ranks at or under `k`.
pub fn recall_at_k(first_ranks: &[usize], k: usize) -> f64 {
    assert!(k >= 1);
    if first_ranks.is_empty() {
        return 0.0;
    }
    let hits = first_ranks.iter().filter(|r| **r <= k).count();
    hits as f64 / first_ranks.len() as f64
}

/// Arithmetic mean of first ranks.
pub fn mfr(first_ranks: &[usize]) -> f64 {
    assert!(!first_ranks.is_empty());
    first_ranks.iter().sum::<usize>() as f64 / first_ranks.len() as f64
}

/// Metrics for one system under one scenario. Misses count against every
/// recall cutoff but stay out of the mean first rank; their number is
/// reported separately.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: Scenario,
    pub n_bugs: usize,
    pub recall_at: BTreeMap<usize, f64>,
    /// Mean first rank over localized bugs; `None` when nothing localized.
    pub mfr: Option<f64>,
    pub unlocalized: usize,
    pub per_bug_first_rank: Vec<usize>,
}

impl EvalReport {
    pub fn from_outcomes(outcomes: &[RankOutcome], scenario: Scenario) -> EvalReport {
        let n_bugs = outcomes.len();
        let found: Vec<usize> = outcomes.iter().filter_map(|o| o.found_rank()).collect();
        let mut recall_at = BTreeMap::new();
        for k in RECALL_CUTOFFS {
            let hits = found.iter().filter(|r| **r <= k).count();
            recall_at.insert(k, if n_bugs == 0 { 0.0 } else { hits as f64 / n_bugs as f64 });
        }
        EvalReport {
            scenario,
            n_bugs,
            recall_at,
            mfr: if found.is_empty() { None } else { Some(mfr(&found)) },
            unlocalized: n_bugs - found.len(),
            per_bug_first_rank: found,
        }
    }

    /// Plain-text row: Top-1/3/5/10/20 percentages plus MFR.
    pub fn table_row(&self, label: &str) -> String {
        let mut row = format!("{:<18}", label);
        for k in RECALL_CUTOFFS {
            row.push_str(&format!("{:>8.1}%", self.recall_at[&k] * 100.0));
        }
        match self.mfr {
            Some(m) => row.push_str(&format!("{:>8.2}", m)),
            None => row.push_str(&format!("{:>8}", "n/a")),
        }
        row
    }

    pub fn table_header() -> String {
        let mut row = format!("{:<18}", "system");
        for k in RECALL_CUTOFFS {
            row.push_str(&format!("{:>9}", format!("Top-{}", k)));
        }
        row.push_str(&format!("{:>8}", "MFR"));
        row
    }
}

/// Remove whitespace-insensitive duplicates and test-code records (ids
/// suffixed `#test`). First occurrence wins.
pub fn dedup(records: &[PatchRecord]) -> Vec<PatchRecord> {
    let normalize = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut out = Vec::new();
    for record in records {
        if record.id.ends_with("#test") {
            continue;
        }
        let key = (normalize(&record.buggy_src), normalize(&record.fixed_src));
        if seen.insert(key) {
            out.push(record.clone());
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    TooFewRecords { have: usize, need: usize },
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::TooFewRecords { have, need } => {
                write!(f, "{} records cannot fill {} folds", have, need)
            }
        }
    }
}

impl std::error::Error for EvalError {}

/// Seeded fold assignment: shuffle, then deal round-robin so fold sizes
/// differ by at most one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: BTreeMap<String, usize>,
}

pub fn kfold(records: &[PatchRecord], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if records.len() < k {
        return Err(EvalError::TooFewRecords {
            have: records.len(),
            need: k,
        });
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut order);
    let mut assignments = BTreeMap::new();
    for (pos, idx) in order.into_iter().enumerate() {
        assignments.insert(records[idx].id.clone(), pos % k);
    }
    Ok(FoldPlan { k, seed, assignments })
}

impl FoldPlan {
    /// Train/test split of one fold, in input order.
    pub fn split<'a>(
        &self,
        records: &'a [PatchRecord],
        fold: usize,
    ) -> (Vec<&'a PatchRecord>, Vec<&'a PatchRecord>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for record in records {
            if self.assignments[&record.id] == fold {
                test.push(record);
            } else {
                train.push(record);
            }
        }
        (train, test)
    }
}

/// Five-number summary of a count distribution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn of(values: &[usize]) -> FiveNumber {
        assert!(!values.is_empty());
        let mut sorted: Vec<f64> = values.iter().map(|v| *v as f64).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let quantile = |q: f64| -> f64 {
            // Linear interpolation between closest ranks.
            let pos = q * (sorted.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            if lo == hi {
                sorted[lo]
            } else {
                sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
            }
        };
        FiveNumber {
            min: sorted[0],
            q1: quantile(0.25),
            median: quantile(0.5),
            q3: quantile(0.75),
            max: *sorted.last().unwrap(),
        }
    }
}

/// Debugging-effort measurements: non-keyword token counts per buggy
/// method and per buggy line (the line of the first oracle leaf).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffortStats {
    pub method_counts: Vec<usize>,
    pub line_counts: Vec<usize>,
    pub method_summary: FiveNumber,
    pub line_summary: FiveNumber,
}

pub fn effort_stats(records: &[PatchRecord]) -> Result<EffortStats, crate::lang::SyntaxError> {
    let mut method_counts = Vec::with_capacity(records.len());
    let mut line_counts = Vec::with_capacity(records.len());
    for record in records {
        let ast = crate::lang::parse(&record.buggy_src)?;
        let non_keyword = |i: usize| !is_language_keyword(ast.leaf_token(i));
        method_counts.push((0..ast.leaf_count()).filter(|i| non_keyword(*i)).count());
        if let Some(first) = record.oracle.first() {
            let line = ast.leaf_pos(first.leaf_index()).0;
            line_counts.push(
                (0..ast.leaf_count())
                    .filter(|i| ast.leaf_pos(*i).0 == line && non_keyword(*i))
                    .count(),
            );
        }
    }
    Ok(EffortStats {
        method_summary: FiveNumber::of(&method_counts),
        line_summary: FiveNumber::of(if line_counts.is_empty() {
            &method_counts
        } else {
            &line_counts
        }),
        method_counts,
        line_counts,
    })
}
