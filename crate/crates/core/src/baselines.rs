//! The two comparison localizers: a statistics table over leaf kinds, and a
//! random forest over simple per-token features. Both rank a method's
//! leaves only (no operator prediction).

use crate::lang::{split_subtokens, MethodAst, NodeKind};
use crate::rng::{derive_seed, Rng};
use crate::PatchRecord;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaselineError {
    EmptyDataset,
    /// All training tokens carry the same label; nothing to learn.
    DegenerateLabels,
    BadRecord { id: String, reason: String },
}

impl fmt::Display for BaselineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaselineError::EmptyDataset => write!(f, "empty training dataset"),
            BaselineError::DegenerateLabels => write!(f, "all labels identical"),
            BaselineError::BadRecord { id, reason } => write!(f, "record '{}': {}", id, reason),
        }
    }
}

impl std::error::Error for BaselineError {}

/// Empirical probability of each leaf kind being a fix target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BugProbTable {
    pub format: String,
    pub version: u32,
    pub probabilities: BTreeMap<NodeKind, f64>,
}

/// Count, per leaf kind, how often a leaf of that kind is an oracle target
/// versus how often it occurs at all.
pub fn fit_statistics(train: &[PatchRecord]) -> Result<BugProbTable, BaselineError> {
    if train.is_empty() {
        return Err(BaselineError::EmptyDataset);
    }
    let mut buggy: BTreeMap<NodeKind, usize> = BTreeMap::new();
    let mut total: BTreeMap<NodeKind, usize> = BTreeMap::new();
    for record in train {
        let ast = crate::lang::parse(&record.buggy_src).map_err(|e| BaselineError::BadRecord {
            id: record.id.clone(),
            reason: e.to_string(),
        })?;
        let targets: BTreeSet<usize> = record.oracle.iter().map(|o| o.leaf_index()).collect();
        for i in 0..ast.leaf_count() {
            let kind = ast.kind(ast.leaf_id(i));
            *total.entry(kind).or_insert(0) += 1;
            if targets.contains(&i) {
                *buggy.entry(kind).or_insert(0) += 1;
            }
        }
    }
    let probabilities = total
        .iter()
        .map(|(kind, n)| {
            let b = buggy.get(kind).copied().unwrap_or(0);
            (*kind, b as f64 / *n as f64)
        })
        .collect();
    Ok(BugProbTable {
        format: "leaf-kind-bug-probabilities".to_string(),
        version: 1,
        probabilities,
    })
}

impl BugProbTable {
    pub fn probability(&self, kind: NodeKind) -> f64 {
        self.probabilities.get(&kind).copied().unwrap_or(0.0)
    }
}

/// Rank a method's leaves by table probability, descending; equal
/// probabilities keep token-sequence order.
pub fn rank_statistical(method: &MethodAst, table: &BugProbTable) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..method.leaf_count()).collect();
    idx.sort_by(|a, b| {
        let pa = table.probability(method.kind(method.leaf_id(*a)));
        let pb = table.probability(method.kind(method.leaf_id(*b)));
        pb.partial_cmp(&pa).unwrap().then_with(|| a.cmp(b))
    });
    idx
}

/// Per-token ranking features.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenFeatures {
    /// Position in the method's token sequence.
    pub token_rank: usize,
    /// Kind of the enclosing statement.
    pub statement_type: NodeKind,
    /// Character count of the token.
    pub token_length: usize,
    pub num_subtokens: usize,
}

pub fn token_features(ast: &MethodAst, leaf_index: usize) -> TokenFeatures {
    let token = ast.leaf_token(leaf_index);
    TokenFeatures {
        token_rank: leaf_index,
        statement_type: ast.statement_kind_of_leaf(leaf_index),
        token_length: token.chars().count(),
        num_subtokens: split_subtokens(token).len(),
    }
}

const FEATURE_COUNT: usize = 4;

fn numeric_feature(f: &TokenFeatures, feature: usize) -> f64 {
    match feature {
        0 => f.token_rank as f64,
        2 => f.token_length as f64,
        3 => f.num_subtokens as f64,
        _ => unreachable!("feature {} is categorical", feature),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SplitTest {
    /// Numeric: left when value <= threshold.
    Threshold { feature: usize, threshold: f64 },
    /// Categorical: left when the statement type equals the category.
    Category { kind: NodeKind },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf { probability: f64 },
    Split { test: SplitTest, left: Box<TreeNode>, right: Box<TreeNode> },
}

impl TreeNode {
    fn predict(&self, f: &TokenFeatures) -> f64 {
        match self {
            TreeNode::Leaf { probability } => *probability,
            TreeNode::Split { test, left, right } => {
                let goes_left = match test {
                    SplitTest::Threshold { feature, threshold } => {
                        numeric_feature(f, *feature) <= *threshold
                    }
                    SplitTest::Category { kind } => f.statement_type == *kind,
                };
                if goes_left {
                    left.predict(f)
                } else {
                    right.predict(f)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub seed: u64,
    /// Draw a bootstrap sample per tree (the normal mode). Off, every tree
    /// sees the full training set, which small hand-checked tests use.
    pub bootstrap: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 8,
            seed: 0,
            bootstrap: true,
        }
    }
}

/// Random forest of CART trees with Gini impurity and sqrt-of-features
/// subsampling per split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Forest {
    pub format: String,
    pub version: u32,
    pub config: ForestConfig,
    pub trees: Vec<TreeNode>,
}

struct Row {
    features: TokenFeatures,
    label: bool,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    1.0 - p * p - (1.0 - p) * (1.0 - p)
}

/// Weighted Gini impurity of a candidate partition; `None` when a side is
/// empty.
fn split_impurity(rows: &[&Row], test: &SplitTest) -> Option<f64> {
    let (mut ln, mut lp, mut rn, mut rp) = (0usize, 0usize, 0usize, 0usize);
    for row in rows {
        let goes_left = match test {
            SplitTest::Threshold { feature, threshold } => {
                numeric_feature(&row.features, *feature) <= *threshold
            }
            SplitTest::Category { kind } => row.features.statement_type == *kind,
        };
        if goes_left {
            ln += 1;
            lp += usize::from(row.label);
        } else {
            rn += 1;
            rp += usize::from(row.label);
        }
    }
    if ln == 0 || rn == 0 {
        return None;
    }
    let n = (ln + rn) as f64;
    Some((ln as f64 * gini(lp, ln) + rn as f64 * gini(rp, rn)) / n)
}

fn candidate_tests(rows: &[&Row], feature: usize) -> Vec<SplitTest> {
    if feature == 1 {
        let kinds: BTreeSet<NodeKind> =
            rows.iter().map(|r| r.features.statement_type).collect();
        kinds
            .into_iter()
            .map(|kind| SplitTest::Category { kind })
            .collect()
    } else {
        let mut values: Vec<f64> = rows
            .iter()
            .map(|r| numeric_feature(&r.features, feature))
            .collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        values
            .windows(2)
            .map(|w| SplitTest::Threshold {
                feature,
                threshold: (w[0] + w[1]) / 2.0,
            })
            .collect()
    }
}

fn best_split(rows: &[&Row], features: &[usize]) -> Option<(SplitTest, f64)> {
    let mut best: Option<(SplitTest, f64)> = None;
    for &feature in features {
        for test in candidate_tests(rows, feature) {
            if let Some(impurity) = split_impurity(rows, &test) {
                let better = match &best {
                    Some((_, b)) => impurity < *b - 1e-12,
                    None => true,
                };
                if better {
                    best = Some((test, impurity));
                }
            }
        }
    }
    best
}

fn grow(rows: &[&Row], depth: usize, max_depth: usize, rng: &mut Rng) -> TreeNode {
    let pos = rows.iter().filter(|r| r.label).count();
    let probability = pos as f64 / rows.len() as f64;
    if depth >= max_depth || pos == 0 || pos == rows.len() || rows.len() < 2 {
        return TreeNode::Leaf { probability };
    }
    // sqrt(F) feature subsample for this split.
    let take = (FEATURE_COUNT as f64).sqrt().floor() as usize;
    let chosen = rng.sample_indices(FEATURE_COUNT, take);
    let parent = gini(pos, rows.len());
    match best_split(rows, &chosen) {
        Some((test, impurity)) if impurity < parent - 1e-12 => {
            let (left_rows, right_rows): (Vec<&Row>, Vec<&Row>) =
                rows.iter().partition(|row| match &test {
                    SplitTest::Threshold { feature, threshold } => {
                        numeric_feature(&row.features, *feature) <= *threshold
                    }
                    SplitTest::Category { kind } => row.features.statement_type == *kind,
                });
            let left = Box::new(grow(&left_rows, depth + 1, max_depth, rng));
            let right = Box::new(grow(&right_rows, depth + 1, max_depth, rng));
            TreeNode::Split { test, left, right }
        }
        _ => TreeNode::Leaf { probability },
    }
}

/// Train the forest on every leaf of every buggy method, labelled 1 when
/// the leaf is an oracle target.
pub fn fit_forest(train: &[PatchRecord], config: ForestConfig) -> Result<Forest, BaselineError> {
    if train.is_empty() {
        return Err(BaselineError::EmptyDataset);
    }
    let mut rows: Vec<Row> = Vec::new();
    for record in train {
        let ast = crate::lang::parse(&record.buggy_src).map_err(|e| BaselineError::BadRecord {
            id: record.id.clone(),
            reason: e.to_string(),
        })?;
        let targets: BTreeSet<usize> = record.oracle.iter().map(|o| o.leaf_index()).collect();
        for i in 0..ast.leaf_count() {
            rows.push(Row {
                features: token_features(&ast, i),
                label: targets.contains(&i),
            });
        }
    }
    let pos = rows.iter().filter(|r| r.label).count();
    if pos == 0 || pos == rows.len() {
        return Err(BaselineError::DegenerateLabels);
    }

    let mut trees = Vec::with_capacity(config.n_trees);
    for t in 0..config.n_trees {
        let mut rng = Rng::new(derive_seed(config.seed, &format!("tree-{t}")));
        let sample: Vec<&Row> = if config.bootstrap {
            (0..rows.len())
                .map(|_| &rows[rng.next_below(rows.len())])
                .collect()
        } else {
            rows.iter().collect()
        };
        trees.push(grow(&sample, 0, config.max_depth, &mut rng));
    }
    Ok(Forest {
        format: "token-feature-random-forest".to_string(),
        version: 1,
        config,
        trees,
    })
}

impl Forest {
    /// Mean buggy-probability across trees.
    pub fn predict(&self, features: &TokenFeatures) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.predict(features)).sum();
        total / self.trees.len() as f64
    }
}

/// Rank a method's leaves by forest score, descending; ties keep
/// token-sequence order.
pub fn rank_forest(method: &MethodAst, forest: &Forest) -> Vec<usize> {
    let scores: Vec<f64> = (0..method.leaf_count())
        .map(|i| forest.predict(&token_features(method, i)))
        .collect();
    let mut idx: Vec<usize> = (0..method.leaf_count()).collect();
    idx.sort_by(|a, b| scores[*b].partial_cmp(&scores[*a]).unwrap().then_with(|| a.cmp(b)));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::extract_oracle;
    use crate::lang::{parse, render, update_leaf};

    fn flip_record(id: &str, fixed_src: &str, target_token: &str, replacement: &str) -> PatchRecord {
        let fixed = parse(fixed_src).unwrap();
        let at = (0..fixed.leaf_count())
            .find(|i| fixed.leaf_token(*i) == target_token)
            .unwrap();
        let buggy_ast = update_leaf(&fixed, at, replacement);
        let buggy_src = render(&buggy_ast);
        let buggy = parse(&buggy_src).unwrap();
        PatchRecord {
            id: id.to_string(),
            buggy_src,
            fixed_src: fixed_src.to_string(),
            oracle: extract_oracle(&buggy, &fixed).unwrap(),
        }
    }

    #[test]
    fn operator_bugs_make_operator_the_top_kind() {
        let records = vec![
            flip_record("a", "int f(int x) { if (x < 0) { return 0; } return x; }", "<", "<="),
            flip_record("b", "int g(int y) { if (y > 1) { return y; } return 1; }", ">", ">="),
        ];
        let table = fit_statistics(&records).unwrap();
        let op_prob = table.probability(NodeKind::Operator);
        for kind in NodeKind::ALL {
            if kind != NodeKind::Operator {
                assert!(table.probability(kind) <= op_prob);
            }
        }
        // A kind never buggy has probability zero.
        assert_eq!(table.probability(NodeKind::SimpleName), 0.0);
    }

    #[test]
    fn handmade_counts_match() {
        // Three records over the same method shape; two operator bugs and
        // one boolean bug.
        let records = vec![
            flip_record("a", "boolean f(int x) { if (x < 0) { return true; } return false; }", "<", "<="),
            flip_record("b", "boolean f(int x) { if (x < 5) { return true; } return false; }", "<", ">"),
            flip_record("c", "boolean f(int x) { if (x < 9) { return true; } return false; }", "true", "false"),
        ];
        let table = fit_statistics(&records).unwrap();
        // Each method has 1 operator leaf; 2 of 3 are targets.
        assert!((table.probability(NodeKind::Operator) - 2.0 / 3.0).abs() < 1e-12);
        // Each method has 2 boolean leaves; 1 of 6 is a target.
        assert!((table.probability(NodeKind::BooleanLiteral) - 1.0 / 6.0).abs() < 1e-12);
        // TypeName leaves: 2 per method, none buggy.
        assert_eq!(table.probability(NodeKind::TypeName), 0.0);
    }

    #[test]
    fn uniform_probabilities_rank_in_source_order() {
        let table = BugProbTable {
            format: "leaf-kind-bug-probabilities".to_string(),
            version: 1,
            probabilities: BTreeMap::new(),
        };
        let ast = parse("int f(int a, int b) { return a + b; }").unwrap();
        let ranked = rank_statistical(&ast, &table);
        let expect: Vec<usize> = (0..ast.leaf_count()).collect();
        assert_eq!(ranked, expect);
    }

    #[test]
    fn top_probability_kind_ranks_first() {
        let mut probabilities = BTreeMap::new();
        probabilities.insert(NodeKind::Operator, 0.9);
        probabilities.insert(NodeKind::NumberLiteral, 0.2);
        let table = BugProbTable {
            format: "leaf-kind-bug-probabilities".to_string(),
            version: 1,
            probabilities,
        };
        let ast = parse("int f(int a) { return a + 1; }").unwrap();
        let ranked = rank_statistical(&ast, &table);
        assert_eq!(ast.leaf_token(ranked[0]), "+");
        assert_eq!(ast.leaf_token(ranked[1]), "1");
    }

    #[test]
    fn statistical_ranking_matches_brute_force_sort() {
        let records = vec![
            flip_record("a", "int f(int x) { if (x < 0) { return 0; } return x; }", "<", "<="),
            flip_record("b", "boolean g() { return true; }", "true", "false"),
        ];
        let table = fit_statistics(&records).unwrap();
        let ast = parse("boolean h(int value, int limit) { if (value < limit) { return true; } return false; }").unwrap();
        assert!(ast.leaf_count() >= 10);
        let ranked = rank_statistical(&ast, &table);
        // Brute force: stable sort by probability only.
        let mut expect: Vec<usize> = (0..ast.leaf_count()).collect();
        expect.sort_by(|a, b| {
            table
                .probability(ast.kind(ast.leaf_id(*b)))
                .partial_cmp(&table.probability(ast.kind(ast.leaf_id(*a))))
                .unwrap()
        });
        assert_eq!(ranked, expect);
        // And it is a permutation of the leaf set.
        let mut sorted = ranked.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..ast.leaf_count()).collect::<Vec<_>>());
    }

    fn rows_to_records() -> Vec<PatchRecord> {
        // Operator bugs in longer methods: the buggy leaves sit deep in the
        // token sequence, making token_rank informative.
        vec![
            flip_record("a", "int f(int alpha, int beta) { int total = alpha; if (alpha < beta) { total = beta; } return total; }", "<", "<="),
            flip_record("b", "int g(int left, int right) { int best = left; if (left > right) { best = right; } return best; }", ">", ">="),
        ]
    }

    #[test]
    fn forest_learns_separable_labels() {
        let records = rows_to_records();
        let forest = fit_forest(
            &records,
            ForestConfig { n_trees: 20, max_depth: 8, seed: 9, bootstrap: true },
        )
        .unwrap();
        // Training accuracy: every leaf classified to its label at 0.5.
        let mut correct = 0;
        let mut total = 0;
        for record in &records {
            let ast = parse(&record.buggy_src).unwrap();
            let targets: BTreeSet<usize> =
                record.oracle.iter().map(|o| o.leaf_index()).collect();
            for i in 0..ast.leaf_count() {
                let p = forest.predict(&token_features(&ast, i));
                let predicted = p > 0.5;
                if predicted == targets.contains(&i) {
                    correct += 1;
                }
                total += 1;
            }
        }
        // The two operator bugs are the only Operator-kind-free features;
        // statement type + rank separate them fully in this tiny set.
        assert_eq!(correct, total, "training accuracy {}/{}", correct, total);
    }

    #[test]
    fn depth_zero_trees_predict_the_base_rate() {
        let records = rows_to_records();
        let forest = fit_forest(
            &records,
            ForestConfig { n_trees: 1, max_depth: 0, seed: 3, bootstrap: false },
        )
        .unwrap();
        let ast = parse(&records[0].buggy_src).unwrap();
        let n: usize = records
            .iter()
            .map(|r| parse(&r.buggy_src).unwrap().leaf_count())
            .sum();
        let base = 2.0 / n as f64;
        let p = forest.predict(&token_features(&ast, 0));
        assert!((p - base).abs() < 1e-12, "{} vs {}", p, base);
    }

    #[test]
    fn single_tree_split_matches_hand_computed_gini() {
        // Eight rows where token_length separates the classes perfectly
        // and every other feature is constant. Any considered subset of
        // features either finds that split or none; the best Gini split is
        // token_length <= 3.5 (midpoint of 3 and 4).
        let mut rows = Vec::new();
        for (len, label) in [(2usize, false), (3, false), (3, false), (2, false),
                             (4, true), (5, true), (4, true), (5, true)] {
            rows.push(Row {
                features: TokenFeatures {
                    token_rank: 7,
                    statement_type: NodeKind::ReturnStatement,
                    token_length: len,
                    num_subtokens: 1,
                },
                label,
            });
        }
        let refs: Vec<&Row> = rows.iter().collect();
        // Exhaustive hand check over all features (the oracle).
        let (best_test, best_imp) = best_split(&refs, &[0, 1, 2, 3]).unwrap();
        match best_test {
            SplitTest::Threshold { feature, threshold } => {
                assert_eq!(feature, 2);
                assert!((threshold - 3.5).abs() < 1e-12);
            }
            other => panic!("expected a threshold split, got {:?}", other),
        }
        assert!(best_imp.abs() < 1e-12, "perfect split has zero impurity");

        // A grown depth-1 tree that does split must pick the same test.
        let mut found = false;
        for seed in 0..20 {
            let mut rng = Rng::new(seed);
            let tree = grow(&refs, 0, 1, &mut rng);
            if let TreeNode::Split { test, left, right } = tree {
                match test {
                    SplitTest::Threshold { feature, threshold } => {
                        assert_eq!(feature, 2);
                        assert!((threshold - 3.5).abs() < 1e-12);
                    }
                    other => panic!("unexpected split {:?}", other),
                }
                match (*left, *right) {
                    (TreeNode::Leaf { probability: l }, TreeNode::Leaf { probability: r }) => {
                        assert_eq!(l, 0.0);
                        assert_eq!(r, 1.0);
                    }
                    other => panic!("expected two leaves, got {:?}", other),
                }
                found = true;
                break;
            }
        }
        assert!(found, "no seed sampled the informative feature");
    }

    #[test]
    fn degenerate_labels_are_rejected() {
        // A record with no oracle yields all-negative labels.
        let rec = PatchRecord {
            id: "x".to_string(),
            buggy_src: "int f() { return 0; }".to_string(),
            fixed_src: "int f() { return 0; }".to_string(),
            oracle: Vec::new(),
        };
        assert!(matches!(
            fit_forest(&[rec], ForestConfig::default()),
            Err(BaselineError::DegenerateLabels)
        ));
        assert!(matches!(
            fit_forest(&[], ForestConfig::default()),
            Err(BaselineError::EmptyDataset)
        ));
        assert!(matches!(
            fit_statistics(&[]),
            Err(BaselineError::EmptyDataset)
        ));
    }

    #[test]
    fn forest_ranking_is_a_deterministic_permutation() {
        let records = rows_to_records();
        let forest = fit_forest(
            &records,
            ForestConfig { n_trees: 12, max_depth: 4, seed: 5, bootstrap: true },
        )
        .unwrap();
        let ast = parse("int h(int p, int q) { if (p > q) { return p; } return q; }").unwrap();
        let r1 = rank_forest(&ast, &forest);
        let r2 = rank_forest(&ast, &forest);
        assert_eq!(r1, r2);
        let mut sorted = r1.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..ast.leaf_count()).collect::<Vec<_>>());
        // Brute-force stable sort oracle over the same scores.
        let scores: Vec<f64> = (0..ast.leaf_count())
            .map(|i| forest.predict(&token_features(&ast, i)))
            .collect();
        let mut expect: Vec<usize> = (0..ast.leaf_count()).collect();
        expect.sort_by(|a, b| scores[*b].partial_cmp(&scores[*a]).unwrap());
        assert_eq!(r1, expect);
    }

    #[test]
    fn models_serialize_with_version_tags() {
        let records = rows_to_records();
        let table = fit_statistics(&records).unwrap();
        let json = serde_json::to_string(&table).unwrap();
        assert!(json.contains("\"version\":1"));
        let back: BugProbTable = serde_json::from_str(&json).unwrap();
        assert_eq!(back.probabilities, table.probabilities);

        let forest = fit_forest(
            &records,
            ForestConfig { n_trees: 3, max_depth: 2, seed: 1, bootstrap: true },
        )
        .unwrap();
        let json = serde_json::to_string(&forest).unwrap();
        assert!(json.contains("token-feature-random-forest"));
        let back: Forest = serde_json::from_str(&json).unwrap();
        assert_eq!(back.trees.len(), 3);
    }
}
