//! Generate-and-validate repair driven by ranked operation paths.
//!
//! The schedule walks the top predictions one at a time and then in pairs.
//! Deletes remove the predicted leaf; updates and inserts draw replacement
//! tokens from fixed donor classes (other operators of the same family, the
//! negated boolean, other data types, or the five nearest same-type
//! identifiers). Every built candidate is validated in order; the count of
//! validations up to the first plausible patch is the NPC score.

use crate::diff::{ChangeOperator, OperationPath};
use crate::lang::{
    delete_leaf, insert_after_leaf, lex, name_role, operator_class, parse, render, update_leaf,
    MethodAst, NameRole, NodeKind, SymbolTable, SyntaxError, SWAPPABLE_TYPES,
};
use crate::model::{RankedEntry, RankedPrediction};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug)]
pub enum RepairError {
    /// The heuristic set offers no replacement for this token class.
    NoCandidates { token: String },
    /// The external validation command could not run at all (as opposed to
    /// running and rejecting the patch).
    ValidatorFailure(String),
    /// Correctness asked for before every plausible outcome was assessed.
    UnassessedOutcome,
    Syntax(SyntaxError),
}

impl fmt::Display for RepairError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepairError::NoCandidates { token } => {
                write!(f, "no replacement candidates for '{}'", token)
            }
            RepairError::ValidatorFailure(msg) => write!(f, "validator failure: {}", msg),
            RepairError::UnassessedOutcome => {
                write!(f, "plausible patch without a correctness assessment")
            }
            RepairError::Syntax(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for RepairError {}

impl From<SyntaxError> for RepairError {
    fn from(e: SyntaxError) -> Self {
        RepairError::Syntax(e)
    }
}

/// Ordered replacement candidates for an update or insert at this path.
///
/// Operator tokens offer the rest of their class in frozen class order;
/// booleans their negation; data types the other substitutable types;
/// identifiers their five nearest same-type names by token-sequence
/// distance (nearer first, position-ascending ties).
pub fn candidate_tokens(
    op: &OperationPath,
    ast: &MethodAst,
) -> Result<Vec<String>, RepairError> {
    assert!(
        op.operator != ChangeOperator::Delete,
        "deletes need no replacement tokens"
    );
    // An insert's anchor only marks the position; the donor pool is the
    // nearest variable identifiers around it, whatever the anchor's kind.
    if op.operator == ChangeOperator::Insert {
        return nearest_variables(op.leaf_index(), ast);
    }
    let kind = *op.path.kinds.last().expect("non-empty path");
    let token = op.token.as_str();
    match kind {
        NodeKind::Operator => match operator_class(token) {
            Some(class) => Ok(class
                .iter()
                .filter(|c| **c != token)
                .map(|c| c.to_string())
                .collect()),
            None => Err(RepairError::NoCandidates {
                token: token.to_string(),
            }),
        },
        NodeKind::BooleanLiteral => {
            let flipped = if token == "true" { "false" } else { "true" };
            Ok(vec![flipped.to_string()])
        }
        NodeKind::TypeName if SWAPPABLE_TYPES.contains(&token) => Ok(SWAPPABLE_TYPES
            .iter()
            .filter(|c| **c != token)
            .map(|c| c.to_string())
            .collect()),
        NodeKind::SimpleName => nearest_identifiers(op, ast),
        _ => Err(RepairError::NoCandidates {
            token: token.to_string(),
        }),
    }
}

/// Up to five distinct in-scope identifiers nearest to the target in the
/// token sequence, restricted to the same declared type when the target is
/// declared, or the same syntactic role otherwise.
fn nearest_identifiers(op: &OperationPath, ast: &MethodAst) -> Result<Vec<String>, RepairError> {
    let target_leaf = op.leaf_index();
    let token = op.token.as_str();
    let table = SymbolTable::build(ast);
    let target_role = name_role(ast, target_leaf);

    let eligible_name = |name: &str, leaf: usize| -> bool {
        if name == token {
            return false;
        }
        match table.type_of(token) {
            // Declared target: same declared type.
            Some(ty) => table.type_of(name) == Some(ty),
            // Undeclared: fall back to the same syntactic role.
            None => name_role(ast, leaf) == target_role,
        }
    };

    // Distance of each candidate name: nearest occurrence to the target.
    let mut best: Vec<(String, usize, usize)> = Vec::new(); // (name, distance, first position)
    for i in 0..ast.leaf_count() {
        if ast.kind(ast.leaf_id(i)) != NodeKind::SimpleName {
            continue;
        }
        let name = ast.leaf_token(i);
        if !eligible_name(name, i) {
            continue;
        }
        let distance = i.abs_diff(target_leaf);
        match best.iter_mut().find(|(n, _, _)| n == name) {
            Some(entry) => {
                if distance < entry.1 {
                    entry.1 = distance;
                }
                if i < entry.2 {
                    entry.2 = i;
                }
            }
            None => best.push((name.to_string(), distance, i)),
        }
    }
    if best.is_empty() {
        return Err(RepairError::NoCandidates {
            token: token.to_string(),
        });
    }
    best.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.2.cmp(&b.2)));
    best.truncate(5);
    Ok(best.into_iter().map(|(n, _, _)| n).collect())
}

/// Up to five distinct variable names (parameters, locals, or plain
/// references) nearest to an insertion anchor. The anchor's own token stays
/// eligible: re-inserting a duplicate of a neighbour is a valid donor.
fn nearest_variables(anchor_leaf: usize, ast: &MethodAst) -> Result<Vec<String>, RepairError> {
    let mut best: Vec<(String, usize, usize)> = Vec::new();
    for i in 0..ast.leaf_count() {
        let role = match name_role(ast, i) {
            Some(r) => r,
            None => continue,
        };
        if !matches!(role, NameRole::ParamName | NameRole::DeclName | NameRole::VarRef) {
            continue;
        }
        let name = ast.leaf_token(i);
        let distance = i.abs_diff(anchor_leaf);
        match best.iter_mut().find(|(n, _, _)| n == name) {
            Some(entry) => {
                if distance < entry.1 {
                    entry.1 = distance;
                }
                if i < entry.2 {
                    entry.2 = i;
                }
            }
            None => best.push((name.to_string(), distance, i)),
        }
    }
    if best.is_empty() {
        return Err(RepairError::NoCandidates {
            token: ast.leaf_token(anchor_leaf).to_string(),
        });
    }
    best.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.2.cmp(&b.2)));
    best.truncate(5);
    Ok(best.into_iter().map(|(n, _, _)| n).collect())
}

/// Singles in rank order, then unordered pairs (i, j), i < j, in
/// lexicographic rank order. Indices are 0-based positions in the ranking.
pub fn schedule(len: usize, width: usize) -> Vec<Vec<usize>> {
    let w = width.min(len);
    let mut out: Vec<Vec<usize>> = (0..w).map(|i| vec![i]).collect();
    for i in 0..w {
        for j in i + 1..w {
            out.push(vec![i, j]);
        }
    }
    out
}

/// One applied candidate patch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidatePatch {
    pub patched_src: String,
    /// The edits applied, with the replacement token where one was used.
    pub edits: Vec<(OperationPath, Option<String>)>,
    /// 1-based ranks of the operation paths behind the edits.
    pub origin_ranks: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RepairStatus {
    Plausible,
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Correctness {
    Correct,
    Overfitting,
    Unassessed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub status: RepairStatus,
    /// Number of validated candidates up to and including the accepted one.
    pub npc: usize,
    pub patch: Option<CandidatePatch>,
    pub correctness: Correctness,
}

/// Patch validation backend.
pub trait Validate {
    fn validate(&mut self, patched_src: &str) -> Result<bool, RepairError>;

    /// Whether a pass also establishes correctness (true for the oracle
    /// comparison, false for an external test command).
    fn assesses_correctness(&self) -> bool {
        false
    }
}

/// Passes iff the patched token sequence equals the ground-truth fixed
/// method's.
pub struct OracleValidator {
    fixed_tokens: Vec<String>,
}

impl OracleValidator {
    pub fn new(fixed_src: &str) -> Result<Self, SyntaxError> {
        Ok(OracleValidator {
            fixed_tokens: lex(fixed_src)?.into_iter().map(|t| t.text).collect(),
        })
    }
}

impl Validate for OracleValidator {
    fn validate(&mut self, patched_src: &str) -> Result<bool, RepairError> {
        let tokens: Vec<String> = lex(patched_src)?.into_iter().map(|t| t.text).collect();
        Ok(tokens == self.fixed_tokens)
    }

    fn assesses_correctness(&self) -> bool {
        true
    }
}

/// Runs an external command with `{patched}` replaced by the path of a
/// temp file holding the candidate. Exit 0 passes; 126/127 (not runnable)
/// is a validator failure rather than a rejection.
pub struct CommandValidator {
    template: String,
    counter: usize,
}

impl CommandValidator {
    pub fn new(template: &str) -> Self {
        CommandValidator {
            template: template.to_string(),
            counter: 0,
        }
    }
}

impl Validate for CommandValidator {
    fn validate(&mut self, patched_src: &str) -> Result<bool, RepairError> {
        self.counter += 1;
        let path = std::env::temp_dir().join(format!(
            "fixloc-candidate-{}-{}.mj",
            std::process::id(),
            self.counter
        ));
        std::fs::write(&path, patched_src)
            .map_err(|e| RepairError::ValidatorFailure(e.to_string()))?;
        let command = self.template.replace("{patched}", &path.to_string_lossy());
        let status = std::process::Command::new("sh")
            .arg("-c")
            .arg(&command)
            .status()
            .map_err(|e| RepairError::ValidatorFailure(e.to_string()));
        let _ = std::fs::remove_file(&path);
        let status = status?;
        match status.code() {
            Some(0) => Ok(true),
            Some(126) | Some(127) => Err(RepairError::ValidatorFailure(format!(
                "command not runnable (exit {}): {}",
                status.code().unwrap(),
                command
            ))),
            _ => Ok(false),
        }
    }
}

/// Apply one tuple's edits atomically. Edits are applied in descending leaf
/// order so earlier indices stay valid; a tuple touching one leaf twice or
/// hitting an infeasible site yields no candidate.
fn apply_edits(
    ast: &MethodAst,
    edits: &[(OperationPath, Option<String>)],
) -> Option<String> {
    let mut order: Vec<usize> = (0..edits.len()).collect();
    order.sort_by(|a, b| edits[*b].0.leaf_index().cmp(&edits[*a].0.leaf_index()));
    for w in order.windows(2) {
        if edits[w[0]].0.leaf_index() == edits[w[1]].0.leaf_index() {
            return None;
        }
    }
    let mut current = ast.clone();
    for &i in &order {
        let (op, replacement) = &edits[i];
        current = match op.operator {
            ChangeOperator::Update => {
                update_leaf(&current, op.leaf_index(), replacement.as_deref()?)
            }
            ChangeOperator::Delete => delete_leaf(&current, op.leaf_index()).ok()?,
            ChangeOperator::Insert => {
                insert_after_leaf(&current, op.leaf_index(), replacement.as_deref()?).ok()?
            }
        };
    }
    let patched_src = render(&current);
    // The candidate must itself be a valid method.
    parse(&patched_src).ok()?;
    Some(patched_src)
}

/// Candidate replacement lists for one scheduled tuple; `None` marks a
/// path the heuristics cannot service, which skips the tuple.
fn tuple_candidates(
    entries: &[RankedEntry],
    tuple: &[usize],
    ast: &MethodAst,
) -> Option<Vec<Vec<Option<String>>>> {
    let mut lists = Vec::with_capacity(tuple.len());
    for &idx in tuple {
        let op = &entries[idx].op;
        let list: Vec<Option<String>> = match op.operator {
            ChangeOperator::Delete => vec![None],
            ChangeOperator::Update | ChangeOperator::Insert => {
                match candidate_tokens(op, ast) {
                    Ok(tokens) => tokens.into_iter().map(Some).collect(),
                    Err(RepairError::NoCandidates { .. }) => return None,
                    Err(_) => return None,
                }
            }
        };
        lists.push(list);
    }
    Some(lists)
}

/// Run the schedule over a prediction until a candidate passes validation.
///
/// For tuples, replacement combinations run in row-major order (first
/// path's candidates outermost). `width` is the number of top predictions
/// considered (the pipeline default is 20).
pub fn generate_and_validate(
    method_src: &str,
    pred: &RankedPrediction,
    validator: &mut dyn Validate,
    width: usize,
) -> Result<RepairOutcome, RepairError> {
    let ast = parse(method_src)?;
    let mut npc = 0usize;
    for tuple in schedule(pred.entries.len(), width) {
        let lists = match tuple_candidates(&pred.entries, &tuple, &ast) {
            Some(lists) => lists,
            None => continue,
        };
        // Row-major product over the candidate lists.
        let mut cursor = vec![0usize; lists.len()];
        'product: loop {
            let edits: Vec<(OperationPath, Option<String>)> = tuple
                .iter()
                .enumerate()
                .map(|(k, &idx)| (pred.entries[idx].op.clone(), lists[k][cursor[k]].clone()))
                .collect();
            if let Some(patched_src) = apply_edits(&ast, &edits) {
                npc += 1;
                if validator.validate(&patched_src)? {
                    let correctness = if validator.assesses_correctness() {
                        Correctness::Correct
                    } else {
                        Correctness::Unassessed
                    };
                    return Ok(RepairOutcome {
                        status: RepairStatus::Plausible,
                        npc,
                        patch: Some(CandidatePatch {
                            patched_src,
                            edits,
                            origin_ranks: tuple.iter().map(|i| i + 1).collect(),
                        }),
                        correctness,
                    });
                }
            }
            // Advance the row-major cursor (last list fastest).
            let mut k = lists.len();
            loop {
                if k == 0 {
                    break 'product;
                }
                k -= 1;
                cursor[k] += 1;
                if cursor[k] < lists[k].len() {
                    break;
                }
                cursor[k] = 0;
            }
        }
    }
    Ok(RepairOutcome {
        status: RepairStatus::Exhausted,
        npc,
        patch: None,
        correctness: Correctness::Unassessed,
    })
}

/// Correct-over-plausible ratio; `None` when nothing was plausible.
pub fn correctness_ratio(outcomes: &[RepairOutcome]) -> Result<Option<f64>, RepairError> {
    let plausible: Vec<&RepairOutcome> = outcomes
        .iter()
        .filter(|o| o.status == RepairStatus::Plausible)
        .collect();
    if plausible.is_empty() {
        return Ok(None);
    }
    if plausible.iter().any(|o| o.correctness == Correctness::Unassessed) {
        return Err(RepairError::UnassessedOutcome);
    }
    let correct = plausible
        .iter()
        .filter(|o| o.correctness == Correctness::Correct)
        .count();
    Ok(Some(correct as f64 / plausible.len() as f64))
}

/// A synthetic ranking with the oracle paths first (rank 1..) and all other
/// candidates after, in canonical order: the perfect-localization input for
/// pipeline experiments.
pub fn perfect_prediction(
    candidates: &[OperationPath],
    oracle: &[OperationPath],
) -> RankedPrediction {
    let mut ordered: Vec<&OperationPath> = Vec::with_capacity(candidates.len());
    ordered.extend(oracle.iter());
    ordered.extend(candidates.iter().filter(|c| !oracle.contains(c)));
    let n = ordered.len() as f64;
    let total: f64 = (1..=ordered.len()).map(|i| i as f64).sum();
    let entries = ordered
        .into_iter()
        .enumerate()
        .map(|(i, op)| RankedEntry {
            op: op.clone(),
            probability: (n - i as f64) / total,
            score: n - i as f64,
        })
        .collect();
    RankedPrediction { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{mutate, MutationKind};
    use crate::diff::enumerate_operation_paths;

    #[test]
    fn operator_candidates_follow_class_order() {
        let ast = parse("boolean f(int a, int b) { return a == b; }").unwrap();
        let cands = enumerate_operation_paths(&ast);
        let eq = cands
            .iter()
            .find(|c| c.token == "==" && c.operator == ChangeOperator::Update)
            .unwrap();
        assert_eq!(
            candidate_tokens(eq, &ast).unwrap(),
            ["!=", "<", "<=", ">", ">="]
        );
    }

    #[test]
    fn boolean_and_type_candidates() {
        let ast = parse("boolean f() { boolean done = true; int n = 0; return done; }").unwrap();
        let cands = enumerate_operation_paths(&ast);
        let t = cands
            .iter()
            .find(|c| c.token == "true" && c.operator == ChangeOperator::Update)
            .unwrap();
        assert_eq!(candidate_tokens(t, &ast).unwrap(), ["false"]);
        let int_tok = cands
            .iter()
            .find(|c| c.token == "int" && c.operator == ChangeOperator::Update)
            .unwrap();
        assert_eq!(
            candidate_tokens(int_tok, &ast).unwrap(),
            ["long", "float", "double", "boolean", "char"]
        );
    }

    #[test]
    fn string_literals_have_no_candidates() {
        let ast = parse("void f(Logger log) { log.print(\"hello\"); }").unwrap();
        let cands = enumerate_operation_paths(&ast);
        let s = cands
            .iter()
            .find(|c| c.token.starts_with('"') && c.operator == ChangeOperator::Update)
            .unwrap();
        assert!(matches!(
            candidate_tokens(s, &ast),
            Err(RepairError::NoCandidates { .. })
        ));
    }

    #[test]
    fn identifier_candidates_are_nearest_same_type_first() {
        let src = "int f(int alpha, int beta, double rate) { int gamma = alpha; int delta = beta; return gamma; }";
        let ast = parse(src).unwrap();
        let cands = enumerate_operation_paths(&ast);
        // The final 'gamma' usage in the return.
        let target = cands
            .iter()
            .rev()
            .find(|c| c.token == "gamma" && c.operator == ChangeOperator::Update)
            .unwrap();
        let got = candidate_tokens(target, &ast).unwrap();
        // Same-declared-type ints only; 'rate' (double) excluded. Nearest
        // occurrences: beta and delta sit just before the return.
        assert!(got.contains(&"alpha".to_string()));
        assert!(got.contains(&"beta".to_string()));
        assert!(got.contains(&"delta".to_string()));
        assert!(!got.contains(&"rate".to_string()));
        assert!(got.len() <= 5);
        // delta's nearest occurrence is closer than alpha's.
        let d = got.iter().position(|s| s == "delta").unwrap();
        let a = got.iter().position(|s| s == "alpha").unwrap();
        assert!(d < a);
    }

    #[test]
    fn schedule_singles_then_pairs() {
        let got = schedule(10, 3);
        let expect: Vec<Vec<usize>> =
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]];
        assert_eq!(got, expect);
        assert_eq!(schedule(100, 20).len(), 20 + 190);
        // Brute-force comparison of the pair ordering.
        let brute: Vec<Vec<usize>> = {
            let mut v: Vec<Vec<usize>> = (0..5).map(|i| vec![i]).collect();
            for i in 0..5usize {
                for j in 0..5usize {
                    if i < j {
                        v.push(vec![i, j]);
                    }
                }
            }
            v
        };
        assert_eq!(schedule(5, 5), brute);
        // Width larger than the list clamps.
        assert_eq!(schedule(2, 20).len(), 2 + 1);
    }

    fn mutant_pred(src: &str, kind: MutationKind, seed: u64) -> (String, String, RankedPrediction) {
        let m = mutate(src, Some(kind), seed).unwrap();
        let buggy_ast = parse(&m.record.buggy_src).unwrap();
        let cands = enumerate_operation_paths(&buggy_ast);
        let pred = perfect_prediction(&cands, &m.record.oracle);
        (m.record.buggy_src.clone(), m.record.fixed_src.clone(), pred)
    }

    #[test]
    fn boolean_flip_repairs_with_one_candidate() {
        let (buggy, fixed, pred) =
            mutant_pred("boolean f() { return true; }", MutationKind::BooleanFlip, 1);
        let mut validator = OracleValidator::new(&fixed).unwrap();
        let outcome = generate_and_validate(&buggy, &pred, &mut validator, 20).unwrap();
        assert_eq!(outcome.status, RepairStatus::Plausible);
        assert_eq!(outcome.npc, 1);
        assert_eq!(outcome.correctness, Correctness::Correct);
        let patch = outcome.patch.unwrap();
        assert_eq!(patch.origin_ranks, [1]);
        // Token-for-token equality with the ground truth.
        let pt: Vec<String> = lex(&patch.patched_src).unwrap().into_iter().map(|t| t.text).collect();
        let ft: Vec<String> = lex(&fixed).unwrap().into_iter().map(|t| t.text).collect();
        assert_eq!(pt, ft);
    }

    #[test]
    fn npc_counts_candidate_position_in_class_order() {
        // Buggy '!=' (swapped from '=='): candidates for '!=' in class
        // order are [==, <, <=, >, >=]; the true fix '==' sits first.
        let fixed_src = "boolean f(int a, int b) { return a == b; }";
        let fixed = parse(fixed_src).unwrap();
        let at = (0..fixed.leaf_count()).find(|i| fixed.leaf_token(*i) == "==").unwrap();
        let buggy_ast = update_leaf(&fixed, at, "!=");
        let buggy_src = render(&buggy_ast);
        let buggy = parse(&buggy_src).unwrap();
        let oracle = crate::diff::extract_oracle(&buggy, &fixed).unwrap();
        let cands = enumerate_operation_paths(&buggy);
        let pred = perfect_prediction(&cands, &oracle);
        let mut validator = OracleValidator::new(fixed_src).unwrap();
        let outcome = generate_and_validate(&buggy_src, &pred, &mut validator, 20).unwrap();
        assert_eq!(outcome.status, RepairStatus::Plausible);
        assert_eq!(outcome.npc, 1);

        // Same setup with '<' as the buggy token: '==' is now the first
        // candidate but the fix is the fourth ('<' class order: ==,!=,<=,>,>=
        // minus '<' leaves == at 1 ... the true '==' is position 1 again).
        // Use '>' buggy from '>=' fix instead: candidates [==,!=,<,<=,>=],
        // the fix '>=' is fifth.
        let fixed_src = "boolean g(int a, int b) { return a >= b; }";
        let fixed = parse(fixed_src).unwrap();
        let at = (0..fixed.leaf_count()).find(|i| fixed.leaf_token(*i) == ">=").unwrap();
        let buggy_ast = update_leaf(&fixed, at, ">");
        let buggy_src = render(&buggy_ast);
        let buggy = parse(&buggy_src).unwrap();
        let oracle = crate::diff::extract_oracle(&buggy, &fixed).unwrap();
        let cands = enumerate_operation_paths(&buggy);
        let pred = perfect_prediction(&cands, &oracle);
        let mut validator = OracleValidator::new(fixed_src).unwrap();
        let outcome = generate_and_validate(&buggy_src, &pred, &mut validator, 20).unwrap();
        assert_eq!(outcome.npc, 5);
    }

    #[test]
    fn paths_without_candidates_cost_nothing() {
        // Put a string-literal UPDATE at rank 1 ahead of the oracle: the
        // skipped path must not consume validations.
        let fixed_src = "boolean f(Log log) { log.say(\"hi\"); return true; }";
        let fixed = parse(fixed_src).unwrap();
        let at = (0..fixed.leaf_count()).find(|i| fixed.leaf_token(*i) == "true").unwrap();
        let buggy_ast = update_leaf(&fixed, at, "false");
        let buggy_src = render(&buggy_ast);
        let buggy = parse(&buggy_src).unwrap();
        let oracle = crate::diff::extract_oracle(&buggy, &fixed).unwrap();
        let cands = enumerate_operation_paths(&buggy);
        let string_update = cands
            .iter()
            .find(|c| c.token.starts_with('"') && c.operator == ChangeOperator::Update)
            .unwrap()
            .clone();
        let mut ordered = vec![string_update];
        ordered.extend(oracle.iter().cloned());
        let pred = perfect_prediction(&cands, &ordered);
        // Rank 1 is the string update (no candidates), rank 2 the oracle.
        let mut validator = OracleValidator::new(fixed_src).unwrap();
        let outcome = generate_and_validate(&buggy_src, &pred, &mut validator, 20).unwrap();
        assert_eq!(outcome.status, RepairStatus::Plausible);
        assert_eq!(outcome.npc, 1);
        assert_eq!(outcome.patch.unwrap().origin_ranks, [2]);
    }

    struct CountingValidator {
        inner: OracleValidator,
        calls: usize,
    }

    impl Validate for CountingValidator {
        fn validate(&mut self, patched_src: &str) -> Result<bool, RepairError> {
            self.calls += 1;
            self.inner.validate(patched_src)
        }
        fn assesses_correctness(&self) -> bool {
            true
        }
    }

    #[test]
    fn npc_equals_validator_invocations() {
        let src = "int f(int first, int second) { int third = first + second; if (first < second) { third = third * 2; } return third; }";
        for seed in [3, 5, 9] {
            for kind in [MutationKind::OperatorSwap, MutationKind::TypeSwap, MutationKind::IdentifierSwap] {
                let m = match mutate(src, Some(kind), seed) {
                    Ok(m) => m,
                    Err(_) => continue,
                };
                let buggy = parse(&m.record.buggy_src).unwrap();
                let cands = enumerate_operation_paths(&buggy);
                let pred = perfect_prediction(&cands, &m.record.oracle);
                let mut validator = CountingValidator {
                    inner: OracleValidator::new(&m.record.fixed_src).unwrap(),
                    calls: 0,
                };
                let outcome =
                    generate_and_validate(&m.record.buggy_src, &pred, &mut validator, 20).unwrap();
                assert_eq!(outcome.npc, validator.calls);
                assert_eq!(outcome.status, RepairStatus::Plausible);
            }
        }
    }

    #[test]
    fn deterministic_outcomes() {
        let (buggy, fixed, pred) = mutant_pred(
            "int f(int a, int b) { if (a < b) { return a; } return b; }",
            MutationKind::OperatorSwap,
            7,
        );
        let mut v1 = OracleValidator::new(&fixed).unwrap();
        let mut v2 = OracleValidator::new(&fixed).unwrap();
        let o1 = generate_and_validate(&buggy, &pred, &mut v1, 20).unwrap();
        let o2 = generate_and_validate(&buggy, &pred, &mut v2, 20).unwrap();
        assert_eq!(o1.npc, o2.npc);
        assert_eq!(o1.status, o2.status);
        assert_eq!(
            o1.patch.as_ref().map(|p| &p.patched_src),
            o2.patch.as_ref().map(|p| &p.patched_src)
        );
    }

    #[test]
    fn correctness_ratio_rules() {
        let plausible = |c: Correctness| RepairOutcome {
            status: RepairStatus::Plausible,
            npc: 1,
            patch: None,
            correctness: c,
        };
        let exhausted = RepairOutcome {
            status: RepairStatus::Exhausted,
            npc: 4,
            patch: None,
            correctness: Correctness::Unassessed,
        };
        // 4 plausible, 3 correct.
        let outcomes = vec![
            plausible(Correctness::Correct),
            plausible(Correctness::Correct),
            plausible(Correctness::Overfitting),
            plausible(Correctness::Correct),
            exhausted.clone(),
        ];
        assert_eq!(correctness_ratio(&outcomes).unwrap(), Some(0.75));
        // No plausible patches: undefined.
        assert_eq!(correctness_ratio(&[exhausted]).unwrap(), None);
        // Unassessed plausible: an error.
        assert!(matches!(
            correctness_ratio(&[plausible(Correctness::Unassessed)]),
            Err(RepairError::UnassessedOutcome)
        ));
    }

    #[test]
    fn command_validator_runs_and_distinguishes_failure_kinds() {
        let mut pass = CommandValidator::new("true # {patched}");
        assert!(pass.validate("int f ( ) { return 0 ; }").unwrap());
        let mut fail = CommandValidator::new("false # {patched}");
        assert!(!fail.validate("int f ( ) { return 0 ; }").unwrap());
        let mut missing = CommandValidator::new("definitely-not-a-command-xyz {patched}");
        assert!(matches!(
            missing.validate("int f ( ) { return 0 ; }"),
            Err(RepairError::ValidatorFailure(_))
        ));
        // The file content reaches the command.
        let mut grep = CommandValidator::new("grep -q 'return 0' {patched}");
        assert!(grep.validate("int f ( ) { return 0 ; }").unwrap());
        assert!(!grep.validate("int f ( ) { return 1 ; }").unwrap());
    }

    #[test]
    fn delete_repair_removes_the_leaf() {
        let (buggy, fixed, pred) = mutant_pred(
            "int f(int a) { return util.combine(a); }",
            MutationKind::TokenInsert,
            9,
        );
        let mut validator = OracleValidator::new(&fixed).unwrap();
        let outcome = generate_and_validate(&buggy, &pred, &mut validator, 20).unwrap();
        assert_eq!(outcome.status, RepairStatus::Plausible);
        assert_eq!(outcome.npc, 1);
    }

    #[test]
    fn insert_repair_restores_a_deleted_argument() {
        // Delete 'b' from combine(a, b); the oracle INSERT anchors at 'a'
        // and 'b' is a nearest same-type identifier, so the pipeline can
        // rebuild the call.
        let fixed_src = "int f(int a, int b) { return util.combine(a, b); }";
        let m = mutate(fixed_src, Some(MutationKind::TokenDelete), 41).unwrap();
        let buggy = parse(&m.record.buggy_src).unwrap();
        let cands = enumerate_operation_paths(&buggy);
        let pred = perfect_prediction(&cands, &m.record.oracle);
        let mut validator = OracleValidator::new(&m.record.fixed_src).unwrap();
        let outcome =
            generate_and_validate(&m.record.buggy_src, &pred, &mut validator, 20).unwrap();
        assert_eq!(outcome.status, RepairStatus::Plausible, "buggy: {}", m.record.buggy_src);
    }
}
