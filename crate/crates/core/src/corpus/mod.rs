//! Ground-truth corpus generation: inject single-token bugs into correct
//! methods and record the fixing operation path. Every mutant still parses,
//! and applying the recorded fix reproduces the original method, so the
//! corpus comes with exact oracles for free.

use crate::diff::{ChangeOperator, OperationPath, PatchRecord};
use crate::lang::{
    delete_leaf, insert_after_leaf, is_deletable, name_role, operator_class, parse, render,
    update_leaf, MethodAst, NameRole, NodeKind, SymbolTable, SWAPPABLE_TYPES,
};
use crate::rng::{derive_seed, Rng};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// How a method gets broken. Each kind maps to exactly one fixing operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MutationKind {
    /// Swap an operator within its class; fixed by UPDATE.
    OperatorSwap,
    /// Negate a boolean literal; fixed by UPDATE.
    BooleanFlip,
    /// Swap a data type; fixed by UPDATE.
    TypeSwap,
    /// Use another in-scope identifier; fixed by UPDATE.
    IdentifierSwap,
    /// Remove a token; fixed by INSERT at the preceding leaf.
    TokenDelete,
    /// Add a spurious token; fixed by DELETE.
    TokenInsert,
}

impl MutationKind {
    pub const ALL: [MutationKind; 6] = [
        MutationKind::OperatorSwap,
        MutationKind::BooleanFlip,
        MutationKind::TypeSwap,
        MutationKind::IdentifierSwap,
        MutationKind::TokenDelete,
        MutationKind::TokenInsert,
    ];

    /// The operator of the fix this mutation calls for.
    pub fn fix_operator(self) -> ChangeOperator {
        match self {
            MutationKind::OperatorSwap
            | MutationKind::BooleanFlip
            | MutationKind::TypeSwap
            | MutationKind::IdentifierSwap => ChangeOperator::Update,
            MutationKind::TokenDelete => ChangeOperator::Insert,
            MutationKind::TokenInsert => ChangeOperator::Delete,
        }
    }
}

impl fmt::Display for MutationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// A patch record plus the provenance of its injected bug.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MutantRecord {
    #[serde(flatten)]
    pub record: PatchRecord,
    pub mutation_kind: MutationKind,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MutateError {
    /// The method has no leaf the requested kind can act on.
    NoEligibleLeaf { kind: Option<MutationKind> },
    /// A corpus quota could not be filled from the given seed methods.
    InfeasibleMix { kind: MutationKind, filled: usize, wanted: usize },
    Syntax(crate::lang::SyntaxError),
}

impl fmt::Display for MutateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MutateError::NoEligibleLeaf { kind: Some(k) } => {
                write!(f, "no leaf eligible for {}", k)
            }
            MutateError::NoEligibleLeaf { kind: None } => {
                write!(f, "no leaf eligible for any mutation kind")
            }
            MutateError::InfeasibleMix { kind, filled, wanted } => {
                write!(f, "could only generate {}/{} {} mutants", filled, wanted, kind)
            }
            MutateError::Syntax(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for MutateError {}

impl From<crate::lang::SyntaxError> for MutateError {
    fn from(e: crate::lang::SyntaxError) -> Self {
        MutateError::Syntax(e)
    }
}

type LeafKey = (Vec<NodeKind>, String);

fn leaf_keys(ast: &MethodAst) -> Vec<LeafKey> {
    (0..ast.leaf_count())
        .map(|i| (ast.path_of_leaf(i).kinds, ast.leaf_token(i).to_string()))
        .collect()
}

fn common_prefix(a: &[LeafKey], b: &[LeafKey]) -> usize {
    let mut p = 0;
    while p < a.len() && p < b.len() && a[p] == b[p] {
        p += 1;
    }
    p
}

/// One edit applied to the fixed tree, before rendering.
enum AppliedEdit {
    Update,
    Delete,
    Insert,
}

struct Site {
    kind: MutationKind,
    leaf: usize,
    /// Replacement or inserted token, where the kind needs one.
    token: Option<String>,
}

/// Enumerate the sites a mutation kind can act on, in leaf order. For kinds
/// that replace a token, the replacement is picked here with the rng so the
/// whole decision is reproducible.
fn eligible_sites(
    ast: &MethodAst,
    kind: MutationKind,
    rng: &mut Rng,
) -> Vec<Site> {
    let mut sites = Vec::new();
    match kind {
        MutationKind::OperatorSwap => {
            for i in 0..ast.leaf_count() {
                if ast.kind(ast.leaf_id(i)) != NodeKind::Operator {
                    continue;
                }
                let token = ast.leaf_token(i);
                if let Some(class) = operator_class(token) {
                    let options: Vec<&&str> = class.iter().filter(|c| **c != token).collect();
                    let pick = (*rng.choose(&options)).to_string();
                    sites.push(Site { kind, leaf: i, token: Some(pick) });
                }
            }
        }
        MutationKind::BooleanFlip => {
            for i in 0..ast.leaf_count() {
                if ast.kind(ast.leaf_id(i)) == NodeKind::BooleanLiteral {
                    let flipped = if ast.leaf_token(i) == "true" { "false" } else { "true" };
                    sites.push(Site { kind, leaf: i, token: Some(flipped.to_string()) });
                }
            }
        }
        MutationKind::TypeSwap => {
            for i in 0..ast.leaf_count() {
                if ast.kind(ast.leaf_id(i)) != NodeKind::TypeName {
                    continue;
                }
                let token = ast.leaf_token(i);
                if SWAPPABLE_TYPES.contains(&token) {
                    let options: Vec<&&str> =
                        SWAPPABLE_TYPES.iter().filter(|c| **c != token).collect();
                    let pick = (*rng.choose(&options)).to_string();
                    sites.push(Site { kind, leaf: i, token: Some(pick) });
                }
            }
        }
        MutationKind::IdentifierSwap => {
            let table = SymbolTable::build(ast);
            for i in 0..ast.leaf_count() {
                if name_role(ast, i) != Some(NameRole::VarRef) {
                    continue;
                }
                let token = ast.leaf_token(i);
                let same_type: Vec<&str> = match table.type_of(token) {
                    Some(ty) => table
                        .names()
                        .filter(|n| *n != token && table.type_of(n) == Some(ty))
                        .collect(),
                    None => Vec::new(),
                };
                let pool: Vec<&str> = if same_type.is_empty() {
                    table.names().filter(|n| *n != token).collect()
                } else {
                    same_type
                };
                if pool.is_empty() {
                    continue;
                }
                let pick = (*rng.choose(&pool)).to_string();
                sites.push(Site { kind, leaf: i, token: Some(pick) });
            }
        }
        MutationKind::TokenDelete => {
            for i in 0..ast.leaf_count() {
                if is_deletable(ast, i) {
                    sites.push(Site { kind, leaf: i, token: None });
                }
            }
        }
        MutationKind::TokenInsert => {
            let table = SymbolTable::build(ast);
            let names: Vec<&str> = table.names().collect();
            for i in 0..ast.leaf_count() {
                // Anchors that sit in (or head) an argument list accept a
                // new identifier argument; any leaf works for a modifier,
                // but keep insertion realistic: identifiers into calls,
                // or a modifier when the method still lacks one.
                let insertable = {
                    let id = ast.leaf_id(i);
                    let mut node = id;
                    let mut in_call = false;
                    while let Some(p) = ast.parent(node) {
                        if ast.kind(p) == NodeKind::MethodInvocation {
                            in_call = true;
                            break;
                        }
                        node = p;
                    }
                    in_call
                };
                if insertable && !names.is_empty() {
                    let pick = (*rng.choose(&names)).to_string();
                    sites.push(Site { kind, leaf: i, token: Some(pick) });
                } else if ast.kind(ast.leaf_id(i)) == NodeKind::Modifier {
                    let modifier = *rng.choose(&["public", "private", "static"]);
                    sites.push(Site { kind, leaf: i, token: Some(modifier.to_string()) });
                }
            }
        }
    }
    sites
}

/// Inject one bug of the given kind (or any eligible kind) into a correct
/// method. Both sides of the returned record are in canonical rendering;
/// the oracle is the operation path of the fix on the buggy AST.
pub fn mutate(
    method_src: &str,
    kind: Option<MutationKind>,
    seed: u64,
) -> Result<MutantRecord, MutateError> {
    let parsed = parse(method_src)?;
    let fixed_src = render(&parsed);
    let fixed = parse(&fixed_src)?;
    let mut rng = Rng::new(seed);

    let kind = match kind {
        Some(k) => k,
        None => {
            let eligible: Vec<MutationKind> = MutationKind::ALL
                .into_iter()
                .filter(|k| {
                    let mut probe = Rng::new(seed ^ 0x5eed);
                    !eligible_sites(&fixed, *k, &mut probe).is_empty()
                })
                .collect();
            if eligible.is_empty() {
                return Err(MutateError::NoEligibleLeaf { kind: None });
            }
            *rng.choose(&eligible)
        }
    };

    let mut sites = eligible_sites(&fixed, kind, &mut rng);
    if sites.is_empty() {
        return Err(MutateError::NoEligibleLeaf { kind: Some(kind) });
    }
    rng.shuffle(&mut sites);
    for site in &sites {
        if let Some(m) = try_site(&fixed, &fixed_src, site, seed)? {
            return Ok(m);
        }
    }
    Err(MutateError::NoEligibleLeaf { kind: Some(kind) })
}

/// Apply one site, re-parse, and verify the edit is a clean single-leaf
/// change (operator swaps across precedence levels can reshape the tree;
/// those sites are rejected).
fn try_site(
    fixed: &MethodAst,
    fixed_src: &str,
    site: &Site,
    seed: u64,
) -> Result<Option<MutantRecord>, MutateError> {
    let (edited, applied) = match site.kind {
        MutationKind::OperatorSwap
        | MutationKind::BooleanFlip
        | MutationKind::TypeSwap
        | MutationKind::IdentifierSwap => {
            let tok = site.token.as_deref().expect("update site carries a token");
            (update_leaf(fixed, site.leaf, tok), AppliedEdit::Update)
        }
        MutationKind::TokenDelete => match delete_leaf(fixed, site.leaf) {
            Ok(t) => (t, AppliedEdit::Delete),
            Err(_) => return Ok(None),
        },
        MutationKind::TokenInsert => {
            let tok = site.token.as_deref().expect("insert site carries a token");
            match insert_after_leaf(fixed, site.leaf, tok) {
                Ok(t) => (t, AppliedEdit::Insert),
                Err(_) => return Ok(None),
            }
        }
    };
    let buggy_src = render(&edited);
    if buggy_src == fixed_src {
        return Ok(None);
    }
    let buggy = match parse(&buggy_src) {
        Ok(b) => b,
        Err(_) => return Ok(None),
    };

    let fixed_keys = leaf_keys(fixed);
    let buggy_keys = leaf_keys(&buggy);
    let prefix = common_prefix(&buggy_keys, &fixed_keys);

    let oracle = match applied {
        AppliedEdit::Update => {
            // Single token change, identical kind chains everywhere.
            if buggy_keys.len() != fixed_keys.len() {
                return Ok(None);
            }
            let diffs: Vec<usize> = (0..buggy_keys.len())
                .filter(|i| buggy_keys[*i] != fixed_keys[*i])
                .collect();
            if diffs.len() != 1 || buggy_keys[diffs[0]].0 != fixed_keys[diffs[0]].0 {
                return Ok(None);
            }
            let at = diffs[0];
            OperationPath {
                token: buggy.leaf_token(at).to_string(),
                path: buggy.path_of_leaf(at),
                operator: ChangeOperator::Update,
            }
        }
        AppliedEdit::Delete => {
            // The buggy side is one leaf short; the fix inserts after the
            // leaf preceding the canonical hole (the first leaf when the
            // hole is at the front).
            if buggy_keys.len() + 1 != fixed_keys.len()
                || buggy_keys[prefix..] != fixed_keys[prefix + 1..]
            {
                return Ok(None);
            }
            let anchor = prefix.saturating_sub(1);
            OperationPath {
                token: buggy.leaf_token(anchor).to_string(),
                path: buggy.path_of_leaf(anchor),
                operator: ChangeOperator::Insert,
            }
        }
        AppliedEdit::Insert => {
            // The buggy side has one extra leaf at the canonical position.
            if buggy_keys.len() != fixed_keys.len() + 1
                || buggy_keys[prefix + 1..] != fixed_keys[prefix..]
            {
                return Ok(None);
            }
            OperationPath {
                token: buggy.leaf_token(prefix).to_string(),
                path: buggy.path_of_leaf(prefix),
                operator: ChangeOperator::Delete,
            }
        }
    };

    Ok(Some(MutantRecord {
        record: PatchRecord {
            id: format!("mutant-{:016x}", seed),
            buggy_src,
            fixed_src: fixed_src.to_string(),
            oracle: vec![oracle],
        },
        mutation_kind: site.kind,
        seed,
    }))
}

/// Two independent single-leaf updates in one record (the two-location
/// repair case, like a type widened in two declarations). The oracle holds
/// both UPDATE paths.
pub fn mutate_paired(method_src: &str, seed: u64) -> Result<MutantRecord, MutateError> {
    let parsed = parse(method_src)?;
    let fixed_src = render(&parsed);
    let fixed = parse(&fixed_src)?;
    let mut rng = Rng::new(seed);
    let update_kinds = [
        MutationKind::OperatorSwap,
        MutationKind::BooleanFlip,
        MutationKind::TypeSwap,
        MutationKind::IdentifierSwap,
    ];
    let mut sites: Vec<Site> = Vec::new();
    for kind in update_kinds {
        sites.extend(eligible_sites(&fixed, kind, &mut rng));
    }
    sites.sort_by_key(|s| s.leaf);
    sites.dedup_by_key(|s| s.leaf);
    if sites.len() < 2 {
        return Err(MutateError::NoEligibleLeaf { kind: None });
    }
    rng.shuffle(&mut sites);
    let (a, b) = (&sites[0], &sites[1]);
    let step1 = update_leaf(&fixed, a.leaf, a.token.as_deref().unwrap());
    let step2 = update_leaf(&step1, b.leaf, b.token.as_deref().unwrap());
    let buggy_src = render(&step2);
    let buggy = parse(&buggy_src)?;

    let fixed_keys = leaf_keys(&fixed);
    let buggy_keys = leaf_keys(&buggy);
    if buggy_keys.len() != fixed_keys.len() {
        return Err(MutateError::NoEligibleLeaf { kind: None });
    }
    let diffs: Vec<usize> = (0..buggy_keys.len())
        .filter(|i| buggy_keys[*i] != fixed_keys[*i])
        .collect();
    if diffs.len() != 2 || diffs.iter().any(|i| buggy_keys[*i].0 != fixed_keys[*i].0) {
        return Err(MutateError::NoEligibleLeaf { kind: None });
    }
    let oracle = diffs
        .into_iter()
        .map(|i| OperationPath {
            token: buggy.leaf_token(i).to_string(),
            path: buggy.path_of_leaf(i),
            operator: ChangeOperator::Update,
        })
        .collect();
    Ok(MutantRecord {
        record: PatchRecord {
            id: format!("mutant-{:016x}-paired", seed),
            buggy_src,
            fixed_src,
            oracle,
        },
        mutation_kind: MutationKind::IdentifierSwap,
        seed,
    })
}

/// Corpus generation manifest, written beside the JSONL output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub seed: u64,
    pub n: usize,
    pub mix: Vec<(MutationKind, f64)>,
    pub seed_method_count: usize,
    pub grammar_version: u32,
}

pub const GRAMMAR_VERSION: u32 = 1;

/// Generate `n` mutants over the seed methods with the requested kind mix.
///
/// Quotas come from largest-remainder allocation of the normalized weights,
/// so realized proportions sit within one record of the targets. Records
/// never duplicate a (buggy, fixed) pair. Deterministic for a given seed.
pub fn generate_corpus(
    seed_methods: &[String],
    n: usize,
    mix: &[(MutationKind, f64)],
    seed: u64,
) -> Result<(Vec<MutantRecord>, CorpusManifest), MutateError> {
    assert!(n >= 1, "need at least one record");
    assert!(!seed_methods.is_empty(), "need seed methods");
    let total_weight: f64 = mix.iter().map(|(_, w)| w).sum();
    assert!(total_weight > 0.0, "mix weights must sum to a positive value");

    // Largest-remainder quotas.
    let mut quotas: Vec<(MutationKind, usize, f64)> = mix
        .iter()
        .map(|(k, w)| {
            let exact = w / total_weight * n as f64;
            (*k, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = quotas.iter().map(|(_, q, _)| q).sum();
    let mut by_remainder: Vec<usize> = (0..quotas.len()).collect();
    by_remainder.sort_by(|a, b| quotas[*b].2.partial_cmp(&quotas[*a].2).unwrap());
    for &i in by_remainder.iter().take(n - assigned) {
        quotas[i].1 += 1;
    }

    let mut records = Vec::with_capacity(n);
    let mut seen: BTreeSet<(String, String)> = BTreeSet::new();
    let mut rng = Rng::new(derive_seed(seed, "corpus"));
    for (kind, quota, _) in &quotas {
        let mut filled = 0;
        let mut attempts = 0usize;
        let max_attempts = quota * 200 + 1000;
        while filled < *quota {
            attempts += 1;
            if attempts > max_attempts {
                return Err(MutateError::InfeasibleMix {
                    kind: *kind,
                    filled,
                    wanted: *quota,
                });
            }
            let method = rng.choose(seed_methods);
            let mutant_seed = rng.next_u64();
            let mut mutant = match mutate(method, Some(*kind), mutant_seed) {
                Ok(m) => m,
                Err(MutateError::NoEligibleLeaf { .. }) => continue,
                Err(e) => return Err(e),
            };
            let key = (mutant.record.buggy_src.clone(), mutant.record.fixed_src.clone());
            if !seen.insert(key) {
                continue;
            }
            mutant.record.id = format!("m{:06}", records.len());
            records.push(mutant);
            filled += 1;
        }
    }
    let manifest = CorpusManifest {
        seed,
        n,
        mix: mix.to_vec(),
        seed_method_count: seed_methods.len(),
        grammar_version: GRAMMAR_VERSION,
    };
    Ok((records, manifest))
}

/// Default kind mix. Boolean flips get a lower weight than the swap kinds:
/// a flip site yields exactly one distinct mutant, so their supply grows
/// only with the number of seed methods.
pub fn default_mix() -> Vec<(MutationKind, f64)> {
    vec![
        (MutationKind::OperatorSwap, 0.30),
        (MutationKind::BooleanFlip, 0.10),
        (MutationKind::TypeSwap, 0.20),
        (MutationKind::IdentifierSwap, 0.20),
        (MutationKind::TokenDelete, 0.10),
        (MutationKind::TokenInsert, 0.10),
    ]
}

mod synth;
pub use synth::synth_seed_methods;
