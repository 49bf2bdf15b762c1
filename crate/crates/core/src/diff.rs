//! Operation paths and patch records: enumerating candidates over a method,
//! extracting oracle edits from (buggy, fixed) pairs, and labelling
//! candidates against an oracle.
//!
//! The differ aligns the two pre-order leaf sequences, keyed on the full
//! root-to-leaf kind chain plus the token. Common prefix and suffix are
//! trimmed first, which also canonicalizes ambiguous insert/delete sites in
//! runs of equal tokens; the remaining middle is aligned by longest common
//! subsequence. This pairs single-token edits exactly the way a tree
//! differencing tool would, without move detection.

use crate::lang::{AstPath, MethodAst, NodeKind};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{BufRead, Write};

/// Atomic change operator applied at a leaf.
///
/// Canonical order is `UPDATE < DELETE < INSERT`; candidate enumeration and
/// tie-breaking rely on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ChangeOperator {
    #[serde(rename = "UPDATE")]
    Update,
    #[serde(rename = "DELETE")]
    Delete,
    #[serde(rename = "INSERT")]
    Insert,
}

impl ChangeOperator {
    pub const ALL: [ChangeOperator; 3] = [
        ChangeOperator::Update,
        ChangeOperator::Delete,
        ChangeOperator::Insert,
    ];

    pub fn index(self) -> usize {
        match self {
            ChangeOperator::Update => 0,
            ChangeOperator::Delete => 1,
            ChangeOperator::Insert => 2,
        }
    }
}

impl fmt::Display for ChangeOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChangeOperator::Update => "UPDATE",
            ChangeOperator::Delete => "DELETE",
            ChangeOperator::Insert => "INSERT",
        };
        f.write_str(s)
    }
}

/// The ranked unit: a leaf token, its AST path, and a change operator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OperationPath {
    pub token: String,
    #[serde(flatten)]
    pub path: AstPath,
    pub operator: ChangeOperator,
}

impl OperationPath {
    pub fn leaf_index(&self) -> usize {
        self.path.leaf_index
    }
}

/// One dataset row: a buggy method, its fixed version, and the oracle
/// operation paths on the buggy AST.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchRecord {
    pub id: String,
    pub buggy_src: String,
    pub fixed_src: String,
    pub oracle: Vec<OperationPath>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffError {
    /// The pair implies more leaf edits than the supported patch class, a
    /// structural rewrite, or no edit at all.
    UnsupportedPatch { reason: String },
    /// An oracle path was not found among the candidates.
    OracleMissing { token: String, leaf_index: usize },
}

impl fmt::Display for DiffError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffError::UnsupportedPatch { reason } => write!(f, "unsupported patch: {}", reason),
            DiffError::OracleMissing { token, leaf_index } => {
                write!(f, "oracle path ('{}' at leaf {}) missing from candidates", token, leaf_index)
            }
        }
    }
}

impl std::error::Error for DiffError {}

/// Largest diff (in leaf edits) the oracle extractor accepts.
pub const MAX_LEAF_EDITS: usize = 2;

/// All `3 * leaf_count` candidate operation paths of a method, ordered by
/// `(leaf_index, operator)`.
pub fn enumerate_operation_paths(ast: &MethodAst) -> Vec<OperationPath> {
    let mut out = Vec::with_capacity(ast.leaf_count() * 3);
    for leaf_index in 0..ast.leaf_count() {
        let path = ast.path_of_leaf(leaf_index);
        let token = ast.leaf_token(leaf_index).to_string();
        for op in ChangeOperator::ALL {
            out.push(OperationPath {
                token: token.clone(),
                path: path.clone(),
                operator: op,
            });
        }
    }
    out
}

#[derive(Clone, PartialEq, Eq)]
struct LeafKey {
    kinds: Vec<NodeKind>,
    token: String,
}

fn leaf_keys(ast: &MethodAst) -> Vec<LeafKey> {
    (0..ast.leaf_count())
        .map(|i| LeafKey {
            kinds: ast.path_of_leaf(i).kinds,
            token: ast.leaf_token(i).to_string(),
        })
        .collect()
}

/// Extract the oracle operation paths of a (buggy, fixed) pair.
///
/// An aligned position with equal kind chains but different tokens is an
/// `UPDATE` on the buggy leaf; a buggy-only leaf is a `DELETE`; a fixed-only
/// leaf becomes an `INSERT` attached to the buggy leaf immediately preceding
/// the insertion point (the first buggy leaf when inserting at the front).
pub fn extract_oracle(buggy: &MethodAst, fixed: &MethodAst) -> Result<Vec<OperationPath>, DiffError> {
    let a = leaf_keys(buggy);
    let b = leaf_keys(fixed);

    // Common prefix, then common suffix over the remainder.
    let mut prefix = 0;
    while prefix < a.len() && prefix < b.len() && a[prefix] == b[prefix] {
        prefix += 1;
    }
    let mut suffix = 0;
    while suffix < a.len() - prefix && suffix < b.len() - prefix
        && a[a.len() - 1 - suffix] == b[b.len() - 1 - suffix]
    {
        suffix += 1;
    }
    let mid_a: Vec<usize> = (prefix..a.len() - suffix).collect();
    let mid_b: Vec<usize> = (prefix..b.len() - suffix).collect();

    if mid_a.is_empty() && mid_b.is_empty() {
        return Err(DiffError::UnsupportedPatch {
            reason: "buggy and fixed methods are identical (zero edits)".to_string(),
        });
    }

    // LCS over the middle, on full (kinds, token) keys.
    let matches = lcs_pairs(&a, &b, &mid_a, &mid_b);

    // Walk the gaps between consecutive matches and classify edits.
    let mut edits: Vec<OperationPath> = Vec::new();
    let mut ai = 0; // cursor into mid_a
    let mut bi = 0;
    let mut last_buggy: Option<usize> = if prefix > 0 { Some(prefix - 1) } else { None };

    let mut pairs = matches.into_iter().peekable();
    loop {
        let (stop_a, stop_b) = match pairs.peek() {
            Some((ma, mb)) => (*ma, *mb),
            None => (a.len() - suffix, b.len() - suffix),
        };
        // Gap segments before the next matched pair.
        let gap_a: Vec<usize> = mid_a[ai..].iter().copied().take_while(|i| *i < stop_a).collect();
        let gap_b: Vec<usize> = mid_b[bi..].iter().copied().take_while(|j| *j < stop_b).collect();
        ai += gap_a.len();
        bi += gap_b.len();

        let paired = gap_a.len().min(gap_b.len());
        for k in 0..paired {
            let i = gap_a[k];
            let j = gap_b[k];
            if a[i].kinds != b[j].kinds {
                return Err(DiffError::UnsupportedPatch {
                    reason: format!(
                        "structural rewrite at buggy leaf {} ('{}' vs '{}')",
                        i, a[i].token, b[j].token
                    ),
                });
            }
            edits.push(OperationPath {
                token: a[i].token.clone(),
                path: buggy.path_of_leaf(i),
                operator: ChangeOperator::Update,
            });
            last_buggy = Some(i);
        }
        for &i in &gap_a[paired..] {
            edits.push(OperationPath {
                token: a[i].token.clone(),
                path: buggy.path_of_leaf(i),
                operator: ChangeOperator::Delete,
            });
            last_buggy = Some(i);
        }
        if gap_b.len() > paired {
            let anchor = last_buggy.unwrap_or(0);
            for _ in &gap_b[paired..] {
                edits.push(OperationPath {
                    token: buggy.leaf_token(anchor).to_string(),
                    path: buggy.path_of_leaf(anchor),
                    operator: ChangeOperator::Insert,
                });
            }
        }

        match pairs.next() {
            Some((ma, _)) => {
                last_buggy = Some(ma);
                ai += 1;
                bi += 1;
            }
            None => break,
        }
    }

    if edits.is_empty() {
        return Err(DiffError::UnsupportedPatch {
            reason: "alignment produced no edits".to_string(),
        });
    }
    if edits.len() > MAX_LEAF_EDITS {
        return Err(DiffError::UnsupportedPatch {
            reason: format!("{} leaf edits exceed the supported maximum of {}", edits.len(), MAX_LEAF_EDITS),
        });
    }
    Ok(edits)
}

/// Longest common subsequence over the index slices `ia` / `ib`, returning
/// matched (buggy, fixed) index pairs in increasing order. Ties in the DP
/// table are broken toward consuming buggy leaves first, which keeps gap
/// classification deterministic.
fn lcs_pairs(a: &[LeafKey], b: &[LeafKey], ia: &[usize], ib: &[usize]) -> Vec<(usize, usize)> {
    let n = ia.len();
    let m = ib.len();
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let mut dp = vec![0u32; (n + 1) * (m + 1)];
    let at = |i: usize, j: usize| i * (m + 1) + j;
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            dp[at(i, j)] = if a[ia[i]] == b[ib[j]] {
                dp[at(i + 1, j + 1)] + 1
            } else {
                dp[at(i + 1, j)].max(dp[at(i, j + 1)])
            };
        }
    }
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m {
        if a[ia[i]] == b[ib[j]] {
            out.push((ia[i], ib[j]));
            i += 1;
            j += 1;
        } else if dp[at(i + 1, j)] >= dp[at(i, j + 1)] {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// Binary labels for candidates against an oracle: 1 exactly when the
/// candidate equals an oracle path on (token, kinds, leaf index, operator).
pub fn label_paths(
    candidates: &[OperationPath],
    oracle: &[OperationPath],
) -> Result<Vec<u8>, DiffError> {
    for o in oracle {
        if !candidates.iter().any(|c| c == o) {
            return Err(DiffError::OracleMissing {
                token: o.token.clone(),
                leaf_index: o.leaf_index(),
            });
        }
    }
    Ok(candidates
        .iter()
        .map(|c| u8::from(oracle.iter().any(|o| o == c)))
        .collect())
}

/// Serialize records as JSON Lines.
pub fn write_jsonl<W: Write>(mut w: W, records: &[PatchRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Read records from JSON Lines, skipping blank lines.
pub fn read_jsonl<R: BufRead>(r: R) -> std::io::Result<Vec<PatchRecord>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PatchRecord = serde_json::from_str(&line)
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        out.push(rec);
    }
    Ok(out)
}
