//! Leaf-level tree edits shared by the mutation generator and the repair
//! pipeline, plus a small symbol table for "same type" identifier lookups.
//!
//! Deletes and inserts are restricted to sites where the grammar stays
//! valid with a single-token change: method modifiers and single-leaf call
//! arguments. Updates never change a leaf's kind, so they are always valid.

use super::{MethodAst, NodeId, NodeKind};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EditError {
    /// The leaf cannot be removed without breaking the grammar.
    NoDeleteSite { leaf_index: usize },
    /// No grammatical position to insert the token next to the anchor.
    NoInsertSite { leaf_index: usize, token: String },
}

impl fmt::Display for EditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EditError::NoDeleteSite { leaf_index } => {
                write!(f, "leaf {} is not deletable", leaf_index)
            }
            EditError::NoInsertSite { leaf_index, token } => {
                write!(f, "no insert site for '{}' at leaf {}", token, leaf_index)
            }
        }
    }
}

impl std::error::Error for EditError {}

/// Replace the token of a leaf. The kind is unchanged, so the result always
/// renders back to a parseable method.
pub fn update_leaf(ast: &MethodAst, leaf_index: usize, new_token: &str) -> MethodAst {
    let mut out = ast.clone();
    let id = out.leaves()[leaf_index];
    out.nodes[id.0].token = Some(new_token.to_string());
    out
}

/// True iff the leaf can be removed while keeping the method grammatical:
/// a method modifier, or a call argument that is itself a leaf.
pub fn is_deletable(ast: &MethodAst, leaf_index: usize) -> bool {
    let id = ast.leaf_id(leaf_index);
    match ast.kind(id) {
        NodeKind::Modifier => true,
        _ => match ast.parent(id) {
            Some(p) if ast.kind(p) == NodeKind::MethodInvocation => {
                let slot = child_slot(ast, p, id);
                slot >= 2
            }
            _ => false,
        },
    }
}

/// Remove a leaf at a grammaticality-preserving site.
pub fn delete_leaf(ast: &MethodAst, leaf_index: usize) -> Result<MethodAst, EditError> {
    if !is_deletable(ast, leaf_index) {
        return Err(EditError::NoDeleteSite { leaf_index });
    }
    let mut out = ast.clone();
    let id = out.leaves()[leaf_index];
    let parent = out.nodes[id.0].parent.expect("leaf has a parent");
    out.nodes[parent.0].children.retain(|c| *c != id);
    out.rebuild_leaves();
    Ok(out)
}

/// Insert `token` next to the anchor leaf.
///
/// Modifier keywords go into the method's modifier slot (after the anchor
/// when the anchor is itself a modifier, otherwise at the front). Any other
/// token becomes a new call argument: right after the anchor's argument
/// when the anchor sits inside one, or as the first argument when the
/// anchor is the callee name or receiver of the nearest enclosing call.
pub fn insert_after_leaf(
    ast: &MethodAst,
    anchor_leaf: usize,
    token: &str,
) -> Result<MethodAst, EditError> {
    let anchor = ast.leaf_id(anchor_leaf);
    if matches!(token, "public" | "private" | "static") {
        let mut out = ast.clone();
        let root = out.root();
        let slot = if out.kind(anchor) == NodeKind::Modifier
            && out.parent(anchor) == Some(root)
        {
            child_slot(&out, root, anchor) + 1
        } else {
            0
        };
        let leaf = new_leaf_node(&mut out, NodeKind::Modifier, token, root);
        out.nodes[root.0].children.insert(slot, leaf);
        out.rebuild_leaves();
        return Ok(out);
    }

    // Walk up from the anchor to the nearest enclosing call and pick the
    // argument slot just after the anchor's position in it.
    let mut node = anchor;
    while let Some(parent) = ast.parent(node) {
        if ast.kind(parent) == NodeKind::MethodInvocation {
            let slot = child_slot(ast, parent, node);
            let insert_at = if slot >= 2 { slot + 1 } else { 2 };
            let mut out = ast.clone();
            let kind = literal_kind(token);
            let leaf = new_leaf_node(&mut out, kind, token, parent);
            out.nodes[parent.0].children.insert(insert_at, leaf);
            out.rebuild_leaves();
            return Ok(out);
        }
        node = parent;
    }
    Err(EditError::NoInsertSite {
        leaf_index: anchor_leaf,
        token: token.to_string(),
    })
}

fn child_slot(ast: &MethodAst, parent: NodeId, child: NodeId) -> usize {
    ast.children(parent)
        .iter()
        .position(|c| *c == child)
        .expect("child belongs to parent")
}

fn new_leaf_node(ast: &mut MethodAst, kind: NodeKind, token: &str, parent: NodeId) -> NodeId {
    let id = NodeId(ast.nodes.len());
    ast.nodes.push(super::Node {
        kind,
        parent: Some(parent),
        children: Vec::new(),
        token: Some(token.to_string()),
        pos: Some((0, 0)),
    });
    id
}

fn literal_kind(token: &str) -> NodeKind {
    match token {
        "true" | "false" => NodeKind::BooleanLiteral,
        "null" => NodeKind::NullLiteral,
        t if t.starts_with(|c: char| c.is_ascii_digit()) => NodeKind::NumberLiteral,
        t if t.starts_with('"') => NodeKind::StringLiteral,
        t if t.starts_with('\'') => NodeKind::CharLiteral,
        _ => NodeKind::SimpleName,
    }
}

/// Syntactic role of a `SimpleName` leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameRole {
    /// The method's own name in the declaration header.
    MethodName,
    /// Name introduced by a parameter.
    ParamName,
    /// Name introduced by a variable declaration.
    DeclName,
    /// Callee name of a method invocation.
    CallName,
    /// Field name of a field access.
    FieldName,
    /// Any other use: a variable reference in an expression.
    VarRef,
}

/// Role of a leaf, or `None` when it is not a `SimpleName`.
pub fn name_role(ast: &MethodAst, leaf_index: usize) -> Option<NameRole> {
    let id = ast.leaf_id(leaf_index);
    if ast.kind(id) != NodeKind::SimpleName {
        return None;
    }
    let parent = ast.parent(id)?;
    let slot = child_slot(ast, parent, id);
    Some(match ast.kind(parent) {
        NodeKind::MethodDeclaration => NameRole::MethodName,
        NodeKind::Parameter => NameRole::ParamName,
        NodeKind::VariableDeclarationStatement if slot == 1 => NameRole::DeclName,
        NodeKind::MethodInvocation if slot == 1 => NameRole::CallName,
        NodeKind::FieldAccess if slot == 1 => NameRole::FieldName,
        _ => NameRole::VarRef,
    })
}

/// Declared names of a method: parameters and local variables with their
/// declared type tokens, in source order. The language has one flat method
/// scope, so lookup does not need block nesting.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    entries: Vec<(String, String)>,
}

impl SymbolTable {
    pub fn build(ast: &MethodAst) -> Self {
        let mut entries = Vec::new();
        let mut stack = vec![ast.root()];
        while let Some(id) = stack.pop() {
            let kind = ast.kind(id);
            if kind == NodeKind::Parameter || kind == NodeKind::VariableDeclarationStatement {
                let children = ast.children(id);
                if children.len() >= 2 {
                    let ty = ast.token(children[0]).unwrap_or_default().to_string();
                    let name = ast.token(children[1]).unwrap_or_default().to_string();
                    entries.push((name, ty));
                }
            }
            for child in ast.children(id).iter().rev() {
                stack.push(*child);
            }
        }
        SymbolTable { entries }
    }

    pub fn type_of(&self, name: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.as_str())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
