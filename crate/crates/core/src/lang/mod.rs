//! Mini-language front end: lexer, recursive-descent parser, typed AST,
//! canonical renderer, root-to-leaf paths, and sub-token splitting.
//!
//! The grammar is a small Java-like subset: one method per source, with
//! declarations, assignments, `if`/`while`/`for`, `return`, infix and prefix
//! expressions, method calls, field accesses, and literals. The full EBNF
//! lives in `docs/grammar.md`.

pub mod edit;
mod lexer;
mod parser;
mod render;
mod subtoken;
#[cfg(test)]
mod tests;

pub use edit::{
    delete_leaf, insert_after_leaf, is_deletable, name_role, update_leaf, EditError, NameRole,
    SymbolTable,
};
pub use lexer::{lex, Token, TokenKind};
pub use render::{render, render_tokens, RenderedToken};
pub use subtoken::split_subtokens;

use serde::{Deserialize, Serialize};
use std::fmt;

/// Node kinds of the mini-language AST.
///
/// The discriminant order is fixed: it doubles as the embedding row index
/// for the path encoder, so reordering variants would invalidate checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    MethodDeclaration,
    Modifier,
    TypeName,
    SimpleName,
    Parameter,
    Block,
    IfStatement,
    WhileStatement,
    ForStatement,
    ReturnStatement,
    VariableDeclarationStatement,
    ExpressionStatement,
    Assignment,
    InfixExpression,
    PrefixExpression,
    MethodInvocation,
    FieldAccess,
    ParenthesizedExpression,
    Operator,
    NumberLiteral,
    BooleanLiteral,
    StringLiteral,
    CharLiteral,
    NullLiteral,
}

impl NodeKind {
    pub const COUNT: usize = 24;

    pub const ALL: [NodeKind; Self::COUNT] = [
        NodeKind::MethodDeclaration,
        NodeKind::Modifier,
        NodeKind::TypeName,
        NodeKind::SimpleName,
        NodeKind::Parameter,
        NodeKind::Block,
        NodeKind::IfStatement,
        NodeKind::WhileStatement,
        NodeKind::ForStatement,
        NodeKind::ReturnStatement,
        NodeKind::VariableDeclarationStatement,
        NodeKind::ExpressionStatement,
        NodeKind::Assignment,
        NodeKind::InfixExpression,
        NodeKind::PrefixExpression,
        NodeKind::MethodInvocation,
        NodeKind::FieldAccess,
        NodeKind::ParenthesizedExpression,
        NodeKind::Operator,
        NodeKind::NumberLiteral,
        NodeKind::BooleanLiteral,
        NodeKind::StringLiteral,
        NodeKind::CharLiteral,
        NodeKind::NullLiteral,
    ];

    /// Embedding row index; stable because `ALL` order is frozen.
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|k| *k == self).unwrap()
    }

    /// Leaf kinds carry a token; every other kind is internal.
    pub fn is_leaf(self) -> bool {
        matches!(
            self,
            NodeKind::Modifier
                | NodeKind::TypeName
                | NodeKind::SimpleName
                | NodeKind::Operator
                | NodeKind::NumberLiteral
                | NodeKind::BooleanLiteral
                | NodeKind::StringLiteral
                | NodeKind::CharLiteral
                | NodeKind::NullLiteral
        )
    }

    /// Statement-level kinds, used for the `statement_type` ranking feature.
    pub fn is_statement(self) -> bool {
        matches!(
            self,
            NodeKind::Block
                | NodeKind::IfStatement
                | NodeKind::WhileStatement
                | NodeKind::ForStatement
                | NodeKind::ReturnStatement
                | NodeKind::VariableDeclarationStatement
                | NodeKind::ExpressionStatement
                | NodeKind::Assignment
        )
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self)
    }
}

/// Handle into a [`MethodAst`] node arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone)]
pub(crate) struct Node {
    pub kind: NodeKind,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Token text; `Some` exactly for leaf nodes.
    pub token: Option<String>,
    /// 1-based (line, column) of the leaf's token in the parsed source.
    pub pos: Option<(u32, u32)>,
}

/// A parsed method: a kind-labelled tree plus its pre-order leaf sequence.
#[derive(Debug, Clone)]
pub struct MethodAst {
    pub(crate) nodes: Vec<Node>,
    root: NodeId,
    leaves: Vec<NodeId>,
}

impl MethodAst {
    pub(crate) fn from_arena(nodes: Vec<Node>, root: NodeId) -> Self {
        let mut ast = MethodAst {
            nodes,
            root,
            leaves: Vec::new(),
        };
        ast.rebuild_leaves();
        ast
    }

    pub(crate) fn rebuild_leaves(&mut self) {
        let mut leaves = Vec::new();
        let mut stack = vec![self.root];
        // Explicit stack pre-order; children pushed in reverse so the
        // leftmost child is visited first.
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id.0];
            if node.kind.is_leaf() {
                debug_assert!(node.token.is_some());
                leaves.push(id);
            } else {
                for child in node.children.iter().rev() {
                    stack.push(*child);
                }
            }
        }
        self.leaves = leaves;
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn kind(&self, id: NodeId) -> NodeKind {
        self.nodes[id.0].kind
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    pub fn token(&self, id: NodeId) -> Option<&str> {
        self.nodes[id.0].token.as_deref()
    }

    /// Pre-order leaf handles.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn leaf_id(&self, leaf_index: usize) -> NodeId {
        self.leaves[leaf_index]
    }

    /// Ordinal of a leaf handle in the pre-order sequence.
    pub fn leaf_index_of(&self, id: NodeId) -> Option<usize> {
        self.leaves.iter().position(|l| *l == id)
    }

    pub fn leaf_token(&self, leaf_index: usize) -> &str {
        self.nodes[self.leaves[leaf_index].0]
            .token
            .as_deref()
            .expect("leaf nodes carry a token")
    }

    /// 1-based (line, column) of the leaf token in the source this tree was
    /// parsed from.
    pub fn leaf_pos(&self, leaf_index: usize) -> (u32, u32) {
        self.nodes[self.leaves[leaf_index].0]
            .pos
            .expect("leaf nodes carry a position")
    }

    /// Root-to-leaf kind chain for one leaf.
    pub fn path_of_leaf(&self, leaf_index: usize) -> AstPath {
        let mut kinds = Vec::new();
        let mut cur = Some(self.leaves[leaf_index]);
        while let Some(id) = cur {
            kinds.push(self.kind(id));
            cur = self.parent(id);
        }
        kinds.reverse();
        AstPath { kinds, leaf_index }
    }

    /// One path per leaf, ordered by leaf index.
    pub fn ast_paths(&self) -> Vec<AstPath> {
        (0..self.leaf_count()).map(|i| self.path_of_leaf(i)).collect()
    }

    /// Leaf tokens in pre-order.
    pub fn leaf_tokens(&self) -> Vec<&str> {
        (0..self.leaf_count()).map(|i| self.leaf_token(i)).collect()
    }

    /// Kind of the nearest statement ancestor of a leaf, falling back to
    /// `MethodDeclaration` for header tokens (modifiers, return type, name,
    /// parameters).
    pub fn statement_kind_of_leaf(&self, leaf_index: usize) -> NodeKind {
        let mut cur = self.parent(self.leaves[leaf_index]);
        while let Some(id) = cur {
            let k = self.kind(id);
            if k.is_statement() {
                return k;
            }
            cur = self.parent(id);
        }
        NodeKind::MethodDeclaration
    }

    /// Structural equality: same kinds and tokens, positions ignored.
    pub fn structurally_equals(&self, other: &MethodAst) -> bool {
        fn eq(a: &MethodAst, an: NodeId, b: &MethodAst, bn: NodeId) -> bool {
            if a.kind(an) != b.kind(bn) || a.token(an) != b.token(bn) {
                return false;
            }
            let ac = a.children(an);
            let bc = b.children(bn);
            ac.len() == bc.len()
                && ac.iter().zip(bc.iter()).all(|(x, y)| eq(a, *x, b, *y))
        }
        eq(self, self.root, other, other.root)
    }
}

/// Root-to-leaf kind sequence together with the leaf's pre-order ordinal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AstPath {
    pub kinds: Vec<NodeKind>,
    pub leaf_index: usize,
}

impl AstPath {
    /// Leaf-end truncation: keeps the `max_len` nodes nearest to the leaf.
    pub fn truncated_kinds(&self, max_len: usize) -> &[NodeKind] {
        let n = self.kinds.len();
        if n <= max_len {
            &self.kinds
        } else {
            &self.kinds[n - max_len..]
        }
    }
}

impl fmt::Display for AstPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.kinds.iter().enumerate() {
            if i > 0 {
                write!(f, "->")?;
            }
            write!(f, "{}", k)?;
        }
        Ok(())
    }
}

/// Parse failure with 1-based source coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for SyntaxError {}

/// Operator families used by the mutation generator and the repair
/// heuristics. Order within a class is frozen; candidate enumeration
/// follows it.
pub const RELATIONAL_OPERATORS: [&str; 6] = ["==", "!=", "<", "<=", ">", ">="];
pub const ARITHMETIC_OPERATORS: [&str; 5] = ["+", "-", "*", "/", "%"];
pub const LOGICAL_OPERATORS: [&str; 2] = ["&&", "||"];
pub const BITWISE_OPERATORS: [&str; 2] = ["&", "|"];

/// Data types that may substitute for each other.
pub const SWAPPABLE_TYPES: [&str; 6] = ["int", "long", "float", "double", "boolean", "char"];

/// The class an operator token belongs to, if any (`=` and `!` have none).
pub fn operator_class(op: &str) -> Option<&'static [&'static str]> {
    if RELATIONAL_OPERATORS.contains(&op) {
        Some(&RELATIONAL_OPERATORS)
    } else if ARITHMETIC_OPERATORS.contains(&op) {
        Some(&ARITHMETIC_OPERATORS)
    } else if LOGICAL_OPERATORS.contains(&op) {
        Some(&LOGICAL_OPERATORS)
    } else if BITWISE_OPERATORS.contains(&op) {
        Some(&BITWISE_OPERATORS)
    } else {
        None
    }
}

/// Reserved words of the mini-language.
pub const KEYWORDS: [&str; 18] = [
    "if", "else", "while", "for", "return", "int", "long", "float", "double", "boolean", "char",
    "void", "true", "false", "null", "public", "private", "static",
];

/// True iff `token` is reserved. Case-sensitive.
pub fn is_language_keyword(token: &str) -> bool {
    KEYWORDS.contains(&token)
}

/// Parse one method. Deterministic; rejects anything outside the grammar
/// with a [`SyntaxError`] carrying line/column.
pub fn parse(source: &str) -> Result<MethodAst, SyntaxError> {
    let tokens = lexer::lex(source)?;
    parser::parse_tokens(&tokens)
}
