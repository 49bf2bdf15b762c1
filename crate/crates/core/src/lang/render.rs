//! Canonical renderer: one space between tokens, statements broken onto
//! their own lines, two-space indentation. `parse(render(t))` reproduces
//! `t` structurally for every tree the parser or the edit operations build.

use super::{MethodAst, NodeId, NodeKind};

/// A token of the rendered source; `leaf` ties it back to the AST leaf it
/// came from (punctuation and keywords have none).
#[derive(Debug, Clone)]
pub struct RenderedToken {
    pub text: String,
    pub leaf: Option<NodeId>,
}

/// Full token stream of the canonical form.
pub fn render_tokens(ast: &MethodAst) -> Vec<RenderedToken> {
    let mut out = Vec::new();
    emit_method(ast, ast.root(), &mut out);
    out
}

/// Canonical source text.
pub fn render(ast: &MethodAst) -> String {
    let tokens = render_tokens(ast);
    let mut lines: Vec<String> = Vec::new();
    let mut line = String::new();
    let mut indent: usize = 0;
    let mut paren_depth: usize = 0;

    let flush = |line: &mut String, lines: &mut Vec<String>| {
        if !line.is_empty() {
            lines.push(std::mem::take(line));
        }
    };

    for (i, tok) in tokens.iter().enumerate() {
        match tok.text.as_str() {
            "(" => paren_depth += 1,
            ")" => paren_depth = paren_depth.saturating_sub(1),
            "}" => {
                flush(&mut line, &mut lines);
                indent = indent.saturating_sub(1);
            }
            _ => {}
        }
        if line.is_empty() {
            line = "  ".repeat(indent);
        } else {
            line.push(' ');
        }
        line.push_str(&tok.text);
        let next_is_else = matches!(tokens.get(i + 1), Some(t) if t.text == "else");
        match tok.text.as_str() {
            "{" => {
                flush(&mut line, &mut lines);
                indent += 1;
            }
            ";" if paren_depth == 0 => flush(&mut line, &mut lines),
            "}" if !next_is_else => flush(&mut line, &mut lines),
            _ => {}
        }
    }
    flush(&mut line, &mut lines);
    let mut s = lines.join("\n");
    s.push('\n');
    s
}

fn punct(text: &str, out: &mut Vec<RenderedToken>) {
    out.push(RenderedToken {
        text: text.to_string(),
        leaf: None,
    });
}

fn leaf_tok(ast: &MethodAst, id: NodeId, out: &mut Vec<RenderedToken>) {
    out.push(RenderedToken {
        text: ast.token(id).expect("leaf").to_string(),
        leaf: Some(id),
    });
}

fn emit_method(ast: &MethodAst, id: NodeId, out: &mut Vec<RenderedToken>) {
    let children = ast.children(id);
    let mut i = 0;
    while i < children.len() && ast.kind(children[i]) == NodeKind::Modifier {
        leaf_tok(ast, children[i], out);
        i += 1;
    }
    leaf_tok(ast, children[i], out); // return type
    leaf_tok(ast, children[i + 1], out); // name
    i += 2;
    punct("(", out);
    let mut first = true;
    while i < children.len() && ast.kind(children[i]) == NodeKind::Parameter {
        if !first {
            punct(",", out);
        }
        first = false;
        let pc = ast.children(children[i]);
        leaf_tok(ast, pc[0], out);
        leaf_tok(ast, pc[1], out);
        i += 1;
    }
    punct(")", out);
    emit_statement(ast, children[i], out);
}

fn emit_statement(ast: &MethodAst, id: NodeId, out: &mut Vec<RenderedToken>) {
    let children = ast.children(id);
    match ast.kind(id) {
        NodeKind::Block => {
            punct("{", out);
            for stmt in children {
                emit_statement(ast, *stmt, out);
            }
            punct("}", out);
        }
        NodeKind::VariableDeclarationStatement => {
            emit_var_decl_core(ast, id, out);
            punct(";", out);
        }
        NodeKind::Assignment => {
            emit_assignment_core(ast, id, out);
            punct(";", out);
        }
        NodeKind::ExpressionStatement => {
            emit_expr(ast, children[0], out);
            punct(";", out);
        }
        NodeKind::ReturnStatement => {
            punct("return", out);
            emit_expr(ast, children[0], out);
            punct(";", out);
        }
        NodeKind::IfStatement => {
            punct("if", out);
            punct("(", out);
            emit_expr(ast, children[0], out);
            punct(")", out);
            emit_statement(ast, children[1], out);
            if children.len() > 2 {
                punct("else", out);
                emit_statement(ast, children[2], out);
            }
        }
        NodeKind::WhileStatement => {
            punct("while", out);
            punct("(", out);
            emit_expr(ast, children[0], out);
            punct(")", out);
            emit_statement(ast, children[1], out);
        }
        NodeKind::ForStatement => {
            punct("for", out);
            punct("(", out);
            match ast.kind(children[0]) {
                NodeKind::VariableDeclarationStatement => emit_var_decl_core(ast, children[0], out),
                _ => emit_assignment_core(ast, children[0], out),
            }
            punct(";", out);
            emit_expr(ast, children[1], out);
            punct(";", out);
            emit_assignment_core(ast, children[2], out);
            punct(")", out);
            emit_statement(ast, children[3], out);
        }
        other => unreachable!("not a statement kind: {other}"),
    }
}

fn emit_var_decl_core(ast: &MethodAst, id: NodeId, out: &mut Vec<RenderedToken>) {
    let children = ast.children(id);
    leaf_tok(ast, children[0], out);
    leaf_tok(ast, children[1], out);
    if children.len() > 2 {
        leaf_tok(ast, children[2], out); // '='
        emit_expr(ast, children[3], out);
    }
}

fn emit_assignment_core(ast: &MethodAst, id: NodeId, out: &mut Vec<RenderedToken>) {
    let children = ast.children(id);
    emit_expr(ast, children[0], out);
    leaf_tok(ast, children[1], out); // '='
    emit_expr(ast, children[2], out);
}

fn emit_expr(ast: &MethodAst, id: NodeId, out: &mut Vec<RenderedToken>) {
    let children = ast.children(id);
    match ast.kind(id) {
        NodeKind::InfixExpression => {
            emit_expr(ast, children[0], out);
            leaf_tok(ast, children[1], out);
            emit_expr(ast, children[2], out);
        }
        NodeKind::PrefixExpression => {
            leaf_tok(ast, children[0], out);
            emit_expr(ast, children[1], out);
        }
        NodeKind::MethodInvocation => {
            emit_expr(ast, children[0], out);
            punct(".", out);
            leaf_tok(ast, children[1], out);
            punct("(", out);
            for (i, arg) in children[2..].iter().enumerate() {
                if i > 0 {
                    punct(",", out);
                }
                emit_expr(ast, *arg, out);
            }
            punct(")", out);
        }
        NodeKind::FieldAccess => {
            emit_expr(ast, children[0], out);
            punct(".", out);
            leaf_tok(ast, children[1], out);
        }
        NodeKind::ParenthesizedExpression => {
            punct("(", out);
            emit_expr(ast, children[0], out);
            punct(")", out);
        }
        k if k.is_leaf() => leaf_tok(ast, id, out),
        other => unreachable!("not an expression kind: {other}"),
    }
}
