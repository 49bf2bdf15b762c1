//! Recursive-descent parser producing a [`MethodAst`].
//!
//! Precedence, loosest first: `||`, `&&`, `|`, `&`, equality, relational,
//! additive, multiplicative, unary, postfix. The short-circuit operators
//! `||` and `&&` associate to the right; everything else to the left.

use super::lexer::{Token, TokenKind};
use super::{MethodAst, Node, NodeId, NodeKind, SyntaxError};

const MODIFIERS: [&str; 3] = ["public", "private", "static"];
const PRIMITIVE_TYPES: [&str; 7] = ["int", "long", "float", "double", "boolean", "char", "void"];

pub fn parse_tokens(tokens: &[Token]) -> Result<MethodAst, SyntaxError> {
    let mut p = Parser {
        tokens,
        pos: 0,
        nodes: Vec::new(),
    };
    let root = p.parse_method()?;
    if p.pos < p.tokens.len() {
        return Err(p.err_here("trailing input after method"));
    }
    Ok(MethodAst::from_arena(p.nodes, root))
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    nodes: Vec<Node>,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, offset: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + offset)
    }

    fn at_symbol(&self, text: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Symbol && t.text == text)
    }

    fn at_ident(&self, text: &str) -> bool {
        matches!(self.peek(), Some(t) if t.kind == TokenKind::Ident && t.text == text)
    }

    fn advance(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err_here(&self, message: &str) -> SyntaxError {
        match self.peek() {
            Some(t) => SyntaxError {
                line: t.line,
                col: t.col,
                message: format!("{} (found '{}')", message, t.text),
            },
            None => {
                let (line, col) = self
                    .tokens
                    .last()
                    .map(|t| (t.line, t.col + t.text.chars().count() as u32))
                    .unwrap_or((1, 1));
                SyntaxError {
                    line,
                    col,
                    message: format!("{} (found end of input)", message),
                }
            }
        }
    }

    fn expect_symbol(&mut self, text: &str) -> Result<(), SyntaxError> {
        if self.at_symbol(text) {
            self.advance();
            Ok(())
        } else {
            Err(self.err_here(&format!("expected '{}'", text)))
        }
    }

    fn internal(&mut self, kind: NodeKind) -> NodeId {
        debug_assert!(!kind.is_leaf());
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            kind,
            parent: None,
            children: Vec::new(),
            token: None,
            pos: None,
        });
        id
    }

    fn leaf(&mut self, kind: NodeKind, tok: &Token) -> NodeId {
        debug_assert!(kind.is_leaf());
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node {
            kind,
            parent: None,
            children: Vec::new(),
            token: Some(tok.text.clone()),
            pos: Some((tok.line, tok.col)),
        });
        id
    }

    fn attach(&mut self, parent: NodeId, child: NodeId) {
        self.nodes[child.0].parent = Some(parent);
        self.nodes[parent.0].children.push(child);
    }

    // ---- declarations -------------------------------------------------

    fn parse_method(&mut self) -> Result<NodeId, SyntaxError> {
        let method = self.internal(NodeKind::MethodDeclaration);
        while let Some(t) = self.peek() {
            if t.kind == TokenKind::Ident && MODIFIERS.contains(&t.text.as_str()) {
                let tok = self.advance().unwrap();
                let m = self.leaf(NodeKind::Modifier, tok);
                self.attach(method, m);
            } else {
                break;
            }
        }
        let ty = self.parse_type()?;
        self.attach(method, ty);
        let name = self.parse_name()?;
        self.attach(method, name);
        self.expect_symbol("(")?;
        if !self.at_symbol(")") {
            loop {
                let param = self.internal(NodeKind::Parameter);
                let pty = self.parse_type()?;
                self.attach(param, pty);
                let pname = self.parse_name()?;
                self.attach(param, pname);
                self.attach(method, param);
                if self.at_symbol(",") {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect_symbol(")")?;
        let body = self.parse_block()?;
        self.attach(method, body);
        Ok(method)
    }

    fn parse_type(&mut self) -> Result<NodeId, SyntaxError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident && PRIMITIVE_TYPES.contains(&t.text.as_str()) => {
                let tok = self.advance().unwrap();
                Ok(self.leaf(NodeKind::TypeName, tok))
            }
            Some(t) if t.kind == TokenKind::Ident && !super::is_language_keyword(&t.text) => {
                let tok = self.advance().unwrap();
                Ok(self.leaf(NodeKind::TypeName, tok))
            }
            _ => Err(self.err_here("expected a type")),
        }
    }

    fn parse_name(&mut self) -> Result<NodeId, SyntaxError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident && !super::is_language_keyword(&t.text) => {
                let tok = self.advance().unwrap();
                Ok(self.leaf(NodeKind::SimpleName, tok))
            }
            _ => Err(self.err_here("expected an identifier")),
        }
    }

    // ---- statements ---------------------------------------------------

    fn parse_block(&mut self) -> Result<NodeId, SyntaxError> {
        self.expect_symbol("{")?;
        let block = self.internal(NodeKind::Block);
        while !self.at_symbol("}") {
            if self.peek().is_none() {
                return Err(self.err_here("expected '}'"));
            }
            let stmt = self.parse_statement()?;
            self.attach(block, stmt);
        }
        self.expect_symbol("}")?;
        Ok(block)
    }

    fn parse_statement(&mut self) -> Result<NodeId, SyntaxError> {
        if self.at_symbol("{") {
            return self.parse_block();
        }
        if self.at_ident("if") {
            return self.parse_if();
        }
        if self.at_ident("while") {
            return self.parse_while();
        }
        if self.at_ident("for") {
            return self.parse_for();
        }
        if self.at_ident("return") {
            return self.parse_return();
        }
        if self.starts_var_decl() {
            let decl = self.parse_var_decl_core()?;
            self.expect_symbol(";")?;
            return Ok(decl);
        }
        // Assignment or bare expression statement.
        let expr = self.parse_expr()?;
        if self.at_symbol("=") {
            let assign = self.finish_assignment(expr)?;
            self.expect_symbol(";")?;
            Ok(assign)
        } else {
            self.expect_symbol(";")?;
            let stmt = self.internal(NodeKind::ExpressionStatement);
            self.attach(stmt, expr);
            Ok(stmt)
        }
    }

    /// Two-token lookahead: a primitive type, or `Ident Ident`, starts a
    /// variable declaration.
    fn starts_var_decl(&self) -> bool {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Ident => {
                if PRIMITIVE_TYPES.contains(&t.text.as_str()) {
                    return true;
                }
                if super::is_language_keyword(&t.text) {
                    return false;
                }
                matches!(
                    self.peek_at(1),
                    Some(n) if n.kind == TokenKind::Ident && !super::is_language_keyword(&n.text)
                )
            }
            _ => false,
        }
    }

    /// `type name ('=' expr)?` without the trailing semicolon.
    fn parse_var_decl_core(&mut self) -> Result<NodeId, SyntaxError> {
        let decl = self.internal(NodeKind::VariableDeclarationStatement);
        let ty = self.parse_type()?;
        self.attach(decl, ty);
        let name = self.parse_name()?;
        self.attach(decl, name);
        if self.at_symbol("=") {
            let tok = self.advance().unwrap();
            let op = self.leaf(NodeKind::Operator, tok);
            self.attach(decl, op);
            let init = self.parse_expr()?;
            self.attach(decl, init);
        }
        Ok(decl)
    }

    /// `lvalue '=' expr` where the lvalue has already been parsed.
    fn finish_assignment(&mut self, lvalue: NodeId) -> Result<NodeId, SyntaxError> {
        let lk = self.nodes[lvalue.0].kind;
        if lk != NodeKind::SimpleName && lk != NodeKind::FieldAccess {
            return Err(self.err_here("left side of assignment must be a name or field access"));
        }
        let tok = self.advance().unwrap(); // the '='
        let assign = self.internal(NodeKind::Assignment);
        let op = self.leaf(NodeKind::Operator, tok);
        self.attach(assign, lvalue);
        self.attach(assign, op);
        let value = self.parse_expr()?;
        self.attach(assign, value);
        Ok(assign)
    }

    fn parse_if(&mut self) -> Result<NodeId, SyntaxError> {
        self.advance(); // 'if'
        self.expect_symbol("(")?;
        let stmt = self.internal(NodeKind::IfStatement);
        let cond = self.parse_expr()?;
        self.attach(stmt, cond);
        self.expect_symbol(")")?;
        let then = self.parse_statement()?;
        self.attach(stmt, then);
        if self.at_ident("else") {
            self.advance();
            let alt = self.parse_statement()?;
            self.attach(stmt, alt);
        }
        Ok(stmt)
    }

    fn parse_while(&mut self) -> Result<NodeId, SyntaxError> {
        self.advance(); // 'while'
        self.expect_symbol("(")?;
        let stmt = self.internal(NodeKind::WhileStatement);
        let cond = self.parse_expr()?;
        self.attach(stmt, cond);
        self.expect_symbol(")")?;
        let body = self.parse_statement()?;
        self.attach(stmt, body);
        Ok(stmt)
    }

    /// `for '(' init ';' cond ';' update ')' stmt` — all three clauses are
    /// required, which keeps the rendered form unambiguous.
    fn parse_for(&mut self) -> Result<NodeId, SyntaxError> {
        self.advance(); // 'for'
        self.expect_symbol("(")?;
        let stmt = self.internal(NodeKind::ForStatement);
        let init = if self.starts_var_decl() {
            self.parse_var_decl_core()?
        } else {
            let lv = self.parse_expr()?;
            if !self.at_symbol("=") {
                return Err(self.err_here("expected '=' in for initializer"));
            }
            self.finish_assignment(lv)?
        };
        self.attach(stmt, init);
        self.expect_symbol(";")?;
        let cond = self.parse_expr()?;
        self.attach(stmt, cond);
        self.expect_symbol(";")?;
        let lv = self.parse_expr()?;
        if !self.at_symbol("=") {
            return Err(self.err_here("expected '=' in for update"));
        }
        let update = self.finish_assignment(lv)?;
        self.attach(stmt, update);
        self.expect_symbol(")")?;
        let body = self.parse_statement()?;
        self.attach(stmt, body);
        Ok(stmt)
    }

    fn parse_return(&mut self) -> Result<NodeId, SyntaxError> {
        self.advance(); // 'return'
        let stmt = self.internal(NodeKind::ReturnStatement);
        let value = self.parse_expr()?;
        self.attach(stmt, value);
        self.expect_symbol(";")?;
        Ok(stmt)
    }

    // ---- expressions --------------------------------------------------

    fn parse_expr(&mut self) -> Result<NodeId, SyntaxError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<NodeId, SyntaxError> {
        let left = self.parse_and()?;
        if self.at_symbol("||") {
            let tok = self.advance().unwrap();
            let op = self.leaf(NodeKind::Operator, tok);
            let right = self.parse_or()?;
            Ok(self.infix(left, op, right))
        } else {
            Ok(left)
        }
    }

    fn parse_and(&mut self) -> Result<NodeId, SyntaxError> {
        let left = self.parse_bit_or()?;
        if self.at_symbol("&&") {
            let tok = self.advance().unwrap();
            let op = self.leaf(NodeKind::Operator, tok);
            let right = self.parse_and()?;
            Ok(self.infix(left, op, right))
        } else {
            Ok(left)
        }
    }

    fn parse_bit_or(&mut self) -> Result<NodeId, SyntaxError> {
        self.parse_left_assoc(&["|"], Self::parse_bit_and)
    }

    fn parse_bit_and(&mut self) -> Result<NodeId, SyntaxError> {
        self.parse_left_assoc(&["&"], Self::parse_equality)
    }

    fn parse_equality(&mut self) -> Result<NodeId, SyntaxError> {
        self.parse_left_assoc(&["==", "!="], Self::parse_relational)
    }

    fn parse_relational(&mut self) -> Result<NodeId, SyntaxError> {
        self.parse_left_assoc(&["<", "<=", ">", ">="], Self::parse_additive)
    }

    fn parse_additive(&mut self) -> Result<NodeId, SyntaxError> {
        self.parse_left_assoc(&["+", "-"], Self::parse_multiplicative)
    }

    fn parse_multiplicative(&mut self) -> Result<NodeId, SyntaxError> {
        self.parse_left_assoc(&["*", "/", "%"], Self::parse_unary)
    }

    fn parse_left_assoc(
        &mut self,
        ops: &[&str],
        next: fn(&mut Self) -> Result<NodeId, SyntaxError>,
    ) -> Result<NodeId, SyntaxError> {
        let mut left = next(self)?;
        loop {
            let matched = matches!(
                self.peek(),
                Some(t) if t.kind == TokenKind::Symbol && ops.contains(&t.text.as_str())
            );
            if !matched {
                return Ok(left);
            }
            let tok = self.advance().unwrap();
            let op = self.leaf(NodeKind::Operator, tok);
            let right = next(self)?;
            left = self.infix(left, op, right);
        }
    }

    fn infix(&mut self, left: NodeId, op: NodeId, right: NodeId) -> NodeId {
        let node = self.internal(NodeKind::InfixExpression);
        self.attach(node, left);
        self.attach(node, op);
        self.attach(node, right);
        node
    }

    fn parse_unary(&mut self) -> Result<NodeId, SyntaxError> {
        if self.at_symbol("!") || self.at_symbol("-") {
            let tok = self.advance().unwrap();
            let node = self.internal(NodeKind::PrefixExpression);
            let op = self.leaf(NodeKind::Operator, tok);
            self.attach(node, op);
            let operand = self.parse_unary()?;
            self.attach(node, operand);
            Ok(node)
        } else {
            self.parse_postfix()
        }
    }

    fn parse_postfix(&mut self) -> Result<NodeId, SyntaxError> {
        let mut expr = self.parse_primary()?;
        while self.at_symbol(".") {
            self.advance();
            let name = self.parse_name()?;
            if self.at_symbol("(") {
                self.advance();
                let call = self.internal(NodeKind::MethodInvocation);
                self.attach(call, expr);
                self.attach(call, name);
                if !self.at_symbol(")") {
                    loop {
                        let arg = self.parse_expr()?;
                        self.attach(call, arg);
                        if self.at_symbol(",") {
                            self.advance();
                        } else {
                            break;
                        }
                    }
                }
                self.expect_symbol(")")?;
                expr = call;
            } else {
                let access = self.internal(NodeKind::FieldAccess);
                self.attach(access, expr);
                self.attach(access, name);
                expr = access;
            }
        }
        Ok(expr)
    }

    fn parse_primary(&mut self) -> Result<NodeId, SyntaxError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Number => {
                let tok = self.advance().unwrap();
                Ok(self.leaf(NodeKind::NumberLiteral, tok))
            }
            Some(t) if t.kind == TokenKind::StringLit => {
                let tok = self.advance().unwrap();
                Ok(self.leaf(NodeKind::StringLiteral, tok))
            }
            Some(t) if t.kind == TokenKind::CharLit => {
                let tok = self.advance().unwrap();
                Ok(self.leaf(NodeKind::CharLiteral, tok))
            }
            Some(t) if t.kind == TokenKind::Ident => {
                if t.text == "true" || t.text == "false" {
                    let tok = self.advance().unwrap();
                    Ok(self.leaf(NodeKind::BooleanLiteral, tok))
                } else if t.text == "null" {
                    let tok = self.advance().unwrap();
                    Ok(self.leaf(NodeKind::NullLiteral, tok))
                } else if super::is_language_keyword(&t.text) {
                    Err(self.err_here("keyword is not valid in an expression"))
                } else {
                    let tok = self.advance().unwrap();
                    Ok(self.leaf(NodeKind::SimpleName, tok))
                }
            }
            Some(t) if t.kind == TokenKind::Symbol && t.text == "(" => {
                self.advance();
                let node = self.internal(NodeKind::ParenthesizedExpression);
                let inner = self.parse_expr()?;
                self.attach(node, inner);
                self.expect_symbol(")")?;
                Ok(node)
            }
            _ => Err(self.err_here("expected an expression")),
        }
    }
}
