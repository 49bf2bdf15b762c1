//! Hand-written lexer for the mini-language.

use super::SyntaxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    StringLit,
    CharLit,
    /// Operators and punctuation; the text disambiguates.
    Symbol,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub line: u32,
    pub col: u32,
}

const TWO_CHAR_SYMBOLS: [&str; 6] = ["==", "!=", "<=", ">=", "&&", "||"];
const ONE_CHAR_SYMBOLS: &str = "(){};,.<>+-*/%!=&|";

/// Tokenize `source`. Whitespace separates tokens and is otherwise ignored;
/// there are no comments in the language.
pub fn lex(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;

    let advance = |c: char, line: &mut u32, col: &mut u32| {
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            advance(c, &mut line, &mut col);
            i += 1;
            continue;
        }
        let (tline, tcol) = (line, col);

        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                advance(chars[i], &mut line, &mut col);
                i += 1;
            }
            tokens.push(Token {
                kind: TokenKind::Ident,
                text: chars[start..i].iter().collect(),
                line: tline,
                col: tcol,
            });
            continue;
        }

        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                advance(chars[i], &mut line, &mut col);
                i += 1;
            }
            // Optional fractional part; the dot is consumed only when a
            // digit follows, so `x.y` member access still lexes.
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                advance(chars[i], &mut line, &mut col);
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    advance(chars[i], &mut line, &mut col);
                    i += 1;
                }
            }
            tokens.push(Token {
                kind: TokenKind::Number,
                text: chars[start..i].iter().collect(),
                line: tline,
                col: tcol,
            });
            continue;
        }

        if c == '"' || c == '\'' {
            let quote = c;
            let mut text = String::new();
            text.push(quote);
            advance(c, &mut line, &mut col);
            i += 1;
            let mut closed = false;
            while i < chars.len() {
                let d = chars[i];
                if d == '\n' {
                    break;
                }
                text.push(d);
                advance(d, &mut line, &mut col);
                i += 1;
                if d == '\\' {
                    if i < chars.len() {
                        text.push(chars[i]);
                        advance(chars[i], &mut line, &mut col);
                        i += 1;
                    }
                    continue;
                }
                if d == quote {
                    closed = true;
                    break;
                }
            }
            if !closed {
                return Err(SyntaxError {
                    line: tline,
                    col: tcol,
                    message: format!("unterminated {} literal", if quote == '"' { "string" } else { "char" }),
                });
            }
            tokens.push(Token {
                kind: if quote == '"' { TokenKind::StringLit } else { TokenKind::CharLit },
                text,
                line: tline,
                col: tcol,
            });
            continue;
        }

        if i + 1 < chars.len() {
            let pair: String = chars[i..i + 2].iter().collect();
            if TWO_CHAR_SYMBOLS.contains(&pair.as_str()) {
                advance(chars[i], &mut line, &mut col);
                advance(chars[i + 1], &mut line, &mut col);
                i += 2;
                tokens.push(Token {
                    kind: TokenKind::Symbol,
                    text: pair,
                    line: tline,
                    col: tcol,
                });
                continue;
            }
        }

        if ONE_CHAR_SYMBOLS.contains(c) {
            advance(c, &mut line, &mut col);
            i += 1;
            tokens.push(Token {
                kind: TokenKind::Symbol,
                text: c.to_string(),
                line: tline,
                col: tcol,
            });
            continue;
        }

        return Err(SyntaxError {
            line: tline,
            col: tcol,
            message: format!("unexpected character '{}'", c),
        });
    }

    Ok(tokens)
}
