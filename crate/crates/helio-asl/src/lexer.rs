//! Hand-rolled lexer with line/column tracking. `//` comments are stripped.

use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum TokenKind {
    Ident(String),
    Var(String),
    Number(f64),
    Str(String),
    Dot,
    Comma,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Amp,
    Semi,
    Colon,
    Tilde,
    Plus,
    Minus,
    Bang,
    Arrow,
    Gt,
    Lt,
    Ge,
    Le,
    EqEq,
    NeqEq,
    Eof,
}

impl TokenKind {
    pub(crate) fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Var(s) => format!("variable `{s}`"),
            TokenKind::Number(n) => format!("number `{n}`"),
            TokenKind::Str(s) => format!("string \"{s}\""),
            TokenKind::Dot => "`.`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::Amp => "`&`".into(),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Tilde => "`~`".into(),
            TokenKind::Plus => "`+`".into(),
            TokenKind::Minus => "`-`".into(),
            TokenKind::Bang => "`!`".into(),
            TokenKind::Arrow => "`<-`".into(),
            TokenKind::Gt => "`>`".into(),
            TokenKind::Lt => "`<`".into(),
            TokenKind::Ge => "`>=`".into(),
            TokenKind::Le => "`<=`".into(),
            TokenKind::EqEq => "`==`".into(),
            TokenKind::NeqEq => "`\\==`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub col: u32,
}

pub(crate) fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut pos = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    macro_rules! push {
        ($kind:expr, $line:expr, $col:expr) => {
            tokens.push(Token { kind: $kind, line: $line, col: $col })
        };
    }

    while pos < chars.len() {
        let c = chars[pos];
        let (tl, tc) = (line, col);
        let advance = |pos: &mut usize, line: &mut u32, col: &mut u32| {
            if chars[*pos] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *pos += 1;
        };

        match c {
            ' ' | '\t' | '\r' | '\n' => advance(&mut pos, &mut line, &mut col),
            '/' if chars.get(pos + 1) == Some(&'/') => {
                while pos < chars.len() && chars[pos] != '\n' {
                    advance(&mut pos, &mut line, &mut col);
                }
            }
            '.' => {
                push!(TokenKind::Dot, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            ',' => {
                push!(TokenKind::Comma, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            '(' => {
                push!(TokenKind::LParen, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            ')' => {
                push!(TokenKind::RParen, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            '[' => {
                push!(TokenKind::LBracket, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            ']' => {
                push!(TokenKind::RBracket, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            '&' => {
                push!(TokenKind::Amp, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            ';' => {
                push!(TokenKind::Semi, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            ':' => {
                push!(TokenKind::Colon, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            '~' => {
                push!(TokenKind::Tilde, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            '+' => {
                push!(TokenKind::Plus, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            '-' => {
                push!(TokenKind::Minus, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            '!' => {
                push!(TokenKind::Bang, tl, tc);
                advance(&mut pos, &mut line, &mut col);
            }
            '>' => {
                advance(&mut pos, &mut line, &mut col);
                if chars.get(pos) == Some(&'=') {
                    advance(&mut pos, &mut line, &mut col);
                    push!(TokenKind::Ge, tl, tc);
                } else {
                    push!(TokenKind::Gt, tl, tc);
                }
            }
            '<' => {
                advance(&mut pos, &mut line, &mut col);
                match chars.get(pos) {
                    Some('=') => {
                        advance(&mut pos, &mut line, &mut col);
                        push!(TokenKind::Le, tl, tc);
                    }
                    Some('-') => {
                        advance(&mut pos, &mut line, &mut col);
                        push!(TokenKind::Arrow, tl, tc);
                    }
                    _ => push!(TokenKind::Lt, tl, tc),
                }
            }
            '=' => {
                advance(&mut pos, &mut line, &mut col);
                if chars.get(pos) == Some(&'=') {
                    advance(&mut pos, &mut line, &mut col);
                    push!(TokenKind::EqEq, tl, tc);
                } else {
                    return Err(ParseError::Syntax {
                        line: tl,
                        col: tc,
                        message: "expected `==`".into(),
                    });
                }
            }
            '\\' => {
                advance(&mut pos, &mut line, &mut col);
                if chars.get(pos) == Some(&'=') && chars.get(pos + 1) == Some(&'=') {
                    advance(&mut pos, &mut line, &mut col);
                    advance(&mut pos, &mut line, &mut col);
                    push!(TokenKind::NeqEq, tl, tc);
                } else {
                    return Err(ParseError::Syntax {
                        line: tl,
                        col: tc,
                        message: "expected `\\==`".into(),
                    });
                }
            }
            '"' => {
                advance(&mut pos, &mut line, &mut col);
                let mut s = String::new();
                loop {
                    match chars.get(pos) {
                        None | Some('\n') => {
                            return Err(ParseError::Syntax {
                                line: tl,
                                col: tc,
                                message: "unterminated string literal".into(),
                            });
                        }
                        Some('"') => {
                            advance(&mut pos, &mut line, &mut col);
                            break;
                        }
                        Some('\\') if chars.get(pos + 1) == Some(&'"') => {
                            s.push('"');
                            advance(&mut pos, &mut line, &mut col);
                            advance(&mut pos, &mut line, &mut col);
                        }
                        Some(&ch) => {
                            s.push(ch);
                            advance(&mut pos, &mut line, &mut col);
                        }
                    }
                }
                push!(TokenKind::Str(s), tl, tc);
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while pos < chars.len() && chars[pos].is_ascii_digit() {
                    s.push(chars[pos]);
                    advance(&mut pos, &mut line, &mut col);
                }
                // A dot is part of the number only when a digit follows;
                // otherwise it terminates the clause.
                if chars.get(pos) == Some(&'.')
                    && chars.get(pos + 1).is_some_and(|c| c.is_ascii_digit())
                {
                    s.push('.');
                    advance(&mut pos, &mut line, &mut col);
                    while pos < chars.len() && chars[pos].is_ascii_digit() {
                        s.push(chars[pos]);
                        advance(&mut pos, &mut line, &mut col);
                    }
                }
                let value: f64 = s.parse().map_err(|_| ParseError::Syntax {
                    line: tl,
                    col: tc,
                    message: format!("invalid number `{s}`"),
                })?;
                push!(TokenKind::Number(value), tl, tc);
            }
            c if c.is_ascii_lowercase() => {
                let mut s = String::new();
                while pos < chars.len()
                    && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_')
                {
                    s.push(chars[pos]);
                    advance(&mut pos, &mut line, &mut col);
                }
                push!(TokenKind::Ident(s), tl, tc);
            }
            c if c.is_ascii_uppercase() => {
                let mut s = String::new();
                while pos < chars.len()
                    && (chars[pos].is_ascii_alphanumeric() || chars[pos] == '_')
                {
                    s.push(chars[pos]);
                    advance(&mut pos, &mut line, &mut col);
                }
                push!(TokenKind::Var(s), tl, tc);
            }
            other => {
                return Err(ParseError::Syntax {
                    line: tl,
                    col: tc,
                    message: format!("unexpected character `{other}`"),
                });
            }
        }
    }

    tokens.push(Token { kind: TokenKind::Eof, line, col });
    Ok(tokens)
}
