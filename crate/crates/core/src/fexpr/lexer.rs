use std::fmt;

use super::parser::ParseError;

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// Back-quoted column name.
    Quoted(String),
    Number(f64),
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    Gt,
    Ge,
    Lt,
    Le,
    EqEq,
    Ne,
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Quoted(s) => write!(f, "column `{s}`"),
            Tok::Number(n) => write!(f, "number {n}"),
            Tok::Str(s) => write!(f, "string {s:?}"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Minus => f.write_str("'-'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Slash => f.write_str("'/'"),
            Tok::Gt => f.write_str("'>'"),
            Tok::Ge => f.write_str("'>='"),
            Tok::Lt => f.write_str("'<'"),
            Tok::Le => f.write_str("'<='"),
            Tok::EqEq => f.write_str("'=='"),
            Tok::Ne => f.write_str("'!='"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Comma => f.write_str("','"),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub pos: usize,
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

pub(crate) fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let lex_err = |pos: usize, message: String| ParseError::Lex { pos, message };

    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, pos });
            i += 1;
            continue;
        }
        let next = chars.get(i + 1).map(|&(_, c)| c);
        match c {
            '>' | '<' | '=' | '!' => {
                let (tok, width) = match (c, next) {
                    ('>', Some('=')) => (Tok::Ge, 2),
                    ('>', _) => (Tok::Gt, 1),
                    ('<', Some('=')) => (Tok::Le, 2),
                    ('<', _) => (Tok::Lt, 1),
                    ('=', Some('=')) => (Tok::EqEq, 2),
                    ('!', Some('=')) => (Tok::Ne, 2),
                    _ => return Err(lex_err(pos, format!("unexpected character {c:?}"))),
                };
                out.push(Spanned { tok, pos });
                i += width;
            }
            '`' => {
                let mut name = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None => return Err(lex_err(pos, "unterminated back-quoted name".into())),
                        Some(&(_, '`')) if chars.get(j + 1).map(|p| p.1) == Some('`') => {
                            name.push('`');
                            j += 2;
                        }
                        Some(&(_, '`')) => break,
                        Some(&(_, ch)) => {
                            name.push(ch);
                            j += 1;
                        }
                    }
                }
                if name.is_empty() {
                    return Err(lex_err(pos, "empty back-quoted name".into()));
                }
                out.push(Spanned {
                    tok: Tok::Quoted(name),
                    pos,
                });
                i = j + 1;
            }
            '"' | '\'' => {
                let quote = c;
                let mut s = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None => return Err(lex_err(pos, "unterminated string literal".into())),
                        Some(&(_, '\\')) => match chars.get(j + 1) {
                            Some(&(_, esc)) => {
                                s.push(esc);
                                j += 2;
                            }
                            None => return Err(lex_err(pos, "unterminated string literal".into())),
                        },
                        Some(&(_, ch)) if ch == quote => break,
                        Some(&(_, ch)) => {
                            s.push(ch);
                            j += 1;
                        }
                    }
                }
                out.push(Spanned { tok: Tok::Str(s), pos });
                i = j + 1;
            }
            c if c.is_ascii_digit() || (c == '.' && next.is_some_and(|n| n.is_ascii_digit())) => {
                let start = i;
                let mut j = i;
                while chars.get(j).is_some_and(|p| p.1.is_ascii_digit()) {
                    j += 1;
                }
                if chars.get(j).map(|p| p.1) == Some('.') {
                    j += 1;
                    while chars.get(j).is_some_and(|p| p.1.is_ascii_digit()) {
                        j += 1;
                    }
                }
                if matches!(chars.get(j).map(|p| p.1), Some('e' | 'E')) {
                    let mut k = j + 1;
                    if matches!(chars.get(k).map(|p| p.1), Some('+' | '-')) {
                        k += 1;
                    }
                    if chars.get(k).is_some_and(|p| p.1.is_ascii_digit()) {
                        while chars.get(k).is_some_and(|p| p.1.is_ascii_digit()) {
                            k += 1;
                        }
                        j = k;
                    } else {
                        return Err(lex_err(chars[j].0, "malformed exponent".into()));
                    }
                }
                let end = chars.get(j).map_or(src.len(), |p| p.0);
                let text = &src[chars[start].0..end];
                let value: f64 = text
                    .parse()
                    .map_err(|_| lex_err(pos, format!("invalid number {text:?}")))?;
                if !value.is_finite() {
                    return Err(lex_err(pos, format!("number {text:?} is out of range")));
                }
                if chars.get(j).is_some_and(|p| is_ident_start(p.1)) {
                    return Err(lex_err(chars[j].0, "identifier directly after a number".into()));
                }
                out.push(Spanned {
                    tok: Tok::Number(value),
                    pos,
                });
                i = j;
            }
            c if is_ident_start(c) => {
                let mut j = i;
                while chars.get(j).is_some_and(|p| is_ident_continue(p.1)) {
                    j += 1;
                }
                let end = chars.get(j).map_or(src.len(), |p| p.0);
                out.push(Spanned {
                    tok: Tok::Ident(src[pos..end].to_string()),
                    pos,
                });
                i = j;
            }
            _ => return Err(lex_err(pos, format!("unexpected character {c:?}"))),
        }
    }
    Ok(out)
}
