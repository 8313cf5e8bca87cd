//! Recursive-descent parser for the feature DSL.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr     = and_expr { "or" and_expr } ;
//! and_expr = cmp_expr { "and" cmp_expr } ;
//! cmp_expr = add_expr { ( ">" | ">=" | "<" | "<=" | "==" | "!=" ) add_expr } ;
//! add_expr = mul_expr { ( "+" | "-" ) mul_expr } ;
//! mul_expr = unary { ( "*" | "/" ) unary } ;
//! unary    = "-" unary | primary ;
//! primary  = number | string | column | call | "(" expr ")" ;
//! call     = unary_fn "(" expr ")"
//!          | "qcut" "(" expr "," integer ")"
//!          | "groupagg" "(" column "," expr "," stat ")" ;
//! ```

use super::lexer::{tokenize, Spanned, Tok};
use super::{AggStat, BinOp, Call, Expr, UnaryFn};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("lexical error at {pos}: {message}")]
    Lex { pos: usize, message: String },
    #[error("syntax error at {pos}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        pos: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("arity error at {pos}: {func} takes {expected} argument(s), got {found}")]
    Arity {
        pos: usize,
        func: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid argument at {pos}: {message}")]
    InvalidArgument { pos: usize, message: String },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Lex { pos, .. }
            | ParseError::Syntax { pos, .. }
            | ParseError::Arity { pos, .. }
            | ParseError::InvalidArgument { pos, .. } => *pos,
        }
    }
}

const OPERAND: &[&str] = &["number", "string", "column", "function call", "'('", "'-'"];

/// Parses DSL text into an expression tree.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser {
        toks,
        i: 0,
        end: src.len(),
    };
    let expr = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(ParseError::Syntax {
            pos: t.pos,
            expected: vec!["operator".into(), "end of input".into()],
            found: t.tok.to_string(),
        });
    }
    Ok(expr)
}

struct Parser {
    toks: Vec<Spanned>,
    i: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.i)
    }

    fn peek_tok(&self) -> Option<&Tok> {
        self.peek().map(|s| &s.tok)
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |s| s.pos)
    }

    fn found(&self) -> String {
        self.peek()
            .map_or_else(|| "end of input".to_string(), |s| s.tok.to_string())
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::Syntax {
            pos: self.pos(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.found(),
        }
    }

    fn expect(&mut self, tok: Tok, label: &str) -> Result<(), ParseError> {
        if self.peek_tok() == Some(&tok) {
            self.i += 1;
            Ok(())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn keyword(&self, kw: &str) -> bool {
        matches!(self.peek_tok(), Some(Tok::Ident(s)) if s == kw)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.keyword("or") {
            self.i += 1;
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.cmp_expr()?;
        while self.keyword("and") {
            self.i += 1;
            let rhs = self.cmp_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn cmp_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek_tok() {
                Some(Tok::Gt) => BinOp::Gt,
                Some(Tok::Ge) => BinOp::Ge,
                Some(Tok::Lt) => BinOp::Lt,
                Some(Tok::Le) => BinOp::Le,
                Some(Tok::EqEq) => BinOp::Eq,
                Some(Tok::Ne) => BinOp::Ne,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.add_expr()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn add_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek_tok() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.mul_expr()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn mul_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_tok() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek_tok() == Some(&Tok::Minus) {
            self.i += 1;
            // A minus directly before a literal is part of the literal.
            if let Some(Tok::Number(n)) = self.peek_tok() {
                let n = *n;
                self.i += 1;
                return Ok(Expr::Number(-n));
            }
            let operand = self.unary()?;
            return Ok(Expr::binary(BinOp::Sub, Expr::Number(0.0), operand));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(tok) = self.peek() else {
            return Err(self.error(OPERAND));
        };
        let pos = tok.pos;
        match tok.tok.clone() {
            Tok::Number(n) => {
                self.i += 1;
                Ok(Expr::Number(n))
            }
            Tok::Str(s) => {
                self.i += 1;
                Ok(Expr::Str(s))
            }
            Tok::Quoted(name) => {
                self.i += 1;
                Ok(Expr::Column(name))
            }
            Tok::LParen => {
                self.i += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "and" || name == "or" {
                    return Err(self.error(OPERAND));
                }
                self.i += 1;
                if self.peek_tok() == Some(&Tok::LParen) {
                    self.i += 1;
                    self.call(&name, pos)
                } else {
                    Ok(Expr::Column(name))
                }
            }
            _ => Err(self.error(OPERAND)),
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        let known = UnaryFn::from_name(name).is_some() || name == "qcut" || name == "groupagg";
        if !known {
            return Err(ParseError::Syntax {
                pos,
                expected: vec!["known function (log1p, sqrt, square, abs, flag, rank, qcut, groupagg)".into()],
                found: format!("`{name}`"),
            });
        }
        let mut args = Vec::new();
        if self.peek_tok() != Some(&Tok::RParen) {
            loop {
                args.push(self.expr()?);
                match self.peek_tok() {
                    Some(Tok::Comma) => self.i += 1,
                    Some(Tok::RParen) => break,
                    _ => return Err(self.error(&["','", "')'"])),
                }
            }
        }
        self.expect(Tok::RParen, "')'")?;

        let arity = |expected: usize| -> Result<(), ParseError> {
            if args.len() == expected {
                Ok(())
            } else {
                Err(ParseError::Arity {
                    pos,
                    func: name.to_string(),
                    expected,
                    found: args.len(),
                })
            }
        };

        if let Some(func) = UnaryFn::from_name(name) {
            arity(1)?;
            let arg = args.pop().expect("one argument");
            return Ok(Expr::unary(func, arg));
        }
        if name == "qcut" {
            arity(2)?;
            let k = args.pop().expect("two arguments");
            let arg = args.pop().expect("two arguments");
            let bins = match k {
                Expr::Number(k) if k.fract() == 0.0 && (2.0..=u32::MAX as f64).contains(&k) => k as u32,
                _ => {
                    return Err(ParseError::InvalidArgument {
                        pos,
                        message: "qcut bin count must be an integer literal >= 2".into(),
                    })
                }
            };
            return Ok(Expr::Call(Call::Qcut {
                arg: Box::new(arg),
                bins,
            }));
        }
        // groupagg
        arity(3)?;
        let mut it = args.into_iter();
        let (group, value, stat) = (it.next().unwrap(), it.next().unwrap(), it.next().unwrap());
        let Expr::Column(group) = group else {
            return Err(ParseError::InvalidArgument {
                pos,
                message: "groupagg key must be a column name".into(),
            });
        };
        let stat = match &stat {
            Expr::Column(s) => AggStat::from_name(s),
            _ => None,
        }
        .ok_or_else(|| ParseError::InvalidArgument {
            pos,
            message: "groupagg statistic must be one of mean, sum, min, max, std, count".into(),
        })?;
        Ok(Expr::Call(Call::GroupAgg {
            group,
            value: Box::new(value),
            stat,
        }))
    }
}
