//! Translation from the pandas-style surface syntax (`df["A"]`, `np.log1p`,
//! `df.groupby("G")["A"].mean()`, ...) into the DSL.
//!
//! Only the constructs of the supported operation table are accepted; any
//! other call, attribute or method chain is reported with the byte span of
//! the offending construct.

use super::{AggStat, BinOp, Call, Expr, UnaryFn};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum LegacyError {
    #[error("lexical error at {pos}: {message}")]
    Lex { pos: usize, message: String },
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unsupported construct `{text}` at {start}..{end}: {message}")]
    Unsupported {
        start: usize,
        end: usize,
        text: String,
        message: String,
    },
}

/// Translates pandas-style code into canonical DSL text.
pub fn translate_legacy(src: &str) -> Result<String, LegacyError> {
    translate_legacy_expr(src).map(|e| e.to_string())
}

pub fn translate_legacy_expr(src: &str) -> Result<Expr, LegacyError> {
    let toks = lex(src)?;
    let mut p = Parser { src, toks, i: 0 };
    let v = p.expr()?;
    if let Some(t) = p.toks.get(p.i) {
        return Err(LegacyError::Syntax {
            pos: t.start,
            message: format!("unexpected `{}`", &src[t.start..t.end]),
        });
    }
    p.to_expr(v)
}

#[derive(Clone, Debug, PartialEq)]
enum T {
    Name(String),
    Str(String),
    Num(f64),
    Op(&'static str),
}

#[derive(Clone, Debug)]
struct Tok {
    t: T,
    start: usize,
    end: usize,
}

const OPS: [&str; 21] = [
    "**", ">=", "<=", "==", "!=", "+", "-", "*", "/", ">", "<", "&", "|", "~", "(", ")", "[", "]", ".", ",", "=",
];

fn lex(src: &str) -> Result<Vec<Tok>, LegacyError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == '"' || c == '\'' {
            let quote = bytes[i];
            let mut j = i + 1;
            let mut s = String::new();
            loop {
                if j >= bytes.len() {
                    return Err(LegacyError::Lex {
                        pos: i,
                        message: "unterminated string".into(),
                    });
                }
                if bytes[j] == b'\\' && j + 1 < bytes.len() {
                    let ch = src[j + 1..].chars().next().expect("char after escape");
                    s.push(ch);
                    j += 1 + ch.len_utf8();
                    continue;
                }
                if bytes[j] == quote {
                    break;
                }
                let ch = src[j..].chars().next().expect("char");
                s.push(ch);
                j += ch.len_utf8();
            }
            out.push(Tok {
                t: T::Str(s),
                start: i,
                end: j + 1,
            });
            i = j + 1;
            continue;
        }
        let next_is_digit = bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit());
        if c.is_ascii_digit() || (c == '.' && next_is_digit) {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.' || bytes[j] == b'_') {
                j += 1;
            }
            if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                let mut k = j + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let text = src[i..j].replace('_', "");
            let v: f64 = text.parse().map_err(|_| LegacyError::Lex {
                pos: i,
                message: format!("invalid number `{}`", &src[i..j]),
            })?;
            if !v.is_finite() {
                return Err(LegacyError::Lex {
                    pos: i,
                    message: "number out of range".into(),
                });
            }
            out.push(Tok {
                t: T::Num(v),
                start: i,
                end: j,
            });
            i = j;
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                j += 1;
            }
            out.push(Tok {
                t: T::Name(src[i..j].to_string()),
                start: i,
                end: j,
            });
            i = j;
            continue;
        }
        match OPS.iter().find(|op| src[i..].starts_with(**op)) {
            Some(op) => {
                out.push(Tok {
                    t: T::Op(op),
                    start: i,
                    end: i + op.len(),
                });
                i += op.len();
            }
            None => {
                let ch = src[i..].chars().next().expect("char");
                return Err(LegacyError::Lex {
                    pos: i,
                    message: format!("unexpected character {ch:?}"),
                });
            }
        }
    }
    Ok(out)
}

/// Intermediate values while walking attribute/call chains.
#[derive(Clone, Debug)]
enum Kind {
    E(Expr),
    Df,
    Module(&'static str),
    Func(String),
    DfMethod(String),
    Method(Expr, String),
    GroupBy(String),
    GroupSel(String, String),
    GroupMethod(String, String, String),
    /// Bare names; only int, float, True, False and abs have a meaning.
    Word(String),
}

#[derive(Clone, Debug)]
struct Val {
    kind: Kind,
    start: usize,
    end: usize,
}

struct Arg {
    keyword: Option<String>,
    val: Val,
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Tok>,
    i: usize,
}

impl<'a> Parser<'a> {
    fn peek_op(&self) -> Option<&'static str> {
        match self.toks.get(self.i) {
            Some(Tok { t: T::Op(op), .. }) => Some(op),
            _ => None,
        }
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map_or(self.src.len(), |t| t.start)
    }

    fn syntax(&self, message: impl Into<String>) -> LegacyError {
        LegacyError::Syntax {
            pos: self.pos(),
            message: message.into(),
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<usize, LegacyError> {
        if self.peek_op() == Some(op) {
            let end = self.toks[self.i].end;
            self.i += 1;
            Ok(end)
        } else {
            Err(self.syntax(format!("expected `{op}`")))
        }
    }

    fn unsupported(&self, start: usize, end: usize, message: impl Into<String>) -> LegacyError {
        LegacyError::Unsupported {
            start,
            end,
            text: self.src[start..end].to_string(),
            message: message.into(),
        }
    }

    fn to_expr(&self, v: Val) -> Result<Expr, LegacyError> {
        match v.kind {
            Kind::E(e) => Ok(e),
            _ => Err(self.unsupported(v.start, v.end, "not a row-wise expression")),
        }
    }

    fn binop(&self, op: BinOp, l: Val, r: Val) -> Result<Val, LegacyError> {
        let (start, end) = (l.start, r.end);
        let e = Expr::binary(op, self.to_expr(l)?, self.to_expr(r)?);
        Ok(Val {
            kind: Kind::E(e),
            start,
            end,
        })
    }

    fn expr(&mut self) -> Result<Val, LegacyError> {
        let lhs = self.bit_or()?;
        let op = match self.peek_op() {
            Some(">") => BinOp::Gt,
            Some(">=") => BinOp::Ge,
            Some("<") => BinOp::Lt,
            Some("<=") => BinOp::Le,
            Some("==") => BinOp::Eq,
            Some("!=") => BinOp::Ne,
            _ => return Ok(lhs),
        };
        self.i += 1;
        let rhs = self.bit_or()?;
        if matches!(self.peek_op(), Some(">" | ">=" | "<" | "<=" | "==" | "!=")) {
            let end = self.toks[self.i].end;
            return Err(self.unsupported(lhs.start, end, "chained comparison"));
        }
        self.binop(op, lhs, rhs)
    }

    fn bit_or(&mut self) -> Result<Val, LegacyError> {
        let mut lhs = self.bit_and()?;
        while self.peek_op() == Some("|") {
            self.i += 1;
            let rhs = self.bit_and()?;
            lhs = self.binop(BinOp::Or, lhs, rhs)?;
        }
        Ok(lhs)
    }

    fn bit_and(&mut self) -> Result<Val, LegacyError> {
        let mut lhs = self.additive()?;
        while self.peek_op() == Some("&") {
            self.i += 1;
            let rhs = self.additive()?;
            lhs = self.binop(BinOp::And, lhs, rhs)?;
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> Result<Val, LegacyError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek_op() {
                Some("+") => BinOp::Add,
                Some("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.term()?;
            lhs = self.binop(op, lhs, rhs)?;
        }
    }

    fn term(&mut self) -> Result<Val, LegacyError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_op() {
                Some("*") => BinOp::Mul,
                Some("/") => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.unary()?;
            lhs = self.binop(op, lhs, rhs)?;
        }
    }

    fn unary(&mut self) -> Result<Val, LegacyError> {
        match self.peek_op() {
            Some("-") => {
                let start = self.toks[self.i].start;
                self.i += 1;
                let v = self.unary()?;
                let end = v.end;
                let e = match self.to_expr(v)? {
                    Expr::Number(n) => Expr::Number(-n),
                    other => Expr::binary(BinOp::Sub, Expr::Number(0.0), other),
                };
                Ok(Val {
                    kind: Kind::E(e),
                    start,
                    end,
                })
            }
            Some("~") => {
                let start = self.toks[self.i].start;
                self.i += 1;
                let v = self.unary()?;
                Err(self.unsupported(start, v.end, "negation `~` has no DSL equivalent"))
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Val, LegacyError> {
        let base = self.postfix()?;
        if self.peek_op() != Some("**") {
            return Ok(base);
        }
        self.i += 1;
        let exp = self.unary()?;
        let (start, end) = (base.start, exp.end);
        let func = match exp.kind {
            Kind::E(Expr::Number(2.0)) => UnaryFn::Square,
            Kind::E(Expr::Number(0.5)) => UnaryFn::Sqrt,
            _ => return Err(self.unsupported(start, end, "only ** 2 and ** 0.5 are supported")),
        };
        let e = Expr::unary(func, self.to_expr(base)?);
        Ok(Val {
            kind: Kind::E(e),
            start,
            end,
        })
    }

    fn atom(&mut self) -> Result<Val, LegacyError> {
        let Some(tok) = self.toks.get(self.i).cloned() else {
            return Err(self.syntax("unexpected end of input"));
        };
        self.i += 1;
        let (start, end) = (tok.start, tok.end);
        let kind = match tok.t {
            T::Num(n) => Kind::E(Expr::Number(n)),
            T::Str(s) => Kind::E(Expr::Str(s)),
            T::Op("(") => {
                let inner = self.expr()?;
                let end = self.expect_op(")")?;
                return Ok(Val {
                    kind: inner.kind,
                    start,
                    end,
                });
            }
            T::Op(op) => {
                return Err(LegacyError::Syntax {
                    pos: start,
                    message: format!("unexpected `{op}`"),
                })
            }
            T::Name(n) => match n.as_str() {
                "df" => Kind::Df,
                "np" | "numpy" => Kind::Module("np"),
                "pd" | "pandas" => Kind::Module("pd"),
                _ => Kind::Word(n),
            },
        };
        Ok(Val { kind, start, end })
    }

    fn postfix(&mut self) -> Result<Val, LegacyError> {
        let mut v = self.atom()?;
        loop {
            match self.peek_op() {
                Some("[") => {
                    self.i += 1;
                    let key = self.expr()?;
                    let end = self.expect_op("]")?;
                    let Kind::E(Expr::Str(key)) = key.kind else {
                        return Err(self.unsupported(v.start, end, "subscript must be a column name string"));
                    };
                    let kind = match v.kind {
                        Kind::Df => Kind::E(Expr::Column(key)),
                        Kind::GroupBy(g) => Kind::GroupSel(g, key),
                        _ => return Err(self.unsupported(v.start, end, "subscript on this value")),
                    };
                    v = Val {
                        kind,
                        start: v.start,
                        end,
                    };
                }
                Some(".") => {
                    self.i += 1;
                    let Some(Tok {
                        t: T::Name(name), end, ..
                    }) = self.toks.get(self.i).cloned()
                    else {
                        return Err(self.syntax("expected attribute name after `.`"));
                    };
                    self.i += 1;
                    let kind = match v.kind {
                        Kind::Df => Kind::DfMethod(name),
                        Kind::Module(m) => Kind::Func(format!("{m}.{name}")),
                        Kind::E(e) => Kind::Method(e, name),
                        Kind::GroupSel(g, a) => Kind::GroupMethod(g, a, name),
                        _ => return Err(self.unsupported(v.start, end, "attribute access on this value")),
                    };
                    v = Val {
                        kind,
                        start: v.start,
                        end,
                    };
                }
                Some("(") => {
                    self.i += 1;
                    let args = self.args()?;
                    let end = self.expect_op(")")?;
                    v = self.apply(v, args, end)?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn args(&mut self) -> Result<Vec<Arg>, LegacyError> {
        let mut out = Vec::new();
        while self.peek_op() != Some(")") {
            let keyword = match (self.toks.get(self.i), self.toks.get(self.i + 1)) {
                (Some(Tok { t: T::Name(n), .. }), Some(Tok { t: T::Op("="), .. })) => {
                    let n = n.clone();
                    self.i += 2;
                    Some(n)
                }
                _ => None,
            };
            let val = self.expr()?;
            out.push(Arg { keyword, val });
            match self.peek_op() {
                Some(",") => self.i += 1,
                Some(")") => break,
                _ => return Err(self.syntax("expected `,` or `)`")),
            }
        }
        Ok(out)
    }

    fn apply(&self, callee: Val, args: Vec<Arg>, end: usize) -> Result<Val, LegacyError> {
        let start = callee.start;
        let bad = |msg: &str| self.unsupported(start, end, msg.to_string());
        let single_positional = |args: Vec<Arg>| -> Result<Expr, LegacyError> {
            let mut it = args.into_iter();
            match (it.next(), it.next()) {
                (Some(Arg { keyword: None, val }), None) => self.to_expr(val),
                _ => Err(bad("expected exactly one positional argument")),
            }
        };
        let kind = match callee.kind {
            Kind::Func(f) => {
                let func = match f.as_str() {
                    "np.log1p" => Some(UnaryFn::Log1p),
                    "np.sqrt" => Some(UnaryFn::Sqrt),
                    "np.square" => Some(UnaryFn::Square),
                    "np.abs" | "np.absolute" => Some(UnaryFn::Abs),
                    _ => None,
                };
                match (func, f.as_str()) {
                    (Some(func), _) => Kind::E(Expr::unary(func, single_positional(args)?)),
                    (None, "pd.qcut") => Kind::E(self.qcut(args, start, end)?),
                    _ => return Err(bad("function outside the supported operations")),
                }
            }
            Kind::Word(w) if w == "abs" => Kind::E(Expr::unary(UnaryFn::Abs, single_positional(args)?)),
            Kind::Method(recv, name) => match name.as_str() {
                "astype" => {
                    let target_ok = matches!(
                        args.as_slice(),
                        [Arg { keyword: None, val: Val { kind: Kind::Word(w), .. } }] if w == "int" || w == "float"
                    ) || matches!(
                        args.as_slice(),
                        [Arg { keyword: None, val: Val { kind: Kind::E(Expr::Str(s)), .. } }]
                            if s.starts_with("int") || s.starts_with("float")
                    );
                    if !target_ok {
                        return Err(bad("astype target must be int or float"));
                    }
                    match &recv {
                        Expr::Binary { op, .. } if op.is_comparison() || op.is_logical() => {
                            Kind::E(Expr::unary(UnaryFn::Flag, recv))
                        }
                        _ => return Err(bad("astype is only supported on a condition")),
                    }
                }
                "rank" => {
                    for a in &args {
                        let ok = match (a.keyword.as_deref(), &a.val.kind) {
                            (Some("pct" | "ascending"), Kind::Word(w)) => w == "True" || w == "False",
                            _ => false,
                        };
                        if !ok {
                            return Err(bad("rank accepts only pct= and ascending="));
                        }
                    }
                    Kind::E(Expr::unary(UnaryFn::Rank, recv))
                }
                "abs" if args.is_empty() => Kind::E(Expr::unary(UnaryFn::Abs, recv)),
                _ => return Err(bad("method outside the supported operations")),
            },
            Kind::DfMethod(name) if name == "groupby" => match args.as_slice() {
                [Arg {
                    keyword: None,
                    val:
                        Val {
                            kind: Kind::E(Expr::Str(g)),
                            ..
                        },
                }] => Kind::GroupBy(g.clone()),
                _ => return Err(bad("groupby takes one column name")),
            },
            Kind::GroupMethod(g, a, m) => {
                let stat_name = if m == "transform" {
                    match args.as_slice() {
                        [Arg {
                            keyword: None,
                            val:
                                Val {
                                    kind: Kind::E(Expr::Str(s)),
                                    ..
                                },
                        }] => s.clone(),
                        _ => return Err(bad("transform takes one statistic name")),
                    }
                } else if args.is_empty() {
                    m
                } else {
                    return Err(bad("group statistic takes no arguments"));
                };
                let stat = AggStat::from_name(&stat_name).ok_or_else(|| bad("unsupported group statistic"))?;
                Kind::E(Expr::Call(Call::GroupAgg {
                    group: g,
                    value: Box::new(Expr::Column(a)),
                    stat,
                }))
            }
            _ => return Err(bad("call outside the supported operations")),
        };
        Ok(Val { kind, start, end })
    }

    fn qcut(&self, args: Vec<Arg>, start: usize, end: usize) -> Result<Expr, LegacyError> {
        let bad = |msg: &str| self.unsupported(start, end, msg.to_string());
        let mut value = None;
        let mut bins = None;
        for (i, a) in args.into_iter().enumerate() {
            match (a.keyword.as_deref(), i) {
                (None, 0) | (Some("x"), _) => value = Some(self.to_expr(a.val)?),
                (None, 1) | (Some("q"), _) => bins = Some(a.val),
                (Some("labels"), _) => {
                    if !matches!(&a.val.kind, Kind::Word(w) if w == "False") {
                        return Err(bad("qcut labels must be False"));
                    }
                }
                (Some("duplicates"), _) => {}
                _ => return Err(bad("unsupported qcut argument")),
            }
        }
        let value = value.ok_or_else(|| bad("qcut needs a value"))?;
        let bins = match bins.map(|b| b.kind) {
            Some(Kind::E(Expr::Number(k))) if k.fract() == 0.0 && k >= 2.0 && k <= u32::MAX as f64 => k as u32,
            _ => return Err(bad("qcut bin count must be an integer >= 2")),
        };
        Ok(Expr::Call(Call::Qcut {
            arg: Box::new(value),
            bins,
        }))
    }
}
