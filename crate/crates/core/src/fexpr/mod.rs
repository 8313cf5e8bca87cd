//! The feature-expression language.
//!
//! A feature is a small expression over the dataset's columns:
//!
//! ```text
//! log1p(income) / (household_size + 1)
//! flag(age > 60 and smoker == "yes")
//! groupagg(region, price, mean)
//! ```
//!
//! Expressions are parsed into [`Expr`], checked with [`typecheck`], fitted on
//! the train split with [`fit`] (rank, quantile-cut and group-aggregate nodes
//! capture train statistics), and evaluated row-wise on any split with
//! [`FittedTransform::eval`]. The printed form produced by `Display` is the
//! canonical interchange text stored in run ledgers.

mod eval;
mod legacy;
mod lexer;
mod parser;
mod print;
mod typecheck;

pub use eval::{fit, EvalError, FittedTransform, RawSeries};
pub use legacy::{translate_legacy, translate_legacy_expr, LegacyError};
pub use parser::{parse, ParseError};
pub use print::format_column_name;
pub use typecheck::{typecheck, SeriesType, TypeError};

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Column(String),
    Number(f64),
    Str(String),
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call(Call),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Call {
    Unary {
        func: UnaryFn,
        arg: Box<Expr>,
    },
    Qcut {
        arg: Box<Expr>,
        bins: u32,
    },
    GroupAgg {
        group: String,
        value: Box<Expr>,
        stat: AggStat,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Gt,
    Ge,
    Lt,
    Le,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub const ALL: [BinOp; 12] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::And,
        BinOp::Or,
    ];

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Gt | BinOp::Ge | BinOp::Lt | BinOp::Le | BinOp::Eq | BinOp::Ne => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div => 5,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 3
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    pub fn is_arithmetic(self) -> bool {
        self.precedence() >= 4
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            BinOp::Add | BinOp::Mul | BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryFn {
    Log1p,
    Sqrt,
    Square,
    Abs,
    Flag,
    Rank,
}

impl UnaryFn {
    pub const ALL: [UnaryFn; 6] = [
        UnaryFn::Log1p,
        UnaryFn::Sqrt,
        UnaryFn::Square,
        UnaryFn::Abs,
        UnaryFn::Flag,
        UnaryFn::Rank,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Log1p => "log1p",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Square => "square",
            UnaryFn::Abs => "abs",
            UnaryFn::Flag => "flag",
            UnaryFn::Rank => "rank",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggStat {
    Mean,
    Sum,
    Min,
    Max,
    Std,
    Count,
}

impl AggStat {
    pub const ALL: [AggStat; 6] = [
        AggStat::Mean,
        AggStat::Sum,
        AggStat::Min,
        AggStat::Max,
        AggStat::Std,
        AggStat::Count,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AggStat::Mean => "mean",
            AggStat::Sum => "sum",
            AggStat::Min => "min",
            AggStat::Max => "max",
            AggStat::Std => "std",
            AggStat::Count => "count",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// The statistic over the non-missing values. `std` is the sample
    /// standard deviation; empty input gives NaN except for `sum` and `count`.
    pub fn apply(self, values: &[f64]) -> f64 {
        let n = values.len();
        match self {
            AggStat::Count => n as f64,
            AggStat::Sum => values.iter().sum(),
            _ if n == 0 => f64::NAN,
            AggStat::Mean => values.iter().sum::<f64>() / n as f64,
            AggStat::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            AggStat::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            AggStat::Std => {
                if n < 2 {
                    return f64::NAN;
                }
                let mean = values.iter().sum::<f64>() / n as f64;
                let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
                (ss / (n - 1) as f64).sqrt()
            }
        }
    }
}

impl Expr {
    pub fn column(name: impl Into<String>) -> Expr {
        Expr::Column(name.into())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        }
    }

    pub fn unary(func: UnaryFn, arg: Expr) -> Expr {
        Expr::Call(Call::Unary {
            func,
            arg: Box::new(arg),
        })
    }

    /// Every column name the expression reads, in first-use order.
    pub fn columns(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_columns(&mut out);
        out
    }

    fn collect_columns<'a>(&'a self, out: &mut Vec<&'a str>) {
        let push = |name: &'a str, out: &mut Vec<&'a str>| {
            if !out.contains(&name) {
                out.push(name);
            }
        };
        match self {
            Expr::Column(c) => push(c, out),
            Expr::Number(_) | Expr::Str(_) => {}
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_columns(out);
                rhs.collect_columns(out);
            }
            Expr::Call(Call::Unary { arg, .. }) | Expr::Call(Call::Qcut { arg, .. }) => arg.collect_columns(out),
            Expr::Call(Call::GroupAgg { group, value, .. }) => {
                push(group, out);
                value.collect_columns(out);
            }
        }
    }

    pub fn complexity(&self) -> Complexity {
        match self {
            Expr::Column(_) | Expr::Number(_) | Expr::Str(_) => Complexity::default(),
            Expr::Binary { lhs, rhs, .. } => {
                let (l, r) = (lhs.complexity(), rhs.complexity());
                Complexity {
                    num_ops: 1 + l.num_ops + r.num_ops,
                    depth: 1 + l.depth.max(r.depth),
                }
            }
            Expr::Call(Call::Unary { arg, .. })
            | Expr::Call(Call::Qcut { arg, .. })
            | Expr::Call(Call::GroupAgg { value: arg, .. }) => {
                let a = arg.complexity();
                Complexity {
                    num_ops: 1 + a.num_ops,
                    depth: 1 + a.depth,
                }
            }
        }
    }
}

/// Structural size of an expression: operator and function nodes counted,
/// and the longest chain of them from the root to a leaf.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Complexity {
    pub num_ops: usize,
    pub depth: usize,
}

pub fn complexity(expr: &Expr) -> Complexity {
    expr.complexity()
}
