//! Train-fitted evaluation of feature expressions.
//!
//! Missing values are `NaN`. Division by zero, `log1p` below -1, `sqrt` of a
//! negative and any infinite intermediate all become missing, and missing
//! propagates through every operator (comparisons and `and`/`or` included).

use std::collections::BTreeMap;

use super::typecheck::{infer, Ty, TypeError};
use super::{AggStat, BinOp, Call, Expr, UnaryFn};
use crate::stats;
use crate::tabular::{is_missing, Column, ColumnData, Schema, Table, MISSING};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error("schema mismatch for column `{column}`: {detail}")]
    SchemaMismatch { column: String, detail: String },
    #[error("degenerate transform: {0}")]
    Degenerate(String),
}

/// A feature expression together with the train statistics its stateful
/// nodes captured. Immutable once fitted.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedTransform {
    expr: Expr,
    schema: Schema,
    root: Node,
}

#[derive(Clone, Debug, PartialEq)]
enum Node {
    Column(String),
    Number(f64),
    Str(String),
    Binary {
        op: BinOp,
        lhs: Box<Node>,
        rhs: Box<Node>,
    },
    Unary {
        func: UnaryFn,
        arg: Box<Node>,
    },
    /// Sorted finite train values of the argument.
    Rank {
        arg: Box<Node>,
        sorted: Vec<f64>,
    },
    Qcut {
        arg: Box<Node>,
        edges: Vec<f64>,
    },
    GroupAgg {
        group: String,
        per_group: BTreeMap<String, f64>,
        global: f64,
    },
}

/// Fits every rank, quantile-cut and group-aggregate node on `train`.
pub fn fit(expr: &Expr, train: &Table) -> Result<FittedTransform, EvalError> {
    let full = train.schema();
    infer(expr, &full, None)?;
    let schema = expr.columns().into_iter().map(|c| (c.to_string(), full[c])).collect();
    let root = fit_node(expr, train)?;
    Ok(FittedTransform {
        expr: expr.clone(),
        schema,
        root,
    })
}

fn fit_node(expr: &Expr, train: &Table) -> Result<Node, EvalError> {
    Ok(match expr {
        Expr::Column(c) => Node::Column(c.clone()),
        Expr::Number(n) => Node::Number(*n),
        Expr::Str(s) => Node::Str(s.clone()),
        Expr::Binary { op, lhs, rhs } => Node::Binary {
            op: *op,
            lhs: Box::new(fit_node(lhs, train)?),
            rhs: Box::new(fit_node(rhs, train)?),
        },
        Expr::Call(Call::Unary {
            func: UnaryFn::Rank,
            arg,
        }) => {
            let arg = fit_node(arg, train)?;
            let mut sorted: Vec<f64> = eval_num(&arg, train)?.into_iter().filter(|v| !is_missing(*v)).collect();
            sorted.sort_by(f64::total_cmp);
            Node::Rank {
                arg: Box::new(arg),
                sorted,
            }
        }
        Expr::Call(Call::Unary { func, arg }) => Node::Unary {
            func: *func,
            arg: Box::new(fit_node(arg, train)?),
        },
        Expr::Call(Call::Qcut { arg, bins }) => {
            let arg = fit_node(arg, train)?;
            let values = eval_num(&arg, train)?;
            let edges = stats::quantile_edges(&values, *bins as usize);
            if edges.len() < 2 {
                return Err(EvalError::Degenerate(format!(
                    "qcut needs at least 2 distinct finite train values in `{expr}`"
                )));
            }
            Node::Qcut {
                arg: Box::new(arg),
                edges,
            }
        }
        Expr::Call(Call::GroupAgg { group, value, stat }) => {
            let value = fit_node(value, train)?;
            let values = eval_num(&value, train)?;
            let keys = train.column(group).ok_or_else(|| EvalError::SchemaMismatch {
                column: group.clone(),
                detail: "missing from train".into(),
            })?;
            let mut buckets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            let mut all = Vec::new();
            for (r, v) in values.iter().enumerate() {
                let label = keys.label(r).unwrap_or_default().to_string();
                let slot = buckets.entry(label).or_default();
                if !is_missing(*v) {
                    slot.push(*v);
                    all.push(*v);
                }
            }
            Node::GroupAgg {
                group: group.clone(),
                per_group: buckets.into_iter().map(|(k, v)| (k, finite(stat.apply(&v)))).collect(),
                global: finite(AggStat::apply(*stat, &all)),
            }
        }
    })
}

impl FittedTransform {
    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Evaluates the feature on every row of `table`; boolean results are
    /// materialized as 0/1.
    pub fn eval(&self, table: &Table) -> Result<Column, EvalError> {
        Ok(Column::numeric(self.expr.to_string(), self.eval_values(table)?))
    }

    pub fn eval_values(&self, table: &Table) -> Result<Vec<f64>, EvalError> {
        self.check_schema(table)?;
        eval_num(&self.root, table)
    }

    fn check_schema(&self, table: &Table) -> Result<(), EvalError> {
        for (name, kind) in &self.schema {
            match table.column(name) {
                None => {
                    return Err(EvalError::SchemaMismatch {
                        column: name.clone(),
                        detail: "column absent".into(),
                    })
                }
                Some(c) if c.kind() != *kind => {
                    return Err(EvalError::SchemaMismatch {
                        column: name.clone(),
                        detail: format!("fitted as {kind}, found {}", c.kind()),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Evaluates without materializing booleans as 0/1.
    pub fn eval_raw(&self, table: &Table) -> Result<RawSeries, EvalError> {
        self.check_schema(table)?;
        match eval_node(&self.root, table)? {
            Series::Num(v) => Ok(RawSeries::Num(v)),
            Series::Bool(v) => Ok(RawSeries::Bool(v)),
            _ => Err(type_bug("expression result")),
        }
    }
}

/// Row values of an evaluated expression before boolean materialization.
#[derive(Clone, Debug, PartialEq)]
pub enum RawSeries {
    Num(Vec<f64>),
    Bool(Vec<Option<bool>>),
}

enum Series<'a> {
    Num(Vec<f64>),
    Bool(Vec<Option<bool>>),
    Cat(&'a Column),
    Str(&'a str),
}

fn finite(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        MISSING
    }
}

fn bool_to_num(b: Option<bool>) -> f64 {
    match b {
        Some(true) => 1.0,
        Some(false) => 0.0,
        None => MISSING,
    }
}

fn type_bug(what: &str) -> EvalError {
    EvalError::Type(TypeError::KindMismatch {
        context: what.to_string(),
        expected: "well-typed expression",
        found: Ty::Str,
    })
}

fn into_num(s: Series<'_>) -> Result<Vec<f64>, EvalError> {
    match s {
        Series::Num(v) => Ok(v),
        Series::Bool(v) => Ok(v.into_iter().map(bool_to_num).collect()),
        _ => Err(type_bug("numeric operand")),
    }
}

fn eval_num(node: &Node, table: &Table) -> Result<Vec<f64>, EvalError> {
    into_num(eval_node(node, table)?)
}

fn eval_node<'a>(node: &'a Node, table: &'a Table) -> Result<Series<'a>, EvalError> {
    let n = table.n_rows();
    Ok(match node {
        Node::Column(name) => {
            let col = table.column(name).ok_or_else(|| EvalError::SchemaMismatch {
                column: name.clone(),
                detail: "column absent".into(),
            })?;
            match col.data() {
                ColumnData::Numeric(v) => Series::Num(v.iter().map(|&x| finite(x)).collect()),
                ColumnData::Categorical { .. } => Series::Cat(col),
            }
        }
        Node::Number(x) => Series::Num(vec![*x; n]),
        Node::Str(s) => Series::Str(s),
        Node::Binary { op, lhs, rhs } => {
            let l = eval_node(lhs, table)?;
            let r = eval_node(rhs, table)?;
            binary(*op, l, r, n)?
        }
        Node::Unary { func, arg } => {
            let a = eval_node(arg, table)?;
            match func {
                UnaryFn::Flag => match a {
                    Series::Bool(v) => Series::Num(v.into_iter().map(bool_to_num).collect()),
                    _ => return Err(type_bug("flag")),
                },
                f => {
                    let v = into_num(a)?;
                    Series::Num(v.into_iter().map(|x| apply_unary(*f, x)).collect())
                }
            }
        }
        Node::Rank { arg, sorted } => {
            let v = eval_num(arg, table)?;
            Series::Num(v.into_iter().map(|x| ecdf(sorted, x)).collect())
        }
        Node::Qcut { arg, edges } => {
            let v = eval_num(arg, table)?;
            Series::Num(
                v.into_iter()
                    .map(|x| {
                        if is_missing(x) {
                            MISSING
                        } else {
                            stats::bin_index(edges, x) as f64
                        }
                    })
                    .collect(),
            )
        }
        Node::GroupAgg {
            group,
            per_group,
            global,
        } => {
            let keys = table.column(group).ok_or_else(|| EvalError::SchemaMismatch {
                column: group.clone(),
                detail: "column absent".into(),
            })?;
            Series::Num(
                (0..n)
                    .map(|r| {
                        let label = keys.label(r).unwrap_or_default();
                        per_group.get(label).copied().unwrap_or(*global)
                    })
                    .collect(),
            )
        }
    })
}

/// Fraction of train values at or below `x`.
fn ecdf(sorted: &[f64], x: f64) -> f64 {
    if is_missing(x) || sorted.is_empty() {
        return MISSING;
    }
    let count = sorted.partition_point(|&v| v <= x);
    count as f64 / sorted.len() as f64
}

fn apply_unary(f: UnaryFn, x: f64) -> f64 {
    if is_missing(x) {
        return MISSING;
    }
    finite(match f {
        UnaryFn::Log1p if x < -1.0 => MISSING,
        UnaryFn::Log1p => x.ln_1p(),
        UnaryFn::Sqrt if x < 0.0 => MISSING,
        UnaryFn::Sqrt => x.sqrt(),
        UnaryFn::Square => x * x,
        UnaryFn::Abs => x.abs(),
        UnaryFn::Flag | UnaryFn::Rank => unreachable!("handled by caller"),
    })
}

fn arith(op: BinOp, a: f64, b: f64) -> f64 {
    if is_missing(a) || is_missing(b) {
        return MISSING;
    }
    finite(match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div if b == 0.0 => MISSING,
        BinOp::Div => a / b,
        _ => unreachable!("arithmetic operator"),
    })
}

fn compare(op: BinOp, a: f64, b: f64) -> Option<bool> {
    if is_missing(a) || is_missing(b) {
        return None;
    }
    Some(match op {
        BinOp::Gt => a > b,
        BinOp::Ge => a >= b,
        BinOp::Lt => a < b,
        BinOp::Le => a <= b,
        BinOp::Eq => a == b,
        BinOp::Ne => a != b,
        _ => unreachable!("comparison operator"),
    })
}

fn binary<'a>(op: BinOp, l: Series<'a>, r: Series<'a>, n: usize) -> Result<Series<'a>, EvalError> {
    if op.is_logical() {
        let (Series::Bool(a), Series::Bool(b)) = (l, r) else {
            return Err(type_bug(op.symbol()));
        };
        return Ok(Series::Bool(
            a.into_iter()
                .zip(b)
                .map(|(x, y)| match (x, y) {
                    (Some(x), Some(y)) => Some(if op == BinOp::And { x && y } else { x || y }),
                    _ => None,
                })
                .collect(),
        ));
    }
    if matches!(op, BinOp::Eq | BinOp::Ne) {
        let cat_cmp = match (&l, &r) {
            (Series::Cat(c), Series::Str(s)) | (Series::Str(s), Series::Cat(c)) => Some((*c, *s)),
            _ => None,
        };
        if let Some((col, s)) = cat_cmp {
            return Ok(Series::Bool(
                (0..n)
                    .map(|row| {
                        let same = col.label(row) == Some(s);
                        Some(if op == BinOp::Eq { same } else { !same })
                    })
                    .collect(),
            ));
        }
    }
    let a = into_num(l)?;
    let b = into_num(r)?;
    Ok(if op.is_arithmetic() {
        Series::Num(a.into_iter().zip(b).map(|(x, y)| arith(op, x, y)).collect())
    } else {
        Series::Bool(a.into_iter().zip(b).map(|(x, y)| compare(op, x, y)).collect())
    })
}
