use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BinOp, Call, Expr, UnaryFn};
use crate::tabular::{ColumnKind, Schema};

/// Result type of a well-typed feature expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesType {
    Num,
    Bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TypeError {
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("expression references the target column `{0}`")]
    TargetReferenced(String),
    #[error("kind mismatch in {context}: expected {expected}, found {found}")]
    KindMismatch {
        context: String,
        expected: &'static str,
        found: Ty,
    },
    #[error("string literal {0:?} is only allowed in equality with a categorical column")]
    StringLiteral(String),
}

/// Internal typing lattice: categorical columns and string literals never
/// escape an expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Num,
    Bool,
    Cat,
    Str,
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ty::Num => "numeric",
            Ty::Bool => "boolean",
            Ty::Cat => "categorical",
            Ty::Str => "string",
        })
    }
}

/// Checks column references and operand kinds against the schema.
///
/// `target` is rejected wherever it appears, including as a group key.
pub fn typecheck(expr: &Expr, schema: &Schema, target: &str) -> Result<SeriesType, TypeError> {
    match infer(expr, schema, Some(target))? {
        Ty::Num => Ok(SeriesType::Num),
        Ty::Bool => Ok(SeriesType::Bool),
        other => Err(mismatch("expression result", "numeric or boolean", other, expr)),
    }
}

pub(crate) fn infer(expr: &Expr, schema: &Schema, target: Option<&str>) -> Result<Ty, TypeError> {
    match expr {
        Expr::Column(name) => column_ty(name, schema, target),
        Expr::Number(_) => Ok(Ty::Num),
        Expr::Str(_) => Ok(Ty::Str),
        Expr::Binary { op, lhs, rhs } => {
            let l = infer(lhs, schema, target)?;
            let r = infer(rhs, schema, target)?;
            let numeric = |t: Ty, side: &Expr| -> Result<(), TypeError> {
                match t {
                    Ty::Num | Ty::Bool => Ok(()),
                    Ty::Str => Err(string_error(side)),
                    Ty::Cat => Err(mismatch(op.symbol(), "numeric", t, side)),
                }
            };
            match op {
                BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div => {
                    numeric(l, lhs)?;
                    numeric(r, rhs)?;
                    Ok(Ty::Num)
                }
                BinOp::Gt | BinOp::Ge | BinOp::Lt | BinOp::Le => {
                    numeric(l, lhs)?;
                    numeric(r, rhs)?;
                    Ok(Ty::Bool)
                }
                BinOp::Eq | BinOp::Ne => match (l, r) {
                    (Ty::Cat, Ty::Str) | (Ty::Str, Ty::Cat) => Ok(Ty::Bool),
                    (Ty::Cat, other) => Err(mismatch(op.symbol(), "string literal", other, rhs)),
                    (other, Ty::Cat) => Err(mismatch(op.symbol(), "string literal", other, lhs)),
                    _ => {
                        numeric(l, lhs)?;
                        numeric(r, rhs)?;
                        Ok(Ty::Bool)
                    }
                },
                BinOp::And | BinOp::Or => {
                    for (t, side) in [(l, lhs), (r, rhs)] {
                        match t {
                            Ty::Bool => {}
                            Ty::Str => return Err(string_error(side)),
                            other => return Err(mismatch(op.symbol(), "boolean", other, side)),
                        }
                    }
                    Ok(Ty::Bool)
                }
            }
        }
        Expr::Call(Call::Unary { func, arg }) => {
            let t = infer(arg, schema, target)?;
            let expected = if *func == UnaryFn::Flag { Ty::Bool } else { Ty::Num };
            match t {
                t if t == expected => Ok(Ty::Num),
                Ty::Str => Err(string_error(arg)),
                other => Err(mismatch(
                    func.name(),
                    if expected == Ty::Bool { "boolean" } else { "numeric" },
                    other,
                    arg,
                )),
            }
        }
        Expr::Call(Call::Qcut { arg, .. }) => match infer(arg, schema, target)? {
            Ty::Num => Ok(Ty::Num),
            Ty::Str => Err(string_error(arg)),
            other => Err(mismatch("qcut", "numeric", other, arg)),
        },
        Expr::Call(Call::GroupAgg { group, value, .. }) => {
            match column_ty(group, schema, target)? {
                Ty::Cat => {}
                other => {
                    return Err(TypeError::KindMismatch {
                        context: format!("groupagg key `{group}`"),
                        expected: "categorical",
                        found: other,
                    })
                }
            }
            match infer(value, schema, target)? {
                Ty::Num | Ty::Bool => Ok(Ty::Num),
                Ty::Str => Err(string_error(value)),
                other => Err(mismatch("groupagg value", "numeric", other, value)),
            }
        }
    }
}

fn column_ty(name: &str, schema: &Schema, target: Option<&str>) -> Result<Ty, TypeError> {
    if target == Some(name) {
        return Err(TypeError::TargetReferenced(name.to_string()));
    }
    match schema.get(name) {
        Some(ColumnKind::Numeric) => Ok(Ty::Num),
        Some(ColumnKind::Categorical) => Ok(Ty::Cat),
        None => Err(TypeError::UnknownColumn(name.to_string())),
    }
}

fn mismatch(context: &str, expected: &'static str, found: Ty, at: &Expr) -> TypeError {
    TypeError::KindMismatch {
        context: format!("{context} (operand `{at}`)"),
        expected,
        found,
    }
}

fn string_error(at: &Expr) -> TypeError {
    match at {
        Expr::Str(s) => TypeError::StringLiteral(s.clone()),
        other => TypeError::StringLiteral(other.to_string()),
    }
}
