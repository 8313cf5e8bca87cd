use std::fmt;

use super::lexer::{is_ident_continue, is_ident_start};
use super::{Call, Expr};

/// Bare identifier when possible, otherwise back-quoted with embedded
/// back-quotes doubled.
pub fn format_column_name(name: &str) -> String {
    let bare = name.chars().next().is_some_and(is_ident_start)
        && name.chars().all(is_ident_continue)
        && name != "and"
        && name != "or";
    if bare {
        name.to_string()
    } else {
        format!("`{}`", name.replace('`', "``"))
    }
}

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => op.precedence(),
        _ => u8::MAX,
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(name) => f.write_str(&format_column_name(name)),
            Expr::Number(n) => write!(f, "{n}"),
            Expr::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    if c == '"' || c == '\\' {
                        f.write_str("\\")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("\"")
            }
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                // Comparisons under and/or are parenthesized for readability.
                let boxed_cmp =
                    |e: &Expr| op.is_logical() && matches!(e, Expr::Binary { op, .. } if op.is_comparison());
                write_operand(f, lhs, precedence(lhs) < p || boxed_cmp(lhs))?;
                write!(f, " {} ", op.symbol())?;
                write_operand(f, rhs, precedence(rhs) <= p || boxed_cmp(rhs))
            }
            Expr::Call(Call::Unary { func, arg }) => write!(f, "{}({arg})", func.name()),
            Expr::Call(Call::Qcut { arg, bins }) => write!(f, "qcut({arg}, {bins})"),
            Expr::Call(Call::GroupAgg { group, value, stat }) => {
                write!(f, "groupagg({}, {value}, {})", format_column_name(group), stat.name())
            }
        }
    }
}
