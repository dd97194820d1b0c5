//! A small expression language over table rows.
//!
//! Expressions supply plot coordinates (`sqrt(x*x + y*y)`) and row
//! filters (`mag < 12 && flag == 0`). Evaluation is vectorized over
//! whole columns; a row whose inputs include a null or NaN cell comes
//! out missing, and missing rows never pass a filter.

mod eval;
mod parser;

use std::fmt;

pub use self::eval::{eval_filter, eval_numeric, NumericResult};
pub use self::parser::parse;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unknown {what} '{name}'")]
    Name { what: &'static str, name: String },
    #[error("type error in '{subexpr}': {message}")]
    Type { subexpr: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "&&",
            BinaryOp::Or => "||",
        }
    }
}

/// Builtin numeric functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Log10,
    Ln,
    Exp,
    Abs,
    Sin,
    Cos,
    Atan2,
    Pow,
    Min,
    Max,
}

impl Func {
    pub const ALL: [Func; 11] = [
        Func::Sqrt,
        Func::Log10,
        Func::Ln,
        Func::Exp,
        Func::Abs,
        Func::Sin,
        Func::Cos,
        Func::Atan2,
        Func::Pow,
        Func::Min,
        Func::Max,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Log10 => "log10",
            Func::Ln => "ln",
            Func::Exp => "exp",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Atan2 => "atan2",
            Func::Pow => "pow",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Atan2 | Func::Pow | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Bool(bool),
    Text(String),
    Column(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Numeric,
    Bool,
    Text,
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValueType::Numeric => "numeric",
            ValueType::Bool => "bool",
            ValueType::Text => "text",
        })
    }
}

pub(crate) fn is_plain_ident(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && name != "true"
        && name != "false"
}

impl Expr {
    /// Names of all referenced columns, in first-use order.
    pub fn columns(&self) -> Vec<&str> {
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a str>) {
            match e {
                Expr::Column(c) => {
                    if !out.contains(&c.as_str()) {
                        out.push(c);
                    }
                }
                Expr::Unary(_, a) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Expr::Call(_, args) => args.iter().for_each(|a| walk(a, out)),
                _ => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out
    }

    /// Type-checks against the columns of `table`.
    pub fn value_type(&self, table: &crate::table::ColumnTable) -> Result<ValueType, ExprError> {
        use crate::table::ColumnKind;
        let mismatch = |msg: String| ExprError::Type {
            subexpr: self.to_string(),
            message: msg,
        };
        Ok(match self {
            Expr::Number(_) => ValueType::Numeric,
            Expr::Bool(_) => ValueType::Bool,
            Expr::Text(_) => ValueType::Text,
            Expr::Column(name) => match table.column(name).map(|c| c.kind()) {
                None => {
                    return Err(ExprError::Name {
                        what: "column",
                        name: name.clone(),
                    })
                }
                Some(ColumnKind::Float64 | ColumnKind::Int64) => ValueType::Numeric,
                Some(ColumnKind::Bool) => ValueType::Bool,
                Some(ColumnKind::Text) => ValueType::Text,
            },
            Expr::Unary(op, a) => {
                let t = a.value_type(table)?;
                let want = match op {
                    UnaryOp::Neg => ValueType::Numeric,
                    UnaryOp::Not => ValueType::Bool,
                };
                if t != want {
                    return Err(mismatch(format!("operand must be {want}, found {t}")));
                }
                want
            }
            Expr::Binary(op, a, b) => {
                let (ta, tb) = (a.value_type(table)?, b.value_type(table)?);
                use BinaryOp::*;
                match op {
                    Add | Sub | Mul | Div | Rem | Lt | Le | Gt | Ge => {
                        if ta != ValueType::Numeric || tb != ValueType::Numeric {
                            return Err(mismatch(format!(
                                "'{}' needs numeric operands, found {ta} and {tb}",
                                op.symbol()
                            )));
                        }
                        if matches!(op, Add | Sub | Mul | Div | Rem) {
                            ValueType::Numeric
                        } else {
                            ValueType::Bool
                        }
                    }
                    Eq | Ne => {
                        if ta != tb {
                            return Err(mismatch(format!("cannot compare {ta} with {tb}")));
                        }
                        ValueType::Bool
                    }
                    And | Or => {
                        if ta != ValueType::Bool || tb != ValueType::Bool {
                            return Err(mismatch(format!(
                                "'{}' needs bool operands, found {ta} and {tb}",
                                op.symbol()
                            )));
                        }
                        ValueType::Bool
                    }
                }
            }
            Expr::Call(func, args) => {
                for a in args {
                    let t = a.value_type(table)?;
                    if t != ValueType::Numeric {
                        return Err(mismatch(format!("{}() takes numeric arguments, found {t}", func.name())));
                    }
                }
                ValueType::Numeric
            }
        })
    }
}

/// Prints with full parenthesization so the output re-parses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(n) => write!(f, "{n:?}"),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Text(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Expr::Column(c) if is_plain_ident(c) => f.write_str(c),
            Expr::Column(c) => write!(f, "`{c}`"),
            Expr::Unary(UnaryOp::Neg, a) => write!(f, "(-{a})"),
            Expr::Unary(UnaryOp::Not, a) => write!(f, "(!{a})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
