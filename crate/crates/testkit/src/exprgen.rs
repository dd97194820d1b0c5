//! Random expression trees over [`mixed_table`](crate::tables::mixed_table)
//! and a row-at-a-time interpreter for them.

use plotwire_core::expr::{BinaryOp, Expr, Func, UnaryOp};
use plotwire_core::table::{CellValue, ColumnTable};
use rand::Rng;

const NUMERIC_COLUMNS: [&str; 3] = ["a", "b", "c"];
const LITERALS: [f64; 8] = [0.0, 1.0, 2.0, -2.5, 0.5, 3.0, 1e300, 7.25];

fn boxed(e: Expr) -> Box<Expr> {
    Box::new(e)
}

pub fn numeric_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.25) {
        return if rng.random_bool(0.7) {
            Expr::Column(NUMERIC_COLUMNS[rng.random_range(0..3)].to_string())
        } else {
            Expr::Number(LITERALS[rng.random_range(0..LITERALS.len())])
        };
    }
    match rng.random_range(0..4) {
        0 => Expr::Unary(UnaryOp::Neg, boxed(numeric_expr(rng, depth - 1))),
        1 => {
            let op = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div, BinaryOp::Rem][rng.random_range(0..5)];
            Expr::Binary(op, boxed(numeric_expr(rng, depth - 1)), boxed(numeric_expr(rng, depth - 1)))
        }
        _ => {
            let f = Func::ALL[rng.random_range(0..Func::ALL.len())];
            let args = (0..f.arity()).map(|_| numeric_expr(rng, depth - 1)).collect();
            Expr::Call(f, args)
        }
    }
}

pub fn bool_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.2) {
        return match rng.random_range(0..3) {
            0 => Expr::Bool(rng.random_bool(0.5)),
            1 => Expr::Column("f".into()),
            _ => {
                let op = if rng.random_bool(0.5) { BinaryOp::Eq } else { BinaryOp::Ne };
                let word = ["u", "v", "x"][rng.random_range(0..3)];
                Expr::Binary(op, boxed(Expr::Column("s".into())), boxed(Expr::Text(word.into())))
            }
        };
    }
    match rng.random_range(0..4) {
        0 => Expr::Unary(UnaryOp::Not, boxed(bool_expr(rng, depth - 1))),
        1 => {
            let op = [BinaryOp::And, BinaryOp::Or, BinaryOp::Eq, BinaryOp::Ne][rng.random_range(0..4)];
            Expr::Binary(op, boxed(bool_expr(rng, depth - 1)), boxed(bool_expr(rng, depth - 1)))
        }
        _ => {
            let op = [
                BinaryOp::Lt,
                BinaryOp::Le,
                BinaryOp::Gt,
                BinaryOp::Ge,
                BinaryOp::Eq,
                BinaryOp::Ne,
            ][rng.random_range(0..6)];
            Expr::Binary(op, boxed(numeric_expr(rng, depth - 1)), boxed(numeric_expr(rng, depth - 1)))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Text(String),
}

fn num(v: f64) -> Option<Value> {
    (!v.is_nan()).then_some(Value::Num(v))
}

/// Evaluates `e` for a single row. `None` means missing: a null or NaN
/// input anywhere in the tree, an out-of-domain function argument, or a
/// NaN result.
pub fn eval_row(e: &Expr, t: &ColumnTable, row: usize) -> Option<Value> {
    match e {
        Expr::Number(v) => Some(Value::Num(*v)),
        Expr::Bool(b) => Some(Value::Bool(*b)),
        Expr::Text(s) => Some(Value::Text(s.clone())),
        Expr::Column(name) => match t.column(name)?.cell(row) {
            CellValue::Null => None,
            CellValue::Float(v) => num(v),
            CellValue::Int(i) => Some(Value::Num(i as f64)),
            CellValue::Bool(b) => Some(Value::Bool(b)),
            CellValue::Text(s) => Some(Value::Text(s)),
        },
        Expr::Unary(op, a) => match (op, eval_row(a, t, row)?) {
            (UnaryOp::Neg, Value::Num(x)) => Some(Value::Num(-x)),
            (UnaryOp::Not, Value::Bool(b)) => Some(Value::Bool(!b)),
            _ => panic!("ill-typed unary"),
        },
        Expr::Binary(op, a, b) => {
            let (x, y) = (eval_row(a, t, row), eval_row(b, t, row));
            let (x, y) = (x?, y?);
            binary(*op, x, y)
        }
        Expr::Call(f, args) => {
            let vals: Vec<Option<Value>> = args.iter().map(|a| eval_row(a, t, row)).collect();
            let mut xs = Vec::new();
            for v in vals {
                match v? {
                    Value::Num(x) => xs.push(x),
                    _ => panic!("ill-typed call"),
                }
            }
            let x = xs[0];
            match f {
                Func::Sqrt => (x >= 0.0).then(|| x.sqrt()).and_then(num),
                Func::Log10 => (x > 0.0).then(|| x.log10()).and_then(num),
                Func::Ln => (x > 0.0).then(|| x.ln()).and_then(num),
                Func::Exp => num(x.exp()),
                Func::Abs => num(x.abs()),
                Func::Sin => num(x.sin()),
                Func::Cos => num(x.cos()),
                Func::Atan2 => num(x.atan2(xs[1])),
                Func::Pow => num(x.powf(xs[1])),
                Func::Min => num(x.min(xs[1])),
                Func::Max => num(x.max(xs[1])),
            }
        }
    }
}

fn binary(op: BinaryOp, x: Value, y: Value) -> Option<Value> {
    use BinaryOp::*;
    Some(match (x, y) {
        (Value::Num(a), Value::Num(b)) => match op {
            Add => return num(a + b),
            Sub => return num(a - b),
            Mul => return num(a * b),
            Div => return num(a / b),
            Rem => return num(a % b),
            Lt => Value::Bool(a < b),
            Le => Value::Bool(a <= b),
            Gt => Value::Bool(a > b),
            Ge => Value::Bool(a >= b),
            Eq => Value::Bool(a == b),
            Ne => Value::Bool(a != b),
            And | Or => panic!("ill-typed"),
        },
        (Value::Bool(a), Value::Bool(b)) => match op {
            Eq => Value::Bool(a == b),
            Ne => Value::Bool(a != b),
            And => Value::Bool(a && b),
            Or => Value::Bool(a || b),
            _ => panic!("ill-typed"),
        },
        (Value::Text(a), Value::Text(b)) => match op {
            Eq => Value::Bool(a == b),
            Ne => Value::Bool(a != b),
            _ => panic!("ill-typed"),
        },
        _ => panic!("ill-typed binary"),
    })
}

/// Compares the vectorized numeric result with the row interpreter; the
/// first disagreeing row, if any.
pub fn first_numeric_mismatch(e: &Expr, t: &ColumnTable, values: &[f64], missing: &[bool]) -> Option<usize> {
    (0..t.row_count()).find(|&i| match eval_row(e, t, i) {
        None => !missing[i],
        Some(Value::Num(v)) => missing[i] || values[i].to_bits() != v.to_bits(),
        Some(other) => panic!("numeric expression gave {other:?}"),
    })
}

pub fn first_filter_mismatch(e: &Expr, t: &ColumnTable, mask: &[bool]) -> Option<usize> {
    (0..t.row_count()).find(|&i| mask[i] != matches!(eval_row(e, t, i), Some(Value::Bool(true))))
}
