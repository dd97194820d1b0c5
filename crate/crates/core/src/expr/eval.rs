use rayon::prelude::*;

use super::{BinaryOp, Expr, ExprError, Func, UnaryOp, ValueType};
use crate::table::{ColumnData, ColumnTable};

/// Rows per evaluation chunk; chunks run in parallel and are stitched in order.
const CHUNK_ROWS: usize = 1 << 16;

/// Numeric evaluation output. Missing rows hold NaN in `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericResult {
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
}

impl NumericResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize) -> Option<f64> {
        (!self.missing[row]).then(|| self.values[row])
    }
}

enum Text<'a> {
    Column(&'a [String]),
    Literal(&'a str),
}

impl Text<'_> {
    fn at(&self, i: usize) -> &str {
        match self {
            Text::Column(v) => &v[i],
            Text::Literal(s) => s,
        }
    }
}

enum Vector<'a> {
    Num(Vec<f64>, Vec<bool>),
    Bool(Vec<bool>, Vec<bool>),
    Text(Text<'a>, Vec<bool>),
}

fn or_masks(a: &[bool], b: &[bool]) -> Vec<bool> {
    a.iter().zip(b).map(|(x, y)| *x || *y).collect()
}

/// Numeric vector with NaN results folded into the missing mask.
fn num<'a>(v: Vec<f64>, mut m: Vec<bool>) -> Vector<'a> {
    m.iter_mut().zip(&v).for_each(|(m, x)| *m |= x.is_nan());
    Vector::Num(v, m)
}

fn eval_range<'a>(expr: &'a Expr, table: &'a ColumnTable, lo: usize, hi: usize) -> Vector<'a> {
    let n = hi - lo;
    match expr {
        Expr::Number(v) => Vector::Num(vec![*v; n], vec![false; n]),
        Expr::Bool(b) => Vector::Bool(vec![*b; n], vec![false; n]),
        Expr::Text(s) => Vector::Text(Text::Literal(s), vec![false; n]),
        Expr::Column(name) => {
            let col = table.column(name).expect("column checked before evaluation");
            let nulls = &col.nulls()[lo..hi];
            match col.data() {
                ColumnData::Float64(v) => {
                    let v = &v[lo..hi];
                    let missing = nulls.iter().zip(v).map(|(m, x)| *m || x.is_nan()).collect();
                    Vector::Num(v.to_vec(), missing)
                }
                ColumnData::Int64(v) => Vector::Num(v[lo..hi].iter().map(|x| *x as f64).collect(), nulls.to_vec()),
                ColumnData::Bool(v) => Vector::Bool(v[lo..hi].to_vec(), nulls.to_vec()),
                ColumnData::Text(v) => Vector::Text(Text::Column(&v[lo..hi]), nulls.to_vec()),
            }
        }
        Expr::Unary(op, a) => match (op, eval_range(a, table, lo, hi)) {
            (UnaryOp::Neg, Vector::Num(v, m)) => Vector::Num(v.into_iter().map(|x| -x).collect(), m),
            (UnaryOp::Not, Vector::Bool(v, m)) => Vector::Bool(v.into_iter().map(|x| !x).collect(), m),
            _ => unreachable!("type checked"),
        },
        Expr::Binary(op, a, b) => binary(*op, eval_range(a, table, lo, hi), eval_range(b, table, lo, hi)),
        Expr::Call(func, args) => {
            let mut vals = args.iter().map(|a| match eval_range(a, table, lo, hi) {
                Vector::Num(v, m) => (v, m),
                _ => unreachable!("type checked"),
            });
            let (x, mx) = vals.next().unwrap();
            if func.arity() == 1 {
                let (v, m): (Vec<f64>, Vec<bool>) = x
                    .iter()
                    .zip(&mx)
                    .map(|(&x, &m)| match apply_unary(*func, x) {
                        Some(r) if !m => (r, false),
                        _ => (f64::NAN, true),
                    })
                    .unzip();
                num(v, m)
            } else {
                let (y, my) = vals.next().unwrap();
                let m = or_masks(&mx, &my);
                let v = x.iter().zip(&y).map(|(&x, &y)| apply_binary_func(*func, x, y)).collect();
                num(v, m)
            }
        }
    }
}

pub(crate) fn apply_unary(func: Func, x: f64) -> Option<f64> {
    Some(match func {
        Func::Sqrt if x < 0.0 => return None,
        Func::Log10 | Func::Ln if x <= 0.0 => return None,
        Func::Sqrt => x.sqrt(),
        Func::Log10 => x.log10(),
        Func::Ln => x.ln(),
        Func::Exp => x.exp(),
        Func::Abs => x.abs(),
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        _ => unreachable!("binary function"),
    })
}

pub(crate) fn apply_binary_func(func: Func, x: f64, y: f64) -> f64 {
    match func {
        Func::Atan2 => x.atan2(y),
        Func::Pow => x.powf(y),
        Func::Min => x.min(y),
        Func::Max => x.max(y),
        _ => unreachable!("unary function"),
    }
}

fn binary<'a>(op: BinaryOp, a: Vector<'a>, b: Vector<'a>) -> Vector<'a> {
    use BinaryOp::*;
    match (a, b) {
        (Vector::Num(x, mx), Vector::Num(y, my)) => {
            let m = or_masks(&mx, &my);
            let it = x.iter().zip(&y);
            match op {
                Add => num(it.map(|(a, b)| a + b).collect(), m),
                Sub => num(it.map(|(a, b)| a - b).collect(), m),
                Mul => num(it.map(|(a, b)| a * b).collect(), m),
                Div => num(it.map(|(a, b)| a / b).collect(), m),
                Rem => num(it.map(|(a, b)| a % b).collect(), m),
                Lt => Vector::Bool(it.map(|(a, b)| a < b).collect(), m),
                Le => Vector::Bool(it.map(|(a, b)| a <= b).collect(), m),
                Gt => Vector::Bool(it.map(|(a, b)| a > b).collect(), m),
                Ge => Vector::Bool(it.map(|(a, b)| a >= b).collect(), m),
                Eq => Vector::Bool(it.map(|(a, b)| a == b).collect(), m),
                Ne => Vector::Bool(it.map(|(a, b)| a != b).collect(), m),
                And | Or => unreachable!("type checked"),
            }
        }
        (Vector::Bool(x, mx), Vector::Bool(y, my)) => {
            let m = or_masks(&mx, &my);
            let it = x.iter().zip(&y);
            Vector::Bool(
                match op {
                    Eq => it.map(|(a, b)| a == b).collect(),
                    Ne => it.map(|(a, b)| a != b).collect(),
                    And => it.map(|(a, b)| *a && *b).collect(),
                    Or => it.map(|(a, b)| *a || *b).collect(),
                    _ => unreachable!("type checked"),
                },
                m,
            )
        }
        (Vector::Text(x, mx), Vector::Text(y, my)) => {
            let m = or_masks(&mx, &my);
            let eq = (0..m.len()).map(|i| x.at(i) == y.at(i));
            Vector::Bool(
                match op {
                    Eq => eq.collect(),
                    Ne => eq.map(|e| !e).collect(),
                    _ => unreachable!("type checked"),
                },
                m,
            )
        }
        _ => unreachable!("type checked"),
    }
}

fn chunks(rows: usize) -> Vec<(usize, usize)> {
    (0..rows.div_ceil(CHUNK_ROWS).max(1))
        .map(|k| (k * CHUNK_ROWS, ((k + 1) * CHUNK_ROWS).min(rows)))
        .collect()
}

fn expect_type(expr: &Expr, table: &ColumnTable, want: ValueType) -> Result<(), ExprError> {
    let got = expr.value_type(table)?;
    if got != want {
        return Err(ExprError::Type {
            subexpr: expr.to_string(),
            message: format!("expected a {want} expression, found {got}"),
        });
    }
    Ok(())
}

/// Evaluates a numeric expression over every row. Integer columns are
/// promoted to float; NaN results are marked missing. Infinite results
/// are kept and left for consumers to discard.
pub fn eval_numeric(expr: &Expr, table: &ColumnTable) -> Result<NumericResult, ExprError> {
    expect_type(expr, table, ValueType::Numeric)?;
    let parts: Vec<(Vec<f64>, Vec<bool>)> = chunks(table.row_count())
        .into_par_iter()
        .map(|(lo, hi)| match eval_range(expr, table, lo, hi) {
            Vector::Num(mut v, mut m) => {
                for (x, miss) in v.iter_mut().zip(m.iter_mut()) {
                    if *miss || x.is_nan() {
                        *miss = true;
                        *x = f64::NAN;
                    }
                }
                (v, m)
            }
            _ => unreachable!(),
        })
        .collect();
    let mut out = NumericResult {
        values: Vec::with_capacity(table.row_count()),
        missing: Vec::with_capacity(table.row_count()),
    };
    for (v, m) in parts {
        out.values.extend(v);
        out.missing.extend(m);
    }
    Ok(out)
}

/// Evaluates a boolean expression as a row mask; rows with missing
/// inputs are `false`.
pub fn eval_filter(expr: &Expr, table: &ColumnTable) -> Result<Vec<bool>, ExprError> {
    expect_type(expr, table, ValueType::Bool)?;
    let parts: Vec<Vec<bool>> = chunks(table.row_count())
        .into_par_iter()
        .map(|(lo, hi)| match eval_range(expr, table, lo, hi) {
            Vector::Bool(v, m) => v.into_iter().zip(m).map(|(v, m)| v && !m).collect(),
            _ => unreachable!(),
        })
        .collect();
    Ok(parts.concat())
}
