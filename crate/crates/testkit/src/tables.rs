use plotwire_core::table::{Column, ColumnData, ColumnTable};
use rand::Rng;

/// Float column with roughly `null_rate` nulls and `nan_rate` NaN cells.
pub fn float_column(rng: &mut impl Rng, name: &str, n: usize, lo: f64, hi: f64, null_rate: f64, nan_rate: f64) -> Column {
    let mut values = Vec::with_capacity(n);
    let mut nulls = Vec::with_capacity(n);
    for _ in 0..n {
        let null = rng.random_bool(null_rate);
        let v = if null {
            f64::NAN
        } else if rng.random_bool(nan_rate) {
            f64::NAN
        } else {
            rng.random_range(lo..hi)
        };
        values.push(v);
        nulls.push(null);
    }
    Column::new(name, ColumnData::Float64(values), nulls).unwrap()
}

pub fn int_column(rng: &mut impl Rng, name: &str, n: usize, lo: i64, hi: i64, null_rate: f64) -> Column {
    let nulls: Vec<bool> = (0..n).map(|_| rng.random_bool(null_rate)).collect();
    let values = nulls.iter().map(|&m| if m { 0 } else { rng.random_range(lo..=hi) }).collect();
    Column::new(name, ColumnData::Int64(values), nulls).unwrap()
}

pub fn bool_column(rng: &mut impl Rng, name: &str, n: usize, null_rate: f64) -> Column {
    let nulls: Vec<bool> = (0..n).map(|_| rng.random_bool(null_rate)).collect();
    let values = nulls.iter().map(|&m| !m && rng.random_bool(0.5)).collect();
    Column::new(name, ColumnData::Bool(values), nulls).unwrap()
}

pub fn text_column(rng: &mut impl Rng, name: &str, n: usize, words: &[&str], null_rate: f64) -> Column {
    let nulls: Vec<bool> = (0..n).map(|_| rng.random_bool(null_rate)).collect();
    let values = nulls
        .iter()
        .map(|&m| {
            if m {
                String::new()
            } else {
                words[rng.random_range(0..words.len())].to_string()
            }
        })
        .collect();
    Column::new(name, ColumnData::Text(values), nulls).unwrap()
}

/// The table shape used by the expression oracle: float `a` (nulls and
/// NaN), int `b` (nulls), dense float `c`, bool `f`, text `s`.
pub fn mixed_table(rng: &mut impl Rng, n: usize) -> ColumnTable {
    ColumnTable::new(
        "mixed",
        vec![
            float_column(rng, "a", n, -5.0, 5.0, 0.05, 0.02),
            int_column(rng, "b", n, -4, 9, 0.05),
            float_column(rng, "c", n, -100.0, 100.0, 0.0, 0.0),
            bool_column(rng, "f", n, 0.05),
            text_column(rng, "s", n, &["u", "v", "w"], 0.05),
        ],
    )
    .unwrap()
}

/// Point cloud with columns `x`, `y`, `z` (floats, some missing), `w`
/// (uniform in [0, 1), used for filters) and a text column `label`.
/// With `grid` set, coordinates snap to that many steps per axis so that
/// coincident points occur.
pub fn point_table(rng: &mut impl Rng, name: &str, n: usize, grid: Option<u32>, missing_rate: f64) -> ColumnTable {
    let mut axes: Vec<Vec<f64>> = vec![Vec::with_capacity(n); 3];
    let mut nulls: Vec<Vec<bool>> = vec![Vec::with_capacity(n); 3];
    for _ in 0..n {
        for k in 0..3 {
            let null = rng.random_bool(missing_rate);
            let v = match grid {
                Some(g) => rng.random_range(0..=g) as f64 / g as f64 * 10.0,
                None => rng.random_range(0.0..10.0),
            };
            axes[k].push(if null { f64::NAN } else { v });
            nulls[k].push(null);
        }
    }
    let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let label: Vec<String> = (0..n).map(|i| format!("row-{i}")).collect();
    let mut cols = Vec::new();
    for (k, name) in ["x", "y", "z"].iter().enumerate() {
        cols.push(Column::new(*name, ColumnData::Float64(axes[k].clone()), nulls[k].clone()).unwrap());
    }
    cols.push(Column::dense("w", ColumnData::Float64(w)));
    cols.push(Column::dense("label", ColumnData::Text(label)));
    ColumnTable::new(name, cols).unwrap()
}
