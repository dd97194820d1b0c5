use std::sync::Arc;

use super::registry::{SourcedExpr, ValidatedPlot};
use super::PlotError;
use crate::expr::{eval_filter, eval_numeric};
use crate::table::ColumnTable;

/// Materialized plot coordinates: one vector per axis, NaN wherever the
/// row is missing, non-finite or rejected by the filter.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCoords {
    pub axes: Vec<Arc<Vec<f64>>>,
}

impl PreparedCoords {
    pub fn row_count(&self) -> usize {
        self.axes.first().map_or(0, |a| a.len())
    }

    #[inline]
    pub fn point(&self, row: usize, out: &mut [f64]) {
        for (o, axis) in out.iter_mut().zip(&self.axes) {
            *o = axis[row];
        }
    }

    pub fn byte_size(&self) -> usize {
        self.axes.iter().map(|a| a.len() * 8).sum()
    }
}

/// Row selection mask, `None` when every row is selected.
pub fn filter_mask(plan: &ValidatedPlot, table: &ColumnTable) -> Result<Option<Vec<bool>>, PlotError> {
    plan.filter
        .as_ref()
        .map(|f| eval_filter(&f.expr, table))
        .transpose()
        .map_err(PlotError::from)
}

/// One axis worth of coordinates.
pub fn axis_values(expr: &SourcedExpr, mask: Option<&[bool]>, table: &ColumnTable) -> Result<Vec<f64>, PlotError> {
    let mut r = eval_numeric(&expr.expr, table)?.values;
    for (i, v) in r.iter_mut().enumerate() {
        if !v.is_finite() || mask.is_some_and(|m| !m[i]) {
            *v = f64::NAN;
        }
    }
    Ok(r)
}

pub fn prepare(plan: &ValidatedPlot, table: &ColumnTable) -> Result<PreparedCoords, PlotError> {
    let mask = filter_mask(plan, table)?;
    let axes = plan
        .coords
        .iter()
        .map(|c| axis_values(c, mask.as_deref(), table).map(Arc::new))
        .collect::<Result<_, _>>()?;
    Ok(PreparedCoords { axes })
}
