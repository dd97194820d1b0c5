use super::coords::PreparedCoords;
use super::registry::ValidatedPlot;
use super::view::{AxisRange, Scale, ViewState};

/// Axis bounds from the data: [min, max] of plotted coordinates padded
/// by `pad` times the span on each side (in log10 space for log axes).
pub fn auto_range(plan: &ValidatedPlot, coords: &PreparedCoords) -> ViewState {
    let scales = &plan.scales;
    let n_axes = scales.len();
    let mut lo = vec![f64::INFINITY; n_axes];
    let mut hi = vec![f64::NEG_INFINITY; n_axes];
    let mut any = false;
    let mut t = vec![0.0; n_axes];
    'rows: for row in 0..coords.row_count() {
        for (k, scale) in scales.iter().enumerate() {
            match scale.forward(coords.axes[k][row]) {
                Some(v) => t[k] = v,
                None => continue 'rows,
            }
        }
        any = true;
        for k in 0..n_axes {
            lo[k] = lo[k].min(t[k]);
            hi[k] = hi[k].max(t[k]);
        }
    }
    let axes = scales
        .iter()
        .enumerate()
        .map(|(k, &scale)| padded(any.then_some((lo[k], hi[k])), scale, plan.style.pad))
        .collect();
    ViewState::new(axes)
}

/// `bounds` are in transformed space.
pub(crate) fn padded(bounds: Option<(f64, f64)>, scale: Scale, pad: f64) -> AxisRange {
    let range = |lo, hi| AxisRange { lo, hi, scale };
    match (bounds, scale) {
        (None, Scale::Linear) => range(0.0, 1.0),
        (None, Scale::Log) => range(1.0, 10.0),
        (Some((a, b)), Scale::Linear) if a == b => range(a - 1.0, a + 1.0),
        (Some((a, b)), Scale::Log) if a == b => {
            let v = 10f64.powf(a);
            range(v / 10.0, v * 10.0)
        }
        (Some((a, b)), _) => {
            let p = pad * (b - a);
            range(scale.inverse(a - p), scale.inverse(b + p))
        }
    }
}
