use super::coords::PreparedCoords;
use super::registry::{PlotKind, ValidatedPlot};
use super::view::{GraphicsPoint, ViewState, Viewport};
use super::PlotError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Identified {
    pub row: usize,
    pub distance_px: f64,
}

/// Nearest drawn row to `g` within `radius_px`.
///
/// Only rows whose pixel lies inside the viewport are candidates. Ties
/// in screen distance go to the row nearer the viewer (3D only), then to
/// the lower row index. Histograms measure horizontal distance only.
pub fn identify_row(
    plan: &ValidatedPlot,
    coords: &PreparedCoords,
    view: &ViewState,
    viewport: Viewport,
    g: GraphicsPoint,
    radius_px: f64,
) -> Result<Option<Identified>, PlotError> {
    if !(radius_px >= 0.0) || !radius_px.is_finite() {
        return Err(PlotError::Range(format!("radius must be >= 0, got {radius_px}")));
    }
    let r2 = radius_px * radius_px;
    let horizontal = plan.kind == PlotKind::PlaneHistogram;
    // (squared distance, -depth, row)
    let mut best: Option<(f64, f64, usize)> = None;
    let mut buf = [0.0; 3];
    for row in 0..coords.row_count() {
        coords.point(row, &mut buf);
        let Some(p) = view.project(viewport, &buf) else { continue };
        if p.pixel(viewport).is_none() {
            continue;
        }
        let dx = p.gx - g.x;
        let d2 = if horizontal { dx * dx } else { dx * dx + (p.gy - g.y) * (p.gy - g.y) };
        if d2 > r2 {
            continue;
        }
        let cand = (d2, -p.depth, row);
        let better = match best {
            None => true,
            Some(b) => cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1),
        };
        if better {
            best = Some(cand);
        }
    }
    Ok(best.map(|(d2, _, row)| Identified {
        row,
        distance_px: d2.sqrt(),
    }))
}
