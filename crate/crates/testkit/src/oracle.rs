//! Reference projection, binning, picking and ranging written straight
//! from the formulas, one row at a time.

use plotwire_core::plot::{AxisRange, Scale, ViewState};

fn t(axis: &AxisRange, v: f64) -> Option<f64> {
    if !v.is_finite() {
        return None;
    }
    match axis.scale {
        Scale::Linear => Some(v),
        Scale::Log if v > 0.0 => Some(v.log10()),
        Scale::Log => None,
    }
}

fn t_bounds(axis: &AxisRange) -> (f64, f64) {
    match axis.scale {
        Scale::Linear => (axis.lo, axis.hi),
        Scale::Log => (axis.lo.log10(), axis.hi.log10()),
    }
}

/// `size · (t(v) − t(lo)) / (t(hi) − t(lo))`.
pub fn graphics_along(axis: &AxisRange, size: f64, v: f64) -> Option<f64> {
    let (a, b) = t_bounds(axis);
    Some(size * (t(axis, v)? - a) / (b - a))
}

/// Graphics position and depth of a data point; depth is 0 for 1D and 2D.
pub fn project(view: &ViewState, w: u32, h: u32, p: &[f64]) -> Option<(f64, f64, f64)> {
    let (w, h) = (w as f64, h as f64);
    match view.axes.len() {
        1 => Some((graphics_along(&view.axes[0], w, p[0])?, h, 0.0)),
        2 => {
            let gx = graphics_along(&view.axes[0], w, p[0])?;
            let gy = h - graphics_along(&view.axes[1], h, p[1])?;
            Some((gx, gy, 0.0))
        }
        _ => {
            let mut u = [0.0; 3];
            for k in 0..3 {
                u[k] = 2.0 * graphics_along(&view.axes[k], 1.0, p[k])? - 1.0;
            }
            let r = view.rotation;
            let q: Vec<f64> = (0..3).map(|i| r[i][0] * u[0] + r[i][1] * u[1] + r[i][2] * u[2]).collect();
            Some((w * (q[0] + 1.0) / 2.0, h * (1.0 - q[1]) / 2.0, q[2]))
        }
    }
}

/// Pixel whose centre is nearest to `g`, half-way cases to the even index.
pub fn pixel(g: f64, size: u32) -> Option<u32> {
    let i = (g - 0.5).round_ties_even();
    (i >= 0.0 && i < size as f64).then_some(i as u32)
}

/// Row-by-row density binner. `points[i]` is `None` for rows that are
/// missing or filtered out.
pub fn density(view: &ViewState, w: u32, h: u32, binpx: u32, points: &[Option<[f64; 2]>]) -> Vec<u32> {
    let nx = w.div_ceil(binpx) as usize;
    let ny = h.div_ceil(binpx) as usize;
    let mut grid = vec![0u32; nx * ny];
    for p in points.iter().flatten() {
        let Some((gx, gy, _)) = project(view, w, h, p) else { continue };
        let (Some(ix), Some(iy)) = (pixel(gx, w), pixel(gy, h)) else { continue };
        grid[(iy / binpx) as usize * nx + (ix / binpx) as usize] += 1;
    }
    grid
}

/// Histogram counts over `nbins` equal bins of the x range; the upper
/// edge belongs to the last bin.
pub fn histogram(axis: &AxisRange, nbins: usize, xs: &[Option<f64>]) -> Vec<u64> {
    let mut counts = vec![0u64; nbins];
    for x in xs.iter().flatten() {
        let Some(f) = graphics_along(axis, 1.0, *x) else { continue };
        if (0.0..1.0).contains(&f) {
            counts[((f * nbins as f64) as usize).min(nbins - 1)] += 1;
        } else if f == 1.0 {
            counts[nbins - 1] += 1;
        }
    }
    counts
}

/// Exhaustive nearest plotted row to the click within `radius`. Rows
/// outside the viewport are ignored. Ties go to larger depth, then the
/// lower row index. Returns the row and its distance in pixels.
pub fn nearest(
    view: &ViewState,
    w: u32,
    h: u32,
    points: &[Option<Vec<f64>>],
    click: (f64, f64),
    radius: f64,
    horizontal_only: bool,
) -> Option<(usize, f64)> {
    let mut best: Option<(f64, f64, usize)> = None;
    for (row, p) in points.iter().enumerate() {
        let Some(p) = p else { continue };
        let Some((gx, gy, depth)) = project(view, w, h, p) else { continue };
        if pixel(gx, w).is_none() || pixel(gy, h).is_none() {
            continue;
        }
        let dx = gx - click.0;
        let dy = if horizontal_only { 0.0 } else { gy - click.1 };
        let d2 = dx * dx + dy * dy;
        if d2 > radius * radius {
            continue;
        }
        let better = match best {
            None => true,
            Some((bd, bdepth, _)) => d2 < bd || (d2 == bd && depth > bdepth),
        };
        if better {
            best = Some((d2, depth, row));
        }
    }
    best.map(|(d2, _, row)| (row, d2.sqrt()))
}

/// Padded auto-range of one axis from a full scan.
pub fn auto_range(values: &[f64], log: bool, pad: f64) -> (f64, f64) {
    let valid: Vec<f64> = values
        .iter()
        .copied()
        .filter(|v| v.is_finite() && (!log || *v > 0.0))
        .collect();
    if valid.is_empty() {
        return if log { (1.0, 10.0) } else { (0.0, 1.0) };
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in valid {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        return if log { (lo / 10.0, lo * 10.0) } else { (lo - 1.0, lo + 1.0) };
    }
    if log {
        let (a, b) = (lo.log10(), hi.log10());
        let p = (b - a) * pad;
        (10f64.powf(a - p), 10f64.powf(b + p))
    } else {
        let p = (hi - lo) * pad;
        (lo - p, hi + p)
    }
}
