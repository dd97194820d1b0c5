//! Data-layer rasterization: density bins, histogram bins, scatter marks.

use rayon::prelude::*;

use super::coords::PreparedCoords;
use super::view::{Projected, ViewState, Viewport};

const CHUNK_ROWS: usize = 1 << 15;

/// Per-bin row counts of a density plot, row-major from the top-left bin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityGrid {
    pub nx: usize,
    pub ny: usize,
    pub binpx: u32,
    pub counts: Vec<u32>,
}

impl DensityGrid {
    pub fn get(&self, bx: usize, by: usize) -> u32 {
        self.counts[by * self.nx + bx]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|c| *c as u64).sum()
    }

    pub fn max(&self) -> u32 {
        self.counts.iter().copied().max().unwrap_or(0)
    }
}

fn project_row(view: &ViewState, viewport: Viewport, coords: &PreparedCoords, row: usize, buf: &mut [f64]) -> Option<Projected> {
    coords.point(row, buf);
    view.project(viewport, buf)
}

/// Counts plotted rows into `binpx`-square pixel bins. A row lands in the
/// bin holding its pixel; rows whose pixel is off the viewport are not counted.
pub fn density_grid(coords: &PreparedCoords, view: &ViewState, viewport: Viewport, binpx: u32) -> DensityGrid {
    let binpx = binpx.max(1);
    let nx = viewport.width.div_ceil(binpx) as usize;
    let ny = viewport.height.div_ceil(binpx) as usize;
    let rows = coords.row_count();
    let counts = (0..rows.div_ceil(CHUNK_ROWS))
        .into_par_iter()
        .fold(
            || vec![0u32; nx * ny],
            |mut grid, chunk| {
                let mut buf = [0.0; 3];
                let end = ((chunk + 1) * CHUNK_ROWS).min(rows);
                for row in chunk * CHUNK_ROWS..end {
                    if let Some((ix, iy)) = project_row(view, viewport, coords, row, &mut buf).and_then(|p| p.pixel(viewport)) {
                        grid[(iy / binpx) as usize * nx + (ix / binpx) as usize] += 1;
                    }
                }
                grid
            },
        )
        .reduce(
            || vec![0u32; nx * ny],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    DensityGrid { nx, ny, binpx, counts }
}

/// Counts of the x coordinate in `nbins` equal bins spanning the view's
/// x range (equal in log space on a log axis). A value exactly at the
/// upper bound goes in the last bin.
pub fn histogram_counts(coords: &PreparedCoords, view: &ViewState, nbins: usize) -> Vec<u64> {
    let axis = view.axes[0];
    let mut counts = vec![0u64; nbins];
    for &v in coords.axes[0].iter() {
        let Some(f) = axis.fraction(v) else { continue };
        if !(0.0..=1.0).contains(&f) {
            continue;
        }
        let b = ((f * nbins as f64).floor() as usize).min(nbins - 1);
        counts[b] += 1;
    }
    counts
}

/// Pixel of every row in row order (`None` for rows not drawn), computed
/// in parallel chunks.
pub fn row_pixels(coords: &PreparedCoords, view: &ViewState, viewport: Viewport) -> Vec<Option<(u32, u32)>> {
    let rows = coords.row_count();
    (0..rows.div_ceil(CHUNK_ROWS))
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let end = ((chunk + 1) * CHUNK_ROWS).min(rows);
            let mut buf = [0.0; 3];
            (chunk * CHUNK_ROWS..end)
                .map(|row| project_row(view, viewport, coords, row, &mut buf).and_then(|p| p.pixel(viewport)))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Pixels and depths for a 3D scatter, ordered far to near; rows at equal
/// depth keep row order so later rows paint over earlier ones.
pub fn depth_sorted_pixels(coords: &PreparedCoords, view: &ViewState, viewport: Viewport) -> Vec<(u32, u32)> {
    let rows = coords.row_count();
    let mut pts: Vec<(f64, u32, u32)> = (0..rows.div_ceil(CHUNK_ROWS))
        .into_par_iter()
        .flat_map_iter(|chunk| {
            let end = ((chunk + 1) * CHUNK_ROWS).min(rows);
            let mut buf = [0.0; 3];
            (chunk * CHUNK_ROWS..end)
                .filter_map(|row| {
                    let p = project_row(view, viewport, coords, row, &mut buf)?;
                    let (ix, iy) = p.pixel(viewport)?;
                    Some((p.depth, ix, iy))
                })
                .collect::<Vec<_>>()
        })
        .collect();
    pts.par_sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().map(|(_, x, y)| (x, y)).collect()
}
