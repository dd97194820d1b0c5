use std::io::Write;

use super::coords::{prepare, PreparedCoords};
use super::decor::{self, Canvas};
use super::raster::{density_grid, depth_sorted_pixels, histogram_counts, row_pixels};
use super::registry::{PlotKind, ValidatedPlot};
use super::view::{ViewState, Viewport};
use super::PlotError;
use crate::table::ColumnTable;

/// Fraction of the frame height reached by the tallest histogram bar.
pub const HISTOGRAM_HEADROOM: f64 = 0.95;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct RenderOptions {
    /// Data layer only: no axes, ticks or labels.
    pub bare: bool,
}

/// An RGBA8 raster with the view it shows.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
    pub seq: u64,
    pub view: ViewState,
}

impl Frame {
    pub fn rgba(&self, x: u32, y: u32) -> [u8; 4] {
        let i = 4 * (y as usize * self.width as usize + x as usize);
        self.pixels[i..i + 4].try_into().unwrap()
    }
}

/// Evaluates coordinates and renders in one go.
pub fn render(
    plan: &ValidatedPlot,
    table: &ColumnTable,
    view: &ViewState,
    viewport: Viewport,
    opts: RenderOptions,
) -> Result<Frame, PlotError> {
    let coords = prepare(plan, table)?;
    render_prepared(plan, &coords, view, viewport, opts)
}

pub fn render_prepared(
    plan: &ValidatedPlot,
    coords: &PreparedCoords,
    view: &ViewState,
    viewport: Viewport,
    opts: RenderOptions,
) -> Result<Frame, PlotError> {
    view.validate()?;
    if view.axes.len() != plan.kind.axes().len() || coords.axes.len() != view.axes.len() {
        return Err(PlotError::Range(format!(
            "{} needs a {}-axis view",
            plan.kind.name(),
            plan.kind.axes().len()
        )));
    }
    let mut canvas = Canvas::new(viewport);
    match plan.kind {
        PlotKind::PlaneScatter => {
            let px = row_pixels(coords, view, viewport);
            paint_markers(&mut canvas, px.into_iter().flatten(), plan.style.size, plan.style.color);
            if !opts.bare {
                decor::draw_plane_axes(&mut canvas, view);
            }
        }
        PlotKind::CubeScatter => {
            if !opts.bare {
                decor::draw_cube_edges(&mut canvas, view, viewport);
            }
            let px = depth_sorted_pixels(coords, view, viewport);
            paint_markers(&mut canvas, px.into_iter(), plan.style.size, plan.style.color);
            if !opts.bare {
                decor::draw_box(&mut canvas);
            }
        }
        PlotKind::PlaneDensity => {
            let grid = density_grid(coords, view, viewport, plan.style.binpx);
            let max = grid.max();
            let scale = |n: u32| {
                if plan.style.logcount {
                    (1.0 + n as f64).log10() / (1.0 + max as f64).log10()
                } else {
                    n as f64 / max as f64
                }
            };
            let b = grid.binpx as i64;
            for by in 0..grid.ny {
                for bx in 0..grid.nx {
                    let n = grid.get(bx, by);
                    if n > 0 {
                        let rgb = plan.style.colormap.color(scale(n));
                        canvas.fill_rect(bx as i64 * b, by as i64 * b, b, b, rgb);
                    }
                }
            }
            if !opts.bare {
                decor::draw_plane_axes(&mut canvas, view);
            }
        }
        PlotKind::PlaneHistogram => {
            let counts = histogram_counts(coords, view, plan.style.nbins);
            let max = counts.iter().copied().max().unwrap_or(0);
            let (w, h) = (viewport.width as f64, viewport.height as f64);
            let nb = counts.len() as f64;
            for (b, &n) in counts.iter().enumerate().filter(|(_, n)| **n > 0) {
                let (x0, x1) = (w * b as f64 / nb, w * (b + 1) as f64 / nb);
                let top = h - n as f64 / max as f64 * HISTOGRAM_HEADROOM * h;
                for ix in 0..viewport.width as i64 {
                    let cx = ix as f64 + 0.5;
                    if cx < x0 || cx >= x1 {
                        continue;
                    }
                    for iy in 0..viewport.height as i64 {
                        if iy as f64 + 0.5 >= top {
                            canvas.set(ix, iy, plan.style.color);
                        }
                    }
                }
            }
            if !opts.bare {
                decor::draw_box(&mut canvas);
                decor::draw_x_ticks(&mut canvas, &view.axes[0]);
                if max > 0 {
                    let full = max as f64 / HISTOGRAM_HEADROOM;
                    let ticks: Vec<f64> = decor::nice_ticks(0.0, full)
                        .into_iter()
                        .filter(|v| v.fract() == 0.0)
                        .collect();
                    decor::draw_y_ticks(&mut canvas, &ticks, |v| Some(h * (1.0 - v / full)));
                }
            }
        }
    }
    Ok(Frame {
        width: viewport.width,
        height: viewport.height,
        pixels: canvas.pixels,
        seq: 0,
        view: view.clone(),
    })
}

fn paint_markers(canvas: &mut Canvas, pixels: impl Iterator<Item = (u32, u32)>, size: u32, rgb: [u8; 3]) {
    let s = size.max(1) as i64;
    let off = (s - 1) / 2;
    for (x, y) in pixels {
        if s == 1 {
            canvas.set(x as i64, y as i64, rgb);
        } else {
            canvas.fill_rect(x as i64 - off, y as i64 - off, s, s, rgb);
        }
    }
}

/// PNG encoding of a frame: RGBA8, non-interlaced, fixed encoder settings.
pub fn encode_png(frame: &Frame) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, frame.width, frame.height);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_compression(png::Compression::Balanced);
        enc.set_filter(png::Filter::Adaptive);
        let mut w = enc.write_header().expect("writing PNG to memory");
        w.write_image_data(&frame.pixels).expect("writing PNG to memory");
        w.finish().expect("writing PNG to memory");
    }
    out.flush().ok();
    out
}
