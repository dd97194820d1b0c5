//! Axes box, tick marks and tick labels. All drawn inside the viewport so
//! the data area is the whole frame.

use super::view::{pixel_index, AxisRange, Scale, ViewState, Viewport};

pub(crate) struct Canvas {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Canvas {
    pub fn new(viewport: Viewport) -> Self {
        Canvas {
            width: viewport.width,
            height: viewport.height,
            pixels: vec![255; 4 * viewport.width as usize * viewport.height as usize],
        }
    }

    #[inline]
    pub fn set(&mut self, x: i64, y: i64, rgb: [u8; 3]) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = 4 * (y as usize * self.width as usize + x as usize);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
        self.pixels[i + 3] = 255;
    }

    pub fn fill_rect(&mut self, x: i64, y: i64, w: i64, h: i64, rgb: [u8; 3]) {
        for yy in y.max(0)..(y + h).min(self.height as i64) {
            for xx in x.max(0)..(x + w).min(self.width as i64) {
                self.set(xx, yy, rgb);
            }
        }
    }

    /// Straight line between graphics positions, one pixel per step along
    /// the major direction.
    pub fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, rgb: [u8; 3]) {
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
        if steps > 1 << 16 {
            return;
        }
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let (gx, gy) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            if let (Some(ix), Some(iy)) = (pixel_index(gx), pixel_index(gy)) {
                self.set(ix, iy, rgb);
            }
        }
    }

    pub fn text(&mut self, x: i64, y: i64, s: &str, rgb: [u8; 3]) {
        for (k, c) in s.chars().enumerate() {
            let Some(rows) = glyph(c) else { continue };
            let ox = x + 4 * k as i64;
            for (dy, bits) in rows.iter().enumerate() {
                for dx in 0..3 {
                    if bits & (0b100 >> dx) != 0 {
                        self.set(ox + dx, y + dy as i64, rgb);
                    }
                }
            }
        }
    }
}

/// 3x5 bitmap glyphs, one row per byte, high bit on the left.
fn glyph(c: char) -> Option<[u8; 5]> {
    Some(match c {
        '0' => [0b111, 0b101, 0b101, 0b101, 0b111],
        '1' => [0b010, 0b110, 0b010, 0b010, 0b111],
        '2' => [0b111, 0b001, 0b111, 0b100, 0b111],
        '3' => [0b111, 0b001, 0b111, 0b001, 0b111],
        '4' => [0b101, 0b101, 0b111, 0b001, 0b001],
        '5' => [0b111, 0b100, 0b111, 0b001, 0b111],
        '6' => [0b111, 0b100, 0b111, 0b101, 0b111],
        '7' => [0b111, 0b001, 0b001, 0b001, 0b001],
        '8' => [0b111, 0b101, 0b111, 0b101, 0b111],
        '9' => [0b111, 0b101, 0b111, 0b001, 0b111],
        '.' => [0b000, 0b000, 0b000, 0b000, 0b010],
        '-' => [0b000, 0b000, 0b111, 0b000, 0b000],
        '+' => [0b000, 0b010, 0b111, 0b010, 0b000],
        'e' => [0b000, 0b111, 0b111, 0b100, 0b111],
        _ => return None,
    })
}

pub(crate) fn text_width(s: &str) -> i64 {
    (4 * s.chars().count() as i64 - 1).max(0)
}

/// `mantissa * 10^exp` computed so that values like 0.3 come out as the
/// closest double rather than 3 * 0.1.
fn scaled(mantissa: i64, exp: i32) -> f64 {
    if exp >= 0 {
        mantissa as f64 * 10f64.powi(exp)
    } else {
        mantissa as f64 / 10f64.powi(-exp)
    }
}

/// Tick values at a 1, 2 or 5 times 10^k step, the smallest step that
/// gives between 4 and 9 ticks inside [lo, hi].
pub fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Vec::new();
    }
    let e0 = (hi - lo).log10().floor() as i32;
    // Some spans admit no 1/2/5 step with 4 to 9 ticks (18.5 units gives
    // 10 ticks at step 2 and 3 at step 5 for some offsets); then the count
    // nearest that band wins, more ticks on a tie.
    let mut best: Option<(i64, Vec<f64>)> = None;
    for exp in e0 - 2..=e0 + 1 {
        for m in [1i64, 2, 5] {
            let step = scaled(m, exp);
            let first = (lo / step).ceil() as i64;
            let last = (hi / step).floor() as i64;
            let count = last - first + 1;
            if (4..=9).contains(&count) {
                return (first..=last).map(|k| scaled(k * m, exp)).collect();
            }
            let miss = if count < 4 { 4 - count } else { count - 9 };
            if count <= 12 && best.as_ref().is_none_or(|(b, _)| miss < *b) {
                best = Some((miss, (first..=last).map(|k| scaled(k * m, exp)).collect()));
            }
        }
    }
    best.map(|(_, t)| t).unwrap_or_default()
}

/// Tick values for one axis: whole decades on a log axis spanning at
/// least two, otherwise [`nice_ticks`].
pub fn axis_ticks(axis: &AxisRange) -> Vec<f64> {
    if axis.scale == Scale::Log {
        let (a, b) = axis.t_bounds();
        let (first, last) = (a.ceil() as i32, b.floor() as i32);
        if last - first + 1 >= 2 {
            let stride = ((last - first + 1) as usize).div_ceil(9).max(1);
            return (first..=last).step_by(stride).map(|k| scaled(1, k)).collect();
        }
    }
    nice_ticks(axis.lo, axis.hi)
}

/// Shortest round-trip decimal, switching to exponent form for very large
/// or small magnitudes.
pub fn format_tick(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

const AXIS: [u8; 3] = [0, 0, 0];
const LABEL: [u8; 3] = [64, 64, 64];
const TICK_LEN: i64 = 5;

pub(crate) fn draw_box(c: &mut Canvas) {
    let (w, h) = (c.width as i64, c.height as i64);
    c.fill_rect(0, 0, w, 1, AXIS);
    c.fill_rect(0, h - 1, w, 1, AXIS);
    c.fill_rect(0, 0, 1, h, AXIS);
    c.fill_rect(w - 1, 0, 1, h, AXIS);
}

pub(crate) fn draw_x_ticks(c: &mut Canvas, axis: &AxisRange) {
    let (w, h) = (c.width as f64, c.height as i64);
    for v in axis_ticks(axis) {
        let Some(ix) = axis.fraction(v).and_then(|f| pixel_index(w * f)) else { continue };
        c.fill_rect(ix, h - TICK_LEN, 1, TICK_LEN, AXIS);
        let label = format_tick(v);
        let x = (ix - text_width(&label) / 2).clamp(2, c.width as i64 - 2 - text_width(&label));
        c.text(x, h - TICK_LEN - 8, &label, LABEL);
    }
}

/// Y ticks from an axis, placed with `to_gy` (graphics y of a value).
pub(crate) fn draw_y_ticks(c: &mut Canvas, ticks: &[f64], to_gy: impl Fn(f64) -> Option<f64>) {
    let h = c.height as i64;
    for &v in ticks {
        let Some(iy) = to_gy(v).and_then(pixel_index) else { continue };
        c.fill_rect(0, iy, TICK_LEN, 1, AXIS);
        c.text(TICK_LEN + 2, (iy - 2).clamp(2, h - 7), &format_tick(v), LABEL);
    }
}

pub(crate) fn draw_plane_axes(c: &mut Canvas, view: &ViewState) {
    draw_box(c);
    draw_x_ticks(c, &view.axes[0]);
    let y = view.axes[1];
    let h = c.height as f64;
    draw_y_ticks(c, &axis_ticks(&y), |v| y.fraction(v).map(|f| h * (1.0 - f)));
}

pub(crate) fn draw_cube_edges(c: &mut Canvas, view: &ViewState, viewport: Viewport) {
    const EDGE: [u8; 3] = [170, 170, 170];
    let r = &view.rotation;
    let (w, h) = (viewport.width as f64, viewport.height as f64);
    let corner = |i: u32| {
        let u = [0, 1, 2].map(|k| if i & (1 << k) != 0 { 1.0 } else { -1.0 });
        let x = r[0][0] * u[0] + r[0][1] * u[1] + r[0][2] * u[2];
        let y = r[1][0] * u[0] + r[1][1] * u[1] + r[1][2] * u[2];
        (w * (x + 1.0) / 2.0, h * (1.0 - y) / 2.0)
    };
    for i in 0..8u32 {
        for k in 0..3 {
            let j = i | (1 << k);
            if j != i {
                let (a, b) = (corner(i), corner(j));
                c.line(a.0, a.1, b.0, b.1, EDGE);
            }
        }
    }
}
