use serde::{Deserialize, Serialize};

use super::PlotError;

pub type Matrix3 = [[f64; 3]; 3];

pub const IDENTITY: Matrix3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

pub const MIN_VIEWPORT: u32 = 8;
pub const MAX_VIEWPORT: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

impl Scale {
    /// Maps a data value into the space where the axis is linear.
    /// `None` for values the axis cannot show.
    #[inline]
    pub fn forward(self, v: f64) -> Option<f64> {
        match self {
            Scale::Linear if v.is_finite() => Some(v),
            Scale::Log if v.is_finite() && v > 0.0 => Some(v.log10()),
            _ => None,
        }
    }

    #[inline]
    pub fn inverse(self, t: f64) -> f64 {
        match self {
            Scale::Linear => t,
            Scale::Log => 10f64.powf(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
}

impl AxisRange {
    pub fn linear(lo: f64, hi: f64) -> Self {
        AxisRange { lo, hi, scale: Scale::Linear }
    }

    pub fn log(lo: f64, hi: f64) -> Self {
        AxisRange { lo, hi, scale: Scale::Log }
    }

    /// Bounds in transformed (linear or log10) space.
    #[inline]
    pub fn t_bounds(&self) -> (f64, f64) {
        match self.scale {
            Scale::Linear => (self.lo, self.hi),
            Scale::Log => (self.lo.log10(), self.hi.log10()),
        }
    }

    /// Fractional position of `v` along the axis: 0 at `lo`, 1 at `hi`.
    #[inline]
    pub fn fraction(&self, v: f64) -> Option<f64> {
        let t = self.scale.forward(v)?;
        let (a, b) = self.t_bounds();
        Some((t - a) / (b - a))
    }

    /// `size · (t(v) − t(lo)) / (t(hi) − t(lo))`, evaluated in that order.
    #[inline]
    pub fn scaled(&self, v: f64, size: f64) -> Option<f64> {
        let t = self.scale.forward(v)?;
        let (a, b) = self.t_bounds();
        Some(size * (t - a) / (b - a))
    }

    pub fn from_fraction(&self, f: f64) -> f64 {
        let (a, b) = self.t_bounds();
        self.scale.inverse(a + f * (b - a))
    }

    fn from_t(t_lo: f64, t_hi: f64, scale: Scale) -> Self {
        AxisRange {
            lo: scale.inverse(t_lo),
            hi: scale.inverse(t_hi),
            scale,
        }
    }

    pub(crate) fn with_t_bounds(&self, t_lo: f64, t_hi: f64) -> Self {
        Self::from_t(t_lo, t_hi, self.scale)
    }

    fn check(&self, i: usize) -> Result<(), PlotError> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(PlotError::Range(format!(
                "axis {i}: need finite lo < hi, got [{}, {}]",
                self.lo, self.hi
            )));
        }
        if self.scale == Scale::Log && self.lo <= 0.0 {
            return Err(PlotError::Range(format!("axis {i}: log axis needs lo > 0, got {}", self.lo)));
        }
        let (a, b) = self.t_bounds();
        if !(a < b) {
            return Err(PlotError::Range(format!("axis {i}: range collapsed")));
        }
        Ok(())
    }
}

/// Axis ranges plus, for 3D plots, the current rotation. Together with a
/// plot and a viewport this fixes a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewState {
    pub axes: Vec<AxisRange>,
    pub rotation: Matrix3,
}

impl ViewState {
    pub fn new(axes: Vec<AxisRange>) -> Self {
        ViewState { axes, rotation: IDENTITY }
    }

    pub fn validate(&self) -> Result<(), PlotError> {
        if self.axes.is_empty() || self.axes.len() > 3 {
            return Err(PlotError::Range(format!("view needs 1 to 3 axes, got {}", self.axes.len())));
        }
        for (i, a) in self.axes.iter().enumerate() {
            a.check(i)?;
        }
        let r = &self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[k][i] * r[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-12 {
                    return Err(PlotError::Range("rotation is not orthonormal".into()));
                }
            }
        }
        if (det(r) - 1.0).abs() > 1e-12 {
            return Err(PlotError::Range("rotation determinant is not 1".into()));
        }
        Ok(())
    }

    /// Projects a data point. `None` when a coordinate cannot be shown on
    /// its axis (log axis and non-positive value, or non-finite input).
    #[inline]
    pub fn project(&self, viewport: Viewport, p: &[f64]) -> Option<Projected> {
        let (w, h) = (viewport.width as f64, viewport.height as f64);
        match self.axes.len() {
            1 => Some(Projected {
                gx: self.axes[0].scaled(p[0], w)?,
                gy: h,
                depth: 0.0,
            }),
            2 => Some(Projected {
                gx: self.axes[0].scaled(p[0], w)?,
                gy: h - self.axes[1].scaled(p[1], h)?,
                depth: 0.0,
            }),
            _ => {
                let mut u = [0.0; 3];
                for (k, axis) in self.axes.iter().enumerate() {
                    u[k] = 2.0 * axis.fraction(p[k])? - 1.0;
                }
                let r = &self.rotation;
                let x = r[0][0] * u[0] + r[0][1] * u[1] + r[0][2] * u[2];
                let y = r[1][0] * u[0] + r[1][1] * u[1] + r[1][2] * u[2];
                let z = r[2][0] * u[0] + r[2][1] * u[1] + r[2][2] * u[2];
                Some(Projected {
                    gx: w * (x + 1.0) / 2.0,
                    gy: h * (1.0 - y) / 2.0,
                    depth: z,
                })
            }
        }
    }
}

pub(crate) fn det(r: &Matrix3) -> f64 {
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
}

/// Graphics position of a projected point. `depth` grows toward the viewer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    pub gx: f64,
    pub gy: f64,
    pub depth: f64,
}

impl Projected {
    /// Pixel holding this point, if inside the viewport.
    #[inline]
    pub fn pixel(&self, viewport: Viewport) -> Option<(u32, u32)> {
        let ix = pixel_index(self.gx)?;
        let iy = pixel_index(self.gy)?;
        (ix < viewport.width as i64 && iy < viewport.height as i64).then_some((ix as u32, iy as u32))
    }
}

/// Pixel `i` has its centre at graphics coordinate `i + 0.5`; the nearest
/// centre wins, ties going to the even index.
#[inline]
pub fn pixel_index(g: f64) -> Option<i64> {
    let i = (g - 0.5).round_ties_even();
    (i >= 0.0 && i < i64::MAX as f64).then_some(i as i64)
}

/// Output raster size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Viewport {
    pub width: u32,
    pub height: u32,
}

impl Viewport {
    pub fn new(width: u32, height: u32) -> Result<Self, PlotError> {
        for (what, v) in [("width", width), ("height", height)] {
            if !(MIN_VIEWPORT..=MAX_VIEWPORT).contains(&v) {
                return Err(PlotError::Range(format!(
                    "viewport {what} {v} outside {MIN_VIEWPORT}..={MAX_VIEWPORT}"
                )));
            }
        }
        Ok(Viewport { width, height })
    }
}

/// A point in graphics coordinates: origin top-left, y downward, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphicsPoint {
    pub x: f64,
    pub y: f64,
}

pub fn data_to_graphics(view: &ViewState, viewport: Viewport, p: &[f64]) -> Option<GraphicsPoint> {
    view.project(viewport, p).map(|q| GraphicsPoint { x: q.gx, y: q.gy })
}

/// Inverse of [`data_to_graphics`] for 1- and 2-axis views.
pub fn graphics_to_data(view: &ViewState, viewport: Viewport, g: GraphicsPoint) -> Result<Vec<f64>, PlotError> {
    match view.axes.len() {
        1 => Ok(vec![view.axes[0].from_fraction(g.x / viewport.width as f64)]),
        2 => Ok(vec![
            view.axes[0].from_fraction(g.x / viewport.width as f64),
            view.axes[1].from_fraction(1.0 - g.y / viewport.height as f64),
        ]),
        _ => Err(PlotError::Unsupported(
            "graphics to data conversion is not single-valued for 3D views".into(),
        )),
    }
}
