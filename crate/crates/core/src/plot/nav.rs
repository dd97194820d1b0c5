//! Pan, zoom and rotate, expressed in viewport pixels.
//!
//! All three work in the normalized cube where every axis runs from -1 to
//! 1 (for plane plots the rotation is the identity). A screen direction
//! is carried back into data space with the transpose of the rotation.

use serde::{Deserialize, Serialize};

use super::view::{Matrix3, ViewState, Viewport};
use super::PlotError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum NavAction {
    /// Drag by a pixel delta; content follows the pointer.
    Pan { dx: f64, dy: f64 },
    /// Scale about the pixel (cx, cy); factor > 1 zooms in.
    Zoom { factor: f64, cx: f64, cy: f64 },
    /// Turn about the screen vertical (yaw) then horizontal (pitch) axis.
    Rotate { yaw: f64, pitch: f64 },
}

fn transpose_apply(r: &Matrix3, v: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = r[0][i] * v[0] + r[1][i] * v[1] + r[2][i] * v[2];
    }
    out
}

fn mul(a: &Matrix3, b: &Matrix3) -> Matrix3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Gram-Schmidt on the rows, third row rebuilt as a cross product so the
/// determinant stays +1.
pub fn orthonormalize(r: &Matrix3) -> Matrix3 {
    let a = normalize(r[0]);
    let d = r[1][0] * a[0] + r[1][1] * a[1] + r[1][2] * a[2];
    let b = normalize([r[1][0] - d * a[0], r[1][1] - d * a[1], r[1][2] - d * a[2]]);
    let c = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    [a, b, c]
}

fn yaw_pitch(yaw: f64, pitch: f64) -> Matrix3 {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let rp = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
    mul(&ry, &rp)
}

/// Position of a screen pixel along each data axis, as a fraction of the
/// axis (0 at lo, 1 at hi), taken on the plane through the cube centre.
fn anchor_fractions(view: &ViewState, viewport: Viewport, cx: f64, cy: f64) -> Vec<f64> {
    let sx = 2.0 * cx / viewport.width as f64 - 1.0;
    let sy = 1.0 - 2.0 * cy / viewport.height as f64;
    match view.axes.len() {
        1 => vec![cx / viewport.width as f64],
        2 => vec![cx / viewport.width as f64, 1.0 - cy / viewport.height as f64],
        _ => transpose_apply(&view.rotation, [sx, sy, 0.0])
            .iter()
            .map(|p| (p + 1.0) / 2.0)
            .collect(),
    }
}

pub fn apply_navigation(view: &ViewState, action: NavAction, viewport: Viewport) -> Result<ViewState, PlotError> {
    let mut next = view.clone();
    match action {
        NavAction::Pan { dx, dy } => {
            if !(dx.is_finite() && dy.is_finite()) {
                return Err(PlotError::Range("pan deltas must be finite".into()));
            }
            let (w, h) = (viewport.width as f64, viewport.height as f64);
            // fraction of each axis span to shift by
            let shift: Vec<f64> = match view.axes.len() {
                1 => vec![-dx / w],
                2 => vec![-dx / w, dy / h],
                _ => transpose_apply(&view.rotation, [2.0 * dx / w, -2.0 * dy / h, 0.0])
                    .iter()
                    .map(|d| -d / 2.0)
                    .collect(),
            };
            for (axis, s) in next.axes.iter_mut().zip(shift) {
                let (a, b) = axis.t_bounds();
                let d = s * (b - a);
                *axis = axis.with_t_bounds(a + d, b + d);
            }
        }
        NavAction::Zoom { factor, cx, cy } => {
            if !(factor > 0.0 && factor.is_finite()) {
                return Err(PlotError::Range(format!("zoom factor must be positive, got {factor}")));
            }
            if !(cx.is_finite() && cy.is_finite()) {
                return Err(PlotError::Range("zoom anchor must be finite".into()));
            }
            let fractions = anchor_fractions(view, viewport, cx, cy);
            for (axis, f) in next.axes.iter_mut().zip(fractions) {
                let (a, b) = axis.t_bounds();
                let anchor = a + f * (b - a);
                let span = (b - a) / factor;
                *axis = axis.with_t_bounds(anchor - f * span, anchor + (1.0 - f) * span);
            }
        }
        NavAction::Rotate { yaw, pitch } => {
            if view.axes.len() != 3 {
                return Err(PlotError::Unsupported("rotation is only available for 3D plots".into()));
            }
            if !(yaw.is_finite() && pitch.is_finite()) {
                return Err(PlotError::Range("rotation angles must be finite".into()));
            }
            next.rotation = orthonormalize(&mul(&yaw_pitch(yaw, pitch), &view.rotation));
        }
    }
    next.validate()
        .map_err(|e| PlotError::Range(format!("navigation leaves an invalid view: {e}")))?;
    Ok(next)
}
