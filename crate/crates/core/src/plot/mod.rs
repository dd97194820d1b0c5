//! The plot engine: capability registry, validation, view transforms,
//! navigation, rendering and row identification.

mod colormap;
mod coords;
mod decor;
mod identify;
mod nav;
mod range;
mod raster;
mod registry;
mod render;
mod view;

pub use self::colormap::{Colormap, GREYS, VIRIDIS};
pub use self::coords::{axis_values, filter_mask, prepare, PreparedCoords};
pub use self::decor::{axis_ticks, format_tick, nice_ticks};
pub use self::identify::{identify_row, Identified};
pub use self::nav::{apply_navigation, orthonormalize, NavAction};
pub use self::range::auto_range;
pub use self::raster::{density_grid, histogram_counts, DensityGrid};
pub use self::registry::{
    capabilities, validate, CapabilityReport, OptionDef, OptionError, OptionKind, PlotKind, PlotSpec, PlotTypeDef,
    SourcedExpr, Style, ValidatedPlot,
};
pub use self::render::{encode_png, render, render_prepared, Frame, RenderOptions, HISTOGRAM_HEADROOM};
pub use self::view::{
    data_to_graphics, graphics_to_data, pixel_index, AxisRange, GraphicsPoint, Matrix3, Projected, Scale, ViewState,
    Viewport, IDENTITY, MAX_VIEWPORT, MIN_VIEWPORT,
};

use crate::expr::ExprError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlotError {
    #[error("invalid plot specification: {}", .0.iter().map(|e| format!("{}: {}", e.option, e.message)).collect::<Vec<_>>().join("; "))]
    Validation(Vec<OptionError>),
    #[error("{0}")]
    Range(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}
