//! The one table of plot types and their options. Both the capability
//! report and [`validate`] read from it.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use super::colormap::Colormap;
use super::view::Scale;
use super::PlotError;
use crate::expr::{self, Expr, ExprError, ValueType};
use crate::table::ColumnTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlotKind {
    #[serde(rename = "plane.scatter")]
    PlaneScatter,
    #[serde(rename = "plane.density")]
    PlaneDensity,
    #[serde(rename = "plane.histogram")]
    PlaneHistogram,
    #[serde(rename = "cube.scatter")]
    CubeScatter,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::PlaneScatter,
        PlotKind::PlaneDensity,
        PlotKind::PlaneHistogram,
        PlotKind::CubeScatter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::PlaneScatter => "plane.scatter",
            PlotKind::PlaneDensity => "plane.density",
            PlotKind::PlaneHistogram => "plane.histogram",
            PlotKind::CubeScatter => "cube.scatter",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        PlotKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Coordinate option names, one per view axis.
    pub fn axes(self) -> &'static [&'static str] {
        match self {
            PlotKind::PlaneScatter | PlotKind::PlaneDensity => &["x", "y"],
            PlotKind::PlaneHistogram => &["x"],
            PlotKind::CubeScatter => &["x", "y", "z"],
        }
    }

    pub fn is_3d(self) -> bool {
        self == PlotKind::CubeScatter
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptionKind {
    /// Numeric expression over table columns.
    Expr,
    /// Boolean expression over table columns.
    Filter,
    Bool,
    Int { min: i64, max: i64 },
    Float { min: f64, max: f64 },
    Choice { choices: Vec<&'static str> },
    /// `#rrggbb`
    Color,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptionDef {
    pub name: &'static str,
    #[serde(flatten)]
    pub kind: OptionKind,
    pub required: bool,
    pub default: Option<&'static str>,
    pub description: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct PlotTypeDef {
    pub name: &'static str,
    pub description: &'static str,
    pub options: Vec<OptionDef>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CapabilityReport {
    #[serde(rename = "plotTypes")]
    pub plot_types: Vec<PlotTypeDef>,
}

impl CapabilityReport {
    pub fn plot_type(&self, name: &str) -> Option<&PlotTypeDef> {
        self.plot_types.iter().find(|t| t.name == name)
    }
}

fn required(name: &'static str, kind: OptionKind, description: &'static str) -> OptionDef {
    OptionDef {
        name,
        kind,
        required: true,
        default: None,
        description,
    }
}

fn optional(name: &'static str, kind: OptionKind, default: &'static str, description: &'static str) -> OptionDef {
    OptionDef {
        name,
        kind,
        required: false,
        default: Some(default),
        description,
    }
}

fn filter() -> OptionDef {
    optional("filter", OptionKind::Filter, "true", "row selection expression")
}

fn log_flag(axis: &'static str) -> OptionDef {
    let description = match axis {
        "xlog" => "logarithmic x axis",
        "ylog" => "logarithmic y axis",
        _ => "logarithmic z axis",
    };
    optional(axis, OptionKind::Bool, "false", description)
}

fn pad() -> OptionDef {
    optional(
        "pad",
        OptionKind::Float { min: 0.0, max: 0.5 },
        "0.02",
        "auto-range padding as a fraction of the data span",
    )
}

fn size() -> OptionDef {
    optional("size", OptionKind::Int { min: 1, max: 5 }, "1", "marker size in pixels")
}

fn color(default: &'static str) -> OptionDef {
    optional("color", OptionKind::Color, default, "marker or bar colour")
}

static REPORT: LazyLock<CapabilityReport> = LazyLock::new(|| {
    let coord = |name, what| required(name, OptionKind::Expr, what);
    CapabilityReport {
        plot_types: PlotKind::ALL
            .into_iter()
            .map(|kind| match kind {
                PlotKind::PlaneScatter => PlotTypeDef {
                    name: kind.name(),
                    description: "one marker per row on a 2D plane",
                    options: vec![
                        coord("x", "horizontal coordinate"),
                        coord("y", "vertical coordinate"),
                        filter(),
                        log_flag("xlog"),
                        log_flag("ylog"),
                        pad(),
                        size(),
                        color("#1f4e9c"),
                    ],
                },
                PlotKind::PlaneDensity => PlotTypeDef {
                    name: kind.name(),
                    description: "per-bin row counts on a 2D plane through a colour map",
                    options: vec![
                        coord("x", "horizontal coordinate"),
                        coord("y", "vertical coordinate"),
                        filter(),
                        optional("binpx", OptionKind::Int { min: 1, max: 64 }, "1", "bin size in pixels"),
                        optional(
                            "colormap",
                            OptionKind::Choice {
                                choices: Colormap::ALL.iter().map(|c| c.name()).collect(),
                            },
                            "viridis",
                            "colour map for bin counts",
                        ),
                        optional("logcount", OptionKind::Bool, "true", "scale counts as log10(1+n)"),
                        log_flag("xlog"),
                        log_flag("ylog"),
                        pad(),
                    ],
                },
                PlotKind::PlaneHistogram => PlotTypeDef {
                    name: kind.name(),
                    description: "counts of x values in equal-width bins",
                    options: vec![
                        coord("x", "binned coordinate"),
                        filter(),
                        optional("nbins", OptionKind::Int { min: 1, max: 4096 }, "50", "number of bins"),
                        log_flag("xlog"),
                        pad(),
                        color("#4a74b4"),
                    ],
                },
                PlotKind::CubeScatter => PlotTypeDef {
                    name: kind.name(),
                    description: "one marker per row in a rotatable 3D cube",
                    options: vec![
                        coord("x", "first coordinate"),
                        coord("y", "second coordinate"),
                        coord("z", "third coordinate"),
                        filter(),
                        log_flag("xlog"),
                        log_flag("ylog"),
                        log_flag("zlog"),
                        pad(),
                        size(),
                        color("#1f4e9c"),
                    ],
                },
            })
            .collect(),
    }
});

/// Every plot type and option this engine accepts.
pub fn capabilities() -> &'static CapabilityReport {
    &REPORT
}

/// A plot type plus its `name=value` options.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlotSpec {
    #[serde(rename = "type")]
    pub plot_type: String,
    #[serde(default)]
    pub options: BTreeMap<String, String>,
}

impl PlotSpec {
    pub fn new(plot_type: impl Into<String>) -> Self {
        PlotSpec {
            plot_type: plot_type.into(),
            options: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.options.insert(name.into(), value.into());
        self
    }

    /// Parses `name=value` words, as given on a command line.
    pub fn from_pairs<'a>(plot_type: &str, pairs: impl IntoIterator<Item = &'a str>) -> Result<Self, PlotError> {
        let mut spec = PlotSpec::new(plot_type);
        let mut errors = Vec::new();
        for pair in pairs {
            match pair.split_once('=') {
                Some((k, v)) if !k.trim().is_empty() => {
                    spec.options.insert(k.trim().to_string(), v.to_string());
                }
                _ => errors.push(OptionError::new(pair, "expected name=value")),
            }
        }
        if errors.is_empty() {
            Ok(spec)
        } else {
            Err(PlotError::Validation(errors))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptionError {
    pub option: String,
    pub message: String,
}

impl OptionError {
    pub fn new(option: impl Into<String>, message: impl Into<String>) -> Self {
        OptionError {
            option: option.into(),
            message: message.into(),
        }
    }
}

/// An expression option kept with its source text, which keys caches.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcedExpr {
    pub source: String,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    pub size: u32,
    pub color: [u8; 3],
    pub binpx: u32,
    pub colormap: Colormap,
    pub logcount: bool,
    pub nbins: usize,
    pub pad: f64,
}

/// A spec checked against a table schema and ready to render.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedPlot {
    pub kind: PlotKind,
    /// The submitted spec, unchanged.
    pub spec: PlotSpec,
    /// One coordinate expression per axis.
    pub coords: Vec<SourcedExpr>,
    pub scales: Vec<Scale>,
    /// `None` when every row is selected.
    pub filter: Option<SourcedExpr>,
    pub style: Style,
}

impl ValidatedPlot {
    pub fn filter_source(&self) -> &str {
        self.filter.as_ref().map_or("true", |f| f.source.as_str())
    }
}

fn expr_error_message(e: &ExprError) -> String {
    e.to_string()
}

fn parse_color(v: &str) -> Option<[u8; 3]> {
    let hex = v.trim().strip_prefix('#')?;
    if hex.len() != 6 || !hex.is_ascii() {
        return None;
    }
    let c = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).ok();
    Some([c(0)?, c(2)?, c(4)?])
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.trim() {
        "true" => Some(true),
        "false" => Some(false),
        _ => None,
    }
}

enum Parsed {
    Expr(SourcedExpr),
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
    Color([u8; 3]),
}

fn check_option(def: &OptionDef, value: &str, table: &ColumnTable) -> Result<Parsed, String> {
    match &def.kind {
        OptionKind::Expr | OptionKind::Filter => {
            let want = if def.kind == OptionKind::Expr {
                ValueType::Numeric
            } else {
                ValueType::Bool
            };
            let e = expr::parse(value).map_err(|e| expr_error_message(&e))?;
            let got = e.value_type(table).map_err(|e| expr_error_message(&e))?;
            if got != want {
                return Err(format!("expected a {want} expression, found {got}"));
            }
            Ok(Parsed::Expr(SourcedExpr {
                source: value.to_string(),
                expr: e,
            }))
        }
        OptionKind::Bool => parse_bool(value)
            .map(Parsed::Bool)
            .ok_or_else(|| format!("expected true or false, got '{value}'")),
        OptionKind::Int { min, max } => match value.trim().parse::<i64>() {
            Ok(v) if (*min..=*max).contains(&v) => Ok(Parsed::Int(v)),
            Ok(v) => Err(format!("{v} outside {min}..={max}")),
            Err(_) => Err(format!("expected an integer, got '{value}'")),
        },
        OptionKind::Float { min, max } => match value.trim().parse::<f64>() {
            Ok(v) if v >= *min && v <= *max => Ok(Parsed::Float(v)),
            Ok(v) => Err(format!("{v} outside [{min}, {max}]")),
            Err(_) => Err(format!("expected a number, got '{value}'")),
        },
        OptionKind::Choice { choices } => {
            let v = value.trim();
            if choices.contains(&v) {
                Ok(Parsed::Text(v.to_string()))
            } else {
                Err(format!("expected one of {}, got '{value}'", choices.join(", ")))
            }
        }
        OptionKind::Color => parse_color(value)
            .map(Parsed::Color)
            .ok_or_else(|| format!("expected a colour as #rrggbb, got '{value}'")),
    }
}

/// Checks every option of `spec` against the registry and the table
/// schema, reporting all problems at once.
pub fn validate(spec: &PlotSpec, table: &ColumnTable) -> Result<ValidatedPlot, PlotError> {
    let kind = PlotKind::from_name(&spec.plot_type).ok_or_else(|| {
        let known: Vec<_> = PlotKind::ALL.iter().map(|k| k.name()).collect();
        PlotError::Validation(vec![OptionError::new(
            "type",
            format!("unknown plot type '{}', expected one of {}", spec.plot_type, known.join(", ")),
        )])
    })?;
    let def = capabilities().plot_type(kind.name()).expect("registry covers every kind");

    let mut errors = Vec::new();
    for name in spec.options.keys() {
        if !def.options.iter().any(|o| o.name == name) {
            errors.push(OptionError::new(name, format!("unknown option for {}", kind.name())));
        }
    }

    let mut parsed: BTreeMap<&str, Parsed> = BTreeMap::new();
    for opt in &def.options {
        let value = match (spec.options.get(opt.name), opt.default) {
            (Some(v), _) => v.as_str(),
            (None, Some(d)) => d,
            (None, None) => {
                errors.push(OptionError::new(opt.name, "required option missing"));
                continue;
            }
        };
        match check_option(opt, value, table) {
            Ok(p) => {
                parsed.insert(opt.name, p);
            }
            Err(message) => errors.push(OptionError::new(opt.name, message)),
        }
    }
    if !errors.is_empty() {
        return Err(PlotError::Validation(errors));
    }

    let mut take_expr = |name: &str| match parsed.remove(name) {
        Some(Parsed::Expr(e)) => Some(e),
        _ => None,
    };
    let coords: Vec<SourcedExpr> = kind.axes().iter().map(|a| take_expr(a).unwrap()).collect();
    let filter = take_expr("filter").filter(|f| f.expr != Expr::Bool(true));
    let get_bool = |name: &str| matches!(parsed.get(name), Some(Parsed::Bool(true)));
    let get_int = |name: &str, d: i64| match parsed.get(name) {
        Some(Parsed::Int(v)) => *v,
        _ => d,
    };
    let scales = ["xlog", "ylog", "zlog"][..kind.axes().len()]
        .iter()
        .map(|n| if get_bool(n) { Scale::Log } else { Scale::Linear })
        .collect();
    let style = Style {
        size: get_int("size", 1) as u32,
        color: match parsed.get("color") {
            Some(Parsed::Color(c)) => *c,
            _ => [0, 0, 0],
        },
        binpx: get_int("binpx", 1) as u32,
        colormap: match parsed.get("colormap") {
            Some(Parsed::Text(name)) => Colormap::from_name(name).unwrap_or_default(),
            _ => Colormap::default(),
        },
        logcount: get_bool("logcount"),
        nbins: get_int("nbins", 50) as usize,
        pad: match parsed.get("pad") {
            Some(Parsed::Float(p)) => *p,
            _ => 0.02,
        },
    };
    Ok(ValidatedPlot {
        kind,
        spec: spec.clone(),
        coords,
        scales,
        filter,
        style,
    })
}
