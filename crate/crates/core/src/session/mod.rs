//! Server-held plot sessions and the coordinate and frame caches behind them.
//!
//! A session binds a table, a validated plot and a view. Clients send
//! navigation deltas and fetch frames; the server keeps the state.

mod cache;
mod metrics;

use std::collections::HashMap;
use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use self::cache::BoundedCache;
pub use self::metrics::Metrics;

use crate::plot::{
    apply_navigation, auto_range, axis_values, encode_png, filter_mask, identify_row, render_prepared, validate,
    GraphicsPoint, NavAction, PlotError, PlotSpec, PreparedCoords, RenderOptions, ValidatedPlot, ViewState, Viewport,
};
use crate::table::{CellValue, RegisteredTable, TableRegistry};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("unknown table '{0}'")]
    UnknownTable(String),
    #[error("unknown or expired session '{0}'")]
    UnknownSession(String),
    #[error(transparent)]
    Plot(#[from] PlotError),
}

pub trait Clock: Send + Sync {
    fn now(&self) -> Instant;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Instant {
        Instant::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock {
    base: Instant,
    offset: Mutex<Duration>,
}

impl Default for ManualClock {
    fn default() -> Self {
        ManualClock {
            base: Instant::now(),
            offset: Mutex::default(),
        }
    }
}

impl ManualClock {
    pub fn advance(&self, d: Duration) {
        *self.offset.lock().unwrap() += d;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Instant {
        self.base + *self.offset.lock().unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    pub ttl: Duration,
    /// Coordinate cache budget in bytes; 0 disables it.
    pub coord_cache_bytes: usize,
    /// Frame cache capacity in entries; 0 disables it.
    pub frame_cache_entries: usize,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            ttl: Duration::from_secs(30 * 60),
            coord_cache_bytes: 512 << 20,
            frame_cache_entries: 256,
        }
    }
}

impl SessionConfig {
    pub fn uncached() -> Self {
        SessionConfig {
            coord_cache_bytes: 0,
            frame_cache_entries: 0,
            ..Self::default()
        }
    }
}

/// Public view of a session after creation or navigation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionInfo {
    pub session_id: String,
    pub table: String,
    pub seq: u64,
    pub view: ViewState,
}

#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub png: Arc<Vec<u8>>,
    pub seq: u64,
    pub view: ViewState,
    pub cache_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedRow {
    pub index: usize,
    pub distance_px: f64,
    /// Every column of the row, in table order.
    pub cells: Vec<(String, CellValue)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct CoordKey {
    table: String,
    generation: u64,
    expr: String,
    filter: String,
}

type FrameKey = [u8; 32];

struct Session {
    table: RegisteredTable,
    table_name: String,
    plan: Arc<ValidatedPlot>,
    view: ViewState,
    seq: u64,
    last_touched: Instant,
}

impl Session {
    fn info(&self, id: &str) -> SessionInfo {
        SessionInfo {
            session_id: id.to_string(),
            table: self.table_name.clone(),
            seq: self.seq,
            view: self.view.clone(),
        }
    }
}

pub struct SessionManager {
    registry: Arc<TableRegistry>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    coords: BoundedCache<CoordKey, Arc<Vec<f64>>>,
    frames: BoundedCache<FrameKey, Arc<Vec<u8>>>,
    metrics: Metrics,
    config: SessionConfig,
    clock: Arc<dyn Clock>,
}

fn coord_weight(v: &Arc<Vec<f64>>) -> usize {
    v.len() * std::mem::size_of::<f64>()
}

fn one(_: &Arc<Vec<u8>>) -> usize {
    1
}

fn new_session_id() -> String {
    // ThreadRng is a CSPRNG reseeded from the OS.
    format!("{:032x}", rand::random::<u128>())
}

impl SessionManager {
    pub fn new(registry: Arc<TableRegistry>, config: SessionConfig) -> Self {
        Self::with_clock(registry, config, Arc::new(SystemClock))
    }

    pub fn with_clock(registry: Arc<TableRegistry>, config: SessionConfig, clock: Arc<dyn Clock>) -> Self {
        SessionManager {
            registry,
            sessions: RwLock::default(),
            coords: BoundedCache::new(config.coord_cache_bytes, coord_weight),
            frames: BoundedCache::new(config.frame_cache_entries, one),
            metrics: Metrics::default(),
            config,
            clock,
        }
    }

    pub fn registry(&self) -> &Arc<TableRegistry> {
        &self.registry
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn now(&self) -> Instant {
        self.clock.now()
    }

    pub fn create_session(&self, table_name: &str, spec: &PlotSpec) -> Result<SessionInfo, SessionError> {
        let table = self
            .registry
            .get(table_name)
            .ok_or_else(|| SessionError::UnknownTable(table_name.to_string()))?;
        let plan = validate(spec, &table.table)?;
        let coords = self.coords_for(&table, table_name, &plan)?;
        let session = Session {
            view: auto_range(&plan, &coords),
            table,
            table_name: table_name.to_string(),
            plan: Arc::new(plan),
            seq: 0,
            last_touched: self.clock.now(),
        };
        let mut sessions = self.sessions.write().unwrap();
        let id = loop {
            let id = new_session_id();
            if !sessions.contains_key(&id) {
                break id;
            }
        };
        let info = session.info(&id);
        sessions.insert(id, Arc::new(Mutex::new(session)));
        Ok(info)
    }

    fn lookup(&self, id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        let s = self
            .sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))?;
        let now = self.clock.now();
        let expired = now.saturating_duration_since(s.lock().unwrap().last_touched) > self.config.ttl;
        if expired {
            self.sessions.write().unwrap().remove(id);
            return Err(SessionError::UnknownSession(id.to_string()));
        }
        Ok(s)
    }

    pub fn session(&self, id: &str) -> Result<SessionInfo, SessionError> {
        let s = self.lookup(id)?;
        let s = s.lock().unwrap();
        Ok(s.info(id))
    }

    pub fn navigate(&self, id: &str, action: &NavAction, viewport: Viewport) -> Result<SessionInfo, SessionError> {
        let s = self.lookup(id)?;
        let mut s = s.lock().unwrap();
        s.view = apply_navigation(&s.view, *action, viewport)?;
        s.seq += 1;
        s.last_touched = self.clock.now();
        Ok(s.info(id))
    }

    pub fn frame(&self, id: &str, viewport: Viewport, opts: RenderOptions) -> Result<FrameOutput, SessionError> {
        let (table, name, plan, view, seq) = {
            let s = self.lookup(id)?;
            let mut s = s.lock().unwrap();
            s.last_touched = self.clock.now();
            (s.table.clone(), s.table_name.clone(), s.plan.clone(), s.view.clone(), s.seq)
        };
        let key = frame_key(&plan, &name, table.generation, &view, viewport, opts);
        let (png, cache_hit) = self.frames.get_or_try_insert(&key, || -> Result<_, SessionError> {
            let start = Instant::now();
            let coords = self.coords_for(&table, &name, &plan)?;
            let mut frame = render_prepared(&plan, &coords, &view, viewport, opts)?;
            frame.seq = seq;
            let png = encode_png(&frame);
            self.metrics.record_render(start.elapsed());
            Ok(Arc::new(png))
        })?;
        Ok(FrameOutput {
            png,
            seq,
            view,
            cache_hit,
        })
    }

    pub fn identify(
        &self,
        id: &str,
        viewport: Viewport,
        g: GraphicsPoint,
        radius_px: f64,
    ) -> Result<Option<IdentifiedRow>, SessionError> {
        let (table, name, plan, view) = {
            let s = self.lookup(id)?;
            let mut s = s.lock().unwrap();
            s.last_touched = self.clock.now();
            (s.table.clone(), s.table_name.clone(), s.plan.clone(), s.view.clone())
        };
        let coords = self.coords_for(&table, &name, &plan)?;
        let Some(hit) = identify_row(&plan, &coords, &view, viewport, g, radius_px)? else {
            return Ok(None);
        };
        let cells = table
            .table
            .columns()
            .iter()
            .map(|c| (c.name().to_string(), c.cell(hit.row)))
            .collect();
        Ok(Some(IdentifiedRow {
            index: hit.row,
            distance_px: hit.distance_px,
            cells,
        }))
    }

    pub fn delete(&self, id: &str) -> Result<(), SessionError> {
        self.lookup(id)?;
        self.sessions
            .write()
            .unwrap()
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| SessionError::UnknownSession(id.to_string()))
    }

    /// Drops sessions idle for longer than the TTL at `now`.
    pub fn expire_sessions(&self, now: Instant) -> usize {
        let mut sessions = self.sessions.write().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| now.saturating_duration_since(s.lock().unwrap().last_touched) <= self.config.ttl);
        before - sessions.len()
    }

    pub fn active_sessions(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn coord_cache_bytes(&self) -> usize {
        self.coords.weight()
    }

    pub fn coord_cache_hits(&self) -> u64 {
        self.coords.hits()
    }

    pub fn coord_cache_misses(&self) -> u64 {
        self.coords.misses()
    }

    pub fn frame_cache_hits(&self) -> u64 {
        self.frames.hits()
    }

    pub fn frame_cache_misses(&self) -> u64 {
        self.frames.misses()
    }

    /// `name value` lines for scraping.
    pub fn metrics_text(&self) -> String {
        let lines: [(&str, u64); 10] = [
            ("frame_cache_hits", self.frames.hits()),
            ("frame_cache_misses", self.frames.misses()),
            ("frame_cache_entries", self.frames.len() as u64),
            ("coord_cache_hits", self.coords.hits()),
            ("coord_cache_misses", self.coords.misses()),
            ("coord_cache_bytes", self.coords.weight() as u64),
            ("sessions_active", self.active_sessions() as u64),
            ("frames_rendered", self.metrics.renders.load(Ordering::Relaxed)),
            ("render_ms_total", self.metrics.render_us.load(Ordering::Relaxed) / 1000),
            ("render_ms_last", self.metrics.last_render_us.load(Ordering::Relaxed) / 1000),
        ];
        lines.iter().map(|(k, v)| format!("{k} {v}\n")).collect()
    }

    fn coords_for(
        &self,
        table: &RegisteredTable,
        name: &str,
        plan: &ValidatedPlot,
    ) -> Result<PreparedCoords, PlotError> {
        let mut mask: Option<Option<Vec<bool>>> = None;
        let mut axes = Vec::with_capacity(plan.coords.len());
        for c in &plan.coords {
            let key = CoordKey {
                table: name.to_string(),
                generation: table.generation,
                expr: c.source.clone(),
                filter: plan.filter_source().to_string(),
            };
            let (v, _) = self.coords.get_or_try_insert(&key, || -> Result<_, PlotError> {
                if mask.is_none() {
                    mask = Some(filter_mask(plan, &table.table)?);
                }
                let m = mask.as_ref().and_then(|m| m.as_deref());
                Ok(Arc::new(axis_values(c, m, &table.table)?))
            })?;
            axes.push(v);
        }
        Ok(PreparedCoords { axes })
    }
}

#[derive(Serialize)]
struct FrameKeyParts<'a> {
    spec: &'a PlotSpec,
    table: &'a str,
    generation: u64,
    view: &'a ViewState,
    viewport: Viewport,
    bare: bool,
}

fn frame_key(
    plan: &ValidatedPlot,
    table: &str,
    generation: u64,
    view: &ViewState,
    viewport: Viewport,
    opts: RenderOptions,
) -> FrameKey {
    let parts = FrameKeyParts {
        spec: &plan.spec,
        table,
        generation,
        view,
        viewport,
        bare: opts.bare,
    };
    let bytes = serde_json::to_vec(&parts).expect("frame key serializes");
    Sha256::digest(&bytes).into()
}
