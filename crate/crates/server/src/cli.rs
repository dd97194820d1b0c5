//! Command-line front end: `serve`, `plot` and `convert`.

use std::future::Future;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use tracing::{info, warn};

use plotwire_core::plot::{PlotError, PlotSpec, RenderOptions, Viewport};
use plotwire_core::session::{SessionConfig, SessionError, SessionManager};
use plotwire_core::table::{load_columnar, load_csv, save_columnar, ColumnTable, TableError, TableRegistry};

use crate::RouterConfig;

/// How long in-flight requests get to finish after a shutdown signal.
pub const SHUTDOWN_GRACE: Duration = Duration::from_secs(4);

#[derive(Debug, Parser)]
#[command(name = "plotwire", version, about = "Server-side plot rendering for large tables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve every table in a data directory over HTTP.
    Serve(ServeArgs),
    /// Render one plot to a PNG file.
    Plot(PlotArgs),
    /// Convert a CSV file to the PWCT columnar format.
    Convert(ConvertArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, env = "PLOTWIRE_DATA")]
    pub data: PathBuf,
    #[arg(long, env = "PLOTWIRE_HOST", default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    pub host: IpAddr,
    /// 0 picks a free port.
    #[arg(long, env = "PLOTWIRE_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Coordinate cache budget in MiB.
    #[arg(long, env = "PLOTWIRE_CACHE_MB", default_value_t = 512)]
    pub cache_mb: usize,
    /// Frame cache capacity in frames.
    #[arg(long, env = "PLOTWIRE_FRAME_CACHE", default_value_t = 256)]
    pub frame_cache: usize,
    /// Idle session lifetime in minutes.
    #[arg(long, env = "PLOTWIRE_TTL_MIN", default_value_t = 30)]
    pub ttl_min: u64,
    /// Directory of web client assets served at `/`.
    #[arg(long = "static", env = "PLOTWIRE_STATIC")]
    pub static_dir: Option<PathBuf>,
    /// Allowed CORS origins, comma separated; any origin when omitted.
    #[arg(long, env = "PLOTWIRE_CORS", value_delimiter = ',')]
    pub cors: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct PlotArgs {
    /// CSV or PWCT file.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long = "type")]
    pub plot_type: String,
    /// Plot option as name=value; repeatable.
    #[arg(long = "opt")]
    pub opts: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 640)]
    pub width: u32,
    #[arg(long, default_value_t = 480)]
    pub height: u32,
    /// Omit axes and labels.
    #[arg(long)]
    pub bare: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Bind(String),
    #[error("{}", .0.join("\n"))]
    Validation(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Bind(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<PlotError> for CliError {
    fn from(e: PlotError) -> Self {
        match e {
            PlotError::Validation(errs) => CliError::Validation(
                errs.iter()
                    .map(|e| format!("invalid option '{}': {}", e.option, e.message))
                    .collect(),
            ),
            other => CliError::Validation(vec![other.to_string()]),
        }
    }
}

impl From<SessionError> for CliError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Plot(p) => p.into(),
            other => CliError::Io(other.to_string()),
        }
    }
}

fn load_table(path: &Path) -> Result<ColumnTable, TableError> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("pwct") => load_columnar(path),
        _ => load_csv(path),
    }
}

/// Renders through the same session pipeline the server uses, so the bytes
/// match a `/frame` response for the same table, spec and viewport.
pub fn render_plot_png(
    table: ColumnTable,
    spec: &PlotSpec,
    viewport: Viewport,
    opts: RenderOptions,
) -> Result<Vec<u8>, SessionError> {
    let name = table.name().to_string();
    let registry = TableRegistry::in_memory();
    registry.insert(table);
    let sessions = SessionManager::new(Arc::new(registry), SessionConfig::uncached());
    let id = sessions.create_session(&name, spec)?.session_id;
    let frame = sessions.frame(&id, viewport, opts)?;
    Ok(frame.png.as_ref().clone())
}

pub fn plot(args: &PlotArgs) -> Result<(), CliError> {
    let spec = PlotSpec::from_pairs(&args.plot_type, args.opts.iter().map(String::as_str))?;
    let viewport = Viewport::new(args.width, args.height)?;
    let table = load_table(&args.table)?;
    let png = render_plot_png(table, &spec, viewport, RenderOptions { bare: args.bare })?;
    std::fs::write(&args.out, png).map_err(|e| CliError::Io(format!("writing {}: {e}", args.out.display())))
}

pub fn convert(args: &ConvertArgs) -> Result<(), CliError> {
    let table = load_csv(&args.input)?;
    save_columnar(&table, &args.out)?;
    info!(rows = table.row_count(), columns = table.columns().len(), "wrote {}", args.out.display());
    Ok(())
}

impl ServeArgs {
    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            ttl: Duration::from_secs(self.ttl_min.saturating_mul(60)),
            coord_cache_bytes: self.cache_mb.saturating_mul(1 << 20),
            frame_cache_entries: self.frame_cache,
        }
    }
}

/// Runs the server until `shutdown` resolves. `on_bound` receives the
/// listening address once the socket is open.
pub async fn serve(
    args: &ServeArgs,
    shutdown: impl Future<Output = ()> + Send + 'static,
    on_bound: impl FnOnce(SocketAddr),
) -> Result<(), CliError> {
    let registry = TableRegistry::new(&args.data)?;
    let loaded = registry.load_all()?;
    info!(tables = ?loaded, "loaded data directory {}", args.data.display());
    let sessions = Arc::new(SessionManager::new(Arc::new(registry), args.session_config()));
    let app = crate::router(
        sessions.clone(),
        &RouterConfig {
            cors_origins: args.cors.clone(),
            static_dir: args.static_dir.clone(),
        },
    );

    let addr = SocketAddr::new(args.host, args.port);
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| CliError::Bind(format!("cannot bind {addr}: {e}")))?;
    let bound = listener
        .local_addr()
        .map_err(|e| CliError::Bind(format!("cannot bind {addr}: {e}")))?;
    on_bound(bound);

    let sweep_every = (sessions.config().ttl / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    let sweeper = {
        let sessions = sessions.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(sweep_every);
            loop {
                tick.tick().await;
                let n = sessions.expire_sessions(sessions.now());
                if n > 0 {
                    info!(expired = n, "expired idle sessions");
                }
            }
        })
    };

    let (stop_tx, mut stop_rx) = tokio::sync::watch::channel(false);
    tokio::spawn(async move {
        shutdown.await;
        let _ = stop_tx.send(true);
    });
    let mut graceful_rx = stop_rx.clone();
    let server = axum::serve(listener, app).with_graceful_shutdown(async move {
        let _ = graceful_rx.wait_for(|s| *s).await;
        info!("shutting down");
    });
    let deadline = async move {
        let _ = stop_rx.wait_for(|s| *s).await;
        tokio::time::sleep(SHUTDOWN_GRACE).await;
    };
    let result = tokio::select! {
        r = server => r.map_err(|e| CliError::Io(format!("server error: {e}"))),
        _ = deadline => {
            warn!("in-flight requests did not finish within {:?}; closing", SHUTDOWN_GRACE);
            Ok(())
        }
    };
    sweeper.abort();
    result
}

/// Resolves on ctrl-c or SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
