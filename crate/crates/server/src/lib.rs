//! HTTP server and command-line front end for plotwire.

pub mod api;
pub mod cli;
pub mod error;

use std::sync::Arc;

use axum::http::{header, HeaderName, HeaderValue, Method};
use axum::Router;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::services::ServeDir;
use tower_http::trace::TraceLayer;

use plotwire_core::session::SessionManager;

#[derive(Debug, Clone, Default)]
pub struct RouterConfig {
    /// Allowed CORS origins; empty allows any origin.
    pub cors_origins: Vec<String>,
    /// Directory of static client assets served at `/`.
    pub static_dir: Option<std::path::PathBuf>,
}

pub fn router(sessions: Arc<SessionManager>, config: &RouterConfig) -> Router {
    let origins = if config.cors_origins.is_empty() {
        AllowOrigin::from(Any)
    } else {
        AllowOrigin::list(
            config
                .cors_origins
                .iter()
                .filter_map(|o| HeaderValue::from_str(o).ok()),
        )
    };
    let cors = CorsLayer::new()
        .allow_origin(origins)
        .allow_methods([Method::GET, Method::POST, Method::DELETE])
        .allow_headers([header::CONTENT_TYPE, header::IF_NONE_MATCH])
        .expose_headers([
            HeaderName::from_static("x-seq"),
            HeaderName::from_static("x-view"),
            header::ETAG,
        ]);
    let mut app = api::routes();
    app = match &config.static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir).fallback(axum::routing::any(api::not_found))),
        None => app.fallback(api::not_found),
    };
    app.with_state(sessions).layer(cors).layer(TraceLayer::new_for_http())
}
