use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

use plotwire_core::expr::ExprError;
use plotwire_core::plot::{OptionError, PlotError};
use plotwire_core::session::SessionError;
use plotwire_core::table::TableError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    NameError,
    Validation,
    Session,
    Unsupported,
    Range,
    Format,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> StatusCode {
        match self {
            ErrorCode::NameError | ErrorCode::Session => StatusCode::NOT_FOUND,
            ErrorCode::Validation | ErrorCode::Range | ErrorCode::Format => StatusCode::BAD_REQUEST,
            ErrorCode::Unsupported => StatusCode::CONFLICT,
            ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorDetail {
    pub option: String,
    pub message: String,
}

/// JSON body of every non-2xx response.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
    pub details: Vec<ErrorDetail>,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        ApiError {
            code,
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn status(&self) -> StatusCode {
        self.code.status()
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self)).into_response()
    }
}

fn details(errs: &[OptionError]) -> Vec<ErrorDetail> {
    errs.iter()
        .map(|e| ErrorDetail {
            option: e.option.clone(),
            message: e.message.clone(),
        })
        .collect()
}

impl From<PlotError> for ApiError {
    fn from(e: PlotError) -> Self {
        let message = e.to_string();
        match e {
            PlotError::Validation(errs) => ApiError {
                code: ErrorCode::Validation,
                message,
                details: details(&errs),
            },
            PlotError::Range(_) => ApiError::new(ErrorCode::Range, message),
            PlotError::Unsupported(_) => ApiError::new(ErrorCode::Unsupported, message),
            PlotError::Expr(ExprError::Name { .. }) => ApiError::new(ErrorCode::NameError, message),
            PlotError::Expr(_) => ApiError::new(ErrorCode::Validation, message),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::UnknownTable(_) => ApiError::new(ErrorCode::NameError, e.to_string()),
            SessionError::UnknownSession(_) => ApiError::new(ErrorCode::Session, e.to_string()),
            SessionError::Plot(p) => p.into(),
        }
    }
}

impl From<TableError> for ApiError {
    fn from(e: TableError) -> Self {
        let code = match &e {
            TableError::Name { .. } | TableError::NotNumeric(_) => ErrorCode::NameError,
            TableError::Parse { .. } | TableError::Schema(_) | TableError::Format { .. } => ErrorCode::Format,
            TableError::PathEscape(_) => ErrorCode::Range,
            TableError::Io { .. } => ErrorCode::Internal,
        };
        ApiError::new(code, e.to_string())
    }
}
