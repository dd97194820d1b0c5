//! Server-side plot rendering over large column-oriented tables.

pub mod expr;
pub mod plot;
pub mod session;
pub mod table;
