//! Slow, obviously-correct reference implementations used to check the
//! engine, plus seeded generators for random tables and expressions.
//!
//! Nothing here calls into the engine's evaluation, projection or binning
//! code; the oracles work from the documented formulas directly.

pub mod exprgen;
pub mod oracle;
pub mod tables;
