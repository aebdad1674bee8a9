//! Player ratings from historical tennis results.
//!
//! The pipeline: ingest per-season result files into a canonical
//! three-table store ([`dataset`]), build a time-windowed directed
//! multigraph of results and score players with an edge-weighted
//! PageRank ([`ranking`]), backtest any ranking as a match predictor
//! ([`eval`]), search the weight parameters by coordinate ascent
//! ([`search`]), and convert rank differences into calibrated victory
//! probabilities scored by ROC/AUC ([`prob`]).

pub mod dataset;
pub mod error;
pub mod eval;
mod fmt;
pub mod plot;
pub mod prob;
pub mod ranking;
pub mod search;

pub use error::{Error, Result};
