//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{file}: no column layout matches header [{header}]")]
    UnmappedLayout { file: String, header: String },

    #[error("{file}:{line}: {message}")]
    MalformedRow {
        file: String,
        line: u64,
        message: String,
    },

    #[error("ambiguous player name {name:?}: matches both {first:?} and {second:?}")]
    AmbiguousPlayer {
        name: String,
        first: String,
        second: String,
    },

    #[error("unknown tournament series label {label:?}: extend the series alias table")]
    UnknownSeries { label: String },

    #[error("unknown round label {label:?}: extend the round alias table")]
    UnknownRound { label: String },

    #[error("unknown surface {label:?}: extend the surface alias table")]
    UnknownSurface { label: String },

    #[error("store integrity violation: {message}")]
    Integrity { message: String },

    #[error("unknown tournament: {name}")]
    UnknownTournament { name: String },

    #[error("invalid parameter: {message}")]
    InvalidParameter { message: String },

    #[error(
        "pagerank did not converge after {iterations} iterations \
         (residual {residual:e}, tolerance {tolerance:e})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("parameter evaluation failed at {params}")]
    Evaluator {
        params: String,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "logistic fit needs at least 3 bins over at least 2 distinct rank \
         differences, got {bins} bins over {distinct}"
    )]
    InsufficientBins { bins: usize, distinct: usize },

    #[error("ROC input needs at least one hit and one miss")]
    SingleClassRoc,

    #[error("AUROC cross-check failed: trapezoid {trapezoid} vs pairwise {pairwise}")]
    AurocMismatch { trapezoid: f64, pairwise: f64 },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn integrity(message: impl Into<String>) -> Self {
        Error::Integrity {
            message: message.into(),
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            message: message.into(),
        }
    }
}
