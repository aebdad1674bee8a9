//! Ranking engine: directed multigraph of results over a time window,
//! parametric edge weights, and player scores via weighted PageRank.

mod graph;
mod pagerank;
mod weights;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{MatchStore, PlayerId, TournamentId};
use crate::error::{Error, Result};
use crate::fmt::significant;

pub use graph::{build_graph, GraphEdge, MatchGraph};
pub use pagerank::{compute_pagerank, rank_players};
pub use weights::{
    aging_weight, edge_weight, instance_weight, round_value, surface_weight, WeightedEdge,
};

/// Smallest usable surface factor; a factor of exactly zero would drop
/// off-surface edges from the transition matrix entirely.
pub const MIN_SURFACE_WEIGHT: f64 = 1e-12;

/// The four searched weight parameters plus the fixed decay amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightParams {
    /// Window size in years; matches older than this never enter the graph.
    pub age_years: u32,
    /// Positive decay magnitude applied as exp(-lambda * t), t in years.
    pub decay_lambda: f64,
    /// Weight of a match played on a different surface than the target, in [0, 1].
    pub surface_factor: f64,
    /// Base of the per-round geometric ladder, >= 1.
    pub round_base: f64,
    /// Decay amplitude; fixed at 1.
    #[serde(default = "one")]
    pub decay_amplitude: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for WeightParams {
    /// The best combination found by the parameter search.
    fn default() -> Self {
        WeightParams {
            age_years: 4,
            decay_lambda: 5.0,
            surface_factor: 0.3,
            round_base: 1.7,
            decay_amplitude: 1.0,
        }
    }
}

impl WeightParams {
    pub fn new(age_years: u32, decay_lambda: f64, surface_factor: f64, round_base: f64) -> Self {
        WeightParams {
            age_years,
            decay_lambda,
            surface_factor,
            round_base,
            decay_amplitude: 1.0,
        }
    }

    /// Parameters under which every edge weight is exactly 1.0: the
    /// decay magnitude is small enough that exp(-lambda * t) rounds to
    /// one for any in-window age, and base-1 / factor-1 make the other
    /// two factors exact.
    pub fn identity(age_years: u32) -> Self {
        WeightParams {
            age_years,
            decay_lambda: 1e-300,
            surface_factor: 1.0,
            round_base: 1.0,
            decay_amplitude: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.age_years < 1 {
            return Err(Error::invalid("age_years must be >= 1"));
        }
        if !self.decay_lambda.is_finite() || self.decay_lambda <= 0.0 {
            return Err(Error::invalid("decay_lambda must be > 0"));
        }
        if !(0.0..=1.0).contains(&self.surface_factor) {
            return Err(Error::invalid("surface_factor must be in [0, 1]"));
        }
        if !self.round_base.is_finite() || self.round_base < 1.0 {
            return Err(Error::invalid("round_base must be >= 1"));
        }
        if self.decay_amplitude != 1.0 {
            return Err(Error::invalid("decay_amplitude is fixed at 1"));
        }
        Ok(())
    }
}

impl std::fmt::Display for WeightParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "age={} decay={} surface={} round={}",
            self.age_years, self.decay_lambda, self.surface_factor, self.round_base
        )
    }
}

/// Power-iteration settings. The damping and dangling conventions are
/// recorded here so experiments can vary them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageRankConfig {
    pub damping: f64,
    /// L1 change per iteration below which the iteration stops.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PageRankConfig {
    fn default() -> Self {
        PageRankConfig {
            damping: 0.85,
            tolerance: 1e-8,
            max_iterations: 1000,
        }
    }
}

impl PageRankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(Error::invalid("damping must be in (0, 1)"));
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(Error::invalid("tolerance must be > 0"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be >= 1"));
        }
        Ok(())
    }
}

/// One row of a rating table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingEntry {
    /// 1-based position; positions increase as scores weakly decrease.
    pub position: u32,
    pub player_id: PlayerId,
    pub score: f64,
}

/// Ordered player scores from one PageRank run for one target
/// tournament. Players absent from the window graph are unlisted;
/// callers treat absence as an arbitrarily bad rank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatingTable {
    pub target_tournament_id: TournamentId,
    pub entries: Vec<RatingEntry>,
}

impl RatingTable {
    pub fn position_of(&self, player: PlayerId) -> Option<u32> {
        self.entries
            .iter()
            .find(|e| e.player_id == player)
            .map(|e| e.position)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Tab-separated export: `rank\tplayer\tscore` with the score at
    /// ten significant digits.
    pub fn to_tsv(&self, store: &MatchStore) -> String {
        let mut out = String::from("rank\tplayer\tscore\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                e.position,
                store.player_name(e.player_id),
                significant(e.score, 10)
            ));
        }
        out
    }

    pub fn write_tsv(&self, store: &MatchStore, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv(store)).map_err(|e| Error::io(path, e))
    }
}

/// Fast position lookups for repeated prediction over one table.
pub struct PositionIndex {
    map: std::collections::HashMap<PlayerId, u32>,
}

impl PositionIndex {
    pub fn new(table: &RatingTable) -> Self {
        PositionIndex {
            map: table
                .entries
                .iter()
                .map(|e| (e.player_id, e.position))
                .collect(),
        }
    }

    pub fn position_of(&self, player: PlayerId) -> Option<u32> {
        self.map.get(&player).copied()
    }
}
