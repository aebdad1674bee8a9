//! Canonical match store: ingest heterogeneous per-season result files,
//! normalize player and tournament entities, and persist three tables
//! (players, tournaments, matches) queryable by time window.

mod normalize;
mod parse;
mod store;

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use normalize::{normalize_player, unify_tournament, NameResolver};
pub use parse::{parse_raw_files, ColumnLayout, IngestConfig, RawMatchRow};
pub use store::{build_store, load_store, MatchStore};

pub type PlayerId = u32;
pub type TournamentId = u32;
pub type MatchId = u32;

/// Court surface. The closed set used by the weight model; historical
/// labels outside it (e.g. carpet) are mapped in via the surface alias
/// table at ingest time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Surface {
    Hard,
    Clay,
    Grass,
}

impl Surface {
    pub const ALL: [Surface; 3] = [Surface::Hard, Surface::Clay, Surface::Grass];
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Surface::Hard => "Hard",
            Surface::Clay => "Clay",
            Surface::Grass => "Grass",
        })
    }
}

impl FromStr for Surface {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "Hard" => Ok(Surface::Hard),
            "Clay" => Ok(Surface::Clay),
            "Grass" => Ok(Surface::Grass),
            other => Err(Error::UnknownSurface {
                label: other.to_string(),
            }),
        }
    }
}

/// Tournament category. Prize tiers as named on the modern calendar;
/// historical series labels map onto these via the series alias table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    ATP250,
    ATP500,
    Masters1000,
    GrandSlam,
    MastersCup,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::ATP250,
        Category::ATP500,
        Category::Masters1000,
        Category::GrandSlam,
        Category::MastersCup,
    ];
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::ATP250 => "ATP250",
            Category::ATP500 => "ATP500",
            Category::Masters1000 => "Masters1000",
            Category::GrandSlam => "GrandSlam",
            Category::MastersCup => "MastersCup",
        })
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "ATP250" => Ok(Category::ATP250),
            "ATP500" => Ok(Category::ATP500),
            "Masters1000" => Ok(Category::Masters1000),
            "GrandSlam" => Ok(Category::GrandSlam),
            "MastersCup" => Ok(Category::MastersCup),
            other => Err(Error::UnknownSeries {
                label: other.to_string(),
            }),
        }
    }
}

/// Round of a match within its tournament. `RR` is the round-robin
/// stage of the season final.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Round {
    R128,
    R64,
    R32,
    R16,
    QF,
    SF,
    F,
    RR,
}

impl fmt::Display for Round {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Round::R128 => "R128",
            Round::R64 => "R64",
            Round::R32 => "R32",
            Round::R16 => "R16",
            Round::QF => "QF",
            Round::SF => "SF",
            Round::F => "F",
            Round::RR => "RR",
        })
    }
}

impl FromStr for Round {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "R128" => Ok(Round::R128),
            "R64" => Ok(Round::R64),
            "R32" => Ok(Round::R32),
            "R16" => Ok(Round::R16),
            "QF" => Ok(Round::QF),
            "SF" => Ok(Round::SF),
            "F" => Ok(Round::F),
            "RR" => Ok(Round::RR),
            other => Err(Error::UnknownRound {
                label: other.to_string(),
            }),
        }
    }
}

/// One player, keyed by a surrogate id. `canonical_name` is the
/// normalized "Surname F.M." form and is unique in a store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Player {
    pub player_id: PlayerId,
    pub canonical_name: String,
}

/// One tournament edition. `(name, year)` is unique; `week` is the ISO
/// week of the earliest match date.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Tournament {
    pub tournament_id: TournamentId,
    pub name: String,
    pub year: i32,
    pub week: u32,
    pub surface: Surface,
    pub best_of: u8,
    pub category: Category,
    pub location: String,
    pub indoor: bool,
}

/// One completed or abandoned match. Official ranks and odds are kept
/// as recorded in the source files when present.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchRecord {
    pub match_id: MatchId,
    pub tournament_id: TournamentId,
    pub round: Round,
    pub date: NaiveDate,
    pub winner_id: PlayerId,
    pub loser_id: PlayerId,
    pub official_rank_winner: Option<u32>,
    pub official_rank_loser: Option<u32>,
    pub set_scores: Vec<(u8, u8)>,
    pub completed: bool,
    pub odds_winner: Option<f64>,
    pub odds_loser: Option<f64>,
}

impl MatchRecord {
    /// Sets won by the match winner.
    pub fn sets_won_by_winner(&self) -> usize {
        self.set_scores.iter().filter(|(w, l)| w > l).count()
    }
}
