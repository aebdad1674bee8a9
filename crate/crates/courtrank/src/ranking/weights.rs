//! The three per-match weight factors and their product.
//!
//! Every completed match inside the window becomes one loser-to-winner
//! edge whose weight is `aging * surface * instance`, each factor in
//! (0, 1].

use chrono::NaiveDate;

use crate::dataset::{Category, MatchId, MatchRecord, PlayerId, Round, Surface, Tournament};
use crate::ranking::{WeightParams, MIN_SURFACE_WEIGHT};

/// One weighted result edge, directed from the loser to the winner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedEdge {
    pub from: PlayerId,
    pub to: PlayerId,
    pub weight: f64,
    pub provenance: MatchId,
}

/// Exponential decay of a match `t` years older than the target
/// tournament: `amplitude * exp(-lambda * t)`.
pub fn aging_weight(t: f64, params: &WeightParams) -> f64 {
    debug_assert!(t >= 0.0);
    params.decay_amplitude * (-params.decay_lambda * t).exp()
}

/// 1 on the target surface, the configured factor elsewhere. A factor
/// of exactly zero is clamped so off-surface edges never vanish from
/// the transition matrix.
pub fn surface_weight(
    match_surface: Surface,
    target_surface: Surface,
    params: &WeightParams,
) -> f64 {
    if match_surface == target_surface {
        1.0
    } else {
        params.surface_factor.max(MIN_SURFACE_WEIGHT)
    }
}

/// Geometric round ladder: `round_base ^ -(v - 1)` where `v` is the
/// round value from [`round_value`]. With base 2 the ladder reproduces
/// the 2000/1000/500/250 title-point ratios of the tour's scoring
/// table.
pub fn instance_weight(v: u32, params: &WeightParams) -> f64 {
    debug_assert!(v >= 1);
    params.round_base.powi(-(v as i32 - 1))
}

/// Round value: distance of the match's round from a season-slam title,
/// offset by tournament category. A slam final is 1; each category tier
/// below shifts the ladder one step. The season final's round robin
/// sits at the quarterfinal slot of the tier below a slam.
pub fn round_value(category: Category, round: Round) -> u32 {
    let offset = match category {
        Category::GrandSlam => 0,
        Category::Masters1000 | Category::MastersCup => 1,
        Category::ATP500 => 2,
        Category::ATP250 => 3,
    };
    let position = match round {
        Round::F => 1,
        Round::SF => 2,
        Round::QF | Round::RR => 3,
        Round::R16 => 4,
        Round::R32 => 5,
        Round::R64 => 6,
        Round::R128 => 7,
    };
    offset + position
}

/// Age of a match relative to the target start, in fractional years
/// (week difference over 52).
pub fn age_years(match_date: NaiveDate, target_start: NaiveDate) -> f64 {
    let days = (target_start - match_date).num_days() as f64;
    (days / 7.0) / 52.0
}

/// The combined edge for one completed in-window match: weight is the
/// exact product of the aging, surface, and instance factors.
pub fn edge_weight(
    mtch: &MatchRecord,
    match_tournament: &Tournament,
    target: &Tournament,
    target_start: NaiveDate,
    params: &WeightParams,
) -> WeightedEdge {
    let t = age_years(mtch.date, target_start);
    let aging = aging_weight(t, params);
    let surface = surface_weight(match_tournament.surface, target.surface, params);
    let instance = instance_weight(round_value(match_tournament.category, mtch.round), params);
    WeightedEdge {
        from: mtch.loser_id,
        to: mtch.winner_id,
        weight: aging * surface * instance,
        provenance: mtch.match_id,
    }
}
