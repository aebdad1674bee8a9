//! Backtesting: generate a ranking per target tournament from strictly
//! earlier data, predict every completed match, and tally hit rates
//! across the reporting slices (year, surface, category, rank band).

mod export;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{Category, MatchId, MatchRecord, MatchStore, PlayerId, Surface, TournamentId};
use crate::error::Result;
use crate::ranking::{
    build_graph, rank_players, PageRankConfig, PositionIndex, RatingTable, WeightParams,
};

pub use export::{write_report_json, write_report_tsv};

/// Which ranking drives the predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PredictorKind {
    /// The official rank recorded on each match row.
    OfficialRank,
    /// PageRank with every edge weight exactly 1.
    UniformPageRank,
    /// PageRank with the parametric edge weights.
    ParametricPageRank,
}

impl std::fmt::Display for PredictorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PredictorKind::OfficialRank => "official",
            PredictorKind::UniformPageRank => "uniform",
            PredictorKind::ParametricPageRank => "parametric",
        })
    }
}

/// A ranking source plus the parameters it runs under. `params` is
/// ignored for `OfficialRank` except that the uniform predictor keeps
/// its window size.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Predictor {
    pub kind: PredictorKind,
    pub params: WeightParams,
    pub config: PageRankConfig,
}

impl Predictor {
    pub fn official() -> Self {
        Predictor {
            kind: PredictorKind::OfficialRank,
            params: WeightParams::identity(1),
            config: PageRankConfig::default(),
        }
    }

    /// Uniform PageRank over an `age_years` window.
    pub fn uniform(age_years: u32) -> Self {
        Predictor {
            kind: PredictorKind::UniformPageRank,
            params: WeightParams::identity(age_years),
            config: PageRankConfig::default(),
        }
    }

    pub fn parametric(params: WeightParams) -> Self {
        Predictor {
            kind: PredictorKind::ParametricPageRank,
            params,
            config: PageRankConfig::default(),
        }
    }

    pub fn with_config(mut self, config: PageRankConfig) -> Self {
        self.config = config;
        self
    }

    /// The weight parameters actually applied: the uniform predictor
    /// forces identity weights while keeping its window.
    pub fn effective_params(&self) -> WeightParams {
        match self.kind {
            PredictorKind::UniformPageRank => WeightParams::identity(self.params.age_years),
            _ => self.params,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Hit,
    Miss,
}

/// One evaluated match. Ranks are the predictor's positions; `None`
/// stands for an unlisted player (treated as an arbitrarily bad rank).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prediction {
    pub match_id: MatchId,
    /// `None` when neither player could be preferred.
    pub predicted_winner: Option<PlayerId>,
    pub outcome: Outcome,
    pub rank_winner: Option<u32>,
    pub rank_loser: Option<u32>,
}

/// Where predict_match takes its positions from.
pub enum RankSource<'a> {
    Table(&'a PositionIndex),
    Official,
}

impl RankSource<'_> {
    fn ranks(&self, m: &MatchRecord) -> (Option<u32>, Option<u32>) {
        match self {
            RankSource::Table(index) => (
                index.position_of(m.winner_id),
                index.position_of(m.loser_id),
            ),
            RankSource::Official => (m.official_rank_winner, m.official_rank_loser),
        }
    }
}

/// Predict one completed match: the better-positioned player wins.
/// Unlisted players lose; an exact tie (or two unlisted players) is an
/// undecided prediction and counts as a miss.
pub fn predict_match(m: &MatchRecord, source: &RankSource<'_>) -> Prediction {
    let (rank_winner, rank_loser) = source.ranks(m);
    let predicted_winner = match (rank_winner, rank_loser) {
        (Some(w), Some(l)) if w < l => Some(m.winner_id),
        (Some(w), Some(l)) if l < w => Some(m.loser_id),
        (Some(_), Some(_)) => None,
        (Some(_), None) => Some(m.winner_id),
        (None, Some(_)) => Some(m.loser_id),
        (None, None) => None,
    };
    let outcome = if predicted_winner == Some(m.winner_id) {
        Outcome::Hit
    } else {
        Outcome::Miss
    };
    Prediction {
        match_id: m.match_id,
        predicted_winner,
        outcome,
        rank_winner,
        rank_loser,
    }
}

/// Per-tournament evaluation output.
#[derive(Debug, Clone, Serialize)]
pub struct TournamentEval {
    pub tournament_id: TournamentId,
    pub hits: u64,
    pub misses: u64,
    /// Matches with no official rank on either side, skipped by the
    /// official-rank predictor only.
    pub skipped_no_rank: u64,
    pub predictions: Vec<Prediction>,
}

/// Rank the target tournament from strictly earlier data, or use
/// official ranks, and predict each of its completed matches.
pub fn evaluate_tournament(
    store: &MatchStore,
    tournament: TournamentId,
    predictor: &Predictor,
) -> Result<TournamentEval> {
    let completed: Vec<&MatchRecord> = store
        .tournament_matches(tournament)
        .filter(|m| m.completed)
        .collect();

    let mut eval = TournamentEval {
        tournament_id: tournament,
        hits: 0,
        misses: 0,
        skipped_no_rank: 0,
        predictions: Vec::with_capacity(completed.len()),
    };
    if completed.is_empty() {
        return Ok(eval);
    }

    let table_index = match predictor.kind {
        PredictorKind::OfficialRank => None,
        _ => {
            let table = rank_tournament(store, tournament, predictor)?;
            Some(PositionIndex::new(&table))
        }
    };

    for m in completed {
        let source = match &table_index {
            Some(index) => RankSource::Table(index),
            None => {
                if m.official_rank_winner.is_none() && m.official_rank_loser.is_none() {
                    eval.skipped_no_rank += 1;
                    continue;
                }
                RankSource::Official
            }
        };
        let prediction = predict_match(m, &source);
        match prediction.outcome {
            Outcome::Hit => eval.hits += 1,
            Outcome::Miss => eval.misses += 1,
        }
        eval.predictions.push(prediction);
    }
    Ok(eval)
}

/// Produce the predictor's rating table for one target tournament.
pub fn rank_tournament(
    store: &MatchStore,
    tournament: TournamentId,
    predictor: &Predictor,
) -> Result<RatingTable> {
    let params = predictor.effective_params();
    let window = store.query_window(tournament, params.age_years)?;
    let graph = build_graph(store, &window, tournament, &params)?;
    rank_players(&graph, store, &predictor.config)
}

/// Rank bands for the similar-strength slices. The boundary rank 50
/// stays in the middle band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RankBand {
    Top1To10,
    Mid11To50,
    Rest51Up,
}

impl RankBand {
    pub fn of(rank: u32) -> RankBand {
        match rank {
            0..=10 => RankBand::Top1To10,
            11..=50 => RankBand::Mid11To50,
            _ => RankBand::Rest51Up,
        }
    }
}

impl std::fmt::Display for RankBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RankBand::Top1To10 => "1-10",
            RankBand::Mid11To50 => "11-50",
            RankBand::Rest51Up => "51+",
        })
    }
}

/// Hit/miss tally for one report cell.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub hits: u64,
    pub misses: u64,
}

impl Cell {
    pub fn total(&self) -> u64 {
        self.hits + self.misses
    }

    pub fn rate(&self) -> Option<f64> {
        let total = self.total();
        if total == 0 {
            None
        } else {
            Some(self.hits as f64 / total as f64)
        }
    }

    fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Hit => self.hits += 1,
            Outcome::Miss => self.misses += 1,
        }
    }
}

/// Which slice tables to compute.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SliceSet {
    pub year: bool,
    pub surface: bool,
    pub category: bool,
    pub rank_band: bool,
}

impl Default for SliceSet {
    fn default() -> Self {
        SliceSet {
            year: true,
            surface: true,
            category: true,
            rank_band: true,
        }
    }
}

/// Aggregated backtest report. The pooled rate (hits over all evaluated
/// matches) is the primary overall number; the unweighted mean of the
/// yearly rates is reported alongside it.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct EvalReport {
    pub predictor: String,
    pub years: Vec<i32>,
    pub total: Cell,
    pub overall_pooled: Option<f64>,
    pub overall_mean_of_years: Option<f64>,
    pub per_year: BTreeMap<i32, Cell>,
    pub by_surface: BTreeMap<Surface, Cell>,
    pub by_category: BTreeMap<Category, Cell>,
    pub by_rank_band: BTreeMap<RankBand, Cell>,
    pub skipped_no_rank: u64,
    pub evaluated_matches: u64,
}

/// Evaluate every tournament of the given years and aggregate.
/// Tournaments are independent, so they run in parallel; the merge is
/// in tournament order and the result does not depend on scheduling.
pub fn evaluate_years(
    store: &MatchStore,
    years: &[i32],
    predictor: &Predictor,
    slices: &SliceSet,
) -> Result<EvalReport> {
    let ids = store.tournaments_in_years(years);
    let evals: Vec<TournamentEval> = ids
        .par_iter()
        .map(|id| evaluate_tournament(store, *id, predictor))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted_years = years.to_vec();
    sorted_years.sort_unstable();
    sorted_years.dedup();
    Ok(aggregate(store, &sorted_years, predictor, &evals, slices))
}

fn aggregate(
    store: &MatchStore,
    years: &[i32],
    predictor: &Predictor,
    evals: &[TournamentEval],
    slices: &SliceSet,
) -> EvalReport {
    let mut total = Cell::default();
    let mut per_year: BTreeMap<i32, Cell> = BTreeMap::new();
    let mut by_surface: BTreeMap<Surface, Cell> = BTreeMap::new();
    let mut by_category: BTreeMap<Category, Cell> = BTreeMap::new();
    let mut by_rank_band: BTreeMap<RankBand, Cell> = BTreeMap::new();
    let mut skipped = 0;

    for eval in evals {
        skipped += eval.skipped_no_rank;
        let tournament = store
            .tournament(eval.tournament_id)
            .expect("evaluated tournament exists");
        for p in &eval.predictions {
            total.add(p.outcome);
            per_year.entry(tournament.year).or_default().add(p.outcome);
            if slices.surface {
                by_surface
                    .entry(tournament.surface)
                    .or_default()
                    .add(p.outcome);
            }
            if slices.category {
                by_category
                    .entry(tournament.category)
                    .or_default()
                    .add(p.outcome);
            }
            if slices.rank_band {
                // Both players must sit in the same band, judged by the
                // predictor's own ranking.
                if let (Some(w), Some(l)) = (p.rank_winner, p.rank_loser) {
                    let (bw, bl) = (RankBand::of(w), RankBand::of(l));
                    if bw == bl {
                        by_rank_band.entry(bw).or_default().add(p.outcome);
                    }
                }
            }
        }
    }

    let yearly_rates: Vec<f64> = per_year.values().filter_map(|c| c.rate()).collect();
    let overall_mean_of_years = if yearly_rates.is_empty() {
        None
    } else {
        Some(yearly_rates.iter().sum::<f64>() / yearly_rates.len() as f64)
    };

    EvalReport {
        predictor: predictor.kind.to_string(),
        years: years.to_vec(),
        total,
        overall_pooled: total.rate(),
        overall_mean_of_years,
        per_year: if slices.year {
            per_year
        } else {
            BTreeMap::new()
        },
        by_surface,
        by_category,
        by_rank_band,
        skipped_no_rank: skipped,
        evaluated_matches: total.total(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_store, IngestConfig, RawMatchRow};
    use chrono::NaiveDate;

    fn raw(
        tournament: &str,
        date: &str,
        round: &str,
        winner: &str,
        loser: &str,
        ranks: (Option<u32>, Option<u32>),
    ) -> RawMatchRow {
        RawMatchRow {
            source_file: "fixture.csv".to_string(),
            line: 0,
            tournament: tournament.to_string(),
            series: "International".to_string(),
            location: None,
            court: None,
            surface: "Hard".to_string(),
            round: round.to_string(),
            best_of: Some(3),
            date: NaiveDate::parse_from_str(date, "%Y-%m-%d").unwrap(),
            winner: winner.to_string(),
            loser: loser.to_string(),
            winner_rank: ranks.0,
            loser_rank: ranks.1,
            set_scores: vec![(6, 0), (6, 0)],
            comment: None,
            odds_winner: None,
            odds_loser: None,
        }
    }

    fn mk(m: &MatchRecord, rw: Option<u32>, rl: Option<u32>) -> Prediction {
        let mut m = m.clone();
        m.official_rank_winner = rw;
        m.official_rank_loser = rl;
        predict_match(&m, &RankSource::Official)
    }

    fn sample_match() -> MatchRecord {
        MatchRecord {
            match_id: 1,
            tournament_id: 1,
            round: crate::dataset::Round::F,
            date: NaiveDate::from_ymd_opt(2005, 1, 10).unwrap(),
            winner_id: 1,
            loser_id: 2,
            official_rank_winner: None,
            official_rank_loser: None,
            set_scores: vec![(6, 0), (6, 0)],
            completed: true,
            odds_winner: None,
            odds_loser: None,
        }
    }

    #[test]
    fn better_position_wins() {
        let m = sample_match();
        assert_eq!(mk(&m, Some(3), Some(10)).outcome, Outcome::Hit);
        assert_eq!(mk(&m, Some(10), Some(3)).outcome, Outcome::Miss);
        assert_eq!(mk(&m, None, Some(40)).outcome, Outcome::Miss);
        assert_eq!(mk(&m, Some(40), None).outcome, Outcome::Hit);
    }

    #[test]
    fn undecided_counts_as_miss() {
        let m = sample_match();
        let equal = mk(&m, Some(5), Some(5));
        assert_eq!(equal.predicted_winner, None);
        assert_eq!(equal.outcome, Outcome::Miss);
        let both_missing = mk(&m, None, None);
        assert_eq!(both_missing.predicted_winner, None);
        assert_eq!(both_missing.outcome, Outcome::Miss);
    }

    /// A seven-match single-elimination bracket in seeding order, one
    /// optional upset in the final.
    fn bracket(upset_final: bool) -> Vec<RawMatchRow> {
        let mut rows = Vec::new();
        // History that seeds the ranking: player k beats everyone below.
        let players = ["P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8"];
        let mut day = 1;
        for i in 0..players.len() {
            for j in (i + 1)..players.len() {
                for _ in 0..(players.len() - i) {
                    rows.push(raw(
                        "Warmup",
                        &format!("2004-03-{day:02}"),
                        "R32",
                        players[i],
                        players[j],
                        (None, None),
                    ));
                }
                day = day % 28 + 1;
            }
        }
        // The target bracket: quarterfinals through final by seeding.
        let pairs = [("P1", "P8"), ("P2", "P7"), ("P3", "P6"), ("P4", "P5")];
        for (w, l) in pairs {
            rows.push(raw(
                "Target",
                "2005-02-01",
                "Quarterfinals",
                w,
                l,
                (None, None),
            ));
        }
        rows.push(raw(
            "Target",
            "2005-02-02",
            "Semifinals",
            "P1",
            "P4",
            (None, None),
        ));
        rows.push(raw(
            "Target",
            "2005-02-02",
            "Semifinals",
            "P2",
            "P3",
            (None, None),
        ));
        if upset_final {
            rows.push(raw(
                "Target",
                "2005-02-03",
                "The Final",
                "P2",
                "P1",
                (None, None),
            ));
        } else {
            rows.push(raw(
                "Target",
                "2005-02-03",
                "The Final",
                "P1",
                "P2",
                (None, None),
            ));
        }
        rows
    }

    #[test]
    fn clean_bracket_gives_seven_hits() {
        let store = build_store(&bracket(false), &IngestConfig::default()).unwrap();
        let target = store.find_tournament("Target", 2005).unwrap().tournament_id;
        let eval = evaluate_tournament(&store, target, &Predictor::uniform(2)).unwrap();
        assert_eq!((eval.hits, eval.misses), (7, 0));
        assert_eq!(eval.predictions.len(), 7);
    }

    #[test]
    fn one_upset_gives_six_hits_one_miss() {
        let store = build_store(&bracket(true), &IngestConfig::default()).unwrap();
        let target = store.find_tournament("Target", 2005).unwrap().tournament_id;
        let eval = evaluate_tournament(&store, target, &Predictor::uniform(2)).unwrap();
        assert_eq!((eval.hits, eval.misses), (6, 1));
    }

    #[test]
    fn empty_tournament_evaluates_to_zero() {
        let mut rows = bracket(false);
        // A tournament whose only match is incomplete.
        let mut abandoned = raw("Ghost", "2005-03-01", "The Final", "P1", "P2", (None, None));
        abandoned.set_scores = vec![(6, 0)];
        rows.push(abandoned);
        let store = build_store(&rows, &IngestConfig::default()).unwrap();
        let ghost = store.find_tournament("Ghost", 2005).unwrap().tournament_id;
        let eval = evaluate_tournament(&store, ghost, &Predictor::uniform(2)).unwrap();
        assert_eq!((eval.hits, eval.misses), (0, 0));
        assert!(eval.predictions.is_empty());
    }

    #[test]
    fn official_rank_skips_only_fully_unranked_matches() {
        let rows = vec![
            raw(
                "Doha",
                "2005-01-03",
                "SF",
                "A One",
                "B Two",
                (Some(1), Some(2)),
            ),
            raw(
                "Doha",
                "2005-01-03",
                "SF",
                "C Three",
                "D Four",
                (None, None),
            ),
            raw(
                "Doha",
                "2005-01-04",
                "F",
                "A One",
                "C Three",
                (Some(1), None),
            ),
        ];
        let store = build_store(&rows, &IngestConfig::default()).unwrap();
        let doha = store.find_tournament("Doha", 2005).unwrap().tournament_id;
        let eval = evaluate_tournament(&store, doha, &Predictor::official()).unwrap();
        assert_eq!(eval.skipped_no_rank, 1);
        assert_eq!((eval.hits, eval.misses), (2, 0));
    }

    #[test]
    fn report_matches_hand_tally_and_conserves_counts() {
        let mut rows = bracket(true);
        // A second tournament on clay in another year band.
        rows.push(raw(
            "Claycourt",
            "2005-04-11",
            "SF",
            "P3",
            "P4",
            (None, None),
        ));
        rows.push(raw(
            "Claycourt",
            "2005-04-11",
            "SF",
            "P1",
            "P2",
            (None, None),
        ));
        rows.push(raw(
            "Claycourt",
            "2005-04-12",
            "F",
            "P1",
            "P3",
            (None, None),
        ));
        let at = rows.len() - 3;
        for row in &mut rows[at..] {
            row.surface = "Clay".to_string();
        }
        let store = build_store(&rows, &IngestConfig::default()).unwrap();
        let report = evaluate_years(
            &store,
            &[2005],
            &Predictor::uniform(2),
            &SliceSet::default(),
        )
        .unwrap();
        // Hand tally: bracket with upset = 6/1, clay event all by
        // seeding = 3/0.
        assert_eq!(report.total, Cell { hits: 9, misses: 1 });
        assert_eq!(report.overall_pooled, Some(0.9));
        assert_eq!(report.per_year[&2005], Cell { hits: 9, misses: 1 });

        // Surface cells partition the evaluated matches.
        let surface_total: u64 = report.by_surface.values().map(|c| c.total()).sum();
        assert_eq!(surface_total, report.evaluated_matches);
        let category_total: u64 = report.by_category.values().map(|c| c.total()).sum();
        assert_eq!(category_total, report.evaluated_matches);
        assert_eq!(
            report.by_surface[&Surface::Clay],
            Cell { hits: 3, misses: 0 }
        );
    }

    #[test]
    fn identical_runs_give_identical_reports() {
        let store = build_store(&bracket(true), &IngestConfig::default()).unwrap();
        let a = evaluate_years(
            &store,
            &[2005],
            &Predictor::uniform(2),
            &SliceSet::default(),
        )
        .unwrap();
        let b = evaluate_years(
            &store,
            &[2005],
            &Predictor::uniform(2),
            &SliceSet::default(),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_equals_parametric_with_identity_params() {
        let store = build_store(&bracket(true), &IngestConfig::default()).unwrap();
        let target = store.find_tournament("Target", 2005).unwrap().tournament_id;
        let uniform = evaluate_tournament(&store, target, &Predictor::uniform(2)).unwrap();
        let identity = Predictor::parametric(WeightParams::identity(2));
        let parametric = evaluate_tournament(&store, target, &identity).unwrap();
        assert_eq!(uniform.predictions, parametric.predictions);
    }
}
