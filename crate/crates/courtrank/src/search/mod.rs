//! Greedy coordinate ascent over the four weight parameters, maximizing
//! the pooled hit rate on a fixed held-out tournament set.
//!
//! One round sweeps the coordinates in a fixed order (years, decay,
//! surface, round base); each sweep evaluates the whole grid for that
//! coordinate with the others held at the incumbent and adopts the
//! argmax only on strict improvement, keeping the incumbent on ties.
//! The search stops once a full round adopts nothing, which certifies a
//! coordinate-wise local optimum over the grid.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{MatchStore, TournamentId};
use crate::error::{Error, Result};
use crate::eval::{evaluate_tournament, Predictor};
use crate::ranking::{PageRankConfig, WeightParams};

/// Hard cap on full rounds; the grids are finite and adoption requires
/// strict improvement, so this only guards a misbehaving evaluator.
pub const MAX_ROUNDS: usize = 50;

/// The swept coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coordinate {
    Years,
    Decay,
    Surface,
    RoundBase,
}

impl Coordinate {
    pub const ORDER: [Coordinate; 4] = [
        Coordinate::Years,
        Coordinate::Decay,
        Coordinate::Surface,
        Coordinate::RoundBase,
    ];
}

impl std::fmt::Display for Coordinate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Coordinate::Years => "years",
            Coordinate::Decay => "decay",
            Coordinate::Surface => "surface",
            Coordinate::RoundBase => "round_base",
        })
    }
}

/// Grid of candidate values per coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchGrid {
    pub years: Vec<u32>,
    pub decay: Vec<f64>,
    pub surface: Vec<f64>,
    pub round_base: Vec<f64>,
}

impl Default for SearchGrid {
    fn default() -> Self {
        SearchGrid {
            years: (1..=6).collect(),
            decay: vec![0.1, 0.2, 5.0, 10.0, 25.0],
            surface: (0..=10).map(|i| i as f64 / 10.0).collect(),
            round_base: (10..=20).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

impl SearchGrid {
    pub fn validate(&self) -> Result<()> {
        fn sorted(xs: &[f64]) -> bool {
            xs.windows(2).all(|w| w[0] < w[1])
        }
        if self.years.is_empty()
            || self.decay.is_empty()
            || self.surface.is_empty()
            || self.round_base.is_empty()
        {
            return Err(Error::invalid("search grids must be non-empty"));
        }
        if !self.years.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("years grid must be strictly increasing"));
        }
        if !sorted(&self.decay) || !sorted(&self.surface) || !sorted(&self.round_base) {
            return Err(Error::invalid("grids must be strictly increasing"));
        }
        for &y in &self.years {
            WeightParams::new(y, self.decay[0], self.surface[0], self.round_base[0]).validate()?;
        }
        for &d in &self.decay {
            WeightParams::new(self.years[0], d, self.surface[0], self.round_base[0]).validate()?;
        }
        for &s in &self.surface {
            WeightParams::new(self.years[0], self.decay[0], s, self.round_base[0]).validate()?;
        }
        for &b in &self.round_base {
            WeightParams::new(self.years[0], self.decay[0], self.surface[0], b).validate()?;
        }
        Ok(())
    }

    fn contains_bounds(&self, params: &WeightParams) -> bool {
        let within = |xs: &[f64], v: f64| *xs.first().unwrap() <= v && v <= *xs.last().unwrap();
        *self.years.first().unwrap() <= params.age_years
            && params.age_years <= *self.years.last().unwrap()
            && within(&self.decay, params.decay_lambda)
            && within(&self.surface, params.surface_factor)
            && within(&self.round_base, params.round_base)
    }
}

/// Fixed held-out tournament set: a seeded uniform sample per year.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TestSet {
    pub tournaments: Vec<TournamentId>,
}

impl TestSet {
    /// Sample up to `per_year` tournaments from each year, seeded so a
    /// given seed always produces the same set.
    pub fn sample(store: &MatchStore, years: &[i32], per_year: usize, seed: u64) -> TestSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sorted_years = years.to_vec();
        sorted_years.sort_unstable();
        sorted_years.dedup();
        let mut tournaments = Vec::new();
        for year in sorted_years {
            let ids = store.tournaments_in_years(&[year]);
            if ids.len() <= per_year {
                tournaments.extend(ids);
                continue;
            }
            let mut picked: Vec<TournamentId> = sample(&mut rng, ids.len(), per_year)
                .into_iter()
                .map(|i| ids[i])
                .collect();
            picked.sort_unstable();
            tournaments.extend(picked);
        }
        TestSet { tournaments }
    }
}

/// Scores one full parameter vector; implementations decide what the
/// score means (the production evaluator uses the pooled hit rate on
/// the test set).
pub trait ParamEvaluator {
    fn evaluate(&mut self, params: &WeightParams) -> Result<f64>;
}

impl<F: FnMut(&WeightParams) -> Result<f64>> ParamEvaluator for F {
    fn evaluate(&mut self, params: &WeightParams) -> Result<f64> {
        self(params)
    }
}

/// Bit-exact cache key: the same vector recurs across sweeps.
type ParamsKey = (u32, u64, u64, u64);

fn key_of(params: &WeightParams) -> ParamsKey {
    (
        params.age_years,
        params.decay_lambda.to_bits(),
        params.surface_factor.to_bits(),
        params.round_base.to_bits(),
    )
}

/// Pooled hit rate of the parametric predictor over the test set, with
/// a per-vector cache.
pub struct TestSetEvaluator<'a> {
    store: &'a MatchStore,
    test_set: &'a TestSet,
    config: PageRankConfig,
    cache: HashMap<ParamsKey, f64>,
}

impl<'a> TestSetEvaluator<'a> {
    pub fn new(store: &'a MatchStore, test_set: &'a TestSet, config: PageRankConfig) -> Self {
        TestSetEvaluator {
            store,
            test_set,
            config,
            cache: HashMap::new(),
        }
    }
}

impl ParamEvaluator for TestSetEvaluator<'_> {
    fn evaluate(&mut self, params: &WeightParams) -> Result<f64> {
        if let Some(score) = self.cache.get(&key_of(params)) {
            return Ok(*score);
        }
        let predictor = Predictor::parametric(*params).with_config(self.config);
        use rayon::prelude::*;
        let evals = self
            .test_set
            .tournaments
            .par_iter()
            .map(|id| evaluate_tournament(self.store, *id, &predictor))
            .collect::<Result<Vec<_>>>()?;
        let hits: u64 = evals.iter().map(|e| e.hits).sum();
        let total: u64 = evals.iter().map(|e| e.hits + e.misses).sum();
        let score = if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        };
        self.cache.insert(key_of(params), score);
        Ok(score)
    }
}

/// One grid-point evaluation in the trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    /// Global sweep counter, starting at 1.
    pub sweep: usize,
    /// Full round this sweep belongs to, starting at 1.
    pub round: usize,
    pub coordinate: Coordinate,
    /// The grid value tried for that coordinate.
    pub value: f64,
    /// The full vector evaluated.
    pub params: WeightParams,
    pub score: f64,
    /// True for the entry adopted as the new incumbent.
    pub adopted: bool,
}

/// Search state: the incumbent vector, its score, and every evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct SearchState {
    pub best: WeightParams,
    pub best_score: f64,
    pub trace: Vec<TraceEntry>,
    /// True when the final round adopted nothing (the termination
    /// certificate); false only if the round cap was hit.
    pub converged: bool,
    pub rounds: usize,
}

impl SearchState {
    fn new(init: WeightParams, score: f64) -> Self {
        SearchState {
            best: init,
            best_score: score,
            trace: Vec::new(),
            converged: false,
            rounds: 0,
        }
    }

    /// Trace as tab-separated `round\tcoordinate\tvalue\tscore` rows.
    pub fn trace_tsv(&self) -> String {
        let mut out = String::from("round\tcoordinate\tvalue\tscore\tadopted\n");
        for e in &self.trace {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\n",
                e.round, e.coordinate, e.value, e.score, e.adopted
            ));
        }
        out
    }

    pub fn write_trace_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.trace_tsv()).map_err(|e| Error::io(path, e))
    }
}

fn with_coordinate(base: &WeightParams, which: Coordinate, value: f64) -> WeightParams {
    let mut params = *base;
    match which {
        Coordinate::Years => params.age_years = value as u32,
        Coordinate::Decay => params.decay_lambda = value,
        Coordinate::Surface => params.surface_factor = value,
        Coordinate::RoundBase => params.round_base = value,
    }
    params
}

fn grid_values(grid: &SearchGrid, which: Coordinate) -> Vec<f64> {
    match which {
        Coordinate::Years => grid.years.iter().map(|y| *y as f64).collect(),
        Coordinate::Decay => grid.decay.clone(),
        Coordinate::Surface => grid.surface.clone(),
        Coordinate::RoundBase => grid.round_base.clone(),
    }
}

/// Sweep one coordinate's grid with the other three fixed at the
/// incumbent. Adopts the sweep argmax only if it strictly improves the
/// incumbent score; ties keep the incumbent. Returns whether an
/// adoption happened.
pub fn sweep_parameter(
    state: &mut SearchState,
    which: Coordinate,
    grid: &SearchGrid,
    evaluator: &mut dyn ParamEvaluator,
    round: usize,
    sweep: usize,
) -> Result<bool> {
    let mut best_value: Option<(f64, f64, usize)> = None; // (score, value, trace idx)
    for value in grid_values(grid, which) {
        let params = with_coordinate(&state.best, which, value);
        let score = evaluator.evaluate(&params).map_err(|e| Error::Evaluator {
            params: params.to_string(),
            source: Box::new(e),
        })?;
        state.trace.push(TraceEntry {
            sweep,
            round,
            coordinate: which,
            value,
            params,
            score,
            adopted: false,
        });
        let better = match best_value {
            None => true,
            Some((best_score, _, _)) => score > best_score,
        };
        if better {
            best_value = Some((score, value, state.trace.len() - 1));
        }
    }
    if let Some((score, value, trace_idx)) = best_value {
        if score > state.best_score {
            state.best = with_coordinate(&state.best, which, value);
            state.best_score = score;
            state.trace[trace_idx].adopted = true;
            return Ok(true);
        }
    }
    Ok(false)
}

/// Full coordinate ascent from `init`: rounds of four sweeps in fixed
/// order until a round adopts nothing (or the round cap is reached).
pub fn coordinate_search(
    grid: &SearchGrid,
    evaluator: &mut dyn ParamEvaluator,
    init: WeightParams,
) -> Result<SearchState> {
    grid.validate()?;
    init.validate()?;
    if !grid.contains_bounds(&init) {
        return Err(Error::invalid(format!(
            "initial vector ({init}) outside grid bounds"
        )));
    }
    let init_score = evaluator.evaluate(&init).map_err(|e| Error::Evaluator {
        params: init.to_string(),
        source: Box::new(e),
    })?;
    let mut state = SearchState::new(init, init_score);
    let mut sweep = 0;
    for round in 1..=MAX_ROUNDS {
        state.rounds = round;
        let mut adopted_any = false;
        for which in Coordinate::ORDER {
            sweep += 1;
            adopted_any |= sweep_parameter(&mut state, which, grid, evaluator, round, sweep)?;
        }
        if !adopted_any {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Monotone transform of a separable bowl with per-coordinate
    /// optima at (4, 5, 0.3, 1.7); each coordinate's argmax is
    /// independent of the others.
    fn separable(params: &WeightParams) -> Result<f64> {
        let err = (params.age_years as f64 - 4.0).powi(2)
            + (params.decay_lambda - 5.0).powi(2)
            + (params.surface_factor - 0.3).powi(2)
            + (params.round_base - 1.7).powi(2);
        Ok(1.0 / (1.0 + err))
    }

    #[test]
    fn separable_objective_converges_in_one_improving_round() {
        let grid = SearchGrid::default();
        let init = WeightParams::new(5, 5.0, 0.5, 1.3);
        let state = coordinate_search(&grid, &mut separable.clone(), init).unwrap();
        assert!(state.converged);
        assert_eq!(state.best.age_years, 4);
        assert_eq!(state.best.decay_lambda, 5.0);
        assert_eq!(state.best.surface_factor, 0.3);
        assert_eq!(state.best.round_base, 1.7);
        // All adoptions happen in the first round; the second round is
        // the termination certificate.
        assert!(state
            .trace
            .iter()
            .filter(|e| e.adopted)
            .all(|e| e.round == 1));
        assert_eq!(state.rounds, 2);
        let last_round = state.trace.iter().filter(|e| e.round == 2);
        assert!(last_round.clone().count() > 0);
        assert!(last_round.into_iter().all(|e| !e.adopted));
    }

    #[test]
    fn constant_objective_keeps_init_and_stops() {
        let grid = SearchGrid::default();
        let init = WeightParams::new(3, 0.2, 0.5, 1.5);
        let mut constant = |_: &WeightParams| -> Result<f64> { Ok(0.5) };
        let state = coordinate_search(&grid, &mut constant, init).unwrap();
        assert!(state.converged);
        assert_eq!(state.rounds, 1);
        assert_eq!(state.best, init);
        assert!(state.trace.iter().all(|e| !e.adopted));
    }

    #[test]
    fn single_value_grid_adds_one_trace_entry_and_keeps_incumbent() {
        let grid = SearchGrid {
            years: vec![3],
            decay: vec![0.2],
            surface: vec![0.5],
            round_base: vec![1.5],
        };
        let init = WeightParams::new(3, 0.2, 0.5, 1.5);
        let mut evaluator = separable;
        let init_score = separable(&init).unwrap();
        let mut state = SearchState::new(init, init_score);
        let adopted =
            sweep_parameter(&mut state, Coordinate::Surface, &grid, &mut evaluator, 1, 1).unwrap();
        assert!(!adopted);
        assert_eq!(state.trace.len(), 1);
        assert_eq!(state.best, init);
    }

    #[test]
    fn unimodal_sweep_adopts_the_argmax() {
        let grid = SearchGrid::default();
        let init = WeightParams::new(4, 5.0, 0.9, 1.7);
        let mut evaluator =
            |p: &WeightParams| -> Result<f64> { Ok(-(p.surface_factor - 0.3).powi(2)) };
        let init_score = evaluator(&init).unwrap();
        let mut state = SearchState::new(init, init_score);
        let adopted =
            sweep_parameter(&mut state, Coordinate::Surface, &grid, &mut evaluator, 1, 1).unwrap();
        assert!(adopted);
        assert_eq!(state.best.surface_factor, 0.3);
        assert_eq!(state.trace.len(), grid.surface.len());
    }

    #[test]
    fn best_score_weakly_increases_along_adoptions() {
        let grid = SearchGrid::default();
        let init = WeightParams::new(1, 0.1, 0.0, 1.0);
        let state = coordinate_search(&grid, &mut separable.clone(), init).unwrap();
        let mut best = f64::NEG_INFINITY;
        for entry in state.trace.iter().filter(|e| e.adopted) {
            assert!(entry.score > best);
            best = entry.score;
        }
        assert_eq!(best, state.best_score);
    }

    #[test]
    fn final_vector_is_a_coordinatewise_local_optimum() {
        // Non-separable: the surface and round-base terms interact.
        let mut objective = |p: &WeightParams| -> Result<f64> {
            let cross = (p.surface_factor * p.round_base - 0.6).powi(2);
            let rest =
                (p.age_years as f64 - 3.0).powi(2) / 10.0 + (p.decay_lambda - 5.0).powi(2) / 100.0;
            Ok(1.0 / (1.0 + cross + rest))
        };
        let grid = SearchGrid::default();
        let init = WeightParams::new(1, 0.1, 0.5, 1.5);
        let state = coordinate_search(&grid, &mut objective, init).unwrap();
        assert!(state.converged);
        let final_score = objective(&state.best).unwrap();
        for which in Coordinate::ORDER {
            for value in grid_values(&grid, which) {
                let neighbor = with_coordinate(&state.best, which, value);
                assert!(
                    objective(&neighbor).unwrap() <= final_score + 1e-15,
                    "{which} = {value} beats the final vector"
                );
            }
        }
    }

    #[test]
    fn evaluator_failure_reports_offending_params() {
        let grid = SearchGrid::default();
        let init = WeightParams::new(3, 5.0, 0.5, 1.5);
        let mut failing = |p: &WeightParams| -> Result<f64> {
            if p.age_years == 5 {
                Err(Error::invalid("boom"))
            } else {
                Ok(0.1)
            }
        };
        let err = coordinate_search(&grid, &mut failing, init).unwrap_err();
        match err {
            Error::Evaluator { params, .. } => assert!(params.contains("age=5")),
            other => panic!("expected evaluator error, got {other:?}"),
        }
    }

    #[test]
    fn init_outside_grid_bounds_is_rejected() {
        let grid = SearchGrid::default();
        let init = WeightParams::new(9, 5.0, 0.5, 1.5);
        assert!(coordinate_search(&grid, &mut separable.clone(), init).is_err());
    }
}
