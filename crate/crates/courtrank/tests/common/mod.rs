//! Shared fixture builders and independent oracles for the integration
//! and acceptance suites.

#![allow(dead_code)]

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use courtrank::dataset::{build_store, IngestConfig, MatchStore, RawMatchRow};
use courtrank::ranking::{MatchGraph, PageRankConfig, WeightedEdge};

#[allow(clippy::too_many_arguments)]
pub fn raw_row(
    tournament: &str,
    series: &str,
    surface: &str,
    date: NaiveDate,
    round: &str,
    winner: &str,
    loser: &str,
    winner_rank: Option<u32>,
    loser_rank: Option<u32>,
) -> RawMatchRow {
    RawMatchRow {
        source_file: "fixture.csv".to_string(),
        line: 0,
        tournament: tournament.to_string(),
        series: series.to_string(),
        location: None,
        court: None,
        surface: surface.to_string(),
        round: round.to_string(),
        best_of: Some(3),
        date,
        winner: winner.to_string(),
        loser: loser.to_string(),
        winner_rank,
        loser_rank,
        set_scores: vec![(6, 3), (6, 2)],
        comment: None,
        odds_winner: None,
        odds_loser: None,
    }
}

pub fn player_name(i: usize) -> String {
    format!("P{i:03} X.")
}

/// Random multi-year fixture: `events_per_year` tournaments per year,
/// random pairings among `players`, every match completed. Official
/// ranks are a fixed shuffle per player so the official predictor has
/// something to chew on.
pub fn random_rows(
    seed: u64,
    years: &[i32],
    events_per_year: usize,
    players: usize,
    matches_per_event: usize,
) -> Vec<RawMatchRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let series = [
        "International",
        "International Gold",
        "Masters",
        "Grand Slam",
        "Masters Cup",
    ];
    let surfaces = ["Hard", "Clay", "Grass"];
    let rounds = ["R32", "R16", "QF", "SF", "F"];
    // A fixed notion of player strength drives both outcomes and ranks.
    let mut strength: Vec<usize> = (0..players).collect();
    for i in (1..strength.len()).rev() {
        let j = rng.gen_range(0..=i);
        strength.swap(i, j);
    }
    let mut rows = Vec::new();
    for (yi, year) in years.iter().enumerate() {
        for event in 0..events_per_year {
            let name = format!("Event {event}");
            let series = series[(event + yi) % series.len()];
            let surface = surfaces[event % surfaces.len()];
            let month = 1 + (event * 10 / events_per_year.max(1)) % 10;
            let base_day = 1 + rng.gen_range(0..10);
            for m in 0..matches_per_event {
                let a = rng.gen_range(0..players);
                let mut b = rng.gen_range(0..players);
                while b == a {
                    b = rng.gen_range(0..players);
                }
                // The stronger player usually wins.
                let (mut w, mut l) = if strength[a] < strength[b] {
                    (a, b)
                } else {
                    (b, a)
                };
                if rng.gen_range(0..10) < 3 {
                    std::mem::swap(&mut w, &mut l);
                }
                let date =
                    NaiveDate::from_ymd_opt(*year, month as u32, (base_day + m / 8).min(28) as u32)
                        .unwrap();
                rows.push(raw_row(
                    &name,
                    series,
                    surface,
                    date,
                    rounds[m % rounds.len()],
                    &player_name(w),
                    &player_name(l),
                    Some(strength[w] as u32 + 1),
                    Some(strength[l] as u32 + 1),
                ));
            }
        }
    }
    rows
}

pub fn store_from(rows: &[RawMatchRow]) -> MatchStore {
    build_store(rows, &IngestConfig::default()).expect("fixture store builds")
}

/// Random weighted digraph on up to `max_nodes` nodes as a MatchGraph.
pub fn random_weighted_graph(seed: u64, max_nodes: usize) -> MatchGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_nodes);
    let edges = rng.gen_range(1..=(n * (n - 1)).max(1));
    let mut graph = MatchGraph::new(1);
    for k in 0..edges {
        let from = rng.gen_range(0..n) as u32 + 1;
        let mut to = rng.gen_range(0..n) as u32 + 1;
        while to == from {
            to = rng.gen_range(0..n) as u32 + 1;
        }
        graph
            .add_edge(WeightedEdge {
                from,
                to,
                weight: rng.gen_range(0.05..3.0),
                provenance: k as u32 + 1,
            })
            .unwrap();
    }
    graph
}

/// Exact stationary distribution of the damped walk, by dense linear
/// solve: an independent route to the same quantity as the power
/// iteration.
pub fn dense_stationary(graph: &MatchGraph, config: &PageRankConfig) -> Vec<f64> {
    let n = graph.node_count();
    if n == 0 {
        return Vec::new();
    }
    let d = config.damping;
    let out_sums = graph.out_weight_sums();
    // Row-stochastic walk matrix with uniform dangling rows.
    let mut walk = DMatrix::zeros(n, n);
    for i in 0..n {
        if out_sums[i] == 0.0 {
            for j in 0..n {
                walk[(i, j)] = 1.0 / n as f64;
            }
        }
    }
    for e in graph.edges() {
        walk[(e.from, e.to)] += e.weight / out_sums[e.from];
    }
    // G = (1-d)/n * ones + d * walk; solve pi^T G = pi^T with sum(pi)=1.
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let g_ji = (1.0 - d) / n as f64 + d * walk[(j, i)];
            a[(i, j)] = g_ji - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let solution = a.lu().solve(&b).expect("stationary system is solvable");
    solution.iter().copied().collect()
}

/// Reference PageRank that knows nothing about weights: every edge
/// counts one. Same damping and dangling conventions.
pub fn unweighted_reference(graph: &MatchGraph, config: &PageRankConfig) -> Vec<f64> {
    let n = graph.node_count();
    if n == 0 {
        return Vec::new();
    }
    let n_f = n as f64;
    let d = config.damping;
    let mut out_counts = vec![0.0f64; n];
    for e in graph.edges() {
        out_counts[e.from] += 1.0;
    }
    let mut scores = vec![1.0 / n_f; n];
    let mut next = vec![0.0; n];
    for _ in 0..config.max_iterations {
        let dangling: f64 = (0..n)
            .filter(|i| out_counts[*i] == 0.0)
            .map(|i| scores[i])
            .sum();
        let base = (1.0 - d) / n_f + d * dangling / n_f;
        next.fill(base);
        for e in graph.edges() {
            next[e.to] += d * scores[e.from] * (1.0 / out_counts[e.from]);
        }
        let residual: f64 = scores
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut scores, &mut next);
        if residual < config.tolerance {
            let total: f64 = scores.iter().sum();
            for s in &mut scores {
                *s /= total;
            }
            return scores;
        }
    }
    panic!("reference iteration did not converge");
}
