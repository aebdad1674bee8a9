//! Weighted PageRank by power iteration, and rating-table assembly.

use crate::dataset::MatchStore;
use crate::error::{Error, Result};
use crate::ranking::{MatchGraph, PageRankConfig, RatingEntry, RatingTable};

/// Power iteration on the weighted transition: from node `v` the walk
/// moves to `u` with probability proportional to the total weight of
/// `v -> u` edges; dangling nodes teleport uniformly. Scores sum to 1.
///
/// Returns scores in graph node order. Errors if the L1 change has not
/// dropped below the tolerance within `max_iterations`.
pub fn compute_pagerank(graph: &MatchGraph, config: &PageRankConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let n = graph.node_count();
    if n == 0 {
        return Ok(Vec::new());
    }
    let n_f = n as f64;
    let d = config.damping;

    let out_sums = graph.out_weight_sums();
    // Per-edge transition probability, fixed across iterations.
    let trans: Vec<f64> = graph
        .edges()
        .iter()
        .map(|e| e.weight / out_sums[e.from])
        .collect();
    let dangling: Vec<usize> = (0..n).filter(|i| out_sums[*i] == 0.0).collect();

    let mut scores = vec![1.0 / n_f; n];
    let mut next = vec![0.0; n];
    for _ in 0..config.max_iterations {
        let dangling_mass: f64 = dangling.iter().map(|i| scores[*i]).sum();
        let base = (1.0 - d) / n_f + d * dangling_mass / n_f;
        next.fill(base);
        for (e, p) in graph.edges().iter().zip(trans.iter()) {
            next[e.to] += d * scores[e.from] * p;
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
            return Ok(scores);
        }
    }

    let residual: f64 = scores
        .iter()
        .zip(next.iter())
        .map(|(a, b)| (a - b).abs())
        .sum();
    Err(Error::NoConvergence {
        iterations: config.max_iterations,
        residual,
        tolerance: config.tolerance,
    })
}

/// Rank the graph's players by PageRank score, descending. Exact score
/// ties are broken by canonical name ascending, so reruns produce an
/// identical table.
pub fn rank_players(
    graph: &MatchGraph,
    store: &MatchStore,
    config: &PageRankConfig,
) -> Result<RatingTable> {
    let scores = compute_pagerank(graph, config)?;
    let mut rows: Vec<(f64, &str, u32)> = graph
        .players()
        .iter()
        .zip(scores.iter())
        .map(|(player, score)| (*score, store.player_name(*player), *player))
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(RatingTable {
        target_tournament_id: graph.target_tournament(),
        entries: rows
            .into_iter()
            .enumerate()
            .map(|(i, (score, _, player_id))| RatingEntry {
                position: i as u32 + 1,
                player_id,
                score,
            })
            .collect(),
    })
}
