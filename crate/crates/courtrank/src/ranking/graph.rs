//! Directed multigraph of match results. Parallel edges are preserved:
//! beating the same opponent twice contributes two edges.

use std::collections::HashMap;

use crate::dataset::{MatchRecord, MatchStore, PlayerId, TournamentId};
use crate::error::{Error, Result};
use crate::ranking::weights::edge_weight;
use crate::ranking::{WeightParams, WeightedEdge};

/// One edge in node-index space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub provenance: u32,
}

/// Weighted directed multigraph over the players of one time window.
#[derive(Debug, Clone, Default)]
pub struct MatchGraph {
    target: TournamentId,
    players: Vec<PlayerId>,
    index: HashMap<PlayerId, usize>,
    edges: Vec<GraphEdge>,
}

impl MatchGraph {
    pub fn new(target: TournamentId) -> Self {
        MatchGraph {
            target,
            ..Default::default()
        }
    }

    pub fn target_tournament(&self) -> TournamentId {
        self.target
    }

    pub fn node_count(&self) -> usize {
        self.players.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Players in node order (first appearance).
    pub fn players(&self) -> &[PlayerId] {
        &self.players
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn node_of(&self, player: PlayerId) -> Option<usize> {
        self.index.get(&player).copied()
    }

    fn intern(&mut self, player: PlayerId) -> usize {
        if let Some(idx) = self.index.get(&player) {
            return *idx;
        }
        let idx = self.players.len();
        self.players.push(player);
        self.index.insert(player, idx);
        idx
    }

    /// Add one loser-to-winner edge; both endpoints become nodes.
    pub fn add_edge(&mut self, edge: WeightedEdge) -> Result<()> {
        if !edge.weight.is_finite() || edge.weight <= 0.0 {
            return Err(Error::invalid(format!(
                "edge weight must be positive and finite, got {}",
                edge.weight
            )));
        }
        let from = self.intern(edge.from);
        let to = self.intern(edge.to);
        self.edges.push(GraphEdge {
            from,
            to,
            weight: edge.weight,
            provenance: edge.provenance,
        });
        Ok(())
    }

    /// Sum of outgoing edge weights per node; zero marks a dangling
    /// node (a player who never lost in the window).
    pub fn out_weight_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.players.len()];
        for e in &self.edges {
            sums[e.from] += e.weight;
        }
        sums
    }
}

/// Build the window graph for one target tournament: one weighted edge
/// per completed window match, in window order.
pub fn build_graph(
    store: &MatchStore,
    window: &[&MatchRecord],
    target: TournamentId,
    params: &WeightParams,
) -> Result<MatchGraph> {
    params.validate()?;
    let target_tournament = store
        .tournament(target)
        .ok_or_else(|| Error::UnknownTournament {
            name: format!("id {target}"),
        })?;
    let target_start = store
        .tournament_start(target)
        .ok_or_else(|| Error::UnknownTournament {
            name: format!("id {target}"),
        })?;
    let mut graph = MatchGraph::new(target);
    for m in window {
        let mt = store.tournament(m.tournament_id).ok_or_else(|| {
            Error::integrity(format!(
                "match {} references missing tournament {}",
                m.match_id, m.tournament_id
            ))
        })?;
        graph.add_edge(edge_weight(m, mt, target_tournament, target_start, params))?;
    }
    Ok(graph)
}
