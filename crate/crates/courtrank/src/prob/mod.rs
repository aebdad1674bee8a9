//! Victory probability from rank differences: empirical hit rates
//! binned by rank gap, a one-parameter logistic fitted to them, a
//! surface-by-category refinement tree, and ROC/AUC scoring.

mod roc;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Category, MatchStore, Surface};
use crate::error::{Error, Result};
use crate::eval::{evaluate_tournament, Predictor};

pub use roc::{
    mirror_scored, roc_curve, score_predictor, scored_sample, RocPoint, RocResult, ScoreModel,
};

/// One empirical bin: matches with rank gap `diff`, and how many were
/// won by the better-ranked player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiffBin {
    pub diff: u32,
    pub hits: u64,
    pub total: u64,
}

impl DiffBin {
    pub fn rate(&self) -> f64 {
        self.hits as f64 / self.total as f64
    }
}

/// Fit settings: the scale is searched on a bounded interval by dense
/// scan plus golden-section refinement, and sparse bins are dropped as
/// noise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub a_min: f64,
    pub a_max: f64,
    /// Bins with fewer matches than this are excluded from the fit.
    pub min_bin_total: u64,
    /// Coarse scan points across [a_min, a_max].
    pub scan_steps: usize,
    /// Interval width at which the golden-section refinement stops.
    pub refine_tolerance: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            a_min: 1.0,
            a_max: 1000.0,
            min_bin_total: 5,
            scan_steps: 2000,
            refine_tolerance: 1e-6,
        }
    }
}

/// Fitted logistic scale: the probability that the better-ranked player
/// wins a match with rank gap `d` is `1 / (1 + exp(-d / a))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogisticModel {
    pub a: f64,
    /// Count-weighted sum of squared errors at the fitted scale.
    pub fit_residual: f64,
    /// Bins used by the fit.
    pub n_points: usize,
    /// True when the fit ran into the upper bound: flat data carries no
    /// scale information.
    pub degenerate: bool,
}

/// One evaluated match carried into the probability pipeline: the
/// predictor's ranks for winner and loser plus the match context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankedOutcome {
    pub rank_winner: Option<u32>,
    pub rank_loser: Option<u32>,
    pub surface: Surface,
    pub category: Category,
}

impl RankedOutcome {
    /// Rank gap and whether the better-ranked player won, for matches
    /// where both ranks are finite and distinct.
    pub fn gap(&self) -> Option<(u32, bool)> {
        match (self.rank_winner, self.rank_loser) {
            (Some(w), Some(l)) if w != l => Some((w.abs_diff(l), w < l)),
            _ => None,
        }
    }

    /// True when one side can be preferred at all: ranks not equal and
    /// not both absent.
    pub fn better_defined(&self) -> bool {
        match (self.rank_winner, self.rank_loser) {
            (Some(w), Some(l)) => w != l,
            (None, None) => false,
            _ => true,
        }
    }

    /// Whether the better-ranked (or only-ranked) player won.
    pub fn better_won(&self) -> Option<bool> {
        match (self.rank_winner, self.rank_loser) {
            (Some(w), Some(l)) if w < l => Some(true),
            (Some(w), Some(l)) if l < w => Some(false),
            (Some(_), None) => Some(true),
            (None, Some(_)) => Some(false),
            _ => None,
        }
    }
}

/// Group finite-rank outcomes by rank gap. Matches with an absent rank
/// or a zero gap are excluded; one bin per observed gap, ascending.
pub fn bin_hit_rates(outcomes: &[RankedOutcome]) -> Vec<DiffBin> {
    let mut bins: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    for outcome in outcomes {
        if let Some((diff, better_won)) = outcome.gap() {
            let entry = bins.entry(diff).or_default();
            entry.1 += 1;
            if better_won {
                entry.0 += 1;
            }
        }
    }
    bins.into_iter()
        .map(|(diff, (hits, total))| DiffBin { diff, hits, total })
        .collect()
}

/// P(better-ranked player wins) at rank gap `d` under scale `a`.
fn p_gap(d: f64, a: f64) -> f64 {
    1.0 / (1.0 + (-d / a).exp())
}

fn weighted_sse(bins: &[DiffBin], a: f64) -> f64 {
    bins.iter()
        .map(|b| {
            let err = b.rate() - p_gap(b.diff as f64, a);
            b.total as f64 * err * err
        })
        .sum()
}

/// Fit the logistic scale to binned rates by count-weighted least
/// squares: a dense scan over [a_min, a_max] followed by golden-section
/// refinement around the best scan point. Deterministic by
/// construction.
pub fn fit_logistic(bins: &[DiffBin], config: &FitConfig) -> Result<LogisticModel> {
    let used: Vec<DiffBin> = bins
        .iter()
        .filter(|b| b.total >= config.min_bin_total)
        .copied()
        .collect();
    let distinct = {
        let mut diffs: Vec<u32> = used.iter().map(|b| b.diff).collect();
        diffs.sort_unstable();
        diffs.dedup();
        diffs.len()
    };
    if used.len() < 3 || distinct < 2 {
        return Err(Error::InsufficientBins {
            bins: used.len(),
            distinct,
        });
    }

    let steps = config.scan_steps.max(2);
    let step = (config.a_max - config.a_min) / steps as f64;
    let mut best_a = config.a_min;
    let mut best_sse = f64::INFINITY;
    for i in 0..=steps {
        let a = config.a_min + step * i as f64;
        let sse = weighted_sse(&used, a);
        if sse < best_sse {
            best_sse = sse;
            best_a = a;
        }
    }

    // Golden-section refinement on the bracketing interval.
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = (best_a - step).max(config.a_min);
    let mut hi = (best_a + step).min(config.a_max);
    let mut c = hi - golden * (hi - lo);
    let mut d = lo + golden * (hi - lo);
    let mut fc = weighted_sse(&used, c);
    let mut fd = weighted_sse(&used, d);
    while hi - lo > config.refine_tolerance {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - golden * (hi - lo);
            fc = weighted_sse(&used, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + golden * (hi - lo);
            fd = weighted_sse(&used, d);
        }
    }
    let a = (lo + hi) / 2.0;
    let residual = weighted_sse(&used, a);
    Ok(LogisticModel {
        a,
        fit_residual: residual,
        n_points: used.len(),
        degenerate: a >= config.a_max - (config.a_max - config.a_min) / steps as f64,
    })
}

/// Victory probability for the player ranked `r1` against the player
/// ranked `r2`: `1 / (1 + exp((r1 - r2) / a))`. An absent rank loses
/// with certainty against a present one; two absent ranks are a coin
/// flip.
///
/// The worse-ranked side is computed as one minus the better side, so
/// the two perspectives of a match sum to exactly 1.
pub fn p_victory(r1: Option<u32>, r2: Option<u32>, model: &LogisticModel) -> f64 {
    match (r1, r2) {
        (Some(a), Some(b)) => {
            if a <= b {
                let delta = a as f64 - b as f64;
                1.0 / (1.0 + (delta / model.a).exp())
            } else {
                1.0 - p_victory(r2, r1, model)
            }
        }
        (Some(_), None) => 1.0,
        (None, Some(_)) => 0.0,
        (None, None) => 0.5,
    }
}

/// Per-leaf model in the surface-by-category tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LeafModel {
    Fitted(LogisticModel),
    /// Too few matches in the leaf; the global model answers.
    Fallback,
}

/// Decision tree keyed on (surface, category): each leaf either carries
/// its own fitted scale or falls back to the global model. Every pair
/// resolves to exactly one model.
#[derive(Debug, Clone, Serialize)]
pub struct ProbTree {
    pub global: LogisticModel,
    pub leaves: BTreeMap<(Surface, Category), LeafModel>,
    pub min_matches_per_leaf: usize,
}

impl ProbTree {
    pub fn resolve(&self, surface: Surface, category: Category) -> &LogisticModel {
        match self.leaves.get(&(surface, category)) {
            Some(LeafModel::Fitted(model)) => model,
            _ => &self.global,
        }
    }
}

/// Fit the global model plus one leaf per (surface, category) with at
/// least `min_matches_per_leaf` usable matches; under-sampled or
/// unfittable leaves fall back to the global model.
pub fn build_tree(
    outcomes: &[RankedOutcome],
    min_matches_per_leaf: usize,
    config: &FitConfig,
) -> Result<ProbTree> {
    let global = fit_logistic(&bin_hit_rates(outcomes), config)?;
    let mut leaves = BTreeMap::new();
    for surface in Surface::ALL {
        for category in Category::ALL {
            let leaf_outcomes: Vec<RankedOutcome> = outcomes
                .iter()
                .filter(|o| o.surface == surface && o.category == category && o.gap().is_some())
                .copied()
                .collect();
            let leaf = if leaf_outcomes.len() >= min_matches_per_leaf {
                match fit_logistic(&bin_hit_rates(&leaf_outcomes), config) {
                    Ok(model) => LeafModel::Fitted(model),
                    Err(Error::InsufficientBins { .. }) => LeafModel::Fallback,
                    Err(e) => return Err(e),
                }
            } else {
                LeafModel::Fallback
            };
            leaves.insert((surface, category), leaf);
        }
    }
    Ok(ProbTree {
        global,
        leaves,
        min_matches_per_leaf,
    })
}

/// Evaluate the predictor over the years and return each completed
/// match's ranks and context, in tournament order.
pub fn ranked_outcomes(
    store: &MatchStore,
    years: &[i32],
    predictor: &Predictor,
) -> Result<Vec<RankedOutcome>> {
    use rayon::prelude::*;
    let ids = store.tournaments_in_years(years);
    let evals = ids
        .par_iter()
        .map(|id| evaluate_tournament(store, *id, predictor))
        .collect::<Result<Vec<_>>>()?;
    let mut outcomes = Vec::new();
    for eval in &evals {
        let tournament = store
            .tournament(eval.tournament_id)
            .expect("evaluated tournament exists");
        for p in &eval.predictions {
            outcomes.push(RankedOutcome {
                rank_winner: p.rank_winner,
                rank_loser: p.rank_loser,
                surface: tournament.surface,
                category: tournament.category,
            });
        }
    }
    Ok(outcomes)
}

/// Structured text export: global scale, per-leaf scales or fallback
/// markers, and the bin table the global fit saw.
pub fn model_report(model: &LogisticModel, tree: Option<&ProbTree>, bins: &[DiffBin]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "global\ta={:.6}\tresidual={:.6}\tbins={}\tdegenerate={}\n",
        model.a, model.fit_residual, model.n_points, model.degenerate
    ));
    if let Some(tree) = tree {
        out.push_str(&format!("leaf_threshold\t{}\n", tree.min_matches_per_leaf));
        for ((surface, category), leaf) in &tree.leaves {
            match leaf {
                LeafModel::Fitted(m) => out.push_str(&format!(
                    "leaf\t{surface}\t{category}\ta={:.6}\tresidual={:.6}\tbins={}\tdegenerate={}\n",
                    m.a, m.fit_residual, m.n_points, m.degenerate
                )),
                LeafModel::Fallback => {
                    out.push_str(&format!("leaf\t{surface}\t{category}\tfallback\n"))
                }
            }
        }
    }
    out.push_str("# bins\ndiff\thits\ttotal\trate\n");
    for b in bins {
        out.push_str(&format!(
            "{}\t{}\t{}\t{:.6}\n",
            b.diff,
            b.hits,
            b.total,
            b.rate()
        ));
    }
    out
}

pub fn write_model_report(
    model: &LogisticModel,
    tree: Option<&ProbTree>,
    bins: &[DiffBin],
    path: &Path,
) -> Result<()> {
    fs::write(path, model_report(model, tree, bins)).map_err(|e| Error::io(path, e))
}
