//! ROC curve and AUROC. The trapezoidal area is cross-checked on every
//! call against the pairwise concordance statistic (the probability a
//! random hit outscores a random miss, ties counted half), computed via
//! midranks; disagreement is an error, never a silent result.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::dataset::MatchStore;
use crate::error::{Error, Result};
use crate::eval::Predictor;
use crate::fmt::significant;
use crate::prob::{p_victory, ranked_outcomes, LogisticModel, ProbTree, RankedOutcome};

/// One ROC point: rates at and above `threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocResult {
    /// Points in descending-threshold order: (0,0) first, (1,1) last.
    pub points: Vec<RocPoint>,
    /// Trapezoidal area under the curve.
    pub auroc: f64,
    /// The pairwise statistic the area was verified against.
    pub pairwise: f64,
}

impl RocResult {
    /// Tab-separated `threshold\tfpr\ttpr` rows plus a final auroc line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("threshold\tfpr\ttpr\n");
        for p in &self.points {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                significant(p.threshold, 10),
                significant(p.fpr, 10),
                significant(p.tpr, 10)
            ));
        }
        out.push_str(&format!("auroc\t{}\n", significant(self.auroc, 10)));
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

/// Pairwise concordance via midranks: fraction of (positive, negative)
/// pairs where the positive outscores the negative, plus half the tied
/// pairs. O(n log n) and exactly the brute-force pair count.
fn pairwise_statistic(scored: &[(bool, f64)]) -> f64 {
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|a, b| scored[*a].1.total_cmp(&scored[*b].1));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scored[order[j]].1 == scored[order[i]].1 {
            j += 1;
        }
        // Midrank for the tie group spanning sorted positions i..j.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if scored[idx].0 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let positives = scored.iter().filter(|(label, _)| *label).count() as f64;
    let negatives = scored.len() as f64 - positives;
    (rank_sum_pos - positives * (positives + 1.0) / 2.0) / (positives * negatives)
}

/// Standard threshold sweep over the distinct scores, descending.
/// Needs at least one positive and one negative label.
pub fn roc_curve(scored: &[(bool, f64)]) -> Result<RocResult> {
    let positives = scored.iter().filter(|(label, _)| *label).count();
    let negatives = scored.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClassRoc);
    }
    if scored.iter().any(|(_, s)| s.is_nan()) {
        return Err(Error::invalid("NaN score in ROC input"));
    }

    let mut sorted: Vec<(bool, f64)> = scored.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let threshold = sorted[i].1;
        while i < sorted.len() && sorted[i].1 == threshold {
            if sorted[i].0 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
    }

    let auroc: f64 = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum();
    let pairwise = pairwise_statistic(scored);
    if (auroc - pairwise).abs() > 1e-9 {
        return Err(Error::AurocMismatch {
            trapezoid: auroc,
            pairwise,
        });
    }
    Ok(RocResult {
        points,
        auroc,
        pairwise,
    })
}

/// Mirrored sample: every tuple is duplicated with the opposite label
/// and the complementary score.
pub fn mirror_scored(scored: &[(bool, f64)]) -> Vec<(bool, f64)> {
    let mut out = Vec::with_capacity(scored.len() * 2);
    for (label, score) in scored {
        out.push((*label, *score));
        out.push((!*label, 1.0 - *score));
    }
    out
}

/// Which fitted model scores each match.
pub enum ScoreModel<'a> {
    Global(&'a LogisticModel),
    Tree(&'a ProbTree),
}

/// The (label, score) sample behind the ROC: per match, the label is
/// whether the better-ranked player won and the score is P(better wins)
/// from the resolved model. Matches where neither player can be
/// preferred (equal or doubly absent ranks) carry no label and are
/// skipped.
pub fn scored_sample(outcomes: &[RankedOutcome], model: &ScoreModel<'_>) -> Vec<(bool, f64)> {
    let mut scored = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let Some(label) = o.better_won() else {
            continue;
        };
        let resolved = match model {
            ScoreModel::Global(m) => m,
            ScoreModel::Tree(t) => t.resolve(o.surface, o.category),
        };
        let (better, worse) = match (o.rank_winner, o.rank_loser) {
            (Some(w), Some(l)) if w < l => (Some(w), Some(l)),
            (Some(w), Some(l)) => (Some(l), Some(w)),
            (Some(w), None) => (Some(w), None),
            (None, Some(l)) => (Some(l), None),
            (None, None) => unreachable!("better_won filtered this"),
        };
        scored.push((label, p_victory(better, worse, resolved)));
    }
    scored
}

/// Backtest the predictor over the years and feed the scored sample
/// into the ROC.
pub fn score_predictor(
    store: &MatchStore,
    years: &[i32],
    predictor: &Predictor,
    model: &ScoreModel<'_>,
) -> Result<RocResult> {
    let outcomes = ranked_outcomes(store, years, predictor)?;
    roc_curve(&scored_sample(&outcomes, model))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfectly_separated_scores_give_area_one() {
        let scored = vec![(true, 0.9), (true, 0.8), (false, 0.2), (false, 0.1)];
        let roc = roc_curve(&scored).unwrap();
        assert_eq!(roc.auroc, 1.0);
        let first = roc.points.first().unwrap();
        let last = roc.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    }

    #[test]
    fn all_tied_scores_give_half() {
        let scored = vec![(true, 0.5), (false, 0.5), (true, 0.5), (false, 0.5)];
        let roc = roc_curve(&scored).unwrap();
        assert!((roc.auroc - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(matches!(
            roc_curve(&[(true, 0.5), (true, 0.7)]),
            Err(Error::SingleClassRoc)
        ));
        assert!(roc_curve(&[]).is_err());
    }

    /// Brute force over all (positive, negative) pairs.
    fn pairwise_brute(scored: &[(bool, f64)]) -> f64 {
        let pos: Vec<f64> = scored.iter().filter(|(l, _)| *l).map(|(_, s)| *s).collect();
        let neg: Vec<f64> = scored
            .iter()
            .filter(|(l, _)| !*l)
            .map(|(_, s)| *s)
            .collect();
        let mut count = 0.0;
        for p in &pos {
            for n in &neg {
                if p > n {
                    count += 1.0;
                } else if p == n {
                    count += 0.5;
                }
            }
        }
        count / (pos.len() as f64 * neg.len() as f64)
    }

    #[test]
    fn six_points_match_the_pair_count() {
        let scored = vec![
            (true, 0.9),
            (false, 0.7),
            (true, 0.7),
            (true, 0.55),
            (false, 0.55),
            (false, 0.2),
        ];
        let roc = roc_curve(&scored).unwrap();
        let brute = pairwise_brute(&scored);
        assert!(
            (roc.auroc - brute).abs() < 1e-12,
            "{} vs {brute}",
            roc.auroc
        );
    }

    #[test]
    fn curve_is_monotone_in_both_axes() {
        let scored = vec![
            (true, 0.91),
            (false, 0.91),
            (true, 0.8),
            (false, 0.44),
            (true, 0.44),
            (false, 0.3),
            (true, 0.3),
            (false, 0.3),
        ];
        let roc = roc_curve(&scored).unwrap();
        for w in roc.points.windows(2) {
            assert!(w[1].fpr >= w[0].fpr);
            assert!(w[1].tpr >= w[0].tpr);
            assert!(w[1].threshold < w[0].threshold);
        }
    }

    #[test]
    fn mirroring_doubles_the_sample_and_centers_it() {
        let scored = vec![(true, 0.9), (false, 0.4)];
        let mirrored = mirror_scored(&scored);
        assert_eq!(mirrored.len(), 4);
        assert!(mirrored.contains(&(false, 1.0 - 0.9)));
        assert!(mirrored.contains(&(true, 1.0 - 0.4)));
        let roc = roc_curve(&mirrored).unwrap();
        assert!(roc.auroc >= 0.0 && roc.auroc <= 1.0);
    }
}
