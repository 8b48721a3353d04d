//! Bootstrap-of-little-bags variance estimation.
//!
//! Trees are grown in groups that share a half-sample. The dispersion of
//! group-average predictions overstates the sampling variance of the forest
//! by the within-group Monte Carlo noise, so the estimator debiases:
//! `sigma^2 = V_between - V_within / group_size`, floored at a tiny multiple
//! of the outcome variance. The debiasing constant is an operational choice
//! validated empirically through the coverage suite.

use super::{ForestVariant, HonestForest};
use crate::domain::ScorePoint;
use crate::error::{Error, Result};
use crate::numeric::{mean, sample_variance, solve_dense};

/// Which per-tree prediction feeds the variance estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PredictorKind {
    Rf,
    Llf { lambda: f64 },
}

impl PredictorKind {
    pub fn variant(&self) -> ForestVariant {
        match self {
            PredictorKind::Rf => ForestVariant::Rf,
            PredictorKind::Llf { .. } => ForestVariant::Llf,
        }
    }
}

/// The debiased little-bags statistic on raw tree-level predictions laid out
/// group by group: `V_between - V_within / group_size`, where `V_between` is
/// the sample variance of group means and `V_within` the average within-group
/// sample variance. May be negative; callers floor it.
pub fn little_bags_from_predictions(predictions: &[f64], group_size: usize) -> Result<f64> {
    if group_size < 2 {
        return Err(Error::Config(format!(
            "little bags need group size >= 2, got {group_size}"
        )));
    }
    if predictions.is_empty() || !predictions.len().is_multiple_of(group_size) {
        return Err(Error::Config(format!(
            "prediction count {} is not a positive multiple of group size {group_size}",
            predictions.len()
        )));
    }
    let groups = predictions.len() / group_size;
    if groups < 2 {
        return Err(Error::Config(format!(
            "little bags need at least 2 groups, got {groups}"
        )));
    }
    let mut group_means = Vec::with_capacity(groups);
    let mut within = Vec::with_capacity(groups);
    for chunk in predictions.chunks(group_size) {
        group_means.push(mean(chunk));
        within.push(sample_variance(chunk));
    }
    Ok(sample_variance(&group_means) - mean(&within) / group_size as f64)
}

impl HonestForest {
    /// Single-tree prediction at `x`: the leaf mean, or for the local linear
    /// predictor a ridge fit under that tree's leaf weights. A singular
    /// single-tree ridge system (possible at lambda 0 on a degenerate leaf)
    /// falls back to the leaf mean.
    fn tree_prediction(&self, tree_idx: usize, x: &ScorePoint, predictor: PredictorKind) -> Option<f64> {
        let members = self.trees()[tree_idx].root.leaf_members(x.coords());
        if members.is_empty() {
            return None;
        }
        let leaf_mean = members
            .iter()
            .map(|&m| self.data().y(m as usize))
            .sum::<f64>()
            / members.len() as f64;
        match predictor {
            PredictorKind::Rf => Some(leaf_mean),
            PredictorKind::Llf { lambda } => {
                Some(self.leaf_ridge(members, x, lambda).unwrap_or(leaf_mean))
            }
        }
    }

    /// Intercept of the ridge regression under uniform weights on a leaf.
    fn leaf_ridge(&self, members: &[u32], x: &ScorePoint, lambda: f64) -> Option<f64> {
        let d = self.data().dim();
        let p = d + 1;
        let w = 1.0 / members.len() as f64;
        let mut gram = vec![0.0; p * p];
        let mut rhs = vec![0.0; p];
        let mut delta = vec![0.0; d];
        for &m in members {
            let row = self.data().x_row(m as usize);
            for (slot, (&xi, &c)) in delta.iter_mut().zip(row.iter().zip(x.coords())) {
                *slot = xi - c;
            }
            let y = self.data().y(m as usize);
            gram[0] += w;
            rhs[0] += w * y;
            for a in 0..d {
                gram[a + 1] += w * delta[a];
                gram[(a + 1) * p] += w * delta[a];
                rhs[a + 1] += w * delta[a] * y;
                for b in 0..d {
                    gram[(a + 1) * p + (b + 1)] += w * delta[a] * delta[b];
                }
            }
        }
        for a in 1..p {
            gram[a * p + a] += lambda;
        }
        solve_dense(&mut gram, &mut rhs).ok().map(|beta| beta[0])
    }

    /// Bootstrap-of-little-bags variance of the forest prediction at `x`.
    ///
    /// Groups in which any tree lands in an empty leaf are skipped; at least
    /// two usable groups are required.
    pub fn little_bags_variance(&self, x: &ScorePoint, predictor: PredictorKind) -> Result<f64> {
        let ell = self.config().ci_group_size;
        let groups = self.num_trees() / ell;
        if groups < 2 {
            return Err(Error::Config(format!(
                "variance estimation needs at least 2 little bags, got {groups}"
            )));
        }
        let mut usable: Vec<f64> = Vec::with_capacity(self.num_trees());
        for g in 0..groups {
            let mut preds = Vec::with_capacity(ell);
            for b in g * ell..(g + 1) * ell {
                match self.tree_prediction(b, x, predictor) {
                    Some(p) => preds.push(p),
                    None => break,
                }
            }
            if preds.len() == ell {
                usable.extend_from_slice(&preds);
            }
        }
        if usable.len() < 2 * ell {
            return Err(Error::Prediction(
                "fewer than two little bags produced usable predictions".into(),
            ));
        }
        let raw = little_bags_from_predictions(&usable, ell)?;
        let floor = 1e-12 * sample_variance(self.data().ys());
        Ok(raw.max(floor))
    }
}
