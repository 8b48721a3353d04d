//! Honest subsampled regression forests and local linear forests.
//!
//! Trees are grown on random subsamples split into an I-half that places the
//! splits and a disjoint J-half that populates the leaves (honesty). Trees
//! are grouped into little bags that share a half-sample of the training
//! data, which is what the bootstrap-of-little-bags variance estimator needs.
//! All per-tree randomness derives from (seed, tree index), so fits are
//! bit-identical for any thread count.

mod predict;
mod tree;
mod variance;

pub use tree::{grow_tree, TreeNode};
pub use variance::{little_bags_from_predictions, PredictorKind};

use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::seeding::rng_from;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const HALF_SAMPLE_STREAM: u64 = 0xBA6;
const TREE_STREAM: u64 = 0x73EE;

/// Which estimator family a forest serves; selects the subsample exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestVariant {
    Rf,
    Llf,
}

/// Node splitting criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// Greedy variance reduction on raw outcomes.
    Cart,
    /// Variance reduction on the residuals of a per-node ridge regression,
    /// matching how local linear forests split.
    RidgeResidual,
}

/// Ridge penalty: a fixed value or grid selection by weighted leave-one-out
/// error at the prediction point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum RidgeLambda {
    Fixed(f64),
    Auto,
}

/// Fixed ridge penalty used when none is configured, and as the split
/// penalty under `RidgeLambda::Auto`.
pub const DEFAULT_RIDGE_LAMBDA: f64 = 0.1;
/// Candidate penalties for `RidgeLambda::Auto`.
pub const RIDGE_LAMBDA_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    /// Number of trees B; must be a multiple of `ci_group_size`.
    pub num_trees: usize,
    /// Features considered per split.
    pub mtry: usize,
    /// Minimum estimation-half observations per child.
    pub min_node_size: usize,
    /// Maximum split imbalance: each child keeps at least this fraction of
    /// the node's split-half observations.
    pub alpha: f64,
    /// Fraction of each subsample used to place splits.
    pub honesty_fraction: f64,
    /// Scaling constant c applied to ceil(n^beta) when sizing subsamples.
    pub c_scale: f64,
    pub split_rule: SplitRule,
    pub ridge_lambda: RidgeLambda,
    /// Little-bag size (trees per shared half-sample).
    pub ci_group_size: usize,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            num_trees: 2000,
            mtry: 1,
            min_node_size: 5,
            alpha: 0.05,
            honesty_fraction: 0.5,
            c_scale: 0.4,
            split_rule: SplitRule::Cart,
            ridge_lambda: RidgeLambda::Fixed(DEFAULT_RIDGE_LAMBDA),
            ci_group_size: 2,
            seed: 0,
        }
    }
}

impl ForestConfig {
    /// Defaults tuned for local linear forests: ridge-residual splits.
    pub fn llf_default() -> Self {
        Self { split_rule: SplitRule::RidgeResidual, ..Self::default() }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.num_trees == 0 {
            return Err(Error::Config("num_trees must be positive".into()));
        }
        if self.ci_group_size < 2 {
            return Err(Error::Config("ci_group_size must be at least 2".into()));
        }
        if !self.num_trees.is_multiple_of(self.ci_group_size) {
            return Err(Error::Config(format!(
                "num_trees ({}) must be divisible by ci_group_size ({})",
                self.num_trees, self.ci_group_size
            )));
        }
        if self.mtry == 0 || self.mtry > dim {
            return Err(Error::Config(format!(
                "mtry must lie in [1, {dim}], got {}",
                self.mtry
            )));
        }
        if self.min_node_size == 0 {
            return Err(Error::Config("min_node_size must be at least 1".into()));
        }
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha >= 0.5 {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 0.5), got {}",
                self.alpha
            )));
        }
        if !self.honesty_fraction.is_finite()
            || self.honesty_fraction <= 0.0
            || self.honesty_fraction >= 1.0
        {
            return Err(Error::Config(format!(
                "honesty_fraction must lie in (0,1), got {}",
                self.honesty_fraction
            )));
        }
        if !(0.05..=0.5).contains(&self.c_scale) {
            return Err(Error::Config(format!(
                "c_scale must lie in [0.05, 0.5], got {}",
                self.c_scale
            )));
        }
        if let RidgeLambda::Fixed(v) = self.ridge_lambda {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Config(format!(
                    "ridge lambda must be a nonnegative finite value, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// The ridge penalty used when growing ridge-residual splits.
    pub(crate) fn split_lambda(&self) -> f64 {
        match self.ridge_lambda {
            RidgeLambda::Fixed(v) => v,
            RidgeLambda::Auto => DEFAULT_RIDGE_LAMBDA,
        }
    }
}

/// Lower bound on the subsample exponent beta for the requested family.
pub fn beta_exponent(d: usize, mtry: usize, alpha: f64, variant: ForestVariant) -> Result<f64> {
    if d == 0 || mtry == 0 || mtry > d {
        return Err(Error::Config(format!("mtry must lie in [1, {d}], got {mtry}")));
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 0.5 {
        return Err(Error::Config(format!("alpha must lie in (0, 0.5), got {alpha}")));
    }
    let ratio_rf = (mtry as f64 * (1.0 - alpha).ln()) / (d as f64 * alpha.ln());
    Ok(match variant {
        ForestVariant::Rf => 1.0 / (1.0 + ratio_rf),
        ForestVariant::Llf => {
            let ratio = (d as f64 / (1.3 * mtry as f64)) * (alpha.ln() / (1.0 - alpha).ln());
            1.0 - 1.0 / (1.0 + ratio)
        }
    })
}

/// Subsample size: min(n-1, round(c * ceil(n^beta))), with `round` half away
/// from zero.
pub fn subsample_size(
    n: usize,
    d: usize,
    mtry: usize,
    alpha: f64,
    c: f64,
    variant: ForestVariant,
) -> Result<usize> {
    if n < 2 {
        return Err(Error::Config(format!("need at least 2 observations, got {n}")));
    }
    if !(0.05..=0.5).contains(&c) {
        return Err(Error::Config(format!("c must lie in [0.05, 0.5], got {c}")));
    }
    let beta = beta_exponent(d, mtry, alpha, variant)?;
    let scaled = (c * (n as f64).powf(beta).ceil()).round() as usize;
    Ok(scaled.min(n - 1))
}

/// A grown tree plus its honesty bookkeeping.
#[derive(Clone, Debug)]
pub(crate) struct Tree {
    pub root: TreeNode,
    /// Rows used to place splits (I-half).
    pub split_half: Vec<u32>,
    /// Rows available to leaves (J-half).
    pub est_half: Vec<u32>,
}

/// An immutable fitted forest; prediction and variance estimation are
/// read-only and safe to run concurrently.
#[derive(Clone, Debug)]
pub struct HonestForest {
    data: Arc<Dataset>,
    config: ForestConfig,
    variant: ForestVariant,
    subsample: usize,
    trees: Vec<Tree>,
}

impl HonestForest {
    /// Grows `config.num_trees` honest trees on `data`. The subsample size
    /// comes from [`subsample_size`] for the given variant, clamped to the
    /// little-bag half-sample size.
    pub fn fit(data: &Dataset, config: &ForestConfig, variant: ForestVariant) -> Result<Self> {
        config.validate(data.dim())?;
        let n = data.n();
        if n < 2 * config.min_node_size {
            return Err(Error::Config(format!(
                "forest needs at least {} observations, got {n}",
                2 * config.min_node_size
            )));
        }
        let s = subsample_size(n, data.dim(), config.mtry, config.alpha, config.c_scale, variant)?;
        let half_size = n.div_ceil(2);
        let s = s.min(half_size).max(2);

        let groups = config.num_trees / config.ci_group_size;
        let halves: Vec<Vec<u32>> = (0..groups)
            .map(|g| {
                let mut rng = rng_from(config.seed, &[HALF_SAMPLE_STREAM, g as u64]);
                rand::seq::index::sample(&mut rng, n, half_size)
                    .iter()
                    .map(|i| i as u32)
                    .collect()
            })
            .collect();

        let data = Arc::new(data.clone());
        let split_lambda = config.split_lambda();
        let trees: Result<Vec<Tree>> = (0..config.num_trees)
            .into_par_iter()
            .map(|b| {
                let half = &halves[b / config.ci_group_size];
                let mut rng = rng_from(config.seed, &[TREE_STREAM, b as u64]);
                let subsample: Vec<u32> = rand::seq::index::sample(&mut rng, half.len(), s)
                    .iter()
                    .map(|k| half[k])
                    .collect();
                tree::grow(&data, subsample, config, split_lambda, &mut rng)
            })
            .collect();

        Ok(Self { data, config: *config, variant, subsample: s, trees: trees? })
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn variant(&self) -> ForestVariant {
        self.variant
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Subsample size each tree was grown on.
    pub fn subsample_size_used(&self) -> usize {
        self.subsample
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn tree_root(&self, b: usize) -> &TreeNode {
        &self.trees[b].root
    }

    /// The (split-half, estimation-half) row indices of tree `b`.
    pub fn tree_halves(&self, b: usize) -> (&[u32], &[u32]) {
        (&self.trees[b].split_half, &self.trees[b].est_half)
    }

    pub(crate) fn trees(&self) -> &[Tree] {
        &self.trees
    }
}
