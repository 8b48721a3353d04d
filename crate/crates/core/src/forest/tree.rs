//! Honest tree growing with greedy variance-reduction splits.

use super::{ForestConfig, SplitRule, Tree};
use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::numeric::solve_dense;
use crate::seeding::rng_from;
use rand_chacha::ChaCha8Rng;
use rand::seq::SliceRandom;

/// A regression tree node. Leaves hold estimation-half row indices into the
/// training dataset; the split half never appears in a leaf.
#[derive(Clone, Debug)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        members: Vec<u32>,
    },
}

/// Grows one honest tree on the given subsample. Public entry point used by
/// tests and callers that manage their own subsampling; forest fitting goes
/// through the internal [`grow`].
pub fn grow_tree(
    data: &Dataset,
    subsample: &[usize],
    config: &ForestConfig,
    seed: u64,
) -> Result<TreeNode> {
    let indices: Vec<u32> = subsample.iter().map(|&i| i as u32).collect();
    if indices.iter().any(|&i| (i as usize) >= data.n()) {
        return Err(Error::Config("subsample index out of range".into()));
    }
    let mut rng = rng_from(seed, &[0x6e0]);
    grow(data, indices, config, config.split_lambda(), &mut rng).map(|t| t.root)
}

/// Shuffles the subsample, splits it into the honesty halves, and grows the
/// tree recursively.
pub(crate) fn grow(
    data: &Dataset,
    mut subsample: Vec<u32>,
    config: &ForestConfig,
    split_lambda: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Tree> {
    let s = subsample.len();
    if s < 2 * config.min_node_size.max(1) {
        return Err(Error::Config(format!(
            "subsample of size {s} is too small for min_node_size {}",
            config.min_node_size
        )));
    }
    subsample.shuffle(rng);
    let i_size = ((s as f64 * config.honesty_fraction).round() as usize).clamp(1, s - 1);
    let (split_half, est_half) = subsample.split_at(i_size);
    let mut split_half = split_half.to_vec();
    let mut est_half = est_half.to_vec();

    let mut ctx = GrowContext { data, config, split_lambda, rng };
    let root = ctx.build(&mut split_half, &mut est_half)?;
    split_half.sort_unstable();
    est_half.sort_unstable();
    Ok(Tree { root, split_half, est_half })
}

struct GrowContext<'a> {
    data: &'a Dataset,
    config: &'a ForestConfig,
    split_lambda: f64,
    rng: &'a mut ChaCha8Rng,
}

struct BestSplit {
    reduction: f64,
    feature: usize,
    threshold: f64,
}

impl<'a> GrowContext<'a> {
    fn x(&self, row: u32, feature: usize) -> f64 {
        self.data.x_row(row as usize)[feature]
    }

    fn build(&mut self, node_i: &mut [u32], node_j: &mut [u32]) -> Result<TreeNode> {
        if let Some(split) = self.find_split(node_i, node_j)? {
            let (feature, threshold) = (split.feature, split.threshold);
            let pivot_i = partition_in_place(node_i, |r| self.x(r, feature) <= threshold);
            let pivot_j = partition_in_place(node_j, |r| self.x(r, feature) <= threshold);
            let (i_left, i_right) = node_i.split_at_mut(pivot_i);
            let (j_left, j_right) = node_j.split_at_mut(pivot_j);
            let left = self.build(i_left, j_left)?;
            let right = self.build(i_right, j_right)?;
            Ok(TreeNode::Internal {
                feature,
                threshold,
                left: Box::new(left),
                right: Box::new(right),
            })
        } else {
            let mut members = node_j.to_vec();
            members.sort_unstable();
            Ok(TreeNode::Leaf { members })
        }
    }

    /// Scans mtry random features for the admissible split with the largest
    /// variance reduction on the split half. Ties break toward the smaller
    /// feature index and then the smaller threshold, which keeps growing
    /// deterministic.
    fn find_split(&mut self, node_i: &[u32], node_j: &[u32]) -> Result<Option<BestSplit>> {
        let n_i = node_i.len();
        let min_node = self.config.min_node_size;
        if n_i < 2 || node_j.len() < 2 * min_node {
            return Ok(None);
        }

        // A node with constant outcomes admits no variance reduction.
        let ys: Vec<f64> = node_i.iter().map(|&r| self.data.y(r as usize)).collect();
        let (y_min, y_max) = ys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if y_min == y_max {
            return Ok(None);
        }

        let crit = match self.config.split_rule {
            SplitRule::Cart => ys,
            SplitRule::RidgeResidual => self
                .ridge_residuals(node_i, &ys)
                .unwrap_or(ys),
        };
        let crit_mean = crit.iter().sum::<f64>() / n_i as f64;
        let devs: Vec<f64> = crit.iter().map(|v| v - crit_mean).collect();
        let total: f64 = devs.iter().sum();

        let d = self.data.dim();
        let mut features: Vec<usize> =
            rand::seq::index::sample(self.rng, d, self.config.mtry).into_iter().collect();
        features.sort_unstable();

        let alpha_min = self.config.alpha * n_i as f64;
        let mut best: Option<BestSplit> = None;
        let mut iv: Vec<(f64, f64)> = Vec::with_capacity(n_i);
        let mut jx: Vec<f64> = Vec::with_capacity(node_j.len());
        for &feature in &features {
            iv.clear();
            iv.extend(node_i.iter().zip(&devs).map(|(&r, &dev)| (self.x(r, feature), dev)));
            iv.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            jx.clear();
            jx.extend(node_j.iter().map(|&r| self.x(r, feature)));
            jx.sort_unstable_by(f64::total_cmp);

            let mut left_sum = 0.0;
            let mut j_cursor = 0usize;
            for k in 1..n_i {
                left_sum += iv[k - 1].1;
                if iv[k - 1].0 == iv[k].0 {
                    continue;
                }
                let threshold = 0.5 * (iv[k - 1].0 + iv[k].0);
                let (kl, kr) = (k as f64, (n_i - k) as f64);
                if kl < alpha_min || kr < alpha_min {
                    continue;
                }
                while j_cursor < jx.len() && jx[j_cursor] <= threshold {
                    j_cursor += 1;
                }
                if j_cursor < min_node || node_j.len() - j_cursor < min_node {
                    continue;
                }
                let right_sum = total - left_sum;
                let reduction = left_sum * left_sum / kl + right_sum * right_sum / kr
                    - total * total / n_i as f64;
                if reduction > best.as_ref().map_or(0.0, |b| b.reduction) {
                    best = Some(BestSplit { reduction, feature, threshold });
                }
            }
        }
        Ok(best)
    }

    /// Residuals of an intercept-plus-slopes ridge fit on the node's split
    /// half; predictors are centered at the node means so the intercept stays
    /// unpenalized. Returns None when the penalized system is singular (only
    /// possible at lambda 0), in which case the caller falls back to raw
    /// outcomes.
    fn ridge_residuals(&self, node_i: &[u32], ys: &[f64]) -> Option<Vec<f64>> {
        let d = self.data.dim();
        let p = d + 1;
        let n = node_i.len() as f64;
        let mut means = vec![0.0; d];
        for &r in node_i {
            for (m, &v) in means.iter_mut().zip(self.data.x_row(r as usize)) {
                *m += v;
            }
        }
        for m in means.iter_mut() {
            *m /= n;
        }

        let mut gram = vec![0.0; p * p];
        let mut rhs = vec![0.0; p];
        let mut centered = vec![0.0; d];
        for (&r, &y) in node_i.iter().zip(ys) {
            for ((c, &v), &m) in centered.iter_mut().zip(self.data.x_row(r as usize)).zip(&means) {
                *c = v - m;
            }
            gram[0] += 1.0;
            rhs[0] += y;
            for a in 0..d {
                gram[(a + 1) * p] += centered[a];
                gram[a + 1] += centered[a];
                rhs[a + 1] += centered[a] * y;
                for b in 0..d {
                    gram[(a + 1) * p + (b + 1)] += centered[a] * centered[b];
                }
            }
        }
        for a in 1..p {
            gram[a * p + a] += self.split_lambda;
        }
        let beta = solve_dense(&mut gram, &mut rhs).ok()?;
        Some(
            node_i
                .iter()
                .zip(ys)
                .map(|(&r, &y)| {
                    let mut fitted = beta[0];
                    for (a, (&v, &m)) in self.data.x_row(r as usize).iter().zip(&means).enumerate()
                    {
                        fitted += beta[a + 1] * (v - m);
                    }
                    y - fitted
                })
                .collect(),
        )
    }
}

/// Moves elements satisfying the predicate to the front; returns their count.
fn partition_in_place<F: FnMut(u32) -> bool>(v: &mut [u32], mut pred: F) -> usize {
    let mut left = 0;
    for k in 0..v.len() {
        if pred(v[k]) {
            v.swap(left, k);
            left += 1;
        }
    }
    left
}

impl TreeNode {
    /// The leaf containing `x`.
    pub fn leaf_members(&self, x: &[f64]) -> &[u32] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { members } => return members,
                TreeNode::Internal { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}
