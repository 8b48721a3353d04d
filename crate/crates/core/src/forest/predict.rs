//! Forest weights and the two prediction modes.
//!
//! A forest induces per-observation weights: the frequency of sharing a leaf
//! with the target point, normalized per tree by leaf size. The regression
//! forest prediction is the weighted mean of outcomes; the local linear
//! forest prediction solves a ridge regression under the same weights with
//! the intercept unpenalized.

use super::HonestForest;
use crate::domain::ScorePoint;
use crate::error::{Error, Result};
use crate::numeric::{kahan_sum, solve_dense};

impl HonestForest {
    fn check_dim(&self, x: &ScorePoint) -> Result<()> {
        if x.dim() != self.data().dim() {
            return Err(Error::Dimension { expected: self.data().dim(), got: x.dim() });
        }
        Ok(())
    }

    /// Weight vector over the training rows:
    /// `W_i = (1/B') sum_b 1{i in L_b(x)} / |L_b(x)|`
    /// over the B' trees whose leaf at `x` has a nonempty estimation half.
    /// The weights are nonnegative and sum to one.
    pub fn forest_weights(&self, x: &ScorePoint) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut weights = vec![0.0; self.data().n()];
        let mut usable = 0usize;
        for tree in self.trees() {
            let members = tree.root.leaf_members(x.coords());
            if members.is_empty() {
                continue;
            }
            usable += 1;
            let add = 1.0 / members.len() as f64;
            for &m in members {
                weights[m as usize] += add;
            }
        }
        if usable == 0 {
            return Err(Error::Prediction(
                "every tree has an empty leaf at the requested point".into(),
            ));
        }
        let scale = 1.0 / usable as f64;
        for w in weights.iter_mut() {
            *w *= scale;
        }
        Ok(weights)
    }

    /// Weighted-mean prediction `sum_i W_i Y_i`.
    pub fn rf_predict(&self, x: &ScorePoint) -> Result<f64> {
        let weights = self.forest_weights(x)?;
        let ys = self.data().ys();
        Ok(kahan_sum(weights.iter().zip(ys).map(|(w, y)| w * y)))
    }

    /// The same estimand computed as the average over trees of leaf means.
    /// Agrees with [`Self::rf_predict`] up to floating-point roundoff.
    pub fn rf_predict_tree_average(&self, x: &ScorePoint) -> Result<f64> {
        self.check_dim(x)?;
        let mut tree_means = Vec::with_capacity(self.num_trees());
        for tree in self.trees() {
            let members = tree.root.leaf_members(x.coords());
            if members.is_empty() {
                continue;
            }
            let mean = kahan_sum(members.iter().map(|&m| self.data().y(m as usize)))
                / members.len() as f64;
            tree_means.push(mean);
        }
        if tree_means.is_empty() {
            return Err(Error::Prediction(
                "every tree has an empty leaf at the requested point".into(),
            ));
        }
        Ok(kahan_sum(tree_means.iter().copied()) / tree_means.len() as f64)
    }

    /// Ridge local linear prediction: minimizes
    /// `sum_i W_i (Y_i - b0 - b1'(X_i - x))^2 + lambda ||b1||^2`
    /// and returns the fitted intercept b0. The intercept is never penalized.
    pub fn llf_predict(&self, x: &ScorePoint, lambda: f64) -> Result<f64> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::Config(format!(
                "ridge lambda must be nonnegative and finite, got {lambda}"
            )));
        }
        let weights = self.forest_weights(x)?;
        let beta = self.llf_solve(x, lambda, &weights)?;
        Ok(beta[0])
    }

    /// Grid selection of the ridge penalty by weighted leave-one-out error on
    /// the weight support, then prediction. Returns (prediction, lambda).
    pub fn llf_predict_auto(&self, x: &ScorePoint) -> Result<(f64, f64)> {
        let weights = self.forest_weights(x)?;
        let support: Vec<usize> =
            (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        let mut best: Option<(f64, f64, f64)> = None; // (err, lambda, prediction)
        for &lambda in super::RIDGE_LAMBDA_GRID.iter() {
            let beta = match self.llf_solve(x, lambda, &weights) {
                Ok(b) => b,
                Err(_) => continue,
            };
            let err = self.loo_error(x, lambda, &weights, &support, &beta)?;
            let better = match &best {
                None => true,
                Some((best_err, _, _)) => err < *best_err,
            };
            if better {
                best = Some((err, lambda, beta[0]));
            }
        }
        let (_, lambda, prediction) = best.ok_or(Error::SingularDesign)?;
        Ok((prediction, lambda))
    }

    /// Solves the weighted penalized normal equations at `x`; returns the
    /// full coefficient vector (intercept first).
    fn llf_solve(&self, x: &ScorePoint, lambda: f64, weights: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let d = self.data().dim();
        let p = d + 1;
        let mut gram = vec![0.0; p * p];
        let mut rhs = vec![0.0; p];
        let mut delta = vec![0.0; d];
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = self.data().x_row(i);
            for (slot, (&xi, &c)) in delta.iter_mut().zip(row.iter().zip(x.coords())) {
                *slot = xi - c;
            }
            let y = self.data().y(i);
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
        solve_dense(&mut gram, &mut rhs)
    }

    /// Weighted leave-one-out error via the ridge hat-matrix shortcut:
    /// residual_i / (1 - H_ii) with H_ii = w_i z_i' A^-1 z_i.
    fn loo_error(
        &self,
        x: &ScorePoint,
        lambda: f64,
        weights: &[f64],
        support: &[usize],
        beta: &[f64],
    ) -> Result<f64> {
        let d = self.data().dim();
        let p = d + 1;
        // Rebuild A once and invert it column by column.
        let mut gram = vec![0.0; p * p];
        let mut delta = vec![0.0; d];
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            let row = self.data().x_row(i);
            for (slot, (&xi, &c)) in delta.iter_mut().zip(row.iter().zip(x.coords())) {
                *slot = xi - c;
            }
            gram[0] += w;
            for a in 0..d {
                gram[a + 1] += w * delta[a];
                gram[(a + 1) * p] += w * delta[a];
                for b in 0..d {
                    gram[(a + 1) * p + (b + 1)] += w * delta[a] * delta[b];
                }
            }
        }
        for a in 1..p {
            gram[a * p + a] += lambda;
        }
        let mut inv = vec![0.0; p * p];
        for col in 0..p {
            let mut a_copy = gram.clone();
            let mut e = vec![0.0; p];
            e[col] = 1.0;
            let column = solve_dense(&mut a_copy, &mut e)?;
            for rrow in 0..p {
                inv[rrow * p + col] = column[rrow];
            }
        }

        let mut err = 0.0;
        let mut z = vec![0.0; p];
        for &i in support {
            let w = weights[i];
            let row = self.data().x_row(i);
            z[0] = 1.0;
            for a in 0..d {
                z[a + 1] = row[a] - x.coords()[a];
            }
            let fitted: f64 = (0..p).map(|a| beta[a] * z[a]).sum();
            let residual = self.data().y(i) - fitted;
            let mut quad = 0.0;
            for a in 0..p {
                for b in 0..p {
                    quad += z[a] * inv[a * p + b] * z[b];
                }
            }
            let h = (w * quad).min(1.0 - 1e-8);
            let loo = residual / (1.0 - h);
            err += w * loo * loo;
        }
        Ok(err)
    }
}
