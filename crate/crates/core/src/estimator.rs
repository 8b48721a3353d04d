//! Composition of two side-wise fits into the RD effect estimate at a
//! boundary point, with the small evaluation buffer forest methods need at
//! support boundaries.

use crate::domain::{
    split_by_treatment, AssignmentRule, BoundaryPoint, Dataset, EstimateReport, ScorePoint,
};
use crate::error::{Error, Result};
use crate::forest::{ForestConfig, ForestVariant, HonestForest, PredictorKind, RidgeLambda};
use crate::local_linear::{llr_rd_estimate, KernelSpec};
use crate::seeding::{derive_seed, fnv1a_f64};

/// Estimator family plus its method-specific configuration.
#[derive(Clone, Debug)]
pub enum MethodSpec {
    Rf(ForestConfig),
    Llf(ForestConfig),
    Llr(KernelSpec),
}

impl MethodSpec {
    pub fn name(&self) -> &'static str {
        match self {
            MethodSpec::Rf(_) => "rf",
            MethodSpec::Llf(_) => "llf",
            MethodSpec::Llr(_) => "llr",
        }
    }
}

/// A method plus the shared estimation settings.
#[derive(Clone, Debug)]
pub struct RDMethodConfig {
    pub method: MethodSpec,
    /// Evaluation buffer for forest methods; ignored by the kernel baseline.
    pub buffer_epsilon: f64,
    pub level: f64,
}

/// Default evaluation buffer in local coordinate units.
pub const DEFAULT_BUFFER_EPSILON: f64 = 1e-9;

impl RDMethodConfig {
    pub fn new(method: MethodSpec) -> Self {
        Self { method, buffer_epsilon: DEFAULT_BUFFER_EPSILON, level: 0.95 }
    }

    pub fn rf(config: ForestConfig) -> Self {
        Self::new(MethodSpec::Rf(config))
    }

    pub fn llf(config: ForestConfig) -> Self {
        Self::new(MethodSpec::Llf(config))
    }

    pub fn llr(kernel: KernelSpec) -> Self {
        Self::new(MethodSpec::Llr(kernel))
    }

    /// Returns a copy with the forest master seed replaced; the kernel
    /// baseline has no randomness and is returned unchanged.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out.method {
            MethodSpec::Rf(cfg) | MethodSpec::Llf(cfg) => cfg.seed = seed,
            MethodSpec::Llr(_) => {}
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if !self.buffer_epsilon.is_finite() || self.buffer_epsilon < 0.0 {
            return Err(Error::Config(format!(
                "buffer epsilon must be nonnegative and finite, got {}",
                self.buffer_epsilon
            )));
        }
        if !self.level.is_finite() || self.level <= 0.0 || self.level >= 1.0 {
            return Err(Error::Config(format!(
                "confidence level must lie in (0,1), got {}",
                self.level
            )));
        }
        if let MethodSpec::Llr(kernel) = &self.method {
            kernel.validate()?;
        }
        Ok(())
    }
}

/// Buffered evaluation points straddling a boundary point.
#[derive(Clone, Debug)]
pub struct BufferedPoints {
    /// Strictly inside the treated region.
    pub plus: ScorePoint,
    /// Strictly inside the control region.
    pub minus: ScorePoint,
    /// The shift actually applied.
    pub epsilon_effective: f64,
    /// True when the requested epsilon was below floating-point resolution
    /// and had to be floored.
    pub floored: bool,
}

/// Unit ulp-scale floor: requested buffers below 8 ulps of the coordinate
/// magnitude are unrepresentable after the shift and get floored.
fn ulp_floor(x_c: &ScorePoint) -> f64 {
    let magnitude = x_c.coords().iter().fold(1.0_f64, |acc, c| acc.max(c.abs()));
    8.0 * (magnitude.next_up() - magnitude)
}

/// Computes evaluation points at distance `epsilon` (floored at 8 ulps of
/// the coordinate magnitude) on each side of the boundary point, along the
/// inward treated-side direction: +1 for thresholds, the normal for half
/// planes, and the treated-side segment normal for curve boundaries. The
/// shifted points are verified to classify on their intended sides.
pub fn buffered_eval_points(x_c: &BoundaryPoint, epsilon: f64) -> Result<BufferedPoints> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::Config(format!(
            "buffer epsilon must be nonnegative and finite, got {epsilon}"
        )));
    }
    let floor = ulp_floor(x_c.point());
    let epsilon_effective = epsilon.max(floor);
    let floored = epsilon_effective > epsilon;

    let direction = treated_direction(x_c)?;
    let coords = x_c.point().coords();
    let plus = ScorePoint::new(
        coords.iter().zip(&direction).map(|(c, d)| c + epsilon_effective * d).collect(),
    )?;
    let minus = ScorePoint::new(
        coords.iter().zip(&direction).map(|(c, d)| c - epsilon_effective * d).collect(),
    )?;

    if !x_c.rule().assign(&plus)? {
        return Err(Error::Geometry(format!(
            "buffered point {:?} fell outside the treated region",
            plus.coords()
        )));
    }
    if x_c.rule().assign(&minus)? {
        return Err(Error::Geometry(format!(
            "buffered point {:?} fell outside the control region",
            minus.coords()
        )));
    }
    Ok(BufferedPoints { plus, minus, epsilon_effective, floored })
}

/// Unit vector pointing into the treated region at the boundary point.
fn treated_direction(x_c: &BoundaryPoint) -> Result<Vec<f64>> {
    match x_c.rule() {
        AssignmentRule::UnivariateThreshold { .. } => Ok(vec![1.0]),
        AssignmentRule::HalfPlane { normal, .. } => {
            let len = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(normal.iter().map(|v| v / len).collect())
        }
        AssignmentRule::CurveBoundary { vertices, .. } => {
            let p = x_c.point().coords();
            // Normal of the segment nearest to the point, oriented by probing
            // which side classifies as treated.
            let (a, b) = nearest_segment(vertices, p);
            let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
            let len = (dx * dx + dy * dy).sqrt();
            let normal = [-dy / len, dx / len];
            let probe_step = ulp_floor(x_c.point()).max(1e-12);
            let probe = ScorePoint::new(vec![
                p[0] + probe_step * normal[0],
                p[1] + probe_step * normal[1],
            ])?;
            if x_c.rule().assign(&probe)? {
                Ok(normal.to_vec())
            } else {
                Ok(vec![-normal[0], -normal[1]])
            }
        }
    }
}

fn nearest_segment(vertices: &[[f64; 2]], p: &[f64]) -> ([f64; 2], [f64; 2]) {
    let mut best = (vertices[0], vertices[1]);
    let mut best_dist = f64::INFINITY;
    for w in vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
        let (px, py) = (p[0] - a[0], p[1] - a[1]);
        let t = ((px * vx + py * vy) / (vx * vx + vy * vy)).clamp(0.0, 1.0);
        let (cx, cy) = (a[0] + t * vx - p[0], a[1] + t * vy - p[1]);
        let dist = cx * cx + cy * cy;
        if dist < best_dist {
            best_dist = dist;
            best = (a, b);
        }
    }
    best
}

/// Which predictor the fitted pair evaluates with.
#[derive(Clone, Copy, Debug)]
enum PredictorSelect {
    Rf,
    Llf(RidgeLambda),
}

#[derive(Debug)]
enum FittedInner {
    Forest { treated: HonestForest, control: HonestForest, select: PredictorSelect },
    Llr { data: Dataset, kernel: KernelSpec },
}

/// Side-wise fits ready to be evaluated at boundary points.
#[derive(Debug)]
pub struct FittedRD {
    inner: FittedInner,
    level: f64,
    buffer_epsilon: f64,
    n_treated: usize,
    n_control: usize,
}

impl FittedRD {
    pub fn n_treated(&self) -> usize {
        self.n_treated
    }

    pub fn n_control(&self) -> usize {
        self.n_control
    }

    /// The two side forests, when the method is forest-based.
    pub fn forests(&self) -> Option<(&HonestForest, &HonestForest)> {
        match &self.inner {
            FittedInner::Forest { treated, control, .. } => Some((treated, control)),
            FittedInner::Llr { .. } => None,
        }
    }
}

/// Fits the method's side-wise models: one on the treated subset with its
/// own subsample size, one on the control subset. Forest seeds derive from
/// the configured master seed and a fingerprint of each side's score matrix,
/// so refits are invariant to label orientation and outcome shifts. The two
/// side fits run concurrently.
pub fn fit_rd(data: &Dataset, rule: &AssignmentRule, config: &RDMethodConfig) -> Result<FittedRD> {
    config.validate()?;
    rule.validate()?;
    let (treated_data, control_data) = split_by_treatment(data, rule)?;
    let n_treated = treated_data.n();
    let n_control = control_data.n();

    let inner = match &config.method {
        MethodSpec::Llr(kernel) => {
            if data.dim() != 1 {
                return Err(Error::Method(
                    "llr handles univariate scores only; collapse multivariate scores first"
                        .into(),
                ));
            }
            FittedInner::Llr { data: data.clone(), kernel: *kernel }
        }
        MethodSpec::Rf(forest_config) | MethodSpec::Llf(forest_config) => {
            let variant = match &config.method {
                MethodSpec::Rf(_) => ForestVariant::Rf,
                _ => ForestVariant::Llf,
            };
            let mut treated_config = *forest_config;
            treated_config.seed =
                derive_seed(forest_config.seed, &[fnv1a_f64(treated_data.xs())]);
            let mut control_config = *forest_config;
            control_config.seed =
                derive_seed(forest_config.seed, &[fnv1a_f64(control_data.xs())]);

            let (treated, control) = rayon::join(
                || HonestForest::fit(&treated_data, &treated_config, variant),
                || HonestForest::fit(&control_data, &control_config, variant),
            );
            let select = match &config.method {
                MethodSpec::Rf(_) => PredictorSelect::Rf,
                _ => PredictorSelect::Llf(forest_config.ridge_lambda),
            };
            FittedInner::Forest { treated: treated?, control: control?, select }
        }
    };
    Ok(FittedRD {
        inner,
        level: config.level,
        buffer_epsilon: config.buffer_epsilon,
        n_treated,
        n_control,
    })
}

/// Evaluates the fitted pair at a boundary point: the jump of the two side
/// predictions, with the side variances summed (the sides use disjoint
/// data).
pub fn estimate_at(fitted: &FittedRD, x_c: &BoundaryPoint) -> Result<EstimateReport> {
    match &fitted.inner {
        FittedInner::Llr { data, kernel } => {
            if x_c.point().dim() != 1 {
                return Err(Error::Dimension { expected: 1, got: x_c.point().dim() });
            }
            llr_rd_estimate(data, x_c.point().coords()[0], kernel, fitted.level)
        }
        FittedInner::Forest { treated, control, select } => {
            let buffered = buffered_eval_points(x_c, fitted.buffer_epsilon)?;
            let side = |forest: &HonestForest, at: &ScorePoint| -> Result<(f64, f64)> {
                match select {
                    PredictorSelect::Rf => {
                        let pred = forest.rf_predict(at)?;
                        let var = forest.little_bags_variance(at, PredictorKind::Rf)?;
                        Ok((pred, var))
                    }
                    PredictorSelect::Llf(mode) => {
                        let (pred, lambda) = match mode {
                            RidgeLambda::Fixed(v) => (forest.llf_predict(at, *v)?, *v),
                            RidgeLambda::Auto => forest.llf_predict_auto(at)?,
                        };
                        let var =
                            forest.little_bags_variance(at, PredictorKind::Llf { lambda })?;
                        Ok((pred, var))
                    }
                }
            };
            let (mu_plus, var_plus) = side(treated, &buffered.plus)?;
            let (mu_minus, var_minus) = side(control, &buffered.minus)?;
            EstimateReport::from_moments(
                mu_plus - mu_minus,
                (var_plus + var_minus).sqrt(),
                fitted.level,
                fitted.n_treated,
                fitted.n_control,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CurveSide, LabeledSample};
    use approx::assert_abs_diff_eq;

    fn jump_dataset(n: usize, jump: f64) -> Dataset {
        Dataset::from_rows(
            (0..n)
                .map(|i| {
                    let x = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
                    LabeledSample {
                        y: if x >= 0.0 { jump } else { 0.0 },
                        x: ScorePoint::scalar(x).unwrap(),
                        treated: x >= 0.0,
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    fn rf_config(trees: usize, seed: u64) -> ForestConfig {
        ForestConfig { num_trees: trees, seed, ..ForestConfig::default() }
    }

    #[test]
    fn buffered_points_on_threshold() {
        let rule = AssignmentRule::univariate_threshold(0.0).unwrap();
        let x_c = BoundaryPoint::new(ScorePoint::scalar(0.0).unwrap(), rule).unwrap();
        let buffered = buffered_eval_points(&x_c, 1e-6).unwrap();
        assert_abs_diff_eq!(buffered.plus.coords()[0], 1e-6, epsilon = 1e-18);
        assert_abs_diff_eq!(buffered.minus.coords()[0], -1e-6, epsilon = 1e-18);
        assert!(!buffered.floored);
    }

    #[test]
    fn tiny_buffer_is_floored_at_ulp_scale() {
        let rule = AssignmentRule::univariate_threshold(0.0).unwrap();
        let x_c = BoundaryPoint::new(ScorePoint::scalar(0.0).unwrap(), rule).unwrap();
        let buffered = buffered_eval_points(&x_c, 1e-30).unwrap();
        assert!(buffered.floored);
        assert!(buffered.epsilon_effective >= 8.0 * (1.0_f64.next_up() - 1.0));
        assert!(buffered.plus.coords()[0] > 0.0);
        assert!(buffered.minus.coords()[0] < 0.0);
    }

    #[test]
    fn curve_buffer_shifts_along_the_normal() {
        let rule = AssignmentRule::curve_boundary(
            vec![[-1.0, 0.0], [1.0, 0.0]],
            CurveSide::Below,
        )
        .unwrap();
        let x_c = BoundaryPoint::new(ScorePoint::new(vec![0.0, 0.0]).unwrap(), rule).unwrap();
        let buffered = buffered_eval_points(&x_c, 1e-6).unwrap();
        // Treated side is below the line, so the plus point moves to -y.
        assert_abs_diff_eq!(buffered.plus.coords()[1], -1e-6, epsilon = 1e-18);
        assert_abs_diff_eq!(buffered.minus.coords()[1], 1e-6, epsilon = 1e-18);
        assert_abs_diff_eq!(buffered.plus.coords()[0], 0.0, epsilon = 1e-18);
    }

    #[test]
    fn pure_jump_is_recovered_by_every_method() {
        let rule = AssignmentRule::univariate_threshold(0.0).unwrap();
        let x_c = BoundaryPoint::new(ScorePoint::scalar(0.0).unwrap(), rule.clone()).unwrap();

        // y = jump * 1{x >= 0}, including the degenerate no-jump case.
        for jump in [1.0, 0.0] {
            let data = jump_dataset(400, jump);
            for config in [
                RDMethodConfig::rf(rf_config(40, 3)),
                RDMethodConfig::llf(ForestConfig {
                    split_rule: crate::forest::SplitRule::RidgeResidual,
                    ..rf_config(40, 3)
                }),
                RDMethodConfig::llr(KernelSpec {
                    shape: crate::local_linear::KernelShape::Triangular,
                    bandwidth: crate::local_linear::Bandwidth::Fixed(5.0),
                }),
            ] {
                let fitted = fit_rd(&data, &rule, &config).unwrap();
                let report = estimate_at(&fitted, &x_c).unwrap();
                assert_abs_diff_eq!(report.estimate, jump, epsilon = 1e-10);
                assert!(report.std_error >= 0.0);
                assert!(report.covers(report.estimate));
            }
        }
    }

    #[test]
    fn all_treated_data_cannot_be_fit() {
        let data = Dataset::from_rows(
            (0..50)
                .map(|i| LabeledSample {
                    y: 0.0,
                    x: ScorePoint::scalar(i as f64 + 1.0).unwrap(),
                    treated: true,
                })
                .collect(),
        )
        .unwrap();
        let rule = AssignmentRule::univariate_threshold(0.0).unwrap();
        let err = fit_rd(&data, &rule, &RDMethodConfig::rf(rf_config(10, 1))).unwrap_err();
        assert_eq!(err.code(), "E_EMPTY_SIDE");
    }

    #[test]
    fn llr_rejects_multivariate_scores() {
        let rule = AssignmentRule::half_plane(vec![0.0, 1.0], 0.0).unwrap();
        let data = Dataset::from_rows(
            (0..40)
                .map(|i| {
                    let t = (i as f64 + 0.5) / 40.0 * 2.0 - 1.0;
                    LabeledSample {
                        y: t,
                        x: ScorePoint::new(vec![t, -t]).unwrap(),
                        treated: -t >= 0.0,
                    }
                })
                .collect(),
        )
        .unwrap();
        let err = fit_rd(&data, &rule, &RDMethodConfig::llr(KernelSpec::default())).unwrap_err();
        assert_eq!(err.code(), "E_METHOD");
    }

    #[test]
    fn side_fits_have_distinct_seed_streams() {
        let data = jump_dataset(300, 0.5);
        let rule = AssignmentRule::univariate_threshold(0.0).unwrap();
        let fitted = fit_rd(&data, &rule, &RDMethodConfig::rf(rf_config(20, 9))).unwrap();
        let (treated, control) = fitted.forests().unwrap();
        assert_ne!(treated.config().seed, control.config().seed);
        assert_eq!(fitted.n_treated(), 150);
        assert_eq!(fitted.n_control(), 150);
    }

    #[test]
    fn label_swap_with_rule_negation_negates_the_estimate_exactly() {
        // Half-plane rules can represent the negated geometry; the side
        // forests' data-fingerprint seeds then make the swapped fit reuse the
        // exact per-side trees.
        let n = 240;
        let rule = AssignmentRule::half_plane(vec![1.0], 0.0).unwrap();
        let negated = AssignmentRule::half_plane(vec![-1.0], 0.0).unwrap();
        let rows: Vec<LabeledSample> = (0..n)
            .map(|i| {
                // Offset grid so no point sits exactly on the boundary.
                let x = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64 + 1e-4;
                LabeledSample {
                    y: (3.1 * x).sin() + if x >= 0.0 { 0.8 } else { 0.0 },
                    x: ScorePoint::scalar(x).unwrap(),
                    treated: x >= 0.0,
                }
            })
            .collect();
        let data = Dataset::from_rows(rows).unwrap();
        let x_c = BoundaryPoint::new(ScorePoint::scalar(0.0).unwrap(), rule.clone()).unwrap();
        let x_c_neg = BoundaryPoint::new(ScorePoint::scalar(0.0).unwrap(), negated.clone()).unwrap();

        for config in [
            RDMethodConfig::rf(rf_config(30, 12)),
            RDMethodConfig::llf(rf_config(30, 12)),
        ] {
            let base = estimate_at(&fit_rd(&data, &rule, &config).unwrap(), &x_c).unwrap();
            let swapped =
                estimate_at(&fit_rd(&data, &negated, &config).unwrap(), &x_c_neg).unwrap();
            assert_eq!(swapped.estimate, -base.estimate, "exact negation");
            assert_eq!(swapped.std_error, base.std_error);
        }
    }
}
