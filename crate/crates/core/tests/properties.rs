//! Cross-module invariants and randomized property checks.

use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rdd_core::*;

#[test]
fn preset_boundary_points_pass_the_probe() {
    for name in presets::NAMES {
        let preset = presets::by_name(name).unwrap();
        assert!(
            probe_boundary_default(&preset.spec.rule, &preset.boundary).unwrap(),
            "preset {name} must ship a genuine boundary point"
        );
    }
}

#[test]
fn simulated_bin_means_track_the_cef() {
    // Conditional means over a fine score grid converge to the polynomial:
    // every well-populated width-0.01 bin must sit within 3 sigma / sqrt(k).
    let lee = presets::lee();
    let data = lee.spec.simulate(1_000_000, 424_242).unwrap();
    let sigma = 0.1295;
    let width = 0.01;
    let bins = 200;
    let mut sums = vec![0.0; bins];
    let mut sums_mu = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for i in 0..data.n() {
        let x = data.x_row(i)[0];
        let idx = (((x + 1.0) / width) as usize).min(bins - 1);
        let side = if data.is_treated(i) { Side::Treated } else { Side::Control };
        let mu = eval_cef(&lee.spec.cef, &ScorePoint::scalar(x).unwrap(), side).unwrap();
        sums[idx] += data.y(i);
        sums_mu[idx] += mu;
        counts[idx] += 1;
    }
    let mut checked = 0;
    for b in 0..bins {
        // Tiny bins have too little data for the normal bound to be sharp.
        if counts[b] < 100 {
            continue;
        }
        let k = counts[b] as f64;
        let deviation = (sums[b] - sums_mu[b]).abs() / k;
        let bound = 3.0 * sigma / k.sqrt();
        assert!(
            deviation < bound,
            "bin {b}: deviation {deviation:.5} exceeds {bound:.5} with {k} points"
        );
        checked += 1;
    }
    assert!(checked > 150, "grid check must cover most of the support, got {checked}");
}

#[test]
fn wls_fit_matches_a_brute_force_oracle() {
    // Independent oracle: solve the 2x2 weighted normal equations by
    // Cramer's rule from freshly accumulated moments.
    let mut rng_state = 0x1234_5678_u64;
    let mut next = move || {
        // xorshift64*; good enough to generate test fixtures.
        rng_state ^= rng_state >> 12;
        rng_state ^= rng_state << 25;
        rng_state ^= rng_state >> 27;
        (rng_state.wrapping_mul(0x2545_F491_4F6C_DD1D) >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..100 {
        let n = 5 + (next() * 20.0) as usize;
        let center = next() * 4.0 - 2.0;
        let xs: Vec<f64> = (0..n).map(|_| next() * 6.0 - 3.0).collect();
        let ys: Vec<f64> = (0..n).map(|_| next() * 10.0 - 5.0).collect();
        let ws: Vec<f64> = (0..n).map(|_| next() + 0.05).collect();

        let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let t = xs[i] - center;
            s0 += ws[i];
            s1 += ws[i] * t;
            s2 += ws[i] * t * t;
            t0 += ws[i] * ys[i];
            t1 += ws[i] * t * ys[i];
        }
        let det = s0 * s2 - s1 * s1;
        let want_b0 = (s2 * t0 - s1 * t1) / det;
        let want_b1 = (s0 * t1 - s1 * t0) / det;

        let (b0, b1) = wls_linear_fit(&xs, &ys, &ws, center).unwrap();
        assert_abs_diff_eq!(b0, want_b0, epsilon = 1e-10);
        assert_abs_diff_eq!(b1, want_b1, epsilon = 1e-10);
    }
}

#[test]
fn root_only_forest_predicts_near_the_pooled_mean() {
    // With splitting disabled every tree is a root leaf, so the forest
    // averages J-half means: marginalizing the honesty split over many trees
    // recovers the pooled mean up to subsampling noise.
    let lee = presets::lee();
    let data = lee.spec.simulate(400, 9).unwrap();
    // Subsamples of 144 split into honesty halves of 72; min_node_size 40
    // cannot be met by any split, so every tree stays a root leaf.
    let config = ForestConfig {
        num_trees: 2000,
        min_node_size: 40,
        seed: 31,
        ..ForestConfig::default()
    };
    let forest = HonestForest::fit(&data, &config, ForestVariant::Rf).unwrap();
    for b in 0..forest.num_trees() {
        assert!(forest.tree_root(b).is_leaf());
    }
    let pred = forest.rf_predict(&ScorePoint::scalar(0.0).unwrap()).unwrap();
    let ybar = data.ys().iter().sum::<f64>() / data.n() as f64;
    let sd = {
        let var =
            data.ys().iter().map(|y| (y - ybar) * (y - ybar)).sum::<f64>() / (data.n() - 1) as f64;
        var.sqrt()
    };
    let bound = 3.0 * sd / (data.n() as f64).sqrt();
    assert!(
        (pred - ybar).abs() < bound,
        "pred {pred:.5} vs mean {ybar:.5}, bound {bound:.5}"
    );
}

#[test]
fn injected_undercovering_method_is_detected() {
    // An estimator reporting half its true noise scale covers about
    // 2*Phi(z/2) - 1 of the time, well below nominal.
    use rand_distr_shim::draw_normal;
    struct Noisy {
        truth: f64,
    }
    impl PointEstimator for Noisy {
        fn estimate(
            &self,
            _data: &Dataset,
            _x_c: &BoundaryPoint,
            level: f64,
            seed: u64,
        ) -> error::Result<EstimateReport> {
            let noise = draw_normal(seed);
            EstimateReport::from_moments(self.truth + noise, 0.5, level, 0, 0)
        }
    }
    let lee = presets::lee();
    let truth = lee.spec.true_effect(&lee.boundary).unwrap();
    let config = MCConfig {
        dgp: lee.spec,
        boundary_point: lee.boundary,
        methods: vec![],
        sample_sizes: vec![10],
        replications: 10_000,
        master_seed: 55,
        level: 0.95,
        record_timing: false,
    };
    let result = run_mc_with(&config, &[("noisy", &Noisy { truth })]).unwrap();
    let coverage = result.rows[0].coverage;
    let z = numeric::normal_critical_value(0.95).unwrap();
    let want = 2.0 * numeric::normal_cdf(z * 0.5) - 1.0; // about 0.6729
    let band = 3.0 * (want * (1.0 - want) / 10_000.0).sqrt();
    assert!(
        (coverage - want).abs() < band,
        "coverage {coverage:.4} should sit near {want:.4}"
    );
    assert!(coverage < 0.90);
}

#[test]
fn collapsed_gaussian_scores_flag_zero_density() {
    let spec = DGPSpec {
        score_law: ScoreLaw::GaussianIid { sigma: 1.0, dim: 2 },
        cef: PolynomialCEF {
            degree: 3,
            basis: BasisKind::Interacted3rdOrder2d,
            coeffs_treated: vec![0.0; 8],
            coeffs_control: vec![0.0; 8],
            centers: vec![0.0, 0.0],
        },
        outcome: OutcomeKind::GaussianNoise { sigma: 0.0 },
        rule: AssignmentRule::half_plane(vec![1.0, 0.0], 0.0).unwrap(),
    };
    let data = spec.simulate(1_000_000, 808).unwrap();
    let collapse_spec = CollapseSpec::new(
        ScorePoint::new(vec![0.0, 0.0]).unwrap(),
        1.0,
        spec.rule.clone(),
    )
    .unwrap();
    let collapsed = collapse(&data, &collapse_spec).unwrap();
    let window = transform::default_diagnostic_window(collapsed.xs());
    let diag = zero_density_diagnostic(collapsed.xs(), 10_000, window, 0.25).unwrap();
    assert!(diag.flagged, "collapsed isotropic Gaussian must flag: {diag:?}");
}

#[test]
fn llr_error_shrinks_with_sample_size() {
    // Consistency check against the known jump 0.04: the mean absolute
    // error under the rule-of-thumb bandwidth shrinks from n=1000 to
    // n=100000 (averaged over draws so a lucky small-n fit cannot flip it).
    let lee = presets::lee();
    let kernel = KernelSpec { shape: KernelShape::Triangular, bandwidth: Bandwidth::RuleOfThumb };
    let mean_abs_err = |n: usize| -> f64 {
        let mut total = 0.0;
        for seed in 0..10 {
            let data = lee.spec.simulate(n, 7000 + seed).unwrap();
            let report = llr_rd_estimate(&data, 0.0, &kernel, 0.95).unwrap();
            total += (report.estimate - 0.04).abs();
        }
        total / 10.0
    };
    let small = mean_abs_err(1000);
    let large = mean_abs_err(100_000);
    assert!(
        large < small,
        "mean |error| should shrink: {small:.5} at n=1000 vs {large:.5} at n=100000"
    );
}

#[test]
fn large_sample_forest_estimate_is_near_the_truth() {
    let lee = presets::lee();
    let data = lee.spec.simulate(20_000, 60).unwrap();
    let rule = lee.spec.rule.clone();
    let config = RDMethodConfig::rf(ForestConfig {
        num_trees: 500,
        seed: 8,
        ..ForestConfig::default()
    });
    let x_c = BoundaryPoint::new(lee.boundary.clone(), rule.clone()).unwrap();
    let report = estimate_at(&fit_rd(&data, &rule, &config).unwrap(), &x_c).unwrap();
    assert!(
        (report.estimate - 0.04).abs() < 0.05,
        "single large-sample fit {} should land near 0.04",
        report.estimate
    );
    assert!(report.std_error > 0.0);
}

#[test]
fn unbiased_injected_method_stays_within_the_monte_carlo_bound() {
    use rand_distr_shim::draw_normal;
    struct Unbiased {
        truth: f64,
    }
    impl PointEstimator for Unbiased {
        fn estimate(
            &self,
            _data: &Dataset,
            _x_c: &BoundaryPoint,
            level: f64,
            seed: u64,
        ) -> error::Result<EstimateReport> {
            EstimateReport::from_moments(self.truth + draw_normal(seed), 1.0, level, 0, 0)
        }
    }
    let lee = presets::lee();
    let truth = lee.spec.true_effect(&lee.boundary).unwrap();
    let replications = 2000;
    let config = MCConfig {
        dgp: lee.spec,
        boundary_point: lee.boundary,
        methods: vec![],
        sample_sizes: vec![10],
        replications,
        master_seed: 606,
        level: 0.95,
        record_timing: false,
    };
    let result = run_mc_with(&config, &[("unbiased", &Unbiased { truth })]).unwrap();
    let row = &result.rows[0];
    let bound = 3.0 * (row.variance / replications as f64).sqrt();
    assert!(
        row.mean_bias.abs() <= bound,
        "mean bias {} exceeds the 3-sigma Monte Carlo bound {bound}",
        row.mean_bias
    );
}

/// Deterministic standard-normal draw per seed for injected estimators.
mod rand_distr_shim {
    use rand_distr::{Distribution, StandardNormal};
    use rdd_core::seeding::rng_from;

    pub fn draw_normal(seed: u64) -> f64 {
        let mut rng = rng_from(seed, &[0xA0]);
        StandardNormal.sample(&mut rng)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn collapse_preserves_rows_and_signs(
        rows in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64, -5.0..5.0f64), 1..60),
        scale in 0.1..4.0f64,
    ) {
        let rule = AssignmentRule::half_plane(vec![1.0, 1.0], 0.0).unwrap();
        let samples: Vec<LabeledSample> = rows
            .iter()
            .map(|&(x1, x2, y)| {
                let x = ScorePoint::new(vec![x1, x2]).unwrap();
                let treated = rule.assign(&x).unwrap();
                LabeledSample { y, x, treated }
            })
            .collect();
        let data = Dataset::from_rows(samples).unwrap();
        let center = ScorePoint::new(vec![0.25, -0.5]).unwrap();
        let spec = CollapseSpec::new(center.clone(), scale, rule.clone()).unwrap();
        let collapsed = collapse(&data, &spec).unwrap();

        prop_assert_eq!(collapsed.n(), data.n());
        prop_assert_eq!(collapsed.dim(), 1);
        prop_assert_eq!(collapsed.ys(), data.ys());
        for i in 0..data.n() {
            let x = ScorePoint::new(data.x_row(i).to_vec()).unwrap();
            let s = collapsed.x_row(i)[0];
            let treated = rule.assign(&x).unwrap();
            prop_assert_eq!(collapsed.is_treated(i), treated);
            prop_assert_eq!(s >= 0.0, treated || s == 0.0);
            let dist = x.distance(&center).unwrap();
            prop_assert!((s.abs() - scale * dist).abs() < 1e-12);
            // Zero only at the center itself.
            if s == 0.0 {
                prop_assert!(dist == 0.0);
            }
        }
    }

    #[test]
    fn split_partitions_any_dataset(
        xs in prop::collection::vec(-3.0..3.0f64, 2..80),
        cutoff in -1.0..1.0f64,
    ) {
        prop_assume!(xs.iter().any(|&x| x >= cutoff) && xs.iter().any(|&x| x < cutoff));
        let rule = AssignmentRule::univariate_threshold(cutoff).unwrap();
        let data = Dataset::from_rows(
            xs.iter()
                .enumerate()
                .map(|(i, &x)| LabeledSample {
                    y: i as f64,
                    x: ScorePoint::scalar(x).unwrap(),
                    treated: x >= cutoff,
                })
                .collect(),
        )
        .unwrap();
        let (treated, control) = split_by_treatment(&data, &rule).unwrap();
        prop_assert_eq!(treated.n() + control.n(), data.n());
        // Disjoint and exhaustive: the y values (unique row ids) partition.
        let mut ids: Vec<f64> = treated.ys().iter().chain(control.ys()).copied().collect();
        ids.sort_by(f64::total_cmp);
        let want: Vec<f64> = (0..data.n()).map(|i| i as f64).collect();
        prop_assert_eq!(ids, want);
        // Row order preserved within each side.
        prop_assert!(treated.ys().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(control.ys().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn forest_weights_are_probability_vectors(
        seed in 0u64..500,
        n in 60usize..160,
    ) {
        let lee = presets::lee();
        let data = lee.spec.simulate(n, seed).unwrap();
        let config = ForestConfig { num_trees: 10, min_node_size: 2, seed, ..ForestConfig::default() };
        let forest = HonestForest::fit(&data, &config, ForestVariant::Rf).unwrap();
        let x = ScorePoint::scalar(-0.1).unwrap();
        let weights = forest.forest_weights(&x).unwrap();
        prop_assert!(weights.iter().all(|&w| w >= 0.0));
        let total: f64 = weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        // Rows outside every estimation half carry exactly zero weight.
        let mut in_est = vec![false; data.n()];
        for b in 0..forest.num_trees() {
            for &i in forest.tree_halves(b).1 {
                in_est[i as usize] = true;
            }
        }
        for i in 0..data.n() {
            if !in_est[i] {
                prop_assert_eq!(weights[i], 0.0);
            }
        }
    }

    #[test]
    fn kernel_weights_have_bounded_support(
        t in -5.0..5.0f64,
        h in 0.1..3.0f64,
    ) {
        for shape in [KernelShape::Triangular, KernelShape::Epanechnikov, KernelShape::Uniform] {
            let w = kernel_weight(shape, t, h);
            prop_assert!(w >= 0.0);
            if t.abs() > h {
                prop_assert_eq!(w, 0.0);
            }
        }
    }
}
