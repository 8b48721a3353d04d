//! Simulable data-generating processes with exactly computable ground-truth
//! conditional effects.
//!
//! Score draws and outcome noise are chunked over the index range with
//! per-chunk derived seeds, so `simulate` is bit-identical across runs and
//! thread counts.

use crate::domain::{AssignmentRule, Dataset, ScorePoint};
use crate::error::{Error, Result, Side};
use crate::numeric::logistic;
use crate::seeding::rng_from;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Rows drawn per derived-seed chunk; fixed so parallel and serial sampling
/// agree bit for bit.
const CHUNK: usize = 4096;
const SCORE_STREAM: u64 = 0x5C0;
const NOISE_STREAM: u64 = 0x401;

/// Polynomial basis layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisKind {
    /// 1, x, x^2, ..., x^degree on a univariate score.
    #[serde(rename = "raw_powers_1d")]
    RawPowers1d,
    /// Third-order interacted bivariate basis, ordered
    /// {1, x1, t1^2, t1^3, x2, t2^2, t2^3, t1*t2} with t = x - center.
    /// The linear terms use the raw coordinates; only the higher-order terms
    /// are demeaned.
    #[serde(rename = "interacted_3rd_order_2d")]
    Interacted3rdOrder2d,
}

impl BasisKind {
    pub fn dim(&self) -> usize {
        match self {
            BasisKind::RawPowers1d => 1,
            BasisKind::Interacted3rdOrder2d => 2,
        }
    }

    fn coefficient_count(&self, degree: usize) -> usize {
        match self {
            BasisKind::RawPowers1d => degree + 1,
            BasisKind::Interacted3rdOrder2d => 8,
        }
    }
}

/// Side-specific polynomial conditional expectation function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialCEF {
    pub degree: usize,
    pub basis: BasisKind,
    pub coeffs_treated: Vec<f64>,
    pub coeffs_control: Vec<f64>,
    /// Demeaning constants for the higher-order terms of the interacted
    /// basis; ignored by the raw-powers basis but kept dimension-consistent.
    pub centers: Vec<f64>,
}

impl PolynomialCEF {
    pub fn validate(&self) -> Result<()> {
        let want = self.basis.coefficient_count(self.degree);
        if self.basis == BasisKind::Interacted3rdOrder2d && self.degree != 3 {
            return Err(Error::Config(
                "interacted_3rd_order_2d basis requires degree 3".into(),
            ));
        }
        if self.coeffs_treated.len() != want || self.coeffs_control.len() != want {
            return Err(Error::Config(format!(
                "basis expects {want} coefficients per side, got {} treated / {} control",
                self.coeffs_treated.len(),
                self.coeffs_control.len()
            )));
        }
        if self.centers.len() != self.basis.dim() {
            return Err(Error::Config(format!(
                "centers must have length {}, got {}",
                self.basis.dim(),
                self.centers.len()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn eval_coords(&self, coords: &[f64], side: Side) -> f64 {
        let c = match side {
            Side::Treated => &self.coeffs_treated,
            Side::Control => &self.coeffs_control,
        };
        match self.basis {
            BasisKind::RawPowers1d => {
                let x = coords[0];
                c.iter().rev().fold(0.0, |acc, coef| acc * x + coef)
            }
            BasisKind::Interacted3rdOrder2d => {
                let (x1, x2) = (coords[0], coords[1]);
                let t1 = x1 - self.centers[0];
                let t2 = x2 - self.centers[1];
                c[0] + c[1] * x1
                    + c[2] * t1 * t1
                    + c[3] * t1 * t1 * t1
                    + c[4] * x2
                    + c[5] * t2 * t2
                    + c[6] * t2 * t2 * t2
                    + c[7] * t1 * t2
            }
        }
    }
}

/// Exact polynomial evaluation on the requested side.
pub fn eval_cef(cef: &PolynomialCEF, x: &ScorePoint, side: Side) -> Result<f64> {
    if x.dim() != cef.dim() {
        return Err(Error::Dimension { expected: cef.dim(), got: x.dim() });
    }
    Ok(cef.eval_coords(x.coords(), side))
}

/// Marginal law of the running variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreLaw {
    /// 2*Beta(2,4) - 1 on [-1, 1] (univariate).
    BetaTransform,
    /// Independent uniforms on [-1, 1]^dim.
    UniformSquare { dim: usize },
    /// Independent N(0, sigma^2) coordinates.
    GaussianIid { sigma: f64, dim: usize },
}

impl ScoreLaw {
    pub fn dim(&self) -> usize {
        match self {
            ScoreLaw::BetaTransform => 1,
            ScoreLaw::UniformSquare { dim } => *dim,
            ScoreLaw::GaussianIid { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScoreLaw::BetaTransform => Ok(()),
            ScoreLaw::UniformSquare { dim } => {
                if *dim == 0 {
                    Err(Error::Config("uniform_square dimension must be >= 1".into()))
                } else {
                    Ok(())
                }
            }
            ScoreLaw::GaussianIid { sigma, dim } => {
                if *dim == 0 {
                    Err(Error::Config("gaussian_iid dimension must be >= 1".into()))
                } else if !sigma.is_finite() || *sigma <= 0.0 {
                    Err(Error::Config("gaussian_iid sigma must be positive".into()))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        match self {
            ScoreLaw::BetaTransform => {
                // Beta(2,4) via the exponential-spacings construction for
                // integer shapes: (E1+E2)/(E1+...+E6) with Ei ~ Exp(1).
                let mut exps = [0.0_f64; 6];
                for e in exps.iter_mut() {
                    let u: f64 = rng.random();
                    *e = -(1.0 - u).ln();
                }
                let num: f64 = exps[..2].iter().sum();
                let den: f64 = exps.iter().sum();
                out[0] = 2.0 * (num / den) - 1.0;
            }
            ScoreLaw::UniformSquare { .. } => {
                for slot in out.iter_mut() {
                    *slot = 2.0 * rng.random::<f64>() - 1.0;
                }
            }
            ScoreLaw::GaussianIid { sigma, .. } => {
                for slot in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *slot = sigma * z;
                }
            }
        }
    }
}

/// Outcome model attached to the side-specific polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutcomeKind {
    /// y = cef(x) + N(0, sigma^2). `sigma = 0` gives noiseless outcomes.
    GaussianNoise { sigma: f64 },
    /// y ~ Bernoulli(logistic(cef(x))); the polynomial is the logit.
    BernoulliLogit,
}

impl OutcomeKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            OutcomeKind::GaussianNoise { sigma } => {
                if sigma.is_nan() || *sigma < 0.0 {
                    Err(Error::Config("gaussian_noise sigma must be nonnegative".into()))
                } else {
                    Ok(())
                }
            }
            OutcomeKind::BernoulliLogit => Ok(()),
        }
    }
}

/// A fully specified simulable design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DGPSpec {
    pub score_law: ScoreLaw,
    pub cef: PolynomialCEF,
    #[serde(rename = "outcome_kind")]
    pub outcome: OutcomeKind,
    pub rule: AssignmentRule,
}

impl DGPSpec {
    pub fn validate(&self) -> Result<()> {
        self.score_law.validate()?;
        self.cef.validate()?;
        self.outcome.validate()?;
        self.rule.validate()?;
        let d = self.score_law.dim();
        if self.cef.dim() != d {
            return Err(Error::Dimension { expected: d, got: self.cef.dim() });
        }
        if self.rule.dim() != d {
            return Err(Error::Dimension { expected: d, got: self.rule.dim() });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.score_law.dim()
    }

    /// i.i.d. score draws; deterministic given `seed`.
    pub fn sample_scores(&self, n: usize, seed: u64) -> Result<Vec<ScorePoint>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        let flat = self.sample_scores_flat(n, seed);
        flat.chunks(self.dim())
            .map(|chunk| ScorePoint::new(chunk.to_vec()))
            .collect()
    }

    fn sample_scores_flat(&self, n: usize, seed: u64) -> Vec<f64> {
        let d = self.dim();
        let mut flat = vec![0.0; n * d];
        flat.par_chunks_mut(CHUNK * d)
            .enumerate()
            .for_each(|(chunk_idx, slab)| {
                let mut rng = rng_from(seed, &[SCORE_STREAM, chunk_idx as u64]);
                for row in slab.chunks_mut(d) {
                    self.score_law.draw(&mut rng, row);
                }
            });
        flat
    }

    /// The identified conditional effect at a boundary point: the jump in the
    /// conditional mean across the two sides. Never samples.
    pub fn true_effect(&self, x_c: &ScorePoint) -> Result<f64> {
        self.validate()?;
        if !crate::domain::probe_boundary_default(&self.rule, x_c)? {
            return Err(Error::Boundary(format!(
                "{:?} is not on the treatment boundary of this DGP",
                x_c.coords()
            )));
        }
        let treated = eval_cef(&self.cef, x_c, Side::Treated)?;
        let control = eval_cef(&self.cef, x_c, Side::Control)?;
        Ok(match self.outcome {
            OutcomeKind::GaussianNoise { .. } => treated - control,
            OutcomeKind::BernoulliLogit => logistic(treated) - logistic(control),
        })
    }

    /// Conditional mean of the outcome given the score and side.
    pub fn conditional_mean(&self, x: &ScorePoint, side: Side) -> Result<f64> {
        let m = eval_cef(&self.cef, x, side)?;
        Ok(match self.outcome {
            OutcomeKind::GaussianNoise { .. } => m,
            OutcomeKind::BernoulliLogit => logistic(m),
        })
    }

    /// Simulates a labeled dataset; deterministic given `seed` and identical
    /// for any thread count.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<Dataset> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Config("sample size must be at least 1".into()));
        }
        let d = self.dim();
        let xs = self.sample_scores_flat(n, seed);

        let mut ys = vec![0.0; n];
        let mut treated = vec![false; n];
        let chunks: Vec<(usize, &mut [f64], &mut [bool])> = ys
            .chunks_mut(CHUNK)
            .zip(treated.chunks_mut(CHUNK))
            .enumerate()
            .map(|(idx, (y, t))| (idx, y, t))
            .collect();
        let errors: Vec<Error> = chunks
            .into_par_iter()
            .filter_map(|(chunk_idx, y_slab, t_slab)| {
                let mut rng = rng_from(seed, &[NOISE_STREAM, chunk_idx as u64]);
                let base = chunk_idx * CHUNK;
                for (k, (y, t)) in y_slab.iter_mut().zip(t_slab.iter_mut()).enumerate() {
                    let coords = &xs[(base + k) * d..(base + k + 1) * d];
                    let point = match ScorePoint::new(coords.to_vec()) {
                        Ok(p) => p,
                        Err(e) => return Some(e),
                    };
                    let is_treated = match self.rule.assign(&point) {
                        Ok(v) => v,
                        Err(e) => return Some(e),
                    };
                    let side = if is_treated { Side::Treated } else { Side::Control };
                    let m = self.cef.eval_coords(coords, side);
                    *t = is_treated;
                    *y = match self.outcome {
                        OutcomeKind::GaussianNoise { sigma } => {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            m + sigma * z
                        }
                        OutcomeKind::BernoulliLogit => {
                            let u: f64 = rng.random();
                            if u < logistic(m) {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    };
                }
                None
            })
            .collect();
        if let Some(err) = errors.into_iter().next() {
            return Err(err);
        }
        Dataset::new(d, ys, xs, treated)
    }
}

/// Named built-in designs with their canonical boundary points.
pub mod presets {
    use super::*;
    use crate::domain::CurveSide;

    /// A preset bundles the simulable spec with the boundary point the
    /// original study estimates at.
    #[derive(Clone, Debug)]
    pub struct DGPPreset {
        pub name: &'static str,
        pub spec: DGPSpec,
        pub boundary: ScorePoint,
    }

    pub const NAMES: [&str; 4] = ["lee", "kt-price", "kt-age", "kt-turnout"];

    /// Univariate incumbency design: fifth-order side polynomials, scores
    /// 2*Beta(2,4)-1, Gaussian noise sigma = 0.1295, cutoff 0. The jump at
    /// the cutoff is 0.52 - 0.48 = 0.04.
    pub fn lee() -> DGPPreset {
        DGPPreset {
            name: "lee",
            spec: DGPSpec {
                score_law: ScoreLaw::BetaTransform,
                cef: PolynomialCEF {
                    degree: 5,
                    basis: BasisKind::RawPowers1d,
                    coeffs_treated: vec![0.52, 0.84, -3.00, 7.99, -9.01, 3.56],
                    coeffs_control: vec![0.48, 1.27, 7.18, 20.21, 21.54, 7.33],
                    centers: vec![0.0],
                },
                outcome: OutcomeKind::GaussianNoise { sigma: 0.1295 },
                rule: AssignmentRule::UnivariateThreshold { cutoff: 0.0 },
            },
            boundary: ScorePoint::scalar(0.0).expect("finite"),
        }
    }

    fn bivariate(
        name: &'static str,
        coeffs_treated: Vec<f64>,
        coeffs_control: Vec<f64>,
        centers: [f64; 2],
        outcome: OutcomeKind,
    ) -> DGPPreset {
        DGPPreset {
            name,
            spec: DGPSpec {
                score_law: ScoreLaw::UniformSquare { dim: 2 },
                cef: PolynomialCEF {
                    degree: 3,
                    basis: BasisKind::Interacted3rdOrder2d,
                    coeffs_treated,
                    coeffs_control,
                    centers: centers.to_vec(),
                },
                outcome,
                rule: AssignmentRule::CurveBoundary {
                    vertices: vec![[-1.0, 0.0], [1.0, 0.0]],
                    treated_side: CurveSide::Below,
                },
            },
            boundary: ScorePoint::new(vec![0.0, 0.0]).expect("finite"),
        }
    }

    /// Bivariate housing-price design (third-order interacted polynomials,
    /// Gaussian noise). The published demeaning constants are not
    /// recoverable, so `centers` default to the origin; override them with
    /// [`with_centers`].
    pub fn kt_price() -> DGPPreset {
        bivariate(
            "kt-price",
            vec![
                13544.3, 150.2, -11847.6, -29821.7, 259.3, -15479.8, -207469.6, 24446.9,
            ],
            vec![
                230407.6, -9713.5, 537644.5, -8356369.6, -2164.6, -9998.4, 748352.9, 55631.1,
            ],
            [0.0, 0.0],
            OutcomeKind::GaussianNoise { sigma: 32.6334 },
        )
    }

    /// Bivariate age design (third-order interacted polynomials, Gaussian
    /// noise).
    pub fn kt_age() -> DGPPreset {
        bivariate(
            "kt-age",
            vec![
                -477.8, -70.0, -111.9, -54704.1, -44.9, 4564.6, 107699.6, -5863.3,
            ],
            vec![
                77307.5, -1026.2, 60847.1, -749930.1, 481.1, -13224.5, 185693.5, -16725.5,
            ],
            [0.0, 0.0],
            OutcomeKind::GaussianNoise { sigma: 15.9496 },
        )
    }

    /// Bivariate binary turnout design: third-order interacted polynomial
    /// inside a logit link.
    pub fn kt_turnout() -> DGPPreset {
        bivariate(
            "kt-turnout",
            vec![-200.4, 3.7, 224.4, 1028.1, -0.7, 57.1, 3778.1, -127.5],
            vec![
                10399.6, -286.5, 10516.0, -114884.8, -15.4, -423.8, 12700.1, 228.7,
            ],
            [0.0, 0.0],
            OutcomeKind::BernoulliLogit,
        )
    }

    /// Replaces the demeaning centers of a bivariate preset.
    pub fn with_centers(mut preset: DGPPreset, centers: [f64; 2]) -> DGPPreset {
        preset.spec.cef.centers = centers.to_vec();
        preset
    }

    pub fn by_name(name: &str) -> Result<DGPPreset> {
        match name {
            "lee" => Ok(lee()),
            "kt-price" => Ok(kt_price()),
            "kt-age" => Ok(kt_age()),
            "kt-turnout" => Ok(kt_turnout()),
            other => Err(Error::Config(format!(
                "unknown DGP preset '{other}'; available: {}",
                NAMES.join(", ")
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lee_cef_matches_printed_constants() {
        let lee = presets::lee();
        let zero = ScorePoint::scalar(0.0).unwrap();
        assert_abs_diff_eq!(
            eval_cef(&lee.spec.cef, &zero, Side::Control).unwrap(),
            0.48,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            eval_cef(&lee.spec.cef, &zero, Side::Treated).unwrap(),
            0.52,
            epsilon = 1e-12
        );
        let x = ScorePoint::scalar(0.1).unwrap();
        assert_abs_diff_eq!(
            eval_cef(&lee.spec.cef, &x, Side::Treated).unwrap(),
            0.5811246,
            epsilon = 1e-7
        );
    }

    #[test]
    fn lee_true_effect_is_0_04() {
        let lee = presets::lee();
        let effect = lee.spec.true_effect(&lee.boundary).unwrap();
        assert_abs_diff_eq!(effect, 0.0400, epsilon = 1e-12);
    }

    #[test]
    fn true_effect_rejects_interior_points() {
        let lee = presets::lee();
        let err = lee.spec.true_effect(&ScorePoint::scalar(0.9).unwrap()).unwrap_err();
        assert_eq!(err.code(), "E_BOUNDARY");
    }

    #[test]
    fn logit_true_effect_of_zero_polys_is_zero() {
        let spec = DGPSpec {
            score_law: ScoreLaw::UniformSquare { dim: 2 },
            cef: PolynomialCEF {
                degree: 3,
                basis: BasisKind::Interacted3rdOrder2d,
                coeffs_treated: vec![0.0; 8],
                coeffs_control: vec![0.0; 8],
                centers: vec![0.0, 0.0],
            },
            outcome: OutcomeKind::BernoulliLogit,
            rule: AssignmentRule::HalfPlane { normal: vec![0.0, 1.0], offset: 0.0 },
        };
        let x_c = ScorePoint::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(spec.true_effect(&x_c).unwrap(), 0.0);
    }

    #[test]
    fn constant_shift_gives_constant_effect() {
        // Treated CEF = control CEF + 1 everywhere.
        let mut coeffs_treated = vec![0.3, -0.4, 0.2, 0.9, 1.1, -0.6, 0.05, 0.7];
        let coeffs_control = coeffs_treated.clone();
        coeffs_treated[0] += 1.0;
        let spec = DGPSpec {
            score_law: ScoreLaw::UniformSquare { dim: 2 },
            cef: PolynomialCEF {
                degree: 3,
                basis: BasisKind::Interacted3rdOrder2d,
                coeffs_treated,
                coeffs_control,
                centers: vec![0.1, -0.2],
            },
            outcome: OutcomeKind::GaussianNoise { sigma: 1.0 },
            rule: AssignmentRule::HalfPlane { normal: vec![1.0, 1.0], offset: 0.0 },
        };
        for bp in [[0.0, 0.0], [0.25, -0.25], [-0.4, 0.4]] {
            let x_c = ScorePoint::new(bp.to_vec()).unwrap();
            assert_abs_diff_eq!(spec.true_effect(&x_c).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn beta_transform_support_and_mean() {
        let lee = presets::lee();
        let scores = lee.spec.sample_scores(200_000, 11).unwrap();
        let mut sum = 0.0;
        for s in &scores {
            let v = s.coords()[0];
            assert!((-1.0..=1.0).contains(&v));
            sum += v;
        }
        // E[2 Beta(2,4) - 1] = 2 * (2/6) - 1 = -1/3.
        assert_abs_diff_eq!(sum / scores.len() as f64, -1.0 / 3.0, epsilon = 0.005);
    }

    #[test]
    fn uniform_square_mean_is_origin() {
        let spec = DGPSpec {
            score_law: ScoreLaw::UniformSquare { dim: 2 },
            cef: PolynomialCEF {
                degree: 3,
                basis: BasisKind::Interacted3rdOrder2d,
                coeffs_treated: vec![0.0; 8],
                coeffs_control: vec![0.0; 8],
                centers: vec![0.0, 0.0],
            },
            outcome: OutcomeKind::GaussianNoise { sigma: 0.0 },
            rule: AssignmentRule::HalfPlane { normal: vec![0.0, 1.0], offset: 0.0 },
        };
        let scores = spec.sample_scores(200_000, 3).unwrap();
        let (mut m1, mut m2) = (0.0, 0.0);
        for s in &scores {
            m1 += s.coords()[0];
            m2 += s.coords()[1];
        }
        let n = scores.len() as f64;
        assert_abs_diff_eq!(m1 / n, 0.0, epsilon = 0.005);
        assert_abs_diff_eq!(m2 / n, 0.0, epsilon = 0.005);
    }

    #[test]
    fn simulate_residual_sd_matches_sigma() {
        let lee = presets::lee();
        let data = lee.spec.simulate(100_000, 42).unwrap();
        let mut sq = 0.0;
        for i in 0..data.n() {
            let side = if data.is_treated(i) { Side::Treated } else { Side::Control };
            let x = ScorePoint::scalar(data.x_row(i)[0]).unwrap();
            let resid = data.y(i) - eval_cef(&lee.spec.cef, &x, side).unwrap();
            sq += resid * resid;
        }
        let sd = (sq / data.n() as f64).sqrt();
        assert_abs_diff_eq!(sd, 0.1295, epsilon = 0.002);
    }

    #[test]
    fn sigma_zero_is_noiseless() {
        let mut lee = presets::lee();
        lee.spec.outcome = OutcomeKind::GaussianNoise { sigma: 0.0 };
        let data = lee.spec.simulate(500, 1).unwrap();
        for i in 0..data.n() {
            let side = if data.is_treated(i) { Side::Treated } else { Side::Control };
            let x = ScorePoint::scalar(data.x_row(i)[0]).unwrap();
            assert_eq!(data.y(i), eval_cef(&lee.spec.cef, &x, side).unwrap());
        }
    }

    #[test]
    fn bernoulli_outcomes_are_binary_and_consistent() {
        let kt = presets::kt_turnout();
        let data = kt.spec.simulate(2000, 9).unwrap();
        for i in 0..data.n() {
            assert!(data.y(i) == 0.0 || data.y(i) == 1.0);
        }
        data.validate_rule(&kt.spec.rule).unwrap();
    }

    #[test]
    fn simulate_is_deterministic_across_thread_counts() {
        let lee = presets::lee();
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| lee.spec.simulate(20_000, 77).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| lee.spec.simulate(20_000, 77).unwrap());
        assert_eq!(serial, parallel);
        assert_eq!(serial, lee.spec.simulate(20_000, 77).unwrap());
    }

    #[test]
    fn preset_lookup() {
        for name in presets::NAMES {
            let preset = presets::by_name(name).unwrap();
            preset.spec.validate().unwrap();
        }
        assert!(presets::by_name("nope").is_err());
    }
}
