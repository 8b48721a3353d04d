//! Kernel-weighted local linear regression for univariate designs.
//!
//! The estimator fits one weighted linear regression on each side of the
//! cutoff and reports the difference of the fitted intercepts. Standard
//! errors come from the heteroskedasticity-robust sandwich of each side's
//! weighted regression; no bias correction is applied, so interval coverage
//! is only nominal under undersmoothing.

use crate::domain::{Dataset, EstimateReport};
use crate::error::{Error, Result, Side};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelShape {
    Triangular,
    Epanechnikov,
    Uniform,
}

/// Bandwidth choice: a fixed value or the rule of thumb in
/// [`rot_bandwidth`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum Bandwidth {
    Fixed(f64),
    RuleOfThumb,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub shape: KernelShape,
    pub bandwidth: Bandwidth,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { shape: KernelShape::Triangular, bandwidth: Bandwidth::RuleOfThumb }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if let Bandwidth::Fixed(h) = self.bandwidth {
            if !h.is_finite() || h <= 0.0 {
                return Err(Error::Config(format!("bandwidth must be positive, got {h}")));
            }
        }
        Ok(())
    }
}

/// Kernel weight of an offset `t` at bandwidth `h > 0`.
pub fn kernel_weight(shape: KernelShape, t: f64, h: f64) -> f64 {
    let u = t / h;
    match shape {
        KernelShape::Triangular => (1.0 - u.abs()).max(0.0),
        KernelShape::Epanechnikov => 0.75 * (1.0 - u * u).max(0.0),
        KernelShape::Uniform => {
            if u.abs() <= 1.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Weighted least-squares line fit minimizing
/// sum_i w_i (y_i - b0 - b1 (x_i - center))^2.
///
/// Returns (intercept, slope); the intercept is the fitted value at `center`.
pub fn wls_linear_fit(xs: &[f64], ys: &[f64], weights: &[f64], center: f64) -> Result<(f64, f64)> {
    let (b0, b1, _) = wls_fit_internal(xs, ys, weights, center)?;
    Ok((b0, b1))
}

/// Fit plus the HC0 sandwich variance of the intercept.
fn wls_fit_internal(
    xs: &[f64],
    ys: &[f64],
    weights: &[f64],
    center: f64,
) -> Result<(f64, f64, f64)> {
    if xs.len() != ys.len() || xs.len() != weights.len() {
        return Err(Error::Config("xs, ys, and weights must share a length".into()));
    }
    if weights.iter().any(|w| w.is_nan() || *w < 0.0) {
        return Err(Error::Config("weights must be nonnegative".into()));
    }
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    let (mut t0, mut t1) = (0.0, 0.0);
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
        if w == 0.0 {
            continue;
        }
        let t = x - center;
        s0 += w;
        s1 += w * t;
        s2 += w * t * t;
        t0 += w * y;
        t1 += w * t * y;
    }
    let det = s0 * s2 - s1 * s1;
    let det_floor = 1e-12 * s0 * s2.max(f64::MIN_POSITIVE);
    if s0 <= 0.0 || det.is_nan() || det <= det_floor {
        return Err(Error::SingularDesign);
    }
    let intercept = (s2 * t0 - s1 * t1) / det;
    let slope = (s0 * t1 - s1 * t0) / det;

    // HC0 sandwich: Var(beta) = A^-1 (sum (w e)^2 z z') A^-1 with z = (1, t).
    // For the intercept only the first row of A^-1 matters:
    // row = (s2, -s1) / det.
    let mut meat00 = 0.0;
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(weights) {
        if w == 0.0 {
            continue;
        }
        let t = x - center;
        let e = y - intercept - slope * t;
        let g = w * e * (s2 - s1 * t) / det;
        meat00 += g * g;
    }
    Ok((intercept, slope, meat00))
}

/// Silverman-style rule-of-thumb bandwidth h = 1.06 sd(x) n^(-1/5), grown if
/// needed so each side of the cutoff keeps at least 10 points with nonzero
/// kernel weight.
pub fn rot_bandwidth(xs: &[f64], cutoff: f64) -> Result<f64> {
    const MIN_OBS: usize = 20;
    const MIN_SIDE: usize = 10;
    let n = xs.len();
    if n < MIN_OBS {
        return Err(Error::Config(format!(
            "rule-of-thumb bandwidth needs at least {MIN_OBS} observations, got {n}"
        )));
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd.is_nan() || sd <= 0.0 {
        return Err(Error::Config("degenerate scores: zero standard deviation".into()));
    }
    let h0 = 1.06 * sd * (n as f64).powf(-0.2);

    let mut upper: Vec<f64> = xs.iter().filter(|&&x| x >= cutoff).map(|x| x - cutoff).collect();
    let mut lower: Vec<f64> = xs.iter().filter(|&&x| x < cutoff).map(|x| cutoff - x).collect();
    if upper.len() < MIN_SIDE || lower.len() < MIN_SIDE {
        return Err(Error::Config(format!(
            "need at least {MIN_SIDE} observations per side of the cutoff"
        )));
    }
    upper.sort_unstable_by(f64::total_cmp);
    lower.sort_unstable_by(f64::total_cmp);
    // Distance of the 10th closest point on the sparser side, nudged so the
    // strict-support kernels keep it weighted.
    let needed = upper[MIN_SIDE - 1].max(lower[MIN_SIDE - 1]) * (1.0 + 1e-9);
    Ok(h0.max(needed))
}

/// Local linear RD estimate on a univariate dataset: side-wise kernel-weighted
/// line fits at the cutoff, the jump of the fitted intercepts, and a
/// sandwich standard error.
pub fn llr_rd_estimate(
    data: &Dataset,
    cutoff: f64,
    kernel: &KernelSpec,
    level: f64,
) -> Result<EstimateReport> {
    if data.dim() != 1 {
        return Err(Error::Method(
            "local linear regression needs a univariate score; collapse multivariate scores first"
                .into(),
        ));
    }
    kernel.validate()?;
    let xs = data.xs();
    let ys = data.ys();
    let h = match kernel.bandwidth {
        Bandwidth::Fixed(h) => h,
        Bandwidth::RuleOfThumb => rot_bandwidth(xs, cutoff)?,
    };

    let mut sides: [(Vec<f64>, Vec<f64>, Vec<f64>); 2] = Default::default();
    for (&x, &y) in xs.iter().zip(ys) {
        let idx = usize::from(x < cutoff); // 0 = treated side, 1 = control side
        let w = kernel_weight(kernel.shape, x - cutoff, h);
        sides[idx].0.push(x);
        sides[idx].1.push(y);
        sides[idx].2.push(w);
    }
    let side_names = [Side::Treated, Side::Control];
    let mut intercepts = [0.0; 2];
    let mut variances = [0.0; 2];
    let mut counts = [0usize; 2];
    for (k, (sx, sy, sw)) in sides.iter().enumerate() {
        let weighted = sw.iter().filter(|w| **w > 0.0).count();
        if weighted == 0 {
            return Err(Error::EmptySide(side_names[k]));
        }
        let (b0, _, v00) = wls_fit_internal(sx, sy, sw, cutoff)?;
        intercepts[k] = b0;
        variances[k] = v00;
        counts[k] = weighted;
    }

    let tau = intercepts[0] - intercepts[1];
    let se = (variances[0] + variances[1]).sqrt();
    EstimateReport::from_moments(tau, se, level, counts[0], counts[1])
}
