//! Small shared numerics: compensated sums, dense solves, normal quantiles.

use crate::error::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal};

/// Kahan-compensated sum.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Dot product with compensated summation.
pub fn kahan_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    kahan_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

/// Sample mean; 0.0 on empty input.
pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        kahan_sum(values.iter().copied()) / values.len() as f64
    }
}

/// Unbiased sample variance (n-1 divisor); 0.0 with fewer than two values.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    kahan_sum(values.iter().map(|v| (v - m) * (v - m))) / (n - 1) as f64
}

/// Solves the dense `n x n` system `a x = b` in place with partial pivoting.
///
/// `a` is row-major with `n*n` entries. Returns `SingularDesign` when a pivot
/// collapses relative to the matrix scale. Meant for the small (d+1)-sized
/// regression systems in this crate, not general linear algebra.
pub fn solve_dense(a: &mut [f64], b: &mut [f64]) -> Result<Vec<f64>> {
    let n = b.len();
    assert_eq!(a.len(), n * n, "matrix shape mismatch");
    let scale = a
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = 1e-13 * scale;

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = row;
            }
        }
        if pivot_val <= tol {
            return Err(Error::SingularDesign);
        }
        if pivot_row != col {
            for k in 0..n {
                a.swap(col * n + k, pivot_row * n + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }

    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col * n + k] * x[k];
        }
        x[col] = acc / a[col * n + col];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularDesign);
    }
    Ok(x)
}

/// Two-sided standard-normal critical value for a confidence level in (0,1).
///
/// `normal_critical_value(0.95)` is 1.959964 to six decimals.
pub fn normal_critical_value(level: f64) -> Result<f64> {
    if !level.is_finite() || level <= 0.0 || level >= 1.0 {
        return Err(Error::Config(format!(
            "confidence level must lie in (0,1), got {level}"
        )));
    }
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok(std_normal.inverse_cdf(0.5 + level / 2.0))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("unit normal").cdf(x)
}

/// Logistic function, saturating cleanly for large |x|.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
