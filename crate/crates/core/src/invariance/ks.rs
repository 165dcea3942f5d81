//! Two-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov
//! p-value.

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// `sqrt(q·r / (q + r)) · D`.
    pub statistic: f64,
    /// Largest gap between the two empirical CDFs.
    pub d: f64,
    pub q: usize,
    pub r: usize,
    pub p_value: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`,
/// clamped to `[0, 1]`.
///
/// For `λ < 1.18` the alternating series converges slowly and its partial
/// sums wobble around 1, so the equivalent theta-function form
/// `1 − (√(2π)/λ) Σ_{k≥1} exp(−(2k−1)²π²/(8λ²))` is summed instead.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    if lambda < 1.18 {
        let base = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        for k in 1.. {
            let odd = (2 * k - 1) as f64;
            let term = (odd * odd * base).exp();
            sum += term;
            if term < 1e-17 {
                break;
            }
        }
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * sum;
        return (1.0 - cdf).clamp(0.0, 1.0);
    }
    let mut sign = 1.0;
    for k in 1.. {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(x: &[f64]) -> Cow<'_, [f64]> {
    if x.windows(2).all(|w| w[0] <= w[1]) {
        return Cow::Borrowed(x);
    }
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    Cow::Owned(v)
}

/// Sup-distance between the empirical CDFs of `a` and `b`.
///
/// Both samples are walked in merged order; at each distinct value every
/// copy of it is consumed from both sides before the gap is measured, so
/// ties are handled exactly.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (a, b) = (sorted(a), sorted(b));
    let (q, r) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    // Counts are compared as integers scaled by q·r to keep D exact.
    let mut best: usize = 0;
    while i < q && j < r {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < q && a[i] == x {
            i += 1;
        }
        while j < r && b[j] == x {
            j += 1;
        }
        best = best.max((i * r).abs_diff(j * q));
    }
    Ok(best as f64 / (q * r) as f64)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let d = ks_statistic(a, b)?;
    let (q, r) = (a.len(), b.len());
    let statistic = ((q * r) as f64 / (q + r) as f64).sqrt() * d;
    let p_value = if d == 0.0 {
        1.0
    } else {
        kolmogorov_q(statistic)
    };
    Ok(KsResult {
        statistic,
        d,
        q,
        r,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [0.3, 0.1, 0.2];
        let res = ks_two_sample(&a, &a).unwrap();
        assert_eq!(res.d, 0.0);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn disjoint_samples() {
        let res = ks_two_sample(&[0.1, 0.2, 0.3], &[0.4, 0.5, 0.6]).unwrap();
        assert_eq!(res.d, 1.0);
        assert!((res.statistic - 1.5f64.sqrt()).abs() < 1e-12);
        // 2·(e^{-3} − e^{-12} + e^{-27} − …)
        let expected = 2.0 * ((-3.0f64).exp() - (-12.0f64).exp() + (-27.0f64).exp());
        assert!((res.p_value - expected).abs() < 1e-12);
        assert!((res.p_value - 0.0996).abs() < 5e-5);
    }

    #[test]
    fn ties_across_samples() {
        assert_eq!(
            ks_statistic(&[1.0, 1.0, 4.0, 4.0], &[1.0, 1.0, 1.0, 4.0]).unwrap(),
            0.25
        );
        assert_eq!(
            ks_statistic(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn reference_values() {
        let xs = [0.42, 0.24, 0.86, 0.85, 0.82, 0.82, 0.25, 0.78, 0.13, 0.27];
        let ys = [0.24, 0.27, 0.87, 0.29, 0.57, 0.44, 0.5, 0.00, 0.56, 0.03];
        assert!((ks_statistic(&xs, &ys).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn empty_sample() {
        assert!(matches!(
            ks_two_sample(&[], &[1.0]),
            Err(Error::EmptySample)
        ));
        assert!(matches!(
            ks_two_sample(&[1.0], &[]),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn q_limits() {
        assert_eq!(kolmogorov_q(0.0), 1.0);
        assert!(kolmogorov_q(0.3) > 0.9999);
        assert!(kolmogorov_q(5.0) < 1e-20);
        // Tabulated: Q(1.36) ≈ 0.0494, Q(1.63) ≈ 0.0098.
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 5e-4);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn q_branches_agree_at_the_switch() {
        let below = kolmogorov_q(1.18 - 1e-12);
        let above = kolmogorov_q(1.18);
        assert!((below - above).abs() < 1e-12, "{below} {above}");
        // Q(1) ≈ 0.2700.
        assert!((kolmogorov_q(1.0) - 0.26999967).abs() < 1e-7);
    }
}
