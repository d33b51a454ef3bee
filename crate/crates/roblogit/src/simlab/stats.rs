//! Statistical utilities for experiment aggregation: medians, sample
//! variance, a one-sample Kolmogorov–Smirnov test against the standard
//! normal, and a log-log least-squares slope with its standard error.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Minimum sample size accepted by [`normality_check`]; the asymptotic
/// p-value approximation is poor below this.
pub const KS_MIN_SAMPLES: usize = 100;

/// Result of the Kolmogorov–Smirnov normality check.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KsCheck {
    /// Supremum deviation between the empirical CDF and the standard
    /// normal CDF.
    pub statistic: f64,
    /// Asymptotic p-value of the deviation.
    pub p_value: f64,
}

/// Slope of a log-log least-squares fit with its standard error.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RateSlope {
    /// Fitted slope.
    pub slope: f64,
    /// Standard error of the slope (residual-based, `points - 2` degrees
    /// of freedom).
    pub std_error: f64,
    /// Number of points the line was fitted to.
    pub points: usize,
}

/// Median of a slice (mean of the two central order statistics for even
/// lengths). Panics on an empty slice.
pub(crate) fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Unbiased sample variance; zero for fewer than two values.
pub(crate) fn sample_variance(values: &[f64]) -> f64 {
    let m = values.len();
    if m < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64
}

/// Standard normal CDF.
pub(crate) fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Survival function `Q(x) = P(K > x)` of the Kolmogorov distribution.
///
/// Uses the alternating series for moderate and large arguments and the
/// theta-function form of the CDF for small ones, where the alternating
/// series converges too slowly.
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < 1.18 {
        // CDF = sqrt(2 pi) / x * sum_{k odd} exp(-k^2 pi^2 / (8 x^2)).
        let t = (-std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x)).exp();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / x
            * (t + t.powi(9) + t.powi(25) + t.powi(49));
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        for k in 1..=200u32 {
            let term = (-2.0 * f64::from(k * k) * x * x).exp();
            sum += sign * term;
            if term < 1e-17 {
                break;
            }
            sign = -sign;
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov–Smirnov check of `samples` against the standard
/// normal distribution.
///
/// Requires at least [`KS_MIN_SAMPLES`] finite values; returns the supremum
/// deviation and its asymptotic p-value.
pub fn normality_check(samples: &[f64]) -> Result<KsCheck> {
    let m = samples.len();
    if m < KS_MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "normality check needs at least {KS_MIN_SAMPLES} samples, got {m}"
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("normality check requires finite samples"));
    }
    let mut s = samples.to_vec();
    s.sort_unstable_by(f64::total_cmp);
    let mf = m as f64;
    let mut d = 0.0f64;
    for (i, &v) in s.iter().enumerate() {
        let cdf = standard_normal_cdf(v);
        d = d
            .max(cdf - i as f64 / mf)
            .max((i + 1) as f64 / mf - cdf);
    }
    Ok(KsCheck {
        statistic: d,
        p_value: kolmogorov_sf(mf.sqrt() * d),
    })
}

/// Least-squares slope of `ln y` on `ln x`, with a residual-based standard
/// error. Requires at least three points, positive inputs, and
/// non-degenerate spread in `ln x`.
pub(crate) fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<RateSlope> {
    assert_eq!(xs.len(), ys.len());
    let m = xs.len();
    if m < 3 {
        return Err(Error::invalid(format!(
            "slope estimation needs at least 3 points, got {m}"
        )));
    }
    if xs.iter().chain(ys.iter()).any(|&v| !v.is_finite() || v <= 0.0) {
        return Err(Error::domain(
            "slope estimation requires positive finite inputs",
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let mean_x = lx.iter().sum::<f64>() / m as f64;
    let mean_y = ly.iter().sum::<f64>() / m as f64;
    let sxx: f64 = lx.iter().map(|v| (v - mean_x) * (v - mean_x)).sum();
    if sxx < 1e-24 {
        return Err(Error::invalid(
            "slope estimation requires spread in the predictor",
        ));
    }
    let sxy: f64 = lx
        .iter()
        .zip(ly.iter())
        .map(|(a, b)| (a - mean_x) * (b - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = lx
        .iter()
        .zip(ly.iter())
        .map(|(a, b)| {
            let r = b - intercept - slope * a;
            r * r
        })
        .sum();
    let sigma2 = rss / (m - 2) as f64;
    Ok(RateSlope {
        slope,
        std_error: (sigma2 / sxx).sqrt(),
        points: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn median_and_variance_basics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(sample_variance(&[1.0]), 0.0);
        let v = sample_variance(&[1.0, 2.0, 3.0, 4.0]);
        assert!((v - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_sf_reference_values() {
        // Classical table values of the Kolmogorov distribution.
        assert!((kolmogorov_sf(1.36) - 0.05).abs() < 2e-3);
        assert!((kolmogorov_sf(1.63) - 0.01).abs() < 1e-3);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
        assert!(kolmogorov_sf(0.2) > 0.999);
        assert!(kolmogorov_sf(5.0) < 1e-10);
        // Continuity across the series switch.
        let left = kolmogorov_sf(1.18 - 1e-9);
        let right = kolmogorov_sf(1.18 + 1e-9);
        assert!((left - right).abs() < 1e-6);
    }

    #[test]
    fn normality_check_accepts_normal_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let ks = normality_check(&samples).unwrap();
        assert!(
            ks.p_value > 0.01,
            "seeded normal draws should pass: D = {}, p = {}",
            ks.statistic,
            ks.p_value
        );
    }

    #[test]
    fn normality_check_rejects_shifted_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let samples: Vec<f64> = (0..10_000)
            .map(|_| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng) + 0.25
            })
            .collect();
        let ks = normality_check(&samples).unwrap();
        assert!(ks.p_value < 1e-6);
    }

    #[test]
    fn normality_check_validates_input() {
        assert!(normality_check(&[0.0; 99]).is_err());
        let mut bad = vec![0.0; 200];
        bad[5] = f64::NAN;
        assert!(normality_check(&bad).is_err());
    }

    #[test]
    fn log_log_slope_recovers_power_laws() {
        // Exact power law: y = 3 x^{-1/2}.
        let xs: Vec<f64> = vec![10.0, 20.0, 40.0, 80.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-0.5)).collect();
        let fit = log_log_slope(&xs, &ys).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!(fit.std_error < 1e-12);
        assert_eq!(fit.points, 4);
        // Validation.
        assert!(log_log_slope(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(log_log_slope(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(log_log_slope(&[1.0, 2.0, -3.0], &[1.0, 2.0, 3.0]).is_err());
    }
}
