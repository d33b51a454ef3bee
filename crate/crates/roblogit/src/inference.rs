//! Plug-in asymptotic inference for fitted coefficients.
//!
//! All quantities are empirical moment matrices evaluated at a fitted
//! coefficient vector:
//!
//! * `H = X' X / n` — the raw second-moment matrix of the design;
//! * `B = (1/n) sum_i score_psi(y_i, x_i' beta)^2 x_i x_i'` — the
//!   score-variance matrix over all columns;
//! * `A_active = (1/n) sum_i hessian_chi(y_i, x_{i,A}' beta_A) x_{i,A} x_{i,A}'`
//!   and `B_active` (same weighting as `B`) — restricted to an active block
//!   `A`, with the linear predictor rebuilt from the active block alone;
//! * the sandwich covariance `A_active^{-1} B_active A_active^{-1} / n`,
//!   inverted through a symmetric eigendecomposition with a condition-number
//!   gate;
//! * directional Wald statistics
//!   `sqrt(n) v' A_active (beta_hat_A - beta0_A) / sqrt(v' B_active v)`,
//!   standard normal in the large-sample limit under the model;
//! * a Monte Carlo squared prediction distance
//!   `mean over fresh design draws of (F(x' beta) - F(x' beta0))^2`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::design::Design;
use crate::error::{Error, Result};
use crate::loss::{hessian_chi, score_psi, sigmoid, LossSpec};

/// Condition-number limit beyond which a matrix is refused for inversion.
pub const CONDITION_LIMIT: f64 = 1e10;

/// Variance floor below which a Wald direction is declared degenerate.
pub const DEGENERATE_VARIANCE_LIMIT: f64 = 1e-14;

/// Tolerance on `| ||v||_2 - 1 |` for Wald directions.
const UNIT_NORM_TOL: f64 = 1e-8;

/// Extreme eigenvalues of a symmetric matrix.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EigenRange {
    /// Smallest eigenvalue.
    pub min: f64,
    /// Largest eigenvalue.
    pub max: f64,
}

/// Empirical moment matrices at a fitted coefficient vector.
#[derive(Clone, Debug)]
pub struct InferenceReport {
    /// Number of observations the matrices were averaged over.
    pub n: usize,
    /// The active block the restricted matrices refer to.
    pub active: Vec<usize>,
    /// `X' X / n` over all columns.
    pub h_full: Array2<f64>,
    /// Score-variance matrix over all columns, at the full predictor.
    pub b_full: Array2<f64>,
    /// Curvature matrix over the active block, at the restricted predictor.
    pub a_active: Array2<f64>,
    /// Score-variance matrix over the active block, at the restricted
    /// predictor.
    pub b_active: Array2<f64>,
    /// Eigenvalue range of `h_full`.
    pub h_eigen: EigenRange,
    /// Eigenvalue range of `b_full`.
    pub b_eigen: EigenRange,
    /// Eigenvalue range of `a_active`.
    pub a_active_eigen: EigenRange,
    /// Eigenvalue range of `b_active`.
    pub b_active_eigen: EigenRange,
}

/// Monte Carlo estimate of the squared prediction distance.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PredictionDistance {
    /// Mean of `(F(x' beta) - F(x' beta0))^2` over the draws.
    pub value: f64,
    /// Monte Carlo standard error of `value`.
    pub std_error: f64,
    /// Number of draws used.
    pub draws: usize,
}

fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Extreme eigenvalues via a symmetric eigendecomposition.
pub(crate) fn eigen_range(a: &Array2<f64>) -> EigenRange {
    let eig = SymmetricEigen::new(to_dmatrix(a));
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &l in eig.eigenvalues.iter() {
        min = min.min(l);
        max = max.max(l);
    }
    EigenRange { min, max }
}

/// Accumulates `(1/n) sum_i w_i x_i x_i'` over the given columns.
fn weighted_outer_mean(data: &Dataset, cols: &[usize], weights: &Array1<f64>) -> Array2<f64> {
    let n = data.n();
    let k = cols.len();
    let x = data.x();
    let mut m = Array2::zeros((k, k));
    for i in 0..n {
        let w = weights[i] / n as f64;
        for (aj, &j) in cols.iter().enumerate() {
            let xj = x[[i, j]];
            for (al, &l) in cols.iter().enumerate() {
                // Grouping the x-product first keeps the matrix symmetric
                // to the last bit: xj * xl and xl * xj are identical, so
                // entries (aj, al) and (al, aj) accumulate the same terms.
                m[[aj, al]] += w * (xj * x[[i, l]]);
            }
        }
    }
    m
}

/// Computes the plug-in moment matrices at `beta` for the active block
/// `active` (strictly increasing, non-empty, in range).
///
/// The full-design matrices use the complete linear predictor `x_i' beta`;
/// the active-block matrices rebuild the predictor from the active
/// coordinates alone, matching the restricted estimating equations they
/// feed into.
pub fn estimate_moment_matrices(
    data: &Dataset,
    beta: ArrayView1<'_, f64>,
    active: &[usize],
    loss: &LossSpec,
) -> Result<InferenceReport> {
    loss.validate()?;
    if beta.len() != data.p() {
        return Err(Error::invalid(format!(
            "coefficient length {} does not match design column count {}",
            beta.len(),
            data.p()
        )));
    }
    if active.is_empty() {
        return Err(Error::invalid("active block must be non-empty"));
    }
    if let Some(w) = active.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::invalid(format!(
            "active block must be strictly increasing; found {} before {}",
            w[0], w[1]
        )));
    }
    if *active.last().expect("non-empty") >= data.p() {
        return Err(Error::invalid(format!(
            "active index {} out of range for p = {}",
            active.last().unwrap(),
            data.p()
        )));
    }
    let n = data.n();
    let x = data.x();
    let y = data.y();
    let all: Vec<usize> = (0..data.p()).collect();

    // Full-design matrices at the complete predictor.
    let t_full = x.dot(&beta);
    let ones = Array1::ones(n);
    let h_full = weighted_outer_mean(data, &all, &ones);
    let psi_sq_full = Array1::from_iter(
        t_full
            .iter()
            .zip(y.iter())
            .map(|(&t, &yi)| score_psi(yi, t, loss).powi(2)),
    );
    let b_full = weighted_outer_mean(data, &all, &psi_sq_full);

    // Active-block matrices at the restricted predictor.
    let mut t_active = Array1::zeros(n);
    for i in 0..n {
        let mut acc = 0.0;
        for &j in active {
            acc += x[[i, j]] * beta[j];
        }
        t_active[i] = acc;
    }
    let chi_w = Array1::from_iter(
        t_active
            .iter()
            .zip(y.iter())
            .map(|(&t, &yi)| hessian_chi(yi, t, loss)),
    );
    let a_active = weighted_outer_mean(data, active, &chi_w);
    let psi_sq_active = Array1::from_iter(
        t_active
            .iter()
            .zip(y.iter())
            .map(|(&t, &yi)| score_psi(yi, t, loss).powi(2)),
    );
    let b_active = weighted_outer_mean(data, active, &psi_sq_active);

    let h_eigen = eigen_range(&h_full);
    let b_eigen = eigen_range(&b_full);
    let a_active_eigen = eigen_range(&a_active);
    let b_active_eigen = eigen_range(&b_active);
    Ok(InferenceReport {
        n,
        active: active.to_vec(),
        h_full,
        b_full,
        a_active,
        b_active,
        h_eigen,
        b_eigen,
        a_active_eigen,
        b_active_eigen,
    })
}

/// Symmetric inverse through an eigendecomposition, gated on the spectral
/// condition number.
fn gated_inverse(a: &Array2<f64>) -> Result<Array2<f64>> {
    let k = a.nrows();
    let eig = SymmetricEigen::new(to_dmatrix(a));
    let mut abs_min = f64::INFINITY;
    let mut abs_max = 0.0f64;
    for &l in eig.eigenvalues.iter() {
        abs_min = abs_min.min(l.abs());
        abs_max = abs_max.max(l.abs());
    }
    let condition = if abs_min == 0.0 {
        f64::INFINITY
    } else {
        abs_max / abs_min
    };
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::IllConditioned {
            condition,
            limit: CONDITION_LIMIT,
        });
    }
    let mut inv = Array2::zeros((k, k));
    for i in 0..k {
        for j in 0..k {
            let mut acc = 0.0;
            for m in 0..k {
                acc += eig.eigenvectors[(i, m)] * eig.eigenvectors[(j, m)]
                    / eig.eigenvalues[m];
            }
            inv[[i, j]] = acc;
        }
    }
    Ok(inv)
}

/// Sandwich covariance of the active block:
/// `A_active^{-1} B_active A_active^{-1} / n`, symmetrized.
///
/// Errors with [`Error::IllConditioned`] when the curvature matrix cannot
/// be inverted reliably.
pub fn sandwich_covariance(report: &InferenceReport) -> Result<Array2<f64>> {
    let a_inv = gated_inverse(&report.a_active)?;
    let mut cov = a_inv.dot(&report.b_active).dot(&a_inv);
    cov.mapv_inplace(|v| v / report.n as f64);
    let sym = &cov + &cov.t();
    Ok(sym.mapv(|v| 0.5 * v))
}

/// Directional Wald statistic for the active block:
///
/// ```text
/// sqrt(n) v' A_active (beta_hat_A - beta0_A) / sqrt(v' B_active v)
/// ```
///
/// `v` must be unit length (within `1e-8`) and match the block dimension.
/// Errors with [`Error::DegenerateDirection`] when the variance term falls
/// below `1e-14`.
pub fn wald_statistic(
    v: ArrayView1<'_, f64>,
    report: &InferenceReport,
    beta_hat_active: ArrayView1<'_, f64>,
    beta0_active: ArrayView1<'_, f64>,
    n: usize,
) -> Result<f64> {
    let k = report.active.len();
    if v.len() != k || beta_hat_active.len() != k || beta0_active.len() != k {
        return Err(Error::invalid(format!(
            "direction and coefficient blocks must have length {k}; got {}, {}, {}",
            v.len(),
            beta_hat_active.len(),
            beta0_active.len()
        )));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::invalid(format!(
            "direction must be unit length; got norm {norm}"
        )));
    }
    let bv = report.b_active.dot(&v);
    let variance = v.dot(&bv);
    if variance <= DEGENERATE_VARIANCE_LIMIT {
        return Err(Error::DegenerateDirection {
            variance,
            limit: DEGENERATE_VARIANCE_LIMIT,
        });
    }
    let diff = &beta_hat_active.to_owned() - &beta0_active;
    let a_diff = report.a_active.dot(&diff);
    Ok((n as f64).sqrt() * v.dot(&a_diff) / variance.sqrt())
}

/// Monte Carlo squared prediction distance between two coefficient vectors
/// under a design distribution:
/// `mean over draws x of (F(x' beta) - F(x' beta0))^2`, with its standard
/// error.
///
/// Fresh rows are drawn from the design with a dedicated seeded generator,
/// so the estimate is reproducible and independent of any fitted dataset.
pub fn prediction_distance(
    beta: ArrayView1<'_, f64>,
    beta0: ArrayView1<'_, f64>,
    design: &Design,
    draws: usize,
    seed: u64,
) -> Result<PredictionDistance> {
    if beta.len() != beta0.len() {
        return Err(Error::invalid(format!(
            "coefficient vectors must have equal length; got {} and {}",
            beta.len(),
            beta0.len()
        )));
    }
    if draws == 0 {
        return Err(Error::invalid("prediction distance needs at least one draw"));
    }
    let sampler = design.sampler(beta.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut row = vec![0.0; beta.len()];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..draws {
        sampler.sample_row(&mut rng, &mut row);
        let mut t1 = 0.0;
        let mut t0 = 0.0;
        for (j, &xj) in row.iter().enumerate() {
            t1 += xj * beta[j];
            t0 += xj * beta0[j];
        }
        let d = sigmoid(t1) - sigmoid(t0);
        let d2 = d * d;
        sum += d2;
        sum_sq += d2 * d2;
    }
    let m = draws as f64;
    let value = sum / m;
    let var = f64::max(sum_sq / m - value * value, 0.0);
    Ok(PredictionDistance {
        value,
        std_error: (var / m).sqrt(),
        draws,
    })
}
