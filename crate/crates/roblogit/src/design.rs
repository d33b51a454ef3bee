//! Design distributions for data generation and Monte Carlo integration.
//!
//! A [`Design`] describes the row distribution of a design matrix. Rows are
//! drawn through a [`DesignSampler`], which precomputes whatever the
//! distribution needs (e.g. a Cholesky factor) so repeated sampling is cheap
//! and the stream of random draws per row is fixed and documented — scale
//! variable first (when the family has one), then the Gaussian coordinates —
//! which makes generation reproducible for a given seeded generator.

use nalgebra::{Cholesky, DMatrix};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distribution of the per-row scale factor in a scale-mixture design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScaleDistribution {
    /// Scale `s1` with probability `prob1`, otherwise `s2`.
    TwoPoint {
        /// First scale value; must be positive.
        s1: f64,
        /// Second scale value; must be positive.
        s2: f64,
        /// Probability of drawing `s1`, in `[0, 1]`.
        prob1: f64,
    },
}

impl ScaleDistribution {
    fn validate(&self) -> Result<()> {
        match *self {
            ScaleDistribution::TwoPoint { s1, s2, prob1 } => {
                for (name, s) in [("s1", s1), ("s2", s2)] {
                    if !s.is_finite() || s <= 0.0 {
                        return Err(Error::invalid(format!(
                            "scale {name} must be a positive finite number, got {s}"
                        )));
                    }
                }
                if !(0.0..=1.0).contains(&prob1) {
                    return Err(Error::invalid(format!(
                        "scale probability must lie in [0, 1], got {prob1}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Row distribution of the design matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Design {
    /// Independent standard Gaussian coordinates.
    GaussianIdentity,
    /// Centered Gaussian with an explicit covariance matrix; pins the
    /// dimension to the matrix size, so it only combines with a fixed
    /// column-count rule.
    GaussianCov {
        /// Covariance matrix as rows; must be square, symmetric, and
        /// positive definite.
        cov: Vec<Vec<f64>>,
    },
    /// Elliptical Student-t rows: a single chi-square scale per row times
    /// independent Gaussian coordinates.
    StudentT {
        /// Degrees of freedom; must be positive.
        df: f64,
    },
    /// Gaussian rows multiplied by an independent per-row scale.
    ScaleMixture {
        /// Distribution of the per-row scale.
        scale: ScaleDistribution,
    },
}

impl Design {
    /// Checks the parameters of the distribution.
    pub fn validate(&self) -> Result<()> {
        match self {
            Design::GaussianIdentity => Ok(()),
            Design::GaussianCov { cov } => {
                let p = cov.len();
                if p == 0 {
                    return Err(Error::invalid("covariance matrix must be non-empty"));
                }
                if cov.iter().any(|row| row.len() != p) {
                    return Err(Error::invalid("covariance matrix must be square"));
                }
                for (i, row) in cov.iter().enumerate() {
                    for (j, &a) in row.iter().enumerate() {
                        let b = cov[j][i];
                        if !a.is_finite() {
                            return Err(Error::domain(format!(
                                "covariance entry ({i}, {j}) is not finite"
                            )));
                        }
                        if (a - b).abs() > 1e-12 * f64::max(1.0, a.abs().max(b.abs())) {
                            return Err(Error::invalid(format!(
                                "covariance matrix must be symmetric; entries ({i}, {j}) \
                                 and ({j}, {i}) differ"
                            )));
                        }
                    }
                }
                Ok(())
            }
            Design::StudentT { df } => {
                if !df.is_finite() || *df <= 0.0 {
                    return Err(Error::invalid(format!(
                        "degrees of freedom must be a positive finite number, got {df}"
                    )));
                }
                Ok(())
            }
            Design::ScaleMixture { scale } => scale.validate(),
        }
    }

    /// The dimension this design pins, if any (only the explicit-covariance
    /// Gaussian does).
    pub fn fixed_p(&self) -> Option<usize> {
        match self {
            Design::GaussianCov { cov } => Some(cov.len()),
            _ => None,
        }
    }

    /// Builds a sampler for `p`-dimensional rows.
    ///
    /// Errors if the parameters are invalid, if `p` disagrees with a pinned
    /// dimension, or if an explicit covariance is not positive definite.
    pub fn sampler(&self, p: usize) -> Result<DesignSampler> {
        self.validate()?;
        if p == 0 {
            return Err(Error::invalid("row dimension must be at least 1"));
        }
        if let Some(q) = self.fixed_p() {
            if q != p {
                return Err(Error::invalid(format!(
                    "design pins the dimension to {q}, but {p} was requested"
                )));
            }
        }
        let kind = match self {
            Design::GaussianIdentity => SamplerKind::Identity,
            Design::GaussianCov { cov } => {
                let m = DMatrix::from_fn(p, p, |i, j| cov[i][j]);
                let chol = Cholesky::new(m).ok_or_else(|| {
                    Error::invalid("covariance matrix must be positive definite")
                })?;
                SamplerKind::Factor(chol.unpack())
            }
            Design::StudentT { df } => SamplerKind::StudentT {
                df: *df,
                chi2: ChiSquared::new(*df).map_err(|e| {
                    Error::invalid(format!("invalid chi-square parameter: {e}"))
                })?,
            },
            Design::ScaleMixture { scale } => SamplerKind::Mixture(scale.clone()),
        };
        Ok(DesignSampler { p, kind })
    }
}

enum SamplerKind {
    Identity,
    Factor(DMatrix<f64>),
    StudentT { df: f64, chi2: ChiSquared<f64> },
    Mixture(ScaleDistribution),
}

/// Prepared row sampler for a [`Design`].
pub struct DesignSampler {
    p: usize,
    kind: SamplerKind,
}

impl DesignSampler {
    /// Row dimension.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Draws one row into `out` (length must match the dimension).
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.p, "output buffer has the wrong length");
        match &self.kind {
            SamplerKind::Identity => {
                for v in out.iter_mut() {
                    *v = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
                }
            }
            SamplerKind::Factor(l) => {
                let z: Vec<f64> = (0..self.p)
                    .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                    .collect();
                // x = L z with L lower triangular.
                for i in 0..self.p {
                    let mut acc = 0.0;
                    for j in 0..=i {
                        acc += l[(i, j)] * z[j];
                    }
                    out[i] = acc;
                }
            }
            SamplerKind::StudentT { df, chi2 } => {
                let w: f64 = chi2.sample(rng);
                let s = (df / w).sqrt();
                for v in out.iter_mut() {
                    let z: f64 =
                        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
                    *v = s * z;
                }
            }
            SamplerKind::Mixture(ScaleDistribution::TwoPoint { s1, s2, prob1 }) => {
                let u: f64 = rng.random();
                let s = if u < *prob1 { *s1 } else { *s2 };
                for v in out.iter_mut() {
                    let z: f64 =
                        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
                    *v = s * z;
                }
            }
        }
    }
}
