//! Coordinate-separable penalties and their proximal maps.
//!
//! A penalty is described by a scalar function `J` applied to each
//! coefficient magnitude; the full penalty of a vector is
//! `sum_j J(|beta_j|)`. Implemented families:
//!
//! * `none` — no penalty;
//! * `lasso` — `J(t) = lambda t`;
//! * `ridge` — `J(t) = lambda t^2 / 2`;
//! * `elastic_net(theta)` — `J(t) = lambda (theta t + (1 - theta) t^2 / 2)`;
//! * `scad(a)` — linear up to `lambda`, then the quadratic blend
//!   `(a lambda t - (t^2 + lambda^2)/2) / (a - 1)` up to `a lambda`, then the
//!   constant `lambda^2 (a + 1) / 2` (continuous, with continuous derivative);
//! * `mcp(a)` — `lambda t - t^2 / (2a)` up to `a lambda`, then the constant
//!   `a lambda^2 / 2`;
//! * `bridge(q)` — `J(t) = lambda t^q` for `q` in `(0, 1]`, value-only for
//!   `q < 1` (its proximal map is not offered).
//!
//! The proximal map `prox(z; eta) = argmin_b (b - z)^2 / 2 + eta J(|b|)` has
//! a closed form for every family except bridge with `q < 1`; for the
//! folded-concave families the closed form is the exact minimizer only while
//! the subproblem stays strongly convex (`eta < a - 1` for SCAD, `eta < a`
//! for MCP). Outside that regime a dense-grid scan with golden-section
//! refinement is used, with ties between a zero and non-zero minimizer
//! resolved toward zero.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default concavity constant for SCAD.
pub const DEFAULT_SCAD_A: f64 = 3.7;

/// Default concavity constant for MCP.
pub const DEFAULT_MCP_A: f64 = 3.0;

/// Number of intervals used by the grid stage of the proximal fallback.
const PROX_GRID_INTERVALS: usize = 2000;

/// Golden-section iterations used to polish the grid minimizer.
const PROX_POLISH_ITERS: usize = 80;

/// Penalty family with its shape parameters (the level `lambda` lives in
/// [`PenaltySpec`]).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltyFamily {
    /// No penalty.
    None,
    /// L1 penalty.
    Lasso,
    /// Squared-L2 penalty.
    Ridge,
    /// Convex combination of L1 and squared-L2 parts.
    ElasticNet {
        /// Weight of the L1 part, in `[0, 1]`.
        theta: f64,
    },
    /// Smoothly clipped absolute deviation; requires `a > 2`.
    Scad {
        /// Concavity constant.
        a: f64,
    },
    /// Minimax concave penalty; requires `a > 1`.
    Mcp {
        /// Concavity constant.
        a: f64,
    },
    /// L_q bridge penalty with `q` in `(0, 1]`; value-only for `q < 1`.
    Bridge {
        /// Exponent.
        q: f64,
    },
}

/// A penalty family together with its level `lambda >= 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    /// Shape of the scalar penalty.
    pub family: PenaltyFamily,
    /// Penalty level; scales the whole scalar function.
    pub lambda: f64,
}

impl PenaltySpec {
    /// Builds a spec after validating the parameters.
    pub fn new(family: PenaltyFamily, lambda: f64) -> Result<Self> {
        let spec = PenaltySpec { family, lambda };
        spec.validate()?;
        Ok(spec)
    }

    /// The unpenalized spec.
    pub fn none() -> Self {
        PenaltySpec {
            family: PenaltyFamily::None,
            lambda: 0.0,
        }
    }

    /// L1 penalty at level `lambda`.
    pub fn lasso(lambda: f64) -> Result<Self> {
        PenaltySpec::new(PenaltyFamily::Lasso, lambda)
    }

    /// Squared-L2 penalty at level `lambda`.
    pub fn ridge(lambda: f64) -> Result<Self> {
        PenaltySpec::new(PenaltyFamily::Ridge, lambda)
    }

    /// Elastic net with L1 weight `theta`.
    pub fn elastic_net(lambda: f64, theta: f64) -> Result<Self> {
        PenaltySpec::new(PenaltyFamily::ElasticNet { theta }, lambda)
    }

    /// SCAD with the conventional concavity constant 3.7.
    pub fn scad(lambda: f64) -> Result<Self> {
        PenaltySpec::new(PenaltyFamily::Scad { a: DEFAULT_SCAD_A }, lambda)
    }

    /// SCAD with an explicit concavity constant.
    pub fn scad_with(lambda: f64, a: f64) -> Result<Self> {
        PenaltySpec::new(PenaltyFamily::Scad { a }, lambda)
    }

    /// MCP with the conventional concavity constant 3.
    pub fn mcp(lambda: f64) -> Result<Self> {
        PenaltySpec::new(PenaltyFamily::Mcp { a: DEFAULT_MCP_A }, lambda)
    }

    /// MCP with an explicit concavity constant.
    pub fn mcp_with(lambda: f64, a: f64) -> Result<Self> {
        PenaltySpec::new(PenaltyFamily::Mcp { a }, lambda)
    }

    /// Bridge penalty with exponent `q` in `(0, 1]`.
    pub fn bridge(lambda: f64, q: f64) -> Result<Self> {
        PenaltySpec::new(PenaltyFamily::Bridge { q }, lambda)
    }

    /// Checks parameter validity (for specs built via deserialization).
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::invalid(format!(
                "penalty level must be a non-negative finite number, got {}",
                self.lambda
            )));
        }
        match self.family {
            PenaltyFamily::None | PenaltyFamily::Lasso | PenaltyFamily::Ridge => Ok(()),
            PenaltyFamily::ElasticNet { theta } => {
                if !(0.0..=1.0).contains(&theta) {
                    return Err(Error::invalid(format!(
                        "elastic-net weight must lie in [0, 1], got {theta}"
                    )));
                }
                Ok(())
            }
            PenaltyFamily::Scad { a } => {
                if !a.is_finite() || a <= 2.0 {
                    return Err(Error::invalid(format!(
                        "SCAD concavity constant must exceed 2, got {a}"
                    )));
                }
                Ok(())
            }
            PenaltyFamily::Mcp { a } => {
                if !a.is_finite() || a <= 1.0 {
                    return Err(Error::invalid(format!(
                        "MCP concavity constant must exceed 1, got {a}"
                    )));
                }
                Ok(())
            }
            PenaltyFamily::Bridge { q } => {
                if !(q > 0.0 && q <= 1.0) {
                    return Err(Error::invalid(format!(
                        "bridge exponent must lie in (0, 1], got {q}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Scalar penalty `J(t)` for a coefficient magnitude `t >= 0`.
    pub fn scalar(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0, "scalar penalty takes a magnitude");
        let lam = self.lambda;
        match self.family {
            PenaltyFamily::None => 0.0,
            PenaltyFamily::Lasso => lam * t,
            PenaltyFamily::Ridge => 0.5 * lam * t * t,
            PenaltyFamily::ElasticNet { theta } => {
                lam * (theta * t + 0.5 * (1.0 - theta) * t * t)
            }
            PenaltyFamily::Scad { a } => {
                if t <= lam {
                    lam * t
                } else if t <= a * lam {
                    (a * lam * t - 0.5 * (t * t + lam * lam)) / (a - 1.0)
                } else {
                    0.5 * lam * lam * (a + 1.0)
                }
            }
            PenaltyFamily::Mcp { a } => {
                if t <= a * lam {
                    lam * t - t * t / (2.0 * a)
                } else {
                    0.5 * a * lam * lam
                }
            }
            PenaltyFamily::Bridge { q } => lam * t.powf(q),
        }
    }

    /// Derivative `J'(t)` for `t > 0`.
    ///
    /// Continuous across the SCAD/MCP breakpoints; identically zero on the
    /// flat region beyond `a lambda`.
    pub fn scalar_derivative(&self, t: f64) -> f64 {
        debug_assert!(t > 0.0, "scalar derivative is defined away from zero");
        let lam = self.lambda;
        match self.family {
            PenaltyFamily::None => 0.0,
            PenaltyFamily::Lasso => lam,
            PenaltyFamily::Ridge => lam * t,
            PenaltyFamily::ElasticNet { theta } => lam * (theta + (1.0 - theta) * t),
            PenaltyFamily::Scad { a } => {
                if t <= lam {
                    lam
                } else if t <= a * lam {
                    (a * lam - t) / (a - 1.0)
                } else {
                    0.0
                }
            }
            PenaltyFamily::Mcp { a } => {
                if t <= a * lam {
                    lam - t / a
                } else {
                    0.0
                }
            }
            PenaltyFamily::Bridge { q } => lam * q * t.powf(q - 1.0),
        }
    }

    /// Supremum of `|J''|` over `[lo, hi]` intersected with `(0, inf)`,
    /// evaluated piecewise; requires `hi > 0`. Infinite for bridge penalties
    /// with `q < 1` when the interval reaches down to zero.
    fn curvature_sup(&self, lo: f64, hi: f64) -> f64 {
        debug_assert!(hi > 0.0 && lo <= hi);
        let lam = self.lambda;
        match self.family {
            PenaltyFamily::None | PenaltyFamily::Lasso => 0.0,
            PenaltyFamily::Ridge => lam,
            PenaltyFamily::ElasticNet { theta } => lam * (1.0 - theta),
            PenaltyFamily::Scad { a } => {
                // Curvature lives only on the middle branch (lam, a*lam).
                if hi > lam && lo < a * lam && lam > 0.0 {
                    1.0 / (a - 1.0)
                } else {
                    0.0
                }
            }
            PenaltyFamily::Mcp { a } => {
                // Curvature lives on (0, a*lam).
                if lo < a * lam && lam > 0.0 {
                    1.0 / a
                } else {
                    0.0
                }
            }
            PenaltyFamily::Bridge { q } => {
                if q == 1.0 || lam == 0.0 {
                    0.0
                } else if lo <= 0.0 {
                    // |J''| = lam q (1-q) t^{q-2} blows up toward zero.
                    f64::INFINITY
                } else {
                    lam * q * (1.0 - q) * lo.powf(q - 2.0)
                }
            }
        }
    }

    /// Whether [`scalar_prox`] is defined for this family.
    pub fn has_prox(&self) -> bool {
        !matches!(self.family, PenaltyFamily::Bridge { q } if q < 1.0)
    }

    /// Largest step size for which the one-dimensional proximal subproblem
    /// is strongly convex, hence solved exactly by the closed form; infinite
    /// for the convex families.
    pub fn prox_step_limit(&self) -> f64 {
        match self.family {
            PenaltyFamily::Scad { a } => a - 1.0,
            PenaltyFamily::Mcp { a } => a,
            _ => f64::INFINITY,
        }
    }
}

/// Total penalty `sum_j J(|beta_j|)` of a coefficient vector.
pub fn penalty_value(beta: ArrayView1<'_, f64>, pen: &PenaltySpec) -> Result<f64> {
    pen.validate()?;
    Ok(beta.iter().map(|&b| pen.scalar(b.abs())).sum())
}

/// Soft-threshold operator `sign(z) max(|z| - k, 0)`.
#[inline]
fn soft_threshold(z: f64, k: f64) -> f64 {
    z.signum() * f64::max(z.abs() - k, 0.0)
}

/// Proximal map of `eta * J(|.|)` at `z`:
/// `argmin_b (b - z)^2 / 2 + eta J(|b|)`.
///
/// Requires a finite `z` and a positive finite step `eta`. Errors with
/// [`Error::Unsupported`] for bridge penalties with `q < 1`.
pub fn scalar_prox(z: f64, eta: f64, pen: &PenaltySpec) -> Result<f64> {
    pen.validate()?;
    if !z.is_finite() {
        return Err(Error::domain(format!(
            "proximal map requires a finite point, got {z}"
        )));
    }
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::invalid(format!(
            "proximal step must be a positive finite number, got {eta}"
        )));
    }
    let lam = pen.lambda;
    let out = match pen.family {
        PenaltyFamily::None => z,
        PenaltyFamily::Lasso => soft_threshold(z, eta * lam),
        PenaltyFamily::Ridge => z / (1.0 + eta * lam),
        PenaltyFamily::ElasticNet { theta } => {
            soft_threshold(z, eta * lam * theta) / (1.0 + eta * lam * (1.0 - theta))
        }
        PenaltyFamily::Scad { a } => {
            if eta < a - 1.0 {
                let az = z.abs();
                if az <= lam * (1.0 + eta) {
                    soft_threshold(z, eta * lam)
                } else if az <= a * lam {
                    ((a - 1.0) * z - z.signum() * eta * a * lam) / (a - 1.0 - eta)
                } else {
                    z
                }
            } else {
                grid_prox(z, eta, pen)
            }
        }
        PenaltyFamily::Mcp { a } => {
            if eta < a {
                let az = z.abs();
                if az <= eta * lam {
                    0.0
                } else if az <= a * lam {
                    z.signum() * a * (az - eta * lam) / (a - eta)
                } else {
                    z
                }
            } else {
                grid_prox(z, eta, pen)
            }
        }
        PenaltyFamily::Bridge { q } => {
            if q == 1.0 {
                soft_threshold(z, eta * lam)
            } else {
                return Err(Error::Unsupported(format!(
                    "the bridge penalty with exponent {q} < 1 has no proximal map here; \
                     it is available for objective evaluation only"
                )));
            }
        }
    };
    Ok(out)
}

/// Dense-grid scan with golden-section refinement for proximal subproblems
/// that are no longer strongly convex. The minimizer shares the sign of `z`
/// and lies in `[0, |z|]` because every `J` is non-decreasing; ties between
/// zero and a non-zero candidate break toward zero.
fn grid_prox(z: f64, eta: f64, pen: &PenaltySpec) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let az = z.abs();
    let h = |b: f64| 0.5 * (b - az) * (b - az) + eta * pen.scalar(b);
    let m = PROX_GRID_INTERVALS;
    let step = az / m as f64;
    let (mut best_i, mut best_v) = (0usize, h(0.0));
    for i in 1..=m {
        let v = h(i as f64 * step);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    // Polish inside the bracket around the best grid point.
    let mut lo = step * best_i.saturating_sub(1) as f64;
    let mut hi = step * (best_i + 1).min(m) as f64;
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (h(x1), h(x2));
    for _ in 0..PROX_POLISH_ITERS {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = h(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = h(x2);
        }
    }
    let b = 0.5 * (lo + hi);
    let candidate = if h(b) <= best_v { b } else { step * best_i as f64 };
    if h(0.0) <= h(candidate) {
        0.0
    } else {
        z.signum() * candidate
    }
}

/// Gradient of the penalty restricted to an all-non-zero active block:
/// `sign(beta_j) J'(|beta_j|)` per coordinate.
///
/// Errors if any entry is exactly zero (the penalty is not differentiable
/// there).
pub fn penalty_gradient_active(
    beta_active: ArrayView1<'_, f64>,
    pen: &PenaltySpec,
) -> Result<Array1<f64>> {
    pen.validate()?;
    if let Some(j) = beta_active.iter().position(|&b| b == 0.0) {
        return Err(Error::invalid(format!(
            "active-block gradient is undefined at zero; entry {j} is zero"
        )));
    }
    Ok(beta_active.mapv(|b| b.signum() * pen.scalar_derivative(b.abs())))
}

/// Local regularity bounds of the penalty around a reference active block:
/// the maximal derivative magnitude at the reference magnitudes,
///
/// ```text
/// a_n = max_j J'(|beta_j|),
/// ```
///
/// and the maximal curvature over a `delta0`-neighborhood of them,
///
/// ```text
/// b_n = max_j sup { |J''(t)| : t in [|beta_j| - delta0, |beta_j| + delta0], t > 0 },
/// ```
///
/// evaluated piecewise per family. For the lasso this yields
/// `(lambda, 0)`; for SCAD/MCP both vanish once every `|beta_j|` sits beyond
/// the flat-region threshold `a lambda` by more than `delta0`. The curvature
/// bound is infinite for bridge penalties with `q < 1` whenever the
/// neighborhood reaches zero.
///
/// Requires a non-empty block with no zero entries and `delta0 > 0`.
pub fn penalty_curvature_bounds(
    pen: &PenaltySpec,
    beta0_active: ArrayView1<'_, f64>,
    delta0: f64,
) -> Result<(f64, f64)> {
    pen.validate()?;
    if beta0_active.is_empty() {
        return Err(Error::invalid(
            "curvature bounds require a non-empty active block",
        ));
    }
    if let Some(j) = beta0_active.iter().position(|&b| b == 0.0) {
        return Err(Error::invalid(format!(
            "curvature bounds require non-zero reference entries; entry {j} is zero"
        )));
    }
    if !delta0.is_finite() || delta0 <= 0.0 {
        return Err(Error::invalid(format!(
            "neighborhood radius must be a positive finite number, got {delta0}"
        )));
    }
    let mut a_n = 0.0f64;
    let mut b_n = 0.0f64;
    for &b in beta0_active.iter() {
        let m = b.abs();
        a_n = a_n.max(pen.scalar_derivative(m));
        b_n = b_n.max(pen.curvature_sup(m - delta0, m + delta0));
    }
    Ok((a_n, b_n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn scad_reference_values_and_continuity() {
        let pen = PenaltySpec::scad(1.0).unwrap();
        assert_abs_diff_eq!(pen.scalar(1.0), 1.0, epsilon = 1e-15);
        // Reference: (3.7 * 2 - (4 + 1)/2) / 2.7.
        assert_abs_diff_eq!(pen.scalar(2.0), 1.814_814_814_814_814_8, epsilon = 1e-14);
        assert_abs_diff_eq!(pen.scalar(5.0), 2.35, epsilon = 1e-15);
        // Branch values agree at the breakpoints.
        let a = 3.7;
        for (left, right, t) in [
            (pen.scalar(1.0), (a * 1.0 - 0.5 * (1.0 + 1.0)) / (a - 1.0), 1.0),
            (pen.scalar(a), 0.5 * (a + 1.0), a),
        ] {
            assert_abs_diff_eq!(left, right, epsilon = 1e-12);
            let eps = 1e-9;
            assert!((pen.scalar(t - eps) - pen.scalar(t + eps)).abs() < 1e-8);
        }
    }

    #[test]
    fn mcp_reference_values() {
        let pen = PenaltySpec::mcp(1.0).unwrap();
        assert_abs_diff_eq!(pen.scalar(2.0), 4.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(pen.scalar(3.0), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pen.scalar(10.0), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(pen.scalar_derivative(1.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(pen.scalar_derivative(5.0), 0.0);
    }

    #[test]
    fn simple_family_values() {
        let beta = array![1.0, -2.0, 0.0];
        let lasso = PenaltySpec::lasso(0.5).unwrap();
        assert_abs_diff_eq!(
            penalty_value(beta.view(), &lasso).unwrap(),
            1.5,
            epsilon = 1e-15
        );
        let ridge = PenaltySpec::ridge(0.5).unwrap();
        assert_abs_diff_eq!(
            penalty_value(beta.view(), &ridge).unwrap(),
            0.25 * (1.0 + 4.0),
            epsilon = 1e-15
        );
        // Elastic net interpolates its endpoints.
        let en1 = PenaltySpec::elastic_net(0.5, 1.0).unwrap();
        let en0 = PenaltySpec::elastic_net(0.5, 0.0).unwrap();
        assert_abs_diff_eq!(
            penalty_value(beta.view(), &en1).unwrap(),
            penalty_value(beta.view(), &lasso).unwrap(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            penalty_value(beta.view(), &en0).unwrap(),
            penalty_value(beta.view(), &ridge).unwrap(),
            epsilon = 1e-15
        );
        // Bridge with q = 1 is the lasso; q = 1/2 uses the square root.
        let bridge = PenaltySpec::bridge(0.5, 0.5).unwrap();
        assert_abs_diff_eq!(
            penalty_value(beta.view(), &bridge).unwrap(),
            0.5 * (1.0 + 2f64.sqrt()),
            epsilon = 1e-14
        );
        assert_eq!(
            penalty_value(beta.view(), &PenaltySpec::none()).unwrap(),
            0.0
        );
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let specs = [
            PenaltySpec::lasso(0.7).unwrap(),
            PenaltySpec::ridge(0.7).unwrap(),
            PenaltySpec::elastic_net(0.7, 0.3).unwrap(),
            PenaltySpec::scad(0.7).unwrap(),
            PenaltySpec::mcp(0.7).unwrap(),
            PenaltySpec::bridge(0.7, 0.5).unwrap(),
        ];
        for pen in specs {
            for t in [0.1, 0.35, 0.8, 1.9, 2.5, 4.0] {
                let h = 1e-7;
                let fd = (pen.scalar(t + h) - pen.scalar(t - h)) / (2.0 * h);
                assert!(
                    (pen.scalar_derivative(t) - fd).abs() < 1e-6,
                    "family {:?}, t = {t}: {} vs {fd}",
                    pen.family,
                    pen.scalar_derivative(t)
                );
            }
        }
    }

    #[test]
    fn prox_reference_values() {
        let lasso = PenaltySpec::lasso(0.5).unwrap();
        assert_abs_diff_eq!(scalar_prox(2.0, 1.0, &lasso).unwrap(), 1.5, epsilon = 1e-15);
        assert_eq!(scalar_prox(0.3, 1.0, &lasso).unwrap(), 0.0);
        let ridge = PenaltySpec::ridge(1.0).unwrap();
        assert_abs_diff_eq!(scalar_prox(2.0, 1.0, &ridge).unwrap(), 1.0, epsilon = 1e-15);
        let en = PenaltySpec::elastic_net(1.0, 0.5).unwrap();
        assert_abs_diff_eq!(scalar_prox(2.0, 1.0, &en).unwrap(), 1.0, epsilon = 1e-15);
        let scad = PenaltySpec::scad(1.0).unwrap();
        // Identity beyond a*lambda, soft-thresholding near the origin.
        assert_eq!(scalar_prox(5.0, 1.0, &scad).unwrap(), 5.0);
        assert_abs_diff_eq!(scalar_prox(2.0, 1.0, &scad).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            scalar_prox(3.0, 1.0, &scad).unwrap(),
            (2.7 * 3.0 - 3.7) / 1.7,
            epsilon = 1e-14
        );
        let mcp = PenaltySpec::mcp(1.0).unwrap();
        assert_eq!(scalar_prox(0.5, 1.0, &mcp).unwrap(), 0.0);
        assert_abs_diff_eq!(scalar_prox(2.0, 1.0, &mcp).unwrap(), 1.5, epsilon = 1e-15);
        assert_eq!(scalar_prox(4.0, 1.0, &mcp).unwrap(), 4.0);
        // Odd symmetry.
        assert_abs_diff_eq!(
            scalar_prox(-2.0, 1.0, &scad).unwrap(),
            -1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn prox_fallback_matches_dense_scan() {
        // Step too large for the closed form: exercise the grid path and
        // compare against an independent fine scan.
        let scad = PenaltySpec::scad_with(1.0, 2.5).unwrap();
        let eta = 2.0; // >= a - 1 = 1.5
        for z in [-4.0, -2.2, -1.0, 0.0, 0.7, 1.4, 2.6, 5.0] {
            let got = scalar_prox(z, eta, &scad).unwrap();
            let az = z.abs();
            let h = |b: f64| 0.5 * (b - az) * (b - az) + eta * scad.scalar(b);
            let mut best = 0.0;
            let mut best_v = h(0.0);
            for i in 1..=400_000 {
                let b = az * i as f64 / 400_000.0;
                let v = h(b);
                if v < best_v {
                    best_v = v;
                    best = b;
                }
            }
            let objective_gap = h(got.abs()) - best_v;
            assert!(
                objective_gap.abs() <= 1e-9,
                "z = {z}: got {got}, scan found {best} (gap {objective_gap:.3e})"
            );
        }
    }

    #[test]
    fn prox_error_cases() {
        let lasso = PenaltySpec::lasso(0.5).unwrap();
        assert!(scalar_prox(1.0, 0.0, &lasso).is_err());
        assert!(scalar_prox(1.0, -1.0, &lasso).is_err());
        assert!(scalar_prox(f64::NAN, 1.0, &lasso).is_err());
        let bridge = PenaltySpec::bridge(0.5, 0.5).unwrap();
        assert!(matches!(
            scalar_prox(1.0, 1.0, &bridge),
            Err(Error::Unsupported(_))
        ));
        assert!(!bridge.has_prox());
        let bridge1 = PenaltySpec::bridge(0.5, 1.0).unwrap();
        assert!(bridge1.has_prox());
        assert_abs_diff_eq!(
            scalar_prox(2.0, 1.0, &bridge1).unwrap(),
            1.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn curvature_bounds_reference_cases() {
        // Reference block inside the first SCAD branch: linear there, so the
        // neighborhood carries no curvature.
        let scad = PenaltySpec::scad(1.0).unwrap();
        let (a_n, b_n) =
            penalty_curvature_bounds(&scad, array![0.5].view(), 0.1).unwrap();
        assert_abs_diff_eq!(a_n, 1.0, epsilon = 1e-15);
        assert_eq!(b_n, 0.0);
        // Neighborhood crossing into the middle branch picks up 1/(a-1).
        let (_, b_n) = penalty_curvature_bounds(&scad, array![1.05].view(), 0.1).unwrap();
        assert_abs_diff_eq!(b_n, 1.0 / 2.7, epsilon = 1e-15);
        // Beyond the flat threshold both bounds vanish.
        let (a_n, b_n) =
            penalty_curvature_bounds(&scad, array![5.0].view(), 0.5).unwrap();
        assert_eq!((a_n, b_n), (0.0, 0.0));
        // Lasso: derivative lambda everywhere, no curvature.
        let lasso = PenaltySpec::lasso(0.25).unwrap();
        let (a_n, b_n) =
            penalty_curvature_bounds(&lasso, array![1.0, -0.2].view(), 0.05).unwrap();
        assert_eq!((a_n, b_n), (0.25, 0.0));
        // MCP inside the concave region.
        let mcp = PenaltySpec::mcp_with(0.3, 3.0).unwrap();
        let (a_n, b_n) =
            penalty_curvature_bounds(&mcp, array![0.6].view(), 0.1).unwrap();
        assert_abs_diff_eq!(a_n, 0.3 - 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(b_n, 1.0 / 3.0, epsilon = 1e-15);
        // Bridge with a neighborhood touching zero: unbounded curvature.
        let bridge = PenaltySpec::bridge(0.5, 0.5).unwrap();
        let (_, b_n) =
            penalty_curvature_bounds(&bridge, array![0.05].view(), 0.1).unwrap();
        assert!(b_n.is_infinite());
    }

    #[test]
    fn curvature_bounds_error_cases() {
        let scad = PenaltySpec::scad(1.0).unwrap();
        assert!(penalty_curvature_bounds(&scad, array![0.5, 0.0].view(), 0.1).is_err());
        assert!(penalty_curvature_bounds(&scad, array![0.5].view(), 0.0).is_err());
        let empty: ndarray::Array1<f64> = array![];
        assert!(penalty_curvature_bounds(&scad, empty.view(), 0.1).is_err());
    }

    #[test]
    fn gradient_active_rejects_zero_entries() {
        let scad = PenaltySpec::scad(1.0).unwrap();
        let g = penalty_gradient_active(array![2.0, -0.5].view(), &scad).unwrap();
        assert_abs_diff_eq!(g[0], (3.7 - 2.0) / 2.7, epsilon = 1e-14);
        assert_abs_diff_eq!(g[1], -1.0, epsilon = 1e-14);
        assert!(penalty_gradient_active(array![1.0, 0.0].view(), &scad).is_err());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(PenaltySpec::lasso(-0.1).is_err());
        assert!(PenaltySpec::lasso(f64::INFINITY).is_err());
        assert!(PenaltySpec::elastic_net(0.5, 1.2).is_err());
        assert!(PenaltySpec::scad_with(0.5, 2.0).is_err());
        assert!(PenaltySpec::mcp_with(0.5, 1.0).is_err());
        assert!(PenaltySpec::bridge(0.5, 0.0).is_err());
        assert!(PenaltySpec::bridge(0.5, 1.1).is_err());
    }
}
