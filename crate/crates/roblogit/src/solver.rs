//! Proximal-gradient solver for penalized bounded-deviance objectives.
//!
//! The objective is `L_n(beta) + sum_j J(|beta_j|)` where `L_n` is the
//! empirical mean of the per-observation loss and `J` is a scalar penalty
//! (see [`crate::penalty`]). Both pieces may be non-convex (bounded losses
//! are non-convex in `beta`; SCAD/MCP are folded concave), so the solver is
//! a local method with deterministic multi-start.
//!
//! Each iteration takes a gradient step on `L_n`, applies the coordinate
//! proximal map of the penalty, and — when an L1 restriction radius is
//! configured — projects the coefficient block back onto the L1 ball. A
//! monotone backtracking line search enforces the sufficient-decrease
//! condition
//!
//! ```text
//! obj(next) <= obj(current) - 1e-4 * ||next - current||^2 / eta,
//! ```
//!
//! and the accepted step size persists (it only shrinks), which keeps the
//! objective trace non-increasing. Convergence requires both a small
//! relative objective change and a small fixed-step composite-map residual
//! `||x - T(x)||`, where `T` is gradient step, proximal map, and (if
//! configured) projection, evaluated at the initial step size. Failing to
//! converge within the iteration budget is reported through a flag, not an
//! error; a non-finite objective is an error carrying the trace.

use ndarray::{Array1, ArrayView1};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::{mean_loss_at, score_weights, weighted_column_mean, LossSpec};
use crate::penalty::{scalar_prox, PenaltyFamily, PenaltySpec};

/// Sufficient-decrease constant of the backtracking line search.
const SUFFICIENT_DECREASE: f64 = 1e-4;

/// Step size below which the line search is declared stalled.
const MIN_STEP: f64 = 1e-20;

/// Fraction of the proximal validity limit used to cap the step size for
/// folded-concave penalties.
const STEP_LIMIT_FRACTION: f64 = 0.9;

/// Options controlling a single fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Maximum number of accepted proximal updates.
    pub max_iters: usize,
    /// Tolerance used for both the relative objective change and the
    /// stationarity residual. Values much below `1e-8` demand more than
    /// double precision delivers on unit-scale objectives.
    pub tol: f64,
    /// Initial step size; also the fixed step at which the convergence
    /// residual is evaluated. Capped automatically for SCAD/MCP so the
    /// closed-form proximal map stays exact.
    pub step_init: f64,
    /// Multiplicative step shrink factor in `(0, 1)`.
    pub backtrack_factor: f64,
    /// Optional L1-ball radius; when set, iterates are projected onto
    /// `{ ||beta||_1 <= R }` (the intercept is not restricted).
    pub restriction_radius: Option<f64>,
    /// Number of deterministic starts: the zero vector plus `n_starts - 1`
    /// seeded draws from the sphere of radius `1/sqrt(p)`.
    pub n_starts: usize,
    /// Seed for the multi-start draws.
    pub seed: u64,
    /// Whether the intercept, when the dataset requests one, is pushed
    /// through the penalty's proximal map like any other coordinate.
    pub penalize_intercept: bool,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            max_iters: 5000,
            tol: 1e-7,
            step_init: 1.0,
            backtrack_factor: 0.5,
            restriction_radius: None,
            n_starts: 1,
            seed: 0,
            penalize_intercept: false,
        }
    }
}

impl FitConfig {
    /// Checks option validity.
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        if !self.tol.is_finite() || self.tol <= 0.0 {
            return Err(Error::invalid(format!(
                "tol must be a positive finite number, got {}",
                self.tol
            )));
        }
        if !self.step_init.is_finite() || self.step_init <= 0.0 {
            return Err(Error::invalid(format!(
                "step_init must be a positive finite number, got {}",
                self.step_init
            )));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::invalid(format!(
                "backtrack_factor must lie strictly between 0 and 1, got {}",
                self.backtrack_factor
            )));
        }
        if let Some(r) = self.restriction_radius {
            if !r.is_finite() || r < 0.0 {
                return Err(Error::invalid(format!(
                    "restriction radius must be a non-negative finite number, got {r}"
                )));
            }
        }
        if self.n_starts == 0 {
            return Err(Error::invalid("n_starts must be at least 1"));
        }
        Ok(())
    }
}

/// Outcome of a fit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    /// Estimated coefficients (never includes the intercept).
    pub beta: Vec<f64>,
    /// Estimated intercept when the dataset requested one.
    pub intercept: Option<f64>,
    /// Indices of coefficients that are exactly non-zero, ascending.
    pub active_set: Vec<usize>,
    /// Final objective value: empirical loss plus penalty.
    pub objective: f64,
    /// Empirical-loss part of the objective.
    pub loss_value: f64,
    /// Penalty part of the objective.
    pub penalty_value: f64,
    /// Penalty level the fit was run at.
    pub lambda: f64,
    /// Number of accepted proximal updates.
    pub iterations: usize,
    /// Whether both convergence conditions were met within the budget.
    pub converged: bool,
    /// Objective value after every accepted update (starting value first);
    /// non-increasing by construction.
    pub objective_trace: Vec<f64>,
    /// Fixed-step composite-map residual `||x - T(x)||_2` at the solution.
    pub stationarity_residual: f64,
}

impl FitResult {
    /// Coefficients as an owned array, convenient for linear algebra.
    pub fn beta_array(&self) -> Array1<f64> {
        Array1::from(self.beta.clone())
    }
}

/// Euclidean projection of `v` onto the L1 ball of radius `r`.
///
/// Exact sort-based algorithm; `r` must be non-negative and finite.
pub fn project_l1_ball(v: ArrayView1<'_, f64>, r: f64) -> Array1<f64> {
    assert!(r.is_finite() && r >= 0.0, "radius must be finite and >= 0");
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= r {
        return v.to_owned();
    }
    if r == 0.0 {
        return Array1::zeros(v.len());
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - r) / (j + 1) as f64;
        if u > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    v.mapv(|x| x.signum() * f64::max(x.abs() - theta, 0.0))
}

/// Internal optimization state: coefficients plus intercept.
#[derive(Clone)]
struct Point {
    beta: Array1<f64>,
    alpha: f64,
}

impl Point {
    fn sq_dist(&self, other: &Point) -> f64 {
        let mut acc = (self.alpha - other.alpha).powi(2);
        for (a, b) in self.beta.iter().zip(other.beta.iter()) {
            acc += (a - b) * (a - b);
        }
        acc
    }

    fn norm(&self) -> f64 {
        (self.beta.iter().map(|b| b * b).sum::<f64>() + self.alpha * self.alpha).sqrt()
    }
}

/// The assembled optimization problem.
struct Problem<'a> {
    data: &'a Dataset,
    loss: &'a LossSpec,
    pen: &'a PenaltySpec,
    radius: Option<f64>,
    intercept: bool,
    penalize_intercept: bool,
}

impl Problem<'_> {
    /// `(empirical loss, penalty)` at a point.
    fn objective_parts(&self, pt: &Point) -> (f64, f64) {
        let mut t = self.data.x().dot(&pt.beta);
        if self.intercept {
            t.mapv_inplace(|v| v + pt.alpha);
        }
        let lv = mean_loss_at(t.view(), self.data.y(), self.loss);
        let mut pv: f64 = pt.beta.iter().map(|&b| self.pen.scalar(b.abs())).sum();
        if self.intercept && self.penalize_intercept {
            pv += self.pen.scalar(pt.alpha.abs());
        }
        (lv, pv)
    }

    /// Gradient of the empirical loss in `(beta, alpha)`.
    fn gradient(&self, pt: &Point) -> (Array1<f64>, f64) {
        let mut t = self.data.x().dot(&pt.beta);
        if self.intercept {
            t.mapv_inplace(|v| v + pt.alpha);
        }
        let w = score_weights(t.view(), self.data.y(), self.loss);
        let gb = weighted_column_mean(self.data.x(), w.view());
        let ga = if self.intercept {
            w.sum() / w.len() as f64
        } else {
            0.0
        };
        (gb, ga)
    }

    /// One application of the composite map `T`: gradient step at step size
    /// `eta`, proximal map, then (optionally) projection of the coefficient
    /// block onto the L1 ball.
    fn composite_step(&self, pt: &Point, grad: &(Array1<f64>, f64), eta: f64) -> Result<Point> {
        let mut beta = Array1::zeros(pt.beta.len());
        for (j, b) in beta.iter_mut().enumerate() {
            *b = scalar_prox(pt.beta[j] - eta * grad.0[j], eta, self.pen)?;
        }
        if let Some(r) = self.radius {
            beta = project_l1_ball(beta.view(), r);
        }
        let alpha = if self.intercept {
            let step = pt.alpha - eta * grad.1;
            if self.penalize_intercept {
                scalar_prox(step, eta, self.pen)?
            } else {
                step
            }
        } else {
            0.0
        };
        Ok(Point { beta, alpha })
    }

    /// Fixed-step residual `||x - T(x)||_2` used in the convergence test.
    fn residual(&self, pt: &Point, eta0: f64) -> Result<f64> {
        let grad = self.gradient(pt);
        let next = self.composite_step(pt, &grad, eta0)?;
        Ok(pt.sq_dist(&next).sqrt())
    }
}

/// Single-start descent outcome before selection.
struct Descent {
    point: Point,
    loss_value: f64,
    penalty_value: f64,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
    residual: f64,
}

fn descend(problem: &Problem<'_>, start: Point, cfg: &FitConfig) -> Result<Descent> {
    let step0 = f64::min(
        cfg.step_init,
        STEP_LIMIT_FRACTION * problem.pen.prox_step_limit(),
    );
    let mut eta = step0;
    let mut pt = start;
    let (mut lv, mut pv) = problem.objective_parts(&pt);
    let mut obj = lv + pv;
    if !obj.is_finite() {
        return Err(Error::Diverged {
            iteration: 0,
            trace: Vec::new(),
        });
    }
    let mut trace = vec![obj];
    let mut iterations = 0usize;
    let mut converged = false;
    let mut residual = f64::INFINITY;
    let mut have_residual = false;

    'outer: for it in 1..=cfg.max_iters {
        let grad = problem.gradient(&pt);
        let accepted = loop {
            let cand = problem.composite_step(&pt, &grad, eta)?;
            let (clv, cpv) = problem.objective_parts(&cand);
            let cobj = clv + cpv;
            if !cobj.is_finite() {
                return Err(Error::Diverged {
                    iteration: it,
                    trace,
                });
            }
            let dist2 = cand.sq_dist(&pt);
            // Near the optimum objective differences shrink to the
            // floating-point granularity of the objective itself. Within
            // that granularity a non-increasing step is accepted as is, and
            // an apparent increase is treated as a stall rather than a
            // reason to shrink: rounding noise must not ratchet the
            // persistent step size down to nothing.
            let slack = 4.0 * f64::EPSILON * f64::max(1.0, obj.abs());
            if cobj <= obj && obj - cobj >= SUFFICIENT_DECREASE * dist2 / eta - slack {
                break Some((cand, clv, cpv, cobj, dist2));
            }
            if cobj > obj && cobj <= obj + slack {
                break None;
            }
            if eta <= MIN_STEP {
                break None;
            }
            eta *= cfg.backtrack_factor;
        };
        let Some((next, nlv, npv, nobj, dist2)) = accepted else {
            // Line search stalled — either every representable step size
            // failed, or the objective is flat to rounding; assess
            // stationarity where we stand.
            residual = problem.residual(&pt, step0)?;
            have_residual = true;
            converged = residual <= cfg.tol * (1.0 + pt.norm());
            break 'outer;
        };
        let rel_change = (obj - nobj) / f64::max(1.0, nobj.abs());
        pt = next;
        lv = nlv;
        pv = npv;
        obj = nobj;
        trace.push(obj);
        iterations = it;
        if rel_change <= cfg.tol {
            residual = problem.residual(&pt, step0)?;
            have_residual = true;
            if residual <= cfg.tol * (1.0 + pt.norm()) {
                converged = true;
                break 'outer;
            }
            if dist2 == 0.0 {
                // The accepted step moved nothing: the iterate is an exact
                // floating-point fixed point at the current step size, so
                // further iterations would replay the same state. Stop here
                // and report the residual as it stands.
                break 'outer;
            }
        } else {
            have_residual = false;
        }
    }
    if !have_residual {
        residual = problem.residual(&pt, step0)?;
    }
    Ok(Descent {
        point: pt,
        loss_value: lv,
        penalty_value: pv,
        objective: obj,
        iterations,
        converged,
        trace,
        residual,
    })
}

/// Deterministic multi-start points: the zero vector, then draws from the
/// sphere of radius `1/sqrt(p)` seeded by `(seed, start index)`.
fn starting_points(p: usize, cfg: &FitConfig) -> Vec<Point> {
    let mut starts = Vec::with_capacity(cfg.n_starts);
    starts.push(Point {
        beta: Array1::zeros(p),
        alpha: 0.0,
    });
    for k in 1..cfg.n_starts {
        let mut rng = ChaCha8Rng::seed_from_u64(
            cfg.seed
                .wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        let mut v = Array1::from_iter(
            (0..p).map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)),
        );
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            let scale = 1.0 / (norm * (p as f64).sqrt());
            v.mapv_inplace(|x| x * scale);
        }
        starts.push(Point { beta: v, alpha: 0.0 });
    }
    starts
}

fn validate_fit_inputs(
    data: &Dataset,
    loss: &LossSpec,
    pen: &PenaltySpec,
    cfg: &FitConfig,
) -> Result<()> {
    loss.validate()?;
    pen.validate()?;
    cfg.validate()?;
    if !pen.has_prox() {
        return Err(Error::Unsupported(format!(
            "penalty {:?} offers no proximal map, so it cannot be fitted; \
             it is available for objective evaluation only",
            pen.family
        )));
    }
    let _ = data; // shape invariants are guaranteed by `Dataset`
    Ok(())
}

fn run_fit(
    data: &Dataset,
    loss: &LossSpec,
    pen: &PenaltySpec,
    cfg: &FitConfig,
    starts: Vec<Point>,
) -> Result<FitResult> {
    let problem = Problem {
        data,
        loss,
        pen,
        radius: cfg.restriction_radius,
        intercept: data.intercept(),
        penalize_intercept: cfg.penalize_intercept,
    };
    let mut prepared = starts;
    if let Some(r) = cfg.restriction_radius {
        for s in &mut prepared {
            s.beta = project_l1_ball(s.beta.view(), r);
        }
    }
    let mut best: Option<Descent> = None;
    for start in prepared {
        let cand = descend(&problem, start, cfg)?;
        let better = match &best {
            None => true,
            // Strict comparison keeps the earliest start on ties.
            Some(b) => cand.objective.total_cmp(&b.objective).is_lt(),
        };
        if better {
            best = Some(cand);
        }
    }
    let d = best.expect("at least one start");
    let active_set: Vec<usize> = d
        .point
        .beta
        .iter()
        .enumerate()
        .filter_map(|(j, &b)| (b != 0.0).then_some(j))
        .collect();
    Ok(FitResult {
        beta: d.point.beta.to_vec(),
        intercept: data.intercept().then_some(d.point.alpha),
        active_set,
        objective: d.objective,
        loss_value: d.loss_value,
        penalty_value: d.penalty_value,
        lambda: pen.lambda,
        iterations: d.iterations,
        converged: d.converged,
        objective_trace: d.trace,
        stationarity_residual: d.residual,
    })
}

/// Fits the penalized objective on a dataset.
///
/// Runs `cfg.n_starts` deterministic starts and returns the result with the
/// lowest objective (ties keep the earliest start). Non-convergence within
/// `cfg.max_iters` is reported via [`FitResult::converged`], not an error.
pub fn fit(
    data: &Dataset,
    loss: &LossSpec,
    pen: &PenaltySpec,
    cfg: &FitConfig,
) -> Result<FitResult> {
    validate_fit_inputs(data, loss, pen, cfg)?;
    let starts = starting_points(data.p(), cfg);
    run_fit(data, loss, pen, cfg, starts)
}

/// Fits a descending sequence of penalty levels with warm starts.
///
/// The first level uses the full multi-start configuration; each subsequent
/// level starts from the previous solution (a single start). Errors from an
/// individual fit are wrapped with the position in the path.
pub fn lambda_path(
    data: &Dataset,
    loss: &LossSpec,
    family: PenaltyFamily,
    lambdas: &[f64],
    cfg: &FitConfig,
) -> Result<Vec<FitResult>> {
    if lambdas.is_empty() {
        return Err(Error::invalid("lambda path must be non-empty"));
    }
    if let Some(&l) = lambdas.iter().find(|l| !l.is_finite() || **l <= 0.0) {
        return Err(Error::invalid(format!(
            "lambda path entries must be positive finite numbers, got {l}"
        )));
    }
    if let Some(w) = lambdas.windows(2).find(|w| w[0] <= w[1]) {
        return Err(Error::invalid(format!(
            "lambda path must be strictly descending; found {} before {}",
            w[0], w[1]
        )));
    }
    let mut out: Vec<FitResult> = Vec::with_capacity(lambdas.len());
    for (i, &lam) in lambdas.iter().enumerate() {
        let at = |e: Error| Error::PathFit {
            index: i,
            lambda: lam,
            source: Box::new(e),
        };
        let pen = PenaltySpec::new(family, lam).map_err(at)?;
        let result = if let Some(prev) = out.last() {
            validate_fit_inputs(data, loss, &pen, cfg).map_err(at)?;
            let warm = Point {
                beta: prev.beta_array(),
                alpha: prev.intercept.unwrap_or(0.0),
            };
            run_fit(data, loss, &pen, cfg, vec![warm]).map_err(at)?
        } else {
            fit(data, loss, &pen, cfg).map_err(at)?
        };
        out.push(result);
    }
    Ok(out)
}

/// Empirical loss of a fitted model on a dataset, including its intercept
/// offset when present.
pub fn fitted_loss(result: &FitResult, data: &Dataset, loss: &LossSpec) -> Result<f64> {
    loss.validate()?;
    if result.beta.len() != data.p() {
        return Err(Error::invalid(format!(
            "fitted coefficient length {} does not match design column count {}",
            result.beta.len(),
            data.p()
        )));
    }
    let beta = result.beta_array();
    let mut t = data.x().dot(&beta);
    if let Some(alpha) = result.intercept {
        t.mapv_inplace(|v| v + alpha);
    }
    Ok(mean_loss_at(t.view(), data.y(), loss))
}

/// Selects a path position by the Bayesian information criterion
/// `2 n L_n(fit) + |active| log n`, recomputed on the given data.
///
/// Returns the index of the minimizing fit; ties keep the earliest position
/// (the largest penalty level in a descending path).
pub fn select_lambda_bic(path: &[FitResult], data: &Dataset, loss: &LossSpec) -> Result<usize> {
    if path.is_empty() {
        return Err(Error::invalid("cannot select from an empty path"));
    }
    let n = data.n() as f64;
    let mut best = 0usize;
    let mut best_bic = f64::INFINITY;
    for (i, result) in path.iter().enumerate() {
        let lv = fitted_loss(result, data, loss)?;
        let bic = 2.0 * n * lv + result.active_set.len() as f64 * n.ln();
        if bic.total_cmp(&best_bic).is_lt() {
            best_bic = bic;
            best = i;
        }
    }
    Ok(best)
}
