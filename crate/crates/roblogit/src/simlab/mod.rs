//! Monte Carlo simulation lab.
//!
//! A [`Scenario`] declares a family of synthetic sparse logistic problems —
//! sample sizes, a dimension rule, a sparse truth, a design distribution,
//! optional contamination, the loss/penalty to fit, and a penalty-level rule
//! — plus replication and seeding choices. [`run_experiment`] fits every
//! replication (in parallel, deterministically) and aggregates per-sample-
//! size summaries: median estimation errors, support-recovery frequencies,
//! directional Wald statistics with normality checks, and regularity
//! diagnostics of the generated problems.
//!
//! Reproducibility: every random stream is derived by hashing
//! `(seed, n, replication, purpose)`, so records do not depend on thread
//! scheduling, the order replications run in, or how many worker threads
//! the surrounding pool has. Replication results are collected in index
//! order and aggregated sequentially; reruns of the same scenario produce
//! bit-identical reports.

mod stats;

pub use stats::{kolmogorov_sf, normality_check, KsCheck, RateSlope, KS_MIN_SAMPLES};

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Dataset;
use crate::design::Design;
use crate::error::{Error, Result};
use crate::inference::{estimate_moment_matrices, prediction_distance};
use crate::loss::{sigmoid, LossSpec};
use crate::penalty::{PenaltyFamily, PenaltySpec};
use crate::solver::{fit, FitConfig};

/// Maximum tolerated percentage of failed replications per experiment.
const FAILURE_LIMIT_PERCENT: u8 = 5;

/// Default number of Monte Carlo draws for the prediction distance.
const DEFAULT_D2_DRAWS: usize = 20_000;

/// Stream purposes for seed derivation.
const STREAM_DATA: u32 = 0;
const STREAM_STARTS: u32 = 1;
const STREAM_DISTANCE: u32 = 2;

/// Rule mapping the sample size to the number of design columns.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PRule {
    /// Constant column count.
    Fixed {
        /// The column count.
        p: usize,
    },
    /// `p(n) = floor(coef * n^exponent)`.
    Power {
        /// Positive multiplier.
        coef: f64,
        /// Exponent in `[0, 1)` for a dimension growing with the sample.
        exponent: f64,
    },
}

impl PRule {
    /// Column count at sample size `n`.
    pub fn p_of(&self, n: usize) -> usize {
        match *self {
            PRule::Fixed { p } => p,
            PRule::Power { coef, exponent } => (coef * (n as f64).powf(exponent)).floor() as usize,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            PRule::Fixed { p } => {
                if p == 0 {
                    return Err(Error::invalid("fixed column count must be at least 1"));
                }
            }
            PRule::Power { coef, exponent } => {
                if !coef.is_finite() || coef <= 0.0 {
                    return Err(Error::invalid(format!(
                        "column rule multiplier must be positive, got {coef}"
                    )));
                }
                if !exponent.is_finite() || exponent < 0.0 {
                    return Err(Error::invalid(format!(
                        "column rule exponent must be non-negative, got {exponent}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rule building the non-zero block of the true coefficient vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Beta0Rule {
    /// Explicit signed values for the `k` leading coordinates.
    FixedMagnitudes {
        /// The active values; length must equal the scenario's `k` and all
        /// entries must be non-zero.
        values: Vec<f64>,
    },
    /// Alternating-sign values of magnitude `coef * n^{-exponent}`, so the
    /// signal floor shrinks with the sample size.
    Decaying {
        /// Positive magnitude multiplier.
        coef: f64,
        /// Non-negative decay exponent.
        exponent: f64,
    },
}

impl Beta0Rule {
    /// The `k` active values at sample size `n`.
    pub fn active_values(&self, n: usize, k: usize) -> Vec<f64> {
        match self {
            Beta0Rule::FixedMagnitudes { values } => values.clone(),
            Beta0Rule::Decaying { coef, exponent } => {
                let magnitude = coef * (n as f64).powf(-exponent);
                (0..k)
                    .map(|j| if j % 2 == 0 { magnitude } else { -magnitude })
                    .collect()
            }
        }
    }

    /// Smallest active magnitude at sample size `n`; `None` when `k = 0`.
    pub fn signal_floor(&self, n: usize, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        self.active_values(n, k)
            .iter()
            .map(|v| v.abs())
            .min_by(f64::total_cmp)
    }

    fn validate(&self, k: usize) -> Result<()> {
        match self {
            Beta0Rule::FixedMagnitudes { values } => {
                if values.len() != k {
                    return Err(Error::invalid(format!(
                        "fixed active values have length {}, but the scenario declares k = {k}",
                        values.len()
                    )));
                }
                if let Some(j) = values.iter().position(|v| !v.is_finite() || *v == 0.0) {
                    return Err(Error::invalid(format!(
                        "active value {j} must be a non-zero finite number"
                    )));
                }
            }
            Beta0Rule::Decaying { coef, exponent } => {
                if !coef.is_finite() || *coef <= 0.0 {
                    return Err(Error::invalid(format!(
                        "decaying signal multiplier must be positive, got {coef}"
                    )));
                }
                if !exponent.is_finite() || *exponent < 0.0 {
                    return Err(Error::invalid(format!(
                        "decaying signal exponent must be non-negative, got {exponent}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rule mapping `(n, p)` to the penalty level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaRule {
    /// Constant level.
    Fixed {
        /// The level; must be positive.
        value: f64,
    },
    /// `scale * sqrt(log(p) / n)`.
    SqrtLogPOverN {
        /// Positive multiplier.
        scale: f64,
    },
    /// `scale * (p / n)^exponent`.
    PowPOverN {
        /// Positive multiplier.
        scale: f64,
        /// Positive exponent.
        exponent: f64,
    },
}

impl Default for LambdaRule {
    /// `0.4 * sqrt(log(p) / n)`. The scale keeps the threshold an order of
    /// magnitude above the score noise on inactive coordinates (standard
    /// deviation `1/(4 sqrt(n))` at the origin for the bounded exponential
    /// loss) while still vanishing as `n` grows, so unit-size signals
    /// survive and noise coordinates are pinned to zero across the sample
    /// sizes the experiment grids use.
    fn default() -> Self {
        LambdaRule::SqrtLogPOverN { scale: 0.4 }
    }
}

impl LambdaRule {
    /// Penalty level at `(n, p)`.
    pub fn lambda(&self, n: usize, p: usize) -> f64 {
        match *self {
            LambdaRule::Fixed { value } => value,
            LambdaRule::SqrtLogPOverN { scale } => scale * ((p as f64).ln() / n as f64).sqrt(),
            LambdaRule::PowPOverN { scale, exponent } => {
                scale * (p as f64 / n as f64).powf(exponent)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let check_positive = |name: &str, v: f64| {
            if !v.is_finite() || v <= 0.0 {
                Err(Error::invalid(format!(
                    "penalty-level rule {name} must be positive, got {v}"
                )))
            } else {
                Ok(())
            }
        };
        match *self {
            LambdaRule::Fixed { value } => check_positive("value", value),
            LambdaRule::SqrtLogPOverN { scale } => check_positive("scale", scale),
            LambdaRule::PowPOverN { scale, exponent } => {
                check_positive("scale", scale)?;
                check_positive("exponent", exponent)
            }
        }
    }
}

/// Contamination applied to the generated data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Contamination {
    /// No contamination.
    None,
    /// Flips the labels of `floor(rate * n)` rows, chosen uniformly among
    /// the `floor(leverage_quantile * n)` rows with the largest design
    /// norms — adversarial flips at high-leverage points.
    LabelFlip {
        /// Fraction of rows to flip, in `[0, 0.5)`.
        rate: f64,
        /// Fraction of high-norm rows eligible for flipping, in `(0, 1]`;
        /// must be at least `rate`.
        leverage_quantile: f64,
    },
    /// Replaces `floor(rate * n)` uniformly chosen rows with a fixed
    /// outlying point and label.
    PointMass {
        /// Fraction of rows to replace, in `[0, 0.5)`.
        rate: f64,
        /// The outlying design row; length must match the column count.
        x_out: Vec<f64>,
        /// The outlying label (0 or 1).
        y_out: u8,
    },
}

impl Contamination {
    fn validate(&self) -> Result<()> {
        let check_rate = |rate: f64| {
            if !rate.is_finite() || !(0.0..0.5).contains(&rate) {
                Err(Error::invalid(format!(
                    "contamination rate must lie in [0, 0.5), got {rate}"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            Contamination::None => Ok(()),
            Contamination::LabelFlip {
                rate,
                leverage_quantile,
            } => {
                check_rate(*rate)?;
                if !leverage_quantile.is_finite()
                    || !(*leverage_quantile > 0.0 && *leverage_quantile <= 1.0)
                {
                    return Err(Error::invalid(format!(
                        "leverage quantile must lie in (0, 1], got {leverage_quantile}"
                    )));
                }
                if rate > leverage_quantile {
                    return Err(Error::invalid(format!(
                        "flip rate {rate} exceeds the leverage quantile {leverage_quantile}"
                    )));
                }
                Ok(())
            }
            Contamination::PointMass { rate, x_out, y_out } => {
                check_rate(*rate)?;
                if x_out.is_empty() {
                    return Err(Error::invalid("outlying point must be non-empty"));
                }
                if let Some(j) = x_out.iter().position(|v| !v.is_finite()) {
                    return Err(Error::domain(format!(
                        "outlying point entry {j} is not finite"
                    )));
                }
                if *y_out > 1 {
                    return Err(Error::domain(format!(
                        "outlying label must be 0 or 1, got {y_out}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Declaration of a simulation experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Free-form label copied into the report.
    #[serde(default)]
    pub name: String,
    /// Sample sizes to sweep.
    pub n_grid: Vec<usize>,
    /// Dimension rule.
    pub p_rule: PRule,
    /// Number of leading non-zero true coefficients.
    pub k: usize,
    /// Rule for the non-zero block of the truth.
    pub beta0_rule: Beta0Rule,
    /// Design row distribution.
    pub design: Design,
    /// Contamination applied after clean generation.
    #[serde(default = "default_contamination")]
    pub contamination: Contamination,
    /// Loss to fit with.
    pub loss: LossSpec,
    /// Penalty family to fit with.
    pub penalty_family: PenaltyFamily,
    /// Rule for the penalty level.
    pub lambda_rule: LambdaRule,
    /// Replications per sample size.
    pub replications: usize,
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    /// Solver options (the per-replication multi-start seed is derived from
    /// the scenario seed, overriding `fit.seed`).
    #[serde(default)]
    pub fit: FitConfig,
    /// Monte Carlo draws for the squared prediction distance.
    #[serde(default = "default_d2_draws")]
    pub d2_draws: usize,
    /// Unit-norm directions (length `k`) for Wald statistics on the true
    /// support; empty to skip them.
    #[serde(default)]
    pub wald_directions: Vec<Vec<f64>>,
}

fn default_contamination() -> Contamination {
    Contamination::None
}

fn default_d2_draws() -> usize {
    DEFAULT_D2_DRAWS
}

impl Scenario {
    /// Checks the declaration for consistency.
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(Error::invalid("sample-size grid must be non-empty"));
        }
        if let Some(&n) = self.n_grid.iter().find(|&&n| n < 2) {
            return Err(Error::invalid(format!(
                "sample sizes must be at least 2, got {n}"
            )));
        }
        self.p_rule.validate()?;
        self.beta0_rule.validate(self.k)?;
        self.design.validate()?;
        self.contamination.validate()?;
        self.loss.validate()?;
        PenaltySpec {
            family: self.penalty_family,
            lambda: 0.0,
        }
        .validate()?;
        self.lambda_rule.validate()?;
        self.fit.validate()?;
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.d2_draws == 0 {
            return Err(Error::invalid("d2_draws must be at least 1"));
        }
        for &n in &self.n_grid {
            self.check_dimensions(n)?;
            let p = self.p_rule.p_of(n);
            let lambda = self.lambda_rule.lambda(n, p);
            if !lambda.is_finite() || lambda <= 0.0 {
                return Err(Error::invalid(format!(
                    "penalty-level rule yields {lambda} at n = {n}, p = {p}; \
                     it must be positive (is p large enough for the rule?)"
                )));
            }
        }
        for (i, v) in self.wald_directions.iter().enumerate() {
            if v.len() != self.k {
                return Err(Error::invalid(format!(
                    "Wald direction {i} has length {}, expected k = {}",
                    v.len(),
                    self.k
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::domain(format!(
                    "Wald direction {i} has non-finite entries"
                )));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-8 {
                return Err(Error::invalid(format!(
                    "Wald direction {i} must be unit length, got norm {norm}"
                )));
            }
        }
        Ok(())
    }

    /// Dimension checks for one sample size.
    fn check_dimensions(&self, n: usize) -> Result<()> {
        let p = self.p_rule.p_of(n);
        if p == 0 {
            return Err(Error::invalid(format!(
                "column rule yields 0 columns at n = {n}"
            )));
        }
        if self.k > p {
            return Err(Error::invalid(format!(
                "active count k = {} exceeds p = {p} at n = {n}",
                self.k
            )));
        }
        if let Some(q) = self.design.fixed_p() {
            if q != p {
                return Err(Error::invalid(format!(
                    "design pins the dimension to {q}, but the column rule yields {p} at n = {n}"
                )));
            }
        }
        if let Contamination::PointMass { x_out, .. } = &self.contamination {
            if x_out.len() != p {
                return Err(Error::invalid(format!(
                    "outlying point has length {}, but the column rule yields {p} at n = {n}",
                    x_out.len()
                )));
            }
        }
        Ok(())
    }
}

/// One generated replication: the dataset, the truth it was drawn from, and
/// the dimension used.
#[derive(Clone, Debug)]
pub struct GeneratedData {
    /// The contaminated dataset.
    pub dataset: Dataset,
    /// The true coefficient vector (length `p`, leading `k` entries active).
    pub beta0: Array1<f64>,
    /// The column count at this sample size.
    pub p: usize,
}

/// Derives a 32-byte seed from the scenario seed, the sample size, the
/// replication index, and a stream purpose, by hashing. Replications are
/// therefore independent of execution order and thread count.
fn stream_seed(seed: u64, n: usize, rep: usize, purpose: u32) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"roblogit.simlab.v1");
    h.update(seed.to_le_bytes());
    h.update((n as u64).to_le_bytes());
    h.update((rep as u64).to_le_bytes());
    h.update(purpose.to_le_bytes());
    h.finalize().into()
}

/// First eight bytes of [`stream_seed`] as a `u64`.
fn stream_u64(seed: u64, n: usize, rep: usize, purpose: u32) -> u64 {
    let bytes = stream_seed(seed, n, rep, purpose);
    u64::from_le_bytes(bytes[..8].try_into().expect("eight bytes"))
}

/// Generates one replication of a scenario at sample size `n`.
///
/// Fully deterministic in `(scenario.seed, n, rep)`. The draw order is
/// fixed: design rows first, then response uniforms, then contamination
/// choices.
pub fn generate(scenario: &Scenario, n: usize, rep: usize) -> Result<GeneratedData> {
    scenario.validate()?;
    if n < 2 {
        return Err(Error::invalid(format!(
            "sample size must be at least 2, got {n}"
        )));
    }
    scenario.check_dimensions(n)?;
    generate_unchecked(scenario, n, rep)
}

/// Generation body; assumes the scenario and dimensions were validated.
fn generate_unchecked(scenario: &Scenario, n: usize, rep: usize) -> Result<GeneratedData> {
    let p = scenario.p_rule.p_of(n);
    let k = scenario.k;
    let mut beta0 = Array1::zeros(p);
    for (j, v) in scenario
        .beta0_rule
        .active_values(n, k)
        .into_iter()
        .enumerate()
    {
        beta0[j] = v;
    }
    let mut rng = ChaCha8Rng::from_seed(stream_seed(scenario.seed, n, rep, STREAM_DATA));
    let sampler = scenario.design.sampler(p)?;
    let mut x = Array2::zeros((n, p));
    let mut row = vec![0.0; p];
    for i in 0..n {
        sampler.sample_row(&mut rng, &mut row);
        for j in 0..p {
            x[[i, j]] = row[j];
        }
    }
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let t: f64 = (0..p).map(|j| x[[i, j]] * beta0[j]).sum();
        let u: f64 = rng.random();
        y[i] = u8::from(u < sigmoid(t));
    }
    match &scenario.contamination {
        Contamination::None => {}
        Contamination::LabelFlip {
            rate,
            leverage_quantile,
        } => {
            let flips = (rate * n as f64).floor() as usize;
            if flips > 0 {
                let pool_size = ((leverage_quantile * n as f64).floor() as usize).max(flips);
                let norms: Vec<f64> = (0..n)
                    .map(|i| (0..p).map(|j| x[[i, j]] * x[[i, j]]).sum::<f64>().sqrt())
                    .collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_unstable_by(|&a, &b| {
                    norms[b].total_cmp(&norms[a]).then(a.cmp(&b))
                });
                let mut pool: Vec<usize> = order[..pool_size].to_vec();
                for i in 0..flips {
                    let j = rng.random_range(i..pool_size);
                    pool.swap(i, j);
                }
                for &i in &pool[..flips] {
                    y[i] = 1 - y[i];
                }
            }
        }
        Contamination::PointMass { rate, x_out, y_out } => {
            let m = (rate * n as f64).floor() as usize;
            if m > 0 {
                let mut idx: Vec<usize> = (0..n).collect();
                for i in 0..m {
                    let j = rng.random_range(i..n);
                    idx.swap(i, j);
                }
                for &i in &idx[..m] {
                    for j in 0..p {
                        x[[i, j]] = x_out[j];
                    }
                    y[i] = *y_out;
                }
            }
        }
    }
    Ok(GeneratedData {
        dataset: Dataset::new(x, y)?,
        beta0,
        p,
    })
}

/// Per-replication outcome.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RepRecord {
    /// Sample size.
    pub n: usize,
    /// Replication index.
    pub replication: usize,
    /// Column count.
    pub p: usize,
    /// Penalty level used.
    pub lambda: f64,
    /// `||beta_hat - beta0||_2`.
    pub l2_error: f64,
    /// Monte Carlo squared prediction distance to the truth.
    pub d2: f64,
    /// Standard error of `d2`.
    pub d2_std_error: f64,
    /// Whether the fitted active set equals the true support exactly.
    pub exact_support: bool,
    /// Whether every truly inactive coefficient is exactly zero.
    pub inactive_all_zero: bool,
    /// Number of truly active coefficients estimated as exactly zero.
    pub false_negatives: usize,
    /// Wald statistics, one per configured direction.
    pub wald: Vec<f64>,
    /// Whether the fit converged within its budget.
    pub converged: bool,
    /// Accepted solver iterations.
    pub iterations: usize,
    /// Final objective value.
    pub objective: f64,
    /// Size of the fitted active set.
    pub active_size: usize,
}

/// Regularity diagnostics of the generated problem at one sample size,
/// computed from replication 0. Reported, never asserted.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Smallest eigenvalue of `X'X/n`.
    pub h_eigen_min: f64,
    /// Largest eigenvalue of `X'X/n`.
    pub h_eigen_max: f64,
    /// `beta0' (X'X/n) beta0`.
    pub beta0_quadratic_form: f64,
    /// Smallest active magnitude of the truth (`None` when `k = 0`).
    pub signal_floor: Option<f64>,
    /// Signal floor scaled by `sqrt(n / k)`; large values favor support
    /// recovery.
    pub signal_to_sparsity: Option<f64>,
    /// Signal floor divided by the penalty level; large values mean the
    /// penalty does not drown the signal.
    pub signal_to_lambda: Option<f64>,
    /// `k / (n lambda^2)`; small values mean the penalty dominates the
    /// estimation noise on the active block.
    pub sparsity_to_lambda: f64,
}

/// Aggregates over the successful replications at one sample size.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NSummary {
    /// Sample size.
    pub n: usize,
    /// Column count.
    pub p: usize,
    /// Penalty level used.
    pub lambda: f64,
    /// Number of successful replications.
    pub replications_ok: usize,
    /// Number of failed replications.
    pub failures: usize,
    /// Number of successful replications whose fit did not converge.
    pub nonconverged: usize,
    /// Median `||beta_hat - beta0||_2`.
    pub median_l2: f64,
    /// Median squared prediction distance.
    pub median_d2: f64,
    /// Fraction of replications recovering the support exactly.
    pub freq_exact_support: f64,
    /// Fraction of replications with every inactive coefficient at zero.
    pub freq_inactive_zero: f64,
    /// Mean number of active coefficients missed.
    pub mean_false_negatives: f64,
    /// Sample variance of each Wald direction across replications.
    pub wald_variance: Vec<f64>,
    /// Normality check per Wald direction (`None` when there are fewer
    /// than [`KS_MIN_SAMPLES`] successful replications).
    pub wald_normality: Vec<Option<KsCheck>>,
    /// Problem regularity diagnostics from replication 0.
    pub diagnostics: Diagnostics,
}

/// Full experiment output: per-sample-size summaries plus every
/// per-replication record, in deterministic order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimReport {
    /// Scenario label.
    pub name: String,
    /// Master seed the experiment ran under.
    pub seed: u64,
    /// One summary per entry of the sample-size grid, in grid order.
    pub summaries: Vec<NSummary>,
    /// All successful replication records, grid order then replication
    /// order.
    pub records: Vec<RepRecord>,
}

/// Runs one replication end to end.
fn run_replication(
    scenario: &Scenario,
    n: usize,
    p: usize,
    lambda: f64,
    pen: &PenaltySpec,
    rep: usize,
) -> Result<RepRecord> {
    let generated = generate_unchecked(scenario, n, rep)?;
    let mut cfg = scenario.fit;
    cfg.seed = stream_u64(scenario.seed, n, rep, STREAM_STARTS);
    let res = fit(&generated.dataset, &scenario.loss, pen, &cfg)?;
    let beta_hat = res.beta_array();
    let l2_error = beta_hat
        .iter()
        .zip(generated.beta0.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let pd = prediction_distance(
        beta_hat.view(),
        generated.beta0.view(),
        &scenario.design,
        scenario.d2_draws,
        stream_u64(scenario.seed, n, rep, STREAM_DISTANCE),
    )?;
    let k = scenario.k;
    let exact_support =
        res.active_set.len() == k && res.active_set.iter().enumerate().all(|(i, &j)| i == j);
    let inactive_all_zero = beta_hat.iter().skip(k).all(|&b| b == 0.0);
    let false_negatives = (0..k).filter(|&j| beta_hat[j] == 0.0).count();
    let wald = if k > 0 && !scenario.wald_directions.is_empty() {
        let active: Vec<usize> = (0..k).collect();
        let report =
            estimate_moment_matrices(&generated.dataset, beta_hat.view(), &active, &scenario.loss)?;
        let bh = beta_hat.slice(s![..k]);
        let b0 = generated.beta0.slice(s![..k]);
        let mut stats = Vec::with_capacity(scenario.wald_directions.len());
        for v in &scenario.wald_directions {
            let direction = Array1::from(v.clone());
            stats.push(crate::inference::wald_statistic(
                direction.view(),
                &report,
                bh,
                b0,
                n,
            )?);
        }
        stats
    } else {
        Vec::new()
    };
    Ok(RepRecord {
        n,
        replication: rep,
        p,
        lambda,
        l2_error,
        d2: pd.value,
        d2_std_error: pd.std_error,
        exact_support,
        inactive_all_zero,
        false_negatives,
        wald,
        converged: res.converged,
        iterations: res.iterations,
        objective: res.objective,
        active_size: res.active_set.len(),
    })
}

/// Problem diagnostics from replication 0 at one sample size.
fn diagnostics_for(scenario: &Scenario, n: usize, p: usize, lambda: f64) -> Result<Diagnostics> {
    let generated = generate_unchecked(scenario, n, 0)?;
    let x = generated.dataset.x();
    let mut h = x.t().dot(&x);
    h.mapv_inplace(|v| v / n as f64);
    let range = crate::inference::eigen_range(&h);
    let hb = h.dot(&generated.beta0);
    let quad = generated.beta0.dot(&hb);
    let k = scenario.k;
    let signal_floor = scenario.beta0_rule.signal_floor(n, k);
    let _ = p;
    Ok(Diagnostics {
        h_eigen_min: range.min,
        h_eigen_max: range.max,
        beta0_quadratic_form: quad,
        signal_floor,
        signal_to_sparsity: signal_floor.map(|m0| m0 * (n as f64 / k as f64).sqrt()),
        signal_to_lambda: signal_floor.map(|m0| m0 / lambda),
        sparsity_to_lambda: k as f64 / (n as f64 * lambda * lambda),
    })
}

/// Runs the full experiment: all sample sizes, all replications (in
/// parallel), aggregation, and diagnostics.
///
/// Errors with [`Error::ExperimentFailure`] when more than 5% of all
/// replications fail; individual failures below that budget are counted
/// and excluded from the aggregates.
pub fn run_experiment(scenario: &Scenario) -> Result<SimReport> {
    scenario.validate()?;
    let mut per_n: Vec<(usize, usize, f64, Vec<RepRecord>)> = Vec::new();
    let mut failure_tags: Vec<(usize, usize)> = Vec::new();
    let mut total = 0usize;
    for &n in &scenario.n_grid {
        let p = scenario.p_rule.p_of(n);
        let lambda = scenario.lambda_rule.lambda(n, p);
        let pen = PenaltySpec::new(scenario.penalty_family, lambda)?;
        let outcomes: Vec<Result<RepRecord>> = (0..scenario.replications)
            .into_par_iter()
            .map(|rep| run_replication(scenario, n, p, lambda, &pen, rep))
            .collect();
        total += scenario.replications;
        let mut ok = Vec::with_capacity(scenario.replications);
        for (rep, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(rec) => ok.push(rec),
                Err(_) => failure_tags.push((n, rep)),
            }
        }
        per_n.push((n, p, lambda, ok));
    }
    let failed = failure_tags.len();
    if failed * 100 > total * usize::from(FAILURE_LIMIT_PERCENT) {
        failure_tags.truncate(8);
        return Err(Error::ExperimentFailure {
            failed,
            total,
            limit_percent: FAILURE_LIMIT_PERCENT,
            tags: failure_tags,
        });
    }
    let mut summaries = Vec::with_capacity(per_n.len());
    let mut records = Vec::new();
    for (n, p, lambda, ok) in per_n {
        if ok.is_empty() {
            return Err(Error::invalid(format!(
                "every replication failed at n = {n}; aggregates are undefined"
            )));
        }
        let failures = scenario.replications - ok.len();
        let nonconverged = ok.iter().filter(|r| !r.converged).count();
        let l2: Vec<f64> = ok.iter().map(|r| r.l2_error).collect();
        let d2: Vec<f64> = ok.iter().map(|r| r.d2).collect();
        let n_dirs = scenario.wald_directions.len();
        let mut wald_variance = Vec::with_capacity(n_dirs);
        let mut wald_normality = Vec::with_capacity(n_dirs);
        for d in 0..n_dirs {
            let samples: Vec<f64> = ok.iter().map(|r| r.wald[d]).collect();
            wald_variance.push(stats::sample_variance(&samples));
            wald_normality.push(if samples.len() >= KS_MIN_SAMPLES {
                Some(normality_check(&samples)?)
            } else {
                None
            });
        }
        let summary = NSummary {
            n,
            p,
            lambda,
            replications_ok: ok.len(),
            failures,
            nonconverged,
            median_l2: stats::median(&l2),
            median_d2: stats::median(&d2),
            freq_exact_support: ok.iter().filter(|r| r.exact_support).count() as f64
                / ok.len() as f64,
            freq_inactive_zero: ok.iter().filter(|r| r.inactive_all_zero).count() as f64
                / ok.len() as f64,
            mean_false_negatives: ok.iter().map(|r| r.false_negatives as f64).sum::<f64>()
                / ok.len() as f64,
            wald_variance,
            wald_normality,
            diagnostics: diagnostics_for(scenario, n, p, lambda)?,
        };
        summaries.push(summary);
        records.extend(ok);
    }
    Ok(SimReport {
        name: scenario.name.clone(),
        seed: scenario.seed,
        summaries,
        records,
    })
}

/// Fits the decay rate of the median estimation error against a theoretical
/// rate function: the slope of `ln median_l2` on `ln rate(n, p)` across the
/// sample-size grid, with its standard error. A slope near 1 means the
/// errors scale like the rate function.
///
/// Requires at least three distinct sample sizes with positive medians.
pub fn rate_slope(
    report: &SimReport,
    rate: impl Fn(usize, usize) -> f64,
) -> Result<RateSlope> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut seen = Vec::new();
    for s in &report.summaries {
        if seen.contains(&s.n) {
            continue;
        }
        seen.push(s.n);
        xs.push(rate(s.n, s.p));
        ys.push(s.median_l2);
    }
    if xs.len() < 3 {
        return Err(Error::invalid(format!(
            "rate fitting needs at least 3 distinct sample sizes, got {}",
            xs.len()
        )));
    }
    stats::log_log_slope(&xs, &ys)
}
