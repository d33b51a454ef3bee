//! The three subcommands. Each writes a JSON document to `--out` and maps
//! its outcome to the process exit code: 0 when every fit converged, 2
//! when a result was produced but some fit hit its iteration budget (the
//! file is still written), and 1 for input or numeric errors (bubbled up
//! as `Err`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use ndarray::{Array1, Array2};
use roblogit::data::Dataset;
use roblogit::inference::{estimate_moment_matrices, sandwich_covariance};
use roblogit::loss::LossSpec;
use roblogit::penalty::{penalty_value, PenaltySpec};
use roblogit::simlab::{run_experiment, Scenario};
use roblogit::solver::{fit, fitted_loss, lambda_path, select_lambda_bic, FitResult};
use serde::Serialize;

use crate::config;
use crate::ingest::read_csv;

/// Absolute agreement required when the stored objective is recomputed
/// from the written coefficients and the input data.
const ROUND_TRIP_TOL: f64 = 1e-9;

/// Report of a single `fit` run.
#[derive(Serialize)]
struct FitOutput<'a> {
    command: &'static str,
    data: &'a Path,
    response: &'a str,
    columns: &'a [String],
    n: usize,
    p: usize,
    intercept: bool,
    loss: &'a LossSpec,
    penalty: &'a PenaltySpec,
    seed: u64,
    fit: &'a FitResult,
    standard_errors: Option<StandardErrors>,
}

/// Report of a `path` run.
#[derive(Serialize)]
struct PathOutput<'a> {
    command: &'static str,
    data: &'a Path,
    response: &'a str,
    columns: &'a [String],
    n: usize,
    p: usize,
    intercept: bool,
    loss: &'a LossSpec,
    penalty_family: roblogit::penalty::PenaltyFamily,
    seed: u64,
    fits: &'a [FitResult],
    /// `2 n L_n + |active| log n` per path position.
    bic: Vec<f64>,
    /// Index of the BIC-selected fit.
    selected: usize,
    /// Standard errors for the selected fit.
    standard_errors: Option<StandardErrors>,
}

/// Sandwich standard errors for the active block.
#[derive(Serialize)]
struct StandardErrors {
    /// Standard error of the intercept, when one was fitted.
    intercept: Option<f64>,
    /// Active coefficient indices the values refer to.
    active: Vec<usize>,
    /// One standard error per entry of `active`.
    values: Vec<f64>,
}

/// Runs `fit`: one model at one penalty level.
pub fn cmd_fit(
    data_path: &Path,
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
) -> Result<ExitCode> {
    let cfg = config::load(config_path)?;
    let pen = PenaltySpec::new(cfg.model.penalty, cfg.model.lambda)
        .context("invalid [model] penalty")?;
    let ingested = read_csv(data_path, &cfg.data.response, cfg.data.intercept)?;
    let mut solver_cfg = cfg.solver;
    if let Some(s) = seed {
        solver_cfg.seed = s;
    }

    let result = fit(&ingested.dataset, &cfg.model.loss, &pen, &solver_cfg)?;
    verify_round_trip(&result, &ingested.dataset, &cfg.model.loss, &pen, &solver_cfg)?;

    let standard_errors = if cfg.inference.standard_errors {
        compute_standard_errors(&ingested.dataset, &result, &cfg.model.loss)?
    } else {
        None
    };

    let report = FitOutput {
        command: "fit",
        data: data_path,
        response: &ingested.response_name,
        columns: &ingested.feature_names,
        n: ingested.dataset.n(),
        p: ingested.dataset.p(),
        intercept: cfg.data.intercept,
        loss: &cfg.model.loss,
        penalty: &pen,
        seed: solver_cfg.seed,
        fit: &result,
        standard_errors,
    };
    write_json(out, &report)?;
    Ok(exit_for(result.converged))
}

/// Runs `path`: a strictly descending penalty sequence with warm starts,
/// BIC values per position, and the selected index.
pub fn cmd_path(
    data_path: &Path,
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
) -> Result<ExitCode> {
    let cfg = config::load(config_path)?;
    let Some(path_section) = &cfg.path else {
        bail!("the path command needs a [path] section with a lambdas list");
    };
    let ingested = read_csv(data_path, &cfg.data.response, cfg.data.intercept)?;
    let mut solver_cfg = cfg.solver;
    if let Some(s) = seed {
        solver_cfg.seed = s;
    }

    let fits = lambda_path(
        &ingested.dataset,
        &cfg.model.loss,
        cfg.model.penalty,
        &path_section.lambdas,
        &solver_cfg,
    )?;
    let n = ingested.dataset.n() as f64;
    let mut bic = Vec::with_capacity(fits.len());
    for result in &fits {
        let pen = PenaltySpec::new(cfg.model.penalty, result.lambda)?;
        verify_round_trip(result, &ingested.dataset, &cfg.model.loss, &pen, &solver_cfg)?;
        let lv = fitted_loss(result, &ingested.dataset, &cfg.model.loss)?;
        bic.push(2.0 * n * lv + result.active_set.len() as f64 * n.ln());
    }
    let selected = select_lambda_bic(&fits, &ingested.dataset, &cfg.model.loss)?;

    let standard_errors = if cfg.inference.standard_errors {
        compute_standard_errors(&ingested.dataset, &fits[selected], &cfg.model.loss)?
    } else {
        None
    };

    let all_converged = fits.iter().all(|f| f.converged);
    let report = PathOutput {
        command: "path",
        data: data_path,
        response: &ingested.response_name,
        columns: &ingested.feature_names,
        n: ingested.dataset.n(),
        p: ingested.dataset.p(),
        intercept: cfg.data.intercept,
        loss: &cfg.model.loss,
        penalty_family: cfg.model.penalty,
        seed: solver_cfg.seed,
        fits: &fits,
        bic,
        selected,
        standard_errors,
    };
    write_json(out, &report)?;
    Ok(exit_for(all_converged))
}

/// Runs `simulate`: a scenario file in, the aggregate report out, plus an
/// optional JSONL stream of per-replication records.
pub fn cmd_simulate(
    config_path: &Path,
    out: &Path,
    records: Option<&PathBuf>,
    seed: Option<u64>,
) -> Result<ExitCode> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("cannot read scenario file {}", config_path.display()))?;
    let mut scenario: Scenario = toml::from_str(&text)
        .with_context(|| format!("invalid scenario file {}", config_path.display()))?;
    if let Some(s) = seed {
        scenario.seed = s;
    }

    let report = run_experiment(&scenario)?;
    write_json(out, &report)?;
    if let Some(records_path) = records {
        let mut lines = String::new();
        for record in &report.records {
            lines.push_str(&serde_json::to_string(record)?);
            lines.push('\n');
        }
        std::fs::write(records_path, lines)
            .with_context(|| format!("cannot write records to {}", records_path.display()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn exit_for(converged: bool) -> ExitCode {
    if converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

/// Recomputes the objective from the written coefficients and the input
/// data; an output that does not reproduce its own objective is a bug, not
/// a user error, but it must never reach disk unflagged.
fn verify_round_trip(
    result: &FitResult,
    data: &Dataset,
    loss: &LossSpec,
    pen: &PenaltySpec,
    cfg: &roblogit::solver::FitConfig,
) -> Result<()> {
    let mut penalty = penalty_value(result.beta_array().view(), pen)?;
    if let Some(alpha) = result.intercept {
        if cfg.penalize_intercept {
            penalty += pen.scalar(alpha.abs());
        }
    }
    let recomputed = fitted_loss(result, data, loss)? + penalty;
    if (recomputed - result.objective).abs() > ROUND_TRIP_TOL {
        bail!(
            "internal error: objective {} does not reproduce from its coefficients \
             (recomputed {recomputed})",
            result.objective
        );
    }
    Ok(())
}

/// Sandwich standard errors for the fitted active block.
///
/// With an intercept the moment matrices are estimated on the design
/// augmented by a leading column of ones, treating the intercept as
/// coordinate 0 of the active block; without one they are estimated on
/// the design as-is. Returns `None` when nothing is active (there is no
/// block to estimate).
fn compute_standard_errors(
    data: &Dataset,
    result: &FitResult,
    loss: &LossSpec,
) -> Result<Option<StandardErrors>> {
    let has_intercept = result.intercept.is_some();
    if result.active_set.is_empty() && !has_intercept {
        return Ok(None);
    }
    let (report, intercept_first) = if let Some(alpha) = result.intercept {
        let n = data.n();
        let p = data.p();
        let mut x_aug = Array2::<f64>::ones((n, p + 1));
        x_aug.slice_mut(ndarray::s![.., 1..]).assign(&data.x());
        let aug = Dataset::new(x_aug, data.y().to_owned())?;
        let mut beta_aug = Array1::<f64>::zeros(p + 1);
        beta_aug[0] = alpha;
        for (j, &b) in result.beta.iter().enumerate() {
            beta_aug[j + 1] = b;
        }
        let mut active_aug = vec![0usize];
        active_aug.extend(result.active_set.iter().map(|&j| j + 1));
        (
            estimate_moment_matrices(&aug, beta_aug.view(), &active_aug, loss)?,
            true,
        )
    } else {
        (
            estimate_moment_matrices(data, result.beta_array().view(), &result.active_set, loss)?,
            false,
        )
    };
    let cov = sandwich_covariance(&report)?;
    let ses: Vec<f64> = (0..cov.nrows()).map(|j| cov[[j, j]].max(0.0).sqrt()).collect();
    let (intercept, values) = if intercept_first {
        (Some(ses[0]), ses[1..].to_vec())
    } else {
        (None, ses)
    };
    Ok(Some(StandardErrors {
        intercept,
        active: result.active_set.clone(),
        values,
    }))
}

/// Serializes `value` as pretty JSON with a trailing newline.
fn write_json<T: Serialize>(out: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(out, text).with_context(|| format!("cannot write output to {}", out.display()))
}
