//! Solver integration checks: permutation equivariance, path determinism,
//! and model selection on synthetic data with known support.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use roblogit::data::Dataset;
use roblogit::loss::LossSpec;
use roblogit::penalty::{PenaltyFamily, PenaltySpec};
use roblogit::solver::{fit, lambda_path, select_lambda_bic, FitConfig};

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Draws a standard-normal design with labels from a logistic model.
fn synth(seed: u64, n: usize, p: usize, beta0: &[f64]) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, p));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut t = 0.0;
        for j in 0..p {
            x[[i, j]] = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng);
            t += x[[i, j]] * beta0[j];
        }
        y[i] = u8::from(rng.random::<f64>() < sigmoid(t));
    }
    Dataset::new(x, y).unwrap()
}

/// Permuting the design columns permutes the solution: the optimization is
/// coordinate-separable in the penalty and the loss only sees the linear
/// predictor, which the permutation preserves.
#[test]
fn column_permutation_equivariance() {
    let n = 400;
    let p = 4;
    let beta0 = [1.0, -0.7, 0.4, 0.0];
    let data = synth(7, n, p, &beta0);
    let perm = [2usize, 0, 3, 1];

    let x = data.x();
    let mut xp = Array2::zeros((n, p));
    for j in 0..p {
        for i in 0..n {
            xp[[i, j]] = x[[i, perm[j]]];
        }
    }
    let permuted = Dataset::new(xp, data.y().to_owned()).unwrap();

    let loss = LossSpec::exp_loss();
    let pen = PenaltySpec::scad(0.05).unwrap();
    let cfg = FitConfig::default();
    let base = fit(&data, &loss, &pen, &cfg).unwrap();
    let moved = fit(&permuted, &loss, &pen, &cfg).unwrap();

    assert!(base.converged && moved.converged);
    // Dot products accumulate in a different order after the permutation,
    // so agreement is near the solver tolerance rather than bitwise.
    const PERMUTATION_TOL: f64 = 1e-5;
    for (j, &source) in perm.iter().enumerate() {
        let diff = (moved.beta[j] - base.beta[source]).abs();
        assert!(
            diff <= PERMUTATION_TOL,
            "coordinate {j}: permuted fit {} vs base {} (diff {diff})",
            moved.beta[j],
            base.beta[source]
        );
    }
}

/// Rerunning an identical path produces byte-identical serialized output.
#[test]
fn lambda_path_is_deterministic() {
    let data = synth(21, 200, 6, &[1.2, -0.9, 0.0, 0.0, 0.0, 0.0]);
    let loss = LossSpec::divergence(0.5).unwrap();
    let lambdas = [0.4, 0.2, 0.1, 0.05, 0.025];
    let cfg = FitConfig {
        n_starts: 3,
        seed: 99,
        ..FitConfig::default()
    };

    let run = |_: ()| {
        let path = lambda_path(&data, &loss, PenaltyFamily::Lasso, &lambdas, &cfg).unwrap();
        serde_json::to_string(&path).unwrap()
    };
    let first = run(());
    let second = run(());
    assert_eq!(first, second, "identical path runs must serialize identically");
}

/// On a well-separated sparse truth, the information criterion picks a
/// penalty level whose fit keeps every true signal (no false negatives)
/// and drops most of the noise.
#[test]
fn bic_selection_recovers_signals() {
    let n = 600;
    let p = 8;
    let beta0 = [1.5, -1.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let data = synth(42, n, p, &beta0);
    let loss = LossSpec::exp_loss();
    let lambdas: Vec<f64> = (0..12).map(|i| 0.6 * 0.7f64.powi(i)).collect();
    let cfg = FitConfig::default();

    let path = lambda_path(
        &data,
        &loss,
        PenaltyFamily::Scad { a: 3.7 },
        &lambdas,
        &cfg,
    )
    .unwrap();
    let chosen = select_lambda_bic(&path, &data, &loss).unwrap();
    let best = &path[chosen];

    assert!(best.converged);
    for j in 0..2 {
        assert!(
            best.active_set.contains(&j),
            "signal coordinate {j} missing from the selected fit (active set {:?})",
            best.active_set
        );
    }
    assert_eq!(best.beta[0].signum(), 1.0);
    assert_eq!(best.beta[1].signum(), -1.0);
    assert!(
        best.active_set.len() <= 5,
        "selected fit keeps too much noise: {:?}",
        best.active_set
    );
}

/// A restriction radius large enough to contain the unrestricted solution
/// leaves the fit unchanged, and a tight one binds.
#[test]
fn restriction_radius_interacts_correctly() {
    let data = synth(77, 300, 4, &[1.0, -0.8, 0.0, 0.0]);
    let loss = LossSpec::exp_loss();
    let pen = PenaltySpec::lasso(0.05).unwrap();

    let free = fit(&data, &loss, &pen, &FitConfig::default()).unwrap();
    let free_l1: f64 = free.beta.iter().map(|b| b.abs()).sum();

    let loose_cfg = FitConfig {
        restriction_radius: Some(2.0 * free_l1 + 1.0),
        ..FitConfig::default()
    };
    let loose = fit(&data, &loss, &pen, &loose_cfg).unwrap();
    for j in 0..4 {
        assert!(
            (loose.beta[j] - free.beta[j]).abs() <= 1e-9,
            "non-binding restriction moved coordinate {j}"
        );
    }

    let tight_cfg = FitConfig {
        restriction_radius: Some(0.5 * free_l1),
        ..FitConfig::default()
    };
    let tight = fit(&data, &loss, &pen, &tight_cfg).unwrap();
    let tight_l1: f64 = tight.beta.iter().map(|b| b.abs()).sum();
    assert!(
        tight_l1 <= 0.5 * free_l1 + 1e-9,
        "restriction violated: {tight_l1} > {}",
        0.5 * free_l1
    );
}
