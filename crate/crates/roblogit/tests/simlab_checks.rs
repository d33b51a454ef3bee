//! Simulation-lab integration checks: design marginals, the contamination
//! contrast between bounded and unbounded losses at desk scale, the
//! normality check, and rate fitting on synthetic summaries.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use roblogit::design::Design;
use roblogit::loss::LossSpec;
use roblogit::penalty::PenaltyFamily;
use roblogit::simlab::{
    normality_check, rate_slope, run_experiment, Beta0Rule, Contamination, Diagnostics,
    LambdaRule, NSummary, PRule, Scenario, SimReport,
};
use roblogit::solver::FitConfig;

/// Identity-covariance rows really have identity second moments.
#[test]
fn identity_design_second_moments() {
    let sampler = Design::GaussianIdentity.sampler(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 100_000usize;
    let mut moments = [[0.0f64; 3]; 3];
    let mut row = [0.0f64; 3];
    for _ in 0..n {
        sampler.sample_row(&mut rng, &mut row);
        for i in 0..3 {
            for j in 0..3 {
                moments[i][j] += row[i] * row[j];
            }
        }
    }
    for (i, sums) in moments.iter().enumerate() {
        for (j, sum) in sums.iter().enumerate() {
            let m = sum / n as f64;
            let target = if i == j { 1.0 } else { 0.0 };
            assert!(
                (m - target).abs() <= 0.03,
                "second moment ({i},{j}) = {m}, expected {target}"
            );
        }
    }
}

fn contamination_scenario(loss: LossSpec, contamination: Contamination, name: &str) -> Scenario {
    Scenario {
        name: name.to_string(),
        n_grid: vec![400],
        p_rule: PRule::Fixed { p: 10 },
        k: 3,
        beta0_rule: Beta0Rule::FixedMagnitudes {
            values: vec![1.5, 1.5, 1.5],
        },
        design: Design::GaussianIdentity,
        contamination,
        loss,
        penalty_family: PenaltyFamily::Scad { a: 3.7 },
        lambda_rule: LambdaRule::Fixed { value: 0.1 },
        replications: 50,
        seed: 2718,
        fit: FitConfig::default(),
        d2_draws: 2_000,
        wald_directions: vec![],
    }
}

/// Adversarial label flips at high-leverage rows hurt the unbounded
/// deviance fit visibly, and hurt the bounded fit strictly less.
#[test]
fn bounded_loss_resists_label_flips() {
    let flips = |rate: f64| Contamination::LabelFlip {
        rate,
        leverage_quantile: 0.10,
    };
    let median_at = |loss: LossSpec, contamination: Contamination, name: &str| -> f64 {
        let report = run_experiment(&contamination_scenario(loss, contamination, name)).unwrap();
        report.summaries[0].median_l2
    };

    let cls_clean = median_at(LossSpec::classical(), Contamination::None, "cls-clean");
    let cls_mid = median_at(LossSpec::classical(), flips(0.05), "cls-mid");
    let cls_heavy = median_at(LossSpec::classical(), flips(0.10), "cls-heavy");
    let exp_clean = median_at(LossSpec::exp_loss(), Contamination::None, "exp-clean");
    let exp_heavy = median_at(LossSpec::exp_loss(), flips(0.10), "exp-heavy");

    assert!(
        cls_mid >= cls_clean && cls_heavy >= cls_mid,
        "unbounded-loss error should grow with the flip rate: {cls_clean}, {cls_mid}, {cls_heavy}"
    );
    let cls_degradation = cls_heavy - cls_clean;
    let exp_degradation = exp_heavy - exp_clean;
    assert!(
        exp_degradation < cls_degradation,
        "bounded loss should degrade less: {exp_degradation} vs {cls_degradation}"
    );
}

/// The normality check rejects a degenerate point mass (where the
/// statistic is exactly one half) and accepts genuine normal draws.
#[test]
fn normality_check_separates_point_mass_from_normal() {
    let zeros = vec![0.0f64; 150];
    let ks = normality_check(&zeros).unwrap();
    assert_eq!(ks.statistic, 0.5);
    assert!(ks.p_value < 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let draws: Vec<f64> = (0..500)
        .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
        .collect();
    let ks = normality_check(&draws).unwrap();
    assert!(ks.p_value > 0.01, "genuine normal draws rejected: {ks:?}");

    assert!(normality_check(&zeros[..99]).is_err());
}

fn summary_with_median(n: usize, median_l2: f64) -> NSummary {
    NSummary {
        n,
        p: 10,
        lambda: 0.1,
        replications_ok: 1,
        failures: 0,
        nonconverged: 0,
        median_l2,
        median_d2: 0.0,
        freq_exact_support: 1.0,
        freq_inactive_zero: 1.0,
        mean_false_negatives: 0.0,
        wald_variance: vec![],
        wald_normality: vec![],
        diagnostics: Diagnostics {
            h_eigen_min: 1.0,
            h_eigen_max: 1.0,
            beta0_quadratic_form: 1.0,
            signal_floor: Some(1.0),
            signal_to_sparsity: Some(1.0),
            signal_to_lambda: Some(1.0),
            sparsity_to_lambda: 1.0,
        },
    }
}

/// Rate fitting on synthetic summaries recovers exact proportionality
/// (slope one) and exact flatness (slope zero).
#[test]
fn rate_slope_recovers_synthetic_rates() {
    let rate = |n: usize, _p: usize| (n as f64).ln() / n as f64;
    let proportional = SimReport {
        name: "proportional".to_string(),
        seed: 0,
        summaries: [100, 200, 400, 800, 1600]
            .iter()
            .map(|&n| summary_with_median(n, 3.0 * rate(n, 10)))
            .collect(),
        records: vec![],
    };
    let fit = rate_slope(&proportional, rate).unwrap();
    assert!((fit.slope - 1.0).abs() <= 1e-9, "slope {}", fit.slope);
    assert_eq!(fit.points, 5);

    let flat = SimReport {
        name: "flat".to_string(),
        seed: 0,
        summaries: [100, 200, 400, 800, 1600]
            .iter()
            .map(|&n| summary_with_median(n, 0.7))
            .collect(),
        records: vec![],
    };
    let fit = rate_slope(&flat, rate).unwrap();
    assert!(fit.slope.abs() <= 1e-9, "slope {}", fit.slope);

    let two_sizes = SimReport {
        name: "short".to_string(),
        seed: 0,
        summaries: [100, 200]
            .iter()
            .map(|&n| summary_with_median(n, rate(n, 10)))
            .collect(),
        records: vec![],
    };
    assert!(rate_slope(&two_sizes, rate).is_err());
}
