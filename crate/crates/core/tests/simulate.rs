mod common;

use common::{ks_critical, ks_two_sample, mean};
use merton_pl::simulate::{
    oracle_pure_posterior, simulate_pure, simulate_sv, summary_stats, PureTruthConstants, SvTruthConstants,
};
use merton_pl::stats::log_gamma;
use merton_pl::{MertonSv, PureFixedParams, PureSuffStats, RngStream, SvSuffStats};
use proptest::prelude::*;

fn sv_constants() -> SvTruthConstants {
    SvTruthConstants {
        mu: 0.0,
        lambda: 0.05,
        jump_mean: -0.04,
        jump_var: 1.0,
        vol_level: 0.0016,
        vol_persistence: 0.99,
        vol_var: 0.01,
        v0: 0.16,
        drift: Default::default(),
    }
}

#[test]
fn certain_degenerate_jumps_equal_a_shifted_mean() {
    let n = 100_000;
    let base = SvTruthConstants {
        jump_var: 0.0,
        vol_level: 0.016,
        vol_persistence: 0.9,
        ..sv_constants()
    };
    let jumps = SvTruthConstants { lambda: 1.0, ..base };
    let shifted = SvTruthConstants {
        lambda: 0.0,
        mu: base.mu + base.jump_mean,
        ..base
    };
    let a = simulate_sv(&jumps, n, &mut RngStream::new(1, 0)).unwrap().returns();
    let b = simulate_sv(&shifted, n, &mut RngStream::new(2, 0)).unwrap().returns();
    let d = ks_two_sample(&a, &b);
    assert!(d < ks_critical(n, n, 1e-3), "D = {d}");
}

#[test]
fn frozen_volatility_matches_the_pure_simulator() {
    let n = 100_000;
    let v = 0.16;
    let sv = SvTruthConstants {
        vol_var: 0.0,
        vol_level: v * (1.0 - 0.99),
        v0: v,
        ..sv_constants()
    };
    let truth = simulate_sv(&sv, n, &mut RngStream::new(3, 0)).unwrap();
    assert!(truth.variances().iter().all(|&x| (x - v).abs() < 1e-12));
    let pure = PureTruthConstants {
        mu: sv.mu,
        sigma2: v,
        lambda: sv.lambda,
        jump_mean: sv.jump_mean,
        jump_var_scale: sv.jump_var / v,
    };
    let other = simulate_pure(&pure, n, &mut RngStream::new(4, 0)).unwrap().returns();
    let d = ks_two_sample(&truth.returns(), &other);
    assert!(d < ks_critical(n, n, 1e-3), "D = {d}");
}

fn batch_means_se(xs: &[f64], batches: usize) -> f64 {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks(size).take(batches).map(mean).collect();
    let m = mean(&means);
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    (var / batches as f64).sqrt()
}

#[test]
fn volatility_path_mean_matches_an_independent_chain() {
    let c = SvTruthConstants {
        vol_level: 0.016,
        vol_persistence: 0.9,
        vol_var: 0.05,
        ..sv_constants()
    };
    let t = 100_000;
    let path = simulate_sv(&c, t, &mut RngStream::new(5, 0)).unwrap().variances();

    let model = MertonSv::new(c.fixed_params(), SvSuffStats::default()).unwrap();
    let mut rng = RngStream::new(6, 0);
    let mut v = c.v0;
    let chain: Vec<f64> = (0..t)
        .map(|_| {
            v = model.propagate_volatility(v, &mut rng).unwrap();
            v
        })
        .collect();

    let se = (batch_means_se(&path, 100).powi(2) + batch_means_se(&chain, 100).powi(2)).sqrt();
    let (a, b) = (mean(&path), mean(&chain));
    assert!((a - b).abs() < 4.0 * se, "{a} vs {b}, se {se}");
    assert!(path.iter().all(|&x| x > 0.0));
}

#[test]
fn simulated_returns_are_heavy_tailed() {
    let truth = simulate_sv(&sv_constants(), 20_000, &mut RngStream::new(7, 0)).unwrap();
    let stats = summary_stats(&truth.returns()).unwrap();
    assert!(stats.kurtosis.unwrap() > 3.0, "kurtosis {:?}", stats.kurtosis);
}

#[test]
fn jump_count_is_binomial() {
    let c = PureTruthConstants {
        mu: 0.0,
        sigma2: 1e-4,
        lambda: 0.05,
        jump_mean: -0.04,
        jump_var_scale: 1.0,
    };
    let truth = simulate_pure(&c, 100_000, &mut RngStream::new(8, 0)).unwrap();
    let k = truth.records.iter().filter(|r| r.jump).count() as f64;
    assert!((k - 5000.0).abs() < 3.0 * (100_000.0f64 * 0.05 * 0.95).sqrt(), "{k} jumps");
}

#[test]
fn oracle_single_observation_without_jumps_is_student_t() {
    let prior = PureSuffStats {
        alpha: 1e-14,
        beta: 1.0,
        ..PureSuffStats::default()
    };
    let y = 0.021;
    let oracle = oracle_pure_posterior(&[y], &prior, &PureFixedParams::default()).unwrap();
    let (m, n, a, b) = (prior.m, prior.n, prior.a, prior.b);
    let n1 = n + 1.0;
    let b1 = b + n * (y - m).powi(2) / (2.0 * n1);
    let exact = -0.5 * (2.0 * std::f64::consts::PI).ln() + 0.5 * (n / n1).ln() + log_gamma(a + 0.5).unwrap()
        - log_gamma(a).unwrap()
        + a * b.ln()
        - (a + 0.5) * b1.ln();
    assert!((oracle.log_evidence - exact).abs() < 1e-10);
}

#[test]
fn oracle_is_equivariant_under_reflection() {
    let prior = PureSuffStats::default();
    let fixed = PureFixedParams::default();
    let ys = [0.012, -0.07, 0.025, 0.003];
    let a = oracle_pure_posterior(&ys, &prior, &fixed).unwrap();
    let neg: Vec<f64> = ys.iter().map(|y| -y).collect();
    let prior_r = PureSuffStats { m: -prior.m, ..prior };
    let fixed_r = PureFixedParams {
        jump_mean: -fixed.jump_mean,
        ..fixed
    };
    let b = oracle_pure_posterior(&neg, &prior_r, &fixed_r).unwrap();
    assert_eq!(a.mean_mu, -b.mean_mu);
    assert!((a.mean_sigma2 - b.mean_sigma2).abs() < 1e-15);
    assert!((a.log_evidence - b.log_evidence).abs() < 1e-12);
}

#[test]
fn oracle_rejects_long_series() {
    assert!(oracle_pure_posterior(&[0.0; 6], &PureSuffStats::default(), &PureFixedParams::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn stored_shocks_reproduce_returns(seed in any::<u64>(), lambda in 0.0f64..1.0) {
        let pure = PureTruthConstants { mu: 5e-4, sigma2: 2e-4, lambda, jump_mean: -0.04, jump_var_scale: 1.0 };
        let truth = simulate_pure(&pure, 50, &mut RngStream::new(seed, 0)).unwrap();
        for r in &truth.records {
            prop_assert_eq!(r.recompute(&pure).to_bits(), r.y.to_bits());
        }
        let sv = SvTruthConstants { lambda, ..sv_constants() };
        let truth = simulate_sv(&sv, 50, &mut RngStream::new(seed, 1)).unwrap();
        for r in &truth.records {
            prop_assert!(r.v > 0.0);
            prop_assert_eq!(r.recompute(&sv).to_bits(), r.y.to_bits());
        }
    }

    #[test]
    fn zero_intensity_never_jumps(seed in any::<u64>()) {
        let c = PureTruthConstants { mu: 0.0, sigma2: 1e-4, lambda: 0.0, jump_mean: -0.04, jump_var_scale: 1.0 };
        let truth = simulate_pure(&c, 200, &mut RngStream::new(seed, 0)).unwrap();
        prop_assert!(truth.records.iter().all(|r| !r.jump));
    }
}
