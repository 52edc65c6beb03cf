mod common;

use common::{ks_critical, ks_two_sample, simpson};
use merton_pl::stats::{
    log_norm_pdf, log_sum_exp, resample_indices, sample_beta, sample_nig, sample_truncated_normal_pos, BetaParams,
    NigParams,
};
use merton_pl::{ResampleScheme, RngStream};
use proptest::prelude::*;

fn rejection_tn(mean: f64, var: f64, rng: &mut RngStream) -> f64 {
    let sd = var.sqrt();
    loop {
        let x = mean + sd * rng.standard_normal();
        if x > 0.0 {
            return x;
        }
    }
}

#[test]
fn truncated_normal_matches_rejection_oracle() {
    let n = 100_000;
    for (k, (mean, var)) in [(-2.0, 1.0), (0.0, 1.0), (3.0, 4.0)].into_iter().enumerate() {
        let mut rng = RngStream::new(11, k as u64);
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_truncated_normal_pos(mean, var, &mut rng).unwrap())
            .collect();
        assert!(draws.iter().all(|&x| x > 0.0));
        let mut oracle_rng = RngStream::new(12, k as u64);
        let oracle: Vec<f64> = (0..n).map(|_| rejection_tn(mean, var, &mut oracle_rng)).collect();
        let d = ks_two_sample(&draws, &oracle);
        let crit = ks_critical(n, n, 1e-3);
        assert!(d < crit, "({mean}, {var}): D = {d}, critical {crit}");
    }
}

#[test]
fn normal_density_integrates_to_one() {
    for (mean, var) in [(0.0f64, 1.0f64), (3.0, 1e-6), (-0.04, 0.25), (1e3, 1e4)] {
        let sd = var.sqrt();
        let total = simpson(
            |x| log_norm_pdf(x, mean, var).unwrap().exp(),
            mean - 10.0 * sd,
            mean + 10.0 * sd,
            2000,
        );
        assert!((total - 1.0).abs() < 1e-6, "({mean}, {var}) -> {total}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), stream in any::<u64>()) {
        let nig = NigParams::new(0.003, 1.0, 2.0, 0.001).unwrap();
        let beta = BetaParams::new(0.18, 1.82).unwrap();
        let draw = |rng: &mut RngStream| {
            let (mu, s2) = sample_nig(&nig, rng).unwrap();
            let lam = sample_beta(&beta, rng).unwrap();
            let v = sample_truncated_normal_pos(-1.0, 0.5, rng).unwrap();
            let idx = resample_indices(&[0.2, 0.5, 0.3], 4, ResampleScheme::Systematic, rng).unwrap();
            (mu, s2, lam, v, idx, rng.standard_normal())
        };
        let a = draw(&mut RngStream::new(seed, stream));
        let b = draw(&mut RngStream::new(seed, stream));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_diverge(seed in any::<u64>(), stream in 0u64..1_000_000) {
        let x = RngStream::new(seed, stream).open01();
        let y = RngStream::new(seed, stream + 1).open01();
        prop_assert_ne!(x, y);
    }

    #[test]
    fn truncated_normal_is_positive(mean in -50.0f64..50.0, log_var in -20.0f64..6.0, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        for _ in 0..16 {
            let x = sample_truncated_normal_pos(mean, log_var.exp(), &mut rng).unwrap();
            prop_assert!(x > 0.0 && x.is_finite());
        }
    }

    #[test]
    fn nig_and_beta_draws_stay_in_support(
        m in -1.0f64..1.0, n in 1e-3f64..1e6, a in 0.1f64..1e3, b in 1e-6f64..10.0,
        alpha in 1e-3f64..1e3, beta in 1e-3f64..1e3, seed in any::<u64>(),
    ) {
        let mut rng = RngStream::new(seed, 1);
        let (mu, s2) = sample_nig(&NigParams::new(m, n, a, b).unwrap(), &mut rng).unwrap();
        prop_assert!(mu.is_finite() && s2 > 0.0);
        let lam = sample_beta(&BetaParams::new(alpha, beta).unwrap(), &mut rng).unwrap();
        prop_assert!((0.0..=1.0).contains(&lam));
    }

    #[test]
    fn resampling_returns_supported_indices(
        w in prop::collection::vec(0.0f64..10.0, 1..20), count in 1usize..200, systematic: bool, seed in any::<u64>(),
    ) {
        prop_assume!(w.iter().any(|&x| x > 0.0));
        let scheme = if systematic { ResampleScheme::Systematic } else { ResampleScheme::Multinomial };
        let idx = resample_indices(&w, count, scheme, &mut RngStream::new(seed, 2)).unwrap();
        prop_assert_eq!(idx.len(), count);
        prop_assert!(idx.iter().all(|&i| i < w.len() && w[i] > 0.0));
    }

    #[test]
    fn systematic_counts_are_within_one_of_expectation(
        w in prop::collection::vec(0.01f64..10.0, 1..20), count in 1usize..500, seed in any::<u64>(),
    ) {
        let idx = resample_indices(&w, count, ResampleScheme::Systematic, &mut RngStream::new(seed, 3)).unwrap();
        let total: f64 = w.iter().sum();
        for (j, wj) in w.iter().enumerate() {
            let got = idx.iter().filter(|&&i| i == j).count() as f64;
            let expected = count as f64 * wj / total;
            prop_assert!((got - expected).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn log_sum_exp_is_shift_equivariant(xs in prop::collection::vec(-700.0f64..700.0, 1..30), c in -300.0f64..300.0) {
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let lhs = log_sum_exp(&shifted);
        let rhs = log_sum_exp(&xs) + c;
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0));
    }
}
