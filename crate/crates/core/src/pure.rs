//! Merton jump model with constant volatility:
//! `y_t = μ + σ ε_t + J_t Z_t`, `J_t ~ Ber(λ)`, `Z_t ~ N(μ_J, σ_J² σ²)`.
//!
//! `(μ, σ²)` carry a Normal-Inverse-Gamma posterior and `λ` a Beta posterior,
//! tracked per particle through the statistics `(m, n, a, b, α, β)`. The jump
//! size variance is proportional to `σ²`, which is what keeps the jump-marginal
//! conjugate.

use serde::{Deserialize, Serialize};

use crate::engine::{Model, Moments, Particle};
use crate::error::{Error, Result};
use crate::stats::{
    log_add_exp, sample_beta_unchecked, sample_nig_unchecked, BetaParams, NigParams, RngStream,
};
use statrs::function::gamma::ln_gamma;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Jump-size law, fixed for identification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureFixedParams {
    pub jump_mean: f64,
    /// Jump variance as a multiple of `σ²`.
    pub jump_var_scale: f64,
}

impl PureFixedParams {
    pub fn validate(&self) -> Result<()> {
        if !self.jump_mean.is_finite() {
            return Err(Error::domain("jump mean must be finite"));
        }
        if !(self.jump_var_scale > 0.0 && self.jump_var_scale.is_finite()) {
            return Err(Error::domain(format!(
                "jump variance scale must be positive, got {}",
                self.jump_var_scale
            )));
        }
        Ok(())
    }
}

impl Default for PureFixedParams {
    fn default() -> Self {
        Self {
            jump_mean: -0.04,
            jump_var_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureSuffStats {
    pub m: f64,
    pub n: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PureSuffStats {
    pub fn validate(&self) -> Result<()> {
        self.nig().validate()?;
        self.jump_beta().validate()
    }

    pub fn nig(&self) -> NigParams {
        NigParams {
            m: self.m,
            n: self.n,
            a: self.a,
            b: self.b,
        }
    }

    pub fn jump_beta(&self) -> BetaParams {
        BetaParams {
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

impl Default for PureSuffStats {
    /// Weakly informative prior with means μ = 0.003, σ² = 0.001, λ = 0.09.
    fn default() -> Self {
        Self {
            m: 0.003,
            n: 1.0,
            a: 2.0,
            b: 0.001,
            alpha: 0.18,
            beta: 1.82,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    pub jump: bool,
    pub size: f64,
    /// `P(J_t = 1 | s_{t-1}, y_t)` the jump was drawn with.
    pub jump_prob: f64,
}

pub type PureParticle = Particle<PureState, PureSuffStats>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureParams {
    pub mu: f64,
    pub sigma2: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct MertonPure {
    fixed: PureFixedParams,
    prior: PureSuffStats,
}

impl MertonPure {
    pub fn new(fixed: PureFixedParams, prior: PureSuffStats) -> Result<Self> {
        fixed.validate()?;
        prior.validate()?;
        Ok(Self { fixed, prior })
    }

    pub fn fixed(&self) -> &PureFixedParams {
        &self.fixed
    }

    pub fn prior(&self) -> &PureSuffStats {
        &self.prior
    }

    fn gamma(&self, jump: bool) -> f64 {
        if jump {
            1.0 / (1.0 + self.fixed.jump_var_scale)
        } else {
            1.0
        }
    }

    /// NIG hyperparameters of `p(μ, σ² | J, s, y)` with `Z` integrated out.
    pub fn conditional_nig(&self, s: &PureSuffStats, jump: bool, y: f64) -> NigParams {
        let g = self.gamma(jump);
        let q = if jump { y - self.fixed.jump_mean } else { y };
        let n1 = s.n + g;
        let d = q - s.m;
        NigParams {
            m: (s.n * s.m + g * q) / n1,
            n: n1,
            a: s.a + 0.5,
            b: s.b + s.n * g * d * d / (2.0 * n1),
        }
    }

    /// `[ln p(y, J=0 | s), ln p(y, J=1 | s)]` with `μ, σ², λ, Z` all integrated out.
    pub fn joint_log_terms(&self, s: &PureSuffStats, y: f64) -> [f64; 2] {
        // B(α+1, β)/B(α, β) = α/(α+β) and B(α, β+1)/B(α, β) = β/(α+β)
        let log_total = (s.alpha + s.beta).ln();
        let nig_common = ln_gamma(s.a + 0.5) - ln_gamma(s.a);
        let term = |jump: bool| {
            let g = self.gamma(jump);
            let post = self.conditional_nig(s, jump, y);
            let log_prior_j = if jump { s.alpha.ln() } else { s.beta.ln() } - log_total;
            // a ln b − a' ln b' = −a ln(b'/b) − ½ ln b'
            let rel = (post.b - s.b) / s.b;
            log_prior_j + 0.5 * g.ln() - HALF_LN_2PI + 0.5 * (s.n.ln() - post.n.ln()) + nig_common
                - s.a * rel.ln_1p()
                - 0.5 * post.b.ln()
        };
        [term(false), term(true)]
    }

    /// Exact `ln p(y | s)`.
    pub fn log_predictive(&self, s: &PureSuffStats, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::Input(format!("observation must be finite, got {y}")));
        }
        let [l0, l1] = self.joint_log_terms(s, y);
        Ok(log_add_exp(l0, l1))
    }

    pub fn jump_probability(&self, s: &PureSuffStats, y: f64) -> f64 {
        let [l0, l1] = self.joint_log_terms(s, y);
        1.0 / (1.0 + (l0 - l1).exp())
    }

    pub fn sample_jump(&self, s: &PureSuffStats, y: f64, rng: &mut RngStream) -> bool {
        rng.open01() < self.jump_probability(s, y)
    }

    pub fn sample_theta_given_jump(&self, s: &PureSuffStats, jump: bool, y: f64, rng: &mut RngStream) -> (f64, f64) {
        sample_nig_unchecked(&self.conditional_nig(s, jump, y), rng)
    }

    /// Jump size given `(μ, σ²)`: the shrinkage posterior when a jump occurred,
    /// the prior `N(μ_J, σ_J² σ²)` otherwise.
    pub fn sample_jump_size(&self, mu: f64, sigma2: f64, jump: bool, y: f64, rng: &mut RngStream) -> f64 {
        let scale = self.fixed.jump_var_scale;
        let (mean, var) = if jump {
            let g = 1.0 / (1.0 + scale);
            (g * self.fixed.jump_mean + (1.0 - g) * (y - mu), g * scale * sigma2)
        } else {
            (self.fixed.jump_mean, scale * sigma2)
        };
        mean + var.sqrt() * rng.standard_normal()
    }

    pub fn update_stats(&self, s: &PureSuffStats, jump: bool, size: f64, y: f64) -> PureSuffStats {
        let r = if jump { y - size } else { y };
        let n1 = s.n + 1.0;
        let d = r - s.m;
        let dz = size - self.fixed.jump_mean;
        let j = if jump { 1.0 } else { 0.0 };
        PureSuffStats {
            m: (s.n * s.m + r) / n1,
            n: n1,
            a: s.a + 1.0,
            b: s.b + s.n * d * d / (2.0 * n1) + dz * dz / (2.0 * self.fixed.jump_var_scale),
            alpha: s.alpha + j,
            beta: s.beta + 1.0 - j,
        }
    }

    pub fn draw_parameters(&self, s: &PureSuffStats, rng: &mut RngStream) -> PureParams {
        let (mu, sigma2) = sample_nig_unchecked(&s.nig(), rng);
        let lambda = sample_beta_unchecked(&s.jump_beta(), rng);
        PureParams { mu, sigma2, lambda }
    }
}

impl Model for MertonPure {
    type State = PureState;
    type Stats = PureSuffStats;
    type Params = PureParams;

    fn init_particle(&self, _rng: &mut RngStream) -> PureParticle {
        Particle {
            state: PureState {
                jump: false,
                size: self.fixed.jump_mean,
                jump_prob: 0.0,
            },
            stats: self.prior,
        }
    }

    fn log_predictive(&self, p: &PureParticle, y: f64) -> f64 {
        let [l0, l1] = self.joint_log_terms(&p.stats, y);
        log_add_exp(l0, l1)
    }

    fn propagate(&self, ancestor: &PureParticle, y: f64, rng: &mut RngStream) -> PureState {
        let s = &ancestor.stats;
        let jump_prob = self.jump_probability(s, y);
        let jump = rng.open01() < jump_prob;
        let (mu, sigma2) = self.sample_theta_given_jump(s, jump, y, rng);
        let size = self.sample_jump_size(mu, sigma2, jump, y, rng);
        PureState { jump, size, jump_prob }
    }

    fn update_stats(&self, stats: &PureSuffStats, state: &PureState, y: f64) -> PureSuffStats {
        MertonPure::update_stats(self, stats, state.jump, state.size, y)
    }

    fn draw_parameters(&self, stats: &PureSuffStats, rng: &mut RngStream) -> PureParams {
        MertonPure::draw_parameters(self, stats, rng)
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["p_jump", "z"]
    }

    fn state_values(&self, p: &PureParticle) -> Vec<f64> {
        vec![p.state.jump_prob, p.state.size]
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["mu", "sigma2", "lambda"]
    }

    fn param_values(&self, params: &PureParams) -> Vec<f64> {
        vec![params.mu, params.sigma2, params.lambda]
    }

    fn param_moments(&self, s: &PureSuffStats) -> Vec<Moments> {
        let nig = s.nig();
        let beta = s.jump_beta();
        vec![
            Moments {
                mean: s.m,
                var: nig.var_mu(),
            },
            Moments {
                mean: nig.mean_sigma2(),
                var: nig.var_sigma2(),
            },
            Moments {
                mean: beta.mean(),
                var: beta.var(),
            },
        ]
    }

    fn describe(&self, p: &PureParticle) -> String {
        let s = &p.stats;
        format!(
            "J={} Z={:.4e} m={:.4e} n={:.3} a={:.3} b={:.4e} alpha={:.3} beta={:.3}",
            p.state.jump as u8, p.state.size, s.m, s.n, s.a, s.b, s.alpha, s.beta
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(jump_mean: f64, scale: f64) -> MertonPure {
        MertonPure::new(
            PureFixedParams {
                jump_mean,
                jump_var_scale: scale,
            },
            PureSuffStats::default(),
        )
        .unwrap()
    }

    fn stats(m: f64, n: f64, a: f64, b: f64, alpha: f64, beta: f64) -> PureSuffStats {
        PureSuffStats { m, n, a, b, alpha, beta }
    }

    #[test]
    fn predictive_is_even_when_centered() {
        let md = model(0.0, 1.0);
        let s = stats(0.0, 3.0, 2.5, 0.002, 0.7, 4.0);
        for y in [0.001, 0.02, 0.3] {
            let a = md.log_predictive(&s, y).unwrap();
            let b = md.log_predictive(&s, -y).unwrap();
            assert!((a - b).abs() < 1e-13);
        }
        assert!(md.log_predictive(&s, f64::NAN).is_err());
    }

    #[test]
    fn predictive_matches_student_t_mixture() {
        // s = (0, 1, 1, ½, 1, 1), μ_J = 0, σ_J² = 1, y = 0.
        // J=0: t with 2a = 2 dof, scale² = (b/a)(1 + 1/n) = 1.
        // J=1: same with variance factor (1/n + 1/γ) = 3, i.e. scale² = 1.5.
        // t₂(0; 0, s²) = Γ(3/2)/(Γ(1)√(2π) s) = 1/(2√2 s)
        let md = model(0.0, 1.0);
        let s = stats(0.0, 1.0, 1.0, 0.5, 1.0, 1.0);
        let t2 = |scale2: f64| 1.0 / (2.0 * 2f64.sqrt() * scale2.sqrt());
        let expected = (0.5 * t2(1.0) + 0.5 * t2(1.5)).ln();
        assert!((md.log_predictive(&s, 0.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn jump_probability_limits() {
        let md = model(-0.04, 1.0);
        // tail observation on the jump side
        let s = stats(0.0, 100.0, 50.0, 50.0 * 1e-4, 1.0, 1.0);
        assert!(md.jump_probability(&s, -0.04 - 10.0 * 0.01) > 0.99);
        let s = stats(0.0, 100.0, 50.0, 50.0 * 1e-4, 1e-8, 1.0);
        for y in [-0.02, 0.0, 0.01] {
            assert!(md.jump_probability(&s, y) < 1e-4);
        }
        let s = stats(0.0, 1.0, 3.0, 0.003, 1.0, 1.0);
        assert!(md.jump_probability(&s, 0.0) < 0.5);
    }

    #[test]
    fn conditional_nig_reduces_to_standard_update_without_jump() {
        let md = model(-0.04, 1.0);
        let s = stats(0.01, 2.0, 3.0, 0.004, 1.0, 9.0);
        let y = 0.03;
        let p = md.conditional_nig(&s, false, y);
        assert!((p.m - (2.0 * 0.01 + y) / 3.0).abs() < 1e-15);
        assert_eq!(p.n, 3.0);
        assert_eq!(p.a, 3.5);
        assert!((p.b - (0.004 + 2.0 * (y - 0.01f64).powi(2) / 6.0)).abs() < 1e-15);
        let q = md.conditional_nig(&s, true, y);
        assert!((q.m - (2.0 * 0.01 + 0.5 * (y + 0.04)) / 2.5).abs() < 1e-15);
        assert_eq!(q.n, 2.5);
    }

    #[test]
    fn prior_domination_pins_mu() {
        let md = model(-0.04, 1.0);
        let s = stats(0.002, 1e12, 3.0, 0.003, 1.0, 1.0);
        let mut rng = RngStream::new(1, 1);
        for _ in 0..100 {
            let (mu, _) = md.sample_theta_given_jump(&s, false, 0.5, &mut rng);
            assert!((mu - 0.002).abs() < 1e-5);
        }
    }

    #[test]
    fn jump_size_limits() {
        let mut rng = RngStream::new(2, 1);
        let tight = model(-0.04, 1e-12);
        let wide = model(-0.04, 1e12);
        for _ in 0..100 {
            let z = tight.sample_jump_size(0.0, 1e-4, true, 0.1, &mut rng);
            assert!((z + 0.04).abs() < 1e-6);
            let z = wide.sample_jump_size(0.01, 1e-10, true, 0.1, &mut rng);
            assert!((z - 0.09).abs() < 1e-3);
        }
    }

    #[test]
    fn jump_size_posterior_moments() {
        let md = model(-0.04, 1.0);
        let mut rng = RngStream::new(3, 1);
        let sigma2 = 0.01;
        let n = 400_000;
        let zs: Vec<f64> = (0..n).map(|_| md.sample_jump_size(0.0, sigma2, true, 0.1, &mut rng)).collect();
        let mean = zs.iter().sum::<f64>() / n as f64;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (0.5 * sigma2 / n as f64).sqrt();
        assert!((mean - 0.03).abs() < 3.0 * se);
        assert!((var / (0.5 * sigma2) - 1.0).abs() < 0.01);
    }

    #[test]
    fn update_stats_examples() {
        let md = model(-0.04, 1.0);
        let s = stats(0.0, 1.0, 1.0, 1.0, 1.0, 1.0);
        let u = md.update_stats(&s, false, -0.04, 0.0);
        assert_eq!(u, stats(0.0, 2.0, 2.0, 1.0, 1.0, 2.0));
        let u = md.update_stats(&s, true, 0.05, 0.05);
        assert_eq!(u.m, 0.0);
        assert!((u.b - 1.00405).abs() < 1e-12);
        assert_eq!((u.alpha, u.beta, u.n, u.a), (2.0, 1.0, 2.0, 2.0));
    }

    #[test]
    fn nig_limit_matches_normal_mixture() {
        // b, a → ∞ with b/a = v fixed: σ² → v, predictive → Normal mixture
        let md = model(-0.04, 1.0);
        let v = 1e-4;
        let s = stats(0.001, 4.0, 1e8, 1e8 * v, 2.0, 3.0);
        for y in [-0.05, 0.0, 0.02] {
            let got = md.log_predictive(&s, y).unwrap();
            let l0 = (3.0f64 / 5.0).ln() + crate::stats::norm_lpdf(y, 0.001, v * (1.0 + 0.25));
            let l1 = (2.0f64 / 5.0).ln() + crate::stats::norm_lpdf(y, 0.001 - 0.04, v * (2.0 + 0.25));
            let expected = log_add_exp(l0, l1);
            assert!((got - expected).abs() < 1e-3, "{y}: {got} vs {expected}");
        }
    }

    #[test]
    fn rejects_invalid_configuration() {
        let bad = PureFixedParams {
            jump_mean: 0.0,
            jump_var_scale: 0.0,
        };
        assert!(MertonPure::new(bad, PureSuffStats::default()).is_err());
        let mut prior = PureSuffStats::default();
        prior.alpha = 0.0;
        assert!(MertonPure::new(PureFixedParams::default(), prior).is_err());
    }
}
