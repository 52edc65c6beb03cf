//! Merton jumps with stochastic volatility:
//! `y_t = μ + √V_t ε_t + J_t Z_t`, `Z_t ~ N(μ_J, σ_J²)`, and a positive
//! autoregressive variance `V_{t+1} ~ TN(α_v + β_v V_t, σ_v² V_t)`.
//!
//! `μ ~ N(m, 1/n)` and `λ ~ Beta(α, β)` are learned through `(m, n, α, β)`;
//! the jump law and volatility dynamics are held fixed. Each particle carries
//! the variance already drawn for the upcoming observation, so the resampling
//! weight is a two-component Normal mixture.

use serde::{Deserialize, Serialize};

use crate::engine::{Model, Moments, Particle};
use crate::error::{Error, Result};
use crate::stats::{
    log_add_exp, norm_lpdf, sample_beta_unchecked, sample_truncated_normal_pos_unchecked, BetaParams, RngStream,
};

/// Which drift the volatility recursion uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VolDrift {
    /// `α_v + β_v V`.
    #[default]
    Dynamics,
    /// `(1 − β_v) α_v + β_v V`, i.e. `α_v` read as the long-run level.
    MeanReverting,
}

/// How a jump size is drawn once a jump has been sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpSizeRule {
    /// Precision-weighted posterior combining the `N(μ_J, σ_J²)` prior with
    /// the residual `y − m`.
    #[default]
    Posterior,
    /// `N(y − m, 1/n + σ_J² + V)`, ignoring the prior (kept for comparison).
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvFixedParams {
    pub jump_mean: f64,
    /// Absolute jump variance (not scaled by volatility).
    pub jump_var: f64,
    pub vol_level: f64,
    pub vol_persistence: f64,
    pub vol_var: f64,
    pub v0: f64,
    #[serde(default)]
    pub drift: VolDrift,
    #[serde(default)]
    pub jump_size_rule: JumpSizeRule,
}

impl Default for SvFixedParams {
    fn default() -> Self {
        Self {
            jump_mean: -0.04,
            jump_var: 1.0,
            vol_level: 0.0016,
            vol_persistence: 0.99,
            vol_var: 0.01,
            v0: 0.3,
            drift: VolDrift::Dynamics,
            jump_size_rule: JumpSizeRule::Posterior,
        }
    }
}

impl SvFixedParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("jump_mean", self.jump_mean), ("vol_level", self.vol_level), ("vol_persistence", self.vol_persistence)] {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [("jump_var", self.jump_var), ("vol_var", self.vol_var), ("v0", self.v0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Non-fatal configuration concerns.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if !(self.vol_persistence > 0.0 && self.vol_persistence < 1.0) {
            w.push(format!(
                "volatility persistence {} is outside (0, 1); the variance process is not mean reverting",
                self.vol_persistence
            ));
        }
        w
    }

    pub fn vol_mean(&self, v: f64) -> f64 {
        match self.drift {
            VolDrift::Dynamics => self.vol_level + self.vol_persistence * v,
            VolDrift::MeanReverting => (1.0 - self.vol_persistence) * self.vol_level + self.vol_persistence * v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvSuffStats {
    pub m: f64,
    pub n: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl SvSuffStats {
    pub fn validate(&self) -> Result<()> {
        if !self.m.is_finite() {
            return Err(Error::domain("m must be finite"));
        }
        if !(self.n > 0.0 && self.n.is_finite()) {
            return Err(Error::domain(format!("n must be positive, got {}", self.n)));
        }
        self.jump_beta().validate()
    }

    pub fn jump_beta(&self) -> BetaParams {
        BetaParams {
            alpha: self.alpha,
            beta: self.beta,
        }
    }

    pub fn jump_prior_prob(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

impl Default for SvSuffStats {
    /// Prior means μ = 0.003 (sd 0.1) and λ = 0.5.
    fn default() -> Self {
        Self {
            m: 0.003,
            n: 100.0,
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvState {
    pub jump: bool,
    pub size: f64,
    /// Variance that generated the most recently assimilated observation.
    pub v_filtered: f64,
    /// Variance pre-drawn for the next observation.
    pub v_next: f64,
    pub jump_prob: f64,
}

pub type SvParticle = Particle<SvState, SvSuffStats>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvParams {
    pub mu: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct MertonSv {
    fixed: SvFixedParams,
    prior: SvSuffStats,
}

impl MertonSv {
    pub fn new(fixed: SvFixedParams, prior: SvSuffStats) -> Result<Self> {
        fixed.validate()?;
        prior.validate()?;
        Ok(Self { fixed, prior })
    }

    pub fn fixed(&self) -> &SvFixedParams {
        &self.fixed
    }

    pub fn prior(&self) -> &SvSuffStats {
        &self.prior
    }

    pub fn propagate_volatility(&self, v: f64, rng: &mut RngStream) -> Result<f64> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::domain(format!("volatility state must be positive, got {v}")));
        }
        Ok(self.next_vol(v, rng))
    }

    fn next_vol(&self, v: f64, rng: &mut RngStream) -> f64 {
        sample_truncated_normal_pos_unchecked(self.fixed.vol_mean(v), self.fixed.vol_var * v, rng)
    }

    /// `[ln p(y, J=0 | V, s), ln p(y, J=1 | V, s)]`.
    pub fn joint_log_terms(&self, s: &SvSuffStats, v: f64, y: f64) -> [f64; 2] {
        let base = 1.0 / s.n + v;
        let total = s.alpha + s.beta;
        let l0 = (s.beta / total).ln() + norm_lpdf(y, s.m, base);
        let l1 = (s.alpha / total).ln() + norm_lpdf(y, s.m + self.fixed.jump_mean, base + self.fixed.jump_var);
        [l0, l1]
    }

    pub fn log_predictive(&self, s: &SvSuffStats, v: f64, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::Input(format!("observation must be finite, got {y}")));
        }
        if !(v > 0.0) {
            return Err(Error::domain(format!("volatility state must be positive, got {v}")));
        }
        let [l0, l1] = self.joint_log_terms(s, v, y);
        Ok(log_add_exp(l0, l1))
    }

    pub fn jump_probability(&self, s: &SvSuffStats, v: f64, y: f64) -> f64 {
        let [l0, l1] = self.joint_log_terms(s, v, y);
        1.0 / (1.0 + (l0 - l1).exp())
    }

    pub fn sample_jump(&self, s: &SvSuffStats, v: f64, y: f64, rng: &mut RngStream) -> bool {
        rng.open01() < self.jump_probability(s, v, y)
    }

    /// Mean and variance of the jump-size draw given `J`.
    pub fn jump_size_law(&self, s: &SvSuffStats, jump: bool, v: f64, y: f64) -> (f64, f64) {
        let f = &self.fixed;
        if !jump {
            return (f.jump_mean, f.jump_var);
        }
        let base = 1.0 / s.n + v;
        match f.jump_size_rule {
            JumpSizeRule::Posterior => {
                let var = 1.0 / (1.0 / f.jump_var + 1.0 / base);
                (var * (f.jump_mean / f.jump_var + (y - s.m) / base), var)
            }
            JumpSizeRule::Literal => (y - s.m, base + f.jump_var),
        }
    }

    pub fn sample_jump_size(&self, s: &SvSuffStats, jump: bool, v: f64, y: f64, rng: &mut RngStream) -> f64 {
        let (mean, var) = self.jump_size_law(s, jump, v, y);
        mean + var.sqrt() * rng.standard_normal()
    }

    pub fn update_stats(&self, s: &SvSuffStats, jump: bool, v: f64, y: f64) -> SvSuffStats {
        let (g, q) = if jump {
            (1.0 / (self.fixed.jump_var + v), y - self.fixed.jump_mean)
        } else {
            (1.0 / v, y)
        };
        let n1 = s.n + g;
        let j = if jump { 1.0 } else { 0.0 };
        SvSuffStats {
            m: (s.n * s.m + g * q) / n1,
            n: n1,
            alpha: s.alpha + j,
            beta: s.beta + 1.0 - j,
        }
    }

    pub fn draw_parameters(&self, s: &SvSuffStats, rng: &mut RngStream) -> SvParams {
        let mu = s.m + rng.standard_normal() / s.n.sqrt();
        let lambda = sample_beta_unchecked(&s.jump_beta(), rng);
        SvParams { mu, lambda }
    }
}

impl Model for MertonSv {
    type State = SvState;
    type Stats = SvSuffStats;
    type Params = SvParams;

    fn init_particle(&self, rng: &mut RngStream) -> SvParticle {
        let v0 = self.fixed.v0;
        Particle {
            state: SvState {
                jump: false,
                size: self.fixed.jump_mean,
                v_filtered: v0,
                v_next: self.next_vol(v0, rng),
                jump_prob: 0.0,
            },
            stats: self.prior,
        }
    }

    fn log_predictive(&self, p: &SvParticle, y: f64) -> f64 {
        let [l0, l1] = self.joint_log_terms(&p.stats, p.state.v_next, y);
        log_add_exp(l0, l1)
    }

    fn propagate(&self, ancestor: &SvParticle, y: f64, rng: &mut RngStream) -> SvState {
        let s = &ancestor.stats;
        let v = ancestor.state.v_next;
        let jump_prob = self.jump_probability(s, v, y);
        let jump = rng.open01() < jump_prob;
        let size = self.sample_jump_size(s, jump, v, y, rng);
        SvState {
            jump,
            size,
            v_filtered: v,
            v_next: v,
            jump_prob,
        }
    }

    fn update_stats(&self, stats: &SvSuffStats, state: &SvState, y: f64) -> SvSuffStats {
        MertonSv::update_stats(self, stats, state.jump, state.v_filtered, y)
    }

    fn advance(&self, mut state: SvState, rng: &mut RngStream) -> SvState {
        state.v_next = self.next_vol(state.v_filtered, rng);
        state
    }

    fn draw_parameters(&self, stats: &SvSuffStats, rng: &mut RngStream) -> SvParams {
        MertonSv::draw_parameters(self, stats, rng)
    }

    fn state_names(&self) -> &'static [&'static str] {
        &["p_jump", "z", "v"]
    }

    fn state_values(&self, p: &SvParticle) -> Vec<f64> {
        vec![p.state.jump_prob, p.state.size, p.state.v_filtered]
    }

    fn param_names(&self) -> &'static [&'static str] {
        &["mu", "lambda"]
    }

    fn param_values(&self, params: &SvParams) -> Vec<f64> {
        vec![params.mu, params.lambda]
    }

    fn param_moments(&self, s: &SvSuffStats) -> Vec<Moments> {
        let beta = s.jump_beta();
        vec![
            Moments {
                mean: s.m,
                var: 1.0 / s.n,
            },
            Moments {
                mean: beta.mean(),
                var: beta.var(),
            },
        ]
    }

    fn describe(&self, p: &SvParticle) -> String {
        let s = &p.stats;
        format!(
            "J={} Z={:.4e} V={:.4e} m={:.4e} n={:.4e} alpha={:.3} beta={:.3}",
            p.state.jump as u8, p.state.size, p.state.v_next, s.m, s.n, s.alpha, s.beta
        )
    }
}
