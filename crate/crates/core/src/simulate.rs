//! Ground-truth simulators for both return models, brute-force posterior
//! oracles for small instances, and descriptive statistics of a return series.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::pure::{PureFixedParams, PureSuffStats};
use crate::stats::{ln_beta, log_sum_exp, norm_lpdf, sample_truncated_normal_pos_unchecked, RngStream};
use crate::sv::{SvFixedParams, SvSuffStats, VolDrift};

/// Longest series the pure-model oracle enumerates (`2^T` jump paths).
pub const PURE_ORACLE_MAX_T: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureTruthConstants {
    pub mu: f64,
    pub sigma2: f64,
    pub lambda: f64,
    pub jump_mean: f64,
    /// Jump variance as a multiple of `σ²`.
    pub jump_var_scale: f64,
}

impl PureTruthConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.jump_mean.is_finite()) {
            return Err(Error::domain("mu and jump_mean must be finite"));
        }
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(Error::domain(format!("sigma2 must be non-negative, got {}", self.sigma2)));
        }
        if !(self.jump_var_scale >= 0.0 && self.jump_var_scale.is_finite()) {
            return Err(Error::domain("jump_var_scale must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::domain(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureRecord {
    pub jump: bool,
    pub size: f64,
    /// Standard normal return shock.
    pub eps: f64,
    pub y: f64,
}

impl PureRecord {
    pub fn recompute(&self, c: &PureTruthConstants) -> f64 {
        pure_return(c, self.eps, self.jump, self.size)
    }
}

fn pure_return(c: &PureTruthConstants, eps: f64, jump: bool, size: f64) -> f64 {
    let jz = if jump { size } else { 0.0 };
    c.mu + c.sigma2.sqrt() * eps + jz
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureTruth {
    pub constants: PureTruthConstants,
    pub records: Vec<PureRecord>,
}

impl PureTruth {
    pub fn returns(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.y).collect()
    }
}

pub fn simulate_pure(c: &PureTruthConstants, steps: usize, rng: &mut RngStream) -> Result<PureTruth> {
    c.validate()?;
    if steps == 0 {
        return Err(Error::domain("need at least one step"));
    }
    let jump_sd = (c.jump_var_scale * c.sigma2).sqrt();
    let records = (0..steps)
        .map(|_| {
            let jump = rng.open01() < c.lambda;
            let size = c.jump_mean + jump_sd * rng.standard_normal();
            let eps = rng.standard_normal();
            PureRecord {
                jump,
                size,
                eps,
                y: pure_return(c, eps, jump, size),
            }
        })
        .collect();
    Ok(PureTruth { constants: *c, records })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvTruthConstants {
    pub mu: f64,
    pub lambda: f64,
    pub jump_mean: f64,
    pub jump_var: f64,
    pub vol_level: f64,
    pub vol_persistence: f64,
    pub vol_var: f64,
    pub v0: f64,
    #[serde(default)]
    pub drift: VolDrift,
}

impl SvTruthConstants {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu", self.mu),
            ("jump_mean", self.jump_mean),
            ("vol_level", self.vol_level),
            ("vol_persistence", self.vol_persistence),
        ] {
            if !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite")));
            }
        }
        for (name, v) in [("jump_var", self.jump_var), ("vol_var", self.vol_var)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.v0 > 0.0 && self.v0.is_finite()) {
            return Err(Error::domain(format!("v0 must be positive, got {}", self.v0)));
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::domain(format!("lambda must lie in [0, 1], got {}", self.lambda)));
        }
        Ok(())
    }

    fn vol_mean(&self, v: f64) -> f64 {
        match self.drift {
            VolDrift::Dynamics => self.vol_level + self.vol_persistence * v,
            VolDrift::MeanReverting => (1.0 - self.vol_persistence) * self.vol_level + self.vol_persistence * v,
        }
    }

    /// The matching fixed block for fitting the SV model to this data.
    pub fn fixed_params(&self) -> SvFixedParams {
        SvFixedParams {
            jump_mean: self.jump_mean,
            jump_var: self.jump_var,
            vol_level: self.vol_level,
            vol_persistence: self.vol_persistence,
            vol_var: self.vol_var,
            v0: self.v0,
            drift: self.drift,
            ..SvFixedParams::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvRecord {
    pub v: f64,
    pub jump: bool,
    pub size: f64,
    pub eps: f64,
    pub y: f64,
}

impl SvRecord {
    pub fn recompute(&self, c: &SvTruthConstants) -> f64 {
        sv_return(c, self.v, self.eps, self.jump, self.size)
    }
}

fn sv_return(c: &SvTruthConstants, v: f64, eps: f64, jump: bool, size: f64) -> f64 {
    let jz = if jump { size } else { 0.0 };
    c.mu + v.sqrt() * eps + jz
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvTruth {
    pub constants: SvTruthConstants,
    pub records: Vec<SvRecord>,
}

impl SvTruth {
    pub fn returns(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.y).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.v).collect()
    }
}

/// Simulates the jump + stochastic-volatility model. `V_1` is drawn from the
/// volatility transition out of `v0`.
pub fn simulate_sv(c: &SvTruthConstants, steps: usize, rng: &mut RngStream) -> Result<SvTruth> {
    c.validate()?;
    if steps == 0 {
        return Err(Error::domain("need at least one step"));
    }
    let jump_sd = c.jump_var.sqrt();
    let mut v_prev = c.v0;
    let mut records = Vec::with_capacity(steps);
    for t in 1..=steps {
        let mean = c.vol_mean(v_prev);
        let v = if c.vol_var > 0.0 {
            sample_truncated_normal_pos_unchecked(mean, c.vol_var * v_prev, rng)
        } else if mean > 0.0 {
            mean
        } else {
            return Err(Error::domain(format!(
                "noise-free volatility recursion reached a non-positive value at t={t}"
            )));
        };
        let jump = rng.open01() < c.lambda;
        let size = c.jump_mean + jump_sd * rng.standard_normal();
        let eps = rng.standard_normal();
        records.push(SvRecord {
            v,
            jump,
            size,
            eps,
            y: sv_return(c, v, eps, jump, size),
        });
        v_prev = v;
    }
    Ok(SvTruth { constants: *c, records })
}

/// Exact posterior summaries of the pure model for a short series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureOracle {
    pub mean_mu: f64,
    pub mean_sigma2: f64,
    pub mean_lambda: f64,
    /// Smoothed `P(J_t = 1 | y_{1:T})` for each `t`.
    pub jump_probs: Vec<f64>,
    pub log_evidence: f64,
}

/// Enumerates every jump configuration; given one, `Z` integrates out
/// analytically (it inflates the return variance by `1 + σ_J²`), `(μ, σ²)`
/// in closed Normal-Inverse-Gamma form from batch statistics, and `λ` in
/// closed Beta-Binomial form.
pub fn oracle_pure_posterior(ys: &[f64], prior: &PureSuffStats, fixed: &PureFixedParams) -> Result<PureOracle> {
    prior.validate()?;
    fixed.validate()?;
    let t_len = ys.len();
    if t_len == 0 || t_len > PURE_ORACLE_MAX_T {
        return Err(Error::Oracle(format!(
            "pure oracle handles 1..={PURE_ORACLE_MAX_T} observations, got {t_len}"
        )));
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Input("observations must be finite".into()));
    }
    let a_post = prior.a + 0.5 * t_len as f64;
    if a_post <= 1.0 {
        return Err(Error::Oracle("posterior mean of sigma2 undefined (a <= 1)".into()));
    }

    let configs = 1usize << t_len;
    let mut log_w = Vec::with_capacity(configs);
    let mut cond = Vec::with_capacity(configs);
    for c in 0..configs {
        let jumps: Vec<bool> = (0..t_len).map(|t| c >> t & 1 == 1).collect();
        let prec: Vec<f64> = jumps
            .iter()
            .map(|&j| if j { 1.0 / (1.0 + fixed.jump_var_scale) } else { 1.0 })
            .collect();
        let q: Vec<f64> = ys
            .iter()
            .zip(&jumps)
            .map(|(&y, &j)| if j { y - fixed.jump_mean } else { y })
            .collect();

        let sw: f64 = prec.iter().sum();
        let qbar = prec.iter().zip(&q).map(|(w, x)| w * x).sum::<f64>() / sw;
        let ss: f64 = prec.iter().zip(&q).map(|(w, x)| w * (x - qbar) * (x - qbar)).sum();
        let n_post = prior.n + sw;
        let m_post = (prior.n * prior.m + sw * qbar) / n_post;
        let b_post = prior.b + 0.5 * (ss + prior.n * sw / n_post * (qbar - prior.m).powi(2));

        let k = jumps.iter().filter(|&&j| j).count() as f64;
        let log_lik = -0.5 * t_len as f64 * (2.0 * std::f64::consts::PI).ln()
            + 0.5 * prec.iter().map(|p| p.ln()).sum::<f64>()
            + 0.5 * (prior.n.ln() - n_post.ln())
            + ln_gamma(a_post)
            - ln_gamma(prior.a)
            + prior.a * prior.b.ln()
            - a_post * b_post.ln();
        let log_jumps = ln_beta(prior.alpha + k, prior.beta + t_len as f64 - k) - ln_beta(prior.alpha, prior.beta);

        log_w.push(log_lik + log_jumps);
        cond.push((
            m_post,
            b_post / (a_post - 1.0),
            (prior.alpha + k) / (prior.alpha + prior.beta + t_len as f64),
            jumps,
        ));
    }

    let log_evidence = log_sum_exp(&log_w);
    let mut out = PureOracle {
        mean_mu: 0.0,
        mean_sigma2: 0.0,
        mean_lambda: 0.0,
        jump_probs: vec![0.0; t_len],
        log_evidence,
    };
    for (lw, (mu, s2, lam, jumps)) in log_w.iter().zip(&cond) {
        let w = (lw - log_evidence).exp();
        out.mean_mu += w * mu;
        out.mean_sigma2 += w * s2;
        out.mean_lambda += w * lam;
        for (p, &j) in out.jump_probs.iter_mut().zip(jumps) {
            if j {
                *p += w;
            }
        }
    }
    Ok(out)
}

/// Resolution of the jump-size grid in the SV oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of Simpson intervals (rounded up to even).
    pub intervals: usize,
    /// Half-width of the grid, in posterior standard deviations, around the
    /// span between the prior jump mean and the observed residual.
    pub half_width: f64,
    /// Maximum relative change allowed when the grid is halved.
    pub tolerance: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            intervals: 4000,
            half_width: 12.0,
            tolerance: 1e-4,
        }
    }
}

/// Exact single-observation posterior of the SV model's `(J, Z, μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvOracle {
    pub p_jump: f64,
    /// Moments of `Z` marginally over `J` (the prior law when `J = 0`).
    pub mean_z: f64,
    pub mean_z2: f64,
    pub mean_z_given_jump: f64,
    pub var_z_given_jump: f64,
    pub mean_mu: f64,
}

pub fn oracle_sv_single_step(
    y: f64,
    v: f64,
    prior: &SvSuffStats,
    fixed: &SvFixedParams,
    grid: &GridSpec,
) -> Result<SvOracle> {
    prior.validate()?;
    fixed.validate()?;
    if !y.is_finite() || !(v > 0.0) {
        return Err(Error::Input("need finite y and positive V".into()));
    }
    if grid.intervals < 2 || !(grid.half_width > 0.0) {
        return Err(Error::Oracle("grid needs at least 2 intervals and positive width".into()));
    }
    let coarse = sv_grid_pass(y, v, prior, fixed, grid, grid.intervals)?;
    let fine = sv_grid_pass(y, v, prior, fixed, grid, 2 * grid.intervals)?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
    let drift = [
        rel(coarse.p_jump, fine.p_jump),
        rel(coarse.mean_z_given_jump, fine.mean_z_given_jump),
        rel(coarse.var_z_given_jump, fine.var_z_given_jump),
    ];
    if drift.iter().any(|&d| d > grid.tolerance) {
        return Err(Error::Oracle(format!(
            "grid halving changed outputs by {drift:?}, above tolerance {}",
            grid.tolerance
        )));
    }
    Ok(fine)
}

fn sv_grid_pass(
    y: f64,
    v: f64,
    s: &SvSuffStats,
    f: &SvFixedParams,
    grid: &GridSpec,
    intervals: usize,
) -> Result<SvOracle> {
    // y | Z, J=1 integrates μ ~ N(m, 1/n) against N(y; μ + Z, V)
    let lik_var = 1.0 / s.n + v;
    let resid = y - s.m;
    let post_sd = (1.0 / (1.0 / f.jump_var + 1.0 / lik_var)).sqrt();
    let lo = f.jump_mean.min(resid) - grid.half_width * post_sd;
    let hi = f.jump_mean.max(resid) + grid.half_width * post_sd;
    let k = intervals + intervals % 2;
    let h = (hi - lo) / k as f64;

    let log_f: Vec<f64> = (0..=k)
        .map(|i| {
            let z = lo + i as f64 * h;
            norm_lpdf(z, f.jump_mean, f.jump_var) + norm_lpdf(y - z, s.m, lik_var)
        })
        .collect();
    let peak = log_f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut i0, mut i1, mut i2) = (0.0, 0.0, 0.0);
    for (i, lf) in log_f.iter().enumerate() {
        let z = lo + i as f64 * h;
        let w = if i == 0 || i == k {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let fz = w * (lf - peak).exp();
        i0 += fz;
        i1 += fz * z;
        i2 += fz * z * z;
    }
    if !(i0 > 0.0) {
        return Err(Error::Oracle("jump-size integrand vanished on the grid".into()));
    }
    let log_marg_jump = peak + (i0 * h / 3.0).ln();
    let mean_zj = i1 / i0;
    let var_zj = (i2 / i0 - mean_zj * mean_zj).max(0.0);

    let total = s.alpha + s.beta;
    let l1 = (s.alpha / total).ln() + log_marg_jump;
    let l0 = (s.beta / total).ln() + norm_lpdf(y, s.m, lik_var);
    let p_jump = 1.0 / (1.0 + (l0 - l1).exp());

    let mu_post = |obs: f64, obs_var: f64| (s.n * s.m + obs / obs_var) / (s.n + 1.0 / obs_var);
    let mean_mu = (1.0 - p_jump) * mu_post(y, v) + p_jump * mu_post(y - f.jump_mean, f.jump_var + v);

    let prior_z2 = f.jump_mean * f.jump_mean + f.jump_var;
    Ok(SvOracle {
        p_jump,
        mean_z: p_jump * mean_zj + (1.0 - p_jump) * f.jump_mean,
        mean_z2: p_jump * (var_zj + mean_zj * mean_zj) + (1.0 - p_jump) * prior_z2,
        mean_z_given_jump: mean_zj,
        var_z_given_jump: var_zj,
        mean_mu,
    })
}

/// Descriptive statistics of a return series. Kurtosis is raw (a Normal
/// gives 3), not excess.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std: f64,
    /// `None` when the series has zero variance.
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
    pub min: f64,
    pub max: f64,
}

pub fn summary_stats(ys: &[f64]) -> Result<SummaryStats> {
    if ys.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: ys.len(),
        });
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Input("series contains non-finite values".into()));
    }
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &y in ys {
        let d = y - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2)))
    } else {
        (None, None)
    };
    Ok(SummaryStats {
        count: ys.len(),
        mean,
        std: (m2 * n / (n - 1.0)).sqrt(),
        skewness,
        kurtosis,
        min: ys.iter().copied().fold(f64::INFINITY, f64::min),
        max: ys.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
