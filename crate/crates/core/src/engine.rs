//! Generic particle-learning loop.
//!
//! Each step is fully adapted: particles are weighted by the exact predictive
//! density of the incoming observation given their current contents,
//! resampled, and only then propagated. Sufficient statistics are updated
//! from the *resampled* ancestor's statistics and the freshly propagated
//! state. Parameter draws from `p(θ | s)` are never needed by the recursion
//! itself and are only made when a summary asks for parameter quantiles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{log_sum_exp, resample_indices, ResampleScheme, RngStream};

const TAG_PROPAGATE: u64 = 1;
const TAG_RESAMPLE: u64 = 2;
const TAG_PARAMS: u64 = 3;
const TAG_INIT: u64 = 4;

/// One Monte Carlo sample: latent state plus conditional sufficient statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle<S, T> {
    pub state: S,
    pub stats: T,
}

/// Conditional mean and variance of a scalar parameter given one particle's
/// sufficient statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub var: f64,
}

/// What a model must supply to be driven by [`Filter`].
pub trait Model: Sync {
    type State: Clone + Send + Sync;
    type Stats: Clone + Send + Sync;
    type Params: Send;

    fn init_particle(&self, rng: &mut RngStream) -> Particle<Self::State, Self::Stats>;

    /// Exact `ln p(y_{t+1} | particle contents at t)`.
    fn log_predictive(&self, particle: &Particle<Self::State, Self::Stats>, y: f64) -> f64;

    /// Draws the new latent state from `p(state_{t+1} | ancestor, y_{t+1})`.
    fn propagate(&self, ancestor: &Particle<Self::State, Self::Stats>, y: f64, rng: &mut RngStream) -> Self::State;

    /// Deterministic recursion `s_{t+1} = S(s_t, state_{t+1}, y_{t+1})`.
    fn update_stats(&self, stats: &Self::Stats, state: &Self::State, y: f64) -> Self::Stats;

    /// Transition applied after the statistics update, before the next
    /// observation arrives (e.g. pre-drawing next-period volatility).
    fn advance(&self, state: Self::State, _rng: &mut RngStream) -> Self::State {
        state
    }

    fn draw_parameters(&self, stats: &Self::Stats, rng: &mut RngStream) -> Self::Params;

    fn state_names(&self) -> &'static [&'static str];
    fn state_values(&self, particle: &Particle<Self::State, Self::Stats>) -> Vec<f64>;

    fn param_names(&self) -> &'static [&'static str];
    fn param_values(&self, params: &Self::Params) -> Vec<f64>;
    /// Closed-form conditional moments of each parameter, in `param_names` order.
    fn param_moments(&self, stats: &Self::Stats) -> Vec<Moments>;

    /// Short human-readable description of a particle for divergence reports.
    fn describe(&self, particle: &Particle<Self::State, Self::Stats>) -> String;
}

#[derive(Debug, Clone)]
pub struct Population<S, T> {
    pub particles: Vec<Particle<S, T>>,
    /// Normalized log-weights. All equal to `-ln N` right after resampling.
    pub log_weights: Vec<f64>,
    /// Number of observations assimilated so far.
    pub t: usize,
    pub cumulative_log_evidence: f64,
}

impl<S, T> Population<S, T> {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: usize,
    pub ess: f64,
    pub log_evidence_increment: f64,
    /// `None` when adaptive resampling skipped this step.
    pub resample_scheme_used: Option<ResampleScheme>,
}

/// Result of a single step, including the ancestor map for lineage checks.
#[derive(Debug, Clone)]
pub struct StepOutcome<S, T> {
    pub population: Population<S, T>,
    pub diagnostics: StepDiagnostics,
    pub ancestors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub n_particles: usize,
    pub seed: u64,
    pub scheme: ResampleScheme,
    /// Resample only when `ESS < threshold · N`. `None` resamples every step.
    pub ess_threshold: Option<f64>,
}

impl FilterConfig {
    pub fn new(n_particles: usize, seed: u64) -> Self {
        Self {
            n_particles,
            seed,
            scheme: ResampleScheme::Multinomial,
            ess_threshold: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryOptions {
    pub quantiles: Vec<f64>,
    /// Draw parameters from `p(θ | s)` each step to report their quantiles.
    pub parameter_quantiles: bool,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            quantiles: vec![0.05, 0.5, 0.95],
            parameter_quantiles: true,
        }
    }
}

/// Posterior summary of one scalar quantity at one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    /// One entry per requested quantile level; empty when not computed.
    pub quantiles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub diagnostics: StepDiagnostics,
    pub states: Vec<VariableSummary>,
    pub params: Vec<VariableSummary>,
}

#[derive(Debug, Clone)]
pub struct RunOutput<S, T> {
    pub steps: Vec<StepSummary>,
    pub log_evidence: f64,
    pub population: Population<S, T>,
}

/// Particle-learning driver for a concrete model.
#[derive(Debug, Clone)]
pub struct Filter<M> {
    model: M,
    config: FilterConfig,
}

impl<M: Model> Filter<M> {
    pub fn new(model: M, config: FilterConfig) -> Result<Self> {
        if config.n_particles < 2 {
            return Err(Error::domain(format!(
                "need at least 2 particles, got {}",
                config.n_particles
            )));
        }
        if let Some(thr) = config.ess_threshold {
            if !(0.0..=1.0).contains(&thr) {
                return Err(Error::domain(format!("ESS threshold must lie in [0, 1], got {thr}")));
            }
        }
        Ok(Self { model, config })
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    pub fn initialize(&self) -> Population<M::State, M::Stats> {
        let n = self.config.n_particles;
        let seed = self.config.seed;
        let particles: Vec<_> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::keyed(seed, &[TAG_INIT, i as u64]);
                self.model.init_particle(&mut rng)
            })
            .collect();
        Population {
            particles,
            log_weights: vec![-(n as f64).ln(); n],
            t: 0,
            cumulative_log_evidence: 0.0,
        }
    }

    /// Assimilates one observation: weight, resample, propagate, update.
    pub fn step(
        &self,
        pop: &Population<M::State, M::Stats>,
        y: f64,
    ) -> Result<StepOutcome<M::State, M::Stats>> {
        let t = pop.t + 1;
        if !y.is_finite() {
            return Err(Error::Input(format!("observation at t={t} is not finite: {y}")));
        }
        let n = pop.len();
        let seed = self.config.seed;

        let log_pred: Vec<f64> = pop
            .particles
            .par_iter()
            .map(|p| self.model.log_predictive(p, y))
            .collect();
        let log_w: Vec<f64> = pop
            .log_weights
            .iter()
            .zip(&log_pred)
            .map(|(lw, lp)| if lp.is_nan() { f64::NEG_INFINITY } else { lw + lp })
            .collect();

        let increment = log_sum_exp(&log_w);
        if !increment.is_finite() {
            return Err(Error::FilterDivergence {
                t,
                summary: divergence_summary(&self.model, pop, &log_pred),
            });
        }
        let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = log_w.iter().map(|lw| (lw - max).exp()).collect();
        let ess = ess_linear(&w);

        let resample = match self.config.ess_threshold {
            None => true,
            Some(thr) => ess < thr * n as f64,
        };
        let (ancestors, log_weights) = if resample {
            let mut rng = RngStream::keyed(seed, &[TAG_RESAMPLE, t as u64]);
            let idx = resample_indices(&w, n, self.config.scheme, &mut rng)?;
            (idx, vec![-(n as f64).ln(); n])
        } else {
            ((0..n).collect(), log_w.iter().map(|lw| lw - increment).collect())
        };

        let particles: Vec<_> = ancestors
            .par_iter()
            .enumerate()
            .map(|(i, &k)| {
                let mut rng = RngStream::keyed(seed, &[TAG_PROPAGATE, t as u64, i as u64]);
                let ancestor = &pop.particles[k];
                let state = self.model.propagate(ancestor, y, &mut rng);
                let stats = self.model.update_stats(&ancestor.stats, &state, y);
                let state = self.model.advance(state, &mut rng);
                Particle { state, stats }
            })
            .collect();

        Ok(StepOutcome {
            population: Population {
                particles,
                log_weights,
                t,
                cumulative_log_evidence: pop.cumulative_log_evidence + increment,
            },
            diagnostics: StepDiagnostics {
                t,
                ess,
                log_evidence_increment: increment,
                resample_scheme_used: resample.then_some(self.config.scheme),
            },
            ancestors,
        })
    }

    /// Posterior summaries of states and parameters for a population.
    pub fn summarize(
        &self,
        pop: &Population<M::State, M::Stats>,
        diagnostics: StepDiagnostics,
        opts: &SummaryOptions,
    ) -> StepSummary {
        let w = pop.weights();

        let state_values: Vec<Vec<f64>> = pop
            .particles
            .par_iter()
            .map(|p| self.model.state_values(p))
            .collect();
        let states = self
            .model
            .state_names()
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let xs: Vec<f64> = state_values.iter().map(|v| v[j]).collect();
                let (mean, var) = weighted_mean_var(&xs, &w);
                VariableSummary {
                    name: (*name).to_string(),
                    mean,
                    sd: var.sqrt(),
                    quantiles: weighted_quantiles(&xs, &w, &opts.quantiles),
                }
            })
            .collect();

        // Rao-Blackwellized moments from the conditional posteriors
        let moments: Vec<Vec<Moments>> = pop
            .particles
            .par_iter()
            .map(|p| self.model.param_moments(&p.stats))
            .collect();
        let draws: Option<Vec<Vec<f64>>> = opts.parameter_quantiles.then(|| {
            let seed = self.config.seed;
            let t = pop.t as u64;
            pop.particles
                .par_iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut rng = RngStream::keyed(seed, &[TAG_PARAMS, t, i as u64]);
                    let params = self.model.draw_parameters(&p.stats, &mut rng);
                    self.model.param_values(&params)
                })
                .collect()
        });
        let params = self
            .model
            .param_names()
            .iter()
            .enumerate()
            .map(|(j, name)| {
                let mut mean = 0.0;
                let mut second = 0.0;
                for (m, wi) in moments.iter().zip(&w) {
                    let mj = m[j];
                    mean += wi * mj.mean;
                    second += wi * (mj.var + mj.mean * mj.mean);
                }
                let var = (second - mean * mean).max(0.0);
                let quantiles = match &draws {
                    Some(d) => {
                        let xs: Vec<f64> = d.iter().map(|v| v[j]).collect();
                        weighted_quantiles(&xs, &w, &opts.quantiles)
                    }
                    None => Vec::new(),
                };
                VariableSummary {
                    name: (*name).to_string(),
                    mean,
                    sd: var.sqrt(),
                    quantiles,
                }
            })
            .collect();

        StepSummary {
            diagnostics,
            states,
            params,
        }
    }

    /// Filters the whole series, invoking `on_step` once per observation.
    pub fn run_with<F>(&self, ys: &[f64], opts: &SummaryOptions, mut on_step: F) -> Result<RunOutput<M::State, M::Stats>>
    where
        F: FnMut(&StepSummary),
    {
        if ys.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let mut pop = self.initialize();
        let mut steps = Vec::with_capacity(ys.len());
        for &y in ys {
            let t = pop.t + 1;
            let outcome = self.step(&pop, y).map_err(|e| match e {
                e @ Error::FilterDivergence { .. } => e,
                e => Error::AtStep { t, source: Box::new(e) },
            })?;
            pop = outcome.population;
            let summary = self.summarize(&pop, outcome.diagnostics, opts);
            on_step(&summary);
            steps.push(summary);
        }
        Ok(RunOutput {
            steps,
            log_evidence: pop.cumulative_log_evidence,
            population: pop,
        })
    }

    pub fn run(&self, ys: &[f64], opts: &SummaryOptions) -> Result<RunOutput<M::State, M::Stats>> {
        self.run_with(ys, opts, |_| {})
    }
}

fn divergence_summary<M: Model>(model: &M, pop: &Population<M::State, M::Stats>, log_pred: &[f64]) -> String {
    let finite = log_pred.iter().filter(|l| l.is_finite()).count();
    let first = pop
        .particles
        .first()
        .map(|p| model.describe(p))
        .unwrap_or_default();
    format!(
        "{} particles, {} finite predictive weights, first particle: {}",
        pop.len(),
        finite,
        first
    )
}

fn ess_linear(w: &[f64]) -> f64 {
    let s: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|x| x * x).sum();
    s * s / s2
}

/// Effective sample size `(Σw)² / Σw²` of log-space weights.
pub fn ess(log_weights: &[f64]) -> Result<f64> {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateWeights(
            "no finite log-weight to compute ESS from".into(),
        ));
    }
    let w: Vec<f64> = log_weights.iter().map(|lw| (lw - max).exp()).collect();
    Ok(ess_linear(&w))
}

fn weighted_mean_var(xs: &[f64], w: &[f64]) -> (f64, f64) {
    let total: f64 = w.iter().sum();
    let mean = xs.iter().zip(w).map(|(x, wi)| x * wi).sum::<f64>() / total;
    let var = xs
        .iter()
        .zip(w)
        .map(|(x, wi)| wi * (x - mean) * (x - mean))
        .sum::<f64>()
        / total;
    (mean, var)
}

/// Inverse of the weighted empirical CDF: the smallest `x` whose cumulative
/// weight reaches `q`.
pub fn weighted_quantiles(xs: &[f64], w: &[f64], levels: &[f64]) -> Vec<f64> {
    if levels.is_empty() || xs.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_unstable_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let total: f64 = w.iter().sum();
    let mut cum = Vec::with_capacity(order.len());
    let mut acc = 0.0;
    for &i in &order {
        acc += w[i];
        cum.push(acc / total);
    }
    levels
        .iter()
        .map(|&q| {
            let pos = cum.partition_point(|&c| c < q).min(order.len() - 1);
            xs[order[pos]]
        })
        .collect()
}
