//! The four CLI verbs as library functions.

use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use merton_pl::simulate::{
    oracle_pure_posterior, oracle_sv_single_step, simulate_pure, simulate_sv, summary_stats, GridSpec, PureOracle,
    PureTruthConstants, SummaryStats, SvOracle, SvTruthConstants,
};
use merton_pl::sv::VolDrift;
use merton_pl::{Filter, FilterConfig, MertonPure, MertonSv, Model, RngStream, StepSummary, SummaryOptions};
use serde::{Deserialize, Serialize};

use crate::config::{ModelKind, RunConfig};
use crate::error::{io_err, CliError, Result};
use crate::ingest::{ingest, ReturnSeries, SeriesKind};
use crate::output::{
    config_hash, posterior_table, sha256_hex, trajectory_header, write_json, write_posterior_table, write_trajectory,
    InputRecord, Manifest, PosteriorEntry, RunSummary, MANIFEST_FILE, POSTERIOR_FILE, SUMMARY_FILE, TRAJECTORY_FILE,
};

pub const TOOL_NAME: &str = "merton-pl";

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: RunSummary,
}

struct FilterResult {
    steps: Vec<StepSummary>,
    log_evidence: f64,
    state_names: Vec<&'static str>,
    param_names: Vec<&'static str>,
}

fn execute<M: Model>(model: M, cfg: &RunConfig, ys: &[f64]) -> Result<FilterResult> {
    let fc = FilterConfig {
        n_particles: cfg.particles,
        seed: cfg.seed,
        scheme: cfg.resampling,
        ess_threshold: cfg.ess_threshold,
    };
    let filter = Filter::new(model, fc)?;
    let opts = SummaryOptions {
        quantiles: cfg.quantiles.clone(),
        parameter_quantiles: cfg.parameter_quantiles,
    };
    let out = filter.run(ys, &opts)?;
    Ok(FilterResult {
        steps: out.steps,
        log_evidence: out.log_evidence,
        state_names: filter.model().state_names().to_vec(),
        param_names: filter.model().param_names().to_vec(),
    })
}

/// Filters the configured series and writes trajectory, posterior table,
/// summary and manifest into the output directory.
pub fn run_command(cfg: RunConfig) -> Result<RunReport> {
    let warnings = cfg.resolve()?;
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| CliError::Config("no input file given".into()))?;
    let out_dir = cfg
        .output
        .clone()
        .ok_or_else(|| CliError::Config("no output directory given".into()))?;
    let input_bytes = std::fs::read(&input).map_err(io_err(&input))?;
    let series = ingest(&input, cfg.input_kind, cfg.delimiter_byte()?)?;

    let result = match cfg.model {
        ModelKind::Merton => execute(MertonPure::new(cfg.merton.fixed(), cfg.merton.prior())?, &cfg, &series.values)?,
        ModelKind::MertonSv => execute(
            MertonSv::new(cfg.merton_sv.fixed(), cfg.merton_sv.prior())?,
            &cfg,
            &series.values,
        )?,
    };

    std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let header = trajectory_header(
        &result.state_names,
        &result.param_names,
        &cfg.quantiles,
        cfg.parameter_quantiles,
    );
    let trajectory = out_dir.join(TRAJECTORY_FILE);
    write_trajectory(&trajectory, &header, &series, &result.steps)?;

    let last = result.steps.last().expect("at least one step");
    let ess = last.diagnostics.ess;
    let posterior: Vec<PosteriorEntry> = last
        .params
        .iter()
        .map(|v| PosteriorEntry::new(v, "parameter", &cfg.quantiles, ess))
        .chain(
            last.states
                .iter()
                .map(|v| PosteriorEntry::new(v, "state", &cfg.quantiles, ess)),
        )
        .collect();
    let table = posterior_table(&cfg, &posterior);
    let posterior_path = out_dir.join(POSTERIOR_FILE);
    write_posterior_table(&posterior_path, &table)?;

    let jump_idx = result.state_names.iter().position(|&n| n == "p_jump");
    let mean_jump_probability = jump_idx.map_or(f64::NAN, |j| {
        result.steps.iter().map(|s| s.states[j].mean).sum::<f64>() / result.steps.len() as f64
    });
    let summary = RunSummary {
        model: cfg.model,
        observations: series.len(),
        first_timestamp: series.timestamps[0].clone(),
        last_timestamp: series.timestamps[series.len() - 1].clone(),
        particles: cfg.particles,
        seed: cfg.seed,
        log_evidence: result.log_evidence,
        final_ess: ess,
        mean_jump_probability,
        posterior,
        table,
        warnings,
        config: cfg.clone(),
    };
    let summary_path = out_dir.join(SUMMARY_FILE);
    write_json(&summary_path, &summary)?;

    let manifest = Manifest {
        tool: TOOL_NAME.into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        core_version: merton_pl::VERSION.into(),
        command: "run".into(),
        seed: cfg.seed,
        config_sha256: config_hash(&cfg)?,
        input: InputRecord {
            path: input.display().to_string(),
            kind: cfg.input_kind,
            sha256: sha256_hex(&input_bytes),
            observations: series.len(),
        },
        outputs: vec![
            TRAJECTORY_FILE.into(),
            POSTERIOR_FILE.into(),
            SUMMARY_FILE.into(),
        ],
        config: cfg,
    };
    let manifest_path = out_dir.join(MANIFEST_FILE);
    write_json(&manifest_path, &manifest)?;

    Ok(RunReport {
        output_dir: out_dir,
        files: vec![trajectory, posterior_path, summary_path, manifest_path],
        summary,
    })
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

/// Re-runs a manifest into `output`. Fails if the input file no longer
/// matches the recorded hash.
pub fn run_from_manifest(path: &Path, output: PathBuf) -> Result<RunReport> {
    let manifest = read_manifest(path)?;
    let mut cfg = manifest.config;
    if config_hash(&cfg)? != manifest.config_sha256 {
        return Err(CliError::Config(format!(
            "{}: configuration does not match its recorded hash",
            path.display()
        )));
    }
    let input = cfg
        .input
        .clone()
        .ok_or_else(|| CliError::Config("manifest has no input".into()))?;
    let bytes = std::fs::read(&input).map_err(io_err(&input))?;
    if sha256_hex(&bytes) != manifest.input.sha256 {
        return Err(CliError::Config(format!(
            "{} changed since the manifest was written (sha256 mismatch)",
            input.display()
        )));
    }
    cfg.output = Some(output);
    run_command(cfg)
}

fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date")
}

fn default_steps() -> usize {
    2000
}

/// Truth constants of the constant-volatility simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PureTruthSection {
    pub mu: f64,
    pub sigma2: f64,
    pub lambda: f64,
    pub jump_mean: f64,
    pub jump_var_scale: f64,
}

impl Default for PureTruthSection {
    fn default() -> Self {
        Self {
            mu: 5e-4,
            sigma2: 2e-4,
            lambda: 0.05,
            jump_mean: -0.04,
            jump_var_scale: 1.0,
        }
    }
}

impl From<PureTruthSection> for PureTruthConstants {
    fn from(s: PureTruthSection) -> Self {
        PureTruthConstants {
            mu: s.mu,
            sigma2: s.sigma2,
            lambda: s.lambda,
            jump_mean: s.jump_mean,
            jump_var_scale: s.jump_var_scale,
        }
    }
}

/// Truth constants of the stochastic-volatility simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvTruthSection {
    pub mu: f64,
    pub lambda: f64,
    pub jump_mean: f64,
    pub jump_var: f64,
    pub vol_level: f64,
    pub vol_persistence: f64,
    pub vol_var: f64,
    pub v0: f64,
    pub drift: VolDrift,
}

impl Default for SvTruthSection {
    fn default() -> Self {
        Self {
            mu: 0.0,
            lambda: 0.01,
            jump_mean: -0.04,
            jump_var: 1.0,
            vol_level: 0.0016,
            vol_persistence: 0.99,
            vol_var: 0.01,
            v0: 0.16,
            drift: VolDrift::Dynamics,
        }
    }
}

impl From<SvTruthSection> for SvTruthConstants {
    fn from(s: SvTruthSection) -> Self {
        SvTruthConstants {
            mu: s.mu,
            lambda: s.lambda,
            jump_mean: s.jump_mean,
            jump_var: s.jump_var,
            vol_level: s.vol_level,
            vol_persistence: s.vol_persistence,
            vol_var: s.vol_var,
            v0: s.v0,
            drift: s.drift,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// First timestamp; later ones advance over weekdays.
    #[serde(default = "default_start_date")]
    pub start_date: NaiveDate,
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub merton: PureTruthSection,
    #[serde(default)]
    pub merton_sv: SvTruthSection,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::default(),
            steps: default_steps(),
            seed: 0,
            start_date: default_start_date(),
            output: None,
            merton: PureTruthSection::default(),
            merton_sv: SvTruthSection::default(),
        }
    }
}

impl SimulateConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(out) = cfg.output.as_mut() {
            if out.is_relative() {
                *out = path.parent().unwrap_or(Path::new("")).join(&*out);
            }
        }
        Ok(cfg)
    }
}

pub const SERIES_FILE: &str = "series.csv";
pub const TRUTH_CSV_FILE: &str = "truth.csv";
pub const TRUTH_JSON_FILE: &str = "truth.json";

/// RNG stream used by the simulator, distinct from every filter stream.
const SIMULATION_STREAM: u64 = 0x5349_4d55;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSidecar {
    pub tool: String,
    pub tool_version: String,
    pub config: SimulateConfig,
    pub jumps: usize,
}

/// Consecutive weekdays starting at `start` (moved forward off a weekend).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut d = start;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d.succ_opt().expect("date in range");
    }
    out
}

#[derive(Debug, Clone)]
pub struct SimulateReport {
    pub output_dir: PathBuf,
    pub series: ReturnSeries,
    pub variances: Option<Vec<f64>>,
    pub jumps: usize,
}

/// Writes `series.csv` (readable by `run`), `truth.csv` with the latent path
/// and shocks, and `truth.json` with the generating configuration.
pub fn simulate_command(cfg: &SimulateConfig) -> Result<SimulateReport> {
    use crate::output::fmt_num;

    let out_dir = cfg
        .output
        .clone()
        .ok_or_else(|| CliError::Config("no output directory given".into()))?;
    if cfg.steps == 0 {
        return Err(CliError::Config("steps must be at least 1".into()));
    }
    let dates = business_days(cfg.start_date, cfg.steps);
    let mut rng = RngStream::new(cfg.seed, SIMULATION_STREAM);
    std::fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;

    let mut truth_csv = csv::Writer::from_path(out_dir.join(TRUTH_CSV_FILE))?;
    let (ys, variances, jumps) = match cfg.model {
        ModelKind::Merton => {
            let truth = simulate_pure(&cfg.merton.into(), cfg.steps, &mut rng)?;
            truth_csv.write_record(["t", "date", "y", "jump", "size", "eps"])?;
            for (t, (r, d)) in truth.records.iter().zip(&dates).enumerate() {
                truth_csv.write_record([
                    (t + 1).to_string(),
                    d.to_string(),
                    fmt_num(r.y),
                    u8::from(r.jump).to_string(),
                    fmt_num(r.size),
                    fmt_num(r.eps),
                ])?;
            }
            let jumps = truth.records.iter().filter(|r| r.jump).count();
            (truth.returns(), None, jumps)
        }
        ModelKind::MertonSv => {
            let truth = simulate_sv(&cfg.merton_sv.into(), cfg.steps, &mut rng)?;
            truth_csv.write_record(["t", "date", "y", "v", "jump", "size", "eps"])?;
            for (t, (r, d)) in truth.records.iter().zip(&dates).enumerate() {
                truth_csv.write_record([
                    (t + 1).to_string(),
                    d.to_string(),
                    fmt_num(r.y),
                    fmt_num(r.v),
                    u8::from(r.jump).to_string(),
                    fmt_num(r.size),
                    fmt_num(r.eps),
                ])?;
            }
            let jumps = truth.records.iter().filter(|r| r.jump).count();
            (truth.returns(), Some(truth.variances()), jumps)
        }
    };
    truth_csv.flush().map_err(io_err(&out_dir))?;

    let mut series_csv = csv::Writer::from_path(out_dir.join(SERIES_FILE))?;
    series_csv.write_record(["date", "value"])?;
    for (d, y) in dates.iter().zip(&ys) {
        series_csv.write_record([d.to_string(), fmt_num(*y)])?;
    }
    series_csv.flush().map_err(io_err(&out_dir))?;

    write_json(
        &out_dir.join(TRUTH_JSON_FILE),
        &TruthSidecar {
            tool: TOOL_NAME.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            jumps,
        },
    )?;

    Ok(SimulateReport {
        output_dir: out_dir,
        series: ReturnSeries {
            timestamps: dates.iter().map(|d| d.to_string()).collect(),
            values: ys,
        },
        variances,
        jumps,
    })
}

/// Reference row of the paper's return summary table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub name: &'static str,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub min: f64,
    pub max: f64,
}

pub const TABLE1_GOOGLE: Table1Row = Table1Row {
    name: "google",
    mean: 4.84e-4,
    std: 0.0193,
    skewness: 0.21,
    kurtosis: 8.7,
    min: -0.123,
    max: 0.161,
};

pub const TABLE1_SP500: Table1Row = Table1Row {
    name: "sp500",
    mean: 1.78e-4,
    std: 0.0135,
    skewness: -0.383,
    kurtosis: 9.35,
    min: -0.0911,
    max: 0.101,
};

pub fn table1_reference(name: &str) -> Option<Table1Row> {
    match name {
        "google" => Some(TABLE1_GOOGLE),
        "sp500" => Some(TABLE1_SP500),
        _ => None,
    }
}

/// Mean, standard deviation and kurtosis within `tol` relative error.
pub fn table1_check(stats: &SummaryStats, reference: &Table1Row, tol: f64) -> Vec<String> {
    let mut failures = Vec::new();
    let kurt = stats.kurtosis.unwrap_or(f64::NAN);
    for (name, got, want) in [
        ("mean", stats.mean, reference.mean),
        ("std", stats.std, reference.std),
        ("kurtosis", kurt, reference.kurtosis),
    ] {
        let rel = (got - want).abs() / want.abs();
        if !(rel <= tol) {
            failures.push(format!(
                "{name}: {got:.6e} vs reference {want:.6e} (relative error {rel:.4}, tolerance {tol})"
            ));
        }
    }
    failures
}

pub fn stats_command(path: &Path, kind: SeriesKind, delimiter: u8) -> Result<SummaryStats> {
    let series = ingest(path, kind, delimiter)?;
    Ok(summary_stats(&series.values)?)
}

/// Table-1 layout: one row per series, kurtosis raw (Normal = 3).
pub fn render_stats_table(rows: &[(String, SummaryStats)]) -> String {
    let opt = |x: Option<f64>, prec: usize| x.map_or("undefined".to_string(), |v| format!("{v:.prec$}"));
    let mut out = format!(
        "{:<16} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10} {:>6}\n",
        "series", "mean", "std", "skewness", "kurtosis", "min", "max", "n"
    );
    for (name, s) in rows {
        out.push_str(&format!(
            "{:<16} {:>10.3e} {:>10.4} {:>10} {:>10} {:>10.4} {:>10.4} {:>6}\n",
            name,
            s.mean,
            s.std,
            opt(s.skewness, 3),
            opt(s.kurtosis, 3),
            s.min,
            s.max,
            s.count
        ));
    }
    out
}

pub fn oracle_pure(ys: &[f64], cfg: &RunConfig) -> Result<PureOracle> {
    Ok(oracle_pure_posterior(ys, &cfg.merton.prior(), &cfg.merton.fixed())?)
}

pub fn oracle_sv(y: f64, v: f64, cfg: &RunConfig, grid: &GridSpec) -> Result<SvOracle> {
    Ok(oracle_sv_single_step(y, v, &cfg.merton_sv.prior(), &cfg.merton_sv.fixed(), grid)?)
}
