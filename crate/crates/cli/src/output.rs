//! Result files: per-step trajectory CSV, posterior table, JSON summary and
//! run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use merton_pl::engine::VariableSummary;
use merton_pl::StepSummary;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{quantile_label, ModelKind, RunConfig};
use crate::error::{io_err, Result};
use crate::ingest::{ReturnSeries, SeriesKind};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const POSTERIOR_FILE: &str = "posterior.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Shortest round-tripping decimal, switching to exponent form for very
/// small or very large magnitudes.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn trajectory_header(
    state_names: &[&str],
    param_names: &[&str],
    quantiles: &[f64],
    parameter_quantiles: bool,
) -> Vec<String> {
    let labels: Vec<String> = quantiles.iter().map(|&q| quantile_label(q)).collect();
    let mut cols: Vec<String> = vec!["t".into(), "timestamp".into(), "y".into()];
    for name in state_names {
        cols.push(format!("{name}_mean"));
        cols.push(format!("{name}_sd"));
        cols.extend(labels.iter().map(|l| format!("{name}_{l}")));
    }
    for name in param_names {
        cols.push(format!("{name}_mean"));
        cols.push(format!("{name}_sd"));
        if parameter_quantiles {
            cols.extend(labels.iter().map(|l| format!("{name}_{l}")));
        }
    }
    cols.push("ess".into());
    cols.push("log_evidence_increment".into());
    cols
}

pub fn write_trajectory(path: &Path, header: &[String], series: &ReturnSeries, steps: &[StepSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for ((step, ts), y) in steps.iter().zip(&series.timestamps).zip(&series.values) {
        let mut row = vec![step.diagnostics.t.to_string(), ts.clone(), fmt_num(*y)];
        for v in step.states.iter().chain(&step.params) {
            row.push(fmt_num(v.mean));
            row.push(fmt_num(v.sd));
            row.extend(v.quantiles.iter().map(|&q| fmt_num(q)));
        }
        row.push(fmt_num(step.diagnostics.ess));
        row.push(fmt_num(step.diagnostics.log_evidence_increment));
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Final-step posterior of one state or parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEntry {
    pub name: String,
    pub kind: String,
    pub mean: f64,
    pub sd: f64,
    /// `sd / √ESS`: Monte Carlo standard error of the mean.
    pub mc_se: f64,
    pub quantiles: BTreeMap<String, f64>,
}

impl PosteriorEntry {
    pub fn new(v: &VariableSummary, kind: &str, levels: &[f64], ess: f64) -> Self {
        Self {
            name: v.name.clone(),
            kind: kind.into(),
            mean: v.mean,
            sd: v.sd,
            mc_se: v.sd / ess.sqrt(),
            quantiles: levels
                .iter()
                .zip(&v.quantiles)
                .map(|(&l, &q)| (quantile_label(l), q))
                .collect(),
        }
    }
}

/// One row of the prior/posterior table: fixed quantities have no posterior,
/// latent states have no prior value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub quantity: String,
    pub prior: Option<f64>,
    pub posterior_mean: Option<f64>,
    pub posterior_sd: Option<f64>,
    pub mc_se: Option<f64>,
}

pub fn posterior_table(cfg: &RunConfig, posterior: &[PosteriorEntry]) -> Vec<TableRow> {
    let find = |name: &str| posterior.iter().find(|p| p.name == name);
    let row = |quantity: &str, prior: Option<f64>, name: Option<&str>| {
        let p = name.and_then(find);
        TableRow {
            quantity: quantity.into(),
            prior,
            posterior_mean: p.map(|p| p.mean),
            posterior_sd: p.map(|p| p.sd),
            mc_se: p.map(|p| p.mc_se),
        }
    };
    match cfg.model {
        ModelKind::Merton => {
            let s = &cfg.merton;
            let sigma2_prior = (s.a0 > 1.0).then(|| s.b0 / (s.a0 - 1.0));
            vec![
                row("mu_J", Some(s.jump_mean), None),
                row("sigma2_J", Some(s.jump_var_scale), None),
                row("mu", Some(s.m0), Some("mu")),
                row("sigma2", sigma2_prior, Some("sigma2")),
                row("lambda", Some(s.alpha0 / (s.alpha0 + s.beta0)), Some("lambda")),
                row("Z", None, Some("z")),
            ]
        }
        ModelKind::MertonSv => {
            let s = &cfg.merton_sv;
            vec![
                row("mu_J", Some(s.jump_mean), None),
                row("sigma2_J", Some(s.jump_var), None),
                row("mu", Some(s.m0), Some("mu")),
                row("lambda", Some(s.alpha0 / (s.alpha0 + s.beta0)), Some("lambda")),
                row("Z", None, Some("z")),
                row("alpha_v", Some(s.vol_level), None),
                row("beta_v", Some(s.vol_persistence), None),
                row("sigma2_v", Some(s.fixed().vol_var), None),
                row("V", Some(s.v0), Some("v")),
            ]
        }
    }
}

pub fn write_posterior_table(path: &Path, rows: &[TableRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["quantity", "prior", "posterior_mean", "posterior_sd", "mc_se"])?;
    let cell = |x: Option<f64>| x.map(fmt_num).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.quantity.clone(),
            cell(r.prior),
            cell(r.posterior_mean),
            cell(r.posterior_sd),
            cell(r.mc_se),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub model: ModelKind,
    pub observations: usize,
    pub first_timestamp: String,
    pub last_timestamp: String,
    pub particles: usize,
    pub seed: u64,
    pub log_evidence: f64,
    pub final_ess: f64,
    /// Time average of the filtered jump probability.
    pub mean_jump_probability: f64,
    pub posterior: Vec<PosteriorEntry>,
    pub table: Vec<TableRow>,
    pub warnings: Vec<String>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub path: String,
    pub kind: SeriesKind,
    pub sha256: String,
    pub observations: usize,
}

/// Everything needed to regenerate a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub tool_version: String,
    pub core_version: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub input: InputRecord,
    pub outputs: Vec<String>,
    pub config: RunConfig,
}

pub fn config_hash(cfg: &RunConfig) -> Result<String> {
    Ok(sha256_hex(&serde_json::to_vec(cfg)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    let mut f = std::fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.0, 1.5, -0.04, 1e-10, 5.036e-5, 123456.789, 1e300, -2.5e-300, 0.1 + 0.2] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_num(1e-10), "1e-10");
        assert_eq!(fmt_num(0.25), "0.25");
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
