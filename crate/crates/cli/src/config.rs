//! Run configuration, loaded from TOML and overridable from the command line.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use merton_pl::sv::{JumpSizeRule, VolDrift};
use merton_pl::{PureFixedParams, PureSuffStats, ResampleScheme, SvFixedParams, SvSuffStats};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliError, Result};
use crate::ingest::SeriesKind;

/// Volatility-of-volatility used when the config leaves it out and strict
/// mode is off.
pub const DEFAULT_VOL_VAR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ModelKind {
    #[default]
    #[serde(rename = "merton")]
    Merton,
    #[serde(rename = "merton-sv")]
    MertonSv,
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "merton" => Ok(ModelKind::Merton),
            "merton-sv" => Ok(ModelKind::MertonSv),
            other => Err(format!("unknown model '{other}' (expected merton or merton-sv)")),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Merton => "merton",
            ModelKind::MertonSv => "merton-sv",
        })
    }
}

/// Fixed jump law and prior hyperparameters of the constant-volatility model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PureSection {
    pub jump_mean: f64,
    /// Jump variance as a multiple of `σ²`.
    pub jump_var_scale: f64,
    pub m0: f64,
    pub n0: f64,
    pub a0: f64,
    pub b0: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl Default for PureSection {
    fn default() -> Self {
        let f = PureFixedParams::default();
        let s = PureSuffStats::default();
        Self {
            jump_mean: f.jump_mean,
            jump_var_scale: f.jump_var_scale,
            m0: s.m,
            n0: s.n,
            a0: s.a,
            b0: s.b,
            alpha0: s.alpha,
            beta0: s.beta,
        }
    }
}

impl PureSection {
    pub fn fixed(&self) -> PureFixedParams {
        PureFixedParams {
            jump_mean: self.jump_mean,
            jump_var_scale: self.jump_var_scale,
        }
    }

    pub fn prior(&self) -> PureSuffStats {
        PureSuffStats {
            m: self.m0,
            n: self.n0,
            a: self.a0,
            b: self.b0,
            alpha: self.alpha0,
            beta: self.beta0,
        }
    }
}

/// Fixed jump law, volatility dynamics and prior of the stochastic-volatility model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvSection {
    pub jump_mean: f64,
    pub jump_var: f64,
    pub vol_level: f64,
    pub vol_persistence: f64,
    /// Required in strict mode.
    pub vol_var: Option<f64>,
    pub v0: f64,
    pub drift: VolDrift,
    pub jump_size: JumpSizeRule,
    pub m0: f64,
    pub n0: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl Default for SvSection {
    fn default() -> Self {
        let f = SvFixedParams::default();
        let s = SvSuffStats::default();
        Self {
            jump_mean: f.jump_mean,
            jump_var: f.jump_var,
            vol_level: f.vol_level,
            vol_persistence: f.vol_persistence,
            vol_var: None,
            v0: f.v0,
            drift: f.drift,
            jump_size: f.jump_size_rule,
            m0: s.m,
            n0: s.n,
            alpha0: s.alpha,
            beta0: s.beta,
        }
    }
}

impl SvSection {
    /// An unset `vol_var` falls back to [`DEFAULT_VOL_VAR`] (rejected by
    /// [`RunConfig::resolve`] in strict mode).
    pub fn fixed(&self) -> SvFixedParams {
        SvFixedParams {
            jump_mean: self.jump_mean,
            jump_var: self.jump_var,
            vol_level: self.vol_level,
            vol_persistence: self.vol_persistence,
            vol_var: self.vol_var.unwrap_or(DEFAULT_VOL_VAR),
            v0: self.v0,
            drift: self.drift,
            jump_size_rule: self.jump_size,
        }
    }

    pub fn prior(&self) -> SvSuffStats {
        SvSuffStats {
            m: self.m0,
            n: self.n0,
            alpha: self.alpha0,
            beta: self.beta0,
        }
    }
}

fn default_particles() -> usize {
    5000
}

fn default_delimiter() -> char {
    ','
}

fn default_quantiles() -> Vec<f64> {
    vec![0.05, 0.5, 0.95]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelKind,
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub resampling: ResampleScheme,
    /// Resample only when `ESS < ess_threshold · N`; absent means every step.
    #[serde(default)]
    pub ess_threshold: Option<f64>,
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub input_kind: SeriesKind,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Where results go. Not part of the echoed configuration, so that a
    /// rerun into another directory produces identical files.
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(default = "default_quantiles")]
    pub quantiles: Vec<f64>,
    #[serde(default = "yes")]
    pub parameter_quantiles: bool,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub merton: PureSection,
    #[serde(default)]
    pub merton_sv: SvSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::default(),
            particles: default_particles(),
            seed: 0,
            resampling: ResampleScheme::default(),
            ess_threshold: None,
            input: None,
            input_kind: SeriesKind::default(),
            delimiter: default_delimiter(),
            output: None,
            quantiles: default_quantiles(),
            parameter_quantiles: true,
            strict: false,
            merton: PureSection::default(),
            merton_sv: SvSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a TOML file. Relative `input`/`output` paths are taken relative
    /// to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            e => e,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.input, &mut cfg.output].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn delimiter_byte(&self) -> Result<u8> {
        if self.delimiter.is_ascii() {
            Ok(self.delimiter as u8)
        } else {
            Err(CliError::Config(format!("delimiter '{}' is not ASCII", self.delimiter)))
        }
    }

    /// Checks every field, returning warnings about defaulted settings.
    /// In strict mode a missing `merton_sv.vol_var` is an error.
    pub fn resolve(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.particles < 2 {
            return Err(CliError::Config(format!("particles must be at least 2, got {}", self.particles)));
        }
        if let Some(thr) = self.ess_threshold {
            if !(0.0..=1.0).contains(&thr) {
                return Err(CliError::Config(format!("ess_threshold must lie in [0, 1], got {thr}")));
            }
        }
        if self.quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(CliError::Config("quantiles must lie strictly between 0 and 1".into()));
        }
        if self.quantiles.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config("quantiles must be strictly increasing".into()));
        }
        let mut labels: Vec<String> = self.quantiles.iter().map(|&q| quantile_label(q)).collect();
        labels.dedup();
        if labels.len() != self.quantiles.len() {
            return Err(CliError::Config("quantile levels too close to label distinctly".into()));
        }
        self.delimiter_byte()?;

        match self.model {
            ModelKind::Merton => {
                self.merton.fixed().validate()?;
                self.merton.prior().validate()?;
            }
            ModelKind::MertonSv => {
                if self.merton_sv.vol_var.is_none() {
                    if self.strict {
                        return Err(CliError::Config(
                            "strict mode: merton_sv.vol_var must be set explicitly".into(),
                        ));
                    }
                    warnings.push(format!(
                        "merton_sv.vol_var not set; using default {DEFAULT_VOL_VAR}"
                    ));
                }
                let fixed = self.merton_sv.fixed();
                fixed.validate()?;
                self.merton_sv.prior().validate()?;
                warnings.extend(fixed.warnings());
            }
        }
        Ok(warnings)
    }
}

/// Column label for a quantile level: `0.05 -> q05`, `0.5 -> q50`, `0.025 -> q2_5`.
pub fn quantile_label(q: f64) -> String {
    let pct = q * 100.0;
    let rounded = pct.round();
    if (pct - rounded).abs() < 1e-9 {
        format!("q{:02}", rounded as u64)
    } else {
        let s = format!("{}", (pct * 1e6).round() / 1e6);
        format!("q{}", s.replace('.', "_"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_file() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.merton.prior(), PureSuffStats::default());
    }

    #[test]
    fn full_file_parses() {
        let text = r#"
            model = "merton-sv"
            particles = 1000
            seed = 7
            resampling = "systematic"
            ess_threshold = 0.5
            input = "data.csv"
            input_kind = "prices"
            delimiter = ";"
            quantiles = [0.1, 0.9]
            strict = true

            [merton_sv]
            vol_var = 0.02
            drift = "mean-reverting"
            jump_size = "literal"
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.model, ModelKind::MertonSv);
        assert_eq!(cfg.resampling, ResampleScheme::Systematic);
        assert_eq!(cfg.input_kind, SeriesKind::Prices);
        assert!(cfg.resolve().unwrap().is_empty());
        assert_eq!(cfg.merton_sv.fixed().drift, VolDrift::MeanReverting);
        assert_eq!(cfg.merton_sv.fixed().jump_size_rule, JumpSizeRule::Literal);
    }

    #[test]
    fn strict_mode_requires_vol_var() {
        let cfg = RunConfig::from_toml_str("model = \"merton-sv\"\nstrict = true").unwrap();
        assert!(matches!(cfg.resolve(), Err(CliError::Config(_))));
        let cfg = RunConfig::from_toml_str("model = \"merton-sv\"").unwrap();
        let warnings = cfg.resolve().unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(cfg.merton_sv.fixed().vol_var, DEFAULT_VOL_VAR);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "particles = 1",
            "quantiles = [0.5, 0.05]",
            "quantiles = [0.0, 0.5]",
            "ess_threshold = 2.0",
            "[merton]\nb0 = -1.0",
        ] {
            let cfg = RunConfig::from_toml_str(text).unwrap();
            assert!(cfg.resolve().is_err(), "{text}");
        }
        assert!(RunConfig::from_toml_str("particels = 10").is_err());
        assert!(RunConfig::from_toml_str("model = \"heston\"").is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(quantile_label(0.05), "q05");
        assert_eq!(quantile_label(0.5), "q50");
        assert_eq!(quantile_label(0.95), "q95");
        assert_eq!(quantile_label(0.025), "q2_5");
        assert_eq!(quantile_label(0.999), "q99_9");
    }
}
