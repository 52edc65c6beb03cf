use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use merton_pl::simulate::GridSpec;
use merton_pl::ResampleScheme;
use merton_pl_cli::commands::{
    oracle_pure, oracle_sv, render_stats_table, run_command, run_from_manifest, simulate_command, stats_command,
    table1_check, table1_reference, SimulateConfig,
};
use merton_pl_cli::{CliError, ModelKind, RunConfig, SeriesKind};

#[derive(Parser)]
#[command(name = "merton-pl", version, about = "Particle learning for Merton jump and jump-SV return models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a return or price series and write trajectory, posterior table, summary and manifest.
    Run(RunArgs),
    /// Simulate a synthetic series plus its latent truth.
    Simulate(SimulateArgs),
    /// Print summary statistics of one or more series.
    Stats(StatsArgs),
    /// Exact small-instance posteriors, printed as JSON.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run the configuration recorded in a manifest.json (requires --output).
    #[arg(long, conflicts_with = "config")]
    from_manifest: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    kind: Option<SeriesKind>,
    #[arg(long)]
    delimiter: Option<char>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_scheme)]
    resampling: Option<ResampleScheme>,
    /// Resample only when ESS falls below this fraction of N.
    #[arg(long)]
    ess_threshold: Option<f64>,
    /// Comma-separated quantile levels.
    #[arg(long, value_delimiter = ',')]
    quantiles: Option<Vec<f64>>,
    /// Skip parameter quantiles (means and SDs are still reported).
    #[arg(long)]
    no_parameter_quantiles: bool,
    /// Reject defaulted model settings.
    #[arg(long)]
    strict: bool,
}

fn parse_scheme(s: &str) -> Result<ResampleScheme, String> {
    s.parse().map_err(|e: merton_pl::Error| e.to_string())
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML simulation configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// `date,value` files.
    #[arg(required = true)]
    paths: Vec<PathBuf>,
    #[arg(long, default_value = "returns")]
    kind: SeriesKind,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    #[arg(long)]
    json: bool,
    /// Compare mean, std and kurtosis with a published row (google or sp500).
    #[arg(long)]
    check_table1: Option<String>,
    /// Relative tolerance for --check-table1.
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Constant-volatility posterior by enumerating jump paths (up to 5 observations).
    Pure {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        y: Vec<f64>,
        /// Run configuration supplying the `[merton]` prior.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Single-step posterior of the SV model on a jump-size grid.
    Sv {
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
        #[arg(long)]
        v: f64,
        /// Run configuration supplying the `[merton_sv]` prior.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = GridSpec::default().intervals)]
        intervals: usize,
    },
}

fn load_run_config(path: Option<&PathBuf>) -> anyhow::Result<RunConfig> {
    Ok(match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    })
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let report = if let Some(manifest) = &args.from_manifest {
        let Some(output) = args.output else {
            bail!("--from-manifest needs --output");
        };
        run_from_manifest(manifest, output)?
    } else {
        let mut cfg = load_run_config(args.config.as_ref())?;
        if let Some(v) = args.input {
            cfg.input = Some(v);
        }
        if let Some(v) = args.kind {
            cfg.input_kind = v;
        }
        if let Some(v) = args.delimiter {
            cfg.delimiter = v;
        }
        if let Some(v) = args.output {
            cfg.output = Some(v);
        }
        if let Some(v) = args.model {
            cfg.model = v;
        }
        if let Some(v) = args.particles {
            cfg.particles = v;
        }
        if let Some(v) = args.seed {
            cfg.seed = v;
        }
        if let Some(v) = args.resampling {
            cfg.resampling = v;
        }
        if let Some(v) = args.ess_threshold {
            cfg.ess_threshold = Some(v);
        }
        if let Some(v) = args.quantiles {
            cfg.quantiles = v;
        }
        if args.no_parameter_quantiles {
            cfg.parameter_quantiles = false;
        }
        if args.strict {
            cfg.strict = true;
        }
        run_command(cfg)?
    };
    for w in &report.summary.warnings {
        eprintln!("warning: {w}");
    }
    let s = &report.summary;
    println!(
        "{} on {} observations ({} .. {}), N={}, seed={}",
        s.model, s.observations, s.first_timestamp, s.last_timestamp, s.particles, s.seed
    );
    println!("log evidence {:.6}, final ESS {:.1}", s.log_evidence, s.final_ess);
    for p in &s.posterior {
        println!("  {:<8} mean {:>12.5e}  sd {:>11.4e}  mc se {:>10.3e}", p.name, p.mean, p.sd, p.mc_se);
    }
    println!("results in {}", report.output_dir.display());
    Ok(())
}

fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => SimulateConfig::load(p)?,
        None => SimulateConfig::default(),
    };
    if let Some(v) = args.model {
        cfg.model = v;
    }
    if let Some(v) = args.steps {
        cfg.steps = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.output {
        cfg.output = Some(v);
    }
    let report = simulate_command(&cfg)?;
    println!(
        "simulated {} {} observations with {} jumps into {}",
        report.series.len(),
        cfg.model,
        report.jumps,
        report.output_dir.display()
    );
    Ok(())
}

fn stats(args: StatsArgs) -> anyhow::Result<()> {
    if !args.delimiter.is_ascii() {
        bail!("delimiter must be ASCII");
    }
    let reference = match &args.check_table1 {
        Some(name) => Some(table1_reference(name).with_context(|| format!("unknown Table 1 row '{name}'"))?),
        None => None,
    };
    let mut rows = Vec::new();
    for path in &args.paths {
        let s = stats_command(path, args.kind, args.delimiter as u8)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        rows.push((name, s));
    }
    if args.json {
        let value: Vec<_> = rows
            .iter()
            .map(|(name, s)| serde_json::json!({ "series": name, "stats": s }))
            .collect();
        println!("{}", serde_json::to_string_pretty(&value)?);
    } else {
        print!("{}", render_stats_table(&rows));
    }
    if let Some(reference) = reference {
        let failures: Vec<String> = rows
            .iter()
            .flat_map(|(name, s)| {
                table1_check(s, &reference, args.tolerance)
                    .into_iter()
                    .map(move |f| format!("{name}: {f}"))
            })
            .collect();
        if !failures.is_empty() {
            return Err(CliError::Table1(failures).into());
        }
        println!("Table 1 check against '{}' passed", reference.name);
    }
    Ok(())
}

fn oracle(cmd: OracleCommand) -> anyhow::Result<()> {
    let text = match cmd {
        OracleCommand::Pure { y, config } => {
            let cfg = load_run_config(config.as_ref())?;
            serde_json::to_string_pretty(&oracle_pure(&y, &cfg)?)?
        }
        OracleCommand::Sv { y, v, config, intervals } => {
            let cfg = load_run_config(config.as_ref())?;
            let grid = GridSpec {
                intervals,
                ..GridSpec::default()
            };
            serde_json::to_string_pretty(&oracle_sv(y, v, &cfg, &grid)?)?
        }
    };
    println!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Simulate(a) => simulate(a),
        Command::Stats(a) => stats(a),
        Command::Oracle(c) => oracle(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            for cause in e.chain().skip(1) {
                eprintln!("  caused by: {cause}");
            }
            ExitCode::FAILURE
        }
    }
}
