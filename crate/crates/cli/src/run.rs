//! Argument parsing, experiment dispatch and result files.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thz_ook::montecarlo::{self, config_hash, ExperimentConfig, ExperimentReport};

use crate::config::{parse_config, ConfigError};

#[derive(Debug, Parser)]
#[command(name = "thz-ook", version, about = "Adaptive pulse-width OOK over broadening THz links")]
pub struct Cli {
    /// Experiment file (TOML). Without one the built-in defaults are used.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory receiving the result files.
    #[arg(long, global = true, env = "THZ_OOK_OUT", default_value = "results", value_name = "DIR")]
    pub out: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Monte-Carlo BER against SNR for every configured distance.
    BerVsSnr,
    /// Monte-Carlo BER against transmit power, including the energy-conserving variant.
    BerVsPower,
    /// Energy-efficiency gain against the broadening factor.
    EeVsBeta,
    /// Total transmit energy against stream length.
    EnergyVsN,
    /// Transmission counts against stream length.
    TxEvents,
    /// Closed forms, EE gains, complexity and link-budget BER at one operating point.
    Analyze(AnalyzeArgs),
    /// Runs every closed-form and symmetry check against its oracle.
    Validate,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Broadening factor, overriding the one implied by the first distance.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Probability of a one bit.
    #[arg(long)]
    pub p: Option<f64>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BerVsSnr => "ber-vs-snr",
            Command::BerVsPower => "ber-vs-power",
            Command::EeVsBeta => "ee-vs-beta",
            Command::EnergyVsN => "energy-vs-n",
            Command::TxEvents => "tx-events",
            Command::Analyze(_) => "analyze",
            Command::Validate => "validate",
        }
    }
}

/// What a run was asked to do, echoed into JSON outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_path: Option<PathBuf>,
    pub subcommand: String,
    pub out_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub format: Format,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error(transparent)]
    Simulation(#[from] thz_ook::Error),
    #[error("{0}")]
    ValidationFailed(String),
}

impl CliError {
    /// Process exit status; 2 is left to argument errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::ValidationFailed(_) => 1,
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Simulation(_) => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ValidationFailed(_) => "validation",
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Simulation(_) => "simulation",
        }
    }

    /// The single-line JSON written to stderr.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        });
        if let CliError::Config(ConfigError::Invalid(list)) = self {
            value["diagnostics"] = serde_json::json!(list);
        }
        value.to_string()
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    manifest: &'a RunManifest,
    /// Only for bodies that do not carry their own hash.
    #[serde(skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    #[serde(flatten)]
    body: &'a T,
}

/// Loads the config, applies overrides, runs the subcommand and writes its
/// files. Returns the written paths.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.sweep.seed = seed;
    }
    if let Command::Analyze(a) = &cli.command {
        if a.beta.is_some() {
            cfg.link.beta_override = a.beta;
        }
        if let Some(p) = a.p {
            cfg.sweep.p = p;
        }
        cfg.validate()?;
    }
    let manifest = RunManifest {
        config_path: cli.config.clone(),
        subcommand: cli.command.name().to_string(),
        out_dir: cli.out.clone(),
        seed_override: cli.seed,
        format: cli.format,
    };
    fs::create_dir_all(&cli.out).map_err(io_err(format!("cannot create {}", cli.out.display())))?;
    log::info!("running {} (config {})", manifest.subcommand, config_hash(&cfg));

    let report = match &cli.command {
        Command::BerVsSnr => montecarlo::run_ber_vs_snr(&cfg)?,
        Command::BerVsPower => montecarlo::run_ber_vs_power(&cfg)?,
        Command::EeVsBeta => montecarlo::run_ee_vs_beta(&cfg)?,
        Command::EnergyVsN => montecarlo::run_energy_vs_n(&cfg)?,
        Command::TxEvents => montecarlo::run_tx_events(&cfg)?,
        Command::Analyze(_) => return write_analysis(&cfg, &manifest),
        Command::Validate => return write_validation(&cfg, &manifest),
    };
    write_report(&report, &manifest)
}

fn write_report(report: &ExperimentReport, manifest: &RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    let stem = manifest.out_dir.join(&manifest.subcommand);
    if manifest.format.csv() {
        let path = stem.with_extension("csv");
        let file = fs::File::create(&path).map_err(io_err(format!("cannot write {}", path.display())))?;
        report.write_csv(io::BufWriter::new(file))?;
        written.push(path);
    }
    if manifest.format.json() {
        let path = stem.with_extension("json");
        write_json(&path, &Envelope { manifest, config_hash: None, body: report })?;
        written.push(path);
    }
    Ok(written)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report serialises");
    fs::write(path, text + "\n").map_err(io_err(format!("cannot write {}", path.display())))
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<(), CliError> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(format!("cannot write {}", path.display())))
}

/// Quotes a CSV field when needed.
fn field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_analysis(cfg: &ExperimentConfig, manifest: &RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let analysis = montecarlo::analyze(cfg)?;
    let stem = manifest.out_dir.join(&manifest.subcommand);
    let mut written = Vec::new();
    // The analysis is nested, so JSON is always written; the CSV holds the
    // closed-form table only.
    let path = stem.with_extension("json");
    write_json(&path, &Envelope { manifest, config_hash: None, body: &analysis })?;
    written.push(path);
    if manifest.format.csv() {
        let path = stem.with_extension("csv");
        let rows = analysis.closed_forms.iter().map(|c| {
            let printed = c.printed.map(|v| format!("{v:e}")).unwrap_or_default();
            format!("{},{:e},{printed},{:e},{:e}", field(&c.name), c.value, c.oracle, c.relative_residual)
        });
        write_rows(&path, "name,value,printed,oracle,relative_residual", rows)?;
        written.push(path);
    }
    println!(
        "β = {:.3}, p = {}: η11 = {}, η10 = {}, exact-accounting η̄ = {:.4}",
        analysis.beta, analysis.p, analysis.ee.eta_11, analysis.ee.eta_10, analysis.ee.average_exact_accounting
    );
    Ok(written)
}

fn write_validation(cfg: &ExperimentConfig, manifest: &RunManifest) -> Result<Vec<PathBuf>, CliError> {
    let report = montecarlo::run_validation_suite(cfg.sweep.seed);
    let stem = manifest.out_dir.join(&manifest.subcommand);
    let mut written = Vec::new();
    if manifest.format.json() {
        let path = stem.with_extension("json");
        write_json(&path, &Envelope { manifest, config_hash: Some(config_hash(cfg)), body: &report })?;
        written.push(path);
    }
    if manifest.format.csv() {
        let path = stem.with_extension("csv");
        let rows = report.checks.iter().map(|c| {
            format!("{},{:e},{:e},{},{},{}", field(&c.name), c.residual, c.tolerance, c.passed, c.asserted, field(&c.detail))
        });
        write_rows(&path, "name,residual,tolerance,passed,asserted,detail", rows)?;
        written.push(path);
    }
    for c in &report.checks {
        let status = match (c.asserted, c.passed) {
            (false, _) => "INFO",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        println!("{status} {} residual {:.2e} (tolerance {:.0e})", c.name, c.residual, c.tolerance);
    }
    if report.passed() {
        Ok(written)
    } else {
        let failed: Vec<&str> =
            report.checks.iter().filter(|c| c.asserted && !c.passed).map(|c| c.name.as_str()).collect();
        Err(CliError::ValidationFailed(format!("failed checks: {}", failed.join(", "))))
    }
}
