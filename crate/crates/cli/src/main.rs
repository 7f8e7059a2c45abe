use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use corrhub_cli::{cmd_curves, cmd_detect, cmd_gen_cov, cmd_simulate, cmd_validate, CliError, RunConfig};

type Runner = fn(&RunConfig) -> Result<i32, CliError>;

#[derive(Parser)]
#[command(name = "corrhub", version, about = "Quickest detection of correlation hubs in Gaussian streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detector over CSV input (stdin when no file is given)
    Detect(Opts),
    /// Generate a row-sparse covariance and its ground truth
    GenCov(Opts),
    /// Monte-Carlo false-isolation and MFA/delay curves
    Curves(Opts),
    /// Null-law validation suite
    Validate(Opts),
    /// Write a simulated stream as CSV
    Simulate(Opts),
}

/// Every flag mirrors the config key of the same name (with `-` for `_`)
/// and overrides the config file.
#[derive(clap::Args)]
struct Opts {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV files, read in order as one stream
    files: Vec<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    p: Option<String>,
    /// Sets both a_u and a_v
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    a_u: Option<String>,
    #[arg(long)]
    a_v: Option<String>,
    #[arg(long)]
    eps_u: Option<String>,
    #[arg(long)]
    eps_v: Option<String>,
    #[arg(long)]
    q: Option<String>,
    /// Lookback in batches, or `none`
    #[arg(long)]
    window: Option<String>,
    /// one-sided or two-sided
    #[arg(long)]
    sidedness: Option<String>,
    /// Change batch, or `inf`
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Comma-separated input files
    #[arg(long)]
    input: Option<String>,
    #[arg(short, long)]
    output: Option<String>,
    /// Comma-separated ascending thresholds
    #[arg(long)]
    thresholds: Option<String>,
    /// Reference scenario 1, 2 or 3
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    j: Option<String>,
    #[arg(long)]
    diag_boost: Option<String>,
    #[arg(long)]
    partner_sum: Option<String>,
    #[arg(long)]
    delay_paths: Option<String>,
    #[arg(long)]
    mfa_paths: Option<String>,
    #[arg(long)]
    cap: Option<String>,
    #[arg(long)]
    calib_batches: Option<String>,
    #[arg(long)]
    batches: Option<String>,
    #[arg(long)]
    mean_shift: Option<String>,
}

impl Opts {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let pairs = [
            ("n", self.n),
            ("p", self.p),
            ("threshold", self.threshold),
            ("a_u", self.a_u),
            ("a_v", self.a_v),
            ("eps_u", self.eps_u),
            ("eps_v", self.eps_v),
            ("q", self.q),
            ("window", self.window),
            ("sidedness", self.sidedness),
            ("gamma", self.gamma),
            ("paths", self.paths),
            ("seed", self.seed),
            ("input", self.input),
            ("output", self.output),
            ("thresholds", self.thresholds),
            ("scenario", self.scenario),
            ("j", self.j),
            ("diag_boost", self.diag_boost),
            ("partner_sum", self.partner_sum),
            ("delay_paths", self.delay_paths),
            ("mfa_paths", self.mfa_paths),
            ("cap", self.cap),
            ("calib_batches", self.calib_batches),
            ("batches", self.batches),
            ("mean_shift", self.mean_shift),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, &v).map_err(|e| CliError::Usage(format!("--{}: {e}", key.replace('_', "-"))))?;
            }
        }
        if !self.files.is_empty() {
            cfg.input = self.files;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (opts, run): (Opts, Runner) = match cli.command {
        Command::Detect(o) => (o, cmd_detect),
        Command::GenCov(o) => (o, cmd_gen_cov),
        Command::Curves(o) => (o, cmd_curves),
        Command::Validate(o) => (o, cmd_validate),
        Command::Simulate(o) => (o, cmd_simulate),
    };
    match opts.resolve().and_then(|cfg| run(&cfg)) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("corrhub: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
