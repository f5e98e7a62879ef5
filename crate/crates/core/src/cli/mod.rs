//! Command-line front end (`ridge-sdr`).
//!
//! Subcommands: `sample`, `estimate` (plus the `sir` / `save` shorthands) and
//! `converge`. Every option can also come from a JSON config file passed with
//! `--config`; flags override the file. Output files are written atomically
//! into `--out`.
//!
//! Exit codes: 0 on success, 1 on runtime or numeric failure, 2 on usage or
//! validation errors.

mod commands;
pub mod table;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdrError};
use crate::measures::InputMeasure;
use crate::slicing::SliceScheme;
use crate::types::Method;

pub use commands::{cmd_converge, cmd_estimate, cmd_sample};

#[derive(Debug, Parser)]
#[command(name = "ridge-sdr", version, about = "Ridge recovery with SIR and SAVE")]
pub struct Cli {
    /// Progress logs on stderr.
    #[arg(long, global = true)]
    pub verbose: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw inputs from a built-in model's measure and write samples.csv.
    Sample(RunArgs),
    /// Run SIR or SAVE and write estimate.json, eigvecs.csv, summary_plot.csv.
    Estimate(RunArgs),
    /// `estimate --method sir`.
    Sir(RunArgs),
    /// `estimate --method save`.
    Save(RunArgs),
    /// Monte Carlo convergence study; writes study.csv and study.json.
    Converge(RunArgs),
}

/// Flags shared by all subcommands. Each mirrors a [`RunConfig`] field.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in model: quad1, quad3 or hartmann.
    #[arg(long)]
    pub function: Option<String>,
    /// Ingest samples from a CSV with header x1,...,xm,y.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Ingested inputs are already standardized.
    #[arg(long)]
    pub standardized: bool,
    /// Number of samples N.
    #[arg(long = "n-samples", short = 'N')]
    pub n_samples: Option<usize>,
    /// Number of slices R.
    #[arg(long)]
    pub slices: Option<usize>,
    #[arg(long = "slice-scheme", value_enum)]
    pub scheme: Option<SliceScheme>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// Subspace dimension n.
    #[arg(long)]
    pub n: Option<usize>,
    /// Sample seed (master seed for `converge`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seed for the random quadratic coefficients.
    #[arg(long = "function-seed")]
    pub function_seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Study sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Trials per sample size.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Sample count of the truth surrogate.
    #[arg(long = "truth-samples")]
    pub truth_samples: Option<usize>,
    /// Cache directory for truth surrogates.
    #[arg(long = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
    /// Bootstrap resamples for eigenvalue envelopes (estimate only).
    #[arg(long)]
    pub bootstrap: Option<usize>,
}

/// Explicit moments used to standardize ingested inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// Resolved run configuration: the JSON config file merged with flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<InputMeasure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<MomentSpec>,
    #[serde(default)]
    pub standardized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slices: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SliceScheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

/// Where the samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Function(String),
    Input(PathBuf),
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Overrides fields with every flag that was given.
    pub fn apply(&mut self, a: &RunArgs) {
        fn set<T: Clone>(dst: &mut Option<T>, src: &Option<T>) {
            if src.is_some() {
                dst.clone_from(src);
            }
        }
        set(&mut self.function, &a.function);
        set(&mut self.input, &a.input);
        set(&mut self.n_samples, &a.n_samples);
        set(&mut self.slices, &a.slices);
        set(&mut self.scheme, &a.scheme);
        set(&mut self.method, &a.method);
        set(&mut self.n, &a.n);
        set(&mut self.seed, &a.seed);
        set(&mut self.function_seed, &a.function_seed);
        set(&mut self.output_dir, &a.out);
        set(&mut self.sizes, &a.sizes);
        set(&mut self.trials, &a.trials);
        set(&mut self.truth_samples, &a.truth_samples);
        set(&mut self.cache_dir, &a.cache_dir);
        set(&mut self.bootstrap, &a.bootstrap);
        self.standardized |= a.standardized;
    }

    /// Reads `--config` (if any) and applies the flags on top.
    pub fn resolve(a: &RunArgs) -> Result<Self> {
        let mut cfg = match &a.config {
            Some(path) => Self::from_json(&std::fs::read_to_string(path)?)?,
            None => Self::default(),
        };
        cfg.apply(a);
        Ok(cfg)
    }

    /// Exactly one of a built-in function or an ingestion path.
    pub fn source(&self) -> Result<Source> {
        match (&self.function, &self.input) {
            (Some(f), None) => Ok(Source::Function(f.clone())),
            (None, Some(p)) => Ok(Source::Input(p.clone())),
            (Some(_), Some(_)) => Err(SdrError::InvalidArgument(
                "give either a built-in function or an input file, not both".into(),
            )),
            (None, None) => Err(SdrError::InvalidArgument(
                "no samples: give --function or --input".into(),
            )),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

/// Parses the command line, runs it, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let (args, forced) = match &cli.command {
        Command::Sample(a) | Command::Estimate(a) | Command::Converge(a) => (a, None),
        Command::Sir(a) => (a, Some(Method::Sir)),
        Command::Save(a) => (a, Some(Method::Save)),
    };
    let mut cfg = RunConfig::resolve(args)?;
    if let Some(m) = forced {
        cfg.method = Some(m);
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(SdrError::InvalidArgument("--threads must be >= 1".into()));
        }
        // Fails only if the pool already exists (library callers); keep it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let log = Logger(cli.verbose);
    match &cli.command {
        Command::Sample(_) => cmd_sample(&cfg, &log),
        Command::Estimate(_) | Command::Sir(_) | Command::Save(_) => cmd_estimate(&cfg, &log),
        Command::Converge(_) => cmd_converge(&cfg, &log),
    }
}

/// Stderr progress log, silent unless `--verbose`.
#[derive(Debug, Clone, Copy)]
pub struct Logger(pub bool);

impl Logger {
    pub fn log(&self, msg: impl AsRef<str>) {
        if self.0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}
