//! Subcommand bodies.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::table::{fmt_f64, read_samples, table_bytes, write_samples};
use super::{Logger, RunConfig, Source};
use crate::error::{Result, SdrError};
use crate::estimators::relative_gaps;
use crate::experiments::{
    bootstrap_eigenvalues, run_convergence, summary_plot_data, write_atomic, BootstrapResult,
    ConvergenceStudy, EstimatorConfig, SizeSummary, StudyConfig, DEFAULT_TRUTH_SAMPLES,
};
use crate::measures::{fit_standardizer, pushforward_direction, standardize, InputMeasure, Standardizer};
use crate::rng::hash64;
use crate::slicing::{default_slice_count, SliceScheme};
use crate::testfns::{TestFunction, CANONICAL_SEED};
use crate::types::{validate_sample_set, Method, SampleSet};

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_SIZES: [usize; 3] = [1_000, 10_000, 100_000];
pub const DEFAULT_TRIALS: usize = 10;
/// Stream for bootstrap resampling, separate from the sample stream.
const BOOTSTRAP_STREAM: u64 = 0xB007;

fn to_json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(v)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn prepare_out(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.out_dir();
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn test_function(cfg: &RunConfig, name: &str) -> Result<TestFunction> {
    TestFunction::by_name(name, cfg.function_seed.unwrap_or(CANONICAL_SEED))
}

fn measure_for(cfg: &RunConfig, f: &TestFunction) -> Result<InputMeasure> {
    let m = cfg.measure.clone().unwrap_or_else(|| f.default_measure());
    m.validate()?;
    Ok(m)
}

#[derive(Serialize)]
struct SampleMeta<'a> {
    function: &'a str,
    function_seed: u64,
    measure: &'a InputMeasure,
    seed: u64,
    n_samples: usize,
    standardized: bool,
    /// `log` when the columns are log inputs (the model sees `exp(x)`).
    coordinates: &'static str,
}

pub fn cmd_sample(cfg: &RunConfig, log: &Logger) -> Result<()> {
    let name = match cfg.source()? {
        Source::Function(f) => f,
        Source::Input(_) => {
            return Err(SdrError::InvalidArgument("sample needs a built-in --function".into()))
        }
    };
    let f = test_function(cfg, &name)?;
    let measure = measure_for(cfg, &f)?;
    let n = cfg.n_samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = cfg.seed.unwrap_or(0);
    let dir = prepare_out(cfg)?;
    log.log(format!("sampling {n} points from {name} (seed {seed})"));
    let s = f.sample(&measure, n, seed)?;
    write_samples(&dir.join("samples.csv"), &s)?;
    let meta = SampleMeta {
        function: f.name(),
        function_seed: cfg.function_seed.unwrap_or(CANONICAL_SEED),
        measure: &measure,
        seed,
        n_samples: n,
        standardized: false,
        coordinates: if measure.log_transform { "log" } else { "linear" },
    };
    write_atomic(&dir.join("samples.json"), &to_json(&meta)?)?;
    log.log(format!("wrote {}", dir.join("samples.csv").display()));
    Ok(())
}

/// Standardized samples plus the map back to original coordinates (`None`
/// when the ingested inputs were declared standardized).
struct Prepared {
    samples: SampleSet,
    /// Default subspace dimension: the model's ridge dimension, else 1.
    default_n: usize,
    standardizer: Option<Standardizer>,
    source: serde_json::Value,
}

fn ingest(cfg: &RunConfig, path: &Path) -> Result<Prepared> {
    let raw = read_samples(path)?;
    let violations = validate_sample_set(&raw);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(SdrError::InvalidSampleSet(list.join("; ")));
    }
    let explicit = [cfg.standardized, cfg.measure.is_some(), cfg.standardizer.is_some()]
        .iter()
        .filter(|&&b| b)
        .count();
    if explicit != 1 {
        return Err(SdrError::InvalidArgument(
            "ingested samples need exactly one of --standardized, a `measure` block or a \
             `standardizer` block in the config"
                .into(),
        ));
    }
    let standardizer = if cfg.standardized {
        None
    } else if let Some(m) = &cfg.measure {
        m.validate()?;
        Some(fit_standardizer(m)?)
    } else {
        let spec = cfg.standardizer.as_ref().expect("counted above");
        Some(Standardizer::from_moments(spec.mean.clone(), spec.cov.clone())?)
    };
    let samples = match &standardizer {
        None => raw.assume_standardized(),
        Some(st) => standardize(&raw, st)?,
    };
    Ok(Prepared {
        samples,
        default_n: 1,
        standardizer,
        source: serde_json::json!({ "input": path }),
    })
}

fn generate(cfg: &RunConfig, name: &str, log: &Logger) -> Result<Prepared> {
    let f = test_function(cfg, name)?;
    let measure = measure_for(cfg, &f)?;
    let n = cfg.n_samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = cfg.seed.unwrap_or(0);
    log.log(format!("sampling {n} points from {name} (seed {seed})"));
    let st = fit_standardizer(&measure)?;
    let samples = standardize(&f.sample(&measure, n, seed)?, &st)?;
    Ok(Prepared {
        samples,
        default_n: f.true_subspace().dim(),
        standardizer: Some(st),
        source: serde_json::json!({
            "function": f.name(),
            "function_seed": cfg.function_seed.unwrap_or(CANONICAL_SEED),
            "measure": measure,
            "seed": seed,
        }),
    })
}

#[derive(Serialize)]
struct EstimateReport {
    source: serde_json::Value,
    method: Method,
    n: usize,
    m: usize,
    n_samples: usize,
    slices_requested: usize,
    /// Realized number of slices after merging.
    slices: usize,
    scheme: SliceScheme,
    boundaries: Vec<f64>,
    slice_counts: Vec<usize>,
    slice_weights: Vec<f64>,
    n_r_min: usize,
    degenerate_partition: bool,
    eigenvalues: Vec<f64>,
    gaps: Vec<f64>,
    relative_gaps: Vec<f64>,
    /// Leading directions mapped back to the original input coordinates.
    #[serde(skip_serializing_if = "Option::is_none")]
    original_directions: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bootstrap: Option<BootstrapResult>,
}

pub fn cmd_estimate(cfg: &RunConfig, log: &Logger) -> Result<()> {
    let method = cfg.method.ok_or_else(|| {
        SdrError::InvalidArgument("no estimator: give --method sir|save or use `sir` / `save`".into())
    })?;
    let prepared = match cfg.source()? {
        Source::Function(name) => generate(cfg, &name, log)?,
        Source::Input(path) => ingest(cfg, &path)?,
    };
    let s = &prepared.samples;
    let m = s.dim();
    let n = cfg.n.unwrap_or(prepared.default_n);
    if n > m {
        return Err(SdrError::DimensionTooLarge { n, m });
    }
    let slices = cfg.slices.unwrap_or_else(|| default_slice_count(s.len()).min(s.len()));
    let est_cfg = EstimatorConfig {
        method,
        slices,
        scheme: cfg.scheme.unwrap_or(SliceScheme::EqualCount),
        n,
    };
    let dir = prepare_out(cfg)?;
    log.log(format!("running {method} with R = {slices} on {} samples", s.len()));
    let est = est_cfg.run(s)?;
    let gaps = relative_gaps(&est);

    let original_directions = match &prepared.standardizer {
        Some(st) => Some(
            (0..n)
                .map(|k| {
                    let w = est.spectrum.eigenvectors().column(k).into_owned();
                    Ok(pushforward_direction(st, &w)?.as_slice().to_vec())
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let bootstrap = match cfg.bootstrap {
        Some(b) => {
            log.log(format!("bootstrap with {b} resamples"));
            let seed = hash64(cfg.seed.unwrap_or(0), BOOTSTRAP_STREAM);
            Some(bootstrap_eigenvalues(s, &est_cfg, b, seed)?)
        }
        None => None,
    };

    let part = &est.partition;
    let counts = part.counts();
    let report = EstimateReport {
        source: prepared.source.clone(),
        method,
        n,
        m,
        n_samples: s.len(),
        slices_requested: slices,
        slices: part.len(),
        scheme: part.scheme(),
        boundaries: part.boundaries().to_vec(),
        slice_weights: counts.iter().map(|&c| c as f64 / s.len() as f64).collect(),
        slice_counts: counts,
        n_r_min: part.min_count(),
        degenerate_partition: part.is_degenerate(),
        eigenvalues: est.eigenvalues().as_slice().to_vec(),
        gaps: gaps.gaps,
        relative_gaps: gaps.relative,
        original_directions,
        bootstrap,
    };

    // Columns w1..wm of Ŵ; row j holds component j.
    let w = est.spectrum.eigenvectors();
    let header: Vec<String> = (1..=m).map(|k| format!("w{k}")).collect();
    let rows = (0..m).map(|j| (0..m).map(|k| fmt_f64(w[(j, k)])).collect::<Vec<_>>());
    let eigvecs = table_bytes(&header, rows)?;

    let dims = n.min(2);
    let plot = summary_plot_data(s, &est, dims)?;
    let mut header: Vec<String> = (1..=dims).map(|k| format!("t{k}")).collect();
    header.push("y".into());
    let rows = plot.coords.iter().zip(&plot.outputs).map(|(c, y)| {
        c.iter()
            .map(|v| fmt_f64(*v))
            .chain(std::iter::once(fmt_f64(*y)))
            .collect::<Vec<_>>()
    });
    let summary = table_bytes(&header, rows)?;

    write_atomic(&dir.join("estimate.json"), &to_json(&report)?)?;
    write_atomic(&dir.join("eigvecs.csv"), &eigvecs)?;
    write_atomic(&dir.join("summary_plot.csv"), &summary)?;
    log.log(format!("wrote estimate to {}", dir.display()));
    Ok(())
}

/// Builds the study configuration, filling defaults.
pub fn study_config(cfg: &RunConfig) -> Result<StudyConfig> {
    let function = match cfg.source()? {
        Source::Function(f) => f,
        Source::Input(_) => {
            return Err(SdrError::InvalidArgument(
                "converge needs a built-in --function (studies draw fresh samples)".into(),
            ))
        }
    };
    let method = cfg.method.ok_or_else(|| SdrError::InvalidArgument("no estimator: give --method sir|save".into()))?;
    let f = test_function(cfg, &function)?;
    let sizes = cfg.sizes.clone().unwrap_or_else(|| DEFAULT_SIZES.to_vec());
    let smallest = sizes.first().copied().unwrap_or(0);
    let largest = sizes.iter().copied().max().unwrap_or(0);
    let estimator = EstimatorConfig {
        method,
        slices: cfg.slices.unwrap_or_else(|| default_slice_count(smallest)),
        scheme: cfg.scheme.unwrap_or(SliceScheme::EqualCount),
        n: cfg.n.unwrap_or_else(|| f.true_subspace().dim()),
    };
    let mut study = StudyConfig::new(
        &function,
        estimator,
        sizes,
        cfg.trials.unwrap_or(DEFAULT_TRIALS),
        cfg.seed.unwrap_or(0),
    );
    study.function_seed = cfg.function_seed.unwrap_or(CANONICAL_SEED);
    study.measure = cfg.measure.clone();
    study.truth_samples = cfg
        .truth_samples
        .unwrap_or_else(|| DEFAULT_TRUTH_SAMPLES.max(10 * largest));
    study.cache_dir = cfg.cache_dir.clone();
    Ok(study)
}

#[derive(Serialize)]
struct StudyReport<'a> {
    config: &'a StudyConfig,
    truth_eigenvalues: &'a [f64],
    summaries: &'a [SizeSummary],
    #[serde(skip_serializing_if = "Option::is_none")]
    eig_mse_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    subspace_slope: Option<f64>,
    distance_inversions: usize,
    warnings: &'a [String],
}

fn study_csv(study: &ConvergenceStudy) -> Result<Vec<u8>> {
    let header: Vec<String> = ["N", "trial", "N_r_min", "eig_mse_norm", "subspace_dist"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = study.records.iter().map(|r| {
        vec![
            r.n_samples.to_string(),
            r.trial.to_string(),
            r.n_r_min.to_string(),
            fmt_f64(r.eig_mse_norm),
            fmt_f64(r.subspace_dist),
        ]
    });
    table_bytes(&header, rows)
}

pub fn cmd_converge(cfg: &RunConfig, log: &Logger) -> Result<()> {
    let study_cfg = study_config(cfg)?;
    study_cfg.validate()?;
    let dir = prepare_out(cfg)?;
    log.log(format!(
        "study: {} / {} / R = {} / sizes {:?} / {} trials / truth N = {}",
        study_cfg.function,
        study_cfg.estimator.method,
        study_cfg.estimator.slices,
        study_cfg.sizes,
        study_cfg.trials,
        study_cfg.truth_samples
    ));
    let study = run_convergence(&study_cfg)?;
    for w in &study.warnings {
        log.log(format!("warning: {w}"));
    }
    let report = StudyReport {
        config: &study.config,
        truth_eigenvalues: &study.truth_eigenvalues,
        summaries: &study.summaries,
        eig_mse_slope: study.eig_mse_slope,
        subspace_slope: study.subspace_slope,
        distance_inversions: study.distance_inversions,
        warnings: &study.warnings,
    };
    write_atomic(&dir.join("study.csv"), &study_csv(&study)?)?;
    write_atomic(&dir.join("study.json"), &to_json(&report)?)?;
    log.log(format!("wrote study to {}", dir.display()));
    Ok(())
}
