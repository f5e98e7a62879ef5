//! Monte Carlo convergence studies, truth surrogates, bootstrap eigenvalue
//! ranges and sufficient-summary-plot data.
//!
//! A study draws `T` independent sample sets at each size `N`, runs SIR or
//! SAVE on each, and compares against a surrogate truth computed once from a
//! much larger sample:
//!
//! - normalized eigenvalue error `max_k (λ̂_k − λ_k)² / λ₁²`
//! - subspace distance between the leading `n`-dimensional eigenspaces
//!
//! Log–log slopes are ordinary least squares of `log10(trial mean)` against
//! `log10(N)`, and need at least three sizes.
//!
//! Seeds: trial `t` at size index `k` uses `derive_seed(master, [k, t])`, the
//! truth surrogate uses `derive_seed(master, [TRUTH_STREAM])`, and bootstrap
//! resample `b` uses `hash64(seed, b)`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdrError};
use crate::estimators::estimate;
use crate::measures::{fit_standardizer, standardize, InputMeasure};
use crate::rng::{derive_seed, hash64, rng_from_seed};
use crate::slicing::SliceScheme;
use crate::spectral::{decompose, subspace_distance};
use crate::testfns::{TestFunction, CANONICAL_SEED};
use crate::types::{Method, SampleSet, SdrEstimate, SymmetricSpectrum};

/// Stream index reserved for the truth-surrogate sample.
pub const TRUTH_STREAM: u64 = u64::MAX;

/// Default truth-surrogate sample size.
pub const DEFAULT_TRUTH_SAMPLES: usize = 1_000_000;

/// Estimator settings shared by single runs, studies and the bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    pub slices: usize,
    pub scheme: SliceScheme,
    /// Requested subspace dimension.
    pub n: usize,
}

impl EstimatorConfig {
    pub fn run(&self, s: &SampleSet) -> Result<SdrEstimate> {
        estimate(s, self.slices, self.scheme, self.method, self.n)
    }
}

/// Draws `n` inputs from `measure`, evaluates `f`, and standardizes the inputs
/// with the measure's exact moments.
pub fn standardized_sample(
    f: &TestFunction,
    measure: &InputMeasure,
    n: usize,
    seed: u64,
) -> Result<SampleSet> {
    let raw = f.sample(measure, n, seed)?;
    standardize(&raw, &fit_standardizer(measure)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Built-in model name (`quad1`, `quad3`, `hartmann`).
    pub function: String,
    /// Seed for the quadratic parameters `b`, `B`.
    #[serde(default = "default_function_seed")]
    pub function_seed: u64,
    /// Input measure; the model's default when absent.
    #[serde(default)]
    pub measure: Option<InputMeasure>,
    pub estimator: EstimatorConfig,
    /// Ascending sample sizes.
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    pub truth_samples: usize,
    /// Directory for cached truth surrogates; no caching when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

fn default_function_seed() -> u64 {
    CANONICAL_SEED
}

impl StudyConfig {
    pub fn new(function: &str, estimator: EstimatorConfig, sizes: Vec<usize>, trials: usize, master_seed: u64) -> Self {
        let truth_samples = DEFAULT_TRUTH_SAMPLES.max(10 * sizes.iter().copied().max().unwrap_or(0));
        Self {
            function: function.to_string(),
            function_seed: CANONICAL_SEED,
            measure: None,
            estimator,
            sizes,
            trials,
            master_seed,
            truth_samples,
            cache_dir: None,
        }
    }

    pub fn test_function(&self) -> Result<TestFunction> {
        TestFunction::by_name(&self.function, self.function_seed)
    }

    pub fn input_measure(&self, f: &TestFunction) -> InputMeasure {
        self.measure.clone().unwrap_or_else(|| f.default_measure())
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(SdrError::InvalidArgument("study needs at least one sample size".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SdrError::InvalidArgument("sample sizes must be strictly ascending".into()));
        }
        if self.trials == 0 {
            return Err(SdrError::InvalidArgument("trial count must be >= 1".into()));
        }
        let largest = *self.sizes.last().expect("nonempty");
        if self.truth_samples < 10 * largest {
            return Err(SdrError::InvalidArgument(format!(
                "truth surrogate needs at least 10x the largest size ({} < {})",
                self.truth_samples,
                10 * largest
            )));
        }
        let f = self.test_function()?;
        let measure = self.input_measure(&f);
        measure.validate()?;
        if measure.dim() != f.dim() {
            return Err(SdrError::DimensionMismatch(format!(
                "{} takes {} inputs, measure has dimension {}",
                f.name(),
                f.dim(),
                measure.dim()
            )));
        }
        if self.estimator.n == 0 || self.estimator.n > f.dim() {
            return Err(SdrError::DimensionTooLarge {
                n: self.estimator.n,
                m: f.dim(),
            });
        }
        Ok(())
    }

    pub fn truth_seed(&self) -> u64 {
        derive_seed(self.master_seed, &[TRUTH_STREAM])
    }

    pub fn trial_seed(&self, size_index: usize, trial: usize) -> u64 {
        derive_seed(self.master_seed, &[size_index as u64, trial as u64])
    }

    /// Cache key: model, estimator, slicing, truth size and seed (plus a
    /// digest of the model parameters and measure).
    pub fn truth_cache_key(&self) -> Result<String> {
        let f = self.test_function()?;
        let measure_json = serde_json::to_string(&self.input_measure(&f))?;
        let digest = measure_json
            .bytes()
            .fold(self.function_seed, |acc, b| hash64(acc, u64::from(b)));
        Ok(format!(
            "{}-{}-r{}-{}-n{}-s{}-{:016x}",
            self.function,
            self.estimator.method,
            self.estimator.slices,
            self.estimator.scheme,
            self.truth_samples,
            self.truth_seed(),
            digest
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct CachedTruth {
    key: String,
    matrix: Vec<Vec<f64>>,
}

/// High-`N` estimate standing in for the population matrix.
///
/// Uses a dedicated seed. With `cache_dir` set, the estimator matrix is stored
/// as `truth-<key>.json` (written to a temporary file and renamed, so readers
/// never see partial files) and later calls decompose the cached matrix, which
/// reproduces the spectrum bit for bit.
pub fn truth_surrogate(cfg: &StudyConfig) -> Result<SymmetricSpectrum> {
    let key = cfg.truth_cache_key()?;
    let path = cfg.cache_dir.as_ref().map(|d| d.join(format!("truth-{key}.json")));

    if let Some(p) = &path {
        if let Ok(text) = fs::read_to_string(p) {
            if let Ok(cached) = serde_json::from_str::<CachedTruth>(&text) {
                if cached.key == key {
                    let m = cached.matrix.len();
                    let mat = DMatrix::from_fn(m, m, |i, j| cached.matrix[i][j]);
                    return decompose(&mat);
                }
            }
        }
    }

    let f = cfg.test_function()?;
    let measure = cfg.input_measure(&f);
    let s = standardized_sample(&f, &measure, cfg.truth_samples, cfg.truth_seed())?;
    let est = cfg.estimator.run(&s)?;
    let spectrum = est.spectrum;

    if let Some(p) = &path {
        let mat = spectrum.matrix();
        let cached = CachedTruth {
            key,
            matrix: mat.row_iter().map(|r| r.iter().copied().collect()).collect(),
        };
        write_atomic(p, serde_json::to_string(&cached)?.as_bytes())?;
    }
    Ok(spectrum)
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| SdrError::Io(e.error))?;
    Ok(())
}

/// `max_k (λ̂_k − λ_k)² / λ₁²` with `λ` the truth spectrum.
pub fn normalized_eigenvalue_error(estimated: &[f64], truth: &[f64]) -> Result<f64> {
    if estimated.len() != truth.len() || truth.is_empty() {
        return Err(SdrError::DimensionMismatch(format!(
            "{} estimated eigenvalues, {} true eigenvalues",
            estimated.len(),
            truth.len()
        )));
    }
    let lead = truth[0];
    if lead <= 0.0 {
        return Err(SdrError::InvalidArgument(
            "truth spectrum has a nonpositive leading eigenvalue".into(),
        ));
    }
    Ok(estimated
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t) * (e - t))
        .fold(0.0, f64::max)
        / (lead * lead))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n_samples: usize,
    pub trial: usize,
    pub n_r_min: usize,
    pub slices: usize,
    pub eig_mse_norm: f64,
    pub subspace_dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n_samples: usize,
    pub mean_eig_mse_norm: f64,
    pub mean_subspace_dist: f64,
    pub mean_n_r_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub config: StudyConfig,
    pub truth_eigenvalues: Vec<f64>,
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<SizeSummary>,
    /// Slope of `log10(mean eig error)` against `log10(N)`.
    pub eig_mse_slope: Option<f64>,
    /// Slope of `log10(mean subspace distance)` against `log10(N)`.
    pub subspace_slope: Option<f64>,
    /// Adjacent sizes where the mean subspace distance increased.
    pub distance_inversions: usize,
    pub warnings: Vec<String>,
}

impl ConvergenceStudy {
    /// Subspace distances of every trial at sample size `n`.
    pub fn distances_at(&self, n: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.n_samples == n)
            .map(|r| r.subspace_dist)
            .collect()
    }

    pub fn summary_at(&self, n: usize) -> Option<&SizeSummary> {
        self.summaries.iter().find(|s| s.n_samples == n)
    }
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn log_log_slope(sizes: &[usize], values: &[f64]) -> Option<f64> {
    if values.iter().any(|v| *v <= 0.0 || !v.is_finite()) {
        return None;
    }
    let x: Vec<f64> = sizes.iter().map(|&n| (n as f64).log10()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.log10()).collect();
    ols_slope(&x, &y)
}

/// Runs `T` trials at every size and fits convergence slopes.
///
/// Any failed trial aborts the whole study.
pub fn run_convergence(cfg: &StudyConfig) -> Result<ConvergenceStudy> {
    let truth = truth_surrogate(cfg)?;
    run_convergence_with_truth(cfg, &truth)
}

/// [`run_convergence`] against a precomputed truth spectrum.
pub fn run_convergence_with_truth(cfg: &StudyConfig, truth: &SymmetricSpectrum) -> Result<ConvergenceStudy> {
    cfg.validate()?;
    let f = cfg.test_function()?;
    let measure = cfg.input_measure(&f);
    let truth_subspace = truth.leading_subspace(cfg.estimator.n)?;
    let truth_eigs = truth.eigenvalues().as_slice().to_vec();

    let jobs: Vec<(usize, usize, usize)> = cfg
        .sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &n)| (0..cfg.trials).map(move |t| (k, n, t)))
        .collect();

    let records: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(k, n, t)| {
            let run = || -> Result<TrialRecord> {
                let s = standardized_sample(&f, &measure, n, cfg.trial_seed(k, t))?;
                let est = cfg.estimator.run(&s)?;
                Ok(TrialRecord {
                    n_samples: n,
                    trial: t,
                    n_r_min: est.partition.min_count(),
                    slices: est.partition.len(),
                    eig_mse_norm: normalized_eigenvalue_error(est.eigenvalues().as_slice(), &truth_eigs)?,
                    subspace_dist: subspace_distance(&truth_subspace, &est.subspace())?,
                })
            };
            run().map_err(|e| SdrError::TrialFailed {
                n,
                trial: t,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;

    let summaries: Vec<SizeSummary> = cfg
        .sizes
        .iter()
        .map(|&n| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.n_samples == n).collect();
            let t = rs.len() as f64;
            SizeSummary {
                n_samples: n,
                mean_eig_mse_norm: rs.iter().map(|r| r.eig_mse_norm).sum::<f64>() / t,
                mean_subspace_dist: rs.iter().map(|r| r.subspace_dist).sum::<f64>() / t,
                mean_n_r_min: rs.iter().map(|r| r.n_r_min as f64).sum::<f64>() / t,
            }
        })
        .collect();

    let mut warnings = Vec::new();
    let (eig_mse_slope, subspace_slope) = if cfg.sizes.len() >= 3 {
        let eig: Vec<f64> = summaries.iter().map(|s| s.mean_eig_mse_norm).collect();
        let dist: Vec<f64> = summaries.iter().map(|s| s.mean_subspace_dist).collect();
        (log_log_slope(&cfg.sizes, &eig), log_log_slope(&cfg.sizes, &dist))
    } else {
        warnings.push(format!(
            "slope fit needs at least 3 sample sizes, got {}; slopes omitted",
            cfg.sizes.len()
        ));
        (None, None)
    };

    let distance_inversions = summaries
        .windows(2)
        .filter(|w| w[1].mean_subspace_dist > w[0].mean_subspace_dist)
        .count();
    if distance_inversions > 0 {
        warnings.push(format!(
            "mean subspace distance increased between {distance_inversions} pair(s) of adjacent sizes"
        ));
    }

    Ok(ConvergenceStudy {
        config: cfg.clone(),
        truth_eigenvalues: truth_eigs,
        records,
        summaries,
        eig_mse_slope,
        subspace_slope,
        distance_inversions,
        warnings,
    })
}

/// Outcome of comparing subspace errors at a large-gap and a small-gap `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapDependenceReport {
    pub n_large_gap: usize,
    pub n_small_gap: usize,
    pub n_samples: usize,
    pub mean_dist_large_gap: f64,
    pub mean_dist_small_gap: f64,
    /// Mean distance at the large-gap `n` is strictly smaller.
    pub strict: bool,
    /// Means are equal; the comparison passes only in the non-strict sense.
    pub non_strict_fallback: bool,
}

impl GapDependenceReport {
    pub fn passed(&self) -> bool {
        self.strict || self.non_strict_fallback
    }

    /// `mean_dist_small_gap / mean_dist_large_gap`.
    pub fn ratio(&self) -> f64 {
        self.mean_dist_small_gap / self.mean_dist_large_gap
    }
}

/// Compares mean subspace distances at two dimensions `n`; the subspace error
/// is expected to shrink with the eigenvalue gap after `n`.
pub fn compare_gap_distances(
    n_large_gap: usize,
    large_gap: &[f64],
    n_small_gap: usize,
    small_gap: &[f64],
    n_samples: usize,
) -> Result<GapDependenceReport> {
    if large_gap.is_empty() || small_gap.is_empty() {
        return Err(SdrError::InvalidArgument("no trials to compare".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a, b) = (mean(large_gap), mean(small_gap));
    Ok(GapDependenceReport {
        n_large_gap,
        n_small_gap,
        n_samples,
        mean_dist_large_gap: a,
        mean_dist_small_gap: b,
        strict: a < b,
        non_strict_fallback: a == b,
    })
}

/// Compares two studies that differ only in the subspace dimension `n`, at
/// the largest sample size.
pub fn gap_dependence_check(large_gap: &ConvergenceStudy, small_gap: &ConvergenceStudy) -> Result<GapDependenceReport> {
    let (ca, cb) = (&large_gap.config, &small_gap.config);
    let same = ca.function == cb.function
        && ca.function_seed == cb.function_seed
        && ca.measure == cb.measure
        && ca.sizes == cb.sizes
        && ca.estimator.method == cb.estimator.method;
    if !same {
        return Err(SdrError::InvalidArgument(
            "gap comparison needs studies sharing function, measure, method and sizes".into(),
        ));
    }
    let n = *ca.sizes.last().expect("validated study");
    compare_gap_distances(
        ca.estimator.n,
        &large_gap.distances_at(n),
        cb.estimator.n,
        &small_gap.distances_at(n),
        n,
    )
}

/// Bootstrap envelopes of the estimated eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub resamples: usize,
    pub point: Vec<f64>,
    /// Per-eigenvalue minimum over the resamples and the point estimate.
    pub lower: Vec<f64>,
    /// Per-eigenvalue maximum over the resamples and the point estimate.
    pub upper: Vec<f64>,
}

/// Resamples `(x, y)` pairs with replacement and reruns the full pipeline,
/// re-slicing every resample.
pub fn bootstrap_eigenvalues(
    s: &SampleSet,
    cfg: &EstimatorConfig,
    resamples: usize,
    seed: u64,
) -> Result<BootstrapResult> {
    if resamples < 2 {
        return Err(SdrError::InvalidArgument("bootstrap needs at least 2 resamples".into()));
    }
    let point = cfg.run(s)?.eigenvalues().as_slice().to_vec();
    let n = s.len();
    let draws: Vec<Vec<f64>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_from_seed(hash64(seed, b as u64));
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            Ok(cfg.run(&s.select(&idx))?.eigenvalues().as_slice().to_vec())
        })
        .collect::<Result<_>>()?;

    let mut lower = point.clone();
    let mut upper = point.clone();
    for d in &draws {
        for (k, v) in d.iter().enumerate() {
            lower[k] = lower[k].min(*v);
            upper[k] = upper[k].max(*v);
        }
    }
    Ok(BootstrapResult {
        resamples,
        point,
        lower,
        upper,
    })
}

/// Outputs paired with projections onto the leading estimated directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryPlotData {
    /// `coords[i][k] = ŵ_{k+1}ᵀ x_i`.
    pub coords: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
}

impl SummaryPlotData {
    /// Projections onto one direction.
    pub fn axis(&self, k: usize) -> Vec<f64> {
        self.coords.iter().map(|c| c[k]).collect()
    }
}

pub fn summary_plot_data(s: &SampleSet, est: &SdrEstimate, dims: usize) -> Result<SummaryPlotData> {
    if !(1..=2).contains(&dims) {
        return Err(SdrError::InvalidArgument("summary plots are 1- or 2-dimensional".into()));
    }
    if dims > est.n_requested {
        return Err(SdrError::InvalidArgument(format!(
            "requested {dims} plot dimensions from an n = {} estimate",
            est.n_requested
        )));
    }
    if s.dim() != est.spectrum.dim() {
        return Err(SdrError::DimensionMismatch(format!(
            "samples have dimension {}, estimate has {}",
            s.dim(),
            est.spectrum.dim()
        )));
    }
    let w = est.spectrum.eigenvectors().columns(0, dims);
    let proj = s.inputs() * w;
    let coords = proj.row_iter().map(|r| r.iter().copied().collect()).collect();
    Ok(SummaryPlotData {
        coords,
        outputs: s.outputs().to_vec(),
    })
}

/// Coefficient of determination for the least-squares fit `y ≈ c t²`.
pub fn quadratic_fit_r2(t: &[f64], y: &[f64]) -> f64 {
    let num: f64 = t.iter().zip(y).map(|(t, y)| y * t * t).sum();
    let den: f64 = t.iter().map(|t| t.powi(4)).sum();
    let c = if den > 0.0 { num / den } else { 0.0 };
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = t.iter().zip(y).map(|(t, y)| (y - c * t * t).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|y| (y - mean).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Subspace;

    #[test]
    fn ols_recovers_exact_slope() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        assert!((ols_slope(&x, &y).unwrap() + 0.5).abs() < 1e-15);
        assert!(ols_slope(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn eigenvalue_error_metric() {
        let e = normalized_eigenvalue_error(&[1.1, 0.5, 0.0], &[1.0, 0.2, 0.0]).unwrap();
        assert!((e - 0.09).abs() < 1e-15);
        assert!(normalized_eigenvalue_error(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn quadratic_fit_is_perfect_on_parabola() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 / 4.0 - 2.5).collect();
        let y: Vec<f64> = t.iter().map(|v| 3.0 * v * v).collect();
        assert!((quadratic_fit_r2(&t, &y) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn study_config_validation() {
        let est = EstimatorConfig {
            method: Method::Sir,
            slices: 10,
            scheme: SliceScheme::EqualCount,
            n: 3,
        };
        let mut cfg = StudyConfig::new("quad3", est, vec![100, 1000], 2, 1);
        assert!(cfg.validate().is_ok());
        cfg.sizes = vec![1000, 100];
        assert!(cfg.validate().is_err());
        cfg.sizes = vec![100, 1000];
        cfg.truth_samples = 5000;
        assert!(cfg.validate().is_err());
        cfg.truth_samples = 10_000;
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
        cfg.trials = 1;
        cfg.estimator.n = 11;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn single_size_study_has_no_slopes() {
        let est = EstimatorConfig {
            method: Method::Sir,
            slices: 10,
            scheme: SliceScheme::EqualCount,
            n: 3,
        };
        let mut cfg = StudyConfig::new("quad3", est, vec![500], 1, 9);
        cfg.truth_samples = 20_000;
        let study = run_convergence(&cfg).unwrap();
        assert_eq!(study.records.len(), 1);
        assert!(study.eig_mse_slope.is_none() && study.subspace_slope.is_none());
        assert_eq!(study.warnings.len(), 1);
        let r = &study.records[0];
        assert!(r.eig_mse_norm >= 0.0 && (0.0..=1.0).contains(&r.subspace_dist));
    }

    #[test]
    fn truth_cache_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let est = EstimatorConfig {
            method: Method::Save,
            slices: 8,
            scheme: SliceScheme::EqualCount,
            n: 1,
        };
        let mut cfg = StudyConfig::new("quad1", est, vec![100], 1, 4);
        cfg.truth_samples = 5_000;
        cfg.cache_dir = Some(dir.path().to_path_buf());
        let fresh = truth_surrogate(&cfg).unwrap();
        let files: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
        let cached = truth_surrogate(&cfg).unwrap();
        assert_eq!(fresh, cached);
        let bits = |s: &SymmetricSpectrum| s.eigenvalues().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&fresh), bits(&cached));
    }

    #[test]
    fn trial_failure_aborts_study() {
        let est = EstimatorConfig {
            method: Method::Sir,
            slices: 200,
            scheme: SliceScheme::EqualCount,
            n: 1,
        };
        let mut cfg = StudyConfig::new("quad1", est, vec![100], 1, 4);
        cfg.truth_samples = 10_000;
        let err = run_convergence(&cfg).unwrap_err();
        assert!(matches!(err, SdrError::TrialFailed { n: 100, trial: 0, .. }));
    }

    #[test]
    fn identical_comparisons_fall_back_to_non_strict() {
        let d = [0.2, 0.3];
        let r = compare_gap_distances(1, &d, 3, &d, 100).unwrap();
        assert!(!r.strict && r.non_strict_fallback && r.passed());
    }

    /// Perturbing `Λ = diag(11, 1, 0)` by the same symmetric noise and
    /// comparing the leading eigenspace (gap 10) against the two-dimensional
    /// one (gap 1).
    #[test]
    fn synthetic_gap_ratio() {
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![11.0, 1.0, 0.0]));
        let e1 = Subspace::span_of(&DMatrix::identity(3, 1)).unwrap();
        let e12 = Subspace::span_of(&DMatrix::identity(3, 2)).unwrap();
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        for t in 0..20 {
            let mut rng = rng_from_seed(hash64(99, t));
            let g = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let noisy = &lambda + (&g + g.transpose()) * 0.02;
            let spec = decompose(&noisy).unwrap();
            d1.push(subspace_distance(&e1, &spec.leading_subspace(1).unwrap()).unwrap());
            d2.push(subspace_distance(&e12, &spec.leading_subspace(2).unwrap()).unwrap());
        }
        let r = compare_gap_distances(1, &d1, 2, &d2, 0).unwrap();
        assert!(r.strict);
        assert!(r.ratio() > 1.0);
    }

    #[test]
    fn bootstrap_of_identical_rows_is_degenerate() {
        let rows = vec![vec![0.5, -0.25]; 10];
        let s = SampleSet::from_rows(&rows, vec![1.0; 10]).unwrap().assume_standardized();
        let cfg = EstimatorConfig {
            method: Method::Sir,
            slices: 3,
            scheme: SliceScheme::EqualCount,
            n: 1,
        };
        let b = bootstrap_eigenvalues(&s, &cfg, 2, 0).unwrap();
        assert_eq!(b.lower, b.point);
        assert_eq!(b.upper, b.point);
        assert!(bootstrap_eigenvalues(&s, &cfg, 1, 0).is_err());
    }

    #[test]
    fn summary_plot_shape_and_bounds() {
        let f = TestFunction::by_name("quad1", CANONICAL_SEED).unwrap();
        let s = standardized_sample(&f, &f.default_measure(), 300, 1).unwrap();
        let cfg = EstimatorConfig {
            method: Method::Save,
            slices: 5,
            scheme: SliceScheme::EqualCount,
            n: 1,
        };
        let est = cfg.run(&s).unwrap();
        let plot = summary_plot_data(&s, &est, 1).unwrap();
        assert_eq!(plot.coords.len(), 300);
        assert_eq!(plot.coords[0].len(), 1);
        assert!(summary_plot_data(&s, &est, 2).is_err());
    }
}
