//! Input probability measures, sampling, and whitening.
//!
//! SIR and SAVE assume standardized predictors: zero mean and identity
//! covariance. [`fit_standardizer`] computes the exact affine map
//! `z = W (x − μ)` for a measure from its analytic moments, with `W` the
//! inverse of the lower Cholesky factor of the covariance.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdrError};
use crate::rng::{hash64, rng_from_seed};
use crate::types::{SampleSet, Subspace};

/// Samples per independently seeded chunk in [`draw`].
pub const DRAW_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureKind {
    StandardGaussian { dim: usize },
    Gaussian { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    UniformBox { lower: Vec<f64>, upper: Vec<f64> },
}

/// The input measure `ρ`.
///
/// With `log_transform` set, samples live in log space: the estimators see the
/// (standardized) log variables while models are evaluated at `exp(x)`
/// componentwise, see [`InputMeasure::model_input`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputMeasure {
    #[serde(flatten)]
    pub kind: MeasureKind,
    #[serde(default)]
    pub log_transform: bool,
}

impl InputMeasure {
    pub fn standard_gaussian(dim: usize) -> Self {
        Self {
            kind: MeasureKind::StandardGaussian { dim },
            log_transform: false,
        }
    }

    pub fn gaussian(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self {
            kind: MeasureKind::Gaussian { mean, cov },
            log_transform: false,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let m = Self {
            kind: MeasureKind::UniformBox { lower, upper },
            log_transform: false,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_log_transform(mut self, on: bool) -> Self {
        self.log_transform = on;
        self
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MeasureKind::StandardGaussian { dim } => *dim,
            MeasureKind::Gaussian { mean, .. } => mean.len(),
            MeasureKind::UniformBox { lower, .. } => lower.len(),
        }
    }

    /// Checks shape and parameter constraints (SPD covariance, `lower < upper`).
    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            MeasureKind::StandardGaussian { dim } => {
                if *dim == 0 {
                    return Err(SdrError::InvalidArgument("measure dimension must be >= 1".into()));
                }
            }
            MeasureKind::Gaussian { mean, cov } => {
                self.cholesky_factor(mean, cov)?;
            }
            MeasureKind::UniformBox { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(SdrError::DimensionMismatch(format!(
                        "uniform box bounds of length {} and {}",
                        lower.len(),
                        upper.len()
                    )));
                }
                if lower.iter().chain(upper).any(|v| !v.is_finite()) {
                    return Err(SdrError::NonFinite("uniform box bound".into()));
                }
                if let Some(j) = (0..lower.len()).find(|&j| lower[j] >= upper[j]) {
                    return Err(SdrError::InvalidArgument(format!(
                        "uniform box requires lower < upper (component {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn cholesky_factor(&self, mean: &[f64], cov: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let m = mean.len();
        if m == 0 || cov.len() != m || cov.iter().any(|r| r.len() != m) {
            return Err(SdrError::DimensionMismatch(format!(
                "Gaussian mean of length {m} needs an {m}x{m} covariance"
            )));
        }
        if mean.iter().chain(cov.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(SdrError::NonFinite("Gaussian parameter".into()));
        }
        let c = DMatrix::from_fn(m, m, |i, j| cov[i][j]);
        if (&c - c.transpose()).amax() > 1e-12 * c.amax().max(1.0) {
            return Err(SdrError::NotPositiveDefinite);
        }
        let chol = Cholesky::new(c).ok_or(SdrError::NotPositiveDefinite)?;
        let l = chol.l();
        if (0..m).any(|i| l[(i, i)] <= 0.0 || !l[(i, i)].is_finite()) {
            return Err(SdrError::NotPositiveDefinite);
        }
        Ok(l)
    }

    /// Maps a sampled point to the coordinates a model is evaluated at.
    pub fn model_input(&self, x: &[f64]) -> Vec<f64> {
        if self.log_transform {
            x.iter().map(|v| v.exp()).collect()
        } else {
            x.to_vec()
        }
    }
}

/// Draws `n` i.i.d. points from `measure` as an `n × m` matrix.
///
/// Points are generated in chunks of [`DRAW_CHUNK`] rows; chunk `c` uses a
/// generator seeded with `hash64(seed, c)` and fills its rows in order, one
/// full row at a time. The result is a pure function of `(measure, n, seed)`
/// regardless of thread count.
pub fn draw(measure: &InputMeasure, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(SdrError::InvalidArgument("sample count must be >= 1".into()));
    }
    measure.validate()?;
    let m = measure.dim();
    let sampler = RowSampler::new(measure)?;

    let chunks: Vec<Vec<f64>> = (0..n.div_ceil(DRAW_CHUNK))
        .into_par_iter()
        .map(|c| {
            let rows = DRAW_CHUNK.min(n - c * DRAW_CHUNK);
            let mut rng = rng_from_seed(hash64(seed, c as u64));
            let mut buf = Vec::with_capacity(rows * m);
            let mut z = vec![0.0; m];
            for _ in 0..rows {
                sampler.fill(&mut rng, &mut z, &mut buf);
            }
            buf
        })
        .collect();

    let mut out = DMatrix::<f64>::zeros(n, m);
    for (c, buf) in chunks.iter().enumerate() {
        for (k, row) in buf.chunks_exact(m).enumerate() {
            let i = c * DRAW_CHUNK + k;
            for j in 0..m {
                out[(i, j)] = row[j];
            }
        }
    }
    Ok(out)
}

enum RowSampler {
    Standard { dim: usize },
    Gaussian { mean: DVector<f64>, factor: DMatrix<f64> },
    Uniform { lower: Vec<f64>, width: Vec<f64> },
}

impl RowSampler {
    fn new(measure: &InputMeasure) -> Result<Self> {
        Ok(match &measure.kind {
            MeasureKind::StandardGaussian { dim } => RowSampler::Standard { dim: *dim },
            MeasureKind::Gaussian { mean, cov } => RowSampler::Gaussian {
                mean: DVector::from_column_slice(mean),
                factor: measure.cholesky_factor(mean, cov)?,
            },
            MeasureKind::UniformBox { lower, upper } => RowSampler::Uniform {
                lower: lower.clone(),
                width: lower.iter().zip(upper).map(|(l, u)| u - l).collect(),
            },
        })
    }

    fn fill<R: Rng>(&self, rng: &mut R, z: &mut [f64], out: &mut Vec<f64>) {
        match self {
            RowSampler::Standard { dim } => {
                out.extend((0..*dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
            }
            RowSampler::Gaussian { mean, factor } => {
                for v in z.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let m = z.len();
                for i in 0..m {
                    // factor is lower triangular
                    let mut acc = mean[i];
                    for (j, zj) in z.iter().enumerate().take(i + 1) {
                        acc += factor[(i, j)] * zj;
                    }
                    out.push(acc);
                }
            }
            RowSampler::Uniform { lower, width } => {
                out.extend(
                    lower
                        .iter()
                        .zip(width)
                        .map(|(l, w)| l + w * rng.random::<f64>()),
                );
            }
        }
    }
}

/// Affine whitening map `z = W (x − μ)` with `W = L⁻¹`, `L` the lower
/// Cholesky factor of the covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: DVector<f64>,
    whitening: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl Standardizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: DVector::zeros(dim),
            whitening: DMatrix::identity(dim, dim),
            inverse: DMatrix::identity(dim, dim),
        }
    }

    /// Builds the map from a mean and a lower-triangular Cholesky factor `L`.
    pub fn from_cholesky(mean: DVector<f64>, factor: DMatrix<f64>) -> Result<Self> {
        let m = mean.len();
        if factor.shape() != (m, m) {
            return Err(SdrError::DimensionMismatch(format!(
                "mean of length {m} with factor {}x{}",
                factor.nrows(),
                factor.ncols()
            )));
        }
        if (0..m).any(|i| factor[(i, i)] <= 0.0) || (0..m).any(|i| (i + 1..m).any(|j| factor[(i, j)] != 0.0)) {
            return Err(SdrError::NotPositiveDefinite);
        }
        let mut whitening = DMatrix::<f64>::identity(m, m);
        if !factor.solve_lower_triangular_mut(&mut whitening) {
            return Err(SdrError::NotPositiveDefinite);
        }
        Ok(Self {
            mean,
            whitening,
            inverse: factor,
        })
    }

    /// Builds the map from a mean and a covariance matrix.
    pub fn from_moments(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> Result<Self> {
        let measure = InputMeasure::gaussian(mean.clone(), cov.clone())?;
        let l = measure.cholesky_factor(&mean, &cov)?;
        Self::from_cholesky(DVector::from_vec(mean), l)
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn whitening(&self) -> &DMatrix<f64> {
        &self.whitening
    }

    /// The Cholesky factor `L = W⁻¹`.
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Maps standardized inputs back to original coordinates, `x = μ + L z`.
    pub fn unstandardize(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_cols(z.ncols())?;
        let mut x = z * self.inverse.transpose();
        for mut row in x.row_iter_mut() {
            row += self.mean.transpose();
        }
        Ok(x)
    }

    /// Expresses a subspace of original coordinates in standardized ones.
    ///
    /// A model depending on `Aᵀx` depends on `(LᵀA)ᵀz` after whitening.
    pub fn to_standardized_subspace(&self, a: &Subspace) -> Result<Subspace> {
        self.check_cols(a.ambient_dim())?;
        Subspace::span_of(&(self.inverse.transpose() * a.basis()))
    }

    /// Expresses a subspace of standardized coordinates in original ones
    /// (`span(Wᵀ Â)`), the inverse of [`Self::to_standardized_subspace`].
    pub fn to_original_subspace(&self, a: &Subspace) -> Result<Subspace> {
        self.check_cols(a.ambient_dim())?;
        Subspace::span_of(&(self.whitening.transpose() * a.basis()))
    }

    fn check_cols(&self, m: usize) -> Result<()> {
        if m != self.dim() {
            return Err(SdrError::DimensionMismatch(format!(
                "standardizer has dimension {}, data has {m}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Exact whitening map for a measure, from its analytic mean and covariance.
pub fn fit_standardizer(measure: &InputMeasure) -> Result<Standardizer> {
    measure.validate()?;
    match &measure.kind {
        MeasureKind::StandardGaussian { dim } => Ok(Standardizer::identity(*dim)),
        MeasureKind::Gaussian { mean, cov } => {
            let l = measure.cholesky_factor(mean, cov)?;
            Standardizer::from_cholesky(DVector::from_column_slice(mean), l)
        }
        MeasureKind::UniformBox { lower, upper } => {
            let m = lower.len();
            let mean = DVector::from_fn(m, |j, _| 0.5 * (lower[j] + upper[j]));
            let sd = DVector::from_fn(m, |j, _| (upper[j] - lower[j]) / 12f64.sqrt());
            Standardizer::from_cholesky(mean, DMatrix::from_diagonal(&sd))
        }
    }
}

/// Applies `z = W (x − μ)` to every input row; outputs are copied unchanged.
pub fn standardize(s: &SampleSet, std: &Standardizer) -> Result<SampleSet> {
    std.check_cols(s.dim())?;
    let mut z = s.inputs().clone();
    for mut row in z.row_iter_mut() {
        row -= std.mean.transpose();
    }
    let z = z * std.whitening.transpose();
    Ok(SampleSet::from_raw(z, s.outputs().to_vec(), true, s.seed()))
}

/// Direction in original coordinates whose standardized image spans the
/// same ridge direction as `w`: the unit vector along `Wᵀ w`.
pub fn pushforward_direction(std: &Standardizer, w: &DVector<f64>) -> Result<DVector<f64>> {
    std.check_cols(w.len())?;
    if w.norm() == 0.0 {
        return Err(SdrError::InvalidArgument("zero direction".into()));
    }
    let v = std.whitening.transpose() * w;
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(SdrError::InvalidArgument("direction maps to zero".into()));
    }
    Ok(v / norm)
}
