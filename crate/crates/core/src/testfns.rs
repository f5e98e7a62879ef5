//! Test models with known ridge structure.
//!
//! - `quad1`: `f(x) = (bᵀx)²` on `R^10`, central subspace `span(b)`.
//! - `quad3`: `f(x) = xᵀBBᵀx + bᵀx` with `B ∈ R^{10×2}`, `b ∉ colspan(B)`,
//!   central subspace `span([B b])`.
//! - `hartmann`: induced magnetic field of Hartmann channel flow. It is a
//!   ridge function of the log-inputs with a two-dimensional central subspace.
//!
//! Default `b` and `B` are standard-normal draws from a seeded generator;
//! [`CANONICAL_SEED`] fixes the instance used by the acceptance suite.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdrError};
use crate::measures::{draw, InputMeasure};
use crate::rng::{hash64, rng_from_seed};
use crate::types::{SampleSet, Subspace};

/// Seed for the canonical quadratic parameters.
pub const CANONICAL_SEED: u64 = 2018;

/// Input dimension of the quadratic test problems.
pub const QUAD_DIM: usize = 10;

/// Log-space mean of `(μ, ρ, ∂p₀/∂x, η, B₀)`.
pub const HARTMANN_LOG_MEAN: [f64; 5] = [-2.25, 1.0, 0.3, 0.3, -0.75];
/// Log-space variances (diagonal covariance).
pub const HARTMANN_LOG_VAR: [f64; 5] = [0.15, 0.25, 0.25, 0.25, 0.25];

/// Channel half-width `ℓ` and permeability `μ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HartmannParams {
    pub ell: f64,
    pub mu0: f64,
}

impl Default for HartmannParams {
    fn default() -> Self {
        Self { ell: 1.0, mu0: 1.0 }
    }
}

impl HartmannParams {
    pub fn new(ell: f64, mu0: f64) -> Result<Self> {
        if !(ell > 0.0 && mu0 > 0.0 && ell.is_finite() && mu0.is_finite()) {
            return Err(SdrError::InvalidArgument(
                "Hartmann ell and mu0 must be positive".into(),
            ));
        }
        Ok(Self { ell, mu0 })
    }
}

pub fn quad1(b: &[f64], x: &[f64]) -> f64 {
    let t: f64 = b.iter().zip(x).map(|(bi, xi)| bi * xi).sum();
    t * t
}

/// `xᵀBBᵀx + bᵀx`, i.e. `‖Bᵀx‖² + bᵀx`.
pub fn quad3(b_mat: &DMatrix<f64>, b: &[f64], x: &[f64]) -> f64 {
    let mut quad = 0.0;
    for col in b_mat.column_iter() {
        let t: f64 = col.iter().zip(x).map(|(c, xi)| c * xi).sum();
        quad += t * t;
    }
    quad + b.iter().zip(x).map(|(bi, xi)| bi * xi).sum::<f64>()
}

/// Total induced magnetic field at physical inputs `(μ, ρ, ∂p₀/∂x, η, B₀)`.
pub fn hartmann_b_ind(params: &HartmannParams, x: &[f64]) -> Result<f64> {
    if x.len() != 5 {
        return Err(SdrError::DimensionMismatch(format!(
            "Hartmann model takes 5 inputs, got {}",
            x.len()
        )));
    }
    let (mu, dp, eta, b0) = (x[0], x[2], x[3], x[4]);
    if !(mu > 0.0 && eta > 0.0 && b0 > 0.0) {
        return Err(SdrError::InvalidArgument(
            "Hartmann viscosity, resistivity and magnetic field must be positive".into(),
        ));
    }
    let root = (eta * mu).sqrt();
    let ell = params.ell;
    let prefactor = dp * ell * params.mu0 / (2.0 * b0);
    Ok(prefactor * (1.0 - 2.0 * root / (b0 * ell) * (b0 * ell / (2.0 * root)).tanh()))
}

/// Central subspace of the Hartmann field in log coordinates
/// `(log μ, log ρ, log ∂p, log η, log B₀)`.
///
/// The field depends on the log-inputs only through `log ∂p − log B₀` and
/// `½ log η + ½ log μ − log B₀`.
pub fn hartmann_true_subspace(_params: &HartmannParams) -> Subspace {
    let v = DMatrix::from_column_slice(
        5,
        2,
        &[0.0, 0.0, 1.0, 0.0, -1.0, 0.5, 0.0, 0.0, 0.5, -1.0],
    );
    Subspace::span_of(&v).expect("generating vectors are independent")
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Quad1 { b: DVector<f64> },
    Quad3 { b_mat: DMatrix<f64>, b: DVector<f64> },
    Hartmann(HartmannParams),
}

impl TestFunction {
    pub fn quad1(b: DVector<f64>) -> Result<Self> {
        if b.norm() == 0.0 || b.iter().any(|v| !v.is_finite()) {
            return Err(SdrError::InvalidArgument("b must be finite and nonzero".into()));
        }
        Ok(Self::Quad1 { b })
    }

    /// Checks that `b` has a component outside `colspan(B)`.
    pub fn quad3(b_mat: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if b_mat.nrows() != b.len() {
            return Err(SdrError::DimensionMismatch(format!(
                "B has {} rows, b has {} entries",
                b_mat.nrows(),
                b.len()
            )));
        }
        let cols = Subspace::span_of(&b_mat)?;
        let residual = &b - cols.projector() * &b;
        if residual.norm() <= 1e-8 {
            return Err(SdrError::InvalidArgument("b must not lie in colspan(B)".into()));
        }
        Ok(Self::Quad3 { b_mat, b })
    }

    /// Quadratic parameters drawn from `seed`: `b` from substream 1, `B` then
    /// `b` from substream 3, filled column by column.
    pub fn quad1_seeded(seed: u64) -> Self {
        let mut rng = rng_from_seed(hash64(seed, 1));
        let b = DVector::from_fn(QUAD_DIM, |_, _| rng.sample(StandardNormal));
        Self::Quad1 { b }
    }

    pub fn quad3_seeded(seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(hash64(seed, 3));
        let b_mat = DMatrix::from_fn(QUAD_DIM, 2, |_, _| rng.sample(StandardNormal));
        let b = DVector::from_fn(QUAD_DIM, |_, _| rng.sample(StandardNormal));
        Self::quad3(b_mat, b)
    }

    /// Built-in model by CLI name, with quadratic parameters from `seed`.
    pub fn by_name(name: &str, seed: u64) -> Result<Self> {
        match name {
            "quad1" => Ok(Self::quad1_seeded(seed)),
            "quad3" => Self::quad3_seeded(seed),
            "hartmann" => Ok(Self::Hartmann(HartmannParams::default())),
            other => Err(SdrError::UnknownFunction(other.to_string())),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Quad1 { .. } => "quad1",
            Self::Quad3 { .. } => "quad3",
            Self::Hartmann(_) => "hartmann",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Quad1 { b } | Self::Quad3 { b, .. } => b.len(),
            Self::Hartmann(_) => 5,
        }
    }

    /// Evaluates the model at model coordinates (physical inputs for Hartmann).
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(SdrError::DimensionMismatch(format!(
                "{} takes {} inputs, got {}",
                self.name(),
                self.dim(),
                x.len()
            )));
        }
        match self {
            Self::Quad1 { b } => Ok(quad1(b.as_slice(), x)),
            Self::Quad3 { b_mat, b } => Ok(quad3(b_mat, b.as_slice(), x)),
            Self::Hartmann(p) => hartmann_b_ind(p, x),
        }
    }

    /// Analytic central subspace in the coordinates of [`Self::default_measure`]
    /// (raw coordinates for the quadratics, log coordinates for Hartmann).
    pub fn true_subspace(&self) -> Subspace {
        match self {
            Self::Quad1 { b } => Subspace::span_of(&DMatrix::from_column_slice(b.len(), 1, b.as_slice()))
                .expect("b is nonzero"),
            Self::Quad3 { b_mat, b } => {
                let mut v = DMatrix::<f64>::zeros(b.len(), 3);
                v.columns_mut(0, 2).copy_from(b_mat);
                v.set_column(2, b);
                Subspace::span_of(&v).expect("b lies outside colspan(B)")
            }
            Self::Hartmann(p) => hartmann_true_subspace(p),
        }
    }

    /// Standard Gaussian for the quadratics; log-normal inputs for Hartmann.
    pub fn default_measure(&self) -> InputMeasure {
        match self {
            Self::Quad1 { .. } | Self::Quad3 { .. } => InputMeasure::standard_gaussian(self.dim()),
            Self::Hartmann(_) => {
                let cov = (0..5)
                    .map(|i| (0..5).map(|j| if i == j { HARTMANN_LOG_VAR[i] } else { 0.0 }).collect())
                    .collect();
                InputMeasure::gaussian(HARTMANN_LOG_MEAN.to_vec(), cov)
                    .expect("diagonal covariance is SPD")
                    .with_log_transform(true)
            }
        }
    }

    /// Draws `n` inputs from `measure` and evaluates the model on them.
    ///
    /// The returned inputs are in measure coordinates (log coordinates when
    /// the measure is log-transformed) and are not standardized.
    pub fn sample(&self, measure: &InputMeasure, n: usize, seed: u64) -> Result<SampleSet> {
        if measure.dim() != self.dim() {
            return Err(SdrError::DimensionMismatch(format!(
                "{} takes {} inputs, measure has dimension {}",
                self.name(),
                self.dim(),
                measure.dim()
            )));
        }
        let x = draw(measure, n, seed)?;
        let y = self.evaluate_rows(measure, &x)?;
        Ok(SampleSet::new(x, y)?.with_seed(Some(seed)))
    }

    /// Evaluates the model on every row of measure-coordinate inputs.
    pub fn evaluate_rows(&self, measure: &InputMeasure, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        let m = x.ncols();
        (0..x.nrows())
            .into_par_iter()
            .map(|i| {
                let row: Vec<f64> = (0..m).map(|j| x[(i, j)]).collect();
                self.evaluate(&measure.model_input(&row))
            })
            .collect()
    }
}
