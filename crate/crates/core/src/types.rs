//! Shared data model: sample sets, symmetric spectra, subspaces and estimates.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdrError};
use crate::slicing::SlicePartition;

/// Orthonormality tolerance for eigenvector and basis matrices.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// `N` paired input vectors and scalar outputs.
///
/// Rows of `inputs` are samples. The `standardized` flag is provenance: it is
/// set only by [`crate::measures::standardize`] (or by an explicit declaration
/// when ingesting data that is already standardized).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    inputs: DMatrix<f64>,
    outputs: Vec<f64>,
    standardized: bool,
    seed: Option<u64>,
}

impl SampleSet {
    /// Builds a sample set and checks every invariant.
    pub fn new(inputs: DMatrix<f64>, outputs: Vec<f64>) -> Result<Self> {
        let s = Self::from_raw(inputs, outputs, false, None);
        let violations = validate_sample_set(&s);
        if violations.is_empty() {
            Ok(s)
        } else {
            let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
            Err(SdrError::InvalidSampleSet(msg.join("; ")))
        }
    }

    /// Builds a sample set without validation. Use [`validate_sample_set`] on the result.
    pub fn from_raw(
        inputs: DMatrix<f64>,
        outputs: Vec<f64>,
        standardized: bool,
        seed: Option<u64>,
    ) -> Self {
        Self {
            inputs,
            outputs,
            standardized,
            seed,
        }
    }

    /// Convenience constructor from row slices.
    pub fn from_rows(rows: &[Vec<f64>], outputs: Vec<f64>) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(SdrError::DimensionMismatch("ragged input rows".into()));
        }
        let inputs = DMatrix::from_fn(rows.len(), m, |i, j| rows[i][j]);
        Self::new(inputs, outputs)
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    /// Input dimension `m`.
    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    /// Marks externally supplied inputs as already standardized.
    pub fn assume_standardized(mut self) -> Self {
        self.standardized = true;
        self
    }

    /// Sub-sample with the given row indices (repeats allowed).
    pub fn select(&self, rows: &[usize]) -> Self {
        let m = self.dim();
        let inputs = DMatrix::from_fn(rows.len(), m, |i, j| self.inputs[(rows[i], j)]);
        let outputs = rows.iter().map(|&i| self.outputs[i]).collect();
        Self {
            inputs,
            outputs,
            standardized: self.standardized,
            seed: self.seed,
        }
    }

    /// Replaces the outputs, keeping inputs and provenance.
    pub fn with_outputs(&self, outputs: Vec<f64>) -> Result<Self> {
        if outputs.len() != self.len() {
            return Err(SdrError::DimensionMismatch(format!(
                "{} outputs for {} samples",
                outputs.len(),
                self.len()
            )));
        }
        Ok(Self {
            inputs: self.inputs.clone(),
            outputs,
            standardized: self.standardized,
            seed: self.seed,
        })
    }
}

/// A failed [`SampleSet`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    LengthMismatch { rows: usize, outputs: usize },
    NonFiniteInput { row: usize, col: usize },
    NonFiniteOutput { row: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "empty sample set"),
            Violation::LengthMismatch { .. } => write!(f, "length mismatch"),
            Violation::NonFiniteInput { row, .. } | Violation::NonFiniteOutput { row } => {
                write!(f, "non-finite entry at row {row}")
            }
        }
    }
}

/// Returns every violated [`SampleSet`] invariant; empty iff the set is well formed.
pub fn validate_sample_set(s: &SampleSet) -> Vec<Violation> {
    let mut out = Vec::new();
    let rows = s.inputs.nrows();
    if rows != s.outputs.len() {
        out.push(Violation::LengthMismatch {
            rows,
            outputs: s.outputs.len(),
        });
    }
    if rows == 0 || s.outputs.is_empty() {
        out.push(Violation::Empty);
    }
    for i in 0..rows {
        if let Some(j) = (0..s.inputs.ncols()).find(|&j| !s.inputs[(i, j)].is_finite()) {
            out.push(Violation::NonFiniteInput { row: i, col: j });
        }
    }
    for (i, y) in s.outputs.iter().enumerate() {
        if !y.is_finite() {
            out.push(Violation::NonFiniteOutput { row: i });
        }
    }
    out
}

/// Eigendecomposition `M = W Λ Wᵀ` of a symmetric matrix.
///
/// Eigenvalues are descending; each eigenvector has its largest-magnitude
/// component positive (lowest index wins ties). Built by
/// [`crate::spectral::decompose`].
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSpectrum {
    pub(crate) matrix: DMatrix<f64>,
    pub(crate) eigenvalues: DVector<f64>,
    pub(crate) eigenvectors: DMatrix<f64>,
}

impl SymmetricSpectrum {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, in eigenvalue order.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Span of the first `n` eigenvectors.
    pub fn leading_subspace(&self, n: usize) -> Result<Subspace> {
        let m = self.dim();
        if n == 0 || n > m {
            return Err(SdrError::DimensionTooLarge { n, m });
        }
        Ok(Subspace {
            basis: self.eigenvectors.columns(0, n).into_owned(),
        })
    }
}

/// An `n`-dimensional subspace of `R^m` held by an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    /// Wraps a basis that must already have orthonormal columns.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if basis.ncols() == 0 || basis.ncols() > basis.nrows() {
            return Err(SdrError::DimensionMismatch(format!(
                "basis of shape {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let gram = basis.transpose() * &basis;
        let n = basis.ncols();
        let err = (gram - DMatrix::<f64>::identity(n, n)).amax();
        if err > ORTHONORMAL_TOL {
            return Err(SdrError::InvalidArgument(format!(
                "basis columns are not orthonormal (max deviation {err:e})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormalizes the columns of `vectors` (modified Gram-Schmidt with
    /// re-orthogonalization). Fails if they are numerically rank deficient.
    pub fn span_of(vectors: &DMatrix<f64>) -> Result<Self> {
        let (m, n) = vectors.shape();
        if n == 0 || n > m {
            return Err(SdrError::DimensionMismatch(format!(
                "cannot span {n} vectors in R^{m}"
            )));
        }
        let mut q = DMatrix::<f64>::zeros(m, n);
        for k in 0..n {
            let mut v = vectors.column(k).into_owned();
            let scale = v.norm();
            if !scale.is_finite() || scale == 0.0 {
                return Err(SdrError::InvalidArgument(format!(
                    "column {k} is zero or non-finite"
                )));
            }
            for _ in 0..2 {
                for j in 0..k {
                    let qj = q.column(j);
                    let c = qj.dot(&v);
                    v.axpy(-c, &qj, 1.0);
                }
            }
            let norm = v.norm();
            if norm <= 1e-12 * scale {
                return Err(SdrError::InvalidArgument(format!(
                    "column {k} is linearly dependent on the previous columns"
                )));
            }
            q.set_column(k, &(v / norm));
        }
        Ok(Self { basis: q })
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Subspace dimension `n`.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Ambient dimension `m`.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Orthogonal projector `B Bᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }
}

/// Which inverse-regression estimator produced a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sir,
    Save,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Sir => write!(f, "sir"),
            Method::Save => write!(f, "save"),
        }
    }
}

/// Output of a SIR or SAVE run: the estimator matrix spectrum plus slicing metadata.
#[derive(Debug, Clone)]
pub struct SdrEstimate {
    pub method: Method,
    pub spectrum: SymmetricSpectrum,
    pub partition: SlicePartition,
    pub n_requested: usize,
}

impl SdrEstimate {
    /// The estimated `n`-dimensional subspace (first `n_requested` eigenvectors).
    pub fn subspace(&self) -> Subspace {
        self.spectrum
            .leading_subspace(self.n_requested)
            .expect("n_requested validated at construction")
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        self.spectrum.eigenvalues()
    }
}
