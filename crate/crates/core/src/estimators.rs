//! Sample SIR and SAVE matrices.
//!
//! With slice weights `ω̂_r = N_r/N`:
//!
//! ```text
//! Ĉ_SIR  = Σ_r ω̂_r μ̂_r μ̂_rᵀ
//! Ĉ_SAVE = Σ_r ω̂_r (I − Σ̂_r)²
//! ```
//!
//! Both are weighted sums of positive semidefinite terms. The inputs must be
//! standardized (zero mean, identity covariance).

use nalgebra::DMatrix;

use crate::error::{Result, SdrError};
use crate::slicing::{partition, slice_stats, SliceScheme, SliceStats};
use crate::spectral::{decompose, gap_profile, GapProfile};
use crate::types::{Method, SampleSet, SdrEstimate};

pub fn sir_matrix(stats: &SliceStats) -> DMatrix<f64> {
    let m = stats.dim();
    let n = stats.n_samples as f64;
    let mut c = DMatrix::<f64>::zeros(m, m);
    for (mu, &nr) in stats.means.iter().zip(&stats.counts) {
        let w = nr as f64;
        for a in 0..m {
            for b in a..m {
                c[(a, b)] += w * mu[a] * mu[b];
            }
        }
    }
    finish_upper(c, n)
}

pub fn save_matrix(stats: &SliceStats) -> DMatrix<f64> {
    let m = stats.dim();
    let n = stats.n_samples as f64;
    let eye = DMatrix::<f64>::identity(m, m);
    let mut c = DMatrix::<f64>::zeros(m, m);
    for (cov, &nr) in stats.covariances.iter().zip(&stats.counts) {
        let d = &eye - cov;
        let sq = &d * &d;
        let w = nr as f64;
        for a in 0..m {
            for b in a..m {
                c[(a, b)] += w * sq[(a, b)];
            }
        }
    }
    finish_upper(c, n)
}

/// Divides the accumulated upper triangle by `n` and mirrors it.
fn finish_upper(mut c: DMatrix<f64>, n: f64) -> DMatrix<f64> {
    let m = c.nrows();
    for a in 0..m {
        for b in a..m {
            let v = c[(a, b)] / n;
            c[(a, b)] = v;
            c[(b, a)] = v;
        }
    }
    c
}

pub fn estimator_matrix(method: Method, stats: &SliceStats) -> DMatrix<f64> {
    match method {
        Method::Sir => sir_matrix(stats),
        Method::Save => save_matrix(stats),
    }
}

/// Full pipeline: slice the responses, compute slice moments, build the
/// estimator matrix and decompose it. The estimated subspace is spanned by
/// the first `n` eigenvectors.
pub fn estimate(
    s: &SampleSet,
    slices: usize,
    scheme: SliceScheme,
    method: Method,
    n: usize,
) -> Result<SdrEstimate> {
    if !s.is_standardized() {
        return Err(SdrError::NotStandardized);
    }
    let m = s.dim();
    if n == 0 {
        return Err(SdrError::InvalidArgument("subspace dimension n must be >= 1".into()));
    }
    if n > m {
        return Err(SdrError::DimensionTooLarge { n, m });
    }
    let part = partition(s.outputs(), slices, scheme)?;
    let stats = slice_stats(s, &part)?;
    let spectrum = decompose(&estimator_matrix(method, &stats))?;
    Ok(SdrEstimate {
        method,
        spectrum,
        partition: part,
        n_requested: n,
    })
}

/// Relative eigenvalue gaps `(λ_k − λ_{k+1})/λ₁`, for choosing `n` by hand.
pub fn relative_gaps(est: &SdrEstimate) -> GapProfile {
    gap_profile(&est.spectrum)
}
