//! Symmetric eigendecomposition with deterministic ordering and signs,
//! subspace distance, and spectral-gap reporting.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Result, SdrError};
use crate::types::{Subspace, SymmetricSpectrum};

/// Gaps below this fraction of `λ₁` are reported as zero.
pub const GAP_FLOOR: f64 = 1e-12;

/// Decomposes a symmetric matrix. The input is symmetrized as `(M + Mᵀ)/2` first.
///
/// Eigenvalues are sorted descending (stable on the solver's original index);
/// each eigenvector is flipped so its largest-magnitude component is positive,
/// with the lowest index winning ties.
pub fn decompose(m: &DMatrix<f64>) -> Result<SymmetricSpectrum> {
    if !m.is_square() {
        return Err(SdrError::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if let Some(pos) = m.iter().position(|v| !v.is_finite()) {
        return Err(SdrError::NonFinite(format!(
            "matrix entry ({}, {})",
            pos % m.nrows(),
            pos / m.nrows()
        )));
    }
    let dim = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());

    let mut order: Vec<usize> = (0..dim).collect();
    // sort_by is stable, so equal eigenvalues keep their original index order
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::<f64>::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        let mut pivot = 0;
        for i in 1..dim {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        eigenvectors.set_column(dst, &v);
    }

    Ok(SymmetricSpectrum {
        matrix: sym,
        eigenvalues,
        eigenvectors,
    })
}

/// Distance `‖AAᵀ − BBᵀ‖₂` between equal-dimensional subspaces, the sine of
/// the largest principal angle.
pub fn subspace_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(SdrError::DimensionMismatch(format!(
            "ambient dimensions {} and {}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    if a.dim() != b.dim() {
        return Err(SdrError::DimensionMismatch(format!(
            "subspace dimensions {} and {} differ",
            a.dim(),
            b.dim()
        )));
    }
    let diff = a.projector() - b.projector();
    let diff = (&diff + diff.transpose()) * 0.5;
    // the projector difference is symmetric, so its singular values are |eigenvalues|
    let eig = SymmetricEigen::new(diff);
    let norm = eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(norm.min(1.0))
}

/// Consecutive eigenvalue gaps `λ_n − λ_{n+1}`, absolute and relative to `λ₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapProfile {
    pub gaps: Vec<f64>,
    pub relative: Vec<f64>,
}

impl GapProfile {
    /// 1-based `n` with the largest gap after it, if any gap is nonzero.
    pub fn largest_gap_index(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (k, &g) in self.gaps.iter().enumerate() {
            if g > 0.0 && best.is_none_or(|(_, b)| g > b) {
                best = Some((k + 1, g));
            }
        }
        best.map(|(k, _)| k)
    }
}

pub fn gap_profile(spec: &SymmetricSpectrum) -> GapProfile {
    gaps_of(spec.eigenvalues().as_slice())
}

/// Gap profile of an already-descending eigenvalue list.
pub fn gaps_of(eigenvalues: &[f64]) -> GapProfile {
    let lead = eigenvalues.first().copied().unwrap_or(0.0);
    let floor = GAP_FLOOR * lead.abs();
    let gaps: Vec<f64> = eigenvalues
        .windows(2)
        .map(|w| {
            let g = w[0] - w[1];
            if g <= floor {
                0.0
            } else {
                g
            }
        })
        .collect();
    let relative = gaps
        .iter()
        .map(|g| if lead > 0.0 { g / lead } else { 0.0 })
        .collect();
    GapProfile { gaps, relative }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn line(v: &[f64]) -> Subspace {
        Subspace::span_of(&DMatrix::from_column_slice(v.len(), 1, v)).unwrap()
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let s = decompose(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(s.eigenvalues().as_slice(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_is_reordered() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 4.5]);
        let s = decompose(&m).unwrap();
        assert_eq!(s.eigenvalues().as_slice(), &[4.5, 2.0]);
        let w = s.eigenvectors();
        assert!((w[(0, 0)]).abs() < 1e-15 && (w[(1, 0)] - 1.0).abs() < 1e-15);
        assert!((w[(0, 1)] - 1.0).abs() < 1e-15 && (w[(1, 1)]).abs() < 1e-15);
    }

    #[test]
    fn random_symmetric_reconstructs() {
        let a = DMatrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) as f64).sin());
        let m = &a + a.transpose();
        let s = decompose(&m).unwrap();
        let w = s.eigenvectors();
        let recon = w * DMatrix::from_diagonal(s.eigenvalues()) * w.transpose();
        assert!((recon - &m).amax() <= 1e-8 * m.amax().max(1.0));
        assert!((w.transpose() * w - DMatrix::<f64>::identity(5, 5)).amax() <= 1e-10);
        for k in 1..5 {
            assert!(s.eigenvalues()[k - 1] >= s.eigenvalues()[k]);
        }
    }

    #[test]
    fn sign_convention_largest_component_positive() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 2.0]);
        let s = decompose(&m).unwrap();
        for c in s.eigenvectors().column_iter() {
            let (mut idx, mut best) = (0, 0.0_f64);
            for (i, v) in c.iter().enumerate() {
                if v.abs() > best {
                    best = v.abs();
                    idx = i;
                }
            }
            assert!(c[idx] > 0.0);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(decompose(&m), Err(SdrError::NonFinite(_))));
    }

    #[test]
    fn decompose_is_bitwise_deterministic() {
        let a = DMatrix::from_fn(6, 6, |i, j| ((i + 2 * j) as f64).cos());
        let m = &a * a.transpose();
        let s1 = decompose(&m).unwrap();
        let s2 = decompose(&m).unwrap();
        assert_eq!(s1, s2);
    }

    #[test]
    fn distance_examples() {
        let e1 = line(&[1.0, 0.0]);
        let e2 = line(&[0.0, 1.0]);
        let diag = line(&[1.0, 1.0]);
        assert_eq!(subspace_distance(&e1, &e1).unwrap(), 0.0);
        assert!((subspace_distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
        assert!((subspace_distance(&e1, &diag).unwrap() - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn distance_rejects_unequal_dimensions() {
        let a = line(&[1.0, 0.0, 0.0]);
        let b = Subspace::span_of(&DMatrix::identity(3, 2)).unwrap();
        assert!(subspace_distance(&a, &b).is_err());
        let c = line(&[1.0, 0.0]);
        assert!(subspace_distance(&a, &c).is_err());
    }

    #[test]
    fn gap_examples() {
        assert_eq!(gaps_of(&[4.5, 2.0]).gaps, vec![2.5]);
        assert_eq!(gaps_of(&[3.0, 3.0, 3.0]).gaps, vec![0.0, 0.0]);
        let g = gaps_of(&[3.0, 1.0, 0.0]);
        assert_eq!(g.gaps, vec![2.0, 1.0]);
        assert_eq!(g.largest_gap_index(), Some(1));
        assert!((g.relative[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tiny_gaps_are_floored() {
        let g = gaps_of(&[1.0, 1.0 - 1e-14, 0.5]);
        assert_eq!(g.gaps[0], 0.0);
        assert_eq!(gaps_of(&[1.0, 1.0]).largest_gap_index(), None);
    }
}
