//! Partitioning of the observed response range into slices, and the per-slice
//! moments consumed by the estimators.
//!
//! Slice `r` covers `J_r = [ỹ_{r−1}, ỹ_r]`. A response equal to an interior
//! boundary belongs to the lower slice, so slice `r > 1` effectively holds
//! `(ỹ_{r−1}, ỹ_r]`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdrError};
use crate::types::SampleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SliceScheme {
    /// Equispaced boundaries between `y_min` and `y_max`.
    #[value(name = "fixed")]
    FixedWidth,
    /// Nearly equal sample counts per slice (maximizes the smallest slice).
    EqualCount,
}

impl std::fmt::Display for SliceScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SliceScheme::FixedWidth => write!(f, "fixed"),
            SliceScheme::EqualCount => write!(f, "equal-count"),
        }
    }
}

/// `⌊√N⌋` clamped to `[5, 50]`.
pub fn default_slice_count(n: usize) -> usize {
    (n as f64).sqrt().floor().clamp(5.0, 50.0) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlicePartition {
    boundaries: Vec<f64>,
    members: Vec<Vec<usize>>,
    scheme: SliceScheme,
    n_samples: usize,
    degenerate: bool,
}

impl SlicePartition {
    /// `R + 1` ascending boundaries `ỹ₀ … ỹ_R`.
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Sample indices of each slice, ascending.
    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn counts(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    /// Realized number of slices `R`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Smallest per-slice count `N_rmin`.
    pub fn min_count(&self) -> usize {
        self.members.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn scheme(&self) -> SliceScheme {
        self.scheme
    }

    /// Set when every response was identical and a single slice was returned.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

fn check_outputs(outputs: &[f64], slices: usize) -> Result<()> {
    if outputs.is_empty() {
        return Err(SdrError::InvalidArgument("no samples to slice".into()));
    }
    if slices == 0 {
        return Err(SdrError::InvalidArgument("slice count must be >= 1".into()));
    }
    if let Some(i) = outputs.iter().position(|y| !y.is_finite()) {
        return Err(SdrError::NonFinite(format!("output at row {i}")));
    }
    Ok(())
}

fn min_max(outputs: &[f64]) -> (f64, f64) {
    outputs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)))
}

fn single_slice(outputs: &[f64], scheme: SliceScheme, degenerate: bool) -> SlicePartition {
    let (lo, hi) = min_max(outputs);
    SlicePartition {
        boundaries: vec![lo, hi],
        members: vec![(0..outputs.len()).collect()],
        scheme,
        n_samples: outputs.len(),
        degenerate,
    }
}

/// Equispaced slices; empty slices are merged into their lower neighbour.
///
/// If every output is identical a single flagged slice is returned.
pub fn partition_fixed(outputs: &[f64], slices: usize) -> Result<SlicePartition> {
    check_outputs(outputs, slices)?;
    let (lo, hi) = min_max(outputs);
    if lo == hi {
        return Ok(single_slice(outputs, SliceScheme::FixedWidth, true));
    }
    let width = hi - lo;
    let mut raw: Vec<f64> = (0..=slices)
        .map(|k| if k == slices { hi } else { lo + width * (k as f64) / (slices as f64) })
        .collect();
    raw.dedup();

    let interior = &raw[1..];
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); raw.len() - 1];
    for (i, &y) in outputs.iter().enumerate() {
        // first upper boundary >= y; ties go to the lower slice
        let r = interior.partition_point(|&b| b < y).min(buckets.len() - 1);
        buckets[r].push(i);
    }

    let mut boundaries = vec![raw[0]];
    let mut members = Vec::new();
    for (r, bucket) in buckets.into_iter().enumerate() {
        if bucket.is_empty() {
            // slice 0 holds y_min, so there is always a lower neighbour to extend
            *boundaries.last_mut().expect("lower boundary") = raw[r + 1];
        } else {
            boundaries.push(raw[r + 1]);
            members.push(bucket);
        }
    }
    Ok(SlicePartition {
        boundaries,
        members,
        scheme: SliceScheme::FixedWidth,
        n_samples: outputs.len(),
        degenerate: false,
    })
}

/// Slices holding `⌈N/R⌉` or `⌊N/R⌋` samples each, by sorted response.
///
/// Equal responses never straddle a cut: a cut inside a run of ties moves left
/// to the nearest change of value, or right if moving left would empty the
/// slice, and is dropped when neither works. Boundaries are midpoints between
/// the adjacent distinct responses.
pub fn partition_equal_count(outputs: &[f64], slices: usize) -> Result<SlicePartition> {
    check_outputs(outputs, slices)?;
    let n = outputs.len();
    if slices > n {
        return Err(SdrError::TooManySlices {
            slices,
            samples: n,
        });
    }
    let (lo, hi) = min_max(outputs);
    if lo == hi {
        return Ok(single_slice(outputs, SliceScheme::EqualCount, true));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| outputs[a].total_cmp(&outputs[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&i| outputs[i]).collect();
    // a cut at position c separates sorted[c - 1] and sorted[c]
    let valid = |c: usize| sorted[c - 1] != sorted[c];

    let base = n / slices;
    let extra = n % slices;
    let mut cuts = Vec::with_capacity(slices - 1);
    let mut nominal = 0;
    for r in 0..slices - 1 {
        nominal += base + usize::from(r < extra);
        let prev = cuts.last().copied().unwrap_or(0);
        let chosen = if nominal > prev && valid(nominal) {
            Some(nominal)
        } else {
            let left = (prev + 1..nominal.min(n)).rev().find(|&c| valid(c));
            left.or_else(|| (nominal.max(prev + 1)..n).find(|&c| valid(c)))
        };
        if let Some(c) = chosen {
            cuts.push(c);
        }
    }

    let mut boundaries = vec![lo];
    let mut members = Vec::with_capacity(cuts.len() + 1);
    let mut start = 0;
    for &c in cuts.iter().chain(std::iter::once(&n)) {
        let mut slice: Vec<usize> = order[start..c].to_vec();
        slice.sort_unstable();
        members.push(slice);
        if c < n {
            boundaries.push(midpoint(sorted[c - 1], sorted[c]));
        }
        start = c;
    }
    boundaries.push(hi);
    Ok(SlicePartition {
        boundaries,
        members,
        scheme: SliceScheme::EqualCount,
        n_samples: n,
        degenerate: false,
    })
}

/// Midpoint of `a < b` that is strictly below `b`, so `a` stays in the lower
/// slice and `b` in the upper one under the lower-slice tie rule.
fn midpoint(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid >= b {
        a
    } else {
        mid
    }
}

pub fn partition(outputs: &[f64], slices: usize, scheme: SliceScheme) -> Result<SlicePartition> {
    match scheme {
        SliceScheme::FixedWidth => partition_fixed(outputs, slices),
        SliceScheme::EqualCount => partition_equal_count(outputs, slices),
    }
}

/// Per-slice weights `ω̂_r = N_r/N`, means `μ̂_r` and covariances `Σ̂_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceStats {
    pub counts: Vec<usize>,
    pub n_samples: usize,
    pub weights: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    /// Sample covariances with the `1/(N_r − 1)` normalization; zero for
    /// single-sample slices.
    pub covariances: Vec<DMatrix<f64>>,
    /// Slices with `N_r = 1`, whose covariance is defined as zero.
    pub degenerate: Vec<bool>,
}

impl SliceStats {
    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, DVector::len)
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

pub fn slice_stats(s: &SampleSet, p: &SlicePartition) -> Result<SliceStats> {
    let n = s.len();
    if p.n_samples() != n {
        return Err(SdrError::DimensionMismatch(format!(
            "partition built for {} samples, sample set has {n}",
            p.n_samples()
        )));
    }
    if p.members().iter().flatten().any(|&i| i >= n) {
        return Err(SdrError::DimensionMismatch("partition index out of range".into()));
    }
    let x = s.inputs();
    let m = s.dim();

    let per_slice: Vec<(DVector<f64>, DMatrix<f64>)> = p
        .members()
        .par_iter()
        .map(|idx| {
            let nr = idx.len() as f64;
            let mut mean = DVector::<f64>::zeros(m);
            for &i in idx {
                for j in 0..m {
                    mean[j] += x[(i, j)];
                }
            }
            mean /= nr;

            let mut cov = DMatrix::<f64>::zeros(m, m);
            if idx.len() > 1 {
                let mut d = vec![0.0; m];
                for &i in idx {
                    for j in 0..m {
                        d[j] = x[(i, j)] - mean[j];
                    }
                    for a in 0..m {
                        for b in a..m {
                            cov[(a, b)] += d[a] * d[b];
                        }
                    }
                }
                for a in 0..m {
                    for b in a..m {
                        let v = cov[(a, b)] / (nr - 1.0);
                        cov[(a, b)] = v;
                        cov[(b, a)] = v;
                    }
                }
            }
            (mean, cov)
        })
        .collect();

    let counts = p.counts();
    let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
    let degenerate = counts.iter().map(|&c| c == 1).collect();
    let (means, covariances) = per_slice.into_iter().unzip();
    Ok(SliceStats {
        counts,
        n_samples: n,
        weights,
        means,
        covariances,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_even_split() {
        let p = partition_fixed(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(p.boundaries(), &[0.0, 1.5, 3.0]);
        assert_eq!(p.counts(), vec![2, 2]);
    }

    #[test]
    fn fixed_constant_outputs() {
        let p = partition_fixed(&[5.0, 5.0, 5.0], 4).unwrap();
        assert_eq!(p.counts(), vec![3]);
        assert!(p.is_degenerate());
    }

    #[test]
    fn fixed_merges_empty_slices_downward() {
        let p = partition_fixed(&[0.0, 0.1, 0.2, 10.0], 5).unwrap();
        assert_eq!(p.boundaries(), &[0.0, 8.0, 10.0]);
        assert_eq!(p.counts(), vec![3, 1]);
        assert!(p.counts().iter().all(|&c| c >= 1));
    }

    #[test]
    fn fixed_boundary_ties_go_down() {
        // 1.5 sits exactly on the interior boundary
        let p = partition_fixed(&[0.0, 1.5, 3.0], 2).unwrap();
        assert_eq!(p.members(), &[vec![0, 1], vec![2]]);
    }

    #[test]
    fn equal_count_sorts_and_splits() {
        let y = [3.0, 1.0, 2.0, 5.0, 4.0, 6.0];
        let p = partition_equal_count(&y, 3).unwrap();
        assert_eq!(p.counts(), vec![2, 2, 2]);
        let values: Vec<Vec<f64>> = p
            .members()
            .iter()
            .map(|s| {
                let mut v: Vec<f64> = s.iter().map(|&i| y[i]).collect();
                v.sort_by(f64::total_cmp);
                v
            })
            .collect();
        assert_eq!(values, vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        assert_eq!(p.boundaries(), &[1.0, 2.5, 4.5, 6.0]);
    }

    #[test]
    fn equal_count_keeps_ties_together() {
        let p = partition_equal_count(&[1.0, 1.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(p.counts(), vec![3, 1]);
    }

    #[test]
    fn equal_count_drops_impossible_cuts() {
        let p = partition_equal_count(&[1.0, 1.0, 1.0, 1.0, 2.0], 4).unwrap();
        assert_eq!(p.counts(), vec![4, 1]);
    }

    #[test]
    fn equal_count_single_slice() {
        let p = partition_equal_count(&[0.3, -1.0, 2.0], 1).unwrap();
        assert_eq!(p.counts(), vec![3]);
        assert_eq!(p.boundaries(), &[-1.0, 2.0]);
    }

    #[test]
    fn equal_count_rejects_too_many_slices() {
        let err = partition_equal_count(&[1.0, 2.0], 3).unwrap_err();
        assert_eq!(err.to_string(), "more slices than samples (3 slices, 2 samples)");
    }

    #[test]
    fn balanced_counts_when_not_divisible() {
        let y: Vec<f64> = (0..23).map(|i| i as f64).collect();
        let c = partition_equal_count(&y, 5).unwrap().counts();
        assert_eq!(c, vec![5, 5, 5, 4, 4]);
    }

    #[test]
    fn adjacent_floats_split_cleanly() {
        let a = 1.0_f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let p = partition_equal_count(&[a, b], 2).unwrap();
        assert_eq!(p.boundaries()[1], a);
        assert_eq!(p.members(), &[vec![0], vec![1]]);
    }

    #[test]
    fn default_slice_count_clamps() {
        assert_eq!(default_slice_count(4), 5);
        assert_eq!(default_slice_count(400), 20);
        assert_eq!(default_slice_count(1_000_000), 50);
    }

    #[test]
    fn stats_single_slice_pair() {
        let s = SampleSet::from_rows(&[vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        let p = partition_equal_count(s.outputs(), 1).unwrap();
        let st = slice_stats(&s, &p).unwrap();
        assert_eq!(st.means[0][0], 0.0);
        assert_eq!(st.covariances[0][(0, 0)], 2.0);
    }

    #[test]
    fn stats_single_sample_is_degenerate() {
        let s = SampleSet::from_rows(&[vec![7.0]], vec![1.0]).unwrap();
        let p = partition_equal_count(s.outputs(), 1).unwrap();
        let st = slice_stats(&s, &p).unwrap();
        assert_eq!(st.means[0][0], 7.0);
        assert_eq!(st.covariances[0][(0, 0)], 0.0);
        assert_eq!(st.degenerate, vec![true]);
    }

    #[test]
    fn stats_four_point_example() {
        let s = SampleSet::from_rows(
            &[vec![1.0, 0.0], vec![3.0, 0.0], vec![0.0, 2.0], vec![0.0, 4.0]],
            vec![0.1, 0.2, 0.9, 1.0],
        )
        .unwrap();
        let p = partition_equal_count(s.outputs(), 2).unwrap();
        let st = slice_stats(&s, &p).unwrap();
        assert_eq!(st.means[0].as_slice(), &[2.0, 0.0]);
        assert_eq!(st.means[1].as_slice(), &[0.0, 3.0]);
        assert_eq!(st.weights, vec![0.5, 0.5]);
    }

    #[test]
    fn stats_reject_foreign_partition() {
        let s = SampleSet::from_rows(&[vec![1.0], vec![2.0]], vec![0.0, 1.0]).unwrap();
        let p = partition_equal_count(&[0.0, 1.0, 2.0], 1).unwrap();
        assert!(slice_stats(&s, &p).is_err());
    }
}
