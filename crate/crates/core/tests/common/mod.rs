//! Helpers shared by the integration tests and the acceptance suite.
#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use ridge_sdr::slicing::partition;
use ridge_sdr::{SampleSet, SliceScheme};

/// Literal transcription of SIR: slice means, then `Σ_r (N_r/N) μ_r μ_rᵀ`
/// with plain loops and no rearrangement.
pub fn oracle_sir(x: &[Vec<f64>], members: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    let m = x[0].len();
    let mut c = vec![vec![0.0; m]; m];
    for slice in members {
        let nr = slice.len() as f64;
        let mut mu = vec![0.0; m];
        for &i in slice {
            for j in 0..m {
                mu[j] += x[i][j];
            }
        }
        for v in mu.iter_mut() {
            *v /= nr;
        }
        for a in 0..m {
            for b in 0..m {
                c[a][b] += nr / n * mu[a] * mu[b];
            }
        }
    }
    c
}

/// Literal transcription of SAVE: slice covariances with `1/(N_r − 1)`
/// (zero for one-sample slices), then `Σ_r (N_r/N) (I − Σ_r)(I − Σ_r)`.
pub fn oracle_save(x: &[Vec<f64>], members: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let n = x.len() as f64;
    let m = x[0].len();
    let mut c = vec![vec![0.0; m]; m];
    for slice in members {
        let nr = slice.len() as f64;
        let mut mu = vec![0.0; m];
        for &i in slice {
            for j in 0..m {
                mu[j] += x[i][j];
            }
        }
        for v in mu.iter_mut() {
            *v /= nr;
        }
        let mut sigma = vec![vec![0.0; m]; m];
        if slice.len() > 1 {
            for &i in slice {
                for a in 0..m {
                    for b in 0..m {
                        sigma[a][b] += (x[i][a] - mu[a]) * (x[i][b] - mu[b]) / (nr - 1.0);
                    }
                }
            }
        }
        let mut d = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in 0..m {
                d[a][b] = if a == b { 1.0 } else { 0.0 } - sigma[a][b];
            }
        }
        for a in 0..m {
            for b in 0..m {
                let mut sq = 0.0;
                for k in 0..m {
                    sq += d[a][k] * d[k][b];
                }
                c[a][b] += nr / n * sq;
            }
        }
    }
    c
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in b.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((a[(i, j)] - v).abs());
        }
    }
    worst
}

/// A random small problem: `N ≤ 200`, `m ≤ 5`, `R ≤ 8`, outputs with ties.
pub struct OracleCase {
    pub rows: Vec<Vec<f64>>,
    pub samples: SampleSet,
    pub slices: usize,
    pub scheme: SliceScheme,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> OracleCase {
    let m = rng.random_range(1..=5);
    let slices = rng.random_range(1..=8);
    let n = rng.random_range(slices.max(2)..=200);
    let scheme = if rng.random_bool(0.5) {
        SliceScheme::EqualCount
    } else {
        SliceScheme::FixedWidth
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    // Coarse rounding on some draws produces tied outputs.
    let tie_grid = rng.random_bool(0.5);
    let y: Vec<f64> = rows
        .iter()
        .map(|r| {
            let v = r.iter().map(|v| v * v).sum::<f64>() + r[0];
            if tie_grid {
                (v * 2.0).round() / 2.0
            } else {
                v
            }
        })
        .collect();
    let samples = SampleSet::from_rows(&rows, y).unwrap().assume_standardized();
    OracleCase {
        rows,
        samples,
        slices,
        scheme,
    }
}

/// Worst oracle discrepancy over both estimators for one case.
pub fn oracle_discrepancy(case: &OracleCase) -> f64 {
    let part = partition(case.samples.outputs(), case.slices, case.scheme).unwrap();
    let stats = ridge_sdr::slice_stats(&case.samples, &part).unwrap();
    let sir = ridge_sdr::sir_matrix(&stats);
    let save = ridge_sdr::save_matrix(&stats);
    max_abs_diff(&sir, &oracle_sir(&case.rows, part.members()))
        .max(max_abs_diff(&save, &oracle_save(&case.rows, part.members())))
}

/// Haar-ish random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(m, m, |_, _| rng.sample(StandardNormal));
    g.qr().q()
}

pub fn gaussian_matrix(r: usize, c: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|j| {
            let mut p = x.to_vec();
            let mut q = x.to_vec();
            p[j] += h;
            q[j] -= h;
            (f(&p) - f(&q)) / (2.0 * h)
        })
        .collect()
}
