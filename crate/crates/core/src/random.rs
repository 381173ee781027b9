//! Seeded generators: random PSD correlation matrices (Gram construction)
//! and multivariate Gaussian data with a prescribed correlation matrix.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::corr::{CorrelationMatrix, DataMatrix};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Rows drawn per generator stream when sampling. Fixed so output does not
/// depend on the number of worker threads.
pub const SAMPLE_CHUNK: usize = 4096;

/// Generator for chunk `chunk` of a sample seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// `G^T G` for a `rank x n` Gaussian `G` with unit-normalized columns.
///
/// Ranks below `n` give singular (boundary) PSD matrices.
pub fn gram_correlation<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CorrelationMatrix {
    let rank = rank.max(1);
    let mut g = DMatrix::from_fn(rank, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    for mut col in g.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    let gram = g.transpose() * &g;
    CorrelationMatrix::from_upper(n, |i, j| gram[(i, j)])
}

/// Random PSD correlation matrix with `n` drawn from `3..=25` and rank drawn
/// from `1..=n + 2` (so roughly one in ten is rank deficient).
pub fn random_correlation<R: Rng + ?Sized>(rng: &mut R) -> CorrelationMatrix {
    let n = rng.random_range(3..=25);
    let rank = rng.random_range(1..=n + 2);
    gram_correlation(n, rank, rng)
}

/// `count` reproducible random PSD correlation matrices.
pub fn correlation_suite(count: usize, seed: u64) -> Vec<CorrelationMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_correlation(&mut rng)).collect()
}

/// `n_obs` Gaussian observations with correlation matrix `corr`, via the
/// Cholesky factor. `corr` must be positive definite.
pub fn sample_gaussian(
    corr: &CorrelationMatrix,
    n_obs: usize,
    seed: u64,
    exec: Execution,
) -> Result<DataMatrix> {
    if n_obs < 2 {
        return Err(Error::SampleSizeTooSmall(n_obs));
    }
    let p = corr.n();
    let chol = nalgebra::Cholesky::new(corr.entries().clone()).ok_or(Error::NotRealizable(
        crate::corr::psd_check(corr, 0.0).min_eigenvalue,
    ))?;
    let lower = chol.l();
    let n_chunks = n_obs.div_ceil(SAMPLE_CHUNK);
    let chunks = exec.map(n_chunks, |c| {
        let mut rng = chunk_rng(seed, c);
        let rows = SAMPLE_CHUNK.min(n_obs - c * SAMPLE_CHUNK);
        let mut out = Vec::with_capacity(rows * p);
        let mut z = vec![0.0; p];
        for _ in 0..rows {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for i in 0..p {
                out.push((0..=i).map(|k| lower[(i, k)] * z[k]).sum());
            }
        }
        out
    });
    let flat: Vec<f64> = chunks.into_iter().flatten().collect();
    let values = DMatrix::from_row_slice(n_obs, p, &flat);
    match corr.names() {
        Some(names) => DataMatrix::new(values, names.to_vec()),
        None => DataMatrix::unnamed(values),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corr::{psd_check, DEFAULT_PSD_TOL};

    #[test]
    fn gram_matrices_are_valid_correlations() {
        for c in correlation_suite(50, 7) {
            assert!((3..=25).contains(&c.n()));
            for i in 0..c.n() {
                assert_eq!(c.get(i, i), 1.0);
                for j in 0..c.n() {
                    assert_eq!(c.get(i, j), c.get(j, i));
                    assert!(c.get(i, j).abs() <= 1.0);
                }
            }
            assert!(psd_check(&c, DEFAULT_PSD_TOL).is_psd);
        }
    }

    #[test]
    fn suite_is_reproducible() {
        assert_eq!(correlation_suite(5, 3), correlation_suite(5, 3));
        assert_ne!(correlation_suite(5, 3), correlation_suite(5, 4));
    }

    #[test]
    fn gaussian_sample_independent_of_strategy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = gram_correlation(4, 8, &mut rng);
        let a = sample_gaussian(&c, 10_000, 9, Execution::Sequential).unwrap();
        let b = sample_gaussian(&c, 10_000, 9, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
