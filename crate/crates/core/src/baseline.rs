//! Batch PCA oracle: forms the `p × p` empirical covariance.
//!
//! Only for desk-scale comparisons. Everything here costs `O(p²)` memory
//! and is guarded by [`ORACLE_DIM_LIMIT`].

use crate::algorithm::initial_basis;
use crate::error::{Error, Result};
use crate::linalg::{qr_decompose_owned, symmetric_eigen, Matrix, OrthonormalBasis};
use crate::model::ORACLE_DIM_LIMIT;
use crate::rng::{self, role};
use crate::stream::SampleStream;

const MAX_ITERS: usize = 10_000;
/// Ritz residual `‖C q_j − θ_j q_j‖` relative to `θ₁`.
const RESIDUAL_TOL: f64 = 1e-12;
const GAP_TOL: f64 = 1e-12;
/// Relative shift keeping the iterated block full rank on singular inputs.
const SHIFT: f64 = 1e-6;
const MATRIX_SEED: u64 = 0x0ba7_c4ed;

/// Top-`k` eigenpairs of a covariance matrix.
#[derive(Clone, Debug)]
pub struct BatchPca {
    pub basis: OrthonormalBasis,
    /// Ritz values, descending.
    pub eigenvalues: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Set when `λ_k − λ_{k+1}` is below `1e-12·λ₁`: the top-`k` subspace is
    /// then not well defined.
    pub ill_conditioned: bool,
}

fn guard(p: usize) -> Result<()> {
    if p > ORACLE_DIM_LIMIT {
        return Err(Error::OracleScale {
            p,
            limit: ORACLE_DIM_LIMIT,
        });
    }
    Ok(())
}

/// Empirical covariance `(1/n) Σ x xᵀ` accumulated from a stream.
pub fn empirical_covariance<S: SampleStream + ?Sized>(stream: &mut S) -> Result<Matrix> {
    let p = stream.dim();
    guard(p)?;
    let mut c = Matrix::zeros(p, p);
    let mut n = 0usize;
    {
        let data = c.as_mut_slice();
        while let Some(x) = stream.next_sample() {
            n += 1;
            for (i, &xi) in x.iter().enumerate() {
                if xi == 0.0 {
                    continue;
                }
                let row = &mut data[i * p..(i + 1) * p];
                for (cij, &xj) in row.iter_mut().zip(x) {
                    *cij += xi * xj;
                }
            }
        }
    }
    if n == 0 {
        return Err(Error::EmptyStream);
    }
    Ok(c.scaled(1.0 / n as f64))
}

/// Top-`k` principal subspace of the samples' uncentered covariance.
pub fn batch_pca(samples: &[Vec<f64>], k: usize, seed: u64) -> Result<BatchPca> {
    let Some(first) = samples.first() else {
        return Err(Error::EmptyStream);
    };
    let p = first.len();
    guard(p)?;
    let mut stream = crate::stream::InMemoryStream::new(samples.to_vec())?;
    let c = empirical_covariance(&mut stream)?;
    top_eigenspace(&c, k, rng::derive_seed(seed, role::INIT, 0))
}

/// Same as [`batch_pca`], reading the samples from a stream.
pub fn batch_pca_stream<S: SampleStream + ?Sized>(
    stream: &mut S,
    k: usize,
    seed: u64,
) -> Result<BatchPca> {
    let c = empirical_covariance(stream)?;
    top_eigenspace(&c, k, rng::derive_seed(seed, role::INIT, 0))
}

/// Top-`k` eigenspace of a symmetric PSD matrix, bypassing sampling.
pub fn batch_pca_on_matrix(c: &Matrix, k: usize) -> Result<BatchPca> {
    top_eigenspace(c, k, MATRIX_SEED)
}

/// Orthogonal iteration with Rayleigh-Ritz on `min(k+1, p)` vectors.
fn top_eigenspace(c: &Matrix, k: usize, start_seed: u64) -> Result<BatchPca> {
    let p = c.rows();
    if c.cols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: c.cols(),
        });
    }
    guard(p)?;
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= p, got k={k}, p={p}"
        )));
    }
    let m = (k + 1).min(p);
    let scale = c.frobenius_norm();
    let shift = SHIFT * scale;
    let mut q = initial_basis(p, m, start_seed)?.into_matrix();
    let mut theta = vec![0.0; m];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < MAX_ITERS {
        iterations += 1;
        let z = c.matmul(&q)?;
        let h = q.t_matmul(&z)?;
        let eig = symmetric_eigen(&h)?;
        q = q.matmul(&eig.vectors)?;
        let mut z = z.matmul(&eig.vectors)?;
        theta.copy_from_slice(&eig.values);

        let tol = RESIDUAL_TOL * theta[0].abs().max(f64::MIN_POSITIVE);
        let residual = (0..k)
            .map(|j| {
                (0..p)
                    .map(|i| (z.get(i, j) - theta[j] * q.get(i, j)).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if residual <= tol || scale == 0.0 {
            converged = true;
            break;
        }
        {
            let (zd, qd) = (z.as_mut_slice(), q.as_slice());
            for (a, b) in zd.iter_mut().zip(qd) {
                *a += shift * b;
            }
        }
        q = qr_decompose_owned(z)?.0.into_matrix();
    }

    let ill_conditioned =
        m > k && theta[k - 1] - theta[k] < GAP_TOL * theta[0].abs().max(f64::MIN_POSITIVE);
    let cols: Vec<Vec<f64>> = (0..k).map(|j| q.column(j)).collect();
    // Ritz vectors are orthonormal up to round-off; re-orthonormalize the slice.
    let basis = qr_decompose_owned(Matrix::from_columns(&cols)?)?.0;
    Ok(BatchPca {
        basis,
        eigenvalues: theta[..k].to_vec(),
        iterations,
        converged,
        ill_conditioned,
    })
}
