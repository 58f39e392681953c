//! Analytic quantities behind the convergence guarantees, in executable form.

use crate::algorithm::{init_seed, initial_basis};
use crate::error::{Error, Result};
use crate::linalg::{
    qr_decompose_owned, sample_gaussian_matrix, singular_values, spectral_norm, Matrix,
};
use crate::model::{SpikedModel, ORACLE_DIM_LIMIT};
use crate::rng::{self, role};

/// Per-block contraction `γ = (σ² + λ²/2) / (σ² + 3λ²/4)`.
pub fn contraction_factor(sigma: f64, lambda_k: f64) -> Result<f64> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    if !(lambda_k > 0.0 && lambda_k <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda_k must lie in (0, 1], got {lambda_k}"
        )));
    }
    let s2 = sigma * sigma;
    let l2 = lambda_k * lambda_k;
    Ok((s2 + 0.5 * l2) / (s2 + 0.75 * l2))
}

/// `γ^{2τ}δ₀ / (1 − (1 − γ^{2τ})δ₀)`: `τ` applications of the one-step bound.
pub fn recursion_closed_form(delta0: f64, gamma: f64, tau: u32) -> Result<f64> {
    if !(0.0..1.0).contains(&delta0) {
        return Err(Error::InvalidParameter(format!(
            "delta0 must lie in [0, 1), got {delta0}"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    let g = gamma.powi(2 * tau as i32);
    Ok(g * delta0 / (1.0 - (1.0 - g) * delta0))
}

/// `γ²δ / (1 − δ + γ²δ)`.
pub fn recursion_one_step(delta: f64, gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    g2 * delta / (1.0 - delta + g2 * delta)
}

/// Outcome of comparing the iterated one-step map to the closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridCheck {
    pub points: usize,
    /// Points where the iterate exceeded the closed form by more than `tol`.
    pub violations: usize,
    /// Largest `iterated − closed` seen (negative means strictly below).
    pub max_excess: f64,
}

impl GridCheck {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Grid `δ₀ ∈ linspace(0.01, 0.99, 20)`, `γ ∈ linspace(0.05, 0.95, 20)`,
/// `τ ∈ 0..=max_tau`.
pub fn recursion_grid_check(max_tau: u32, tol: f64) -> GridCheck {
    let mut check = GridCheck {
        points: 0,
        violations: 0,
        max_excess: f64::NEG_INFINITY,
    };
    for &d0 in &linspace(0.01, 0.99, 20) {
        for &g in &linspace(0.05, 0.95, 20) {
            let mut d = d0;
            for tau in 0..=max_tau {
                if tau > 0 {
                    d = recursion_one_step(d, g);
                }
                let bound = recursion_closed_form(d0, g, tau).expect("grid inside domain");
                let excess = d - bound;
                check.points += 1;
                check.max_excess = check.max_excess.max(excess);
                if excess > tol {
                    check.violations += 1;
                }
            }
        }
    }
    check
}

/// `‖F − (AAᵀ + σ²I)‖₂` with `F = (1/B) Σ x xᵀ` over `block`.
pub fn covariance_deviation(block: &[Vec<f64>], model: &SpikedModel) -> Result<f64> {
    let p = model.dim();
    if p > ORACLE_DIM_LIMIT {
        return Err(Error::OracleScale {
            p,
            limit: ORACLE_DIM_LIMIT,
        });
    }
    if block.is_empty() {
        return Err(Error::EmptyStream);
    }
    let mut f = model.population_covariance()?.scaled(-1.0);
    let w = 1.0 / block.len() as f64;
    let data = f.as_mut_slice();
    for x in block {
        if x.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: x.len(),
            });
        }
        for (i, &xi) in x.iter().enumerate() {
            let row = &mut data[i * p..(i + 1) * p];
            for (fij, &xj) in row.iter_mut().zip(x) {
                *fij += w * xi * xj;
            }
        }
    }
    Ok(spectral_norm(&f))
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median of unsorted data.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// Distribution of `σ_k(UᵀQ₀)·√(kp)` for random starts against a fixed `U`.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapStats {
    pub p: usize,
    pub k: usize,
    pub trials: usize,
    pub min: f64,
    pub p01: f64,
    pub p10: f64,
    pub median: f64,
    pub max: f64,
}

/// `U` is drawn once from `seed`; trial `t` draws `Q₀` from
/// `init_seed(derive_seed(seed, TRIAL, t), 0)`, the same start a run with
/// that trial seed would use.
pub fn initialization_overlap_stats(
    p: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<OverlapStats> {
    if trials < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 trials, got {trials}"
        )));
    }
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= p, got k={k}, p={p}"
        )));
    }
    let mut rng = rng::seeded(rng::derive_seed(seed, role::MODEL, 0));
    let u = qr_decompose_owned(sample_gaussian_matrix(p, k, &mut rng))?.0;
    let scale = ((k * p) as f64).sqrt();
    let mut values = Vec::with_capacity(trials);
    for t in 0..trials {
        let trial_seed = rng::derive_seed(seed, role::TRIAL, t as u64);
        let q0 = initial_basis(p, k, init_seed(trial_seed, 0))?;
        let overlap: Matrix = u.matrix().t_matmul(q0.matrix())?;
        let smallest = singular_values(&overlap).last().copied().unwrap_or(0.0);
        values.push(smallest * scale);
    }
    values.sort_by(f64::total_cmp);
    Ok(OverlapStats {
        p,
        k,
        trials,
        min: values[0],
        p01: quantile(&values, 0.01),
        p10: quantile(&values, 0.10),
        median: quantile(&values, 0.5),
        max: values[trials - 1],
    })
}
