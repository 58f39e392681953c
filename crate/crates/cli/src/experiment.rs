//! Trial runners shared by the subcommands and the acceptance tests.
//!
//! Trial `i` under base seed `s` uses `derive_seed(s, TRIAL, i)`. From that
//! trial seed the model, the data and the start are drawn under separate
//! roles, so every trial is reproducible on its own.

use std::sync::Arc;

use anyhow::{Context, Result};
use blockpca::algorithm::{
    block_orthogonal_iteration, block_power_method_rank1, boosted_recovery, empirical_schedule,
    theorem1_schedule, theorem2_schedule, BlockSchedule, ScheduleConstants,
};
use blockpca::baseline::batch_pca_stream;
use blockpca::metrics::{principal_angle_distance, rank1_recovery_error};
use blockpca::model::{SpikedModel, ORACLE_DIM_LIMIT};
use blockpca::rng::{self, role};
use blockpca::stream::{ModelStream, SampleStream};
use blockpca::Error;
use rayon::prelude::*;

/// Seed of trial `index` under `base`.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    rng::derive_seed(base, role::TRIAL, index as u64)
}

/// Runs `f(0..trials)` on the rayon pool; results come back in trial order.
pub fn par_trials<T, F>(trials: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

/// Model family of a synthetic experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub p: usize,
    pub lambdas: Vec<f64>,
    pub sigma: f64,
}

impl ModelSpec {
    pub fn rank_one(p: usize, sigma: f64) -> Self {
        ModelSpec {
            p,
            lambdas: vec![1.0],
            sigma,
        }
    }

    /// A fresh random `U`, `V` drawn from the trial seed's model role.
    pub fn build(&self, trial_seed: u64) -> Result<Arc<SpikedModel>> {
        let mut r = rng::seeded(rng::derive_seed(trial_seed, role::MODEL, 0));
        Ok(Arc::new(SpikedModel::random(
            self.p,
            &self.lambdas,
            self.sigma,
            &mut r,
        )?))
    }
}

/// How the block schedule is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScheduleRule {
    Empirical {
        n: usize,
    },
    Theorem {
        eps: f64,
        constants: ScheduleConstants,
    },
    Manual {
        block_size: usize,
        block_count: usize,
    },
}

impl ScheduleRule {
    /// `k = 1` uses the rank-one bound, larger `k` the rank-`k` bound at
    /// `λ_k`.
    pub fn resolve(&self, spec: &ModelSpec, k: usize) -> blockpca::Result<BlockSchedule> {
        match *self {
            ScheduleRule::Empirical { n } => empirical_schedule(n, spec.p),
            ScheduleRule::Theorem { eps, constants } if k == 1 => {
                theorem1_schedule(spec.p, spec.sigma, eps, constants)
            }
            ScheduleRule::Theorem { eps, constants } => {
                let lambda_k = *spec.lambdas.get(k - 1).ok_or_else(|| {
                    Error::Configuration(format!(
                        "k={k} exceeds the {} supplied lambdas",
                        spec.lambdas.len()
                    ))
                })?;
                theorem2_schedule(spec.p, k, spec.sigma, lambda_k, eps, constants)
            }
            ScheduleRule::Manual {
                block_size,
                block_count,
            } => BlockSchedule::manual(block_size, block_count),
        }
    }
}

/// One synthetic recovery trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub seed: u64,
    /// Rank-one sign-resolved error for `k = 1`, principal-angle distance
    /// otherwise. `None` when the schedule could not be met.
    pub final_distance: Option<f64>,
    pub samples_used: usize,
    pub schedule: Option<BlockSchedule>,
}

impl TrialOutcome {
    pub fn success(&self, eps: f64) -> bool {
        self.final_distance.is_some_and(|d| d <= eps)
    }
}

/// Boosting parameters; `instances = 1` is the plain algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Boost {
    pub instances: usize,
    pub eval_block: usize,
}

/// Draws a model and a stream from `seed`, runs the algorithm, scores it.
pub fn recover_trial(
    spec: &ModelSpec,
    k: usize,
    rule: &ScheduleRule,
    boost: Option<Boost>,
    seed: u64,
) -> Result<TrialOutcome> {
    if k == 0 || k > spec.lambdas.len() {
        anyhow::bail!("need 1 <= k <= r={}, got k={k}", spec.lambdas.len());
    }
    let schedule = match rule.resolve(spec, k) {
        Ok(s) => s,
        Err(Error::InsufficientSamples { .. }) => {
            return Ok(TrialOutcome {
                seed,
                final_distance: None,
                samples_used: 0,
                schedule: None,
            })
        }
        Err(e) => return Err(e.into()),
    };
    let model = spec.build(seed)?;
    let extra = boost.map_or(0, |b| b.eval_block);
    let n = schedule.total_samples() + extra;
    let mut stream = ModelStream::new(Arc::clone(&model), n, rng::derive_seed(seed, role::DATA, 0));
    let u = model.spike_basis();
    let basis = match boost {
        Some(b) if b.instances > 1 => {
            boosted_recovery(
                &mut stream,
                k,
                &schedule,
                b.instances,
                b.eval_block,
                seed,
                None,
            )?
            .best
            .estimate
            .basis
        }
        _ if k == 1 => {
            block_power_method_rank1(&mut stream, &schedule, seed, None)?
                .estimate
                .basis
        }
        _ => {
            block_orthogonal_iteration(&mut stream, k, &schedule, seed, None)?
                .estimate
                .basis
        }
    };
    let final_distance = if k == 1 {
        // the spike basis has r columns; score against its first direction
        rank1_recovery_error(&basis.column(0), &u.column(0))?
    } else {
        let top = top_columns(u, k)?;
        principal_angle_distance(&top, &basis)?.value()
    };
    Ok(TrialOutcome {
        seed,
        final_distance: Some(final_distance),
        samples_used: n,
        schedule: Some(schedule),
    })
}

fn top_columns(u: &blockpca::OrthonormalBasis, k: usize) -> Result<blockpca::OrthonormalBasis> {
    if u.k() == k {
        return Ok(u.clone());
    }
    let cols: Vec<Vec<f64>> = (0..k).map(|j| u.column(j)).collect();
    Ok(blockpca::OrthonormalBasis::new(
        blockpca::Matrix::from_columns(&cols)?,
    )?)
}

/// `trials` trials under `base_seed`, in trial order.
pub fn recover_trials(
    spec: &ModelSpec,
    k: usize,
    rule: &ScheduleRule,
    boost: Option<Boost>,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<TrialOutcome>> {
    par_trials(trials, |i| {
        recover_trial(spec, k, rule, boost, trial_seed(base_seed, i))
    })
    .into_iter()
    .collect()
}

pub fn success_fraction(outcomes: &[TrialOutcome], eps: f64) -> f64 {
    if outcomes.is_empty() {
        return 0.0;
    }
    outcomes.iter().filter(|o| o.success(eps)).count() as f64 / outcomes.len() as f64
}

/// Batch PCA on `n` samples of a fresh trial model, scored like
/// [`recover_trial`].
pub fn batch_trial(spec: &ModelSpec, k: usize, n: usize, seed: u64) -> Result<f64> {
    if spec.p > ORACLE_DIM_LIMIT {
        anyhow::bail!("batch PCA is limited to p <= {ORACLE_DIM_LIMIT}");
    }
    let model = spec.build(seed)?;
    let mut stream = ModelStream::new(Arc::clone(&model), n, rng::derive_seed(seed, role::DATA, 0));
    let est = batch_pca_stream(&mut stream, k, seed)?;
    let u = model.spike_basis();
    Ok(if k == 1 {
        rank1_recovery_error(&est.basis.column(0), &u.column(0))?
    } else {
        principal_angle_distance(&top_columns(u, k)?, &est.basis)?.value()
    })
}

/// Smallest `n` on the grid `⌈n₀·1.3^i⌉ ≤ cap` reaching `target` success, by
/// galloping up from `n₀` and then bisecting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchResult {
    pub n: usize,
    pub success: f64,
    /// True when even the cap fell short; `n` is then the cap.
    pub saturated: bool,
}

pub const GRID_FACTOR: f64 = 1.3;

pub fn geometric_grid(start: usize, cap: usize) -> Vec<usize> {
    let mut grid = Vec::new();
    let mut x = start.max(1) as f64;
    while (x.ceil() as usize) <= cap {
        let n = x.ceil() as usize;
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        x *= GRID_FACTOR;
    }
    if grid.last() != Some(&cap) {
        grid.push(cap);
    }
    grid
}

pub fn minimal_n<F>(grid: &[usize], target: f64, mut success_at: F) -> Result<SearchResult>
where
    F: FnMut(usize) -> Result<f64>,
{
    anyhow::ensure!(!grid.is_empty(), "empty search grid");
    // galloping: probe indices 0, 1, 3, 7, ... until success
    let mut lo: Option<usize> = None; // largest index known to fail
    let mut step = 1usize;
    let mut idx = 0usize;
    let (hi, hi_success) = loop {
        let s = success_at(grid[idx])?;
        if s >= target {
            break (idx, s);
        }
        lo = Some(idx);
        if idx == grid.len() - 1 {
            return Ok(SearchResult {
                n: grid[idx],
                success: s,
                saturated: true,
            });
        }
        idx = (idx + step).min(grid.len() - 1);
        step *= 2;
    };
    let (mut lo, mut hi, mut best) = (lo, hi, hi_success);
    while let Some(l) = lo {
        if hi - l <= 1 {
            break;
        }
        let mid = l + (hi - l) / 2;
        let s = success_at(grid[mid])?;
        if s >= target {
            hi = mid;
            best = s;
        } else {
            lo = Some(mid);
        }
    }
    Ok(SearchResult {
        n: grid[hi],
        success: best,
        saturated: false,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One `p` of the sample-complexity sweep (rank one, empirical schedule).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub p: usize,
    pub streaming: SearchResult,
    /// `None` when batch PCA was skipped or `p` is above the dense limit.
    pub batch: Option<SearchResult>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingParams {
    pub sigma: f64,
    pub eps: f64,
    pub target: f64,
    pub trials: usize,
    pub seed: u64,
    pub n_cap: usize,
    pub batch: bool,
}

/// Searches the grid starting at `n_start`. Every grid point reuses the same
/// trial seeds, so success counts at neighbouring `n` are coupled.
pub fn scaling_row(p: usize, n_start: usize, params: &ScalingParams) -> Result<ScalingRow> {
    let spec = ModelSpec::rank_one(p, params.sigma);
    let grid = geometric_grid(n_start.min(params.n_cap), params.n_cap);
    let streaming = minimal_n(&grid, params.target, |n| {
        let o = recover_trials(
            &spec,
            1,
            &ScheduleRule::Empirical { n },
            None,
            params.trials,
            params.seed,
        )?;
        Ok(success_fraction(&o, params.eps))
    })?;
    let batch = if params.batch && p <= ORACLE_DIM_LIMIT {
        Some(minimal_n(&grid, params.target, |n| {
            let errs = par_trials(params.trials, |i| {
                batch_trial(&spec, 1, n, trial_seed(params.seed, i))
            })
            .into_iter()
            .collect::<Result<Vec<f64>>>()?;
            Ok(errs.iter().filter(|&&e| e <= params.eps).count() as f64 / errs.len() as f64)
        })?)
    } else {
        None
    };
    Ok(ScalingRow {
        p,
        streaming,
        batch,
    })
}

/// Sweeps `ps` in ascending order. Each search starts at half the previous
/// `p`'s answer, since the minimal `n` grows with `p`.
pub fn scaling_sweep(
    ps: &[usize],
    n_start: usize,
    params: &ScalingParams,
) -> Result<Vec<ScalingRow>> {
    let mut sorted = ps.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut rows = Vec::with_capacity(sorted.len());
    let mut start = n_start;
    for p in sorted {
        let row = scaling_row(p, start, params)?;
        if !row.streaming.saturated {
            start = start.max(row.streaming.n / 2);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Median `‖F − Σ‖₂` over `blocks` independent blocks at each block size.
/// The rank-one model is drawn once from `seed`; block size `i` reads its
/// own stream seeded `derive_seed(seed, DATA, i)`.
pub fn concentration_medians(
    p: usize,
    sigma: f64,
    block_sizes: &[usize],
    blocks: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    anyhow::ensure!(blocks > 0, "need at least one block per size");
    let model = ModelSpec::rank_one(p, sigma).build(seed)?;
    block_sizes
        .iter()
        .enumerate()
        .map(|(level, &b)| {
            anyhow::ensure!(b > 0, "block size must be positive");
            let devs = par_trials(blocks, |t| {
                let mut stream = ModelStream::new(
                    Arc::clone(&model),
                    b,
                    rng::derive_seed(
                        rng::derive_seed(seed, role::DATA, level as u64),
                        role::TRIAL,
                        t as u64,
                    ),
                );
                let mut block = Vec::with_capacity(b);
                while let Some(x) = stream.next_sample() {
                    block.push(x.to_vec());
                }
                blockpca::theory::covariance_deviation(&block, &model)
            })
            .into_iter()
            .collect::<blockpca::Result<Vec<f64>>>()?;
            Ok(blockpca::theory::median(&devs))
        })
        .collect()
}

/// Reads `BLOCKPCA_THREADS` and sizes the global rayon pool.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

pub const THREADS_ENV: &str = "BLOCKPCA_THREADS";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_geometric_and_capped() {
        let g = geometric_grid(10, 40);
        assert_eq!(g, vec![10, 13, 17, 22, 29, 38, 40]);
    }

    #[test]
    fn minimal_n_finds_threshold() {
        let grid: Vec<usize> = (1..=100).collect();
        let mut calls = 0;
        let r = minimal_n(&grid, 0.5, |n| {
            calls += 1;
            Ok(if n >= 37 { 1.0 } else { 0.0 })
        })
        .unwrap();
        assert_eq!((r.n, r.saturated), (37, false));
        assert!(calls < 20);
        let r = minimal_n(&grid, 0.5, |_| Ok(0.0)).unwrap();
        assert!(r.saturated);
        let r = minimal_n(&grid, 0.5, |_| Ok(1.0)).unwrap();
        assert_eq!(r.n, 1);
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x| (x, 3.0 * x * x))
            .collect();
        assert!((log_log_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert!(log_log_slope(&pts[..1]).is_none());
    }

    #[test]
    fn short_budget_is_a_failed_trial() {
        let spec = ModelSpec::rank_one(1000, 0.5);
        let o = recover_trial(&spec, 1, &ScheduleRule::Empirical { n: 0 }, None, 1).unwrap();
        assert_eq!(o.final_distance, None);
        assert!(!o.success(0.5));
    }
}
