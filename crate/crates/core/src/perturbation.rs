//! Underparameterized runs: the model rank `r` exceeds the requested `k`.
//!
//! Success here only means the `k`-dimensional estimate stays inside the
//! `r`-dimensional spike subspace; which `k` directions it picks is not
//! constrained.

use std::sync::Arc;

use crate::algorithm::{block_orthogonal_iteration, BlockSchedule, RunReport};
use crate::error::{Error, Result};
use crate::linalg::OrthonormalBasis;
use crate::metrics::{principal_angle_distance, DistanceValue};
use crate::model::SpikedModel;
use crate::rng::{self, role};
use crate::stream::ModelStream;

/// `‖U⊥ᵀQ‖₂` against the full rank-`r` spike basis.
pub fn containment(model: &SpikedModel, q: &OrthonormalBasis) -> Result<DistanceValue> {
    principal_angle_distance(model.spike_basis(), q)
}

/// Rank-`k` run on a fresh stream of exactly `B·T` samples from `model`.
///
/// The data stream uses `derive_seed(seed, DATA, 0)`, the start uses the
/// usual init seed. The trace distances are containment values.
pub fn run_underparameterized(
    model: Arc<SpikedModel>,
    k: usize,
    schedule: &BlockSchedule,
    seed: u64,
) -> Result<(RunReport, DistanceValue)> {
    let r = model.rank();
    if k >= r {
        return Err(Error::Configuration(format!(
            "underparameterized mode needs k < r, got k={k}, r={r}"
        )));
    }
    let reference = model.spike_basis().clone();
    let mut stream = ModelStream::new(
        Arc::clone(&model),
        schedule.total_samples(),
        rng::derive_seed(seed, role::DATA, 0),
    );
    let report = block_orthogonal_iteration(&mut stream, k, schedule, seed, Some(&reference))?;
    let c = containment(&model, &report.estimate.basis)?;
    Ok((report, c))
}
