//! Block-stochastic power method and orthogonal iteration.
//!
//! A run consumes `T` blocks of `B` samples. Within block `τ + 1` the
//! accumulator `S = (1/B) Σ x (xᵀ Q_τ)` is built one sample at a time, so the
//! empirical covariance is never formed. At the block boundary the iterate
//! is renormalized (rank one) or re-orthonormalized by QR (rank `k`).
//!
//! Working memory is the current basis, the accumulator and `O(k²)` scratch.

use crate::error::{Error, Result};
use crate::linalg::{
    axpy, dot, norm, polar_project, qr_decompose_columns, qr_decompose_owned,
    sample_gaussian_matrix, spectral_norm, Matrix, OrthonormalBasis,
};
use crate::metrics::{transposed_distance, vector_distance};
use crate::rng::{self, role};
use crate::stream::SampleStream;

const DEGENERATE_NORM: f64 = 1e-14;
/// Largest block size or count a schedule formula may produce.
const MAX_SCHEDULE_VALUE: f64 = (1u64 << 53) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScheduleProvenance {
    Theorem1,
    Theorem2,
    Empirical,
    Manual,
}

impl ScheduleProvenance {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleProvenance::Theorem1 => "theorem1",
            ScheduleProvenance::Theorem2 => "theorem2",
            ScheduleProvenance::Empirical => "empirical",
            ScheduleProvenance::Manual => "manual",
        }
    }
}

/// `T` blocks of `B` samples each.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockSchedule {
    block_size: usize,
    block_count: usize,
    provenance: ScheduleProvenance,
}

impl BlockSchedule {
    pub fn manual(block_size: usize, block_count: usize) -> Result<Self> {
        BlockSchedule::with_provenance(block_size, block_count, ScheduleProvenance::Manual)
    }

    fn with_provenance(
        block_size: usize,
        block_count: usize,
        provenance: ScheduleProvenance,
    ) -> Result<Self> {
        if block_size == 0 || block_count == 0 {
            return Err(Error::InvalidParameter(format!(
                "block size and count must be >= 1, got B={block_size}, T={block_count}"
            )));
        }
        Ok(BlockSchedule {
            block_size,
            block_count,
            provenance,
        })
    }

    #[inline]
    pub fn block_size(&self) -> usize {
        self.block_size
    }

    #[inline]
    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn provenance(&self) -> ScheduleProvenance {
        self.provenance
    }

    /// `B·T`.
    pub fn total_samples(&self) -> usize {
        self.block_size * self.block_count
    }
}

/// Multipliers for the hidden constants in the sample-complexity bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScheduleConstants {
    /// Scales the block size `B`.
    pub c_b: f64,
    /// Scales the block count `T`.
    pub c_t: f64,
}

impl Default for ScheduleConstants {
    fn default() -> Self {
        ScheduleConstants { c_b: 0.2, c_t: 1.0 }
    }
}

fn check_constants(c: &ScheduleConstants) -> Result<()> {
    if !(c.c_b > 0.0 && c.c_b.is_finite() && c.c_t > 0.0 && c.c_t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "schedule constants must be positive, got c_B={}, c_T={}",
            c.c_b, c.c_t
        )));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be finite and >= 0, got {sigma}"
        )));
    }
    Ok(())
}

fn ceil_count(value: f64, what: &str) -> Result<usize> {
    if !value.is_finite() || value > MAX_SCHEDULE_VALUE {
        return Err(Error::InvalidParameter(format!(
            "{what} evaluates to {value}, which is not representable"
        )));
    }
    Ok((value.ceil() as usize).max(1))
}

/// Rank-one schedule:
/// `T = ⌈c_T · ln(p/ε) / ln((σ²+¾)/(σ²+½))⌉`,
/// `B = ⌈c_B · (1 + 3(σ+σ²)√p)² · ln(T+1) / ε²⌉`.
pub fn theorem1_schedule(
    p: usize,
    sigma: f64,
    eps: f64,
    constants: ScheduleConstants,
) -> Result<BlockSchedule> {
    if p == 0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    check_sigma(sigma)?;
    check_eps(eps)?;
    check_constants(&constants)?;
    let s2 = sigma * sigma;
    let pf = p as f64;
    let base = ((s2 + 0.75) / (s2 + 0.5)).ln();
    let t = ceil_count(constants.c_t * (pf / eps).ln() / base, "T")?;
    let lead = 1.0 + 3.0 * (sigma + s2) * pf.sqrt();
    let b = ceil_count(
        constants.c_b * lead * lead * ((t + 1) as f64).ln() / (eps * eps),
        "B",
    )?;
    BlockSchedule::with_provenance(b, t, ScheduleProvenance::Theorem1)
}

/// Rank-`k` schedule:
/// `T = ⌈c_T · ln(p/(kε)) / ln((σ²+¾λ_k²)/(σ²+½λ_k²))⌉`,
/// `B = ⌈c_B · ((1+σ)²√k + σ√(1+σ²)·k√p)² · ln(T+1) / (λ_k⁴ε²)⌉`.
pub fn theorem2_schedule(
    p: usize,
    k: usize,
    sigma: f64,
    lambda_k: f64,
    eps: f64,
    constants: ScheduleConstants,
) -> Result<BlockSchedule> {
    if k == 0 || p < k {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= p, got k={k}, p={p}"
        )));
    }
    if !(lambda_k > 0.0 && lambda_k <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda_k must lie in (0, 1], got {lambda_k}"
        )));
    }
    check_sigma(sigma)?;
    check_eps(eps)?;
    check_constants(&constants)?;
    let s2 = sigma * sigma;
    let l2 = lambda_k * lambda_k;
    let (pf, kf) = (p as f64, k as f64);
    let base = ((s2 + 0.75 * l2) / (s2 + 0.5 * l2)).ln();
    let t = ceil_count(constants.c_t * (pf / (kf * eps)).ln() / base, "T")?;
    let lead = (1.0 + sigma).powi(2) * kf.sqrt() + sigma * (1.0 + s2).sqrt() * kf * pf.sqrt();
    let b = ceil_count(
        constants.c_b * lead * lead * ((t + 1) as f64).ln() / (l2 * l2 * eps * eps),
        "B",
    )?;
    BlockSchedule::with_provenance(b, t, ScheduleProvenance::Theorem2)
}

/// `T = ⌈ln p⌉`, `B = ⌊n/T⌋`; the last `n - B·T` samples go unused.
pub fn empirical_schedule(n: usize, p: usize) -> Result<BlockSchedule> {
    if p == 0 {
        return Err(Error::InvalidParameter("p must be >= 1".into()));
    }
    let t = ((p as f64).ln().ceil() as usize).max(1);
    if n < t {
        return Err(Error::InsufficientSamples {
            available: n,
            required: t,
        });
    }
    BlockSchedule::with_provenance(n / t, t, ScheduleProvenance::Empirical)
}

/// Current iterate plus what it cost.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceEstimate {
    pub basis: OrthonormalBasis,
    pub blocks_consumed: usize,
    pub samples_consumed: usize,
}

/// One completed block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockTrace {
    /// 1-based index `τ` of the iterate produced by this block.
    pub block: usize,
    /// `dist(U, Q_τ)` when a reference subspace was supplied.
    pub distance: Option<f64>,
    /// `‖S_τ‖₂` before normalization.
    pub accumulator_norm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub estimate: SubspaceEstimate,
    pub trace: Vec<BlockTrace>,
    pub schedule: BlockSchedule,
    pub seed: u64,
}

impl RunReport {
    pub fn final_distance(&self) -> Option<f64> {
        self.trace.last().and_then(|t| t.distance)
    }

    /// Per-block CSV (`block,distance,accumulator_norm`) followed by a
    /// `# summary` comment line.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "block,distance,accumulator_norm")?;
        for t in &self.trace {
            let d = t.distance.map(fmt_float).unwrap_or_default();
            writeln!(w, "{},{},{}", t.block, d, fmt_float(t.accumulator_norm))?;
        }
        writeln!(
            w,
            "# summary final_distance={} samples_consumed={} seed={} block_size={} block_count={} provenance={}",
            self.final_distance().map(fmt_float).unwrap_or_else(|| "NA".into()),
            self.estimate.samples_consumed,
            self.seed,
            self.schedule.block_size(),
            self.schedule.block_count(),
            self.schedule.provenance().as_str(),
        )
    }
}

/// 12 significant digits, scientific notation.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.11e}")
}

/// `Q₀` from the QR of a `p × k` Gaussian drawn with `init_seed`.
pub fn initial_basis(p: usize, k: usize, init_seed: u64) -> Result<OrthonormalBasis> {
    let mut rng = rng::seeded(init_seed);
    let h = sample_gaussian_matrix(p, k, &mut rng);
    Ok(qr_decompose_owned(h)?.0)
}

/// Seed used for instance `i`'s starting point under base `seed`.
pub fn init_seed(seed: u64, instance: u64) -> u64 {
    rng::derive_seed(seed, role::INIT, instance)
}

fn check_training_stream<S: SampleStream + ?Sized>(
    stream: &S,
    k: usize,
    reference: Option<&OrthonormalBasis>,
) -> Result<()> {
    if stream.is_evaluation() {
        return Err(Error::EvaluationStream);
    }
    let p = stream.dim();
    if k == 0 || k > p {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= p, got k={k}, p={p}"
        )));
    }
    if let Some(u) = reference {
        if u.dim() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: u.dim(),
            });
        }
    }
    Ok(())
}

/// Rank-`k` block state machine; feed it samples with [`observe`].
///
/// Both the iterate and the accumulator are stored transposed (`k × p`),
/// so each update is `k` length-`p` dot products and `k` axpys.
///
/// [`observe`]: BlockIteration::observe
#[derive(Debug)]
pub struct BlockIteration {
    columns: Matrix,
    // `None` only transiently inside `finish_block`.
    accumulator: Option<Matrix>,
    projection: Vec<f64>,
    block_size: usize,
    filled: usize,
    blocks_done: usize,
}

impl BlockIteration {
    pub fn new(initial: OrthonormalBasis, block_size: usize) -> Result<Self> {
        if block_size == 0 {
            return Err(Error::InvalidParameter("block size must be >= 1".into()));
        }
        let (p, k) = (initial.dim(), initial.k());
        Ok(BlockIteration {
            columns: initial.matrix().transpose(),
            accumulator: Some(Matrix::zeros(k, p)),
            projection: vec![0.0; k],
            block_size,
            filled: 0,
            blocks_done: 0,
        })
    }

    /// `Q_τᵀ`, one basis vector per row.
    pub fn columns(&self) -> &Matrix {
        &self.columns
    }

    /// Copy of the current iterate as a `p × k` basis.
    pub fn basis(&self) -> OrthonormalBasis {
        OrthonormalBasis::from_trusted(self.columns.transpose())
    }

    pub fn into_basis(self) -> OrthonormalBasis {
        let BlockIteration {
            columns,
            accumulator,
            ..
        } = self;
        drop(accumulator);
        OrthonormalBasis::from_trusted(columns.transpose())
    }

    pub fn blocks_done(&self) -> usize {
        self.blocks_done
    }

    /// Samples already folded into the unfinished block.
    pub fn pending(&self) -> usize {
        self.filled
    }

    /// Adds `x` to the current block. Returns `‖S‖₂` when the block closes.
    pub fn observe(&mut self, x: &[f64]) -> Result<Option<f64>> {
        let p = self.columns.cols();
        let scale = 1.0 / self.block_size as f64;
        for (y, q) in self
            .projection
            .iter_mut()
            .zip(self.columns.as_slice().chunks_exact(p))
        {
            *y = scale * dot(q, x);
        }
        let s = self
            .accumulator
            .as_mut()
            .expect("accumulator present between blocks")
            .as_mut_slice();
        for (&y, row) in self.projection.iter().zip(s.chunks_exact_mut(p)) {
            axpy(y, x, row);
        }
        self.filled += 1;
        if self.filled == self.block_size {
            self.finish_block().map(Some)
        } else {
            Ok(None)
        }
    }

    fn finish_block(&mut self) -> Result<f64> {
        let block = self.blocks_done + 1;
        let s = self.accumulator.take().expect("accumulator present");
        if s.as_slice().iter().all(|v| v.abs() < DEGENERATE_NORM) {
            return Err(Error::DegenerateBlock { block });
        }
        let (next, r) = match qr_decompose_columns(s) {
            Ok(f) => f,
            Err(Error::RankDeficient { .. }) => return Err(Error::DegenerateBlock { block }),
            Err(e) => return Err(e),
        };
        let norm = spectral_norm(&r);
        let mut recycled = std::mem::replace(&mut self.columns, next);
        recycled.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        self.accumulator = Some(recycled);
        self.filled = 0;
        self.blocks_done = block;
        Ok(norm)
    }

    fn distance_to(&self, reference: Option<&OrthonormalBasis>) -> Result<Option<f64>> {
        reference
            .map(|u| transposed_distance(u, &self.columns).map(|d| d.value()))
            .transpose()
    }
}

/// Block-stochastic orthogonal iteration.
pub fn block_orthogonal_iteration<S: SampleStream + ?Sized>(
    stream: &mut S,
    k: usize,
    schedule: &BlockSchedule,
    seed: u64,
    reference: Option<&OrthonormalBasis>,
) -> Result<RunReport> {
    block_orthogonal_iteration_observed(stream, k, schedule, seed, reference, |_, _| {})
}

/// [`block_orthogonal_iteration`] that also hands every finished block's
/// trace entry and state to `observer`.
pub fn block_orthogonal_iteration_observed<S, F>(
    stream: &mut S,
    k: usize,
    schedule: &BlockSchedule,
    seed: u64,
    reference: Option<&OrthonormalBasis>,
    mut observer: F,
) -> Result<RunReport>
where
    S: SampleStream + ?Sized,
    F: FnMut(&BlockTrace, &BlockIteration),
{
    check_training_stream(stream, k, reference)?;
    let initial = initial_basis(stream.dim(), k, init_seed(seed, 0))?;
    let mut state = BlockIteration::new(initial, schedule.block_size())?;
    let mut trace = Vec::with_capacity(schedule.block_count());
    while state.blocks_done() < schedule.block_count() {
        let Some(x) = stream.next_sample() else {
            return Err(Error::PartialStream {
                blocks_completed: state.blocks_done(),
                samples_in_partial: state.pending(),
            });
        };
        if let Some(accumulator_norm) = state.observe(x)? {
            let entry = BlockTrace {
                block: state.blocks_done(),
                distance: state.distance_to(reference)?,
                accumulator_norm,
            };
            observer(&entry, &state);
            trace.push(entry);
        }
    }
    Ok(RunReport {
        estimate: SubspaceEstimate {
            basis: state.into_basis(),
            blocks_consumed: schedule.block_count(),
            samples_consumed: schedule.total_samples(),
        },
        trace,
        schedule: *schedule,
        seed,
    })
}

/// Block-stochastic power method (rank one). State is two length-`p` vectors.
pub fn block_power_method_rank1<S: SampleStream + ?Sized>(
    stream: &mut S,
    schedule: &BlockSchedule,
    seed: u64,
    reference: Option<&OrthonormalBasis>,
) -> Result<RunReport> {
    check_training_stream(stream, 1, reference)?;
    let p = stream.dim();
    let mut rng = rng::seeded(init_seed(seed, 0));
    let mut q: Vec<f64> = sample_gaussian_matrix(p, 1, &mut rng).as_slice().to_vec();
    let n0 = norm(&q);
    q.iter_mut().for_each(|v| *v /= n0);

    let block_size = schedule.block_size();
    let scale = 1.0 / block_size as f64;
    let mut s = vec![0.0; p];
    let mut trace = Vec::with_capacity(schedule.block_count());
    for tau in 0..schedule.block_count() {
        s.iter_mut().for_each(|v| *v = 0.0);
        for filled in 0..block_size {
            let Some(x) = stream.next_sample() else {
                return Err(Error::PartialStream {
                    blocks_completed: tau,
                    samples_in_partial: filled,
                });
            };
            axpy(scale * dot(&q, x), x, &mut s);
        }
        let s_norm = norm(&s);
        if s_norm < DEGENERATE_NORM {
            return Err(Error::DegenerateBlock { block: tau + 1 });
        }
        for (qi, si) in q.iter_mut().zip(&s) {
            *qi = si / s_norm;
        }
        let distance = reference
            .map(|u| vector_distance(u, &q).map(|d| d.value()))
            .transpose()?;
        trace.push(BlockTrace {
            block: tau + 1,
            distance,
            accumulator_norm: s_norm,
        });
    }
    let basis = OrthonormalBasis::from_trusted(Matrix::from_vec(p, 1, q)?);
    Ok(RunReport {
        estimate: SubspaceEstimate {
            basis,
            blocks_consumed: schedule.block_count(),
            samples_consumed: schedule.total_samples(),
        },
        trace,
        schedule: *schedule,
        seed,
    })
}

/// Result of a boosted run: the winning instance and every candidate's score.
#[derive(Clone, Debug, PartialEq)]
pub struct BoostedReport {
    pub best: RunReport,
    pub best_index: usize,
    /// Mean `‖Q_iᵀx‖²` over the evaluation block, per instance.
    pub scores: Vec<f64>,
    pub evaluation_samples: usize,
}

/// Index of the candidate with the largest empirical Rayleigh trace
/// `(1/m) Σ ‖Q_iᵀx‖²` over the next `eval_block` samples, plus all scores.
pub fn select_best_candidate<S: SampleStream + ?Sized>(
    candidates: &[&OrthonormalBasis],
    stream: &mut S,
    eval_block: usize,
) -> Result<(usize, Vec<f64>)> {
    if candidates.is_empty() || eval_block == 0 {
        return Err(Error::InvalidParameter(
            "need at least one candidate and a nonempty evaluation block".into(),
        ));
    }
    let mut scores = vec![0.0; candidates.len()];
    for seen in 0..eval_block {
        let Some(x) = stream.next_sample() else {
            return Err(Error::InsufficientSamples {
                available: seen,
                required: eval_block,
            });
        };
        for (score, q) in scores.iter_mut().zip(candidates) {
            let c = q.coefficients(x)?;
            *score += dot(&c, &c);
        }
    }
    scores.iter_mut().for_each(|s| *s /= eval_block as f64);
    let best = scores
        .iter()
        .enumerate()
        .fold(0, |best, (i, &s)| if s > scores[best] { i } else { best });
    Ok((best, scores))
}

/// `instances` independent runs over the same pass, then one `eval_block`
/// of fresh samples picks the winner. Memory is `instances · O(kp)`.
pub fn boosted_recovery<S: SampleStream + ?Sized>(
    stream: &mut S,
    k: usize,
    schedule: &BlockSchedule,
    instances: usize,
    eval_block: usize,
    seed: u64,
    reference: Option<&OrthonormalBasis>,
) -> Result<BoostedReport> {
    if instances == 0 {
        return Err(Error::InvalidParameter(
            "instance count must be >= 1".into(),
        ));
    }
    check_training_stream(stream, k, reference)?;
    let p = stream.dim();
    let mut states = (0..instances)
        .map(|i| {
            BlockIteration::new(
                initial_basis(p, k, init_seed(seed, i as u64))?,
                schedule.block_size(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut traces = vec![Vec::with_capacity(schedule.block_count()); instances];

    for tau in 0..schedule.block_count() {
        for filled in 0..schedule.block_size() {
            let Some(x) = stream.next_sample() else {
                return Err(Error::PartialStream {
                    blocks_completed: tau,
                    samples_in_partial: filled,
                });
            };
            for (state, trace) in states.iter_mut().zip(traces.iter_mut()) {
                if let Some(accumulator_norm) = state.observe(x)? {
                    trace.push(BlockTrace {
                        block: state.blocks_done(),
                        distance: state.distance_to(reference)?,
                        accumulator_norm,
                    });
                }
            }
        }
    }

    let mut candidates: Vec<OrthonormalBasis> = states.iter().map(BlockIteration::basis).collect();
    drop(states);
    let refs: Vec<&OrthonormalBasis> = candidates.iter().collect();
    let (best_index, scores) = select_best_candidate(&refs, stream, eval_block)?;
    let basis = candidates.swap_remove(best_index);
    Ok(BoostedReport {
        best: RunReport {
            estimate: SubspaceEstimate {
                basis,
                blocks_consumed: schedule.block_count(),
                samples_consumed: schedule.total_samples(),
            },
            trace: traces.swap_remove(best_index),
            schedule: *schedule,
            seed,
        },
        best_index,
        scores,
        evaluation_samples: eval_block,
    })
}

/// Restart variant: `instances` sequential runs, each on fresh data; after
/// each new run the incumbent and the newcomer are compared on the next
/// `eval_block` samples and the better one is kept.
pub fn restarted_recovery<S: SampleStream + ?Sized>(
    stream: &mut S,
    k: usize,
    schedule: &BlockSchedule,
    instances: usize,
    eval_block: usize,
    seed: u64,
    reference: Option<&OrthonormalBasis>,
) -> Result<BoostedReport> {
    if instances == 0 {
        return Err(Error::InvalidParameter(
            "instance count must be >= 1".into(),
        ));
    }
    let mut best: Option<(usize, RunReport)> = None;
    let mut scores = Vec::with_capacity(instances);
    let mut evaluation_samples = 0;
    for i in 0..instances {
        let run = block_orthogonal_iteration(
            stream,
            k,
            schedule,
            init_instance_seed(seed, i),
            reference,
        )?;
        best = Some(match best {
            None => (i, run),
            Some((j, incumbent)) => {
                let (winner, pair) = select_best_candidate(
                    &[&incumbent.estimate.basis, &run.estimate.basis],
                    stream,
                    eval_block,
                )?;
                evaluation_samples += eval_block;
                scores.push(pair[1]);
                if winner == 1 {
                    (i, run)
                } else {
                    (j, incumbent)
                }
            }
        });
    }
    let (best_index, mut report) = best.expect("at least one instance");
    report.seed = seed;
    Ok(BoostedReport {
        best: report,
        best_index,
        scores,
        evaluation_samples,
    })
}

// `block_orthogonal_iteration` draws its start from `init_seed(seed, 0)`;
// restart `i` gets a seed whose instance-0 init is independent of the others.
fn init_instance_seed(seed: u64, instance: usize) -> u64 {
    if instance == 0 {
        seed
    } else {
        rng::derive_seed(seed, "restart", instance as u64)
    }
}

/// Step size rule for the Oja-style baseline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepRule {
    /// `η_t = c / t`.
    InverseTime(f64),
    /// `η_t = η`.
    Constant(f64),
    /// `η_t = 1 / (σ²·t + p)`.
    NoiseScaled { sigma: f64 },
}

impl StepRule {
    fn step(&self, t: usize, p: usize) -> f64 {
        match *self {
            StepRule::InverseTime(c) => c / t as f64,
            StepRule::Constant(eta) => eta,
            StepRule::NoiseScaled { sigma } => 1.0 / (sigma * sigma * t as f64 + p as f64),
        }
    }
}

/// Per-sample stochastic power method `U ← Proj(U + η_t x xᵀ U)`.
///
/// Baseline for comparison only; it has no finite-sample guarantee.
pub fn oja_baseline<S: SampleStream + ?Sized>(
    stream: &mut S,
    k: usize,
    step_rule: StepRule,
    seed: u64,
) -> Result<SubspaceEstimate> {
    check_training_stream(stream, k, None)?;
    let p = stream.dim();
    let mut basis = initial_basis(p, k, init_seed(seed, 0))?;
    let mut t = 0usize;
    while let Some(x) = stream.next_sample() {
        t += 1;
        let eta = step_rule.step(t, p);
        if eta == 0.0 {
            continue;
        }
        let y = basis.coefficients(x)?;
        let mut m = basis.matrix().clone();
        let k = m.cols();
        let data = m.as_mut_slice();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(eta * xi, &y, &mut data[i * k..(i + 1) * k]);
            }
        }
        basis = polar_project(&m)?;
    }
    if t == 0 {
        return Err(Error::EmptyStream);
    }
    Ok(SubspaceEstimate {
        basis,
        blocks_consumed: 0,
        samples_consumed: t,
    })
}
