//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Runs without the libtest harness so every line reaches the terminal in
//! order; the process exits nonzero if any criterion fails.

use std::alloc::{GlobalAlloc, Layout, System};
use std::cell::Cell;
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use blockpca::algorithm::{
    block_orthogonal_iteration, block_power_method_rank1, boosted_recovery, empirical_schedule,
    theorem2_schedule, BlockSchedule, ScheduleConstants,
};
use blockpca::baseline::{batch_pca_on_matrix, batch_pca_stream};
use blockpca::metrics::{principal_angle_distance, rank1_recovery_error};
use blockpca::perturbation::run_underparameterized;
use blockpca::rng::{self, role};
use blockpca::stream::{reopen_for_evaluation, ModelStream};
use blockpca::theory::{median, recursion_grid_check};
use blockpca::{explained_variance, SampleStream};
use blockpca_cli::experiment::{
    concentration_medians, log_log_slope, par_trials, recover_trials, scaling_sweep,
    success_fraction, trial_seed, ModelSpec, ScalingParams, ScheduleRule,
};
use rand::Rng;

// --- allocation audit -------------------------------------------------------

struct Counting;

thread_local! {
    static TRACKING: Cell<bool> = const { Cell::new(false) };
    static LIVE: Cell<i64> = const { Cell::new(0) };
    static PEAK: Cell<i64> = const { Cell::new(0) };
    static LARGEST: Cell<usize> = const { Cell::new(0) };
}

fn note(delta: i64, size: usize) {
    let _ = TRACKING.try_with(|t| {
        if t.get() {
            LIVE.with(|l| {
                let now = l.get() + delta;
                l.set(now);
                PEAK.with(|p| p.set(p.get().max(now)));
            });
            LARGEST.with(|m| m.set(m.get().max(size)));
        }
    });
}

unsafe impl GlobalAlloc for Counting {
    unsafe fn alloc(&self, layout: Layout) -> *mut u8 {
        let ptr = unsafe { System.alloc(layout) };
        if !ptr.is_null() {
            note(layout.size() as i64, layout.size());
        }
        ptr
    }

    unsafe fn dealloc(&self, ptr: *mut u8, layout: Layout) {
        unsafe { System.dealloc(ptr, layout) };
        note(-(layout.size() as i64), 0);
    }

    unsafe fn realloc(&self, ptr: *mut u8, layout: Layout, new_size: usize) -> *mut u8 {
        let out = unsafe { System.realloc(ptr, layout, new_size) };
        if !out.is_null() {
            note(new_size as i64 - layout.size() as i64, new_size);
        }
        out
    }
}

#[global_allocator]
static ALLOC: Counting = Counting;

/// Peak net bytes and largest single request made by this thread inside `f`.
fn audit<T>(f: impl FnOnce() -> T) -> (T, i64, usize) {
    LIVE.with(|l| l.set(0));
    PEAK.with(|p| p.set(0));
    LARGEST.with(|m| m.set(0));
    TRACKING.with(|t| t.set(true));
    let out = f();
    TRACKING.with(|t| t.set(false));
    (out, PEAK.with(Cell::get), LARGEST.with(Cell::get))
}

// --- reporting --------------------------------------------------------------

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Duration, elapsed: Duration, v: Verdict) -> Verdict {
    let within = elapsed <= limit;
    Verdict {
        pass: v.pass && within,
        detail: format!(
            "{}; runtime {:.2}s (limit {}s{})",
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if within { "" } else { ", exceeded" }
        ),
    }
}

fn ok_or_panic<T, E: std::fmt::Display>(r: Result<T, E>) -> T {
    r.unwrap_or_else(|e| panic!("{e}"))
}

// --- criteria ---------------------------------------------------------------

fn recursion_bound() -> Verdict {
    let start = Instant::now();
    let c = recursion_grid_check(100, 1e-12);
    timed(
        Duration::from_secs(1),
        start.elapsed(),
        verdict(
            c.passed() && c.points == 20 * 20 * 101,
            format!(
                "{} grid points, {} violations, max excess {:.3e}",
                c.points, c.violations, c.max_excess
            ),
        ),
    )
}

fn noiseless_collapse() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    let mut failures = 0;
    for (p, k) in [(20usize, 1usize), (50, 3), (200, 5)] {
        let lambdas: Vec<f64> = (0..k).map(|j| 1.0 - 0.15 * j as f64).collect();
        let spec = ModelSpec {
            p,
            lambdas,
            sigma: 0.0,
        };
        let schedule = ok_or_panic(BlockSchedule::manual(k + 4, 1));
        for s in 0..20 {
            let seed = trial_seed(2, s);
            let model = ok_or_panic(spec.build(seed));
            let u = model.spike_basis().clone();
            let data = rng::derive_seed(seed, role::DATA, 0);
            let mut stream = ModelStream::new(Arc::clone(&model), k + 4, data);
            let report = ok_or_panic(block_orthogonal_iteration(
                &mut stream,
                k,
                &schedule,
                seed,
                Some(&u),
            ));
            let mut d = ok_or_panic(principal_angle_distance(&u, &report.estimate.basis)).value();
            if k == 1 {
                let mut stream = ModelStream::new(Arc::clone(&model), k + 4, data);
                let r1 = ok_or_panic(block_power_method_rank1(
                    &mut stream,
                    &schedule,
                    seed,
                    Some(&u),
                ));
                d = d.max(ok_or_panic(principal_angle_distance(&u, &r1.estimate.basis)).value());
            }
            worst = worst.max(d);
            runs += 1;
            failures += usize::from(d >= 1e-6);
        }
    }
    timed(
        Duration::from_secs(5),
        start.elapsed(),
        verdict(
            failures == 0,
            format!("{runs} runs, {failures} above 1e-6, worst distance {worst:.3e}"),
        ),
    )
}

fn small_sample_regime() -> Verdict {
    let start = Instant::now();
    let spec = ModelSpec::rank_one(100, 0.5);
    let o = ok_or_panic(recover_trials(
        &spec,
        1,
        &ScheduleRule::Empirical { n: 1000 },
        None,
        200,
        3,
    ));
    let frac = success_fraction(&o, 0.05);
    let med = median(
        &o.iter()
            .filter_map(|t| t.final_distance)
            .collect::<Vec<_>>(),
    );
    timed(
        Duration::from_secs(60),
        start.elapsed(),
        verdict(
            frac >= 0.85,
            format!("success fraction {frac:.3} (need >= 0.85), median error {med:.4}"),
        ),
    )
}

fn linear_scaling() -> Verdict {
    let start = Instant::now();
    let params = ScalingParams {
        sigma: 0.5,
        eps: 0.05,
        target: 0.5,
        trials: 40,
        seed: 4,
        n_cap: 2_000_000,
        batch: false,
    };
    let rows = ok_or_panic(scaling_sweep(&[50, 100, 200, 400], 1000, &params));
    let saturated = rows.iter().any(|r| r.streaming.saturated);
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.p as f64, r.streaming.n as f64))
        .collect();
    let slope = log_log_slope(&pts).unwrap_or(f64::NAN);
    let table: Vec<String> = rows
        .iter()
        .map(|r| format!("p={} n={}", r.p, r.streaming.n))
        .collect();
    timed(
        Duration::from_secs(600),
        start.elapsed(),
        verdict(
            !saturated && (0.7..=1.4).contains(&slope),
            format!("{}; slope {slope:.3} (need [0.7, 1.4])", table.join(", ")),
        ),
    )
}

fn rank_k_recovery() -> Verdict {
    let start = Instant::now();
    let spec = ModelSpec {
        p: 50,
        lambdas: vec![1.0, 0.8, 0.6],
        sigma: 0.2,
    };
    let rule = ScheduleRule::Theorem {
        eps: 0.1,
        constants: ScheduleConstants::default(),
    };
    let schedule = ok_or_panic(rule.resolve(&spec, 3));
    let o = ok_or_panic(recover_trials(&spec, 3, &rule, None, 100, 5));
    let frac = success_fraction(&o, 0.1);
    timed(
        Duration::from_secs(120),
        start.elapsed(),
        verdict(
            frac >= 0.85,
            format!(
                "B={} T={}, success fraction {frac:.2} (need >= 0.85)",
                schedule.block_size(),
                schedule.block_count()
            ),
        ),
    )
}

fn streaming_matches_batch() -> Verdict {
    let start = Instant::now();
    let spec = ModelSpec {
        p: 300,
        lambdas: vec![1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4],
        sigma: 0.3,
    };
    let n = 3000;
    let ratios: Vec<f64> = par_trials(20, |s| {
        let seed = trial_seed(6, s);
        let model = ok_or_panic(spec.build(seed));
        let mut stream = ModelStream::new(model, n, rng::derive_seed(seed, role::DATA, 0));
        let schedule = ok_or_panic(empirical_schedule(n, spec.p));
        let report = ok_or_panic(block_orthogonal_iteration(
            &mut stream,
            7,
            &schedule,
            seed,
            None,
        ));
        let mut eval = ok_or_panic(reopen_for_evaluation(&stream));
        let ev_stream = ok_or_panic(explained_variance(&report.estimate.basis, &mut eval));
        let mut pass = ok_or_panic(reopen_for_evaluation(&stream));
        let batch = ok_or_panic(batch_pca_stream(&mut pass, 7, seed));
        let mut eval = ok_or_panic(reopen_for_evaluation(&stream));
        let ev_batch = ok_or_panic(explained_variance(&batch.basis, &mut eval));
        ev_stream / ev_batch
    });
    let med = median(&ratios);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    timed(
        Duration::from_secs(120),
        start.elapsed(),
        verdict(
            med >= 0.92,
            format!("median EV ratio {med:.4} (need >= 0.92), worst {lo:.4}"),
        ),
    )
}

fn perturbation_tolerance() -> Verdict {
    let start = Instant::now();
    let spec = ModelSpec {
        p: 100,
        lambdas: vec![1.0, 0.9, 0.8, 0.7, 0.6],
        sigma: 0.2,
    };
    let schedule = ok_or_panic(theorem2_schedule(
        100,
        5,
        0.2,
        0.6,
        0.1,
        ScheduleConstants::default(),
    ));
    let c: Vec<f64> = par_trials(100, |t| {
        let seed = trial_seed(7, t);
        let model = ok_or_panic(spec.build(seed));
        ok_or_panic(run_underparameterized(model, 2, &schedule, seed))
            .1
            .value()
    });
    let frac = c.iter().filter(|&&v| v <= 0.1).count() as f64 / c.len() as f64;
    timed(
        Duration::from_secs(120),
        start.elapsed(),
        verdict(
            frac >= 0.85,
            format!(
                "B={} T={}, containment <= 0.1 in {frac:.2} (need >= 0.85), median {:.4}",
                schedule.block_size(),
                schedule.block_count(),
                median(&c)
            ),
        ),
    )
}

fn concentration_scaling() -> Verdict {
    let start = Instant::now();
    let sizes = [500, 2000, 8000];
    let med = ok_or_panic(concentration_medians(20, 0.5, &sizes, 100, 8));
    let ratios = [med[1] / med[0], med[2] / med[1]];
    let pass = ratios.iter().all(|r| (0.35..=0.65).contains(r));
    timed(
        Duration::from_secs(60),
        start.elapsed(),
        verdict(
            pass,
            format!(
                "medians {:.4}/{:.4}/{:.4}, ratios {:.3}, {:.3} (need 0.5 +- 30%)",
                med[0], med[1], med[2], ratios[0], ratios[1]
            ),
        ),
    )
}

fn memory_contract() -> Verdict {
    let start = Instant::now();
    let (p, k, n) = (10_000usize, 5usize, 100_000usize);
    let spec = ModelSpec {
        p,
        lambdas: vec![1.0, 0.9, 0.8, 0.7, 0.6],
        sigma: 0.5,
    };
    let model = ok_or_panic(spec.build(9));
    let u = model.spike_basis().clone();
    let schedule = ok_or_panic(empirical_schedule(n, p));
    let mut stream = ModelStream::new(model, n, 10);
    // warm the stream's buffers so only the training path is measured
    let _ = stream.dim();
    let (report, peak_bytes, largest_bytes) =
        audit(|| block_orthogonal_iteration(&mut stream, k, &schedule, 9, Some(&u)));
    let report = ok_or_panic(report);
    let peak = peak_bytes as f64 / 8.0;
    let largest = largest_bytes as f64 / 8.0;
    let bound = (4 * k * p + 64 * k * k + 8 * p) as f64;
    let pass = peak <= bound && largest < (p * p) as f64 && report.estimate.samples_consumed == n;
    timed(
        Duration::from_secs(60),
        start.elapsed(),
        verdict(
            pass,
            format!(
                "peak {peak:.0} numbers ({:.2} kp) vs bound 4kp+64k^2+8p = {bound:.0}, \
                 largest single allocation {largest:.0} numbers, final distance {:.3}",
                peak / (k * p) as f64,
                report.final_distance().unwrap_or(f64::NAN)
            ),
        ),
    )
}

fn write_toy_corpus(path: &std::path::Path) {
    let mut body = String::new();
    let mut nnz = 0;
    let mut state = 0x2545_f491_u32;
    for d in 1..=40u32 {
        for w in 1..=12u32 {
            state = state.wrapping_mul(1_664_525).wrapping_add(1_013_904_223);
            let c = (state >> 24) % 7;
            if c > 3 {
                body.push_str(&format!("{d} {w} {c}\n"));
                nnz += 1;
            }
        }
    }
    std::fs::write(path, format!("40\n12\n{nnz}\n{body}")).unwrap();
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("docword.toy.txt");
    write_toy_corpus(&corpus);
    let corpus = corpus.to_str().unwrap().to_owned();
    let commands: Vec<Vec<&str>> = vec![
        vec!["recover", "--p", "60", "--trials", "8", "--seed", "3"],
        vec![
            "recover",
            "--p",
            "40",
            "--k",
            "2",
            "--lambdas",
            "1,0.7",
            "--schedule",
            "empirical",
            "--n",
            "8000",
            "--instances",
            "3",
            "--trials",
            "4",
        ],
        vec![
            "scaling", "--p-list", "10,20", "--trials", "8", "--eps", "0.2",
        ],
        vec![
            "phase",
            "--p",
            "30",
            "--sigma-list",
            "0.3,1",
            "--n-list",
            "0,500,5000",
            "--trials",
            "8",
        ],
        vec!["realdata", "--docword", &corpus, "--k", "3", "--normalize"],
        vec![
            "realdata",
            "--docword",
            &corpus,
            "--k",
            "2",
            "--orientation",
            "words",
        ],
        vec!["diagnose", "concentration", "--trials", "20"],
        vec!["diagnose", "init", "--p", "50", "--k", "3"],
        vec!["diagnose", "recursion"],
    ];
    let mut mismatched = Vec::new();
    for args in &commands {
        let run = || {
            let out = Command::new(env!("CARGO_BIN_EXE_blockpca"))
                .args(args)
                .env("BLOCKPCA_THREADS", "2")
                .output()
                .expect("spawn blockpca");
            assert!(
                out.status.success(),
                "{args:?}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
            out.stdout
        };
        let (a, b) = (run(), run());
        if a != b || a.is_empty() {
            mismatched.push(args[0]);
        }
    }

    let spec = ModelSpec {
        p: 80,
        lambdas: vec![1.0, 0.8, 0.6],
        sigma: 0.3,
    };
    let model = ok_or_panic(spec.build(1));
    let schedule = ok_or_panic(BlockSchedule::manual(2000, 6));
    let mut a = ModelStream::new(Arc::clone(&model), 2000 * 6, 5);
    let plain = ok_or_panic(block_orthogonal_iteration(&mut a, 3, &schedule, 12, None));
    let mut b = ModelStream::new(Arc::clone(&model), 2000 * 7, 5);
    let boosted = ok_or_panic(boosted_recovery(&mut b, 3, &schedule, 1, 2000, 12, None));
    let diff = ok_or_panic(
        plain
            .estimate
            .basis
            .matrix()
            .max_abs_diff(boosted.best.estimate.basis.matrix()),
    );
    verdict(
        mismatched.is_empty() && diff <= 1e-12,
        format!(
            "{} CLI invocations byte-identical across reruns{}; boosted(m=1) vs plain max diff {diff:.1e}",
            commands.len(),
            if mismatched.is_empty() {
                String::new()
            } else {
                format!(" except {mismatched:?}")
            }
        ),
    )
}

fn oracle_equivalence() -> Verdict {
    let mut r = rng::seeded(11);
    let mut worst: f64 = 0.0;
    let mut shapes = Vec::new();
    for t in 0..20 {
        let p = r.random_range(5..=200usize);
        let k = r.random_range(1..=p.min(6));
        let mut lambdas: Vec<f64> = vec![1.0];
        for _ in 1..k {
            let last = *lambdas.last().unwrap();
            lambdas.push(last * r.random_range(0.6..0.95));
        }
        let sigma = r.random_range(0.05..1.0);
        let spec = ModelSpec { p, lambdas, sigma };
        let model = ok_or_panic(spec.build(trial_seed(11, t)));
        let c = ok_or_panic(model.population_covariance());
        let est = ok_or_panic(batch_pca_on_matrix(&c, k));
        let d = if k == 1 {
            ok_or_panic(rank1_recovery_error(
                &est.basis.column(0),
                &model.spike_basis().column(0),
            ))
        } else {
            ok_or_panic(principal_angle_distance(model.spike_basis(), &est.basis)).value()
        };
        worst = worst.max(d);
        shapes.push((p, k));
    }
    verdict(
        worst < 1e-9,
        format!(
            "20 models (p up to {}), worst distance {worst:.2e} (need < 1e-9)",
            shapes.iter().map(|s| s.0).max().unwrap()
        ),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 11] = [
        (
            "iterated recursion stays below its closed form",
            recursion_bound,
        ),
        ("noiseless data collapses in one block", noiseless_collapse),
        (
            "p=100 rank-one recovery from 1000 samples",
            small_sample_regime,
        ),
        ("sample complexity grows linearly in p", linear_scaling),
        (
            "rank-3 recovery under the bound-driven schedule",
            rank_k_recovery,
        ),
        (
            "streaming explained variance tracks batch PCA",
            streaming_matches_batch,
        ),
        (
            "rank-2 estimate stays inside a rank-5 spike",
            perturbation_tolerance,
        ),
        (
            "block covariance error halves when B quadruples",
            concentration_scaling,
        ),
        ("training memory is O(kp)", memory_contract),
        ("runs are deterministic", determinism),
        (
            "batch PCA on the population covariance recovers U",
            oracle_equivalence,
        ),
    ];
    // selection by substring, like libtest filters
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let default_hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let label = format!("criterion {}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| label.ends_with(f.as_str()) || name.contains(f.as_str()))
        {
            continue;
        }
        ran += 1;
        let v = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            verdict(false, format!("error: {msg}"))
        });
        failed += usize::from(!v.pass);
        println!(
            "[{}] {label}: {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    panic::set_hook(default_hook);
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
