use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use blockpca::algorithm::{
    block_orthogonal_iteration_observed, empirical_schedule, fmt_float, BlockSchedule,
    ScheduleConstants,
};
use blockpca::baseline::batch_pca_stream;
use blockpca::model::ORACLE_DIM_LIMIT;
use blockpca::stream::{parse_bag_of_words, reopen_for_evaluation, CorpusStream, SampleStream};
use blockpca::theory::{initialization_overlap_stats, recursion_grid_check};
use blockpca::{explained_variance, Orientation, OrthonormalBasis};

use crate::experiment::{
    concentration_medians, log_log_slope, recover_trials, scaling_sweep, success_fraction, Boost,
    ModelSpec, ScalingParams, ScheduleRule,
};
use crate::{
    DiagnoseArgs, OrientationArg, PhaseArgs, RealdataArgs, RecoverArgs, ScalingArgs, ScheduleMode,
    Selector,
};

fn open_output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn opt_float(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn recover_rule(a: &RecoverArgs) -> Result<ScheduleRule> {
    Ok(match a.schedule {
        ScheduleMode::Theorem => ScheduleRule::Theorem {
            eps: a.eps,
            constants: ScheduleConstants {
                c_b: a.c_b,
                c_t: a.c_t,
            },
        },
        ScheduleMode::Empirical => ScheduleRule::Empirical {
            n: a.n.context("--schedule empirical needs --n")?,
        },
        ScheduleMode::Manual => ScheduleRule::Manual {
            block_size: a
                .block_size
                .context("--schedule manual needs --block-size")?,
            block_count: a.blocks.context("--schedule manual needs --blocks")?,
        },
    })
}

pub fn recover(a: &RecoverArgs) -> Result<()> {
    let k = a.k as usize;
    let spec = ModelSpec {
        p: a.p as usize,
        lambdas: a.lambdas.clone().unwrap_or_else(|| vec![1.0; k]),
        sigma: a.sigma,
    };
    if k > spec.lambdas.len() {
        bail!(
            "k={k} needs at least {k} lambdas, got {}",
            spec.lambdas.len()
        );
    }
    let rule = recover_rule(a)?;
    let schedule = rule.resolve(&spec, k)?;
    let boost = (a.instances > 1).then(|| Boost {
        instances: a.instances as usize,
        eval_block: a.eval_block.unwrap_or(schedule.block_size()),
    });
    let outcomes = recover_trials(&spec, k, &rule, boost, a.trials as usize, a.seed)?;

    let mut w = open_output(a.output.out.as_deref())?;
    writeln!(w, "trial,seed,final_distance,success,samples_used,B,T")?;
    for (i, o) in outcomes.iter().enumerate() {
        writeln!(
            w,
            "{i},{},{},{},{},{},{}",
            o.seed,
            opt_float(o.final_distance),
            u8::from(o.success(a.eps)),
            o.samples_used,
            schedule.block_size(),
            schedule.block_count()
        )?;
    }
    w.flush()?;
    let mut d: Vec<f64> = outcomes.iter().filter_map(|o| o.final_distance).collect();
    d.sort_by(f64::total_cmp);
    eprintln!(
        "recover: p={} k={k} B={} T={} ({}) success_fraction={:.4} median_distance={}",
        spec.p,
        schedule.block_size(),
        schedule.block_count(),
        schedule.provenance().as_str(),
        success_fraction(&outcomes, a.eps),
        if d.is_empty() {
            "n/a".into()
        } else {
            fmt_float(blockpca::theory::quantile(&d, 0.5))
        }
    );
    Ok(())
}

pub fn scaling(a: &ScalingArgs) -> Result<()> {
    if a.p_list.contains(&0) {
        bail!("--p-list entries must be positive");
    }
    let params = ScalingParams {
        sigma: a.sigma,
        eps: a.eps,
        target: a.target,
        trials: a.trials as usize,
        seed: a.seed,
        n_cap: a.n_cap,
        batch: !a.no_batch,
    };
    let rows = scaling_sweep(&a.p_list, a.n_start, &params)?;
    let mut w = open_output(a.output.out.as_deref())?;
    writeln!(
        w,
        "p,n_min,success,saturated,batch_n_min,batch_success,batch_saturated"
    )?;
    for r in &rows {
        let (bn, bs, bsat) = match &r.batch {
            Some(b) => (
                b.n.to_string(),
                fmt_float(b.success),
                u8::from(b.saturated).to_string(),
            ),
            None => Default::default(),
        };
        writeln!(
            w,
            "{},{},{},{},{bn},{bs},{bsat}",
            r.p,
            r.streaming.n,
            fmt_float(r.streaming.success),
            u8::from(r.streaming.saturated)
        )?;
    }
    w.flush()?;
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.streaming.saturated)
        .map(|r| (r.p as f64, r.streaming.n as f64))
        .collect();
    eprintln!(
        "scaling: log-log slope of n_min vs p = {} over {} unsaturated rows",
        log_log_slope(&fit).map_or("n/a".into(), fmt_float),
        fit.len()
    );
    Ok(())
}

pub fn phase(a: &PhaseArgs) -> Result<()> {
    let p = a.p as usize;
    let mut w = open_output(a.output.out.as_deref())?;
    writeln!(w, "sigma,n,success_fraction")?;
    for &sigma in &a.sigma_list {
        let spec = ModelSpec::rank_one(p, sigma);
        for &n in &a.n_list {
            let o = recover_trials(
                &spec,
                1,
                &ScheduleRule::Empirical { n },
                None,
                a.trials as usize,
                a.seed,
            )?;
            writeln!(
                w,
                "{},{n},{}",
                fmt_float(sigma),
                fmt_float(success_fraction(&o, a.eps))
            )?;
        }
    }
    w.flush()?;
    eprintln!(
        "phase: {} cells, {} trials each",
        a.sigma_list.len() * a.n_list.len(),
        a.trials
    );
    Ok(())
}

/// Per-block explained variance of a streaming run over a corpus, with the
/// batch value (when computed) for comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct RealdataReport {
    pub schedule: BlockSchedule,
    /// `(samples consumed, explained variance)` after each block.
    pub curve: Vec<(usize, f64)>,
    pub batch: Option<f64>,
}

pub fn realdata_report<S: SampleStream>(
    mut stream: S,
    k: usize,
    seed: u64,
    batch: bool,
) -> Result<RealdataReport> {
    let n = {
        // one cheap counting pass; the corpus stream knows its length but the
        // trait does not expose it
        let mut s = reopen_for_evaluation(&stream)?;
        let mut n = 0usize;
        while s.next_sample().is_some() {
            n += 1;
        }
        n
    };
    let schedule = empirical_schedule(n, stream.dim())?;
    let mut bases: Vec<OrthonormalBasis> = Vec::with_capacity(schedule.block_count());
    block_orthogonal_iteration_observed(&mut stream, k, &schedule, seed, None, |_, state| {
        bases.push(state.basis())
    })?;
    let mut curve = Vec::with_capacity(bases.len());
    for (i, q) in bases.iter().enumerate() {
        let mut eval = reopen_for_evaluation(&stream)?;
        curve.push((
            (i + 1) * schedule.block_size(),
            explained_variance(q, &mut eval)?,
        ));
    }
    let batch = if batch && stream.dim() <= ORACLE_DIM_LIMIT {
        let mut pass = reopen_for_evaluation(&stream)?;
        let est = batch_pca_stream(&mut pass, k, seed)?;
        let mut eval = reopen_for_evaluation(&stream)?;
        Some(explained_variance(&est.basis, &mut eval)?)
    } else {
        None
    };
    Ok(RealdataReport {
        schedule,
        curve,
        batch,
    })
}

pub fn realdata(a: &RealdataArgs) -> Result<()> {
    let corpus = Arc::new(parse_bag_of_words(&a.docword)?);
    let orientation = match a.orientation {
        OrientationArg::Docs => Orientation::DocsAsSamples,
        OrientationArg::Words => Orientation::WordsAsSamples,
    };
    let (n, p) = corpus.shape(orientation);
    let stream =
        CorpusStream::new(Arc::clone(&corpus), orientation).with_normalization(a.normalize);
    let report = realdata_report(stream, a.k as usize, a.seed, !a.no_batch)?;
    let mut w = open_output(a.output.out.as_deref())?;
    writeln!(
        w,
        "block,samples_consumed,explained_variance_streaming,explained_variance_batch"
    )?;
    for (i, &(m, ev)) in report.curve.iter().enumerate() {
        writeln!(
            w,
            "{},{m},{},{}",
            i + 1,
            fmt_float(ev),
            opt_float(report.batch)
        )?;
    }
    w.flush()?;
    eprintln!(
        "realdata: n={n} p={p} k={} B={} T={} final_ev={} batch_ev={}",
        a.k,
        report.schedule.block_size(),
        report.schedule.block_count(),
        report.curve.last().map_or("n/a".into(), |c| fmt_float(c.1)),
        report.batch.map_or("n/a".into(), fmt_float)
    );
    Ok(())
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<()> {
    let mut w = open_output(a.output.out.as_deref())?;
    match a.selector {
        Selector::Concentration => {
            if a.factor < 2 {
                bail!("--factor must be at least 2");
            }
            let sizes: Vec<usize> = (0..a.levels)
                .map(|i| a.block_size * a.factor.pow(i))
                .collect();
            let med = concentration_medians(a.p as usize, a.sigma, &sizes, a.trials, a.seed)?;
            writeln!(w, "block_size,median_deviation,ratio_to_previous")?;
            for (i, (&b, &m)) in sizes.iter().zip(&med).enumerate() {
                let ratio = (i > 0).then(|| m / med[i - 1]);
                writeln!(w, "{b},{},{}", fmt_float(m), opt_float(ratio))?;
            }
            eprintln!(
                "diagnose concentration: expected ratio per level about {}",
                fmt_float(1.0 / (a.factor as f64).sqrt())
            );
        }
        Selector::Init => {
            let s = initialization_overlap_stats(a.p as usize, a.k as usize, a.trials, a.seed)?;
            writeln!(w, "p,k,trials,min,p01,p10,median,max")?;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                s.p,
                s.k,
                s.trials,
                fmt_float(s.min),
                fmt_float(s.p01),
                fmt_float(s.p10),
                fmt_float(s.median),
                fmt_float(s.max)
            )?;
            eprintln!("diagnose init: values are sigma_k(U^T Q0) * sqrt(kp)");
        }
        Selector::Recursion => {
            let c = recursion_grid_check(a.max_tau, 1e-12);
            writeln!(w, "points,passed,failed,max_excess")?;
            writeln!(
                w,
                "{},{},{},{}",
                c.points,
                c.points - c.violations,
                c.violations,
                fmt_float(c.max_excess)
            )?;
            eprintln!(
                "diagnose recursion: {}",
                if c.passed() { "pass" } else { "FAIL" }
            );
        }
    }
    w.flush()?;
    Ok(())
}
