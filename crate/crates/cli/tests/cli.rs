use std::path::Path;
use std::process::{Command, Output};

fn blockpca(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockpca"))
        .args(args)
        .env("BLOCKPCA_THREADS", threads)
        .output()
        .expect("spawn blockpca")
}

fn stdout_of(args: &[&str], threads: &str) -> String {
    let out = blockpca(args, threads);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn write_toy_corpus(path: &Path) {
    // 10 documents over 3 words, every doc a different mix
    let mut body = String::new();
    let mut nnz = 0;
    for d in 1..=10u32 {
        for w in 1..=3u32 {
            let c = (d * (w + 1) + w * w) % 5;
            if c > 0 {
                body.push_str(&format!("{d} {w} {c}\n"));
                nnz += 1;
            }
        }
    }
    std::fs::write(path, format!("10\n3\n{nnz}\n{body}")).unwrap();
}

#[test]
fn recover_is_identical_across_runs_and_thread_counts() {
    let args = [
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
        "6000",
        "--trials",
        "6",
        "--seed",
        "11",
    ];
    let a = stdout_of(&args, "1");
    let b = stdout_of(&args, "3");
    assert_eq!(a, b);
    assert!(a.starts_with("trial,seed,final_distance,success,samples_used,B,T\n"));
    assert_eq!(a.lines().count(), 7);
}

#[test]
fn different_seeds_differ() {
    let base = [
        "recover",
        "--p",
        "20",
        "--schedule",
        "empirical",
        "--n",
        "3000",
        "--trials",
        "2",
    ];
    let a = stdout_of(&[&base[..], &["--seed", "1"]].concat(), "1");
    let b = stdout_of(&[&base[..], &["--seed", "2"]].concat(), "1");
    assert_ne!(a, b);
}

#[test]
fn usage_errors_exit_nonzero() {
    for args in [
        &["recover", "--p", "0"][..],
        &["recover", "--schedule", "empirical"],
        &["recover", "--k", "3", "--lambdas", "1,0.5"],
        &["recover", "--lambdas", "0.5"],
        &["recover", "--schedule", "manual", "--block-size", "10"],
        &["diagnose", "nonsense"],
        &["realdata", "--docword", "/nonexistent/docword.txt"],
    ] {
        let out = blockpca(args, "1");
        assert!(!out.status.success(), "{args:?} should fail");
        assert!(!out.stderr.is_empty());
        assert!(out.stdout.is_empty() || !String::from_utf8_lossy(&out.stdout).contains(','));
    }
}

#[test]
fn full_rank_estimate_explains_all_variance() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("docword.toy.txt");
    write_toy_corpus(&path);
    let csv = stdout_of(
        &["realdata", "--docword", path.to_str().unwrap(), "--k", "3"],
        "1",
    );
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("block,samples_consumed,explained_variance_streaming,explained_variance_batch")
    );
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect();
    assert!(!rows.is_empty());
    for r in &rows {
        let ev: f64 = r[2].parse().unwrap();
        let batch: f64 = r[3].parse().unwrap();
        assert!((ev - 1.0).abs() < 1e-9, "{r:?}");
        assert!((batch - 1.0).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn out_flag_writes_the_same_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("phase.csv");
    let args = [
        "phase",
        "--p",
        "20",
        "--sigma-list",
        "0.5",
        "--n-list",
        "0,4000",
        "--trials",
        "4",
    ];
    let direct = stdout_of(&args, "1");
    let out = blockpca(
        &[&args[..], &["--out", path.to_str().unwrap()]].concat(),
        "1",
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), direct);
    // no samples means no success
    assert!(direct.contains("\n5.00000000000e-1,0,0.00000000000e0\n"));
}

#[test]
fn diagnose_selectors_produce_headed_csv() {
    let rec = stdout_of(&["diagnose", "recursion", "--max-tau", "10"], "1");
    assert!(rec.starts_with("points,passed,failed,max_excess\n4400,4400,0,"));
    let init = stdout_of(&["diagnose", "init", "--p", "30", "--k", "2"], "1");
    assert!(init.starts_with("p,k,trials,min,p01,p10,median,max\n30,2,100,"));
    let conc = stdout_of(
        &[
            "diagnose",
            "concentration",
            "--block-size",
            "50",
            "--trials",
            "10",
        ],
        "1",
    );
    assert_eq!(conc.lines().count(), 4);
}

#[test]
fn scaling_reports_batch_and_streaming() {
    let csv = stdout_of(
        &[
            "scaling", "--p-list", "10", "--trials", "6", "--eps", "0.3", "--n-cap", "20000",
        ],
        "1",
    );
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 7);
    assert_eq!(row[0], "10");
    let n: usize = row[1].parse().unwrap();
    let nb: usize = row[4].parse().unwrap();
    assert!((100..=20000).contains(&n));
    assert!((100..=20000).contains(&nb));
}

#[test]
fn bad_thread_count_is_reported() {
    let out = blockpca(&["diagnose", "recursion"], "many");
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("BLOCKPCA_THREADS"));
}
