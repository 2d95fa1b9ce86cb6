//! End-to-end tests driving the installed binary: artifact shapes, exit
//! codes, and byte-level reproducibility across reruns, directories, and
//! thread counts.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bf(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blockframes"))
        .arg("--out-dir")
        .arg(out_dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out_dir: &Path, args: &[&str]) -> Output {
    let out = bf(out_dir, args);
    assert!(
        out.status.success(),
        "command {args:?} failed:\n{}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    let text = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{path:?}: {e}"));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{path:?}: {e}"))
}

fn read_bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_else(|e| panic!("{path:?}: {e}"))
}

fn construct_16_6(dir: &Path) -> std::path::PathBuf {
    ok(dir, &["construct", "--set", "hadamard-16-6"]);
    dir.join("hadamard-16-6.frame")
}

#[test]
fn construct_writes_identical_artifacts_across_directories() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let frame_a = construct_16_6(a.path());
    let frame_b = construct_16_6(b.path());
    assert_eq!(read_bytes(&frame_a), read_bytes(&frame_b));
    assert_eq!(
        read_bytes(&a.path().join("hadamard-16-6-welch.json")),
        read_bytes(&b.path().join("hadamard-16-6-welch.json"))
    );

    let welch = read_json(&a.path().join("hadamard-16-6-welch.json"));
    let mean = welch["welch"]["mean_off_diagonal"].as_f64().unwrap();
    let max = welch["welch"]["max_off_diagonal"].as_f64().unwrap();
    let bound = welch["welch"]["average_bound"].as_f64().unwrap();
    // Exact equiangular frame: every off-diagonal squared correlation sits
    // on the Welch bound.
    assert!((mean - bound).abs() < 1e-12);
    assert!((max - bound).abs() < 1e-12);
}

#[test]
fn construct_rejects_non_bijective_permutation() {
    let dir = TempDir::new().unwrap();
    let out = bf(
        dir.path(),
        &[
            "construct", "--rows", "0,1,2", "--base", "dft", "--blocks", "4:2:4", "--perm",
            "0,0,1,2,3,4,5,6",
        ],
    );
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn eval_point_matches_known_capacity() {
    let dir = TempDir::new().unwrap();
    let frame = construct_16_6(dir.path());
    ok(
        dir.path(),
        &["eval", "--frame", frame.to_str().unwrap(), "--blocks", "4:4:2", "--snr", "30"],
    );
    let report = read_json(&dir.path().join("hadamard-16-6-eval.json"));
    let mean = report["mean_capacity"].as_f64().unwrap();
    assert!((mean - 52.908976291832296).abs() < 1e-9, "mean {mean}");
    assert_eq!(report["selections"].as_u64().unwrap(), 6);
    // All six selections are equivalent by symmetry, so none falls below
    // 98 percent of the mean.
    assert_eq!(report["outage"]["0.98"].as_f64().unwrap(), 0.0);
}

#[test]
fn eval_with_all_blocks_active_has_single_selection_and_zero_outage() {
    let dir = TempDir::new().unwrap();
    let frame = construct_16_6(dir.path());
    ok(
        dir.path(),
        &["eval", "--frame", frame.to_str().unwrap(), "--blocks", "4:4:4", "--snr", "10"],
    );
    let report = read_json(&dir.path().join("hadamard-16-6-eval.json"));
    assert_eq!(report["selections"].as_u64().unwrap(), 1);
    assert_eq!(report["outage"]["0.98"].as_f64().unwrap(), 0.0);
}

#[test]
fn snr_sweep_reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let frame = construct_16_6(a.path());
    let args = [
        "eval",
        "--frame",
        frame.to_str().unwrap(),
        "--blocks",
        "4:4:2",
        "--sweep",
        "snr",
        "--from",
        "0",
        "--to",
        "5",
        "--step",
        "2.5",
        "--reference",
        "manova",
        "--gnuplot",
    ];
    ok(a.path(), &args);
    ok(b.path(), &args);
    for name in ["eval-snr.csv", "eval-snr.json", "eval-snr.gp"] {
        assert_eq!(
            read_bytes(&a.path().join(name)),
            read_bytes(&b.path().join(name)),
            "{name} differs between reruns"
        );
    }
    let csv = String::from_utf8(read_bytes(&a.path().join("eval-snr.csv"))).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# blockframes "));
    assert_eq!(lines.next().unwrap(), "x,series,value");
    // 3 sweep points for the frame plus 3 for the manova reference.
    assert_eq!(lines.count(), 6);
}

#[test]
fn beta_inv_sweep_places_frames_and_references_on_shared_axis() {
    let dir = TempDir::new().unwrap();
    let frame = construct_16_6(dir.path());
    let out = ok(
        dir.path(),
        &[
            "eval",
            "--frame",
            frame.to_str().unwrap(),
            "--label",
            "canonical",
            "--blocks",
            "8:2:4",
            "--snr",
            "10",
            "--sweep",
            "beta-inv",
            "--reference",
            "manova",
            "--grid",
            "0.5,0.75,1.0,9.0",
        ],
    );
    // beta^-1 = 9 would need M = 72 > N = 16 and is skipped with a reason.
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("skipping beta^-1 = 9"), "stderr: {stderr}");

    let csv = String::from_utf8(read_bytes(&dir.path().join("eval-beta-inv.csv"))).unwrap();
    let rows: Vec<(f64, &str, f64)> = csv
        .lines()
        .skip(2)
        .map(|l| {
            let mut f = l.split(',');
            (
                f.next().unwrap().parse().unwrap(),
                f.next().unwrap(),
                f.next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    let measured: Vec<_> = rows.iter().filter(|r| r.1 == "canonical").collect();
    assert_eq!(measured.len(), 1);
    assert!((measured[0].0 - 0.75).abs() < 1e-12, "x = M/K = 6/8");
    let reference: Vec<_> = rows.iter().filter(|r| r.1 == "manova").collect();
    assert_eq!(reference.len(), 3, "feasible grid points only");
    // The x recorded for a reference point is the beta^-1 its rounded M
    // actually achieves.
    for r in &reference {
        let m = (8.0 * r.0).round();
        assert!((m / 8.0 - r.0).abs() < 1e-12);
    }
}

#[test]
fn search_exhaustive_visits_every_canonical_partition() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "search", "--rows", "0,1,3", "--base", "dft", "--blocks", "4:2:2", "--snr", "30",
            "--search-mode", "exhaustive",
        ],
    );
    let report = read_json(&dir.path().join("search-petf-dft-n8-m3.json"));
    assert_eq!(report["result"]["evaluations"].as_u64().unwrap(), 105);
    let best = report["result"]["best_objective"].as_f64().unwrap();
    assert!((best - 30.480483527449596).abs() < 1e-9, "best {best}");
}

#[test]
fn search_exhaustive_beyond_cap_is_infeasible() {
    let dir = TempDir::new().unwrap();
    let out = bf(
        dir.path(),
        &[
            "search", "--set", "hadamard-64-8-near", "--blocks", "16:4:2", "--snr", "10",
            "--search-mode", "exhaustive",
        ],
    );
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn search_resume_from_checkpoint_reproduces_the_fresh_run() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let cp = a.path().join("cp.json");
    let base_args = |cp: &Path| {
        vec![
            "--seed".into(),
            "7".into(),
            "search".into(),
            "--rows".into(),
            "0,1,3".into(),
            "--base".into(),
            "dft".into(),
            "--blocks".into(),
            "4:2:2".into(),
            "--snr".into(),
            "30".into(),
            "--restarts".into(),
            "3".into(),
            "--iterations".into(),
            "200".into(),
            "--checkpoint".into(),
            cp.to_str().unwrap().to_string(),
            "--out".into(),
            "run".into(),
        ]
    };
    let args_a: Vec<String> = base_args(&cp);
    let refs: Vec<&str> = args_a.iter().map(|s| s.as_str()).collect();
    ok(a.path(), &refs);
    assert!(cp.exists(), "sink wrote a checkpoint");

    let mut args_b: Vec<String> = base_args(&cp);
    args_b.push("--resume".into());
    let refs: Vec<&str> = args_b.iter().map(|s| s.as_str()).collect();
    ok(b.path(), &refs);

    for name in ["run.json", "run.frame", "run-trace.csv"] {
        assert_eq!(
            read_bytes(&a.path().join(name)),
            read_bytes(&b.path().join(name)),
            "{name} differs between fresh and resumed runs"
        );
    }
}

#[test]
fn search_rejects_checkpoint_from_another_configuration() {
    let dir = TempDir::new().unwrap();
    let cp = dir.path().join("cp.json");
    ok(
        dir.path(),
        &[
            "--seed", "7", "search", "--rows", "0,1,3", "--base", "dft", "--blocks", "4:2:2",
            "--snr", "30", "--restarts", "2", "--iterations", "50", "--checkpoint",
            cp.to_str().unwrap(),
        ],
    );
    let out = bf(
        dir.path(),
        &[
            "--seed", "8", "search", "--rows", "0,1,3", "--base", "dft", "--blocks", "4:2:2",
            "--snr", "30", "--restarts", "2", "--iterations", "50", "--checkpoint",
            cp.to_str().unwrap(), "--resume",
        ],
    );
    assert_eq!(exit_code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("does not match"), "stderr: {stderr}");
}

#[test]
fn spectrum_rebins_to_model_support_and_reports_kl() {
    let dir = TempDir::new().unwrap();
    let frame = construct_16_6(dir.path());
    ok(
        dir.path(),
        &[
            "spectrum", "--frame", frame.to_str().unwrap(), "--blocks", "8:2:2", "--bins", "8",
            "--eigenvalues",
        ],
    );
    let report = read_json(&dir.path().join("hadamard-16-6-spectrum.json"));
    assert_eq!(report["selections"].as_u64().unwrap(), 28);
    assert!(report["kl_divergence"].as_f64().unwrap() >= 0.0);
    let edges = report["histogram"]["edges"].as_array().unwrap();
    assert_eq!(edges.len(), 9);
    let support_end = report["model"]["support"][1].as_f64().unwrap();
    assert!((edges[8].as_f64().unwrap() - support_end).abs() < 1e-12);

    let eig_csv =
        String::from_utf8(read_bytes(&dir.path().join("hadamard-16-6-spectrum-eigenvalues.csv")))
            .unwrap();
    // 28 selections x K = 4 eigenvalues, plus stamp and header lines.
    assert_eq!(eig_csv.lines().count(), 2 + 28 * 4);
}

#[test]
fn spectrum_with_one_bin_warns() {
    let dir = TempDir::new().unwrap();
    let frame = construct_16_6(dir.path());
    let out = ok(
        dir.path(),
        &["spectrum", "--frame", frame.to_str().unwrap(), "--blocks", "8:2:2", "--bins", "1"],
    );
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("one bin"), "stderr: {stderr}");
}

#[test]
fn catalog_find_reports_sets_reasons_and_limits() {
    let dir = TempDir::new().unwrap();
    let out = ok(dir.path(), &["catalog", "find", "--group", "cyclic", "--n", "7", "--m", "3"]);
    let outcome: Value = serde_json::from_slice(&out.stdout).unwrap();
    let sets = outcome["sets"].as_array().unwrap();
    assert!(sets
        .iter()
        .any(|s| s["elements"] == serde_json::json!([0, 1, 3])));

    let out = ok(dir.path(), &["catalog", "find", "--group", "cyclic", "--n", "5", "--m", "2"]);
    let outcome: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(outcome["sets"].as_array().unwrap().len(), 0);
    assert!(outcome["reason"].as_str().unwrap().contains("2/4"));

    let out = bf(dir.path(), &["catalog", "find", "--group", "cyclic", "--n", "33", "--m", "5"]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn catalog_list_knows_the_bundled_sets() {
    let dir = TempDir::new().unwrap();
    let out = ok(dir.path(), &["--format", "csv", "catalog", "list"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 10, "header plus nine bundled entries");
    assert!(text.contains("hadamard-16-6,binary,16,6,hadamard,false"));
    assert!(text.contains("hadamard-64-8-near,binary,64,8,hadamard,true"));
}

#[test]
fn config_file_expands_to_the_same_artifact_as_flags() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let frame = construct_16_6(a.path());
    ok(
        a.path(),
        &[
            "eval", "--frame", frame.to_str().unwrap(), "--blocks", "4:4:2", "--snr", "30",
            "--per-selection",
        ],
    );
    let conf = b.path().join("run.conf");
    std::fs::write(&conf, "# shared settings\nsnr = 30\nblocks = 4:4:2\nper_selection = true\n")
        .unwrap();
    ok(
        b.path(),
        &[
            "--config",
            conf.to_str().unwrap(),
            "eval",
            "--frame",
            frame.to_str().unwrap(),
        ],
    );
    assert_eq!(
        read_bytes(&a.path().join("hadamard-16-6-eval.json")),
        read_bytes(&b.path().join("hadamard-16-6-eval.json"))
    );
}

#[test]
fn csv_point_report_emits_one_row_per_metric() {
    let dir = TempDir::new().unwrap();
    let frame = construct_16_6(dir.path());
    ok(
        dir.path(),
        &[
            "--format", "csv", "eval", "--frame", frame.to_str().unwrap(), "--blocks", "8:2:4",
            "--snr", "10", "--stc", "--out", "pts",
        ],
    );
    let csv = String::from_utf8(read_bytes(&dir.path().join("pts.csv"))).unwrap();
    let series: Vec<&str> =
        csv.lines().skip(2).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(
        series,
        ["hadamard-16-6-capacity", "hadamard-16-6-outage", "hadamard-16-6-stc-bound"]
    );
}

#[test]
fn monte_carlo_eval_is_deterministic_across_thread_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let frame = construct_16_6(a.path());
    let args = |threads: &'static str| {
        [
            "--threads",
            threads,
            "--seed",
            "5",
            "eval",
            "--frame",
            frame.to_str().unwrap(),
            "--blocks",
            "8:2:4",
            "--snr",
            "10",
            "--eval-mode",
            "mc",
            "--samples",
            "40",
        ]
    };
    // The thread flag must not leak into results: sums reduce in
    // selection-enumeration order regardless of worker count.
    ok(a.path(), &args("2"));
    ok(b.path(), &args("1"));
    assert_eq!(
        read_bytes(&a.path().join("hadamard-16-6-eval.json")),
        read_bytes(&b.path().join("hadamard-16-6-eval.json"))
    );
}

#[test]
fn searched_frame_beats_canonical_at_its_own_geometry() {
    let dir = TempDir::new().unwrap();
    let canonical = construct_16_6(dir.path());
    ok(
        dir.path(),
        &[
            "--seed", "2024", "search", "--set", "hadamard-16-6", "--blocks", "8:2:4", "--snr",
            "30", "--restarts", "1", "--iterations", "400", "--out", "searched",
        ],
    );
    ok(
        dir.path(),
        &[
            "eval",
            "--frame",
            canonical.to_str().unwrap(),
            "--frame",
            dir.path().join("searched.frame").to_str().unwrap(),
            "--label",
            "canonical",
            "--label",
            "searched",
            "--blocks",
            "8:2:4",
            "--snr",
            "30",
            "--sweep",
            "beta-inv",
        ],
    );
    let csv = String::from_utf8(read_bytes(&dir.path().join("eval-beta-inv.csv"))).unwrap();
    let mut canonical_val = None;
    let mut searched_val = None;
    for line in csv.lines().skip(2) {
        let mut f = line.split(',');
        let _x = f.next().unwrap();
        match f.next().unwrap() {
            "canonical" => canonical_val = Some(f.next().unwrap().parse::<f64>().unwrap()),
            "searched" => searched_val = Some(f.next().unwrap().parse::<f64>().unwrap()),
            _ => {}
        }
    }
    let (c, s) = (canonical_val.unwrap(), searched_val.unwrap());
    assert!(s >= c - 1e-9, "searched {s} should not fall below canonical {c}");
}
