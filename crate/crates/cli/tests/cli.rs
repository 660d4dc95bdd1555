//! End-to-end exercise of the bench binary: gen -> run -> resume -> report.

use std::path::Path;
use std::process::Command;

fn bench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bench"))
}

fn run_ok(cmd: &mut Command) -> String {
    let out = cmd.output().expect("spawn bench");
    assert!(
        out.status.success(),
        "bench failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_config(dir: &Path, mtx: &Path) -> std::path::PathBuf {
    let config = serde_json::json!({
        "matrices": [{"id": "p12", "path": mtx}],
        "orderings": ["natural", "rcm"],
        "precond_grid": {
            "tns_terms": [1],
            "tns_alphas": ["unit"],
            "ssor_sweeps": [1],
            "ssor_omegas": [1.0, 1.5],
            "ssor_optimal_omega": false,
            "sspai_multipliers": [1.0],
            "ic_droptols": [0.0, 1e-6],
            "ic_modified": [false]
        },
        "output_dir": dir.join("out"),
        "offline": true
    });
    let path = dir.join("bench.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

#[test]
fn full_pipeline_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("p12.mtx");

    let out = run_ok(bench()
        .args(["gen", "--kind", "poisson2d", "--k", "12", "--out"])
        .arg(&mtx));
    assert!(out.contains("144x144"));
    assert!(mtx.exists());

    let config = write_config(dir.path(), &mtx);
    let out = run_ok(bench().args(["run", "--config"]).arg(&config));
    // 2 orderings x (control + 6 configs)
    assert!(out.contains("14 records"), "stdout: {out}");

    let out = run_ok(bench().args(["run", "--resume", "--config"]).arg(&config));
    assert!(out.contains("0 solves executed"), "stdout: {out}");
    assert!(out.contains("14 skipped"), "stdout: {out}");

    for mode in ["vs_control", "vs_control_with_gen", "vs_direct", "vs_direct_with_gen"] {
        let out = run_ok(bench()
            .args(["report", "--mode", mode, "--records"])
            .arg(dir.path().join("out")));
        assert!(out.contains("summary:"), "mode {mode}: {out}");
    }
    let summary = std::fs::read_to_string(
        dir.path().join("out").join("report").join("summary_vs_control.csv"),
    )
    .unwrap();
    assert!(summary.lines().count() > 5);
    assert!(summary.starts_with("label,auc,geo_mean,success_rate,parity,ge2x,ge4x,ge8x"));

    // single-ordering override postfixes only natural runs
    let single_dir = dir.path().join("single");
    let config2 = serde_json::json!({
        "matrices": [{"id": "p12", "path": mtx}],
        "orderings": ["natural", "rcm"],
        "precond_grid": {
            "tns_terms": [], "tns_alphas": [], "ssor_sweeps": [], "ssor_omegas": [],
            "ssor_optimal_omega": false, "sspai_multipliers": [],
            "ic_droptols": [], "ic_modified": []
        },
        "output_dir": single_dir,
        "offline": true
    });
    let config2_path = dir.path().join("single.json");
    std::fs::write(&config2_path, serde_json::to_string(&config2).unwrap()).unwrap();
    let out = run_ok(bench()
        .args(["run", "--ordering", "rcm", "--config"])
        .arg(&config2_path));
    assert!(out.contains("1 records"), "stdout: {out}");
}

#[test]
fn gen_other_kinds_and_bad_args() {
    let dir = tempfile::tempdir().unwrap();
    let tri = dir.path().join("t.mtx");
    run_ok(bench().args(["gen", "--kind", "tridiag", "--n", "5", "--out"]).arg(&tri));
    let sdd = dir.path().join("s.mtx");
    run_ok(bench()
        .args(["gen", "--kind", "random_sdd", "--n", "20", "--density", "0.3", "--out"])
        .arg(&sdd));

    let out = bench()
        .args(["gen", "--kind", "bogus", "--out"])
        .arg(dir.path().join("x.mtx"))
        .output()
        .unwrap();
    assert!(!out.status.success());

    let out = bench()
        .args(["report", "--mode", "bogus", "--records"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn fetch_uses_cache_offline() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    std::fs::create_dir_all(&cache).unwrap();
    std::fs::write(
        cache.join("tiny.mtx"),
        "%%MatrixMarket matrix coordinate real symmetric\n1 1 1\n1 1 2.0\n",
    )
    .unwrap();
    let list = dir.path().join("list.json");
    std::fs::write(
        &list,
        r#"[{"id": "tiny", "url": "http://unreachable.test/tiny.tar.gz"}]"#,
    )
    .unwrap();
    let out = run_ok(bench()
        .args(["fetch", "--offline", "--list"])
        .arg(&list)
        .arg("--cache")
        .arg(&cache));
    assert!(out.contains("tiny:"));

    // missing entry fails in offline mode
    std::fs::write(
        &list,
        r#"[{"id": "absent", "url": "http://unreachable.test/absent.tar.gz"}]"#,
    )
    .unwrap();
    let out = bench()
        .args(["fetch", "--offline", "--list"])
        .arg(&list)
        .arg("--cache")
        .arg(&cache)
        .output()
        .unwrap();
    assert!(!out.status.success());
}
