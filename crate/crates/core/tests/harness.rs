//! End-to-end runs of the experiment harness and the `minmove` binary.

use std::fs;
use std::path::Path;
use std::process::Command;

use minmove::harness::report::EntryStatus;
use minmove::harness::run::config_hash;
use minmove::harness::{run_bytes, summarize, ExperimentConfig, RunOptions};
use minmove::io::read_table;

const EUCLID: &str = r#"
[experiment]
kind = "euclid-oracle"
seed = 1

[numerics]
t = 1.0
n_schedule = [2, 4, 8, 16, 32, 64, 128, 256]

[tolerances]
max_final_error = 2e-3
"#;

const NPC: &str = r#"
[experiment]
kind = "npc-check"
seed = 9

[background]
n = 32

[numerics]
triangles = 6
quadrilaterals = 4
convexity_pairs = 4
samples = 5
"#;

fn opts(out: &Path) -> RunOptions {
    RunOptions {
        out: Some(out.to_path_buf()),
        ..RunOptions::default()
    }
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .map(|e| (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn euclid_oracle_run_passes_and_tags_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let summary = run_bytes(EUCLID.as_bytes(), dir.path(), &opts(&out)).unwrap();
    assert_eq!(summary.exit_code(), 0, "{:?}", summary.report);
    let hash = config_hash(EUCLID.as_bytes());
    for name in ["mayer_errors.csv", "assertions.csv"] {
        let t = read_table(&out.join(name)).unwrap();
        assert_eq!(t.meta.get("config_hash"), Some(hash.as_str()), "{name}");
    }
    let t = read_table(&out.join("mayer_errors.csv")).unwrap();
    assert_eq!(t.rows.len(), 8);
    let err = t.column("error").unwrap();
    let last: f64 = t.rows[7][err].parse().unwrap();
    assert!(last <= 2e-3);
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_bytes(NPC.as_bytes(), dir.path(), &opts(&a)).unwrap();
    run_bytes(NPC.as_bytes(), dir.path(), &opts(&b)).unwrap();
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.len(), 2);
    assert_eq!(fa, fb);
    // a different seed changes the sampled points
    let c = dir.path().join("c");
    run_bytes(NPC.as_bytes(), dir.path(), &RunOptions { seed: Some(10), ..opts(&c) }).unwrap();
    assert_ne!(files(&c)[1], fa[1]);
}

#[test]
fn config_errors_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    for bad in [
        "[experiment]\nkind = \"flow\"\n",
        "[experiment]\nkind = \"flow\"\nseed = 1\nspeed = 3\n",
        "[experiment]\nkind = \"flow\"\nseed = 1\n[initial]\nmodes = [[1, 0.5, 0.0]]\n",
        "not toml at all [",
    ] {
        assert!(run_bytes(bad.as_bytes(), dir.path(), &opts(&out)).is_err(), "{bad}");
        assert!(!out.exists());
    }
}

#[test]
fn runtime_errors_are_recorded() {
    // the reference step does not divide the finest τ
    let cfg = "[experiment]\nkind = \"compare\"\nseed = 1\n[background]\nn = 16\n[initial]\nmodes = [[1, 1e-3, 0.0]]\n[numerics]\nlevels = 2\nreference_dt = 3e-6\n";
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let summary = run_bytes(cfg.as_bytes(), dir.path(), &opts(&out)).unwrap();
    assert_eq!(summary.exit_code(), 1);
    assert!(summary.runtime_error.is_some());
    let t = read_table(&out.join("assertions.csv")).unwrap();
    assert!(t.meta.get("error").is_some());
    assert_eq!(t.rows.last().unwrap()[0], "runtime_error");
}

#[test]
fn strict_mode_tightens_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{EUCLID}\n");
    let loose = run_bytes(cfg.as_bytes(), dir.path(), &opts(&dir.path().join("l"))).unwrap();
    let strict = run_bytes(
        cfg.as_bytes(),
        dir.path(),
        &RunOptions { strict: true, ..opts(&dir.path().join("s")) },
    )
    .unwrap();
    let bound = |s: &minmove::harness::RunSummary| s.report.get("mayer_final_error").unwrap().threshold;
    assert!((bound(&strict) - 0.1 * bound(&loose)).abs() < 1e-18);
    // 7.2e-4 at n = 256 fails the tightened 2e-4 bound
    assert_eq!(strict.exit_code(), 1);
}

#[test]
fn report_marks_exactly_the_failed_entry() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    run_bytes(NPC.as_bytes(), dir.path(), &opts(&out)).unwrap();
    let clean = summarize(&out).unwrap();
    assert_eq!(clean.exit_code(), 0, "{}", clean.render());
    assert_eq!(clean.failures(), 0);

    let hash = config_hash(NPC.as_bytes());
    fs::write(
        out.join("injected.csv"),
        format!("# config_hash = {hash}\nproperty,value,threshold,relation,status\nfake_residual,1e-3,1e-6,<=,fail\n"),
    )
    .unwrap();
    let s = summarize(&out).unwrap();
    let failed: Vec<_> = s.entries.iter().filter(|e| e.status != EntryStatus::Pass).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].property, "fake_residual");
    assert_eq!(s.exit_code(), 1);
    assert!(s.render().contains("FAIL"));
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = ExperimentConfig::parse(&fs::read_to_string(&path).unwrap()).unwrap();
            cfg.validate(&dir).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 7);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_minmove");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("euclid.toml");
    fs::write(&cfg, EUCLID).unwrap();
    let out = dir.path().join("out");

    let run = Command::new(bin).arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let report = Command::new(bin).arg("report").arg(&out).output().unwrap();
    assert_eq!(report.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&report.stdout).contains("3/3 properties pass"));

    let strict = Command::new(bin).arg("run").arg(&cfg).arg("--out").arg(&out).arg("--strict").output().unwrap();
    assert_eq!(strict.status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[experiment]\nkind = \"flow\"\n").unwrap();
    let fresh = dir.path().join("fresh");
    let run = Command::new(bin).arg("run").arg(&bad).arg("--out").arg(&fresh).output().unwrap();
    assert_eq!(run.status.code(), Some(2));
    assert!(!fresh.exists());

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let report = Command::new(bin).arg("report").arg(&empty).output().unwrap();
    assert_eq!(report.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&report.stdout), "no artifacts\n");

    let missing = Command::new(bin).arg("report").arg(dir.path().join("nope")).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
