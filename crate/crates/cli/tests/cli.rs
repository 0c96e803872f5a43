use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn prethermal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prethermal"))
        .args(args)
        .env("PRETHERMAL_WORKERS", "1")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("sweep.json");
    fs::write(
        &path,
        format!(
            r#"{{"model": {{"L": 4, "range": "LongRange"}}, "omegas": [9.0],
                "initial_states": [{{"domain_walls": 1}}], "periods_max": 1,
                "schedule": {{"points_per_decade": 10}}, "orders": [0, 2],
                "output_dir": "out"{extra}}}"#
        ),
    )
    .unwrap();
    path
}

#[test]
fn single_run_sweep_then_hash_skip() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), "");
    let cfg = config.to_str().unwrap();

    let first = prethermal(&["sweep", "--config", cfg]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(stdout(&first).contains("completed 1, skipped 0, failed 0"));

    let out = tmp.path().join("out");
    let csv = fs::read_to_string(out.join("long_L4_w9_dw1_floquet.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "period,time,energy_n0,energy_n2,entropy");
    assert!(lines.len() - 1 >= 2);
    assert!(out.join("long_L4_w9_dw1_floquet.manifest.json").exists());
    assert!(out.join("fits.json").exists());
    assert!(!out.join("long_L4_w9_dw1_floquet.ckpt").exists());

    let before = fs::metadata(out.join("long_L4_w9_dw1_floquet.csv")).unwrap().modified().unwrap();
    let second = prethermal(&["sweep", "--config", cfg]);
    assert!(second.status.success());
    assert!(stdout(&second).contains("completed 0, skipped 1, failed 0"));
    let after = fs::metadata(out.join("long_L4_w9_dw1_floquet.csv")).unwrap().modified().unwrap();
    assert_eq!(before, after);
}

#[test]
fn deff_runs_and_delta_fits() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        r#", "deff_evolution": true, "delta_observable": "energy_n0", "windows": {"plateau": [0.0, 1.0]}"#,
    );
    let run = prethermal(&["sweep", "--config", config.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout(&run).contains("completed 3"));
    let out = tmp.path().join("out");
    assert!(out.join("long_L4_w9_dw1_floquet_delta_n2.csv").exists());
    let fits = fs::read_to_string(out.join("fits.json")).unwrap();
    assert!(fits.contains("plateau_height/long_L4_w9_dw1_floquet_delta_n0"));
}

#[test]
fn invalid_config_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.json");
    fs::write(&path, r#"{"model": {"L": 4, "range": "LongRange"}, "omegas": []}"#).unwrap();
    let run = prethermal(&["sweep", "--config", path.to_str().unwrap()]);
    assert!(!run.status.success());
}

#[test]
fn words_dump_lists_fourth_order() {
    let run = prethermal(&["words", "dump"]);
    assert!(run.status.success());
    let text = stdout(&run);
    assert!(text.starts_with("order,word,multiplicity,prefactor,coefficient,half_period_power"));
    assert!(text.lines().any(|l| l == "4,DEDED,8,1/360,1/45,4"));
}

#[test]
fn evolve_and_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let full = tmp.path().join("full.csv");
    let trunc = tmp.path().join("d2.csv");
    let common = ["--model", "short", "--L", "6", "--omega", "8", "--domain-walls", "5", "--periods", "20"];
    let a = prethermal(&[&["evolve"][..], &common, &["--out", full.to_str().unwrap()]].concat());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = prethermal(
        &[&["evolve"][..], &common, &["--deff-order", "2", "--out", trunc.to_str().unwrap()]].concat(),
    );
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    let delta = tmp.path().join("delta.csv");
    let c = prethermal(&[
        "compare",
        "--full",
        full.to_str().unwrap(),
        "--truncated",
        trunc.to_str().unwrap(),
        "--column",
        "energy_n0",
        "--out",
        delta.to_str().unwrap(),
        "--plateau-window",
        "0,200",
    ]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    assert!(stdout(&c).contains("plateau_height"));
    let text = fs::read_to_string(&delta).unwrap();
    assert!(text.starts_with("period,time,delta"));
}

#[test]
fn oracle_passes() {
    let run = prethermal(&["oracle", "--periods", "20"]);
    assert!(run.status.success(), "{}", stdout(&run));
    assert!(!stdout(&run).contains("FAIL"));
}
