use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MINIMAL: &str = "seed = 1\n[anchor]\nposition = [2.0, 2.2]\n[eavesdropper]\nposition = [9, 2.5]\n";

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csi-shield"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("CSI_SHIELD_OUT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn config(dir: &Path, extra: &str) -> String {
    let p = dir.join("scenario.toml");
    fs::write(&p, format!("{MINIMAL}{extra}")).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(tmp.path(), &["simulate", "--bogus"])), 2);
    assert_eq!(
        code(&run(tmp.path(), &["sweep", "--var", "height", "--values", "1"])),
        2
    );
    let both = ["attack", "--reference", "a", "--motion", "b", "--C", "3", "--max-ref"];
    assert_eq!(code(&run(tmp.path(), &both)), 2);
}

#[test]
fn invalid_configuration_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "[experiment]\nn_select = -1\n");
    let o = run(tmp.path(), &["--config", &cfg, "simulate", "--duration", "2"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment.n_select"));
    let o = run(tmp.path(), &["simulate", "--duration", "0.5"]);
    assert_eq!(code(&o), 3);
    let o = run(tmp.path(), &["sweep", "--var", "size", "--values", "1.5"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn missing_files_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.toml");
    let o = run(tmp.path(), &["--config", missing.to_str().unwrap(), "simulate"]);
    assert_eq!(code(&o), 4);
    let o = run(tmp.path(), &["ingest", "--trace", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}

#[test]
fn malformed_trace_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("bad.csv");
    fs::write(
        &trace,
        "# csi-shield trace schema_version=1.0 n_subcarriers=1 n_rx=1 n_tx=1 sample_rate=10\nt,k,rx,tx,re,im\n0,0,0,0,1,NaN\n",
    )
    .unwrap();
    let o = run(tmp.path(), &["ingest", "--trace", trace.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn silent_room_gives_all_zero_observation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), "[irs]\nenabled = false\n[radio]\nsnr_db = inf\n");
    let out = tmp.path().join("out");
    let o = run(&out, &["--config", &cfg, "simulate", "--duration", "3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("observation.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3 * 70 - 70 + 1);
    for r in rows {
        let v: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.0);
    }
}

#[test]
fn attack_writes_a_readable_report() {
    let tmp = tempfile::tempdir().unwrap();
    let (q, w) = (tmp.path().join("q"), tmp.path().join("w"));
    assert_eq!(code(&run(&q, &["simulate", "--duration", "4"])), 0);
    assert_eq!(code(&run(&w, &["simulate", "--motion", "walk", "--duration", "4"])), 0);
    let a = tmp.path().join("a");
    let o = run(
        &a,
        &[
            "attack",
            "--reference",
            q.join("observation.csv").to_str().unwrap(),
            "--motion",
            w.join("observation.csv").to_str().unwrap(),
            "--max-ref",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = csi_shield::io::read_report(a.join("report.json")).unwrap();
    assert_eq!(report.fpr, 0.0);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "attack");
    assert_eq!(manifest["outputs"][0]["name"], "report.json");
}
