use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn dynpot(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynpot"))
        .args(args)
        .env("DYNPOT_OUTPUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(i).unwrap().to_string()).collect()
}

#[test]
fn equidist_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write_config(
        tmp.path(),
        r#"
kind = "equidist"
output_dir = "ignored"
[map]
coeffs = "[0.3, 0, 1]"
[params]
n = [4, 10]
m = 1
a = "1"
"#,
    );
    let run = dynpot(&["run", &cfg], &out);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(out.join("equidist.csv")).unwrap();
    let ns = column(&csv, "n");
    assert_eq!(ns, ["4", "5", "6", "7", "8", "9", "10"]);
    let gaps: Vec<f64> = column(&csv, "max_gap").iter().map(|s| s.parse().unwrap()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[6] < 0.02);
    assert!(column(&csv, "status").iter().all(|s| s == "certified"));
    assert!(out.join("roots/n10.csv").exists());

    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    let files: Vec<&str> = manifest["files"].as_array().unwrap().iter().map(|f| f["path"].as_str().unwrap()).collect();
    assert!(files.contains(&"equidist.csv") && files.contains(&"reports.json"));
    assert_eq!(files.len(), 9);
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);

    let v = dynpot(&["verify", out.join("manifest.json").to_str().unwrap()], &out);
    assert_eq!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stdout).starts_with("ok"));

    fs::write(out.join("equidist.csv"), csv.replace("certified", "edited")).unwrap();
    let v = dynpot(&["verify", out.join("manifest.json").to_str().unwrap()], &out);
    assert_ne!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stderr).contains("hash mismatch: equidist.csv"));
}

#[test]
fn height_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"
kind = "height"
output_dir = "ignored"
[map]
coeffs = "[0, 0, 1]"
[params]
n = [1, 10]
m = 1
a = "1"
"#,
    );
    let run = dynpot(&["run", &cfg], tmp.path());
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let csv = fs::read_to_string(tmp.path().join("height.csv")).unwrap();
    let hhat = column(&csv, "hhat");
    assert_eq!(hhat.len(), 10);
    for (i, h) in hhat.iter().enumerate() {
        let n = i as i32 + 1;
        let want = n as f64 * 2f64.ln() / (2f64.powi(n) - 1.0);
        assert!((h.parse::<f64>().unwrap() - want).abs() <= 1e-12, "n = {n}");
    }
}

#[test]
fn zero_a4_is_a_validation_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"
kind = "henon"
output_dir = "ignored"
[map]
coeffs = "[-1.1, 0, 1]"
delta = "0.3"
[params]
n = [1, 4]
shift = ["1", "0", "0", "0"]
henon_points = [[3.0, 0.0, 0.0, 0.0]]
"#,
    );
    let run = dynpot(&["run", &cfg], &tmp.path().join("out"));
    assert_eq!(run.status.code(), Some(2));
    let err = String::from_utf8_lossy(&run.stderr);
    assert!(err.contains("params.shift") && err.contains("a4 must be nonzero"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn verify_without_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let v = dynpot(&["verify", tmp.path().join("manifest.json").to_str().unwrap()], tmp.path());
    assert_ne!(v.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&v.stderr).contains("missing file"));
}

#[test]
fn schema_is_a_valid_config() {
    let tmp = tempfile::tempdir().unwrap();
    let s = dynpot(&["schema"], tmp.path());
    assert_eq!(s.status.code(), Some(0));
    dynpot_cli::ExperimentConfig::parse(&String::from_utf8(s.stdout).unwrap()).unwrap();
}
