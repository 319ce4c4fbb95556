use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
[run]
name = "small"
scenario = "free1d"
tiers = ["ideal"]
output_dir = "out"

[physics]
chi_mhz = 0.1
alpha = 1.0
omega_sb_mhz = 40.0
delta_omega_mhz = 0.05

[hilbert]
trunc = [16]

[grid]
t1_us = 2.0
sample_us = 0.1
"#;

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim")).args(args).output().unwrap()
}

fn sim_env(args: &[&str], workers: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(args)
        .env("SIM_WORKERS", workers)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn preset_without_name_lists_all() {
    let o = sim(&["preset"]);
    assert!(o.status.success());
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(
        names,
        ["zitterbewegung-1d", "zitterbewegung-2d", "landau-spectrum", "landau-trajectory", "klein", "rwa-scaling"]
    );
}

#[test]
fn preset_prints_or_writes_config() {
    let o = sim(&["preset", "klein"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("scenario = \"electro1d\""));

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("klein.toml");
    let o = sim(&["preset", "klein", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&path).unwrap(), text);
}

#[test]
fn unknown_preset_is_a_validation_error() {
    let o = sim(&["preset", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown preset `nope`"));
}

#[test]
fn run_verify_and_compare() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let o = sim(&["run", &cfg]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("p0_ideal"));
    let out = tmp.path().join("out");
    let out_s = out.to_str().unwrap();
    assert!(out.join("p0_ideal.csv").exists());
    assert!(out.join("manifest.json").exists());

    let o = sim(&["verify", out_s]);
    assert!(o.status.success());

    let o = sim(&["compare", out_s, out_s]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("rms 0.000e0"));

    let o = sim(&["compare", out_s, out_s, "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for c in v["runs"][0]["deviation"]["columns"].as_array().unwrap() {
        assert_eq!(c["max"].as_f64(), Some(0.0));
    }

    fs::write(out.join("p0_ideal.csv"), "t_us\n").unwrap();
    let o = sim(&["verify", out_s]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn exit_codes_follow_error_category() {
    let tmp = tempfile::tempdir().unwrap();

    let cfg = write_config(tmp.path(), "empty.toml", &SMALL.replace(r#"["ideal"]"#, "[]"));
    let o = sim(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("run.tiers"));
    assert!(!tmp.path().join("out").exists());

    let leaky = SMALL.replace("trunc = [16]", "trunc = [4]").replace("t1_us = 2.0", "t1_us = 10.0");
    let cfg = write_config(tmp.path(), "leaky.toml", &leaky);
    let o = sim(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p0_ideal"));

    let o = sim(&["run", tmp.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));

    let a = write_config(tmp.path(), "a.toml", &SMALL.replace("\"out\"", "\"a\""));
    let b = write_config(
        tmp.path(),
        "b.toml",
        &SMALL.replace("\"out\"", "\"b\"").replace("sample_us = 0.1", "sample_us = 0.2"),
    );
    assert!(sim(&["run", &a]).status.success());
    assert!(sim(&["run", &b]).status.success());
    let o = sim(&[
        "compare",
        tmp.path().join("a").to_str().unwrap(),
        tmp.path().join("b").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn worker_override_keeps_outputs_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[sweep]\nparameter = \"delta_omega_mhz\"\nvalues = [0.0, 0.05, 0.25]\n");
    let a = write_config(tmp.path(), "a.toml", &text.replace("\"out\"", "\"a\""));
    let b = write_config(tmp.path(), "b.toml", &text.replace("\"out\"", "\"b\""));
    assert!(sim_env(&["run", &a], "1").status.success());
    assert!(sim_env(&["run", &b], "3").status.success());
    let manifest = |d: &str| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(tmp.path().join(d).join("manifest.json")).unwrap()).unwrap()
    };
    let (ma, mb) = (manifest("a"), manifest("b"));
    assert_eq!(ma["workers"], 1);
    assert_eq!(mb["workers"], 3);
    for p in 0..3 {
        let name = format!("p{p}_ideal.csv");
        assert_eq!(
            fs::read(tmp.path().join("a").join(&name)).unwrap(),
            fs::read(tmp.path().join("b").join(&name)).unwrap()
        );
    }

    let o = sim_env(&["run", &a], "zero");
    assert_eq!(o.status.code(), Some(2));
}
