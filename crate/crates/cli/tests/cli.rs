use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_badeconv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn construct(dir: &Path, m: &str) -> std::path::PathBuf {
    let out = dir.join(format!("tuple{m}.json"));
    stdout_json(&run(&[
        "construct",
        "--m",
        m,
        "--a",
        "1/2",
        "--b",
        "1",
        "--out",
        p(&out),
    ]));
    out
}

#[test]
fn construct_writes_tuple_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let out = run(&["construct", "--m", "2", "--a", "1/2", "--b", "1", "--out", p(&first)]);
    let summary = stdout_json(&out);
    assert_eq!(summary["all_hold"], true);
    run(&["construct", "--m", "2", "--a", "1/2", "--b", "1", "--out", p(&second)]);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    let tuple: Value = serde_json::from_slice(&fs::read(&first).unwrap()).unwrap();
    assert_eq!(tuple["schema_version"], 1);
    let beta: Vec<f64> = tuple["beta"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b.as_str().unwrap()[..12].parse().unwrap())
        .collect();
    assert!(
        (beta[0] - 0.61719).abs() < 5e-6 && (beta[1] - 0.98828).abs() < 5e-6,
        "{beta:?}"
    );
    assert!(tuple["beta"][0].as_str().unwrap().len() >= 62);
    for key in ["M", "Q", "a", "b", "precision_bits", "z", "alpha", "xi", "residuals"] {
        assert!(tuple.get(key).is_some(), "{key}");
    }
    let manifest: Value = serde_json::from_slice(&fs::read(dir.path().join("a.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "construct");
    assert_eq!(manifest["params"]["M"], 2);
}

#[test]
fn construct_rejects_zero_channels() {
    let out = run(&["construct", "--m", "0", "--out", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!Path::new("x.json").exists());
}

#[test]
fn construct_reports_bad_interval_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "construct",
        "--m",
        "2",
        "--a",
        "1",
        "--b",
        "1/2",
        "--out",
        p(&dir.path().join("t.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "interval-violation");
}

#[test]
fn verify_constructed_and_rational_tuples() {
    let dir = tempfile::tempdir().unwrap();
    let tuple = construct(dir.path(), "2");
    let report = stdout_json(&run(&["verify", "--tuple", p(&tuple), "--qmax", "100000"]));
    assert!(report["min_score"].as_f64().unwrap() > 0.0);
    assert_eq!(report["zero_badness"], false);
    assert!(report["witness"].is_object());
    assert_eq!(report["cf_audit"].as_array().unwrap().len(), 2);

    let rational = dir.path().join("rational.json");
    fs::write(&rational, r#"{"schema_version": 1, "M": 2, "beta": ["1/4", "1/3"]}"#).unwrap();
    let out = run(&["verify", "--tuple", p(&rational), "--qmax", "1000"]);
    let report = stdout_json(&out);
    assert_eq!(report["min_score"].as_f64(), Some(0.0));
    assert_eq!(report["argmin_q"], 12);
    assert_eq!(report["zero_badness"], true);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));

    assert_eq!(
        run(&["verify", "--tuple", p(&tuple), "--qmax", "0"]).status.code(),
        Some(2)
    );

    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{").unwrap();
    let out = run(&["verify", "--tuple", p(&broken)]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "malformed-artifact");
}

#[test]
fn audit_and_aleph() {
    let dir = tempfile::tempdir().unwrap();
    let tuple = construct(dir.path(), "3");
    let audit = stdout_json(&run(&["audit-cf", "--tuple", p(&tuple), "--depth", "20"]));
    assert_eq!(audit["cf_audit"].as_array().unwrap().len(), 3);
    let aleph = stdout_json(&run(&["aleph", "--tuple", p(&tuple), "--j-min", "4", "--j-max", "9"]));
    assert_eq!(aleph["levels"].as_array().unwrap().len(), 6);
    assert!(aleph["growth_exponent"].as_f64().is_some());

    let rational = dir.path().join("r.json");
    fs::write(&rational, r#"{"schema_version": 1, "M": 1, "beta": ["1/3"]}"#).unwrap();
    let out = run(&["aleph", "--tuple", p(&rational), "--j-min", "4", "--j-max", "6"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "resonance");
}

#[test]
fn simulate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let tuple = construct(dir.path(), "2");
    let data = dir.path().join("data.bin");
    let sim = stdout_json(&run(&[
        "simulate",
        "--design",
        "ba-tuple",
        "--tuple",
        p(&tuple),
        "--signal",
        "trig",
        "--n-per-channel",
        "8192",
        "--noise-sd",
        "0.5",
        "--seed",
        "3",
        "--out",
        p(&data),
    ]));
    assert_eq!(sim["n"], 16384);
    assert!(dir.path().join("data.json").exists());
    assert_eq!(fs::metadata(&data).unwrap().len(), 60 + 8 * 16384);

    let report = dir.path().join("report.json");
    let samples = dir.path().join("fhat.csv");
    let est = stdout_json(&run(&[
        "estimate",
        "--data",
        p(&data),
        "--out",
        p(&report),
        "--samples-out",
        p(&samples),
    ]));
    assert_eq!(est["mode"], "practical");
    assert!(est["l2_error_sq"].as_f64().unwrap() < 1.0);
    let full: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(full["schema_version"], 1);
    assert!(fs::read_to_string(&samples).unwrap().starts_with("x,f_hat\n"));

    let out = run(&["estimate", "--data", p(&data), "--mode", "theory", "--out", p(&report)]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["error"], "degenerate-theory-parameters");
}

fn bench_args<'a>(tuple: &'a str, out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "bench",
        "--design",
        "ba-tuple:",
        "--design",
        "single",
        "--n-list",
        "4096,8192,16384,32768",
        "--reps",
        "100",
        "--noise-sd",
        "0.5",
        "--seed",
        "5",
        "--out-dir",
        out,
    ];
    args[2] = tuple;
    args.extend_from_slice(extra);
    args
}

#[test]
fn bench_table_is_complete_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let tuple = construct(dir.path(), "2");
    let spec = format!("ba-tuple:{}", p(&tuple));
    let one = dir.path().join("one");
    let two = dir.path().join("two");
    stdout_json(&run(&bench_args(&spec, p(&one), &[])));
    stdout_json(&run(&bench_args(&spec, p(&two), &["--threads", "1"])));
    let csv = fs::read_to_string(one.join("risk.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("design,signal,M,N,n,mode,reps,risk,stderr,resonant_reps,seed")
    );
    assert_eq!(lines.count(), 8);
    assert_eq!(csv, fs::read_to_string(two.join("risk.csv")).unwrap());
    assert_eq!(
        fs::read(one.join("report.json")).unwrap(),
        fs::read(two.join("report.json")).unwrap()
    );
    let manifest: Value = serde_json::from_slice(&fs::read(one.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
}

#[test]
fn bench_keeps_resonant_designs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b");
    let summary = stdout_json(&run(&[
        "bench",
        "--design",
        "rational:4",
        "--design",
        "uniform:4",
        "--n-list",
        "16384,32768,65536,131072",
        "--reps",
        "2",
        "--out-dir",
        p(&out),
    ]));
    assert_eq!(summary["designs"][0]["resonant"], true);
    assert_eq!(summary["designs"][0]["fit"]["unreliable"], true);
}

#[test]
fn bench_missing_tuple_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let spec = format!("ba-tuple:{}", p(&missing));
    let out = run(&bench_args(&spec, p(&dir.path().join("o")), &[]));
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "io");
    assert_eq!(err["path"], p(&missing));
}

#[test]
fn theory_calculators() {
    let m = stdout_json(&run(&["theory", "choose-M", "--n", "1e6"]));
    assert_eq!(m["M"], 1);
    assert!((m["raw"].as_f64().unwrap() - 0.9365).abs() < 1e-4);
    let nu = stdout_json(&run(&["theory", "nu-opt", "--s", "1", "--p", "2"]));
    assert!((nu["nu_opt"].as_f64().unwrap() - 0.2582).abs() < 1e-4);
    let alpha = stdout_json(&run(&["theory", "alpha-n", "--n", "1e8"]));
    assert!((alpha["alpha"]["main"].as_f64().unwrap() - 0.6197).abs() < 1e-4);
    let big = stdout_json(&run(&["theory", "alpha-n", "--ln-n", "1e6", "--p", "inf"]));
    assert!(big["alpha"]["ln_value"].as_f64().unwrap() > 0.0);
    assert_eq!(
        run(&["theory", "choose-m", "--n", "1e6", "--nu", "0"]).status.code(),
        Some(2)
    );
}

#[test]
fn help_lists_every_flag() {
    let cases: &[(&[&str], &[&str])] = &[
        (
            &["construct"],
            &[
                "--m",
                "--a",
                "--b",
                "--precision-bits",
                "--out",
                "--threads",
                "[default: 1/2]",
            ],
        ),
        (
            &["verify"],
            &[
                "--tuple",
                "--qmax",
                "--depth",
                "--out",
                "[default: 100000]",
                "[default: 64]",
            ],
        ),
        (&["audit-cf"], &["--tuple", "--depth"]),
        (
            &["aleph"],
            &[
                "--tuple",
                "--j-min",
                "--j-max",
                "--k",
                "--r0",
                "[default: 6]",
                "[default: 14]",
            ],
        ),
        (
            &["simulate"],
            &[
                "--design",
                "--m",
                "--tuple",
                "--a",
                "--b",
                "--signal",
                "--n-per-channel",
                "--noise-sd",
                "--seed",
                "--out",
            ],
        ),
        (
            &["estimate"],
            &[
                "--data",
                "--mode",
                "--eta",
                "--out",
                "--samples-out",
                "[default: practical]",
            ],
        ),
        (
            &["bench"],
            &[
                "--design",
                "--signal",
                "--n-list",
                "--reps",
                "--mode",
                "--eta",
                "--noise-sd",
                "--seed",
                "--a",
                "--b",
                "--out-dir",
                "[default: 100]",
            ],
        ),
        (&["theory", "choose-m"], &["--n", "--nu"]),
        (
            &["theory", "alpha-n"],
            &["--n", "--ln-n", "--s", "--p", "--q", "--radius", "--nu"],
        ),
        (&["theory", "nu-opt"], &["--s", "--p", "--q", "--radius"]),
    ];
    for (cmd, flags) in cases {
        let mut args = cmd.to_vec();
        args.push("--help");
        let out = run(&args);
        assert!(out.status.success());
        let text = String::from_utf8_lossy(&out.stdout);
        for f in *flags {
            assert!(text.contains(f), "{cmd:?} help lacks {f}");
        }
    }
}
