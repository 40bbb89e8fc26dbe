use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fractal_ap::measure::LevelApproximation;
use fractal_ap_cli::run::{Run, step_find_ap};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fractal-ap"))
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run(args: &[&str], threads: Option<&str>) -> Output {
    let mut c = bin();
    c.args(args);
    match threads {
        Some(t) => c.env("FRACTAL_AP_THREADS", t),
        None => c.env_remove("FRACTAL_AP_THREADS"),
    };
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const MINIMAL: &str = "\
[run]
construction = cantor
seed = 42

[cantor]
n0 = 16
t0 = 13
depth = 2
";

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn listed(m: &Value) -> Vec<String> {
    m["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap().to_string())
        .collect()
}

/// Every JSON file must validate against its schema and every CSV must have a header.
fn check_outputs(dir: &Path) {
    let schemas = repo().join("schemas");
    let m = manifest(dir);
    let mut names = listed(&m);
    names.push("manifest.json".into());
    for name in names {
        let path = dir.join(&name);
        let text = std::fs::read_to_string(&path).unwrap();
        if let Some(stem) = name.strip_suffix(".json") {
            let schema: Value = serde_json::from_str(
                &std::fs::read_to_string(schemas.join(format!("{stem}.schema.json")))
                    .unwrap_or_else(|_| panic!("no schema shipped for {name}")),
            )
            .unwrap();
            let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();
            let instance: Value = serde_json::from_str(&text).unwrap();
            if let Err(errors) = compiled.validate(&instance) {
                let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
                panic!("{name} does not match its schema: {msgs:?}");
            }
        } else if name.ends_with(".csv") {
            let header = text.lines().next().expect("CSV has a header");
            assert!(header.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == ','), "{name}: {header}");
            let width = header.split(',').count();
            assert!(text.lines().all(|l| l.split(',').count() == width), "{name}: ragged rows");
        }
    }
}

#[test]
fn minimal_config_produces_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "minimal.ini", MINIMAL);
    let out = dir.path().join("out");
    let o = run(&["pipeline", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m["status"], "ok");
    let files = listed(&m);
    for f in ["chain.json", "fourier.csv", "lambda.json", "witness_summary.csv", "report.txt"] {
        assert!(files.contains(&f.to_string()), "{f} missing from {files:?}");
    }
    for f in &m["files"].as_array().unwrap()[..] {
        let bytes = std::fs::read(out.join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
    }
    let fourier = std::fs::read_to_string(out.join("fourier.csv")).unwrap();
    assert!(fourier.starts_with("k,re,im\n"));
    assert_eq!(fourier.lines().count(), 1 + 2 * 2048 + 1);
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.contains("Λ > 0 certified (value "), "{report}");
    check_outputs(&out);
}

#[test]
fn small_beta_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "beta.ini", &format!("{MINIMAL}\n[spectral]\nbeta = 0.5\n"));
    let out = dir.path().join("out");
    let o = run(&["pipeline", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("beta.ini:11:") && err.contains("2/3"), "{err}");
    assert!(!out.exists(), "nothing may be written for an invalid config");
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    for (body, line) in [
        (format!("{MINIMAL}dpeth = 5\n"), 9),
        (MINIMAL.replace("depth = 2", "depth = two"), 8),
        ("[run]\nconstruction = cantor\nseed\n".to_string(), 3),
        ("[run]\nconstruction = torus\n".to_string(), 2),
    ] {
        let cfg = write_config(dir.path(), "bad.ini", &body);
        let o = run(&["pipeline", cfg.to_str().unwrap()], None);
        assert_eq!(code(&o), 1);
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("bad.ini:{line}:")), "expected line {line}: {err}");
    }
}

#[test]
fn manifests_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.ini", MINIMAL);
    let mut manifests = Vec::new();
    for (i, threads) in [None, Some("1"), Some("3")].into_iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = run(&["pipeline", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], threads);
        assert_eq!(code(&o), 0);
        manifests.push(std::fs::read(out.join("manifest.json")).unwrap());
    }
    assert!(manifests.windows(2).all(|w| w[0] == w[1]));
    let o = run(&["salem", "--out", "/dev/null/x"], Some("0"));
    assert_eq!(code(&o), 1, "a zero thread cap is an operational error");
}

#[test]
fn flagship_report_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flagship");
    let cfg = repo().join("configs/flagship.ini");
    let o = run(&["pipeline", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/flagship_report.txt");
    if std::env::var_os("FRACTAL_AP_BLESS").is_some() {
        std::fs::write(&golden, &report).unwrap();
    }
    let expected = std::fs::read_to_string(&golden).expect("golden file (set FRACTAL_AP_BLESS=1 to create)");
    assert_eq!(report, expected);
    assert!(report.contains("persist to level 4"));
    check_outputs(&out);
}

#[test]
fn subcommands_on_a_constructed_chain() {
    let dir = tempfile::tempdir().unwrap();
    let d = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    let o = run(&["construct", "--depth", "3", "--seed", "7", "--out", &d("c")], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    check_outputs(&dir.path().join("c"));
    let log = std::fs::read_to_string(dir.path().join("c/construction_log.csv")).unwrap();
    assert!(log.starts_with("level,retries,target_bound,achieved\n"));
    assert_eq!(log.lines().count(), 4);

    let chain = d("c/chain.json");
    let cases: [(&str, Vec<&str>, &str); 6] = [
        ("fourier", vec!["--k-max", "256"], "fourier.csv"),
        ("check-ab", vec!["--k-max", "512"], "check_ab.json"),
        ("lambda", vec!["--cutoff", "512"], "lambda.json"),
        ("fejer", vec!["--k-max", "512"], "fejer.json"),
        ("restriction", vec!["--trials", "4", "--max-degree", "128"], "restriction.json"),
        ("find-ap", vec!["--slack", "1"], "witnesses.json"),
    ];
    for (cmd, extra, file) in cases {
        let out = d(cmd);
        let mut args = vec![cmd, "--chain", chain.as_str(), "--out", out.as_str()];
        args.extend(extra);
        let o = run(&args, None);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(dir.path().join(cmd).join(file).exists(), "{cmd} wrote no {file}");
        check_outputs(&dir.path().join(cmd));
    }
    let ab = std::fs::read_to_string(dir.path().join("check-ab/ball.csv")).unwrap();
    assert!(ab.starts_with("window_x,window_eps,ratio\n"));
    let decay = std::fs::read_to_string(dir.path().join("check-ab/decay.csv")).unwrap();
    assert!(decay.starts_with("k,abs_coeff,decay_ratio\n"));
    let summary = std::fs::read_to_string(dir.path().join("find-ap/witness_summary.csv")).unwrap();
    assert!(summary.starts_with("level,witness_count,persistent_count\n"));

    // Certificates that do not hold exit with 2, invalid requests with 1.
    let o = run(&["check-ab", "--chain", &chain, "--c1", "0.5", "--out", &d("f1")], None);
    assert_eq!(code(&o), 2);
    assert_eq!(manifest(&dir.path().join("f1"))["status"], "certification_failed");
    let o = run(&["lambda", "--chain", &chain, "--cutoff", "4", "--c2", "5", "--out", &d("f2")], None);
    assert_eq!(code(&o), 2);
    let report = std::fs::read_to_string(dir.path().join("f2/report.txt")).unwrap();
    assert!(report.contains("not certified"));
    let o = run(&["lambda", "--chain", &chain, "--beta", "0.5", "--out", &d("f3")], None);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("2/3"));
    let o = run(&["fourier", "--chain", &d("missing.json"), "--out", &d("f4")], None);
    assert_eq!(code(&o), 1);
    let o = run(&["find-ap", "--chain", &chain, "--max-depth", "9", "--out", &d("f5")], None);
    assert_eq!(code(&o), 1);
}

#[test]
fn salem_and_brownian_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("salem");
    let o = run(&["salem", "--d", "3", "--alpha", "0.6", "--xi-max", "64", "--out", s.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(s.join("salem.csv")).unwrap();
    assert!(csv.starts_with("xi,re,im,trunc_bound\n"));
    assert_eq!(csv.lines().count(), 65);
    check_outputs(&s);

    let b = dir.path().join("brownian");
    let o = run(
        &[
            "brownian",
            "--grid-depth",
            "6",
            "--paths",
            "20",
            "--epsilon",
            "0.1",
            "--closed-samples",
            "2000",
            "--out",
            b.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let m = std::fs::read_to_string(b.join("moments.csv")).unwrap();
    assert!(m.starts_with("xi,mean_abs2q,stderr\n"));
    let l = std::fs::read_to_string(b.join("lambda_eps.csv")).unwrap();
    assert!(l.starts_with("epsilon,lambda_mean,lambda_stderr,closed_form\n"));
    check_outputs(&b);

    // Cantor base of dimension alpha/2.
    let c = dir.path().join("cantor-base");
    let o = run(
        &["brownian", "--alpha", "0.9", "--grid-depth", "8", "--paths", "10", "--epsilon", "0.1",
          "--closed-samples", "1000", "--out", c.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(c.join("report.txt")).unwrap();
    assert!(report.contains("base: Cantor"), "{report}");
}

#[test]
fn empty_witness_list_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let levels: Vec<_> = (1..=2)
        .map(|j| LevelApproximation::new(j, 4u64.pow(j), vec![0]).unwrap())
        .collect();
    let mut r = Run::new(dir.path()).unwrap();
    let w = step_find_ap(&mut r, &levels, 0).unwrap();
    assert!(w.is_empty());
    r.finish("find-ap", 0).unwrap();
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("no persistent witnesses"));
    let csv = std::fs::read_to_string(dir.path().join("witnesses.csv")).unwrap();
    assert_eq!(csv, "level,p,q,r,persistence_depth,exact\n");
    let json = std::fs::read_to_string(dir.path().join("witnesses.json")).unwrap();
    assert_eq!(json.trim(), "[]");
    check_outputs(dir.path());
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&run(&["--help"], None)), 0);
    assert_eq!(code(&run(&["--version"], None)), 0);
    assert_eq!(code(&run(&["frobnicate"], None)), 1);
    assert_eq!(code(&run(&["construct", "--k-mode", "sideways"], None)), 1);
}
