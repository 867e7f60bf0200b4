use std::path::Path;
use std::process::{Command, Output};

fn ptfprg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptfprg"))
        .args(args)
        .env_remove("PTFPRG_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn params_reports_ell_and_golden_seed_length() {
    let o = ptfprg(&["params", "--n", "1024", "--epsilon", "0.1", "--C", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("# seed_length_bits 42688"));
    let row = text.lines().find(|l| l.starts_with("1024,")).expect("row for n = 1024");
    assert_eq!(row.split(',').nth(2), Some("29"));
    assert!(text.contains("n,epsilon,ell,block_bits,depth,family_bits,seed_bits,formula,ratio_to_formula"));
}

#[test]
fn params_json_has_growth_ratio_in_range() {
    let o = ptfprg(&["params", "--n", "1024", "--epsilon", "0.1", "--sweep", "1024,1048576", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = doc["seed_table"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let ratio = rows[1]["seed_bits"].as_f64().unwrap() / rows[0]["seed_bits"].as_f64().unwrap();
    assert!((1.8..=2.6).contains(&ratio), "{ratio}");
    assert_eq!(doc["config"]["mode"], "theorem");
}

#[test]
fn params_degenerate_dimension() {
    let o = ptfprg(&["params", "--n", "1", "--epsilon", "0.1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("\"n\": 1"));
}

#[test]
fn params_missing_epsilon_is_usage_error() {
    let o = ptfprg(&["params", "--n", "8"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--epsilon"));
}

#[test]
fn invalid_values_are_usage_errors() {
    assert_eq!(ptfprg(&["params", "--n", "8", "--epsilon", "0.7"]).status.code(), Some(2));
    assert_eq!(ptfprg(&["gen", "--epsilon", "0.1", "--delta", "0.2"]).status.code(), Some(2));
    assert_eq!(ptfprg(&["gen", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(ptfprg(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn gen_is_byte_identical_across_runs_and_formats() {
    for format in ["csv", "json", "binary"] {
        let args = ["gen", "--n", "5", "--count", "3", "--seed", "0", "--ell", "4", "--format", format];
        let a = ptfprg(&args);
        let b = ptfprg(&args);
        assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
        assert_eq!(a.stdout, b.stdout, "{format}");
        assert!(!a.stdout.is_empty());
    }
    let bin = ptfprg(&["gen", "--n", "5", "--count", "3", "--ell", "4", "--format", "binary"]);
    assert_eq!(bin.stdout.len(), 3 * 5 * 8);
}

#[test]
fn gen_csv_header_and_seed_dependence() {
    let o = ptfprg(&["gen", "--n", "4", "--count", "2", "--seed", "0", "--format", "csv"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines[0], "y1,y2,y3,y4");
    assert_eq!(lines.len(), 3);
    assert!(text.starts_with("# ptfprg "));
    assert!(text.contains("# config_sha256 "));
    let other = ptfprg(&["gen", "--n", "4", "--count", "2", "--seed", "1", "--format", "csv"]);
    assert_ne!(o.stdout, other.stdout);
}

#[test]
fn gen_thread_count_does_not_change_output() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_ptfprg"))
            .args(["gen", "--n", "4", "--count", "5", "--ell", "3"])
            .env("PTFPRG_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, run("4").stdout);
    assert_eq!(one.stdout, run("0").stdout);
    assert_eq!(run("many").status.code(), Some(2));
}

#[test]
fn truncated_seed_hex_names_family() {
    let o = ptfprg(&["gen", "--n", "4", "--ell", "3", "--seed-hex", "00ff00ff"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("seed underflow in family 0"), "{err}");
}

#[test]
fn full_seed_hex_produces_one_sample() {
    // n = 2, ell = 1: query the exact byte count via the JSON config
    let o = ptfprg(&["gen", "--n", "2", "--ell", "1", "--count", "1", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let bytes = doc["config"]["seed_layout"]["total_bytes"].as_u64().unwrap() as usize;
    let hex = "a5".repeat(bytes);
    let a = ptfprg(&["gen", "--n", "2", "--ell", "1", "--seed-hex", &hex]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, ptfprg(&["gen", "--n", "2", "--ell", "1", "--seed-hex", &hex]).stdout);
    let short = ptfprg(&["gen", "--n", "2", "--ell", "1", "--seed-hex", &hex[2..]]);
    assert_eq!(short.status.code(), Some(2));
}

#[test]
fn report_is_byte_identical_and_replayable() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    let saved = tmp.path().join("report.json");
    let base = ["report", "--suite", "standard", "--n", "4", "--ell", "3", "--trials", "2e3", "--seed", "9"];
    let run = |dir: &Path, extra: &[&str]| {
        let mut args: Vec<&str> = base.to_vec();
        args.extend(["--out-dir", dir.to_str().unwrap()]);
        args.extend(extra);
        ptfprg(&args)
    };
    let first = run(&a, &["--save-config", saved.to_str().unwrap()]);
    assert!(matches!(first.status.code(), Some(0 | 1)), "{}", stderr(&first));
    run(&b, &[]);
    let files_a = read_dir_sorted(&a);
    assert_eq!(files_a, read_dir_sorted(&b));
    let names: Vec<&str> = files_a.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["standard.json", "standard_discrepancy.csv"]);

    // replay from the saved config into a different directory
    let mut cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&saved).unwrap()).unwrap();
    cfg["out_dir"] = c.to_str().unwrap().into();
    std::fs::write(&saved, cfg.to_string()).unwrap();
    let replay = ptfprg(&["report", "--suite", "bounds", "--config", saved.to_str().unwrap()]);
    assert_eq!(replay.status.code(), first.status.code());
    assert_eq!(read_dir_sorted(&c), files_a);

    let csv = String::from_utf8(files_a[1].1.clone()).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 11);
}

#[test]
fn report_bounds_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let o = ptfprg(&["report", "--suite", "bounds", "--trials", "5000", "--out-dir", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let anti = std::fs::read_to_string(tmp.path().join("bounds_anticoncentration.csv")).unwrap();
    let conc = std::fs::read_to_string(tmp.path().join("bounds_concentration.csv")).unwrap();
    // 20 polynomials × 4 epsilons, 20 × 3 tail levels, plus the column line
    assert_eq!(anti.lines().filter(|l| !l.starts_with('#')).count(), 81);
    assert_eq!(conc.lines().filter(|l| !l.starts_with('#')).count(), 61);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("bounds.json")).unwrap()).unwrap();
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["generator"]["mode"], "empirical");
}

#[test]
fn report_unknown_suite_is_usage_error() {
    let o = ptfprg(&["report", "--suite", "everything"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown suite"));
}

#[test]
fn failed_verdict_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let saved = tmp.path().join("cfg.json");
    let out = tmp.path().join("out");
    ptfprg(&[
        "report", "--suite", "decomposition", "--trials", "20", "--out-dir", out.to_str().unwrap(),
        "--save-config", saved.to_str().unwrap(),
    ]);
    let mut cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&saved).unwrap()).unwrap();
    // an unattainable bound forces a failing verdict
    cfg["params"]["decomposition_bound"] = (-1.0).into();
    std::fs::write(&saved, cfg.to_string()).unwrap();
    let o = ptfprg(&["report", "--suite", "decomposition", "--config", saved.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stdout(&o).contains("decomposition: FAIL"));
}

#[test]
fn config_for_wrong_command_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let saved = tmp.path().join("gen.json");
    let o = ptfprg(&["gen", "--n", "2", "--ell", "1", "--save-config", saved.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = ptfprg(&["report", "--suite", "bounds", "--config", saved.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    // replaying the gen config reproduces the same bytes
    let replay = ptfprg(&["gen", "--config", saved.to_str().unwrap()]);
    assert_eq!(replay.stdout, o.stdout);
}
