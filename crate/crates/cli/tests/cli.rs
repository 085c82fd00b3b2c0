//! End-to-end checks of the `clexsim` binary: exit codes, printed tables,
//! emitted files, determinism, and the error paths a user actually hits.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn clexsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clexsim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn clexsim")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    name.to_string()
}

const SMALL_CLEX: &str = r#"
[topology]
kind = "clex"
base = 8
levels = 3

[traffic]
per_node = 7
seed = 42
"#;

#[test]
fn run_prints_one_row_per_level_and_writes_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "exp.toml", SMALL_CLEX);
    let out = clexsim(tmp.path(), &["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));

    let text = stdout(&out);
    let data_rows: Vec<&str> =
        text.lines().filter(|l| l.trim_start().starts_with(['1', '2', '3'])).collect();
    assert_eq!(data_rows.len(), 3, "expected 3 level rows in:\n{text}");
    assert!(text.contains("injected 3584  delivered 3584"), "{text}");

    let csv = fs::read_to_string(tmp.path().join("out/report.csv")).unwrap();
    assert!(csv.starts_with("level,max_rounds,avg_rounds,max_avg_load,avg_hops\n"), "{csv}");
    assert_eq!(csv.lines().count(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(json["config"]["traffic"]["seed"], 42);
    assert_eq!(json["report"]["n"], 512);
}

#[test]
fn identical_seeds_give_byte_identical_files() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    for tmp in [&a, &b] {
        let cfg = write_config(tmp.path(), "exp.toml", SMALL_CLEX);
        let out = clexsim(tmp.path(), &["run", "--config", &cfg]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    for file in ["out/report.csv", "out/report.json"] {
        assert_eq!(
            fs::read(a.path().join(file)).unwrap(),
            fs::read(b.path().join(file)).unwrap(),
            "{file} differs between identical runs"
        );
    }
}

#[test]
fn scaled_dense_preset_keeps_upper_levels_exact() {
    let tmp = TempDir::new().unwrap();
    let out = clexsim(tmp.path(), &["run", "--table", "2", "--scale", "0.5"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv = fs::read_to_string(tmp.path().join("out/report.csv")).unwrap();
    let cell = |level: usize, col: usize| {
        csv.lines().nth(level).unwrap().split(',').nth(col).unwrap().to_string()
    };
    assert_eq!(cell(2, 4), "2.00", "level-2 avg hops in:\n{csv}");
    assert_eq!(cell(3, 4), "1.00", "level-3 avg hops in:\n{csv}");
    assert_eq!(cell(2, 1), "2");
    assert_eq!(cell(3, 1), "2");
}

#[test]
fn torus_all_to_all_reports_sweep_hops() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "torus.toml",
        "[topology]\nkind = \"torus\"\nk1 = 4\nk2 = 4\nk3 = 4\n\n[traffic]\npattern = \"all_to_all\"\n",
    );
    let out = clexsim(tmp.path(), &["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("avg hops         : 6.00"), "{text}");
    assert!(text.contains("total traversals : 4032"), "{text}");
}

#[test]
fn plot_flag_writes_the_decay_svg() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "exp.toml", SMALL_CLEX);
    let out = clexsim(tmp.path(), &["run", "--config", &cfg, "--plot"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = fs::read_to_string(tmp.path().join("out/decay.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

fn reference_report(base: u64, levels: u64, n: u64, rows: &[(u64, u64, f64, f64, f64)]) -> String {
    let metrics: Vec<serde_json::Value> = rows
        .iter()
        .map(|&(level, max_rounds, avg_rounds, max_avg_load, avg_hops)| {
            serde_json::json!({
                "level": level,
                "max_rounds": max_rounds,
                "avg_rounds": avg_rounds,
                "max_avg_load": max_avg_load,
                "avg_hops": avg_hops,
            })
        })
        .collect();
    serde_json::json!({
        "kind": "clex_point_to_point",
        "base": base,
        "levels": levels,
        "n": n,
        "level_metrics": metrics,
    })
    .to_string()
}

#[test]
fn compare_consumes_reports_produced_by_run() {
    let tmp = TempDir::new().unwrap();
    let out = clexsim(tmp.path(), &["run", "--table", "2", "--scale", "0.25"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = clexsim(tmp.path(), &["compare", "out/report.json", "4096"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for key in ["bandwidth_gain", "hop_ratio", "propagation_ratio"] {
        assert!(ratio_line(&text, key).is_finite(), "{text}");
    }
}

fn ratio_line(text: &str, key: &str) -> f64 {
    text.lines()
        .find(|l| l.starts_with(key))
        .unwrap_or_else(|| panic!("no {key} line in:\n{text}"))
        .split('=')
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn compare_reproduces_reference_ratios() {
    let tmp = TempDir::new().unwrap();
    let dense = tmp.path().join("dense.json");
    fs::write(
        &dense,
        reference_report(
            64,
            3,
            262144,
            &[(1, 9, 6.90, 62.06, 5.34), (2, 2, 2.03, 57.30, 2.0), (3, 2, 1.01, 57.0, 1.0)],
        ),
    )
    .unwrap();
    let out = clexsim(tmp.path(), &["compare", "dense.json", "262144"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!((ratio_line(&text, "bandwidth_gain") - 11.5).abs() <= 0.1, "{text}");
    assert!((ratio_line(&text, "hop_ratio") - 9.7).abs() <= 0.1, "{text}");
    assert!((ratio_line(&text, "propagation_ratio") - 2.0).abs() <= 0.1, "{text}");

    let light = tmp.path().join("light.json");
    fs::write(
        &light,
        reference_report(
            32,
            4,
            1048576,
            &[
                (1, 5, 9.02, 9.02, 10.53),
                (2, 1, 4.0, 7.32, 4.0),
                (3, 1, 2.0, 4.02, 2.0),
                (4, 1, 1.0, 4.0, 1.0),
            ],
        ),
    )
    .unwrap();
    let out = clexsim(tmp.path(), &["compare", "light.json", "1048576"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!((ratio_line(&stdout(&out), "hop_ratio") - 9.5).abs() <= 0.1, "{}", stdout(&out));
}

#[test]
fn compare_rejects_empty_and_mismatched_reports() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty.json");
    fs::write(&empty, reference_report(64, 3, 262144, &[])).unwrap();
    let out = clexsim(tmp.path(), &["compare", "empty.json", "262144"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("no per-level metrics"), "{}", stderr(&out));

    let dense = tmp.path().join("dense.json");
    fs::write(&dense, reference_report(64, 3, 262144, &[(1, 9, 6.90, 62.06, 5.34)])).unwrap();
    let out = clexsim(tmp.path(), &["compare", "dense.json", "4096"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("does not match"), "{}", stderr(&out));
}

#[test]
fn invalid_configs_fail_with_line_anchored_diagnostics() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        "[topology]\nkind = \"clex\"\nbase = 1\nlevels = 3\n\n[traffic]\nper_node = 1\n",
    );
    let out = clexsim(tmp.path(), &["run", "--config", &cfg]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("bad.toml:3"), "{err}");
    assert!(err.contains("base must be ≥ 2"), "{err}");

    let cfg = write_config(tmp.path(), "broken.toml", "[topology\nkind = \"clex\"\n");
    let out = clexsim(tmp.path(), &["run", "--config", &cfg]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn infeasible_runs_are_refused_before_allocation() {
    let tmp = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_clexsim"))
        .current_dir(tmp.path())
        .env("CLEXSIM_MEM_BUDGET_MB", "32")
        .args(["run", "--table", "2"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("exceeds") && err.contains("32 MiB"), "{err}");
    assert!(!tmp.path().join("out").exists(), "no output dir for a refused run");
}
