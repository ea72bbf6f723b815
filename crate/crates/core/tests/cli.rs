use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("config").join(name)
}

fn panel_ecm(cfg: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_panel-ecm"))
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .args(args)
        .env_remove("PANEL_ECM_SCENARIO")
        .env_remove("PANEL_ECM_SEED")
        .output()
        .unwrap()
}

fn ok(cfg: &Path, out: &Path, args: &[&str]) -> String {
    let o = panel_ecm(cfg, out, args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut rows = vec![r.headers().unwrap().iter().map(String::from).collect()];
    rows.extend(r.records().map(|x| x.unwrap().iter().map(String::from).collect()));
    rows
}

fn cell(rows: &[Vec<String>], row: &str, col: &str) -> String {
    let j = rows[0].iter().position(|h| h == col).unwrap();
    rows.iter().find(|r| r[0] == row).unwrap()[j].clone()
}

#[test]
fn estimate_writes_six_columns_with_a_wald_row() {
    let dir = tempfile::tempdir().unwrap();
    ok(&config("synthetic.toml"), dir.path(), &["estimate"]);
    let t = csv_rows(&dir.path().join("estimate/table3.csv"));
    assert_eq!(t[0].len(), 7);
    for c in ["(3) OLS", "(4) OLS", "(5) GLS", "(6) GLS"] {
        assert!(!cell(&t, "wald", c).is_empty(), "{c}");
        assert_eq!(cell(&t, "wald_dof", c), "17");
    }
    assert!(cell(&t, "wald", "(1) OLS").is_empty());
    assert_eq!(cell(&t, "sample", "(6) GLS"), "2008-2018");
    assert_eq!(cell(&t, "estimator", "(5) GLS"), "fgls");
    assert!(dir.path().join("estimate/growth_active.json").is_file());
    let cointegration = csv_rows(&dir.path().join("estimate/cointegration.csv"));
    assert!(cointegration.iter().any(|r| r[0] == "standardized_statistic"));
}

#[test]
fn estimate_without_longrun_skips_ec_columns_with_notice() {
    let dir = tempfile::tempdir().unwrap();
    let o = panel_ecm(&config("no_longrun.toml"), dir.path(), &["estimate"]);
    assert!(o.status.success());
    let t = csv_rows(&dir.path().join("estimate/table3.csv"));
    assert_eq!(t[0], ["row", "(1) OLS", "(2) OLS", "(3) OLS"]);
    assert!(!t.iter().any(|r| r[0] == "ec_l3"));
    let notes = fs::read_to_string(dir.path().join("estimate/notices.txt")).unwrap();
    assert!(notes.contains("(4) OLS") && notes.contains("(5) GLS"), "{notes}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("notice:"));
}

#[test]
fn scenario_factor_inputs_and_r_grid_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("synthetic.toml");
    ok(&cfg, dir.path(), &["estimate"]);
    ok(&cfg, dir.path(), &["forecast"]);
    let input = |s: &str| {
        cell(
            &csv_rows(&dir.path().join(format!("forecast/{s}/scenario.csv"))),
            "2021",
            "factor_input",
        )
    };
    assert_eq!(input("baseline"), "1.8");
    assert_eq!(input("conservative"), "0.9");

    ok(&cfg, dir.path(), &["decompose"]);
    let mut grid: Vec<String> = fs::read_dir(dir.path().join("decompose"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("r_grid_") && n.ends_with(".csv"))
        .collect();
    grid.sort();
    assert_eq!(grid, ["r_grid_0.6.csv", "r_grid_0.7.csv", "r_grid_0.8.csv"]);

    ok(&cfg, dir.path(), &["report"]);
    let t = csv_rows(&dir.path().join("report/table5.csv"));
    assert_eq!(t.len(), 5);
    assert!(t[4][0].contains("r=0.7"));
}

#[test]
fn single_scenario_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("synthetic.toml");
    ok(&cfg, dir.path(), &["estimate"]);
    ok(&cfg, dir.path(), &["forecast", "--scenario", "conservative"]);
    assert!(dir.path().join("forecast/conservative/forecast.csv").is_file());
    assert!(!dir.path().join("forecast/baseline").exists());
    let o = panel_ecm(&cfg, dir.path(), &["forecast", "--scenario", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn decompose_before_forecast_is_a_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("synthetic.toml");
    ok(&cfg, dir.path(), &["estimate"]);
    let o = panel_ecm(&cfg, dir.path(), &["decompose", "--scenario", "baseline"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[missing-artifact]"));
}

#[test]
fn simulate_with_zero_reps_is_a_dry_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let stdout = ok(&config("synthetic.toml"), &out, &["simulate", "--reps", "0"]);
    assert!(stdout.contains("dry run"));
    assert!(!out.join("simulate").exists());
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(config("synthetic.toml"))
        .unwrap()
        .replace("../data/", &format!("{}/data/", env!("CARGO_MANIFEST_DIR")))
        .replace("returns_discount = 0.7", "returns_discount = 1.7");
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, text).unwrap();
    let o = panel_ecm(&cfg, &dir.path().join("o"), &["ingest"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("scenarios.returns_discount"), "{err}");

    fs::write(&cfg, "schema_version = 1\n[data]\npanel = 3\n").unwrap();
    let o = panel_ecm(&cfg, &dir.path().join("o"), &["ingest"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("data.panel"));
}

#[test]
fn locked_output_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(".panel-ecm.lock"), "").unwrap();
    let o = panel_ecm(&config("synthetic.toml"), dir.path(), &["ingest"]);
    assert!(!o.status.success());
    assert!(!dir.path().join("ingest").exists());
}

#[test]
fn generate_then_ingest_round_trips_the_panel() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_panel-ecm"))
        .args(["generate", "--seed", "2021", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    for f in ["panel.csv", "bf_funding.csv", "national_gdp_growth.csv"] {
        assert_eq!(
            fs::read(dir.path().join(f)).unwrap(),
            fs::read(bundled.join(f)).unwrap(),
            "{f}"
        );
    }
}
