use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
[instance]
a = 1.0
b = 2.0
eta_plus = 0.5
eta_minus = 0.5
p_max = 1.3333333333333333

[noise]
kind = "bounded_uniform"
half_width = 0.1

[policy]
kind = "learn_then_earn"

[run]
horizon = 2000
horizons = [500, 5000]
seeds = 3
base_seed = 4
"#;

fn setup() -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, CONFIG).unwrap();
    let cfg = cfg.to_str().unwrap().to_string();
    (dir, cfg)
}

fn refprice(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_refprice"));
    cmd.args(args).env_remove("REFPRICE_SEED");
    if let Some(s) = seed {
        cmd.env("REFPRICE_SEED", s);
    }
    cmd.output().unwrap()
}

fn out_arg(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_rows_for_every_round() {
    let (dir, cfg) = setup();
    let out = out_arg(dir.path(), "sim");
    let o = refprice(&["simulate", "--config", &cfg, "--out", &out, "--threads", "2"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(dir.path().join("sim/episodes.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 2000);
    let summary = std::fs::read_to_string(dir.path().join("sim/summary.csv")).unwrap();
    let seeds: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(seeds, ["4", "5", "6"]);
}

#[test]
fn solve_writes_a_markdown_curve() {
    let (dir, cfg) = setup();
    let out = out_arg(dir.path(), "curve");
    let o = refprice(
        &[
            "solve",
            "--config",
            &cfg,
            "--out",
            &out,
            "policy.kind=markdown_oracle",
            "run.horizon=50",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("curve/curve.csv")).unwrap();
    let prices: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(prices.len(), 50);
    assert!(prices.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn seed_precedence_env_then_override() {
    let (dir, cfg) = setup();
    let read = |name: &str| std::fs::read_to_string(dir.path().join(name).join("regret.csv")).unwrap();
    let a = out_arg(dir.path(), "a");
    let b = out_arg(dir.path(), "b");
    assert_eq!(
        refprice(&["sweep", "--config", &cfg, "--out", &a], Some("99"))
            .status
            .code(),
        Some(0)
    );
    assert!(read("a").ends_with("# base_seed,99\n"));
    assert_eq!(
        refprice(&["sweep", "--config", &cfg, "--out", &b, "run.base_seed=3"], Some("99"))
            .status
            .code(),
        Some(0)
    );
    assert!(read("b").ends_with("# base_seed,3\n"));
}

#[test]
fn usage_and_config_errors_exit_2_without_output() {
    let (dir, cfg) = setup();
    let out = out_arg(dir.path(), "never");
    let cases: Vec<Vec<&str>> = vec![
        vec!["sweep", "--out", &out],
        vec!["bogus", "--config", &cfg],
        vec!["sweep", "--config", "/nonexistent.toml", "--out", &out],
        vec!["sweep", "--config", &cfg, "--out", &out, "run.horizons=[]"],
        vec!["simulate", "--config", &cfg, "--out", &out, "instance.a=-1"],
        vec!["simulate", "--config", &cfg, "--out", &out, "run.unknown=1"],
        vec!["simulate", "--config", &cfg, "--out", &out, "policy.ra=5.0"],
        vec!["simulate", "--config", &cfg, "--out", &out, "--threads", "0"],
        vec!["simulate", "--config", &cfg, "--out", &out, "noseparator"],
    ];
    for args in cases {
        let o = refprice(&args, None);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    assert_eq!(
        refprice(&["simulate", "--config", &cfg, "--out", &out], Some("x"))
            .status
            .code(),
        Some(2)
    );
    assert!(!dir.path().join("never").exists());
}

#[test]
fn validate_reports_every_suite() {
    let (_dir, cfg) = setup();
    let o = refprice(&["validate", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 7, "{text}");
}

#[test]
fn help_exits_0() {
    let o = refprice(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("sweep"));
}
