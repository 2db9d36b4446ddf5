use std::path::Path;
use std::process::{Command, Output};

use nfp_assoc::instance::InstanceFile;

fn nfp_assoc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nfp-assoc"))
        .args(args)
        .current_dir(dir)
        .env_remove("NFP_ASSOC_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn version() {
    let dir = tempfile::tempdir().unwrap();
    let o = nfp_assoc(&["version"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("nfp-assoc "));
}

#[test]
fn generate_defaults_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let o = nfp_assoc(&["generate", "--seed", "11", "--out", "a.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("N_SC = 30"));
    assert!(text.contains("N_D = 3"));
    nfp_assoc(&["generate", "--seed", "11", "--out", "b.json"], dir.path());
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn negative_area_rejected_before_generation() {
    let dir = tempfile::tempdir().unwrap();
    let o = nfp_assoc(&["generate", "--area-side", "-1", "--out", "s.json"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("area_side"));
    assert!(!dir.path().join("s.json").exists());
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), r#"{"limits": {"backhaul": 1}}"#).unwrap();
    let o = nfp_assoc(&["generate", "--config", "c.json"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("backhaul"));
}

#[test]
fn committed_fixture_matches_library() {
    let file = InstanceFile::load(data("backhaul_limited.json")).unwrap();
    assert_eq!(file, nfp_assoc::fixtures::backhaul_limited_file());
}

#[test]
fn solve_backhaul_limited_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let inst = data("backhaul_limited.json");
    let o = nfp_assoc(
        &["solve", "--instance", &inst, "--solver", "all", "--out", "a.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("exact: 28/30 associated (optimal)"), "{text}");
    assert!(text.contains("cmca: 27/30"), "{text}");
    assert!(text.contains("dmca: 27/30"), "{text}");
    for kind in ["cmca", "dmca", "exact"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("a_{kind}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 31);
    }
}

#[test]
fn solve_without_eligible_links() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("i.json"),
        r#"{"sc_rates": [3e7, 6e7], "sinr": [[0.01, 0.02], [0.03, 0.01]]}"#,
    )
    .unwrap();
    let o = nfp_assoc(
        &["solve", "--instance", "i.json", "--solver", "cmca", "--out", "a.csv"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("cmca: 0/2 associated"));
    let csv = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(csv, "sc,nfp0,nfp1\n0,0,0\n1,0,0\n");
}

#[test]
fn rate_sweep_schema_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "sweep",
            "--kind",
            "rate",
            "--scenarios",
            "4",
            "--grid",
            "0.2,0.6,1.0",
            "--out",
            out,
        ]
    };
    let o = nfp_assoc(&args("a.csv"), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines[0], "kind,ratio,solver,mean_pct_unassoc,stderr,n_scenarios");
    assert_eq!(lines.len(), 1 + 3 * 3);

    let o = Command::new(env!("CARGO_BIN_EXE_nfp-assoc"))
        .args(args("b.csv"))
        .current_dir(dir.path())
        .env("NFP_ASSOC_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(a, std::fs::read_to_string(dir.path().join("b.csv")).unwrap());
}

#[test]
fn sweep_from_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("spec.json"),
        r#"{"kind": "bandwidth_ratio", "ratio_grid": [0.5, 1.5], "n_scenarios": 3, "solvers": ["exact"]}"#,
    )
    .unwrap();
    let o = nfp_assoc(&["sweep", "--spec", "spec.json", "--out", "bw.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("bw.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("bandwidth_ratio,0.5,exact,"));
}

#[test]
fn timing_sweep_schema() {
    let dir = tempfile::tempdir().unwrap();
    let o = nfp_assoc(
        &[
            "sweep",
            "--kind",
            "timing",
            "--scenarios",
            "2",
            "--reps",
            "3",
            "--out",
            "t.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert!(csv.starts_with("solver,scenario_seed,median_ms,reps\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
}

#[test]
fn failing_seeds_give_nonzero_exit() {
    // Eight cells 3 km apart cannot fit in a 4 km square.
    let dir = tempfile::tempdir().unwrap();
    let o = nfp_assoc(
        &[
            "sweep",
            "--kind",
            "rate",
            "--scenarios",
            "2",
            "--n-sc",
            "8",
            "--sc-min-sep",
            "3000",
            "--out",
            "f.csv",
        ],
        dir.path(),
    );
    assert!(!o.status.success());
    assert!(dir.path().join("f.csv").exists());
}

#[test]
fn help_lists_every_override() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&nfp_assoc(&["solve", "--help"], dir.path()));
    for flag in [
        "--config",
        "--seed",
        "--solver",
        "--weights",
        "--out",
        "--variant",
        "--step2",
        "--node-budget",
        "--alpha",
        "--beta",
        "--eta-los",
        "--eta-nlos",
        "--carrier-freq",
        "--pl-exponent",
        "--tx-power",
        "--noise-floor",
        "--area-side",
        "--n-sc",
        "--n-d",
        "--density",
        "--nfp-density",
        "--sc-min-sep",
        "--nfp-min-sep",
        "--nfp-height",
        "--rate-choices",
        "--pl-max",
        "--max-attempts",
        "--backhaul-rate",
        "--nfp-bandwidth",
        "--max-links",
        "--sinr-min-db",
        "--threads",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
    let sweep = stdout(&nfp_assoc(&["sweep", "--help"], dir.path()));
    for flag in ["--spec", "--kind", "--scenarios", "--grid", "--reps"] {
        assert!(sweep.contains(flag), "missing {flag}");
    }
}
