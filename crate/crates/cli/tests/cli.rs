use std::fs;
use std::path::Path;

use sphfield_cli::{run, EXIT_OK, EXIT_RESOURCE, EXIT_USAGE, EXIT_VALIDATION};

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (i32, String) {
    let out = dir.join(name);
    let mut argv = vec!["sphfield".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    argv.push("--output".into());
    argv.push(out.display().to_string());
    let code = run(argv);
    (code, fs::read_to_string(&out).unwrap_or_default())
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn golden(name: &str) -> String {
    fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

#[test]
fn spectrum_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "s.csv", &["spectrum", "--alpha", "3", "--l-max", "5"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(text, golden("spectrum_alpha3.csv"));
}

#[test]
fn zeta_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "z.csv", &["special", "--check", "zeta", "--s", "2,3,4.5"]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(text, golden("special_zeta.csv"));
}

#[test]
fn column_layouts_are_frozen() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], &str); 7] = [
        (
            &["variogram", "--alpha", "3", "--theta-min", "1e-3", "--theta-max", "0.05", "--points", "8"],
            "theta,variogram,rho_sq,ratio,tail_bound",
        ),
        (
            &["slnd", "--alpha", "3", "--eps", "0.1", "--replicates", "2", "--seed", "1"],
            "epsilon,replicate,min_dist,var,ratio_c2,ratio_nd",
        ),
        (
            &["modulus", "--alpha", "3", "--l-max", "128", "--scales", "2-3", "--replicates", "2", "--seed", "1"],
            "scale,replicate,statistic,resolved_flag",
        ),
        (&["special", "--check", "sumpoly", "--s", "2", "--theta", "1e-3"], "s,theta,sum,diff,ratio"),
        (&["bump", "--eps", "0.3", "--l-max", "64", "--points", "5"], "theta,delta,tail_bound"),
        (
            &["synth", "--alpha", "3", "--l-max", "8", "--seed", "3", "--n-theta", "2", "--n-phi", "3"],
            "theta,phi,value",
        ),
        (&["spectrum", "--alpha", "2.5", "--l-max", "3"], "ell,c_ell"),
    ];
    for (i, (args, header)) in cases.iter().enumerate() {
        let (code, text) = run_to(dir.path(), &format!("{i}.csv"), args);
        assert_eq!(code, EXIT_OK, "{args:?}");
        assert_eq!(data_lines(&text)[0], *header, "{args:?}");
        assert!(text.starts_with("# sphfield "));
    }
}

#[test]
fn variogram_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(
        dir.path(),
        "v.csv",
        &["variogram", "--alpha", "3", "--theta-min", "1e-4", "--theta-max", "0.05", "--points", "64"],
    );
    assert_eq!(code, EXIT_OK);
    assert_eq!(data_lines(&text).len(), 65);
}

#[test]
fn sumpoly_even_ratio_near_two() {
    let dir = tempfile::tempdir().unwrap();
    let (_, text) = run_to(dir.path(), "p.csv", &["special", "--check", "sumpoly", "--s", "2", "--theta", "1e-3"]);
    let row = data_lines(&text)[1];
    let ratio: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((ratio - 2.0).abs() < 0.02);
}

#[test]
fn stochastic_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "slnd", "--alpha", "3", "--n", "4", "--geometry", "ring", "--eps", "0.1,0.05,0.025", "--replicates", "100",
        "--seed", "7",
    ];
    let (_, a) = run_to(dir.path(), "a.csv", &args);
    let (_, b) = run_to(dir.path(), "b.csv", &args);
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_eq!(data_lines(&a).len(), 301);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "# scan\nalpha = 3\nn = 2\ngeometry = adversarial\neps = 0.1\nreplicates = 2\nseed = 4\n").unwrap();
    let cfg = cfg.display().to_string();
    let (code, text) = run_to(dir.path(), "c.csv", &["--config", &cfg, "slnd", "--n", "3"]);
    assert_eq!(code, EXIT_OK);
    assert!(text.contains("# config.n: 3\n"));
    assert!(text.contains("# config.geometry: adversarial\n"));
    let (_, plain) = run_to(
        dir.path(),
        "d.csv",
        &["slnd", "--alpha", "3", "--n", "3", "--geometry", "adversarial", "--eps", "0.1", "--replicates", "2", "--seed", "4"],
    );
    assert_eq!(text, plain);
}

#[test]
fn json_output_is_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "j.json", &["--format", "json", "spectrum", "--alpha", "4", "--l-max", "3"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["subcommand"], "spectrum");
    assert_eq!(v["config"]["alpha"], "4");
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    // only this test touches the variable
    std::env::set_var(sphfield_cli::OUTPUT_DIR_ENV, dir.path());
    let code = run(["sphfield", "special", "--check", "zeta", "--s", "2"]);
    std::env::remove_var(sphfield_cli::OUTPUT_DIR_ENV);
    assert_eq!(code, EXIT_OK);
    assert!(fs::read_to_string(dir.path().join("special.csv")).unwrap().contains("s,zeta"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(["sphfield", "nosuch"]), EXIT_USAGE);
    assert_eq!(run(["sphfield", "slnd", "--alpha", "3", "--eps", "0.1"]), EXIT_USAGE);
    let (code, _) = run_to(dir.path(), "x.csv", &["slnd", "--alpha", "4.5", "--eps", "0.1", "--seed", "1"]);
    assert_eq!(code, EXIT_VALIDATION);
    let (code, _) = run_to(dir.path(), "x.csv", &["variogram", "--alpha", "1.5"]);
    assert_eq!(code, EXIT_VALIDATION);
    let (code, _) = run_to(dir.path(), "x.csv", &["special", "--check", "sumpoly"]);
    assert_eq!(code, EXIT_VALIDATION);
    let bad = dir.path().join("missing").join("out.csv").display().to_string();
    assert_eq!(run(["sphfield", "spectrum", "--alpha", "3", "--output", &bad]), EXIT_RESOURCE);
}
