use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

fn gasnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gasnet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(sub: &str, network: &Path, scenario: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        sub,
        "--network",
        network.to_str().unwrap(),
        "--scenario",
        scenario.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    gasnet(&args)
}

fn kv(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .to_string()
}

/// Scenario text with `mu` replaced and a shorter horizon.
fn variant(base: &str, mu: &str, horizon: f64) -> String {
    fs::read_to_string(data(base))
        .unwrap()
        .lines()
        .map(|l| {
            if l.starts_with("mu = ") {
                format!("mu = {mu}")
            } else if l.starts_with("horizon = ") {
                format!("horizon = {horizon}")
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn observe_frictionless_syncs_in_finite_time() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(
        "observe",
        &data("gaslib40_like.net"),
        &data("scenarios/step_frictionless.scn"),
        &out,
        &[],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let rates = fs::read_to_string(out.join("rates.txt")).unwrap();
    assert_eq!(kv(&rates, "finite_time_sync"), "yes");
    let sync: f64 = kv(&rates, "sync_time").parse().unwrap();
    assert!((sync - 86_690.0 / 340.0).abs() < 0.05 * 86_690.0 / 340.0);

    let l0 = fs::read_to_string(out.join("l0.csv")).unwrap();
    assert!(l0.starts_with("t,l0\n"));
    let last = l0.lines().last().unwrap();
    assert!(last.ends_with(",0"), "{last}");

    for name in [
        "l1.csv",
        "residuals.csv",
        "snapshots/t_0.csv",
        "snapshots/t_90.csv",
        "snapshots/t_180.csv",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let snap = fs::read_to_string(out.join("snapshots/t_0.csv")).unwrap();
    assert!(snap.starts_with("pipe,x,delta_plus,delta_minus\n"));
    let residuals = fs::read_to_string(out.join("residuals.csv")).unwrap();
    let worst = residuals
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0f64, f64::max);
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.scn");
    fs::write(
        &scenario,
        variant("scenarios/sine_friction.scn", "0.5", 120.0),
    )
    .unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(
        run("observe", &data("gaslib40_like.net"), &scenario, &a, &[])
            .status
            .success()
    );
    assert!(run(
        "observe",
        &data("gaslib40_like.net"),
        &scenario,
        &b,
        &["--sequential"]
    )
    .status
    .success());
    for name in [
        "l0.csv",
        "l1.csv",
        "residuals.csv",
        "rates.txt",
        "snapshots/t_90.csv",
    ] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn certify_without_injection() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.scn");
    fs::write(&scenario, variant("scenarios/step_friction.scn", "1", 60.0)).unwrap();
    let out = dir.path().join("cert");
    let o = run("certify", &data("gaslib40_like.net"), &scenario, &out, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cert = fs::read_to_string(out.join("certificate.txt")).unwrap();
    assert_eq!(kv(&cert, "upsilon0"), "0");
    assert_eq!(kv(&cert, "l0_window_factor"), "1");
    assert_eq!(kv(&cert, "decay_eligible"), "false");
    for key in [
        "c0",
        "c1",
        "l_kontr",
        "epsilon",
        "gronwall_factor",
        "delta_nu_t0",
        "h1_lhs",
        "h1_rhs",
        "h1_holds",
        "m_tilde",
        "b_tilde",
    ] {
        kv(&cert, key);
    }
    assert!(cert.contains("not_computed = "));
}

#[test]
fn simulate_and_snapshot_from_xml() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.scn");
    fs::write(
        &scenario,
        variant("scenarios/step_friction.scn", "0", 100.0),
    )
    .unwrap();
    let sim = dir.path().join("sim");
    let o = run("simulate", &data("gaslib40_like.xml"), &scenario, &sim, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let pressures = fs::read_to_string(sim.join("pressures.csv")).unwrap();
    assert!(pressures.starts_with("t,node,pressure_bar\n"));
    for l in pressures.lines().skip(1) {
        let p: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(p > 55.0 && p < 65.0, "{l}");
    }
    let snap = dir.path().join("snap");
    assert!(run(
        "snapshot",
        &data("gaslib40_like.xml"),
        &scenario,
        &snap,
        &[]
    )
    .status
    .success());
    assert!(snap.join("snapshots/t_90.csv").exists());
    assert!(!snap.join("l0.csv").exists());
}

#[test]
fn missing_network_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.net");
    let o = run(
        "observe",
        &missing,
        &data("scenarios/step_friction.scn"),
        &dir.path().join("o"),
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("nope.net"), "{err}");
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.scn");
    fs::write(&scenario, "mu = 2\n").unwrap();
    let o = run(
        "observe",
        &data("gaslib40_like.net"),
        &scenario,
        &dir.path().join("o"),
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu"));

    assert_eq!(gasnet(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(gasnet(&["--help"]).status.code(), Some(0));
}

#[test]
fn domain_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.scn");
    // A boundary pressure of zero has no density.
    fs::write(&scenario, "horizon = 10\nschedule.default = 0:0:0\n").unwrap();
    let o = run(
        "simulate",
        &data("gaslib40_like.net"),
        &scenario,
        &dir.path().join("o"),
        &[],
    );
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
