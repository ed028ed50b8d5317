use std::process::{Command, Output};

fn cca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cca-transfer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn schedule_prints_symbolic_times() {
    let out = cca(&["schedule", "-N", "3", "-s", "1", "-r", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("gt1 = π/√2 = 2.2214414690791"), "{text}");
    assert!(text.contains("gt2 = π/√2"), "{text}");

    let text = stdout(&cca(&["schedule", "-N", "7", "-s", "3", "-r", "7"]));
    assert!(text.contains("gt1 = π = 3.14159265358979"), "{text}");
    assert!(text.contains("gt2 = 3π = 9.4247779607693"), "{text}");
}

#[test]
fn decoupled_site_fails_with_explanation() {
    let out = cca(&["schedule", "-N", "5", "-s", "2", "-r", "4"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("decoupled from mode q=3"), "{err}");
}

#[test]
fn even_chain_needs_explicit_mode() {
    assert!(!cca(&["schedule", "-N", "4", "-s", "1", "-r", "4"]).status.success());
    assert!(cca(&["schedule", "-N", "4", "-s", "1", "-r", "4", "-q", "1"]).status.success());
}

#[test]
fn lossless_run_is_perfect() {
    let out = cca(&["run", "--lossless", "-N", "7", "-s", "1", "-r", "7"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("F_avg=1.000 "), "{text}");
}

#[test]
fn run_writes_requested_format() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("run.json");
    let out = cca(&["run", "-N", "3", "-s", "1", "-r", "3", "--out", json.to_str().unwrap()]);
    assert!(out.status.success());
    let body = std::fs::read_to_string(&json).unwrap();
    assert!(body.contains("\"avg_fidelity\": 0.9868"), "{body}");

    let csv = dir.path().join("nested").join("run.csv");
    assert!(cca(&["run", "-N", "3", "-s", "1", "-r", "3", "--out", csv.to_str().unwrap()]).status.success());
    let f = column(&std::fs::read_to_string(&csv).unwrap(), "avg_fidelity");
    assert!((f[0] - 0.986).abs() < 0.005);
}

#[test]
fn delay_sweep_column_is_monotone() {
    let out = cca(&["sweep", "--preset", "fig4", "-N", "5", "--no-timing"]);
    assert!(out.status.success());
    let f = column(&stdout(&out), "avg_fidelity");
    assert_eq!(f.len(), 81);
    assert!(f.windows(2).all(|w| w[1] <= w[0]));
    // summary goes to stderr when the data goes to stdout
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig4: 81 points"));
}

#[test]
fn length_sweep_starts_near_reference_value() {
    let out = cca(&["sweep", "--preset", "fig2-current", "--no-timing"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let n = column(&text, "n_cavities");
    let f = column(&text, "avg_fidelity");
    assert_eq!(n[0], 3.0);
    assert!((f[0] - 0.986).abs() < 0.005);
}

#[test]
fn pair_sweep_output_is_repeatable() {
    let a = cca(&["sweep", "--preset", "table2", "--no-timing", "--workers", "1"]);
    let b = cca(&["sweep", "--preset", "table2", "--no-timing", "--workers", "4"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("# format_version: 1"));
    assert_eq!(column(&text, "avg_fidelity").len(), 10);
}

#[test]
fn presets_are_listed() {
    let list = stdout(&cca(&["sweep", "--list-presets"]));
    for name in ["table1", "table2", "fig2-current", "fig2-projected", "fig3", "fig4"] {
        assert!(list.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
    assert_eq!(list, stdout(&cca(&["presets"])));
}

#[test]
fn threshold_command_reports_largest_n() {
    let out = cca(&["threshold", "--params", "current"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("largest N = 51"), "{}", stdout(&out));
}

#[test]
fn config_dump_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    let dumped = cca(&["run", "-N", "9", "-s", "3", "-r", "7", "--delay", "1.25", "--dt1", "-0.02", "--measure", "--dump-config"]);
    assert!(dumped.status.success());
    std::fs::write(&path, &dumped.stdout).unwrap();
    let again = cca(&["run", "--config", path.to_str().unwrap(), "--dump-config"]);
    assert!(again.status.success());
    assert_eq!(dumped.stdout, again.stdout);

    std::fs::write(&path, "n_cavities = 5\nwarp_factor = 9\n").unwrap();
    let bad = cca(&["run", "--config", path.to_str().unwrap()]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("warp_factor"));
}

#[test]
fn invalid_inputs_exit_nonzero() {
    assert!(!cca(&["run", "-N", "5", "-s", "1", "-r", "9"]).status.success());
    assert!(!cca(&["run", "-N", "5", "-s", "1", "-r", "5", "--dt1", "1.5"]).status.success());
    assert!(!cca(&["sweep"]).status.success());
}
