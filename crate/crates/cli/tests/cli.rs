use std::path::Path;
use std::process::{Command, Output};

use stokes_core::domain::{flat_water_state, AmplitudeTarget, SolverState, WaveParameters};

fn stokes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stokes"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn solve_flat_config_gives_flat_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("s.json");
    write(
        &cfg,
        r#"{"d": 1.0, "target": {"kind": "height", "value": 0.0}, "N": 16}"#,
    );
    let o = stokes(&["solve", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let params = WaveParameters::new(1.0, AmplitudeTarget::Height(0.0)).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text, flat_water_state(&params, 16).to_json());
    assert!(dir.path().join("s.json.log.jsonl").exists());
}

#[test]
fn malformed_config_exits_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("s.json");
    write(&cfg, r#"{"d": 1.0, "target": "#);
    let o = stokes(&["solve", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert!(!out.exists());
}

#[test]
fn fields_of_flat_state_on_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let out = dir.path().join("f.csv");
    let params = WaveParameters::new(1.0, AmplitudeTarget::Height(0.0)).unwrap();
    write(&state, &flat_water_state(&params, 8).to_json());
    let o = stokes(&[
        "fields",
        "--state",
        p(&state),
        "--grid",
        "8x4",
        "--out",
        p(&out),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    let (iu, iv) = (
        header.iter().position(|h| *h == "u").unwrap(),
        header.iter().position(|h| *h == "v").unwrap(),
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 9 * 5);
    for r in &rows {
        assert!(r[iu].abs() < 1e-15, "u = {}", r[iu]);
        assert_eq!(r[iv], 0.0);
    }
}

#[test]
fn fields_missing_state_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let o = stokes(&[
        "fields",
        "--state",
        p(&dir.path().join("nope.json")),
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn fields_dump_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let state = dir.path().join("s.json");
    write(
        &cfg,
        r#"{"d": 1.0, "target": {"kind": "height", "value": 0.2}, "N": 32}"#,
    );
    assert_eq!(
        stokes(&["solve", "--config", p(&cfg), "--out", p(&state)])
            .status
            .code(),
        Some(0)
    );
    let before = std::fs::read(&state).unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        assert_eq!(
            stokes(&["fields", "--state", p(&state), "--out", p(out)])
                .status
                .code(),
            Some(0)
        );
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(&state).unwrap(), before);
}

#[test]
fn verify_flat_passes_and_tampered_fails() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let report = dir.path().join("r.json");
    let params = WaveParameters::new(1.0, AmplitudeTarget::Height(0.0)).unwrap();
    write(&state, &flat_water_state(&params, 16).to_json());
    let o = stokes(&["verify", "--state", p(&state), "--out", p(&report)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["overall_pass"], true);

    let cfg = dir.path().join("c.json");
    write(
        &cfg,
        r#"{"d": 1.0, "target": {"kind": "height", "value": 0.15}, "N": 32}"#,
    );
    assert_eq!(
        stokes(&["solve", "--config", p(&cfg), "--out", p(&state)])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        stokes(&[
            "verify",
            "--state",
            p(&state),
            "--config",
            p(&cfg),
            "--out",
            p(&report)
        ])
        .status
        .code(),
        Some(0)
    );
    let mut st = SolverState::from_json(&std::fs::read_to_string(&state).unwrap()).unwrap();
    st.b[2] += 1e-2;
    write(&state, &st.to_json());
    let o = stokes(&[
        "verify",
        "--state",
        p(&state),
        "--config",
        p(&cfg),
        "--out",
        p(&report),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["overall_pass"], false);
}

#[test]
fn verify_rejects_small_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("s.json");
    let report = dir.path().join("r.json");
    let params = WaveParameters::new(1.0, AmplitudeTarget::Height(0.0)).unwrap();
    write(&state, &flat_water_state(&params, 16).to_json());
    let o = stokes(&[
        "verify",
        "--state",
        p(&state),
        "--epsilon",
        "1e-6",
        "--out",
        p(&report),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn sweep_writes_reports_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("family");
    write(
        &cfg,
        r#"{"d": 1.0, "target": {"kind": "crest_speed_ratio", "value": 0.6}, "N": 32,
            "refinement": {"max_modes": 64, "unresolved_tail": 1.0},
            "schedule": [{"kind": "crest_speed_ratio", "value": 0.9},
                         {"kind": "crest_speed_ratio", "value": 0.8},
                         {"kind": "crest_speed_ratio", "value": 0.7},
                         {"kind": "crest_speed_ratio", "value": 0.6}]}"#,
    );
    let o = stokes(&["sweep", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for i in 0..4 {
        assert!(out.join(format!("member_{i:03}.report.json")).exists());
        assert!(out.join(format!("member_{i:03}.state.json")).exists());
    }
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "s,c,H,crest_angle,worst_px_margin,worst_py_margin"
    );
    let angles: Vec<f64> = lines
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert_eq!(angles.len(), 4);
    assert!(angles.windows(2).all(|w| w[1] < w[0]), "{angles:?}");
}

#[test]
fn sweep_of_empty_family_is_flat_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("family");
    write(
        &cfg,
        r#"{"d": 1.0, "target": {"kind": "height", "value": 0.3}, "N": 16, "schedule": []}"#,
    );
    let o = stokes(&["sweep", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows: Vec<_> = summary.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let cols: Vec<f64> = rows[0].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(cols[0], 1.0);
    assert_eq!(cols[2], 0.0);
    assert_eq!(cols[3], 180.0);
}

#[test]
fn non_convergence_exits_2_with_last_good_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    let out = dir.path().join("s.json");
    write(
        &cfg,
        r#"{"d": 1.0, "target": {"kind": "crest_speed_ratio", "value": 0.05}, "N": 16,
            "refinement": {"max_modes": 16}, "max_newton_iters": 8}"#,
    );
    let o = stokes(&["solve", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(
        o.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let st = SolverState::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(st.modes(), 16);
    assert!(st.validate().is_ok());
}
