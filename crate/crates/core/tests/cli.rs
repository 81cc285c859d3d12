use std::path::Path;
use std::process::{Command, Output};

use imfsi::oracle::{j2_uniaxial, sod};
use imfsi::scenario::{Level, ScenarioConfig, ScenarioKind};

fn imfsi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_imfsi")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn sod_oracle_prints_the_exact_profile() {
    let o = imfsi(&["oracle", "sod", "--points", "11"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("x,rho,u,p"));
    let exact = sod();
    let table = rows(&text);
    assert_eq!(table.len(), 11);
    for r in table {
        let s = exact.sample((r[0] - 0.5) / 0.2);
        assert_eq!([r[1], r[2], r[3]], [s.rho, s.u, s.p]);
    }
}

#[test]
fn riemann_oracle_accepts_states() {
    let o = imfsi(&["oracle", "riemann", "--left", "1,0,1", "--right", "0.125,0,0.1", "--points", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = rows(&stdout(&o));
    assert_eq!(table[0][1], 1.0);
    assert_eq!(table[4][1], 0.125);
}

#[test]
fn j2_oracle_matches_the_library() {
    let o = imfsi(&["oracle", "j2", "--points", "5", "--max-strain", "0.01"]);
    assert!(o.status.success());
    for r in rows(&stdout(&o)) {
        let (s, ep) = j2_uniaxial(200e9, 0.4e9, 0.1e9, r[0]);
        assert_eq!((r[1], r[2]), (s, ep));
    }
}

#[test]
fn validate_echoes_a_good_config_and_rejects_a_bad_one() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    let cfg = ScenarioConfig::preset(ScenarioKind::BrittleCylinder, Level::Coarse).unwrap();
    std::fs::write(&good, cfg.to_json().unwrap()).unwrap();
    let o = imfsi(&["validate", good.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(ScenarioConfig::from_json(&stdout(&o)).unwrap(), cfg);

    let bad = dir.path().join("bad.json");
    let mut broken = cfg.clone();
    broken.dt_strong = -1.0;
    std::fs::write(&bad, serde_json::to_string(&broken).unwrap()).unwrap();
    let o = imfsi(&["validate", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn unknown_scenario_is_an_error() {
    let o = imfsi(&["run", "--scenario", "teapot", "--out", "/nonexistent/never"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("teapot"));
}

fn check_outputs(dir: &Path) {
    let csv = std::fs::read_to_string(dir.join("series.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,p_det,p_wall,com_x,f_pen_x,mass_loss"));
    let data: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert!(data.len() >= 2);
    assert!(data.windows(2).all(|w| w[1][0] > w[0][0]));
    for name in ["background_2us.vtk", "solid_2us.vtk"] {
        let vtk = std::fs::read_to_string(dir.join(name)).unwrap();
        let mut head = vtk.lines();
        assert_eq!(head.next(), Some("# vtk DataFile Version 3.0"));
        head.next();
        assert_eq!(head.next(), Some("ASCII"));
    }
    assert!(dir.join("config.json").exists());
}

#[test]
fn short_weak_run_writes_series_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ScenarioConfig::chamber_detonation(Level::Coarse);
    cfg.output.snapshots = vec![2e-6, 1e-3];
    cfg.output.log_every = 4;
    let path = dir.path().join("short.json");
    std::fs::write(&path, cfg.to_json().unwrap()).unwrap();
    let out = dir.path().join("out");
    let o = imfsi(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--coupling",
        "weak",
        "--beta",
        "3",
        "--end-time",
        "3e-6",
        "--out",
        out.to_str().unwrap(),
        "--report-every",
        "0",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    check_outputs(&out);
    assert!(!out.join("background_1000us.vtk").exists());
    let used = ScenarioConfig::from_json(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert!(matches!(used.coupling, imfsi::coupling::Coupling::Weak(p) if p.beta == 3.0 && !p.damage_scaling));
}

#[test]
fn riemann_oracle_rejects_short_states() {
    let o = imfsi(&["oracle", "riemann", "--left", "1,0", "--right", "0.125,0,0.1"]);
    assert_eq!(o.status.code(), Some(2));
}
