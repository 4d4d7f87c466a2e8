use csf_core::exact::{line, Direction, GrimReaperSpec};
use csf_core::flow::{FlowSnapshot, FlowTrajectory, Scheme};
use csf_core::io::{load_trajectory, save_trajectory};
use csf_core::{PlanarCurve, Point, Topology};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn csf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csf"))
        .args(args)
        .env("CSF_OUTPUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn save(dir: &Path, name: &str, snaps: Vec<(f64, PlanarCurve)>) -> String {
    let tr = FlowTrajectory::from_snapshots(
        snaps
            .into_iter()
            .map(|(t, curve)| FlowSnapshot {
                t,
                curve,
                scheme: Scheme::SemiImplicit,
                dt: 0.0,
            })
            .collect(),
    )
    .unwrap();
    let p = dir.join(name);
    save_trajectory(&p, &tr).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn exact_circle_writes_512_points_deterministically() {
    let d = tempfile::tempdir().unwrap();
    let o = csf(d.path(), &["exact", "--set", "family=circle", "--set", "output=a.jsonl"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, tr) = load_trajectory(&d.path().join("a.jsonl")).unwrap();
    assert_eq!(tr.snapshots()[0].curve.len(), 512);
    csf(d.path(), &["exact", "--set", "family=circle", "--set", "output=b.jsonl"]);
    assert_eq!(std::fs::read(d.path().join("a.jsonl")).unwrap(), std::fs::read(d.path().join("b.jsonl")).unwrap());
}

#[test]
fn config_file_and_overrides() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("c.ini");
    std::fs::write(&cfg, "family = reaper\nheights = 0, 1\nn = 301\n").unwrap();
    let o = csf(d.path(), &["exact", "--config", cfg.to_str().unwrap(), "--set", "n=401"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, tr) = load_trajectory(&d.path().join("exact.jsonl")).unwrap();
    assert_eq!(tr.snapshots()[0].curve.len(), 401);
}

#[test]
fn unknown_keys_and_missing_inputs_are_config_errors() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(csf(d.path(), &["exact", "--set", "colour=red"]).status.code(), Some(2));
    assert_eq!(csf(d.path(), &["fit"]).status.code(), Some(2));
    assert_eq!(csf(d.path(), &["verify", "--set", "checks=strip"]).status.code(), Some(2));
    assert_eq!(csf(d.path(), &["verify", "--set", "checks=nonsense"]).status.code(), Some(2));
    assert_eq!(csf(d.path(), &["exact", "--set", "family=circle", "--set", "t0=0.6"]).status.code(), Some(3));
}

#[test]
fn evolve_circle_summary() {
    let d = tempfile::tempdir().unwrap();
    let o = csf(
        d.path(),
        &["evolve", "--set", "family=circle", "--set", "n=128", "--set", "t1=0.2", "--set", "dt=1e-4",
          "--set", "record_every=0.05", "--set", "entropy=true"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&d.path().join("summary.json"));
    let lengths: Vec<f64> = s["lengths"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(lengths.len(), 5);
    assert!(lengths.windows(2).all(|w| w[1] < w[0]));
    let areas: Vec<f64> = s["areas"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!((areas[0] - areas[4] - 2.0 * std::f64::consts::PI * 0.2).abs() < 1e-2);
    for e in s["entropy"].as_array().unwrap() {
        assert!((e.as_f64().unwrap() - 1.5203).abs() < 1e-3);
    }
    let (_, tr) = load_trajectory(&d.path().join("trajectory.jsonl")).unwrap();
    assert_eq!(tr.len(), 5);
}

#[test]
fn empty_check_list_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = csf(d.path(), &["verify"]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&d.path().join("verify.json"));
    assert_eq!(r["checks"].as_array().unwrap().len(), 0);
}

#[test]
fn tilted_line_fails_slope_check() {
    let d = tempfile::tempdir().unwrap();
    let tilted = PlanarCurve::new(
        (0..101).map(|i| {
            let x = -50.0 + i as f64;
            Point::new(x, 0.2 * x)
        }).collect(),
        Topology::Open,
    )
    .unwrap();
    let p = save(d.path(), "tilted.jsonl", vec![(-1.0, tilted)]);
    let o = csf(d.path(), &["verify", "--set", "checks=slope", "--set", &format!("input={p}")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("slope: FAIL"));
    let flat = save(d.path(), "flat.jsonl", vec![(-1.0, line(0.0, -50.0, 50.0, 101).unwrap())]);
    let o = csf(d.path(), &["verify", "--set", "checks=slope", "--set", &format!("input={flat}")]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn reaper_fit_and_checks() {
    let d = tempfile::tempdir().unwrap();
    let r = GrimReaperSpec::new(0.0, 1.0, 0.8, Direction::Right).unwrap();
    let snaps = (0..6).map(|i| {
        let t = -10.0 + i as f64;
        (t, r.curve(t, 40.0, 8001).unwrap())
    }).collect();
    let p = save(d.path(), "reaper.jsonl", snaps);
    let o = csf(d.path(), &["fit", "--set", &format!("input={p}")]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let f = json(&d.path().join("fit.json"));
    assert!((f["b"].as_f64().unwrap() - 0.8).abs() < 1e-4);
    assert!(d.path().join("area.csv").exists());
    let o = csf(
        d.path(),
        &["verify", "--set", "checks=area_law,tip_limit,strip", "--set", "heights=0,1", "--set", &format!("input={p}")],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let o = csf(
        d.path(),
        &["plot", "--set", "kind=series", "--set", &format!("input={}", d.path().join("area.csv").display()),
          "--set", "guide_slope=-3.14159265359", "--set", "output=area.svg"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let svg = std::fs::read_to_string(d.path().join("area.svg")).unwrap();
    assert!(svg.contains("stroke-dasharray") && svg.contains("width=\"1024\""));
    let o = csf(d.path(), &["plot", "--set", &format!("input={p}"), "--set", "finger=1", "--set", "output=overlay.svg"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn spectral_report_and_mode_plot() {
    let d = tempfile::tempdir().unwrap();
    let o = csf(d.path(), &["spectral"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&d.path().join("spectral.json"));
    assert_eq!(r["dominance"]["verdict"], "UnstableDominant");
    assert!((r["sharp_limit"]["a"].as_f64().unwrap() - 1.0).abs() < 1e-2);
    let csv = d.path().join("spectral_states.csv");
    let o = csf(d.path(), &["plot", "--set", "kind=modes", "--set", &format!("input={}", csv.display())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = csf(d.path(), &["verify", "--set", "checks=mz"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn entropy_of_line() {
    let d = tempfile::tempdir().unwrap();
    let o = csf(
        d.path(),
        &["entropy", "--set", "family=line", "--set", "x_range=-200,200", "--set", "n=8001"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&d.path().join("entropy.json"));
    assert!((r["results"][0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-3);
}
