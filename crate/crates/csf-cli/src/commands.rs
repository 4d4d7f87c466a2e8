//! The subcommands. Each reads a [`Config`], writes files under the output
//! root and returns the process exit code.

use crate::config::Config;
use crate::svg::{Plot, Series};
use csf_core::analysis::{
    asymptotic_slope_check, detect_features_at, fit_best_reaper, height_decay_fit, l1_contraction_check,
    strip_confinement, tip_limit_check, vertex_asymptotics,
};
use csf_core::exact::{
    line, paperclip, shrinking_circle, trombone_initial_with, Direction, GrimReaperSpec, TromboneSampling,
    TromboneSpec,
};
use csf_core::flow::{avoidance_check, evolve, EndCondition, EvolveOptions, FlowSnapshot, FlowTrajectory, Scheme, Verdict};
use csf_core::functionals::{affine_fit, area_series, entropy, finger_regions};
use csf_core::io::{fmt12, load_trajectory, save_trajectory, series_csv};
use csf_core::spectral::{
    cutoff, default_rho, eigenbasis_check, mz_classify, project, sharp_limit_fit, states_csv, trombone_rescaled_sheet,
    MzVerdict, SpectralState,
};
use csf_core::{CsfError, PlanarCurve, Point, Result};
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Environment variable naming the directory that receives all outputs.
pub const OUTPUT_ENV: &str = "CSF_OUTPUT_DIR";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

fn out_path(name: &str) -> Result<PathBuf> {
    let root = output_root();
    std::fs::create_dir_all(&root).map_err(|e| CsfError::Io(format!("{}: {e}", root.display())))?;
    Ok(root.join(name))
}

fn write_text(name: &str, text: &str) -> Result<PathBuf> {
    let p = out_path(name)?;
    std::fs::write(&p, text).map_err(|e| CsfError::Io(format!("{}: {e}", p.display())))?;
    Ok(p)
}

/// Rounds every number to twelve significant digits.
fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) => match n.as_f64() {
            Some(f) if n.is_f64() => fmt12(f).parse::<f64>().ok().map(Value::from).unwrap_or(Value::Null),
            _ => Value::Number(n),
        },
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn to_value(v: &impl Serialize) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| CsfError::Parse(e.to_string()))
}

fn write_json(name: &str, v: &impl Serialize) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(&round_json(to_value(v)?)).map_err(|e| CsfError::Parse(e.to_string()))?;
    write_text(name, &(text + "\n"))
}

fn load(cfg: &Config, key: &str) -> Result<FlowTrajectory> {
    if !cfg.has(key) {
        return Err(CsfError::MissingInput(format!("`{key}` trajectory path")));
    }
    Ok(load_trajectory(Path::new(&cfg.str_or(key, "")))?.1)
}

fn direction(cfg: &Config, key: &str, default: &str) -> Result<Direction> {
    match cfg.str_or(key, default).as_str() {
        "right" => Ok(Direction::Right),
        "left" => Ok(Direction::Left),
        other => Err(CsfError::ConfigRejected(format!("`{key}` must be left or right, got `{other}`"))),
    }
}

pub const FAMILY_KEYS: &[&str] = &[
    "family", "n", "r0", "center", "height", "x_range", "heights", "shifts", "pointing", "tail_direction", "half_length", "spacing",
];

/// A closed-form or glued solution selected by the config.
pub enum Family {
    Circle { r0: f64, center: Point },
    Line { height: f64, lo: f64, hi: f64 },
    Reaper { spec: GrimReaperSpec, half_length: f64 },
    Paperclip,
    Trombone { spec: TromboneSpec, spacing: f64 },
}

impl Family {
    pub fn from_config(cfg: &Config) -> Result<Family> {
        Ok(match cfg.str_or("family", "circle").as_str() {
            "circle" => {
                let c = cfg.list("center", &[0.0, 0.0])?;
                if c.len() != 2 {
                    return Err(CsfError::ConfigRejected("`center` needs two numbers".into()));
                }
                Family::Circle {
                    r0: cfg.positive("r0", 1.0)?,
                    center: Point::new(c[0], c[1]),
                }
            }
            "line" => {
                let r = cfg.list("x_range", &[-10.0, 10.0])?;
                if r.len() != 2 || r[1] <= r[0] {
                    return Err(CsfError::ConfigRejected("`x_range` needs lo,hi with lo < hi".into()));
                }
                Family::Line {
                    height: cfg.num("height", 0.0)?,
                    lo: r[0],
                    hi: r[1],
                }
            }
            "reaper" => {
                let a = cfg.list("heights", &[0.0, 1.0])?;
                let b = cfg.list("shifts", &[0.0])?;
                if a.len() != 2 || b.len() != 1 {
                    return Err(CsfError::ConfigRejected("reaper needs heights = lo,hi and a single shift".into()));
                }
                Family::Reaper {
                    spec: GrimReaperSpec::new(a[0], a[1], b[0], direction(cfg, "pointing", "right")?)?,
                    half_length: cfg.positive("half_length", 10.0)?,
                }
            }
            "paperclip" => Family::Paperclip,
            "trombone" => Family::Trombone {
                spec: TromboneSpec::new(
                    cfg.list("heights", &[0.0, 1.0, 2.0])?,
                    cfg.list("shifts", &[0.0, 0.0])?,
                    direction(cfg, "tail_direction", "left")?,
                )?,
                spacing: cfg.positive("spacing", 0.05)?,
            },
            other => {
                return Err(CsfError::ConfigRejected(format!(
                    "unknown family `{other}`; use circle, line, reaper, paperclip or trombone"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Circle { .. } => "circle",
            Family::Line { .. } => "line",
            Family::Reaper { .. } => "reaper",
            Family::Paperclip => "paperclip",
            Family::Trombone { .. } => "trombone",
        }
    }

    pub fn curve(&self, t: f64, n: usize) -> Result<PlanarCurve> {
        match self {
            Family::Circle { r0, center } => shrinking_circle(*r0, t, *center, n),
            Family::Line { height, lo, hi } => line(*height, *lo, *hi, n),
            Family::Reaper { spec, half_length } => spec.curve(t, *half_length, n),
            Family::Paperclip => paperclip(t, n),
            Family::Trombone { spec, spacing } => trombone_initial_with(
                spec,
                t,
                &TromboneSampling {
                    spacing: *spacing,
                    tail_margin: None,
                },
            ),
        }
    }

    /// How the ends of open members move under the flow.
    pub fn ends(&self) -> EndCondition {
        match self {
            Family::Reaper { spec, .. } => EndCondition::Translate(Point::new(-spec.pointing.sign() * spec.k(), 0.0)),
            Family::Trombone { spec, .. } => {
                let s = spec.clone();
                let mid = 0.5 * (s.a[0] + s.a[s.m()]);
                EndCondition::Prescribed(Arc::new(move |t, old: Point| {
                    let j = if old.y < mid { 0 } else { s.m() };
                    Point::new(old.x, s.sheet_height(j, t, old.x).unwrap_or(old.y))
                }))
            }
            _ => EndCondition::Fixed,
        }
    }
}

fn single(curve: PlanarCurve, t: f64) -> Result<FlowTrajectory> {
    FlowTrajectory::from_snapshots(vec![FlowSnapshot {
        t,
        curve,
        scheme: Scheme::SemiImplicit,
        dt: 0.0,
    }])
}

pub fn exact(cfg: &Config) -> Result<i32> {
    let fam = Family::from_config(cfg)?;
    let t = cfg.num("t0", if matches!(fam, Family::Trombone { .. }) { -50.0 } else { 0.0 })?;
    let n: usize = cfg.get("n", 512)?;
    let curve = fam.curve(t, n)?;
    let name = cfg.str_or("output", "exact.jsonl");
    let path = out_path(&name)?;
    let count = curve.len();
    save_trajectory(&path, &single(curve, t)?)?;
    println!("{} at t = {}: {count} points -> {}", fam.name(), fmt12(t), path.display());
    Ok(0)
}

pub const EXACT_KEYS: &[&str] = &["t0", "output"];

pub const EVOLVE_KEYS: &[&str] = &[
    "t0", "t1", "dt", "scheme", "record_every", "check_embedded", "entropy", "output", "summary",
];

pub fn evolve_cmd(cfg: &Config) -> Result<i32> {
    let fam = Family::from_config(cfg)?;
    let t0 = cfg.num("t0", if matches!(fam, Family::Trombone { .. }) { -50.0 } else { 0.0 })?;
    let t1 = cfg.num("t1", t0 + 0.1)?;
    let dt = cfg.positive("dt", 1e-4)?;
    let n: usize = cfg.get("n", 512)?;
    let curve = fam.curve(t0, n)?;
    let mut opts = EvolveOptions::new(dt, Scheme::parse(&cfg.str_or("scheme", "semi-implicit"))?);
    opts.ends = fam.ends();
    opts.record_every = if cfg.has("record_every") { Some(cfg.positive("record_every", 1.0)?) } else { None };
    opts.check_embedded = cfg.get("check_embedded", false)?;
    if let Family::Trombone { spacing, .. } = fam {
        opts.spacing = Some(spacing);
    }
    let tr = evolve(&curve, t0, t1, &opts)?;
    let path = out_path(&cfg.str_or("output", "trajectory.jsonl"))?;
    save_trajectory(&path, &tr)?;

    let want_entropy: bool = cfg.get("entropy", false)?;
    let mut lengths = Vec::new();
    let mut areas = Vec::new();
    let mut entropies = Vec::new();
    for s in tr.snapshots() {
        lengths.push(s.curve.polyline_length());
        areas.push(if s.curve.is_closed() {
            json!(s.curve.signed_area().abs())
        } else {
            json!(finger_regions(&s.curve).map(|f| f.iter().map(|r| r.area).collect::<Vec<_>>()).unwrap_or_default())
        });
        if want_entropy {
            entropies.push(entropy(&s.curve)?.value);
        }
    }
    let summary = json!({
        "family": fam.name(),
        "scheme": opts.scheme.name(),
        "t0": t0,
        "t1": t1,
        "dt": dt,
        "snapshots": tr.len(),
        "times": tr.times(),
        "lengths": lengths,
        "areas": areas,
        "entropy": if want_entropy { json!(entropies) } else { Value::Null },
    });
    let sp = write_json(&cfg.str_or("summary", "summary.json"), &summary)?;
    println!("{} snapshots -> {}; summary -> {}", tr.len(), path.display(), sp.display());
    Ok(0)
}

pub const SPECTRAL_KEYS: &[&str] = &[
    "heights", "shifts", "tail_direction", "sheet", "tau_min", "tau_max", "count", "delta", "mu", "n", "output", "report",
];

/// Spectral states of a trombone sheet on a grid of rescaled times.
fn trombone_states(cfg: &Config) -> Result<(Vec<SpectralState>, f64)> {
    let spec = TromboneSpec::new(
        cfg.list("heights", &[0.0, 1.0, 2.0])?,
        cfg.list("shifts", &[0.0, 0.0])?,
        direction(cfg, "tail_direction", "left")?,
    )?;
    let j: usize = cfg.get("sheet", 1)?;
    if j > spec.m() {
        return Err(CsfError::ConfigRejected(format!("`sheet` must be at most {}", spec.m())));
    }
    let (lo, hi) = (cfg.num("tau_min", -10.0)?, cfg.num("tau_max", -7.6)?);
    let count: usize = cfg.get("count", 13)?;
    if count < 2 || hi <= lo {
        return Err(CsfError::ConfigRejected("need tau_min < tau_max and count >= 2".into()));
    }
    let delta = cfg.positive("delta", 0.4)?;
    let n: usize = cfg.get("n", 4001)?;
    let states = (0..count)
        .map(|i| {
            let tau = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            let s = trombone_rescaled_sheet(&spec, j, tau, default_rho(tau, delta), n)?;
            project(&cutoff(&s)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((states, cfg.positive("mu", 0.4)?))
}

pub fn spectral(cfg: &Config) -> Result<i32> {
    let (states, mu) = trombone_states(cfg)?;
    let mz = mz_classify(&states, mu)?;
    let limit = match sharp_limit_fit(&states, mu) {
        Ok(l) => to_value(&l)?,
        Err(CsfError::NotApplicable(m)) => json!({ "not_applicable": m }),
        Err(e) => return Err(e),
    };
    let eig = eigenbasis_check(0.01, 12.0);
    let csv = write_text(&cfg.str_or("output", "spectral_states.csv"), &states_csv(&states, mu))?;
    let rep = write_json(
        &cfg.str_or("report", "spectral.json"),
        &json!({ "mu": mu, "dominance": mz, "sharp_limit": limit, "eigenbasis": eig }),
    )?;
    println!("dominance {:?}; states -> {}; report -> {}", mz.verdict, csv.display(), rep.display());
    Ok(0)
}

pub const ENTROPY_KEYS: &[&str] = &["input", "t0", "output", "report"];

pub fn entropy_cmd(cfg: &Config) -> Result<i32> {
    let tr = if cfg.has("input") {
        load(cfg, "input")?
    } else {
        let fam = Family::from_config(cfg)?;
        let t = cfg.num("t0", if matches!(fam, Family::Trombone { .. }) { -100.0 } else { 0.0 })?;
        single(fam.curve(t, cfg.get("n", 512)?)?, t)?
    };
    let results = tr.snapshots().iter().map(|s| entropy(&s.curve)).collect::<Result<Vec<_>>>()?;
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let csv = write_text(&cfg.str_or("output", "entropy.csv"), &series_csv(&tr.times(), &values))?;
    let rep = write_json(&cfg.str_or("report", "entropy.json"), &json!({ "times": tr.times(), "results": results }))?;
    for (t, v) in tr.times().iter().zip(&values) {
        println!("t = {}: entropy {}", fmt12(*t), fmt12(*v));
    }
    println!("series -> {}; report -> {}", csv.display(), rep.display());
    Ok(0)
}

pub const FIT_KEYS: &[&str] = &["input", "finger", "output", "report"];

pub fn fit(cfg: &Config) -> Result<i32> {
    let tr = load(cfg, "input")?;
    let id: usize = cfg.get("finger", 1)?;
    let series = area_series(&tr, id)?;
    let best = fit_best_reaper(&tr, id)?;
    let tip = tip_limit_check(&tr, id, &best)?;
    let csv = write_text(&cfg.str_or("output", "area.csv"), &series_csv(&series.times, &series.areas))?;
    let rep = write_json(
        &cfg.str_or("report", "fit.json"),
        &json!({ "finger": id, "area_fit": best.fit, "b": best.b, "c0": best.c0,
                 "symmetric_difference": best.symmetric_difference, "tip_limit": tip }),
    )?;
    println!(
        "finger {id}: area slope {} b {} -> {}; report -> {}",
        fmt12(best.fit.slope),
        fmt12(best.b),
        csv.display(),
        rep.display()
    );
    Ok(0)
}

pub const VERIFY_KEYS: &[&str] = &[
    "checks", "input", "reference", "heights", "shifts", "tail_direction", "finger", "width", "t_max", "delta", "lambda",
    "line_height", "mu", "sheet", "tau_min", "tau_max", "count", "n", "report",
];

pub const CHECK_NAMES: &[&str] = &[
    "strip", "vertex", "height_decay", "area_law", "best_reaper", "tip_limit", "mz", "l1", "avoidance", "slope",
];

#[derive(Serialize)]
struct Outcome {
    check: String,
    verdict: Verdict,
    detail: Value,
}

fn pass_if(ok: bool) -> Verdict {
    if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn run_check(name: &str, cfg: &Config, tr: &mut Option<FlowTrajectory>) -> Result<(Verdict, Value)> {
    let heights = cfg.list("heights", &[0.0, 1.0, 2.0])?;
    let id: usize = cfg.get("finger", 1)?;
    if name == "mz" {
        let (states, mu) = trombone_states(cfg)?;
        let mz = mz_classify(&states, mu)?;
        return Ok((pass_if(mz.verdict == MzVerdict::UnstableDominant), to_value(&mz)?));
    }
    if tr.is_none() {
        *tr = Some(load(cfg, "input")?);
    }
    let traj = tr.as_ref().expect("loaded above");
    let width = if cfg.has("width") {
        cfg.positive("width", 1.0)?
    } else {
        heights.get(id).zip(heights.get(id.wrapping_sub(1))).map(|(h, l)| (h - l).abs()).unwrap_or(1.0)
    };
    Ok(match name {
        "strip" => {
            let r = strip_confinement(traj, &heights)?;
            (r.verdict, json!({ "bound": r.bound, "margin": r.margin, "fingers_confined": r.fingers_confined }))
        }
        "vertex" => {
            let t_max = cfg.num("t_max", -30.0)?;
            let r = vertex_asymptotics(traj, id, width, &heights)?;
            if !r.samples.iter().any(|s| s.t <= t_max) {
                return Ok((Verdict::NotApplicable, json!({ "reason": "no snapshot before t_max" })));
            }
            let (km, tilt, se) = (r.kappa_margin(t_max), r.max_tilt(t_max), r.speed_error(t_max));
            (
                pass_if(km >= 0.0 && tilt <= 0.05 && se <= 0.02),
                json!({ "kappa_margin": km, "max_tilt": tilt, "speed_error": se,
                        "speed_bound_respected": r.respects_speed_bound(t_max) }),
            )
        }
        "height_decay" => {
            let last = traj.last().expect("nonempty trajectory");
            let f = detect_features_at(&last.curve, Point::default(), last.t)?;
            let vx: Vec<f64> = f.sharp_vertices.iter().map(|v| v.point.x).collect();
            let mut fits = Vec::new();
            for (k, sheet) in f.sheets.iter().enumerate() {
                let nearest = heights
                    .iter()
                    .cloned()
                    .min_by(|p, q| {
                        let mid = sheet.values[sheet.values.len() / 2];
                        (p - mid).abs().total_cmp(&(q - mid).abs())
                    })
                    .unwrap_or(0.0);
                let fit = height_decay_fit(sheet, &vx, Some(nearest))?;
                fits.push(json!({ "sheet": k, "a": fit.a, "beta": fit.beta, "r_squared": fit.r_squared, "pass": fit.pass }));
            }
            let ok = !fits.is_empty() && fits.iter().all(|v| v["pass"] == json!(true));
            (pass_if(ok), json!(fits))
        }
        "area_law" => {
            let s = area_series(traj, id)?;
            let fit = affine_fit(&s.times, &s.areas)?;
            let rel = fit.slope / -PI - 1.0;
            (pass_if(rel.abs() <= 0.01), json!({ "slope": fit.slope, "relative_error": rel }))
        }
        "best_reaper" => match fit_best_reaper(traj, id) {
            Ok(b) => {
                let d = &b.symmetric_difference;
                let ok = d.windows(2).all(|w| w[1] <= w[0] + 1e-6 * width);
                (pass_if(ok), json!({ "b": b.b, "c0": b.c0, "symmetric_difference": d }))
            }
            Err(CsfError::NotApplicable(m)) => (Verdict::NotApplicable, json!({ "reason": m })),
            Err(e) => return Err(e),
        },
        "tip_limit" => {
            let b = fit_best_reaper(traj, id)?;
            let r = tip_limit_check(traj, id, &b)?;
            (pass_if(r.pass), to_value(&r)?)
        }
        "l1" => {
            let reference = load(cfg, "reference")?;
            let r = l1_contraction_check(traj, &reference)?;
            (r.verdict, to_value(&r)?)
        }
        "avoidance" => {
            let h = cfg.num("line_height", heights.iter().cloned().fold(0.0, f64::max) + 2.0)?;
            let (lo, hi) = traj
                .snapshots()
                .iter()
                .map(|s| s.curve.bounding_box())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (p, q)| (a.min(p.x), b.max(q.x)));
            let lines = FlowTrajectory::from_snapshots(
                traj.snapshots()
                    .iter()
                    .map(|s| {
                        Ok(FlowSnapshot {
                            t: s.t,
                            curve: line(h, lo - 1.0, hi + 1.0, 2001)?,
                            scheme: s.scheme,
                            dt: s.dt,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?,
            )?;
            let r = avoidance_check(traj, &lines)?;
            (r.verdict, to_value(&r)?)
        }
        "slope" => {
            let r = asymptotic_slope_check(traj, cfg.positive("delta", 0.1)?, cfg.positive("lambda", 1.0)?);
            (r.verdict, to_value(&r)?)
        }
        other => {
            return Err(CsfError::ConfigRejected(format!(
                "unknown check `{other}`; available: {}",
                CHECK_NAMES.join(", ")
            )))
        }
    })
}

pub fn verify(cfg: &Config) -> Result<i32> {
    let checks = cfg.words("checks");
    if let Some(c) = checks.iter().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
        return Err(CsfError::ConfigRejected(format!(
            "unknown check `{c}`; available: {}",
            CHECK_NAMES.join(", ")
        )));
    }
    let mut traj = None;
    let mut outcomes = Vec::new();
    for c in &checks {
        let (verdict, detail) = match run_check(c, cfg, &mut traj) {
            Ok(r) => r,
            Err(e @ (CsfError::MissingInput(_) | CsfError::ConfigRejected(_) | CsfError::Io(_))) => return Err(e),
            Err(e) => (Verdict::Fail, json!({ "error": e.to_string() })),
        };
        println!("{c}: {}", verdict.label());
        outcomes.push(Outcome {
            check: c.clone(),
            verdict,
            detail,
        });
    }
    let all = outcomes.iter().all(|o| o.verdict == Verdict::Pass);
    let rep = write_json(&cfg.str_or("report", "verify.json"), &json!({ "all_pass": all, "checks": outcomes }))?;
    println!("{} of {} checks passed; report -> {}", outcomes.iter().filter(|o| o.verdict == Verdict::Pass).count(), outcomes.len(), rep.display());
    Ok(if all { 0 } else { 1 })
}

pub const PLOT_KEYS: &[&str] = &["kind", "input", "reference", "finger", "guide_slope", "mu", "equal_aspect", "title", "output"];

fn read_columns(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| CsfError::Io(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CsfError::Parse(e.to_string()))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut cols = vec![Vec::new(); header.len()];
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CsfError::Parse(e.to_string()))?;
        for (c, v) in cols.iter_mut().zip(rec.iter()) {
            c.push(v.trim().parse::<f64>().map_err(|_| CsfError::Parse(format!("non-numeric cell `{v}`")))?);
        }
    }
    Ok((header, cols))
}

fn column<'a>(h: &[String], cols: &'a [Vec<f64>], name: &str) -> Result<&'a [f64]> {
    h.iter()
        .position(|c| c == name)
        .map(|i| cols[i].as_slice())
        .ok_or_else(|| CsfError::Parse(format!("missing column `{name}`")))
}

pub fn plot(cfg: &Config) -> Result<i32> {
    let kind = cfg.str_or("kind", "curve");
    let mut p = Plot {
        title: cfg.str_or("title", &kind),
        equal_aspect: cfg.get("equal_aspect", false)?,
        ..Plot::default()
    };
    match kind.as_str() {
        "curve" => {
            let tr = load(cfg, "input")?;
            p.x_label = "x1".into();
            p.y_label = "x2".into();
            for s in tr.snapshots() {
                let mut pts: Vec<(f64, f64)> = s.curve.points().iter().map(|q| (q.x, q.y)).collect();
                if s.curve.is_closed() {
                    pts.push(pts[0]);
                }
                p.series.push(Series::new(&format!("t = {}", fmt12(s.t)), pts));
            }
            if cfg.has("reference") {
                let r = load(cfg, "reference")?;
                for s in r.snapshots() {
                    let pts = s.curve.points().iter().map(|q| (q.x, q.y)).collect();
                    p.series.push(Series::new(&format!("reference t = {}", fmt12(s.t)), pts).dashed());
                }
            }
            let id: usize = cfg.get("finger", 0)?;
            if id > 0 {
                let best = fit_best_reaper(&tr, id)?;
                let last = tr.last().expect("nonempty trajectory");
                let c = best.reaper.curve(last.t, 20.0, 801)?;
                p.series.push(
                    Series::new("best-fit grim reaper", c.points().iter().map(|q| (q.x, q.y)).collect()).dashed(),
                );
            }
        }
        "series" => {
            let path = cfg.str_or("input", "");
            if path.is_empty() {
                return Err(CsfError::MissingInput("`input` series CSV".into()));
            }
            let (h, cols) = read_columns(Path::new(&path))?;
            if cols.len() < 2 || cols[0].is_empty() {
                return Err(CsfError::Parse("series needs two nonempty columns".into()));
            }
            p.x_label = h[0].clone();
            p.y_label = h[1].clone();
            let pts: Vec<(f64, f64)> = cols[0].iter().cloned().zip(cols[1].iter().cloned()).collect();
            p.series.push(Series::new(&h[1], pts.clone()));
            if cfg.has("guide_slope") {
                let m = cfg.num("guide_slope", -PI)?;
                let c = pts.iter().map(|(x, y)| y - m * x).sum::<f64>() / pts.len() as f64;
                let (x0, x1) = (pts[0].0, pts[pts.len() - 1].0);
                p.series.push(Series::new(&format!("slope {}", fmt12(m)), vec![(x0, m * x0 + c), (x1, m * x1 + c)]).dashed());
            }
        }
        "modes" => {
            let path = cfg.str_or("input", "");
            if path.is_empty() {
                return Err(CsfError::MissingInput("`input` states CSV".into()));
            }
            let (h, cols) = read_columns(Path::new(&path))?;
            let tau = column(&h, &cols, "tau")?;
            let (wp, w0, wm) = (column(&h, &cols, "w_plus")?, column(&h, &cols, "w_zero")?, column(&h, &cols, "w_minus")?);
            let mu = cfg.positive("mu", 0.4)?;
            p.x_label = "tau".into();
            p.y_label = "log10 ratio".into();
            let ratio: Vec<(f64, f64)> = (0..tau.len())
                .map(|i| (tau[i], ((w0[i] + wm[i].max(0.0)) / wp[i]).log10()))
                .collect();
            p.series.push(Series::new("(W0 + W-) / W+", ratio));
            p.series.push(
                Series::new("exp(mu tau / 2)", tau.iter().map(|&t| (t, (mu * t / 2.0) / std::f64::consts::LN_10)).collect())
                    .dashed(),
            );
        }
        other => {
            return Err(CsfError::ConfigRejected(format!("unknown plot kind `{other}`; use curve, series or modes")))
        }
    }
    let out = write_text(&cfg.str_or("output", "plot.svg"), &p.render())?;
    println!("{kind} plot -> {}", out.display());
    Ok(0)
}
