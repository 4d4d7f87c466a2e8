//! Geometric diagnostics of curves and flows: feature detection, edge
//! classification, confinement, tip asymptotics, best-fitting grim reapers,
//! configuration validation and the `L¹` contraction check.

use crate::curve::{geometry, CurveGeometry, PlanarCurve};
use crate::error::{CsfError, Result};
use crate::exact::{Direction, GrimReaperSpec};
use crate::flow::{Axis, FlowTrajectory, SheetGraph, Verdict};
use crate::functionals::{affine_fit, axis_crossings, curve_l1_distance, finger_regions, AffineFit, FingerRegion};
use crate::point::Point;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, LN_2, PI};

/// Default smallness parameter of the quantitative checks.
pub const EPSILON: f64 = 0.01;
/// Curvature extrema must stand out by this fraction of `max |κ|`.
const KAPPA_PROMINENCE: f64 = 1e-3;
/// Hysteresis band for curvature sign changes, relative to `max |κ|`.
const SIGN_BAND: f64 = 1e-6;
/// Sheets are runs whose tangent stays within this angle of horizontal.
const SHEET_ANGLE_DEG: f64 = 75.0;
/// Minimum sample separation between neighbouring critical points.
const MIN_SEPARATION: usize = 3;

/// A refined critical point of a sampled signal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    /// Nearest sample.
    pub index: usize,
    pub s: f64,
    pub point: Point,
    pub value: f64,
    pub is_max: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Finger {
    pub region: FingerRegion,
    pub pointing: Direction,
    /// Sharp vertices inside the finger arc; one for a proper finger.
    pub sharp_vertices: usize,
    /// Turning of the tangent between the two axis crossings.
    pub crossing_turn: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FeatureSet {
    pub sharp_vertices: Vec<CriticalPoint>,
    pub flat_vertices: Vec<CriticalPoint>,
    pub tips: Vec<CriticalPoint>,
    pub knuckles: Vec<CriticalPoint>,
    pub inflections: Vec<CriticalPoint>,
    pub sheets: Vec<SheetGraph>,
    pub fingers: Vec<Finger>,
    /// Open ends of the curve.
    pub tails: usize,
    /// Curvature is constant to relative precision, so no vertex is isolated.
    pub constant_curvature: bool,
}

/// Least-squares parabola `c0 + c1 u + c2 u²`.
fn quadratic_fit(u: &[f64], v: &[f64]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for (&x, &y) in u.iter().zip(v) {
        let p = [1.0, x, x * x];
        for i in 0..3 {
            r[i] += p[i] * y;
            for j in 0..3 {
                m[i][j] += p[i] * p[j];
            }
        }
    }
    let det = |a: &[[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(&m);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut c = [0.0; 3];
    for (k, ck) in c.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = r[i];
        }
        *ck = det(&mk) / d;
    }
    Some(c)
}

/// Sample indices of the 5-point stencil around `i`.
fn stencil(i: usize, n: usize, closed: bool) -> Vec<usize> {
    if closed {
        (0..5).map(|k| (i + n + k - 2) % n).collect()
    } else {
        let lo = i.saturating_sub(2).min(n.saturating_sub(5));
        (lo..(lo + 5).min(n)).collect()
    }
}

/// Arclength offsets of the stencil relative to sample `i`, unwrapped for
/// closed curves.
fn stencil_offsets(g: &CurveGeometry, idx: &[usize], i: usize, period: f64) -> Vec<f64> {
    idx.iter()
        .map(|&j| {
            let mut u = g.s[j] - g.s[i];
            if period > 0.0 {
                u -= period * (u / period).round();
            }
            u
        })
        .collect()
}

/// Refines the extremum of `signal` near sample `i` by a quadratic fit and
/// evaluates position and signal there.
fn refine(curve: &PlanarCurve, g: &CurveGeometry, signal: &[f64], i: usize, is_max: bool) -> CriticalPoint {
    let n = signal.len();
    let closed = curve.is_closed();
    let period = if closed { curve.polyline_length() } else { 0.0 };
    let idx = stencil(i, n, closed);
    let u = stencil_offsets(g, &idx, i, period);
    let v: Vec<f64> = idx.iter().map(|&j| signal[j]).collect();
    let p = curve.points();
    let fallback = CriticalPoint {
        index: i,
        s: g.s[i],
        point: p[i],
        value: signal[i],
        is_max,
    };
    let c = match quadratic_fit(&u, &v) {
        Some(c) if (is_max && c[2] < 0.0) || (!is_max && c[2] > 0.0) => c,
        _ => return fallback,
    };
    let (umin, umax) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let us = (-c[1] / (2.0 * c[2])).clamp(umin, umax);
    let xs: Vec<f64> = idx.iter().map(|&j| p[j].x).collect();
    let ys: Vec<f64> = idx.iter().map(|&j| p[j].y).collect();
    let point = match (quadratic_fit(&u, &xs), quadratic_fit(&u, &ys)) {
        (Some(a), Some(b)) => Point::new(a[0] + us * (a[1] + us * a[2]), b[0] + us * (b[1] + us * b[2])),
        _ => p[i],
    };
    CriticalPoint {
        index: i,
        s: g.s[i] + us,
        point,
        value: c[0] + us * (c[1] + us * c[2]),
        is_max,
    }
}

/// Local extrema of `v` that rise and fall by at least `prominence` on
/// both sides. Plateaus collapse to their midpoint.
pub(crate) fn turning_points(v: &[f64], prominence: f64, closed: bool) -> Vec<(usize, bool)> {
    let n = v.len();
    if n < 3 {
        return Vec::new();
    }
    let (gmax, gmin) = v.iter().enumerate().fold((0, 0), |(a, b), (i, &x)| {
        (if x > v[a] { i } else { a }, if x < v[b] { i } else { b })
    });
    if !(v[gmax] - v[gmin] >= prominence) {
        return Vec::new();
    }
    // Closed signals start at the global maximum and wrap back onto it.
    let start = if closed { gmax } else { 0 };
    let len = if closed { n + 1 } else { n };
    let at = |k: usize| v[(start + k) % n];
    let mut out = Vec::new();
    // Running extreme since the last confirmed turn: (first index, last index, value).
    let mut hi = (0usize, 0usize, at(0));
    let mut lo = (0usize, 0usize, at(0));
    let mut dir: i8 = if closed { -1 } else { 0 };
    let record = |e: (usize, usize, f64), is_max: bool, out: &mut Vec<(usize, bool)>| {
        out.push(((start + (e.0 + e.1) / 2) % n, is_max));
    };
    for k in 1..len {
        let x = at(k);
        match dir {
            0 => {
                if x > hi.2 {
                    hi = (k, k, x);
                } else if x == hi.2 {
                    hi.1 = k;
                }
                if x < lo.2 {
                    lo = (k, k, x);
                } else if x == lo.2 {
                    lo.1 = k;
                }
                if x - lo.2 >= prominence {
                    if at(0) - lo.2 >= prominence {
                        record(lo, false, &mut out);
                    }
                    dir = 1;
                    hi = (k, k, x);
                } else if hi.2 - x >= prominence {
                    if hi.2 - at(0) >= prominence {
                        record(hi, true, &mut out);
                    }
                    dir = -1;
                    lo = (k, k, x);
                }
            }
            1 => {
                if x > hi.2 {
                    hi = (k, k, x);
                } else if x == hi.2 {
                    hi.1 = k;
                } else if hi.2 - x >= prominence {
                    record(hi, true, &mut out);
                    dir = -1;
                    lo = (k, k, x);
                }
            }
            _ => {
                if x < lo.2 {
                    lo = (k, k, x);
                } else if x == lo.2 {
                    lo.1 = k;
                } else if x - lo.2 >= prominence {
                    record(lo, false, &mut out);
                    dir = 1;
                    hi = (k, k, x);
                }
            }
        }
    }
    if closed && out.last().is_some_and(|&(_, m)| !m) {
        out.push((gmax, true));
    }
    out.sort_by_key(|&(i, _)| i);
    out.dedup_by_key(|&mut (i, _)| i);
    out
}

fn check_separation(found: &[(usize, bool)], n: usize, closed: bool, what: &str) -> Result<()> {
    let gaps = found.windows(2).map(|w| w[1].0 - w[0].0);
    let wrap = if closed && found.len() > 1 {
        Some(found[0].0 + n - found[found.len() - 1].0)
    } else {
        None
    };
    if let Some(g) = gaps.chain(wrap).find(|&g| g < MIN_SEPARATION) {
        return Err(CsfError::InvalidInput(format!(
            "mesh too coarse to resolve {what}: critical points {g} samples apart"
        )));
    }
    Ok(())
}

/// Zero crossings of `kappa` with hysteresis band `band`, located at the
/// middle of the band.
fn sign_changes(curve: &PlanarCurve, g: &CurveGeometry, band: f64) -> Vec<CriticalPoint> {
    let k = &g.kappa;
    let p = curve.points();
    let mut out = Vec::new();
    let mut last: Option<(usize, bool)> = None;
    for (i, &v) in k.iter().enumerate() {
        if v.abs() <= band {
            continue;
        }
        let pos = v > 0.0;
        if let Some((j, was)) = last {
            if was != pos {
                let s = 0.5 * (g.s[j] + g.s[i]);
                let m = (j..=i).min_by(|&a, &b| (g.s[a] - s).abs().total_cmp(&(g.s[b] - s).abs())).unwrap_or(i);
                out.push(CriticalPoint {
                    index: m,
                    s,
                    point: p[m],
                    value: 0.0,
                    is_max: pos,
                });
            }
        }
        last = Some((i, pos));
    }
    out
}

/// Maximal runs of samples whose tangent stays within the sheet angle of
/// the `x¹`-axis, resampled as graphs over `x¹`.
fn extract_sheets(curve: &PlanarCurve, g: &CurveGeometry, t: f64) -> Vec<SheetGraph> {
    let c = SHEET_ANGLE_DEG.to_radians().cos();
    let p = curve.points();
    let mut out = Vec::new();
    let mut i = 0;
    while i < p.len() {
        if g.tangent[i].x.abs() <= c {
            i += 1;
            continue;
        }
        let sign = g.tangent[i].x > 0.0;
        let mut j = i;
        while j + 1 < p.len() && g.tangent[j + 1].x.abs() > c && (g.tangent[j + 1].x > 0.0) == sign {
            j += 1;
        }
        if let Some(sh) = run_to_sheet(&p[i..=j], t) {
            out.push(sh);
        }
        i = j + 1;
    }
    out
}

fn run_to_sheet(run: &[Point], t: f64) -> Option<SheetGraph> {
    if run.len() < 4 {
        return None;
    }
    let mut pts = run.to_vec();
    if pts[0].x > pts[pts.len() - 1].x {
        pts.reverse();
    }
    if pts.windows(2).any(|w| !(w[1].x > w[0].x)) {
        return None;
    }
    let (lo, hi) = (pts[0].x, pts[pts.len() - 1].x);
    let n = pts.len();
    let h = (hi - lo) / (n - 1) as f64;
    let mut seg = 0;
    let values = (0..n)
        .map(|i| {
            let x = if i + 1 == n { hi } else { lo + h * i as f64 };
            while seg + 2 < n && pts[seg + 1].x < x {
                seg += 1;
            }
            let (a, b) = (pts[seg], pts[seg + 1]);
            a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x)
        })
        .collect();
    SheetGraph::new(Axis::OverX1, lo, hi, values, t).ok()
}

/// Vertices, tips and knuckles, inflections, sheets and fingers of `curve`.
/// Tips and knuckles are maxima and minima of the distance to `basepoint`.
pub fn detect_features(curve: &PlanarCurve, basepoint: Point) -> Result<FeatureSet> {
    detect_features_at(curve, basepoint, 0.0)
}

/// [`detect_features`] with the time stamped on the extracted sheets.
pub fn detect_features_at(curve: &PlanarCurve, basepoint: Point, t: f64) -> Result<FeatureSet> {
    let g = geometry(curve)?;
    let closed = curve.is_closed();
    let n = curve.len();
    let kmax = g.kappa.iter().fold(0.0f64, |a, k| a.max(k.abs()));
    let (kmin_v, kmax_v) = g.kappa.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &k| (a.min(k), b.max(k)));
    let constant_curvature = kmax > 0.0 && kmax_v - kmin_v <= 1e-6 * kmax;

    let mut sharp = Vec::new();
    let mut flat = Vec::new();
    if kmax > 0.0 && !constant_curvature {
        let found = turning_points(&g.kappa, KAPPA_PROMINENCE * kmax, closed);
        check_separation(&found, n, closed, "curvature extrema")?;
        for (i, is_max) in found {
            let cp = refine(curve, &g, &g.kappa, i, is_max);
            // |κ| has a local maximum where κ peaks on its own sign.
            if is_max == (cp.value > 0.0) {
                sharp.push(cp);
            } else {
                flat.push(cp);
            }
        }
    }

    let r: Vec<f64> = curve.points().iter().map(|q| q.dist(basepoint)).collect();
    let rmax = r.iter().fold(0.0f64, |a, &v| a.max(v));
    let found = turning_points(&r, 1e-6 * rmax + 1e-12, closed);
    check_separation(&found, n, closed, "distance extrema")?;
    let mut tips = Vec::new();
    let mut knuckles = Vec::new();
    for (i, is_max) in found {
        let cp = refine(curve, &g, &r, i, is_max);
        if is_max {
            tips.push(cp);
        } else {
            knuckles.push(cp);
        }
    }

    let inflections = if kmax > 0.0 {
        sign_changes(curve, &g, SIGN_BAND * kmax)
    } else {
        Vec::new()
    };
    let sheets = extract_sheets(curve, &g, t);
    let fingers = if closed {
        Vec::new()
    } else {
        fingers_of(curve, &g, &sharp)?
    };
    Ok(FeatureSet {
        sharp_vertices: sharp,
        flat_vertices: flat,
        tips,
        knuckles,
        inflections,
        sheets,
        fingers,
        tails: if closed { 0 } else { 2 },
        constant_curvature,
    })
}

fn fingers_of(curve: &PlanarCurve, g: &CurveGeometry, sharp: &[CriticalPoint]) -> Result<Vec<Finger>> {
    let cross = axis_crossings(curve.points());
    let regions = match finger_regions(curve) {
        Ok(r) => r,
        Err(CsfError::RegionUndefined(_)) => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    Ok(regions
        .into_iter()
        .zip(cross.windows(2))
        .map(|(region, w)| {
            let (j0, j1) = (w[0].0, w[1].0);
            let sharp_vertices = sharp.iter().filter(|v| v.index > j0 && v.index <= j1).count();
            Finger {
                pointing: if region.vertex.x > 0.0 { Direction::Right } else { Direction::Left },
                sharp_vertices,
                crossing_turn: g.theta[j1] - g.theta[j0],
                region,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EdgeTag {
    A1,
    A2,
    B,
    Unclassified,
}

/// Classification of an edge with its discrete certificates. Curvature and
/// angle are reported after normalising the edge so that `κ` increases
/// along it and has nonnegative total.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeClass {
    pub tag: EdgeTag,
    pub inflection: Option<Point>,
    pub flat_vertex: Option<Point>,
    pub sign_changes: usize,
    pub interior_minima: usize,
    pub kappa_increasing: bool,
    pub kappa_positive: bool,
    pub kappa_convex: bool,
    pub theta_positive: bool,
    pub theta_increasing: bool,
    /// `|κ|` at the low-curvature end.
    pub kappa_tail: f64,
    pub diagnostics: Vec<String>,
}

/// Tags an edge A1 (one inflection, increasing curvature), A2 (convex with
/// one interior curvature minimum) or B (convex tail with curvature
/// increasing from zero).
pub fn classify_edge(edge: &PlanarCurve) -> Result<EdgeClass> {
    if edge.is_closed() {
        return Err(CsfError::InvalidInput("an edge is an open arc".into()));
    }
    let mut pts = edge.points().to_vec();
    let g0 = geometry(edge)?;
    let total: f64 = g0.kappa.iter().zip(&g0.ds).map(|(k, w)| k * w).sum();
    if total < 0.0 {
        pts.iter_mut().for_each(|p| p.y = -p.y);
    }
    let first = |g: &CurveGeometry| g.kappa[1];
    let last = |g: &CurveGeometry| g.kappa[g.kappa.len() - 2];
    let mut c = PlanarCurve::new(pts, edge.topology())?;
    let mut g = geometry(&c)?;
    let reversed = last(&g) < first(&g);
    if reversed {
        // Reversal with reflection keeps the sign of κ and flips its order.
        let q: Vec<Point> = c.points().iter().rev().map(|p| Point::new(p.x, -p.y)).collect();
        c = PlanarCurve::new(q, edge.topology())?;
        g = geometry(&c)?;
    }
    // Interior samples only: the one-sided end stencils are less accurate.
    let n = g.kappa.len();
    let k = &g.kappa[1..n - 1];
    let kmax = k.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if kmax == 0.0 {
        return Err(CsfError::InvalidInput("edge has no curvature".into()));
    }
    let imin = (0..k.len()).min_by(|&a, &b| k[a].abs().total_cmp(&k[b].abs())).unwrap_or(0);
    let shift = PI * (g.theta[imin + 1] / PI).round();
    let theta: Vec<f64> = g.theta[1..n - 1].iter().map(|t| t - shift).collect();

    let tol_k = 1e-5 * kmax;
    let tol_t = 1e-6;
    let kappa_increasing = k.windows(2).all(|w| w[1] >= w[0] - tol_k);
    let kappa_positive = k.iter().all(|&v| v >= -tol_k);
    let s = &g.s[1..n - 1];
    let kappa_convex = (1..k.len() - 1).all(|i| {
        let (h0, h1) = (s[i] - s[i - 1], s[i + 1] - s[i]);
        let d2 = 2.0 * (h0 * k[i + 1] - (h0 + h1) * k[i] + h1 * k[i - 1]) / (h0 * h1 * (h0 + h1));
        d2 >= -1e-3 * kmax
    });
    let theta_positive = theta.iter().all(|&v| v >= -tol_t);
    let theta_increasing = theta.windows(2).all(|w| w[1] >= w[0] - tol_t);
    let inflections = sign_changes(&c, &g, SIGN_BAND * kmax);
    let minima: Vec<usize> = turning_points(k, KAPPA_PROMINENCE * kmax, false)
        .into_iter()
        .filter(|&(_, m)| !m)
        .map(|(i, _)| i + 1)
        .collect();
    let kappa_tail = k[0].abs();
    let decays = kappa_tail <= 1e-3 * kmax;
    let unmap = |i: usize| edge.points()[if reversed { n - 1 - i } else { i }];

    let mut diagnostics = Vec::new();
    let tag = if inflections.len() == 1 && kappa_increasing && theta_positive {
        EdgeTag::A1
    } else if inflections.is_empty() && kappa_positive && minima.len() == 1 && theta_increasing {
        EdgeTag::A2
    } else if inflections.is_empty() && kappa_positive && kappa_increasing && decays {
        EdgeTag::B
    } else {
        if inflections.len() > 1 {
            diagnostics.push(format!("{} curvature sign changes", inflections.len()));
        }
        if !kappa_increasing && minima.len() != 1 {
            diagnostics.push(format!("curvature not increasing and has {} interior minima", minima.len()));
        }
        if !theta_positive {
            diagnostics.push("angle takes negative values".into());
        }
        if inflections.is_empty() && kappa_increasing && !decays {
            diagnostics.push(format!("curvature does not decay tailward (tail value {kappa_tail:e})"));
        }
        EdgeTag::Unclassified
    };
    Ok(EdgeClass {
        tag,
        inflection: (tag == EdgeTag::A1).then(|| unmap(inflections[0].index)),
        flat_vertex: (tag == EdgeTag::A2).then(|| unmap(minima[0])),
        sign_changes: inflections.len(),
        interior_minima: minima.len(),
        kappa_increasing,
        kappa_positive,
        kappa_convex,
        theta_positive,
        theta_increasing,
        kappa_tail,
        diagnostics,
    })
}

/// Sub-curve between samples `i` and `j` inclusive.
pub fn sub_curve(curve: &PlanarCurve, i: usize, j: usize) -> Result<PlanarCurve> {
    let (a, b) = (i.min(j), i.max(j));
    if b >= curve.len() || b - a < 4 {
        return Err(CsfError::InvalidInput(format!("edge [{a}, {b}] needs at least 5 samples")));
    }
    PlanarCurve::new(curve.points()[a..=b].to_vec(), crate::curve::Topology::Open)
}

#[derive(Clone, Debug, Serialize)]
pub struct StripReport {
    /// `1 + max |a_i|`.
    pub bound: f64,
    pub times: Vec<f64>,
    pub max_height: Vec<f64>,
    /// `bound − max |x²|`, minimised over time.
    pub margin: f64,
    /// Per snapshot, the smallest distance of a finger arc to the outside
    /// of the band spanned by its two axis crossings.
    pub finger_margins: Vec<f64>,
    pub verdict: Verdict,
    pub fingers_confined: bool,
}

/// Checks that every snapshot lies in `ℝ × (−A, A)` with `A = 1 + max |a_i|`
/// and that each finger stays between the heights of its axis crossings.
pub fn strip_confinement(traj: &FlowTrajectory, a: &[f64]) -> Result<StripReport> {
    if a.is_empty() {
        return Err(CsfError::MissingInput("asymptote heights".into()));
    }
    let bound = 1.0 + a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut times = Vec::new();
    let mut max_height = Vec::new();
    let mut finger_margins = Vec::new();
    for s in traj.snapshots() {
        times.push(s.t);
        max_height.push(s.curve.points().iter().fold(0.0f64, |m, p| m.max(p.y.abs())));
        let fm = if s.curve.is_closed() {
            f64::INFINITY
        } else {
            finger_regions(&s.curve)
                .unwrap_or_default()
                .iter()
                .map(|f| {
                    let (lo, hi) = (f.asymptotes.0.min(f.asymptotes.1), f.asymptotes.0.max(f.asymptotes.1));
                    f.arc.iter().fold(f64::INFINITY, |m, p| m.min((p.y - lo).min(hi - p.y)))
                })
                .fold(f64::INFINITY, f64::min)
        };
        finger_margins.push(fm);
    }
    let margin = max_height.iter().fold(f64::INFINITY, |m, h| m.min(bound - h));
    let verdict = if times.is_empty() {
        Verdict::NotApplicable
    } else if margin > 0.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let fingers_confined = finger_margins.iter().all(|&m| m >= -1e-9);
    Ok(StripReport {
        bound,
        times,
        max_height,
        margin,
        finger_margins,
        verdict,
        fingers_confined,
    })
}

/// Sharp vertex of one finger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VertexSample {
    pub t: f64,
    pub point: Point,
    pub kappa: f64,
    /// Angle between the tangent and the `x²`-axis.
    pub tilt: f64,
}

/// Locates the curvature peak inside finger `id` (1-based, as in
/// [`finger_regions`]).
pub fn finger_vertex(curve: &PlanarCurve, id: usize, t: f64) -> Result<VertexSample> {
    if curve.is_closed() {
        return Err(CsfError::RegionUndefined("finger vertices need an open curve".into()));
    }
    let cross = axis_crossings(curve.points());
    if id == 0 || id >= cross.len() {
        return Err(CsfError::RegionUndefined(format!("finger {id} not found")));
    }
    let (j0, j1) = (cross[id - 1].0 + 1, cross[id].0);
    if j1 < j0 {
        return Err(CsfError::RegionUndefined(format!("finger {id} has no samples")));
    }
    let g = geometry(curve)?;
    let absk: Vec<f64> = g.kappa.iter().map(|k| k.abs()).collect();
    let i = (j0..=j1).max_by(|&a, &b| absk[a].total_cmp(&absk[b])).unwrap_or(j0);
    let cp = refine(curve, &g, &absk, i, true);
    let idx = stencil(i, curve.len(), false);
    let u = stencil_offsets(&g, &idx, i, 0.0);
    let p = curve.points();
    let us = cp.s - g.s[i];
    let dx = quadratic_fit(&u, &idx.iter().map(|&j| p[j].x).collect::<Vec<_>>());
    let dy = quadratic_fit(&u, &idx.iter().map(|&j| p[j].y).collect::<Vec<_>>());
    let tangent = match (dx, dy) {
        (Some(a), Some(b)) => Point::new(a[1] + 2.0 * a[2] * us, b[1] + 2.0 * b[2] * us),
        _ => g.tangent[i],
    };
    let tn = tangent.norm();
    Ok(VertexSample {
        t,
        point: cp.point,
        kappa: cp.value,
        tilt: (tangent.x.abs() / tn).asin(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexReport {
    pub samples: Vec<VertexSample>,
    /// `d v¹/dt` by finite differences in time.
    pub speed: Vec<f64>,
    /// `π / |Δa|`.
    pub reference: f64,
    /// `−3 / (2A)`, the bound on the inward tip velocity.
    pub speed_bound: f64,
    pub pointing: Direction,
}

impl VertexReport {
    /// Smallest `|κ(v)| − 0.98 π/|Δa|` over `t ≤ t_max`.
    pub fn kappa_margin(&self, t_max: f64) -> f64 {
        self.window(t_max)
            .map(|(s, _)| s.kappa - 0.98 * self.reference)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest `|θ(v) − π/2|` over `t ≤ t_max`.
    pub fn max_tilt(&self, t_max: f64) -> f64 {
        self.window(t_max).map(|(s, _)| s.tilt).fold(0.0, f64::max)
    }

    /// Largest `| |v¹'| / (π/|Δa|) − 1 |` over `t ≤ t_max`.
    pub fn speed_error(&self, t_max: f64) -> f64 {
        self.window(t_max)
            .map(|(_, v)| (v.abs() / self.reference - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Whether the inward tip velocity respects `−3/(2A)` for `t ≤ t_max`.
    pub fn respects_speed_bound(&self, t_max: f64) -> bool {
        let sigma = self.pointing.sign();
        self.window(t_max).all(|(_, v)| sigma * v <= self.speed_bound)
    }

    fn window(&self, t_max: f64) -> impl Iterator<Item = (&VertexSample, f64)> {
        self.samples.iter().zip(self.speed.iter().copied()).filter(move |(s, _)| s.t <= t_max)
    }
}

/// Central differences on a nonuniform grid, one-sided at the ends.
fn time_derivative(t: &[f64], v: &[f64]) -> Vec<f64> {
    let n = t.len();
    if n < 2 {
        return vec![f64::NAN; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (v[b] - v[a]) / (t[b] - t[a])
        })
        .collect()
}

/// Tracks the sharp vertex of finger `id` through `traj`. `delta_a` is the
/// finger width and `a` the asymptote heights for the strip constant.
pub fn vertex_asymptotics(traj: &FlowTrajectory, id: usize, delta_a: f64, a: &[f64]) -> Result<VertexReport> {
    if !(delta_a > 0.0) {
        return Err(CsfError::InvalidInput("finger width must be positive".into()));
    }
    let mut samples: Vec<VertexSample> = Vec::new();
    for s in traj.snapshots() {
        let v = finger_vertex(&s.curve, id, s.t)?;
        if let Some(prev) = samples.last() {
            // Displacement gate of three curvature radii per time step.
            let steps = ((s.t - prev.t) / s.dt).ceil().max(1.0);
            let gate = 3.0 * steps / prev.kappa.abs().max(1e-300);
            let moved = v.point.dist(prev.point);
            if moved > gate {
                return Err(CsfError::InvalidInput(format!(
                    "lost track of finger {id} at t = {}: vertex moved {moved}",
                    s.t
                )));
            }
        }
        samples.push(v);
    }
    let t: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let x: Vec<f64> = samples.iter().map(|s| s.point.x).collect();
    let speed = time_derivative(&t, &x);
    let bound = 1.0 + a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pointing = match samples.first() {
        Some(s) if s.point.x < 0.0 => Direction::Left,
        _ => Direction::Right,
    };
    Ok(VertexReport {
        samples,
        speed,
        reference: PI / delta_a,
        speed_bound: -3.0 / (2.0 * bound),
        pointing,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HeightDecay {
    pub a: f64,
    /// Decay rate; `None` when the sheet coincides with its asymptote.
    pub beta: Option<f64>,
    pub r_squared: f64,
    /// Samples inside the exponential regime.
    pub samples: usize,
    pub pass: bool,
}

/// Lower and upper limits of `|U − a|` treated as the exponential regime.
const DECAY_FLOOR: f64 = 1e-11;
const DECAY_CEILING: f64 = 1e-2;

/// Fits `log sup |U − a|` against the distance to the nearest vertex
/// abscissa. With `a = None` the asymptote is read off the sample farthest
/// from the vertices.
pub fn height_decay_fit(sheet: &SheetGraph, vertices: &[f64], a: Option<f64>) -> Result<HeightDecay> {
    if vertices.is_empty() {
        return Err(CsfError::MissingInput("vertex abscissae".into()));
    }
    let xs = sheet.xs();
    let dist: Vec<f64> = xs
        .iter()
        .map(|x| vertices.iter().fold(f64::INFINITY, |m, v| m.min((x - v).abs())))
        .collect();
    let far = (0..xs.len()).max_by(|&i, &j| dist[i].total_cmp(&dist[j])).unwrap_or(0);
    let a = a.unwrap_or(sheet.values[far]);
    let err: Vec<f64> = sheet.values.iter().map(|u| (u - a).abs()).collect();
    // Envelope sup{|U − a| : distance ≥ d}.
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| dist[j].total_cmp(&dist[i]));
    let mut env = vec![0.0; xs.len()];
    let mut run = 0.0f64;
    for &i in &order {
        run = run.max(err[i]);
        env[i] = run;
    }
    let (d, l): (Vec<f64>, Vec<f64>) = (0..xs.len())
        .filter(|&i| env[i] > DECAY_FLOOR && env[i] < DECAY_CEILING)
        .map(|i| (dist[i], env[i].ln()))
        .unzip();
    if err.iter().all(|&e| e <= DECAY_FLOOR) {
        return Ok(HeightDecay {
            a,
            beta: None,
            r_squared: 1.0,
            samples: 0,
            pass: true,
        });
    }
    if d.len() < 8 {
        return Err(CsfError::InvalidInput(format!(
            "insufficient range: {} samples in the exponential regime",
            d.len()
        )));
    }
    let fit = affine_fit(&d, &l)?;
    Ok(HeightDecay {
        a,
        beta: Some(-fit.slope),
        r_squared: fit.r_squared,
        samples: d.len(),
        pass: fit.slope < 0.0 && fit.r_squared >= 0.98,
    })
}

/// Closed-form area of the part of a grim reaper finger beyond the
/// `x²`-axis, up to exponentially small terms: `Δa·x_tip − Δa² ln 2 / π`
/// (mirrored for Left pointing fingers).
pub fn reaper_area(r: &GrimReaperSpec, t: f64) -> f64 {
    let w = r.width();
    w * r.pointing.sign() * r.tip_abscissa(t) - w * w * LN_2 / PI
}

#[derive(Clone, Debug, Serialize)]
pub struct BestReaper {
    pub reaper: GrimReaperSpec,
    pub b: f64,
    /// Intercept of the area fit.
    pub c0: f64,
    pub fit: AffineFit,
    pub times: Vec<f64>,
    pub areas: Vec<f64>,
    /// `|F Δ F̂_b|` per snapshot.
    pub symmetric_difference: Vec<f64>,
}

/// Relative tolerance on the area slope against `−π`.
pub const AREA_SLOPE_TOLERANCE: f64 = 0.02;

/// Best-fitting grim reaper of finger `id`: the shift `b` is the unique
/// value whose closed-form area intercept matches the fitted one.
pub fn fit_best_reaper(traj: &FlowTrajectory, id: usize) -> Result<BestReaper> {
    let mut times = Vec::new();
    let mut areas = Vec::new();
    let mut regions = Vec::new();
    for s in traj.snapshots() {
        let f = finger_regions(&s.curve)?
            .into_iter()
            .find(|f| f.id == id)
            .ok_or_else(|| CsfError::RegionUndefined(format!("finger {id} lost at t = {}", s.t)))?;
        times.push(s.t);
        areas.push(f.area);
        regions.push(f);
    }
    let fit = affine_fit(&times, &areas)?;
    if (fit.slope / -PI - 1.0).abs() > AREA_SLOPE_TOLERANCE {
        return Err(CsfError::NotApplicable(format!(
            "not in the translating regime: area slope {} is not within 2% of -π",
            fit.slope
        )));
    }
    // Crossings are closest to the asymptotes at the earliest time.
    let first = &regions[0];
    let (a_lo, a_hi) = (
        first.asymptotes.0.min(first.asymptotes.1),
        first.asymptotes.0.max(first.asymptotes.1),
    );
    let pointing = if first.vertex.x > 0.0 { Direction::Right } else { Direction::Left };
    let w = a_hi - a_lo;
    let b = pointing.sign() * (fit.intercept + w * w * LN_2 / PI) / w;
    let reaper = GrimReaperSpec::new(a_lo, a_hi, b, pointing)?;
    let symmetric_difference = regions
        .iter()
        .zip(&times)
        .map(|(f, &t)| symmetric_difference(&f.arc, &reaper, t))
        .collect();
    Ok(BestReaper {
        reaper,
        b,
        c0: fit.intercept,
        fit,
        times,
        areas,
        symmetric_difference,
    })
}

/// `∫ |X(y)₊ − X̂(y)₊| dy` between a finger arc, read as a graph over `x²`,
/// and the region of `reaper` beyond the axis.
fn symmetric_difference(arc: &[Point], reaper: &GrimReaperSpec, t: f64) -> f64 {
    let sigma = reaper.pointing.sign();
    let depth = |p: Point| {
        let z = p.y - reaper.mid();
        let xhat = reaper.point(t, z).map(|q| (sigma * q.x).max(0.0)).unwrap_or(0.0);
        ((sigma * p.x).max(0.0) - xhat).abs()
    };
    arc.windows(2)
        .map(|w| 0.5 * (depth(w[0]) + depth(w[1])) * (w[1].y - w[0].y).abs())
        .sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct TipLimit {
    pub times: Vec<f64>,
    /// `‖v(t) + σ (π/|Δa|) t 𝐞₁ − (b, mid)‖`.
    pub residuals: Vec<f64>,
    pub decreasing: bool,
    pub pass: bool,
}

/// Distance of the tracked vertex from the tip of the best-fitting reaper.
pub fn tip_limit_check(traj: &FlowTrajectory, id: usize, best: &BestReaper) -> Result<TipLimit> {
    let mut times = Vec::new();
    let mut residuals = Vec::new();
    for s in traj.snapshots() {
        let v = finger_vertex(&s.curve, id, s.t)?;
        times.push(s.t);
        residuals.push(v.point.dist(best.reaper.tip(s.t)));
    }
    let decreasing = residuals.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6) + 1e-9);
    let pass = decreasing && residuals.last().is_some_and(|&r| r <= 0.05);
    Ok(TipLimit {
        times,
        residuals,
        decreasing,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum ConfigPattern {
    /// Too few fingers for a trombone.
    TooFewFingers,
    /// Two neighbouring heights coincide, giving a degenerate finger.
    DegenerateFinger { index: usize },
    /// Heights turn downward at `a[index]`; `nested` lists properly nested
    /// pairs of finger intervals and `case` the branch of the exclusion
    /// argument (1: `a[i+1] < a[i−1] < a[i]`, 2: `a[i−1] ≤ a[i+1] < a[i]`).
    ProperNesting { index: usize, case: u8, nested: Vec<(usize, usize)> },
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigVerdict {
    pub verdict: Verdict,
    pub pattern: Option<ConfigPattern>,
    pub message: String,
}

/// Accepts asymptote heights only when strictly increasing with `m ≥ 2`,
/// otherwise reports the forbidden pattern.
pub fn validate_config(a: &[f64]) -> ConfigVerdict {
    let fail = |pattern: ConfigPattern, message: String| ConfigVerdict {
        verdict: Verdict::Fail,
        pattern: Some(pattern),
        message,
    };
    if a.len() < 3 {
        return fail(ConfigPattern::TooFewFingers, format!("need m >= 2 fingers, got {}", a.len().saturating_sub(1)));
    }
    if let Some(i) = (1..a.len()).find(|&i| a[i] == a[i - 1]) {
        return fail(
            ConfigPattern::DegenerateFinger { index: i },
            format!("degenerate finger: a[{}] = a[{i}] = {}", i - 1, a[i]),
        );
    }
    let Some(i) = (1..a.len() - 1).find(|&i| a[i - 1] < a[i] && a[i + 1] < a[i]).or_else(|| {
        // Heights that start downward are the mirror case.
        (a[1] < a[0]).then_some(0)
    }) else {
        return ConfigVerdict {
            verdict: Verdict::Pass,
            pattern: None,
            message: "heights strictly increasing".into(),
        };
    };
    let interval = |j: usize| (a[j - 1].min(a[j]), a[j - 1].max(a[j]));
    let mut nested = Vec::new();
    for p in 1..a.len() {
        for q in 1..a.len() {
            let (x, y) = (interval(p), interval(q));
            if p != q && y.0 <= x.0 && x.1 <= y.1 && x != y {
                nested.push((p, q));
            }
        }
    }
    let case = if i > 0 && a[i + 1] < a[i - 1] { 1 } else { 2 };
    let list: Vec<String> = nested.iter().map(|(p, q)| format!("I{p} in I{q}")).collect();
    fail(
        ConfigPattern::ProperNesting { index: i, case, nested },
        format!(
            "heights not increasing at a[{i}]: proper nesting of fingers ({})",
            if list.is_empty() { "reversed order".to_string() } else { list.join(", ") }
        ),
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct L1Report {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Largest `A(t_{k+1}) / A(t_k) − 1`.
    pub worst_increase: f64,
    pub verdict: Verdict,
}

/// Relative per-step slack in the monotonicity test.
pub const L1_TOLERANCE: f64 = 1e-6;
/// `A(t)` between two flows on a common time grid; passes when it never
/// grows by more than [`L1_TOLERANCE`] relative per recorded step.
pub fn l1_contraction_check(a: &FlowTrajectory, b: &FlowTrajectory) -> Result<L1Report> {
    let (ta, tb) = (a.times(), b.times());
    if ta.len() != tb.len() || ta.iter().zip(&tb).any(|(x, y)| (x - y).abs() > 1e-9 * (1.0 + x.abs())) {
        return Err(CsfError::InvalidInput("L1 check needs a common time grid".into()));
    }
    let values = a
        .snapshots()
        .iter()
        .zip(b.snapshots())
        .map(|(x, y)| curve_l1_distance(&x.curve, &y.curve))
        .collect::<Result<Vec<f64>>>()?;
    let scale = values.iter().fold(0.0f64, |m, v| m.max(*v));
    let worst_increase = values
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] - 1.0 } else if w[1] > 0.0 { f64::INFINITY } else { 0.0 })
        .fold(f64::NEG_INFINITY, f64::max);
    let ok = values.windows(2).all(|w| w[1] <= w[0] * (1.0 + L1_TOLERANCE) + 1e-15 * scale);
    Ok(L1Report {
        times: ta,
        values,
        worst_increase,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeReport {
    pub times: Vec<f64>,
    /// `sup |x²/x¹|` over `|x¹| ≥ Λ √(−t)` per snapshot.
    pub sup_ratio: Vec<f64>,
    pub delta: f64,
    pub lambda: f64,
    pub verdict: Verdict,
}

pub fn asymptotic_slope_check(traj: &FlowTrajectory, delta: f64, lambda: f64) -> SlopeReport {
    let mut times = Vec::new();
    let mut sup_ratio = Vec::new();
    for s in traj.snapshots() {
        let r = lambda * (-s.t).max(0.0).sqrt();
        let sup = s
            .curve
            .points()
            .iter()
            .filter(|p| p.x.abs() >= r && p.x != 0.0)
            .fold(0.0f64, |m, p| m.max((p.y / p.x).abs()));
        times.push(s.t);
        sup_ratio.push(sup);
    }
    let verdict = if sup_ratio.iter().all(|&v| v < delta) { Verdict::Pass } else { Verdict::Fail };
    SlopeReport {
        times,
        sup_ratio,
        delta,
        lambda,
        verdict,
    }
}

/// `ln(π/2 − |φ|)` on the unit reaper `(ln cos φ, φ)` at depth
/// `u = −ln cos φ`, accurate where `π/2 − |φ|` underflows.
pub fn reaper_log_angle_gap(u: f64) -> f64 {
    let w = (-u).exp();
    if w < 1e-4 {
        // asin(w)/w = 1 + w²/6 + O(w⁴)
        -u + (w * w / 6.0).ln_1p()
    } else {
        w.asin().ln()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AngleDistanceReport {
    pub samples: usize,
    /// Smallest `ln(π/2 − |φ|) + d`.
    pub lower_margin: f64,
    /// Smallest `−0.98 d − ln(π/2 − |φ|)`.
    pub upper_margin: f64,
    pub holds: bool,
}

/// Checks `e^{−d} ≤ π/2 − |φ| ≤ e^{−0.98 d}` on the unit reaper for tip
/// distances `d` in `[d_lo, d_hi]`, in logarithmic form.
pub fn angle_distance_check(d_lo: f64, d_hi: f64, samples: usize) -> Result<AngleDistanceReport> {
    if !(d_hi >= d_lo && d_lo > FRAC_PI_2) || samples < 2 {
        return Err(CsfError::InvalidInput("need π/2 < d_lo ≤ d_hi and two samples".into()));
    }
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for i in 0..samples {
        let d = d_lo + (d_hi - d_lo) * i as f64 / (samples - 1) as f64;
        // Solve d² = u² + φ(u)² with φ = π/2 − gap(u).
        let mut u = d;
        for _ in 0..50 {
            let phi = FRAC_PI_2 - reaper_log_angle_gap(u).exp();
            let next = (d * d - phi * phi).sqrt();
            if (next - u).abs() <= 1e-15 * d {
                u = next;
                break;
            }
            u = next;
        }
        let lg = reaper_log_angle_gap(u);
        lower_margin = lower_margin.min(lg + d);
        upper_margin = upper_margin.min(-0.98 * d - lg);
    }
    Ok(AngleDistanceReport {
        samples,
        lower_margin,
        upper_margin,
        holds: lower_margin >= 0.0 && upper_margin >= 0.0,
    })
}
