//! Time stepping for parametric and graphical curve shortening flow, the
//! rescaled-flow coordinate change and avoidance monitoring.

use crate::curve::{resample_arclength, self_intersects, PlanarCurve, Topology};
use crate::error::{CsfError, Result};
use crate::exact::GrimReaperSpec;
use crate::linalg::{solve_cyclic_tridiagonal, solve_tridiagonal};
use crate::point::{point_segment_distance, Point};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Explicit => "explicit",
            Scheme::SemiImplicit => "semi-implicit",
        }
    }

    pub fn parse(s: &str) -> Result<Scheme> {
        match s {
            "explicit" => Ok(Scheme::Explicit),
            "semi-implicit" | "semi_implicit" | "semiimplicit" => Ok(Scheme::SemiImplicit),
            _ => Err(CsfError::Parse(format!("unknown scheme `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowSnapshot {
    pub t: f64,
    pub curve: PlanarCurve,
    pub scheme: Scheme,
    pub dt: f64,
}

/// Snapshots with strictly increasing times and a common topology.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlowTrajectory {
    snapshots: Vec<FlowSnapshot>,
}

impl FlowTrajectory {
    pub fn new() -> Self {
        FlowTrajectory::default()
    }

    pub fn push(&mut self, snap: FlowSnapshot) -> Result<()> {
        if let Some(last) = self.snapshots.last() {
            if snap.t <= last.t {
                return Err(CsfError::InvalidInput(format!(
                    "snapshot times must increase: {} after {}",
                    snap.t, last.t
                )));
            }
            if snap.curve.topology() != last.curve.topology() {
                return Err(CsfError::InvalidInput("topology changed within trajectory".into()));
            }
        }
        self.snapshots.push(snap);
        Ok(())
    }

    pub fn from_snapshots(snaps: Vec<FlowSnapshot>) -> Result<Self> {
        let mut tr = FlowTrajectory::new();
        for s in snaps {
            tr.push(s)?;
        }
        Ok(tr)
    }

    pub fn snapshots(&self) -> &[FlowSnapshot] {
        &self.snapshots
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn last(&self) -> Option<&FlowSnapshot> {
        self.snapshots.last()
    }
}

/// How the endpoints of an open curve move.
#[derive(Clone)]
pub enum EndCondition {
    Fixed,
    /// Both ends move with a constant velocity.
    Translate(Point),
    /// New endpoint from the time and the previous endpoint.
    Prescribed(Arc<dyn Fn(f64, Point) -> Point + Send + Sync>),
}

impl fmt::Debug for EndCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EndCondition::Fixed => write!(f, "Fixed"),
            EndCondition::Translate(v) => write!(f, "Translate({v:?})"),
            EndCondition::Prescribed(_) => write!(f, "Prescribed(..)"),
        }
    }
}

impl EndCondition {
    fn apply(&self, t_new: f64, dt: f64, old: Point) -> Point {
        match self {
            EndCondition::Fixed => old,
            EndCondition::Translate(v) => old + *v * dt,
            EndCondition::Prescribed(f) => f(t_new, old),
        }
    }
}

/// Explicit steps must satisfy `dt ≤ CFL_FACTOR · h_min²`.
pub const CFL_FACTOR: f64 = 0.4;
/// Relative spacing drift that triggers a resample.
pub const DRIFT_TOLERANCE: f64 = 0.05;
/// Steps between periodic resamples.
pub const RESAMPLE_EVERY: usize = 50;
/// Relaxation weight of the tangential redistribution.
const REDISTRIBUTION: f64 = 0.5;

#[derive(Clone, Debug)]
pub struct StepOptions {
    pub scheme: Scheme,
    pub ends: EndCondition,
    pub check_embedded: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions {
            scheme: Scheme::SemiImplicit,
            ends: EndCondition::Fixed,
            check_embedded: false,
        }
    }
}

fn neighbours(p: &[Point], i: usize, closed: bool) -> (Point, Point) {
    let n = p.len();
    if closed {
        (p[(i + n - 1) % n], p[(i + 1) % n])
    } else {
        (p[i - 1], p[i + 1])
    }
}

/// Curvature vector `κ n` at each interior sample from the circle through
/// three consecutive samples. Open-curve endpoints get zero.
pub fn curvature_vectors(p: &[Point], closed: bool) -> Vec<Point> {
    let n = p.len();
    let mut out = vec![Point::default(); n];
    let range = if closed { 0..n } else { 1..n - 1 };
    for i in range {
        let (pm, pp) = neighbours(p, i, closed);
        let a = p[i] - pm;
        let b = pp - p[i];
        let hm = a.norm();
        let hp = b.norm();
        let c = (pp - pm).norm();
        let kappa = 2.0 * a.cross(b) / (hm * hp * c);
        let d = b * (hm * hm) + a * (hp * hp);
        out[i] = d.normalized().perp() * kappa;
    }
    out
}

pub fn min_spacing(p: &[Point], closed: bool) -> f64 {
    let n = p.len();
    let segs = if closed { n } else { n - 1 };
    (0..segs)
        .map(|i| p[i].dist(p[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Largest relative deviation of the segment lengths from their mean.
pub fn spacing_drift(p: &[Point], closed: bool) -> f64 {
    let (mut sum, mut lo, mut hi) = (0.0, f64::INFINITY, 0.0f64);
    let mut seg = |l: f64| {
        sum += l;
        lo = lo.min(l);
        hi = hi.max(l);
    };
    p.windows(2).for_each(|w| seg((w[1] - w[0]).norm_unscaled()));
    if closed {
        seg((p[0] - p[p.len() - 1]).norm_unscaled());
    }
    let segs = if closed { p.len() } else { p.len() - 1 };
    let mean = sum / segs as f64;
    (hi / mean - 1.0).max(1.0 - lo / mean)
}

/// Segment lengths; closed curves get the closing segment last.
fn segment_lengths(p: &[Point], closed: bool) -> Vec<f64> {
    let mut h: Vec<f64> = p.windows(2).map(|w| (w[1] - w[0]).norm_unscaled()).collect();
    if closed {
        h.push((p[0] - p[p.len() - 1]).norm_unscaled());
    }
    h
}

fn semi_implicit_positions(p: &[Point], closed: bool, dt: f64, ends: (Point, Point)) -> Vec<Point> {
    let n = p.len();
    let h = segment_lengths(p, closed);
    let mut lower = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n];
    let mut row = |i: usize, hm: f64, hp: f64| {
        let w = 2.0 * dt / (hm + hp);
        lower[i] = -w / hm;
        upper[i] = -w / hp;
        diag[i] = 1.0 + w / hm + w / hp;
    };
    for i in 1..n - 1 {
        row(i, h[i - 1], h[i]);
    }
    let mut q = p.to_vec();
    if closed {
        row(0, h[n - 1], h[0]);
        row(n - 1, h[n - 2], h[n - 1]);
        solve_cyclic_tridiagonal(&lower, &diag, &upper, &mut q);
    } else {
        q[0] = ends.0;
        q[n - 1] = ends.1;
        solve_tridiagonal(&lower, &diag, &upper, &mut q);
    }
    q
}

/// Slides interior samples along the local chord direction toward equal
/// spacing.
fn redistribute(p: &mut [Point], closed: bool) {
    let n = p.len();
    let h = segment_lengths(p, closed);
    let first = p[0];
    let mut prev = if closed { p[n - 1] } else { first };
    let range = if closed { 0..n } else { 1..n - 1 };
    for i in range {
        let next = if i + 1 < n { p[i + 1] } else { first };
        let (lm, lp) = (if i == 0 { h[n - 1] } else { h[i - 1] }, h[i]);
        let chord = next - prev;
        prev = p[i];
        let len = chord.norm_unscaled();
        if len == 0.0 {
            continue;
        }
        p[i] += chord * (REDISTRIBUTION * 0.5 * (lp - lm) / len);
    }
}

/// One step of `γ_t = κ n` followed by tangential redistribution.
pub fn step_parametric(snap: &FlowSnapshot, dt: f64, opts: &StepOptions) -> Result<FlowSnapshot> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CsfError::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let curve = &snap.curve;
    let p = curve.points();
    let closed = curve.is_closed();
    let n = p.len();
    let t_new = snap.t + dt;
    let ends = if closed {
        (p[0], p[n - 1])
    } else {
        (
            opts.ends.apply(t_new, dt, p[0]),
            opts.ends.apply(t_new, dt, p[n - 1]),
        )
    };
    let mut q = match opts.scheme {
        Scheme::Explicit => {
            let limit = CFL_FACTOR * min_spacing(p, closed).powi(2);
            if dt > limit {
                return Err(CsfError::CflViolation { dt, limit });
            }
            let k = curvature_vectors(p, closed);
            let mut q: Vec<Point> = p.iter().zip(&k).map(|(a, v)| *a + *v * dt).collect();
            if !closed {
                q[0] = ends.0;
                q[n - 1] = ends.1;
            }
            q
        }
        Scheme::SemiImplicit => semi_implicit_positions(p, closed, dt, ends),
    };
    redistribute(&mut q, closed);
    if q.iter().any(|v| !v.is_finite()) {
        return Err(CsfError::NonFinite(format!("curve after step to t = {t_new}")));
    }
    let next = PlanarCurve::new(q, curve.topology())?;
    if opts.check_embedded && self_intersects(&next).is_some() {
        return Err(CsfError::EmbeddednessLost { t: t_new });
    }
    Ok(FlowSnapshot {
        t: t_new,
        curve: next,
        scheme: opts.scheme,
        dt,
    })
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub dt: f64,
    pub scheme: Scheme,
    pub ends: EndCondition,
    /// Record a snapshot every this much time (always records the ends).
    pub record_every: Option<f64>,
    pub resample_every: usize,
    pub drift_tolerance: f64,
    /// Keep this arclength spacing when resampling; otherwise keep the count.
    pub spacing: Option<f64>,
    /// Self-intersection test at every resample and record.
    pub check_embedded: bool,
}

impl EvolveOptions {
    pub fn new(dt: f64, scheme: Scheme) -> Self {
        EvolveOptions {
            dt,
            scheme,
            ends: EndCondition::Fixed,
            record_every: None,
            resample_every: RESAMPLE_EVERY,
            drift_tolerance: DRIFT_TOLERANCE,
            spacing: None,
            check_embedded: false,
        }
    }
}

fn resample_keep(curve: &PlanarCurve, spacing: Option<f64>) -> Result<PlanarCurve> {
    let n = match spacing {
        Some(h) => ((curve.polyline_length() / h).round() as usize + 1).max(16),
        None => curve.len(),
    };
    resample_arclength(curve, n)
}

/// Evolves `curve` from `t0` to `t1`, calling `record` on every recorded
/// snapshot instead of storing them.
pub fn evolve_with(
    curve: &PlanarCurve,
    t0: f64,
    t1: f64,
    opts: &EvolveOptions,
    mut record: impl FnMut(&FlowSnapshot) -> Result<()>,
) -> Result<FlowSnapshot> {
    if !(t1 > t0) {
        return Err(CsfError::InvalidInput(format!("need t0 < t1, got {t0} and {t1}")));
    }
    let step_opts = StepOptions {
        scheme: opts.scheme,
        ends: opts.ends.clone(),
        check_embedded: false,
    };
    let mut snap = FlowSnapshot {
        t: t0,
        curve: curve.clone(),
        scheme: opts.scheme,
        dt: opts.dt,
    };
    record(&snap)?;
    let cadence = opts.record_every.unwrap_or(t1 - t0);
    let mut next_record = t0 + cadence;
    let mut since_resample = 0usize;
    let eps = 1e-12 * (1.0 + t1.abs());
    while snap.t < t1 - eps {
        let target = next_record.min(t1);
        let dt = opts.dt.min(target - snap.t);
        snap = step_parametric(&snap, dt, &step_opts)?;
        if target - snap.t <= eps {
            snap.t = target;
        }
        since_resample += 1;
        let closed = snap.curve.is_closed();
        let due = since_resample >= opts.resample_every
            || spacing_drift(snap.curve.points(), closed) > opts.drift_tolerance;
        if due {
            snap.curve = resample_keep(&snap.curve, opts.spacing)?;
            since_resample = 0;
            if opts.check_embedded && self_intersects(&snap.curve).is_some() {
                return Err(CsfError::EmbeddednessLost { t: snap.t });
            }
        }
        if snap.t >= next_record - eps || snap.t >= t1 - eps {
            if opts.check_embedded && self_intersects(&snap.curve).is_some() {
                return Err(CsfError::EmbeddednessLost { t: snap.t });
            }
            snap.dt = opts.dt;
            record(&snap)?;
            next_record += cadence;
        }
    }
    Ok(snap)
}

/// Evolves `curve` from `t0` to `t1` and returns the recorded snapshots.
pub fn evolve(curve: &PlanarCurve, t0: f64, t1: f64, opts: &EvolveOptions) -> Result<FlowTrajectory> {
    let mut tr = FlowTrajectory::new();
    evolve_with(curve, t0, t1, opts, |s| tr.push(s.clone()))?;
    Ok(tr)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// `x² = U(x¹)`.
    OverX1,
    /// `x¹ = U(x²)`.
    OverX2,
}

/// Largest admissible slope of a graphical profile, `tan 80°`.
pub fn max_graph_slope() -> f64 {
    80f64.to_radians().tan()
}

/// Profile of a graph on a uniform grid including both ends of `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetGraph {
    pub axis: Axis,
    pub lo: f64,
    pub hi: f64,
    pub values: Vec<f64>,
    pub t: f64,
}

impl SheetGraph {
    pub fn new(axis: Axis, lo: f64, hi: f64, values: Vec<f64>, t: f64) -> Result<Self> {
        if values.len() < 3 || !(hi > lo) {
            return Err(CsfError::InvalidInput("sheet needs >= 3 samples on a nondegenerate domain".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CsfError::NonFinite("sheet profile".into()));
        }
        let s = SheetGraph {
            axis,
            lo,
            hi,
            values,
            t,
        };
        let slope = s.max_slope();
        if slope >= max_graph_slope() {
            return Err(CsfError::GraphicalityLost(format!("|U_x| = {slope} at t = {t}")));
        }
        Ok(s)
    }

    /// Samples `f` on `n` grid points.
    pub fn from_fn(axis: Axis, lo: f64, hi: f64, n: usize, t: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = (hi - lo) / (n - 1) as f64;
        SheetGraph::new(axis, lo, hi, (0..n).map(|i| f(lo + h * i as f64)).collect(), t)
    }

    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / (self.values.len() - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.lo + self.h() * i as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.x(i)).collect()
    }

    pub fn max_slope(&self) -> f64 {
        let h = self.h();
        self.values
            .windows(2)
            .map(|w| ((w[1] - w[0]) / h).abs())
            .fold(0.0, f64::max)
    }

    /// Cubic Lagrange interpolation of the profile at `x` inside the domain.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let span = self.hi - self.lo;
        if x < self.lo - 1e-12 * span || x > self.hi + 1e-12 * span {
            return Err(CsfError::OutOfDomain(format!(
                "x = {x} outside [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(cubic_eval(&self.values, self.lo, self.h(), x))
    }

    /// The graph as an open planar curve.
    pub fn to_curve(&self) -> Result<PlanarCurve> {
        let pts = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &u)| {
                let x = self.x(i);
                match self.axis {
                    Axis::OverX1 => Point::new(x, u),
                    Axis::OverX2 => Point::new(u, x),
                }
            })
            .collect();
        PlanarCurve::new(pts, Topology::Open)
    }
}

/// Cubic Lagrange interpolation on a uniform grid.
pub fn cubic_eval(values: &[f64], lo: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    let f = ((x - lo) / h).clamp(0.0, (n - 1) as f64);
    let i = (f.floor() as usize).min(n - 2);
    let s = if n >= 4 { i.saturating_sub(1).min(n - 4) } else { 0 };
    let m = n.min(4);
    let mut acc = 0.0;
    for j in 0..m {
        let mut w = 1.0;
        for k in 0..m {
            if k != j {
                w *= (f - (s + k) as f64) / (j as f64 - k as f64);
            }
        }
        acc += w * values[s + j];
    }
    acc
}

/// Boundary treatment for [`step_graphical`].
#[derive(Clone)]
pub enum Boundary {
    Dirichlet(f64, f64),
    /// The first and last samples are the same point of a periodic profile.
    Periodic,
    /// Both ends follow the arm of an exact grim reaper at the new time.
    ExactTail { reaper: GrimReaperSpec, upper: bool },
    /// End values from `(t, x)`.
    Prescribed(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Dirichlet(a, b) => write!(f, "Dirichlet({a}, {b})"),
            Boundary::Periodic => write!(f, "Periodic"),
            Boundary::ExactTail { reaper, upper } => {
                write!(f, "ExactTail({reaper:?}, upper = {upper})")
            }
            Boundary::Prescribed(_) => write!(f, "Prescribed(..)"),
        }
    }
}

/// One semi-implicit step of `U_t = U_xx / (1 + U_x²)` with the factor
/// `1/(1 + U_x²)` lagged.
pub fn step_graphical(sheet: &SheetGraph, dt: f64, bc: &Boundary) -> Result<SheetGraph> {
    if !(dt > 0.0) {
        return Err(CsfError::InvalidInput(format!("time step must be positive, got {dt}")));
    }
    let u = &sheet.values;
    let n = u.len();
    let h = sheet.h();
    let r = dt / (h * h);
    let t_new = sheet.t + dt;
    let coeff = |im: f64, ip: f64| {
        let ux = (ip - im) / (2.0 * h);
        1.0 / (1.0 + ux * ux)
    };
    let mut out;
    match bc {
        Boundary::Periodic => {
            let m = n - 1;
            let mut lower = vec![0.0; m];
            let mut diag = vec![0.0; m];
            let mut upper = vec![0.0; m];
            for i in 0..m {
                let c = coeff(u[(i + m - 1) % m], u[(i + 1) % m]) * r;
                lower[i] = -c;
                upper[i] = -c;
                diag[i] = 1.0 + 2.0 * c;
            }
            out = u[..m].to_vec();
            solve_cyclic_tridiagonal(&lower, &diag, &upper, &mut out);
            out.push(out[0]);
        }
        _ => {
            let (left, right) = match bc {
                Boundary::Dirichlet(a, b) => (*a, *b),
                Boundary::ExactTail { reaper, upper } => {
                    let f = |x: f64| {
                        reaper.arm_height(t_new, x, *upper).ok_or_else(|| {
                            CsfError::OutOfDomain(format!("x = {x} beyond the reaper tip"))
                        })
                    };
                    (f(sheet.lo)?, f(sheet.hi)?)
                }
                Boundary::Prescribed(f) => (f(t_new, sheet.lo), f(t_new, sheet.hi)),
                Boundary::Periodic => unreachable!(),
            };
            let mut lower = vec![0.0; n];
            let mut diag = vec![1.0; n];
            let mut upper = vec![0.0; n];
            for i in 1..n - 1 {
                let c = coeff(u[i - 1], u[i + 1]) * r;
                lower[i] = -c;
                upper[i] = -c;
                diag[i] = 1.0 + 2.0 * c;
            }
            out = u.clone();
            out[0] = left;
            out[n - 1] = right;
            solve_tridiagonal(&lower, &diag, &upper, &mut out);
        }
    }
    SheetGraph::new(sheet.axis, sheet.lo, sheet.hi, out, t_new)
}

/// Rescaled time `τ = −log(−t)`.
pub fn tau_of(t: f64) -> Result<f64> {
    if !(t < 0.0) {
        return Err(CsfError::OutOfDomain(format!("rescaling needs t < 0, got {t}")));
    }
    Ok(-(-t).ln())
}

pub fn t_of(tau: f64) -> f64 {
    -(-tau).exp()
}

/// Profile `u(y, τ) = e^{τ/2} U(e^{−τ/2} y, −e^{−τ})` on a uniform grid
/// over `[−2ρ, 2ρ]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RescaledSheet {
    pub tau: f64,
    pub rho: f64,
    pub values: Vec<f64>,
}

impl RescaledSheet {
    pub fn y_lo(&self) -> f64 {
        -2.0 * self.rho
    }

    pub fn h(&self) -> f64 {
        4.0 * self.rho / (self.values.len() - 1) as f64
    }

    pub fn y(&self, i: usize) -> f64 {
        self.y_lo() + self.h() * i as f64
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.y(i)).collect()
    }
}

pub fn rescale(sheet: &SheetGraph, rho: f64, n: usize) -> Result<RescaledSheet> {
    let tau = tau_of(sheet.t)?;
    if !(rho > 0.0) || n < 3 {
        return Err(CsfError::InvalidInput("rescale needs rho > 0 and n >= 3".into()));
    }
    let scale = (-tau / 2.0).exp();
    let amp = (tau / 2.0).exp();
    let h = 4.0 * rho / (n - 1) as f64;
    let values = (0..n)
        .map(|i| {
            let y = -2.0 * rho + h * i as f64;
            sheet.eval(scale * y).map(|v| amp * v)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RescaledSheet { tau, rho, values })
}

/// Inverse of [`rescale`]: the sheet at `t = −e^{−τ}` on the image grid.
pub fn unrescale(r: &RescaledSheet, axis: Axis) -> Result<SheetGraph> {
    let scale = (-r.tau / 2.0).exp();
    let values = r.values.iter().map(|u| u * scale).collect();
    SheetGraph::new(axis, scale * r.y_lo(), scale * 2.0 * r.rho, values, t_of(r.tau))
}

/// Smallest distance between two polylines (zero if they cross).
pub fn curve_distance(a: &PlanarCurve, b: &PlanarCurve) -> f64 {
    let seg_a: Vec<(Point, Point)> = (0..a.segment_count()).map(|i| a.segment(i)).collect();
    let seg_b: Vec<(Point, Point)> = (0..b.segment_count()).map(|i| b.segment(i)).collect();
    let mut best = f64::INFINITY;
    for &p in a.points() {
        for &(s, e) in &seg_b {
            best = best.min(point_segment_distance(p, s, e));
        }
    }
    for &p in b.points() {
        for &(s, e) in &seg_a {
            best = best.min(point_segment_distance(p, s, e));
        }
    }
    if best > 0.0 {
        for &(s, e) in &seg_a {
            for &(u, v) in &seg_b {
                if crate::curve::segment_intersection(s, e, u, v).is_some() {
                    return 0.0;
                }
            }
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "NOT-APPLICABLE",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AvoidanceReport {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub verdict: Verdict,
}

/// Allowed dip of the inter-curve distance below its initial value.
pub const AVOIDANCE_TOLERANCE: f64 = 1e-3;

/// Minimum distance between two flows over their common time grid.
pub fn avoidance_check(a: &FlowTrajectory, b: &FlowTrajectory) -> Result<AvoidanceReport> {
    let ta = a.times();
    let tb = b.times();
    if ta.len() != tb.len() || ta.iter().zip(&tb).any(|(x, y)| (x - y).abs() > 1e-9 * (1.0 + x.abs())) {
        return Err(CsfError::InvalidInput("avoidance check needs a common time grid".into()));
    }
    let distances: Vec<f64> = a
        .snapshots()
        .iter()
        .zip(b.snapshots())
        .map(|(x, y)| curve_distance(&x.curve, &y.curve))
        .collect();
    let verdict = match distances.first() {
        None => Verdict::NotApplicable,
        Some(&d0) if d0 <= 1e-12 => Verdict::NotApplicable,
        Some(&d0) => {
            if distances.iter().all(|&d| d >= d0 - AVOIDANCE_TOLERANCE) {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
    };
    Ok(AvoidanceReport {
        times: ta,
        distances,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{circle, hausdorff_distance};
    use crate::exact::{line, paperclip, Direction};
    use std::f64::consts::{PI, TAU};

    fn mean_radius(c: &PlanarCurve) -> f64 {
        let n = c.len() as f64;
        let ctr = c.points().iter().fold(Point::default(), |a, p| a + *p) * (1.0 / n);
        c.points().iter().map(|p| p.dist(ctr)).sum::<f64>() / n
    }

    fn snap(c: PlanarCurve) -> FlowSnapshot {
        FlowSnapshot {
            t: 0.0,
            curve: c,
            scheme: Scheme::Explicit,
            dt: 0.0,
        }
    }

    #[test]
    fn circle_single_step() {
        let s = snap(circle(Point::default(), 1.0, 256).unwrap());
        let opts = StepOptions {
            scheme: Scheme::Explicit,
            ..StepOptions::default()
        };
        let next = step_parametric(&s, 1e-6, &opts).unwrap();
        for p in next.curve.points() {
            assert!((p.norm() - (1.0 - 1e-6)).abs() < 1e-9);
        }
        let opts = StepOptions::default();
        let next = step_parametric(&s, 1e-6, &opts).unwrap();
        assert!((mean_radius(&next.curve) - (1.0 - 1e-6)).abs() < 1e-9);
    }

    #[test]
    fn cfl_is_enforced() {
        let s = snap(circle(Point::default(), 1.0, 256).unwrap());
        let opts = StepOptions {
            scheme: Scheme::Explicit,
            ..StepOptions::default()
        };
        assert!(matches!(
            step_parametric(&s, 1e-3, &opts),
            Err(CsfError::CflViolation { .. })
        ));
    }

    #[test]
    fn line_is_a_fixed_point() {
        let c = line(0.5, -3.0, 3.0, 64).unwrap();
        for scheme in [Scheme::Explicit, Scheme::SemiImplicit] {
            let opts = StepOptions {
                scheme,
                ..StepOptions::default()
            };
            let next = step_parametric(&snap(c.clone()), 1e-4, &opts).unwrap();
            for (a, b) in c.points().iter().zip(next.curve.points()) {
                assert!(a.dist(*b) <= 1e-14);
            }
        }
    }

    #[test]
    fn reaper_translates() {
        let g = GrimReaperSpec::new(-PI / 2.0, PI / 2.0, 0.0, Direction::Right).unwrap();
        let c = g.curve(0.0, 8.0, 2048).unwrap();
        let mut opts = EvolveOptions::new(1e-5, Scheme::Explicit);
        opts.ends = EndCondition::Translate(Point::new(-g.k(), 0.0));
        let tr = evolve(&c, 0.0, 0.01, &opts).unwrap();
        let end = &tr.last().unwrap().curve;
        let exact = c.translated(Point::new(-0.01, 0.0));
        assert!(hausdorff_distance(end, &exact) < 1e-4);
    }

    #[test]
    fn closed_curves_lose_length_and_area_at_two_pi() {
        let c = paperclip(-1.0, 512).unwrap();
        let mut opts = EvolveOptions::new(2e-6, Scheme::Explicit);
        opts.record_every = Some(0.005);
        opts.check_embedded = true;
        let tr = evolve(&c, -1.0, -0.98, &opts).unwrap();
        let snaps = tr.snapshots();
        for w in snaps.windows(2) {
            assert!(w[1].curve.polyline_length() < w[0].curve.polyline_length());
            let rate = (w[1].curve.signed_area() - w[0].curve.signed_area()) / (w[1].t - w[0].t);
            assert!((rate + TAU).abs() < 1e-3, "dA/dt = {rate}");
        }
    }

    #[test]
    fn semi_implicit_circle_tracks_radius_law() {
        let c = circle(Point::default(), 1.0, 256).unwrap();
        let opts = EvolveOptions::new(1e-4, Scheme::SemiImplicit);
        let tr = evolve(&c, 0.0, 0.2, &opts).unwrap();
        let r = mean_radius(&tr.last().unwrap().curve);
        assert!((r - 0.6f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn trajectory_rejects_unordered_times() {
        let c = circle(Point::default(), 1.0, 16).unwrap();
        let mut tr = FlowTrajectory::new();
        tr.push(snap(c.clone())).unwrap();
        assert!(tr.push(snap(c)).is_err());
    }

    #[test]
    fn graphical_constant_is_stationary() {
        let s = SheetGraph::from_fn(Axis::OverX1, 0.0, 1.0, 50, 0.0, |_| 0.7).unwrap();
        let next = step_graphical(&s, 0.01, &Boundary::Dirichlet(0.7, 0.7)).unwrap();
        assert!(next.values.iter().all(|v| (v - 0.7).abs() <= 1e-14));
    }

    #[test]
    fn graphical_small_sine_decays_like_heat() {
        let eps = 1e-3;
        let mut s = SheetGraph::from_fn(Axis::OverX1, 0.0, TAU, 513, 0.0, |x| eps * x.sin()).unwrap();
        let dt = 1e-4;
        for _ in 0..1000 {
            s = step_graphical(&s, dt, &Boundary::Periodic).unwrap();
        }
        assert!((s.t - 0.1).abs() < 1e-12);
        let decay = (-0.1f64).exp();
        for (i, v) in s.values.iter().enumerate() {
            assert!((v - eps * decay * s.x(i).sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn graphical_reaper_sheet_translates() {
        let g = GrimReaperSpec::new(0.0, PI, 0.0, Direction::Right).unwrap();
        let (lo, hi) = (-9.0, -1.5);
        let mut s = SheetGraph::from_fn(Axis::OverX1, lo, hi, 601, 0.0, |x| {
            g.arm_height(0.0, x, false).unwrap()
        })
        .unwrap();
        let bc = Boundary::ExactTail {
            reaper: g,
            upper: false,
        };
        for _ in 0..500 {
            s = step_graphical(&s, 1e-3, &bc).unwrap();
        }
        for (i, v) in s.values.iter().enumerate() {
            let exact = g.arm_height(s.t, s.x(i), false).unwrap();
            assert!((v - exact).abs() < 1e-4, "{} vs {}", v, exact);
        }
    }

    #[test]
    fn graphicality_guard() {
        let r = SheetGraph::from_fn(Axis::OverX1, 0.0, 1.0, 20, 0.0, |x| 10.0 * x);
        assert!(matches!(r, Err(CsfError::GraphicalityLost(_))));
    }

    #[test]
    fn rescale_examples() {
        let t = -(2f64).exp();
        let s = SheetGraph::from_fn(Axis::OverX1, -100.0, 100.0, 101, t, |_| 1.5).unwrap();
        let r = rescale(&s, 3.0, 41).unwrap();
        assert!((r.tau + 2.0).abs() < 1e-14);
        assert!(r.values.iter().all(|u| (u - 1.5 * (-1f64).exp()).abs() < 1e-14));
        assert!((r.values[0] - 0.5518).abs() < 1e-4);

        let lin = SheetGraph::from_fn(Axis::OverX1, -100.0, 100.0, 101, t, |x| 0.3 * x).unwrap();
        let r = rescale(&lin, 3.0, 41).unwrap();
        for (i, u) in r.values.iter().enumerate() {
            assert!((u - 0.3 * r.y(i)).abs() < 1e-12);
        }
        let back = unrescale(&r, Axis::OverX1).unwrap();
        assert!((back.t - t).abs() < 1e-12);
        for (i, v) in back.values.iter().enumerate() {
            assert!((v - lin.eval(back.x(i)).unwrap()).abs() < 1e-10);
        }
        assert!(matches!(tau_of(0.0), Err(CsfError::OutOfDomain(_))));
        let narrow = SheetGraph::from_fn(Axis::OverX1, -1.0, 1.0, 11, t, |_| 1.0).unwrap();
        assert!(rescale(&narrow, 3.0, 11).is_err());
    }

    #[test]
    fn concentric_circles_avoid() {
        let mut opts = EvolveOptions::new(1e-5, Scheme::SemiImplicit);
        opts.record_every = Some(0.1);
        let small = evolve(&circle(Point::default(), 1.0, 256).unwrap(), 0.0, 0.4, &opts).unwrap();
        let big = evolve(&circle(Point::default(), 2.0, 256).unwrap(), 0.0, 0.4, &opts).unwrap();
        let rep = avoidance_check(&small, &big).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        let last = *rep.distances.last().unwrap();
        assert!((last - (3.2f64.sqrt() - 0.2f64.sqrt())).abs() < 1e-3);
        let same = avoidance_check(&small, &small).unwrap();
        assert_eq!(same.verdict, Verdict::NotApplicable);
    }
}
