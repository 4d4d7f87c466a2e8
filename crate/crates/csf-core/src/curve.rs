//! Sampled planar curves and their discrete differential geometry.
//!
//! Curvature is the signed inverse radius of the circle through three
//! consecutive samples; it is positive when the curve bends toward the
//! normal `J t`. Open curves use a one-sided cubic stencil at the ends.

use crate::error::{CsfError, Result};
use crate::point::{point_segment_distance, Point};
use crate::quadrature::gauss_legendre;
use serde::{Deserialize, Serialize};

/// Minimum number of samples accepted by [`PlanarCurve::new`].
pub const MIN_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Closed,
    Open,
}

/// Ordered samples of an oriented planar curve. Closed curves do not repeat
/// the first point at the end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarCurve {
    points: Vec<Point>,
    topology: Topology,
}

/// Per-sample geometry of a [`PlanarCurve`].
#[derive(Clone, Debug)]
pub struct CurveGeometry {
    /// Cumulative polyline arclength, starting at 0.
    pub s: Vec<f64>,
    pub tangent: Vec<Point>,
    /// `J t`, the tangent turned counterclockwise.
    pub normal: Vec<Point>,
    pub kappa: Vec<f64>,
    /// Continuous lift of the tangent angle.
    pub theta: Vec<f64>,
    /// Quadrature weight of each sample: the arc of the local circumscribed
    /// circle between the neighbouring arc midpoints.
    pub ds: Vec<f64>,
}

impl PlanarCurve {
    pub fn new(points: Vec<Point>, topology: Topology) -> Result<Self> {
        if points.len() < MIN_POINTS {
            return Err(CsfError::InvalidInput(format!(
                "curve needs at least {MIN_POINTS} points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(CsfError::NonFinite(format!("curve point {i}")));
        }
        let n = points.len();
        let segs = if topology == Topology::Closed { n } else { n - 1 };
        for i in 0..segs {
            if points[i] == points[(i + 1) % n] {
                return Err(CsfError::InvalidInput(format!(
                    "consecutive points {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        Ok(PlanarCurve { points, topology })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_closed(&self) -> bool {
        self.topology == Topology::Closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn segment_count(&self) -> usize {
        if self.is_closed() {
            self.len()
        } else {
            self.len() - 1
        }
    }

    pub fn segment(&self, i: usize) -> (Point, Point) {
        (self.points[i], self.points[(i + 1) % self.len()])
    }

    /// Length of the polyline through the samples.
    pub fn polyline_length(&self) -> f64 {
        (0..self.segment_count())
            .map(|i| {
                let (a, b) = self.segment(i);
                a.dist(b)
            })
            .sum()
    }

    /// Length of the local interpolant through the samples (see
    /// [`resample_arclength`]).
    pub fn length(&self) -> f64 {
        Interpolant::new(self).arc_lengths().iter().sum()
    }

    pub fn reversed(&self) -> PlanarCurve {
        let mut pts = self.points.clone();
        pts.reverse();
        if self.is_closed() {
            pts.rotate_right(1);
        }
        PlanarCurve {
            points: pts,
            topology: self.topology,
        }
    }

    pub fn map(&self, f: impl Fn(Point) -> Point) -> Result<PlanarCurve> {
        PlanarCurve::new(self.points.iter().map(|&p| f(p)).collect(), self.topology)
    }

    pub fn translated(&self, v: Point) -> PlanarCurve {
        PlanarCurve {
            points: self.points.iter().map(|&p| p + v).collect(),
            topology: self.topology,
        }
    }

    /// Signed enclosed area (positive for counterclockwise closed curves).
    pub fn signed_area(&self) -> f64 {
        let n = self.len();
        0.5 * (0..n)
            .map(|i| self.points[i].cross(self.points[(i + 1) % n]))
            .sum::<f64>()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Ratio of the longest to the shortest polyline segment.
    pub fn spacing_ratio(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..self.segment_count() {
            let (a, b) = self.segment(i);
            let d = a.dist(b);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        hi / lo
    }
}

/// Nodes per interpolation stencil (a quintic on each interval).
const STENCIL: usize = 6;

/// Piecewise quintic through the samples. Each interval uses the six
/// nearest samples. The parameter starts as cumulative chord length and is
/// then replaced by the arclength of the first interpolant, since chord
/// length alone caps polynomial interpolation at fourth order.
struct Interpolant {
    /// Parameter at each interval's left and right sample.
    bounds: Vec<(f64, f64)>,
    /// Power-basis coefficients in `t − left` per interval.
    coef: Vec<[Point; STENCIL]>,
}

/// Power-basis coefficients of the polynomial through `(x[k], y[k])` in
/// the variable `t − x0`.
fn power_basis(x: &[f64], y: &[Point], x0: f64) -> [Point; STENCIL] {
    let w = x.len();
    let mut xs = [0.0; STENCIL];
    let mut dd = [Point::default(); STENCIL];
    for k in 0..w {
        xs[k] = x[k] - x0;
        dd[k] = y[k];
    }
    for j in 1..w {
        for k in (j..w).rev() {
            dd[k] = (dd[k] - dd[k - 1]) * (1.0 / (xs[k] - xs[k - j]));
        }
    }
    let mut c = [Point::default(); STENCIL];
    c[0] = dd[w - 1];
    for k in (0..w - 1).rev() {
        // c ← c·(t − xs[k]) + dd[k]
        for m in (1..w).rev() {
            c[m] = c[m - 1] - c[m] * xs[k];
        }
        c[0] = dd[k] - c[0] * xs[k];
    }
    c
}

impl Interpolant {
    fn new(c: &PlanarCurve) -> Self {
        let (p, u, stencil, left) = Self::layout(c);
        let first = Self::build(&p, &u, &stencil, &left);
        if c.len() < STENCIL {
            return first;
        }
        let lens = first.arc_lengths();
        // Same layout, arclength parameter.
        let start = left[0];
        let m = lens.len();
        let mut v = vec![0.0; u.len()];
        for k in start + 1..v.len() {
            v[k] = v[k - 1] + lens[(k - 1 - start) % m];
        }
        for k in (0..start).rev() {
            v[k] = v[k + 1] - lens[(k + m - start) % m];
        }
        Self::build(&p, &v, &stencil, &left)
    }

    /// Padded samples, chordal parameter, first stencil node and left node
    /// of every interval.
    fn layout(c: &PlanarCurve) -> (Vec<Point>, Vec<f64>, Vec<usize>, Vec<usize>) {
        let pts = c.points();
        let n = pts.len();
        let w = STENCIL.min(n);
        let half = w / 2;
        let (p, stencil, left) = if c.is_closed() {
            let mut p = Vec::with_capacity(n + 2 * half + 1);
            for k in 0..half {
                p.push(pts[(n + k - half) % n]);
            }
            p.extend_from_slice(pts);
            for k in 0..=half {
                p.push(pts[k % n]);
            }
            (p, (0..n).map(|i| i + 1).collect(), (half..half + n).collect())
        } else {
            (
                pts.to_vec(),
                (0..n - 1).map(|i| (i + 1).saturating_sub(half).min(n - w)).collect(),
                (0..n - 1).collect(),
            )
        };
        let mut u = vec![0.0; p.len()];
        for k in 1..p.len() {
            u[k] = u[k - 1] + p[k - 1].dist(p[k]);
        }
        (p, u, stencil, left)
    }

    fn build(p: &[Point], u: &[f64], stencil: &[usize], left: &[usize]) -> Self {
        let w = STENCIL.min(p.len());
        let bounds: Vec<(f64, f64)> = left.iter().map(|&l| (u[l], u[l + 1])).collect();
        let coef = stencil
            .iter()
            .zip(&bounds)
            .map(|(&s, &(a, _))| power_basis(&u[s..s + w], &p[s..s + w], a))
            .collect();
        Interpolant { bounds, coef }
    }

    fn intervals(&self) -> usize {
        self.bounds.len()
    }

    fn bounds(&self, i: usize) -> (f64, f64) {
        self.bounds[i]
    }

    /// Position and derivative at parameter `t` on interval `i`.
    fn eval(&self, i: usize, t: f64) -> (Point, Point) {
        let c = &self.coef[i];
        let s = t - self.bounds[i].0;
        let mut pos = c[STENCIL - 1];
        let mut der = Point::default();
        for k in (0..STENCIL - 1).rev() {
            der = der * s + pos;
            pos = pos * s + c[k];
        }
        (pos, der)
    }

    fn speed(&self, i: usize, t: f64) -> f64 {
        self.eval(i, t).1.norm_unscaled()
    }

    fn partial_length(&self, i: usize, a: f64, b: f64, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        gl.0
            .iter()
            .zip(&gl.1)
            .map(|(x, w)| w * self.speed(i, mid + half * x))
            .sum::<f64>()
            * half
    }

    fn arc_lengths(&self) -> Vec<f64> {
        let gl = gauss_legendre(8);
        (0..self.intervals())
            .map(|i| {
                let (a, b) = self.bounds(i);
                self.partial_length(i, a, b, &gl)
            })
            .collect()
    }
}

/// Resamples `curve` with `n` points equally spaced in the arclength of its
/// piecewise quintic interpolant. Open curves keep their endpoints; closed curves keep
/// their first point.
pub fn resample_arclength(curve: &PlanarCurve, n: usize) -> Result<PlanarCurve> {
    if n < MIN_POINTS {
        return Err(CsfError::InvalidInput(format!(
            "resample needs n >= {MIN_POINTS}, got {n}"
        )));
    }
    let interp = Interpolant::new(curve);
    let lens = interp.arc_lengths();
    let total: f64 = lens.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(CsfError::InvalidInput("degenerate curve of zero length".into()));
    }
    let mut cum = Vec::with_capacity(lens.len() + 1);
    cum.push(0.0);
    for l in &lens {
        cum.push(cum.last().unwrap() + l);
    }
    let gl = gauss_legendre(8);
    let closed = curve.is_closed();
    let step = if closed {
        total / n as f64
    } else {
        total / (n - 1) as f64
    };
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        if k == 0 {
            out.push(curve.points()[0]);
            continue;
        }
        if !closed && k == n - 1 {
            out.push(*curve.points().last().unwrap());
            continue;
        }
        let target = k as f64 * step;
        let i = (cum.partition_point(|&c| c <= target) - 1).min(lens.len() - 1);
        let rem = target - cum[i];
        let (a, b) = interp.bounds(i);
        let mut t = a + (b - a) * (rem / lens[i]).clamp(0.0, 1.0);
        for _ in 0..30 {
            let f = interp.partial_length(i, a, t, &gl) - rem;
            let dt = f / interp.speed(i, t);
            t = (t - dt).clamp(a, b);
            // Newton converges quadratically; below this the update is roundoff.
            if dt.abs() < 1e-12 * (b - a).max(1e-300) {
                break;
            }
        }
        out.push(interp.eval(i, t).0);
    }
    PlanarCurve::new(out, curve.topology())
}

/// Arclength of the interpolant between consecutive samples.
pub fn interpolant_spacings(curve: &PlanarCurve) -> Vec<f64> {
    Interpolant::new(curve).arc_lengths()
}

/// Derivatives at `t0` of the cubic through four samples parametrised by
/// cumulative chord length.
fn cubic_derivatives(p: &[Point], t0: f64, u: &[f64]) -> (Point, Point) {
    let mut d1 = Point::default();
    let mut d2 = Point::default();
    for j in 0..4 {
        let others: Vec<f64> = (0..4).filter(|&k| k != j).map(|k| u[k]).collect();
        let den: f64 = others.iter().map(|&uk| u[j] - uk).product();
        let (a, b, c) = (t0 - others[0], t0 - others[1], t0 - others[2]);
        let first = a * b + a * c + b * c;
        let second = 2.0 * (a + b + c);
        d1 += p[j] * (first / den);
        d2 += p[j] * (second / den);
    }
    (d1, d2)
}

fn end_stencil(p: &[Point], at_start: bool) -> (Point, f64) {
    let (q, t0) = if at_start {
        ([p[0], p[1], p[2], p[3]], 0)
    } else {
        let n = p.len();
        ([p[n - 4], p[n - 3], p[n - 2], p[n - 1]], 3)
    };
    let mut u = [0.0; 4];
    for k in 1..4 {
        u[k] = u[k - 1] + q[k - 1].dist(q[k]);
    }
    let (d1, d2) = cubic_derivatives(&q, u[t0], &u);
    let sp = d1.norm();
    (d1 * (1.0 / sp), d1.cross(d2) / (sp * sp * sp))
}

/// Tangent, normal, curvature, angle lift and quadrature weights.
pub fn geometry(curve: &PlanarCurve) -> Result<CurveGeometry> {
    let p = curve.points();
    let n = p.len();
    if n < 4 {
        return Err(CsfError::InvalidInput(
            "geometry needs at least three neighbours per sample".into(),
        ));
    }
    let closed = curve.is_closed();
    let mut tangent = vec![Point::default(); n];
    let mut kappa = vec![0.0; n];
    let mut ds = vec![0.0; n];
    for i in 0..n {
        let interior = closed || (i > 0 && i < n - 1);
        if !interior {
            let (t, k) = end_stencil(p, i == 0);
            tangent[i] = t;
            kappa[i] = k;
            let nb = if i == 0 { p[1] } else { p[n - 2] };
            ds[i] = 0.5 * p[i].dist(nb);
            continue;
        }
        let pm = p[(i + n - 1) % n];
        let pp = p[(i + 1) % n];
        let a = p[i] - pm;
        let b = pp - p[i];
        let hm = a.norm();
        let hp = b.norm();
        let c = (pp - pm).norm();
        let d = (b * (hm * hm) + a * (hp * hp)) * (1.0 / (hm * hp * (hm + hp)));
        tangent[i] = d.normalized();
        let cr = a.cross(b);
        kappa[i] = 2.0 * cr / (hm * hp * c);
        let psi = cr.atan2(a.dot(b));
        ds[i] = if psi.abs() < 1e-10 || kappa[i] == 0.0 {
            0.5 * (hm + hp)
        } else {
            psi / kappa[i]
        };
    }
    let normal: Vec<Point> = tangent.iter().map(|t| t.perp()).collect();
    let mut theta = Vec::with_capacity(n);
    for (i, t) in tangent.iter().enumerate() {
        let raw = t.y.atan2(t.x);
        if i == 0 {
            theta.push(raw);
        } else {
            let prev: f64 = theta[i - 1];
            let turns = ((prev - raw) / std::f64::consts::TAU).round();
            theta.push(raw + turns * std::f64::consts::TAU);
        }
    }
    let mut s = vec![0.0; n];
    for i in 1..n {
        s[i] = s[i - 1] + p[i - 1].dist(p[i]);
    }
    Ok(CurveGeometry {
        s,
        tangent,
        normal,
        kappa,
        theta,
        ds,
    })
}

/// Discrete total turning `Σ κ ds`.
pub fn total_turning(g: &CurveGeometry) -> f64 {
    g.kappa.iter().zip(&g.ds).map(|(k, w)| k * w).sum()
}

/// A crossing found by [`self_intersects`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub first_segment: usize,
    pub second_segment: usize,
    pub point: Point,
}

const INTERSECT_EPS: f64 = 1e-12;

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn snap(v: f64, scale: f64) -> f64 {
    if v.abs() <= INTERSECT_EPS * scale {
        0.0
    } else {
        v
    }
}

/// Intersection of segments `[p1, p2]` and `[p3, p4]`, if any.
pub fn segment_intersection(p1: Point, p2: Point, p3: Point, p4: Point) -> Option<Point> {
    let scale = (p2 - p1).norm() * (p4 - p3).norm();
    let d1 = snap(orient(p3, p4, p1), scale);
    let d2 = snap(orient(p3, p4, p2), scale);
    let d3 = snap(orient(p1, p2, p3), scale);
    let d4 = snap(orient(p1, p2, p4), scale);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        let r = p2 - p1;
        let t = (p3 - p1).cross(p4 - p3) / r.cross(p4 - p3);
        return Some(p1 + r * t);
    }
    if d1 == 0.0 && on_segment(p3, p4, p1) {
        return Some(p1);
    }
    if d2 == 0.0 && on_segment(p3, p4, p2) {
        return Some(p2);
    }
    if d3 == 0.0 && on_segment(p1, p2, p3) {
        return Some(p3);
    }
    if d4 == 0.0 && on_segment(p1, p2, p4) {
        return Some(p4);
    }
    None
}

/// First crossing between non-adjacent segments, found by a sweep over
/// segment x-extents.
pub fn self_intersects(curve: &PlanarCurve) -> Option<Crossing> {
    let n = curve.len();
    let m = curve.segment_count();
    let closed = curve.is_closed();
    let mut order: Vec<(f64, f64, usize)> = (0..m)
        .map(|i| {
            let (a, b) = curve.segment(i);
            (a.x.min(b.x), a.x.max(b.x), i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let adjacent = |i: usize, j: usize| {
        let d = i.abs_diff(j);
        d <= 1 || (closed && d == n - 1)
    };
    let mut active: Vec<(f64, usize)> = Vec::new();
    let mut best: Option<Crossing> = None;
    for &(lo, hi, i) in &order {
        active.retain(|&(h, _)| h >= lo);
        let (a, b) = curve.segment(i);
        for &(_, j) in &active {
            if adjacent(i, j) {
                continue;
            }
            let (c, d) = curve.segment(j);
            if let Some(pt) = segment_intersection(a, b, c, d) {
                let (f, s) = (i.min(j), i.max(j));
                let better = match best {
                    None => true,
                    Some(bc) => (f, s) < (bc.first_segment, bc.second_segment),
                };
                if better {
                    best = Some(Crossing {
                        first_segment: f,
                        second_segment: s,
                        point: pt,
                    });
                }
            }
        }
        active.push((hi, i));
    }
    best
}

fn directed_hausdorff(a: &PlanarCurve, b: &PlanarCurve) -> f64 {
    let m = b.segment_count();
    let segs: Vec<(Point, Point)> = (0..m).map(|i| b.segment(i)).collect();
    let mut worst: f64 = 0.0;
    let mut hint = 0usize;
    for &p in a.points() {
        // Cheap upper bound from the segment that was closest last time.
        let (s0, s1) = segs[hint];
        let mut best = point_segment_distance(p, s0, s1);
        if best <= worst {
            continue;
        }
        for (j, &(s0, s1)) in segs.iter().enumerate() {
            let d = point_segment_distance(p, s0, s1);
            if d < best {
                best = d;
                hint = j;
            }
        }
        worst = worst.max(best);
    }
    worst
}

/// Symmetric Hausdorff distance between samples of each curve and the
/// polyline of the other.
pub fn hausdorff_distance(c1: &PlanarCurve, c2: &PlanarCurve) -> f64 {
    directed_hausdorff(c1, c2).max(directed_hausdorff(c2, c1))
}

/// Closed counterclockwise circle sampled at `n` equally spaced angles.
pub fn circle(center: Point, r: f64, n: usize) -> Result<PlanarCurve> {
    let pts = (0..n)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / n as f64;
            center + Point::new(r * a.cos(), r * a.sin())
        })
        .collect();
    PlanarCurve::new(pts, Topology::Closed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use std::f64::consts::{PI, TAU};

    fn reaper_arc(k: f64, zmax: f64, n: usize) -> PlanarCurve {
        let pts = (0..n)
            .map(|i| {
                let z = -zmax + 2.0 * zmax * i as f64 / (n - 1) as f64;
                Point::new((k * z).cos().ln() / k, z)
            })
            .collect();
        PlanarCurve::new(pts, Topology::Open).unwrap()
    }

    #[test]
    fn rejects_short_or_repeated_samples() {
        let pts: Vec<Point> = (0..5).map(|i| Point::new(i as f64, 0.0)).collect();
        assert!(matches!(
            PlanarCurve::new(pts, Topology::Open),
            Err(CsfError::InvalidInput(_))
        ));
        let mut pts: Vec<Point> = (0..9).map(|i| Point::new(i as f64, 0.0)).collect();
        pts[4] = pts[3];
        assert!(PlanarCurve::new(pts, Topology::Open).is_err());
    }

    #[test]
    fn circle_resample_has_equal_chords() {
        let c = circle(Point::default(), 1.0, 200).unwrap();
        let r = resample_arclength(&c, 16).unwrap();
        assert_eq!(r.len(), 16);
        let chords: Vec<f64> = (0..16)
            .map(|i| {
                let (a, b) = r.segment(i);
                a.dist(b)
            })
            .collect();
        for c in &chords {
            assert!((c - chords[0]).abs() < 1e-6 * chords[0]);
        }
        for p in r.points() {
            assert!((p.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn segment_resample_is_uniform() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(0.1, 0.0),
            Point::new(0.15, 0.0),
            Point::new(0.4, 0.0),
            Point::new(0.5, 0.0),
            Point::new(0.7, 0.0),
            Point::new(0.9, 0.0),
            Point::new(1.0, 0.0),
        ];
        let c = PlanarCurve::new(pts, Topology::Open).unwrap();
        let r = resample_arclength(&c, 9).unwrap();
        for (k, p) in r.points().iter().enumerate() {
            assert!((p.x - k as f64 / 8.0).abs() < 1e-12);
            assert_eq!(p.y, 0.0);
        }
    }

    #[test]
    fn reaper_resample_preserves_length() {
        let zmax = 0.45;
        // Oracle: arclength of x = log cos(πz)/π over |z| ≤ zmax.
        let exact = integrate(
            |z: f64| (1.0 + (PI * z).tan().powi(2)).sqrt(),
            -zmax,
            zmax,
            400,
        );
        let dense = reaper_arc(PI, zmax, 4001);
        let r = resample_arclength(&dense, 256).unwrap();
        assert!((r.length() - exact).abs() < 1e-6 * exact);
        assert!((dense.length() - exact).abs() < 1e-8 * exact);
        let sp = interpolant_spacings(&r);
        let mean = sp.iter().sum::<f64>() / sp.len() as f64;
        for s in &sp {
            assert!((s - mean).abs() < 1e-6 * mean, "{s} vs {mean}");
        }
        assert_eq!(r.points()[0], dense.points()[0]);
        assert_eq!(r.points()[255], dense.points()[4000]);
    }

    #[test]
    fn zero_length_curve_is_rejected() {
        let pts: Vec<Point> = (0..8)
            .map(|i| Point::new(if i % 2 == 0 { 0.0 } else { 1e-320 }, 0.0))
            .collect();
        let c = PlanarCurve::new(pts, Topology::Open).unwrap();
        assert!(matches!(
            resample_arclength(&c, 8),
            Err(CsfError::InvalidInput(_))
        ));
        let c = circle(Point::default(), 1.0, 16).unwrap();
        assert!(resample_arclength(&c, 7).is_err());
    }

    #[test]
    fn circle_curvature() {
        let c = circle(Point::new(0.3, -1.0), 2.0, 512).unwrap();
        let g = geometry(&c).unwrap();
        for (k, t) in g.kappa.iter().zip(&g.tangent) {
            assert!((k - 0.5).abs() < 1e-4);
            assert!((t.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn line_has_zero_curvature() {
        let pts: Vec<Point> = (0..20)
            .map(|i| Point::new(0.3 * i as f64, 0.1 * i as f64 + 2.0))
            .collect();
        let g = geometry(&PlanarCurve::new(pts, Topology::Open).unwrap()).unwrap();
        for k in &g.kappa {
            assert!(k.abs() < 1e-10);
        }
    }

    #[test]
    fn reaper_tip_curvature() {
        // Unit reaper long enough to contain the tip at sample 512.
        let c = reaper_arc(1.0, 1.4, 1025);
        let c = resample_arclength(&c, 1024).unwrap();
        let g = geometry(&c).unwrap();
        let tip = (0..c.len())
            .min_by(|&a, &b| c.points()[b].x.total_cmp(&c.points()[a].x))
            .unwrap();
        // Parametrised with increasing height the tip bends clockwise.
        assert!((g.kappa[tip].abs() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn open_end_curvature_is_second_order() {
        let end_error = |h: f64| {
            let arc: Vec<Point> = (0..40)
                .map(|i| {
                    let a = h * i as f64 + 0.3;
                    Point::new(3.0 * a.cos(), 3.0 * a.sin())
                })
                .collect();
            let g = geometry(&PlanarCurve::new(arc, Topology::Open).unwrap()).unwrap();
            assert!((g.kappa[0] - g.kappa[39]).abs() < 1e-12);
            (g.kappa[0] - 1.0 / 3.0).abs()
        };
        let coarse = end_error(0.02);
        let fine = end_error(0.01);
        assert!(coarse < 2e-4);
        assert!(coarse / fine > 3.5, "order ratio {}", coarse / fine);
    }

    #[test]
    fn theta_derivative_matches_curvature() {
        let pts: Vec<Point> = (0..400)
            .map(|i| {
                let x = -2.0 + 4.0 * i as f64 / 399.0;
                Point::new(x, x.sin())
            })
            .collect();
        let g = geometry(&PlanarCurve::new(pts, Topology::Open).unwrap()).unwrap();
        let h = g.s.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        for i in 1..g.s.len() - 2 {
            let dth = (g.theta[i + 1] - g.theta[i]) / (g.s[i + 1] - g.s[i]);
            let km = 0.5 * (g.kappa[i] + g.kappa[i + 1]);
            assert!((dth - km).abs() <= 2.0 * h);
            assert!((g.theta[i + 1] - g.theta[i]).abs() < PI);
        }
    }

    #[test]
    fn total_turning_of_closed_curve() {
        let pts: Vec<Point> = (0..1024)
            .map(|i| {
                let a = TAU * i as f64 / 1024.0;
                Point::new(2.0 * a.cos(), a.sin() + 0.3 * (2.0 * a).sin())
            })
            .collect();
        let c = resample_arclength(&PlanarCurve::new(pts, Topology::Closed).unwrap(), 1024)
            .unwrap();
        let g = geometry(&c).unwrap();
        assert!((total_turning(&g) - TAU).abs() < 1e-6);
    }

    #[test]
    fn reversal_flips_curvature_and_turns_angle() {
        let pts: Vec<Point> = (0..64)
            .map(|i| {
                let a = 0.05 * i as f64;
                Point::new(a, (2.0 * a).sin())
            })
            .collect();
        let c = PlanarCurve::new(pts, Topology::Open).unwrap();
        let g = geometry(&c).unwrap();
        let gr = geometry(&c.reversed()).unwrap();
        let n = c.len();
        for i in 0..n {
            let j = n - 1 - i;
            assert!((g.kappa[i] + gr.kappa[j]).abs() < 1e-9);
            let d = (gr.theta[j] - g.theta[i] - PI).rem_euclid(TAU);
            assert!(d.min(TAU - d) < 1e-9);
        }
    }

    #[test]
    fn figure_eight_crosses_near_origin() {
        let pts: Vec<Point> = (0..64)
            .map(|i| {
                let a = TAU * i as f64 / 64.0 + 0.01;
                Point::new(a.sin(), a.sin() * a.cos())
            })
            .collect();
        let c = PlanarCurve::new(pts, Topology::Closed).unwrap();
        let hit = self_intersects(&c).expect("figure eight must cross");
        assert!(hit.point.norm() < 0.05);
        assert!(self_intersects(&circle(Point::default(), 1.0, 300).unwrap()).is_none());
    }

    #[test]
    fn hausdorff_of_concentric_circles() {
        let a = circle(Point::default(), 1.0, 512).unwrap();
        let b = circle(Point::default(), 1.1, 512).unwrap();
        assert!((hausdorff_distance(&a, &b) - 0.1).abs() < 1e-3);
        assert_eq!(hausdorff_distance(&a, &a), 0.0);
    }
}
