//! Gaussian inner product, entropy, total curvature, finger areas and L¹
//! distances between sheets.

use crate::curve::{geometry, PlanarCurve};
use crate::error::{CsfError, Result};
use crate::flow::{FlowTrajectory, SheetGraph};
use crate::point::Point;
use crate::quadrature::gauss_hermite;
use serde::Serialize;
use std::sync::OnceLock;

/// Default node count of [`GaussianQuadrature`].
pub const GAUSS_NODES: usize = 64;

/// Nodes and weights for `∫ f e^{−y²/4} / √(4π) dy`, from Gauss–Hermite
/// after `y = 2u`.
#[derive(Clone, Debug)]
pub struct GaussianQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussianQuadrature {
    pub fn new(n: usize) -> Self {
        let (u, w) = gauss_hermite(n);
        let norm = std::f64::consts::PI.sqrt();
        GaussianQuadrature {
            nodes: u.iter().map(|v| 2.0 * v).collect(),
            weights: w.iter().map(|v| v / norm).collect(),
        }
    }

    pub fn shared() -> &'static GaussianQuadrature {
        static Q: OnceLock<GaussianQuadrature> = OnceLock::new();
        Q.get_or_init(|| GaussianQuadrature::new(GAUSS_NODES))
    }

    /// `⟨f, g⟩` from values at the nodes.
    pub fn inner_values(&self, f: &[f64], g: &[f64]) -> Result<f64> {
        if f.len() != self.nodes.len() || g.len() != self.nodes.len() {
            return Err(CsfError::InvalidInput("sample count differs from node count".into()));
        }
        let mut acc = 0.0;
        for ((w, a), b) in self.weights.iter().zip(f).zip(g) {
            if !a.is_finite() || !b.is_finite() {
                return Err(CsfError::InvalidInput("non-finite sample in Gaussian inner product".into()));
            }
            acc += w * a * b;
        }
        Ok(acc)
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&y| f(y)).collect()
    }

    pub fn inner(&self, f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> Result<f64> {
        self.inner_values(&self.sample(f), &self.sample(g))
    }
}

/// `⟨f, g⟩_H = ∫ f g e^{−y²/4} / √(4π) dy` with the shared 64-node rule.
pub fn gaussian_inner(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    GaussianQuadrature::shared().inner(f, g)
}

/// Weighted samples of the arclength measure, sorted by abscissa for range
/// queries.
#[derive(Clone, Debug)]
struct Measure {
    pts: Vec<Point>,
    w: Vec<f64>,
}

/// Gaussian tails beyond `e^{−CUT}` are dropped.
const CUT: f64 = 40.0;

impl Measure {
    fn new(mut items: Vec<(Point, f64)>) -> Self {
        items.sort_by(|a, b| a.0.x.total_cmp(&b.0.x));
        Measure {
            pts: items.iter().map(|i| i.0).collect(),
            w: items.iter().map(|i| i.1).collect(),
        }
    }

    fn density(&self, x0: Point, lambda: f64) -> f64 {
        let r2 = 4.0 * lambda * CUT;
        let r = r2.sqrt();
        let lo = self.pts.partition_point(|p| p.x < x0.x - r);
        let hi = self.pts.partition_point(|p| p.x <= x0.x + r);
        let inv = 1.0 / (4.0 * lambda);
        let mut acc = 0.0;
        for i in lo..hi {
            let d = self.pts[i] - x0;
            let q = d.dot(d);
            if q < r2 {
                acc += self.w[i] * (-q * inv).exp();
            }
        }
        acc / (4.0 * std::f64::consts::PI * lambda).sqrt()
    }
}

/// Merges consecutive samples into weighted centroids of arclength at
/// least `block`.
fn aggregate(pts: &[Point], w: &[f64], block: f64) -> Vec<(Point, f64)> {
    let mut out = Vec::new();
    let mut acc = Point::default();
    let mut mass = 0.0;
    for (p, &wi) in pts.iter().zip(w) {
        acc += *p * wi;
        mass += wi;
        if mass >= block {
            out.push((acc * (1.0 / mass), mass));
            acc = Point::default();
            mass = 0.0;
        }
    }
    if mass > 0.0 {
        out.push((acc * (1.0 / mass), mass));
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyResult {
    pub value: f64,
    pub x0: Point,
    pub lambda: f64,
    pub iterations: usize,
    /// Best value of the coarse grid phase.
    pub grid_value: f64,
    /// Spread of the refined values over the refined grid candidates that
    /// converged to the same maximiser.
    pub gap: f64,
    /// Bounding box of the samples the integral was taken over.
    pub window: (Point, Point),
}

#[derive(Clone, Debug)]
pub struct EntropyOptions {
    pub lambda_count: usize,
    pub lambda_min: f64,
    /// Upper end of the λ grid as a multiple of `diam²`.
    pub lambda_max_factor: f64,
    pub grid: usize,
    /// Grid candidates passed to the refinement.
    pub refine: usize,
}

impl Default for EntropyOptions {
    fn default() -> Self {
        EntropyOptions {
            lambda_count: 60,
            lambda_min: 1e-3,
            lambda_max_factor: 10.0,
            grid: 41,
            refine: 4,
        }
    }
}

pub fn entropy(curve: &PlanarCurve) -> Result<EntropyResult> {
    entropy_with(curve, &EntropyOptions::default())
}

/// `sup over (x0, λ) of ∫ (4πλ)^{−1/2} e^{−|x−x0|²/(4λ)} ds`.
///
/// Open curves contribute only their sampled window. The smallest scale is
/// raised to the squared largest sample spacing, below which the node sum
/// no longer resolves the Gaussian.
pub fn entropy_with(curve: &PlanarCurve, opts: &EntropyOptions) -> Result<EntropyResult> {
    let g = geometry(curve)?;
    let pts = curve.points();
    let (lo, hi) = curve.bounding_box();
    let diam = (hi - lo).norm();
    let h_max = (0..curve.segment_count())
        .map(|i| {
            let (a, b) = curve.segment(i);
            a.dist(b)
        })
        .fold(0.0, f64::max);
    let lam_lo = opts.lambda_min.max(h_max * h_max);
    let lam_hi = (opts.lambda_max_factor * diam * diam).max(lam_lo * 10.0);
    let full = Measure::new(pts.iter().cloned().zip(g.ds.iter().cloned()).collect());

    let nl = opts.lambda_count.max(2);
    let step_l = (lam_hi / lam_lo).ln() / (nl - 1) as f64;
    let ng = opts.grid.max(2);
    let dx = (hi.x - lo.x) / (ng - 1) as f64;
    let dy = (hi.y - lo.y) / (ng - 1) as f64;

    // (value, log λ, x0), best first; ties keep the earlier entry.
    let mut cands: Vec<(f64, f64, Point)> = Vec::new();
    for il in 0..nl {
        let ll = lam_lo.ln() + step_l * il as f64;
        let lambda = ll.exp();
        let block = (2.0 * lambda).sqrt() / 8.0;
        let coarse = Measure::new(aggregate(pts, &g.ds, block));
        for ix in 0..ng {
            for iy in 0..ng {
                let x0 = Point::new(lo.x + dx * ix as f64, lo.y + dy * iy as f64);
                let v = coarse.density(x0, lambda);
                cands.push((v, ll, x0));
            }
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0));
    let grid_best = cands[0];

    // Pick well separated starting points.
    let mut starts: Vec<(f64, f64, Point)> = Vec::new();
    for c in &cands {
        if starts.len() >= opts.refine {
            break;
        }
        let far = starts.iter().all(|s| {
            (s.1 - c.1).abs() > 1.5 * step_l
                || (s.2.x - c.2.x).abs() > 1.5 * dx
                || (s.2.y - c.2.y).abs() > 1.5 * dy
        });
        if far {
            starts.push(*c);
        }
    }

    let scale = 1e-9 * (1.0 + diam);
    let bounds = (lam_lo.ln(), lam_hi.ln());
    let mut refined = Vec::new();
    let mut iterations = 0;
    for s in &starts {
        let (v, ll, x0, it) = pattern_search(&full, s.1, s.2, [dx.max(scale), dy.max(scale), step_l], bounds, scale);
        iterations += it;
        refined.push((v, ll, x0));
    }
    let mut best = refined[0];
    for r in &refined[1..] {
        let better = r.0 > best.0
            || (r.0 == best.0
                && (r.1 < best.1 || (r.1 == best.1 && (r.2.x, r.2.y) < (best.2.x, best.2.y))));
        if better {
            best = *r;
        }
    }
    let same: Vec<f64> = refined
        .iter()
        .filter(|r| (r.1 - best.1).abs() < 0.05 && r.2.dist(best.2) < 0.05 * (2.0 * best.1.exp()).sqrt())
        .map(|r| r.0)
        .collect();
    let gap = same.iter().fold(0.0f64, |a, v| a.max(best.0 - v));
    Ok(EntropyResult {
        value: best.0,
        x0: best.2,
        lambda: best.1.exp(),
        iterations,
        grid_value: grid_best.0,
        gap,
        window: (lo, hi),
    })
}

/// Compass search over `(x, y, log λ)`.
fn pattern_search(
    m: &Measure,
    ll: f64,
    x0: Point,
    steps: [f64; 3],
    bounds: (f64, f64),
    tol: f64,
) -> (f64, f64, Point, usize) {
    let mut z = [x0.x, x0.y, ll];
    let mut step = steps;
    let eval = |z: &[f64; 3]| m.density(Point::new(z[0], z[1]), z[2].exp());
    let mut best = eval(&z);
    let mut iters = 0;
    while iters < 5000 {
        iters += 1;
        let mut moved = false;
        for c in 0..3 {
            for sign in [1.0, -1.0] {
                let mut trial = z;
                trial[c] += sign * step[c];
                if c == 2 {
                    trial[2] = trial[2].clamp(bounds.0, bounds.1);
                }
                let v = eval(&trial);
                if v > best {
                    best = v;
                    z = trial;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            for s in step.iter_mut() {
                *s *= 0.5;
            }
            if step[0] < tol && step[1] < tol && step[2] < 1e-9 {
                break;
            }
        }
    }
    (best, z[2], Point::new(z[0], z[1]), iters)
}

/// Gaussian density ratio at a fixed centre and scale.
pub fn gaussian_density(curve: &PlanarCurve, x0: Point, lambda: f64) -> Result<f64> {
    let g = geometry(curve)?;
    let m = Measure::new(curve.points().iter().cloned().zip(g.ds).collect());
    Ok(m.density(x0, lambda))
}

/// `Σ |κ| ds`.
pub fn total_curvature(curve: &PlanarCurve) -> Result<f64> {
    let g = geometry(curve)?;
    Ok(g.kappa.iter().zip(&g.ds).map(|(k, w)| k.abs() * w).sum())
}

/// Region between an arc of the curve and the `x²`-axis.
#[derive(Clone, Debug, Serialize)]
pub struct FingerRegion {
    /// 1-based, counted upward from the lowest axis crossing.
    pub id: usize,
    /// Boundary arc from one axis crossing to the next.
    pub arc: Vec<Point>,
    /// Arc point farthest from the axis.
    pub vertex: Point,
    /// Heights of the two axis crossings.
    pub asymptotes: (f64, f64),
    pub area: f64,
}

fn shoelace(pts: &[Point]) -> f64 {
    let n = pts.len();
    0.5 * (0..n).map(|i| pts[i].cross(pts[(i + 1) % n])).sum::<f64>()
}

/// Area enclosed by `arc` and the axis segment joining its ends. The ends
/// must lie on the axis and no interior sample may cross it.
pub fn region_area(arc: &[Point]) -> Result<f64> {
    if arc.len() < 3 {
        return Err(CsfError::RegionUndefined("arc needs at least 3 samples".into()));
    }
    let scale = arc.iter().fold(1.0f64, |a, p| a.max(p.x.abs()).max(p.y.abs()));
    let ends = [arc[0], arc[arc.len() - 1]];
    if ends.iter().any(|p| p.x.abs() > 1e-9 * scale) {
        return Err(CsfError::RegionUndefined("arc ends must lie on the x²-axis".into()));
    }
    let interior = &arc[1..arc.len() - 1];
    let pos = interior.iter().any(|p| p.x > 0.0);
    let neg = interior.iter().any(|p| p.x < 0.0);
    if pos && neg {
        return Err(CsfError::RegionUndefined("arc crosses the x²-axis more than twice".into()));
    }
    Ok(shoelace(arc).abs())
}

pub(crate) fn axis_crossings(p: &[Point]) -> Vec<(usize, Point)> {
    let mut out = Vec::new();
    for j in 0..p.len() - 1 {
        let (a, b) = (p[j], p[j + 1]);
        if (a.x < 0.0) != (b.x < 0.0) {
            let s = a.x / (a.x - b.x);
            out.push((j, Point::new(0.0, a.y + s * (b.y - a.y))));
        }
    }
    out
}

/// Finger regions between consecutive crossings of the `x²`-axis by an
/// open curve ordered by increasing height.
pub fn finger_regions(curve: &PlanarCurve) -> Result<Vec<FingerRegion>> {
    if curve.is_closed() {
        return Err(CsfError::RegionUndefined("finger regions need an open curve".into()));
    }
    let p = curve.points();
    let cross = axis_crossings(p);
    let mut out = Vec::new();
    for (id, w) in cross.windows(2).enumerate() {
        let (j0, c0) = w[0];
        let (j1, c1) = w[1];
        let mut arc = vec![c0];
        arc.extend_from_slice(&p[j0 + 1..=j1]);
        arc.push(c1);
        arc.dedup();
        let vertex = arc
            .iter()
            .cloned()
            .fold(c0, |a, q| if q.x.abs() > a.x.abs() { q } else { a });
        let area = region_area(&arc)?;
        out.push(FingerRegion {
            id: id + 1,
            arc,
            vertex,
            asymptotes: (c0.y, c1.y),
            area,
        });
    }
    Ok(out)
}

pub fn finger_area(curve: &PlanarCurve, id: usize) -> Result<f64> {
    finger_regions(curve)?
        .into_iter()
        .find(|f| f.id == id)
        .map(|f| f.area)
        .ok_or_else(|| CsfError::RegionUndefined(format!("finger {id} not found")))
}

/// Least-squares line with goodness of fit.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub r_squared: f64,
}

pub fn affine_fit(x: &[f64], y: &[f64]) -> Result<AffineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(CsfError::InvalidInput("affine fit needs two or more paired samples".into()));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(CsfError::InvalidInput("affine fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (slope * a + intercept)).collect();
    let ss_res: f64 = res.iter().map(|r| r * r).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    Ok(AffineFit {
        slope,
        intercept,
        max_residual: res.iter().fold(0.0, |a, r| a.max(r.abs())),
        r_squared: if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AreaSeries {
    pub times: Vec<f64>,
    pub areas: Vec<f64>,
    /// Fit over the second half of the series.
    pub fit: AffineFit,
}

pub fn area_series(traj: &FlowTrajectory, id: usize) -> Result<AreaSeries> {
    let mut times = Vec::new();
    let mut areas = Vec::new();
    for s in traj.snapshots() {
        let a = finger_area(&s.curve, id).map_err(|e| {
            CsfError::RegionUndefined(format!("finger {id} lost at t = {}: {e}", s.t))
        })?;
        times.push(s.t);
        areas.push(a);
    }
    let half = times.len() / 2;
    let fit = affine_fit(&times[half..], &areas[half..])?;
    Ok(AreaSeries { times, areas, fit })
}

/// Trapezoid integral of `|V − V̄|` for profiles on the same grid.
pub fn l1_graph_distance(v: &SheetGraph, w: &SheetGraph) -> Result<f64> {
    if v.axis != w.axis || v.lo != w.lo || v.hi != w.hi || v.values.len() != w.values.len() {
        return Err(CsfError::DomainMismatch("profiles live on different grids".into()));
    }
    let h = v.h();
    let d: Vec<f64> = v.values.iter().zip(&w.values).map(|(a, b)| (a - b).abs()).collect();
    let n = d.len();
    Ok(h * (d[1..n - 1].iter().sum::<f64>() + 0.5 * (d[0] + d[n - 1])))
}

/// `x¹` as a piecewise linear function of `x²` along a curve monotone in
/// `x²`. Roundoff reversals are flattened.
fn profile_over_height(c: &PlanarCurve) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut pts: Vec<Point> = c.points().to_vec();
    if pts[pts.len() - 1].y < pts[0].y {
        pts.reverse();
    }
    let span = pts[pts.len() - 1].y - pts[0].y;
    let mut z = Vec::with_capacity(pts.len());
    let mut x = Vec::with_capacity(pts.len());
    let mut top = f64::NEG_INFINITY;
    for p in &pts {
        if p.y < top - 1e-9 * span.max(1.0) {
            return Err(CsfError::GraphicalityLost(format!(
                "curve is not monotone in x² near ({}, {})",
                p.x, p.y
            )));
        }
        top = top.max(p.y);
        z.push(top);
        x.push(p.x);
    }
    Ok((z, x))
}

fn eval_profile(z: &[f64], x: &[f64], q: f64, from_above: bool) -> f64 {
    let i = if from_above {
        z.partition_point(|v| *v <= q)
    } else {
        z.partition_point(|v| *v < q)
    };
    if i == 0 {
        return x[0];
    }
    if i >= z.len() {
        return x[z.len() - 1];
    }
    let (z0, z1) = (z[i - 1], z[i]);
    if z1 == z0 {
        return if from_above { x[i - 1] } else { x[i] };
    }
    x[i - 1] + (x[i] - x[i - 1]) * (q - z0) / (z1 - z0)
}

/// `∫ |V − V̄| dz` for two curves that are graphs `x¹ = V(x²)`, integrated
/// exactly for the polylines over their common height range.
pub fn curve_l1_distance(a: &PlanarCurve, b: &PlanarCurve) -> Result<f64> {
    let (za, xa) = profile_over_height(a)?;
    let (zb, xb) = profile_over_height(b)?;
    let lo = za[0].max(zb[0]);
    let hi = za[za.len() - 1].min(zb[zb.len() - 1]);
    if !(hi > lo) {
        return Err(CsfError::DomainMismatch("curves share no height range".into()));
    }
    let mut knots: Vec<f64> = za
        .iter()
        .chain(&zb)
        .cloned()
        .filter(|z| *z > lo && *z < hi)
        .collect();
    knots.push(lo);
    knots.push(hi);
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (z0, z1) = (w[0], w[1]);
        let dz = z1 - z0;
        if dz <= 0.0 {
            continue;
        }
        let d0 = eval_profile(&za, &xa, z0, true) - eval_profile(&zb, &xb, z0, true);
        let d1 = eval_profile(&za, &xa, z1, false) - eval_profile(&zb, &xb, z1, false);
        total += if d0 * d1 >= 0.0 {
            0.5 * dz * (d0.abs() + d1.abs())
        } else {
            0.5 * dz * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs())
        };
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::circle;
    use crate::exact::{line, Direction, GrimReaperSpec};
    use crate::flow::{Axis, FlowSnapshot, Scheme};
    use crate::quadrature::integrate;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_moments_and_eigenbasis() {
        assert!((gaussian_inner(|_| 1.0, |_| 1.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((gaussian_inner(|y| y, |y| y).unwrap() - 2.0).abs() < 1e-12);
        let p3 = |y: f64| y * y - 2.0;
        assert!((gaussian_inner(p3, p3).unwrap() - 8.0).abs() < 1e-11);
        assert!(gaussian_inner(|_| 1.0, |y| y).unwrap().abs() < 1e-12);
        assert!(gaussian_inner(|_| 1.0, p3).unwrap().abs() < 1e-12);
        assert!(gaussian_inner(|y| y, p3).unwrap().abs() < 1e-12);
        // degree 40 exactness against the moment E y^{40} = 2^{20} · 39!!.
        let dfact: f64 = (1..=39).step_by(2).map(|k| k as f64).product();
        let exact = 2f64.powi(20) * dfact;
        let got = gaussian_inner(|y| y.powi(20), |y| y.powi(20)).unwrap();
        assert!((got / exact - 1.0).abs() < 1e-12);
        assert!(matches!(
            gaussian_inner(|_| f64::NAN, |_| 1.0),
            Err(CsfError::InvalidInput(_))
        ));
    }

    #[test]
    fn entropy_of_a_line_is_one() {
        let c = line(0.0, -200.0, 200.0, 8001).unwrap();
        let e = entropy(&c).unwrap();
        assert!((e.value - 1.0).abs() < 1e-3, "{e:?}");
        assert!(e.value <= 1.0 + 1e-9);
    }

    #[test]
    fn entropy_of_a_circle_matches_closed_form() {
        let r = 1.3;
        let c = circle(Point::new(0.4, -0.2), r, 512).unwrap();
        let e = entropy(&c).unwrap();
        // Independent oracle: dense scan of (4πλ)^{-1/2} e^{−r²/4λ} 2πr.
        let f = |l: f64| (4.0 * PI * l).powf(-0.5) * (-r * r / (4.0 * l)).exp() * 2.0 * PI * r;
        let best = (1..200_000)
            .map(|i| f(1e-5 * i as f64))
            .fold(0.0, f64::max);
        assert!((e.value - best).abs() < 1e-6, "{} vs {}", e.value, best);
        assert!((e.value - (2.0 * PI / std::f64::consts::E).sqrt()).abs() < 1e-6);
        assert!((e.lambda - r * r / 2.0).abs() < 1e-3);
        assert!(e.x0.dist(Point::new(0.4, -0.2)) < 1e-3);
        assert!(e.value >= e.grid_value - 1e-3);
    }

    #[test]
    fn entropy_rigid_motion_and_scaling() {
        let c = crate::exact::paperclip(-2.0, 256).unwrap();
        let e0 = entropy(&c).unwrap();
        let (s, co) = (0.7f64.sin(), 0.7f64.cos());
        let moved = c
            .map(|p| Point::new(co * p.x - s * p.y + 3.0, s * p.x + co * p.y - 1.0))
            .unwrap();
        let e1 = entropy(&moved).unwrap();
        assert!((e0.value - e1.value).abs() < 1e-6);
        let scaled = c.map(|p| p * 2.0).unwrap();
        let e2 = entropy(&scaled).unwrap();
        assert!((e0.value - e2.value).abs() < 1e-6);
        assert!((e2.lambda / e0.lambda - 4.0).abs() < 1e-3);
        assert!((e2.x0 - e0.x0 * 2.0).norm() < 1e-3);
    }

    #[test]
    fn total_curvature_examples() {
        let c = circle(Point::default(), 2.0, 400).unwrap();
        assert!((total_curvature(&c).unwrap() - 2.0 * PI).abs() < 1e-4);
        let g = GrimReaperSpec::new(0.0, PI, 0.0, Direction::Right).unwrap();
        // |z| reaches π/2k − 10⁻⁶ at arclength acosh(10⁶)/k.
        let half = (1e6f64).acosh() / g.k();
        let r = g.curve(0.0, half, 4001).unwrap();
        assert!((total_curvature(&r).unwrap() - PI).abs() < 1e-3);
    }

    fn half_disk(n: usize) -> Vec<Point> {
        (0..=n)
            .map(|i| {
                let a = -PI / 2.0 + PI * i as f64 / n as f64;
                Point::new(a.cos().max(0.0), a.sin())
            })
            .collect()
    }

    #[test]
    fn half_disk_area() {
        let a = region_area(&half_disk(20000)).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-6);
        let mut bad = half_disk(100);
        bad[50].x = -0.2;
        assert!(matches!(region_area(&bad), Err(CsfError::RegionUndefined(_))));
    }

    fn reaper_area_oracle(g: &GrimReaperSpec, t: f64) -> f64 {
        let k = g.k();
        let tip = g.tip_abscissa(t);
        let zmax = ((-k * tip).exp()).acos() / k;
        integrate(|z| tip + (k * z).cos().ln() / k, -zmax, zmax, 400)
    }

    #[test]
    fn reaper_finger_area_and_series() {
        let g = GrimReaperSpec::new(0.0, 1.0, 0.0, Direction::Right).unwrap();
        let mut tr = FlowTrajectory::new();
        for i in 0..11 {
            let t = -10.0 + 0.5 * i as f64;
            let c = g.curve(t, 40.0, 4001).unwrap();
            let regions = finger_regions(&c).unwrap();
            assert_eq!(regions.len(), 1);
            let exact = reaper_area_oracle(&g, t);
            assert!((regions[0].area / exact - 1.0).abs() < 1e-4);
            tr.push(FlowSnapshot {
                t,
                curve: c,
                scheme: Scheme::Explicit,
                dt: 0.0,
            })
            .unwrap();
        }
        let s = area_series(&tr, 1).unwrap();
        assert!((s.fit.slope + PI).abs() < 1e-3);
        assert!(s.fit.max_residual < 1e-4);

        let shifted = GrimReaperSpec::new(0.0, 1.0, 0.3, Direction::Right).unwrap();
        let mut tr2 = FlowTrajectory::new();
        for t in tr.times() {
            tr2.push(FlowSnapshot {
                t,
                curve: shifted.curve(t, 40.0, 4001).unwrap(),
                scheme: Scheme::Explicit,
                dt: 0.0,
            })
            .unwrap();
        }
        let s2 = area_series(&tr2, 1).unwrap();
        assert!((s2.fit.intercept - s.fit.intercept - 0.3).abs() < 1e-3);
        assert!(matches!(area_series(&tr, 2), Err(CsfError::RegionUndefined(_))));
    }

    #[test]
    fn l1_graph_distance_examples() {
        let v = SheetGraph::from_fn(Axis::OverX2, 0.0, 2.0, 101, 0.0, |z| z.sin()).unwrap();
        let w = SheetGraph::from_fn(Axis::OverX2, 0.0, 2.0, 101, 0.0, |z| z.sin() + 0.1).unwrap();
        assert_eq!(l1_graph_distance(&v, &v).unwrap(), 0.0);
        assert!((l1_graph_distance(&v, &w).unwrap() - 0.2).abs() < 1e-12);
        let other = SheetGraph::from_fn(Axis::OverX2, 0.0, 3.0, 101, 0.0, |z| z).unwrap();
        assert!(matches!(l1_graph_distance(&v, &other), Err(CsfError::DomainMismatch(_))));
    }

    #[test]
    fn curve_l1_distance_is_exact_for_polylines() {
        let a = PlanarCurve::new(
            (0..11).map(|i| Point::new(0.0, i as f64 * 0.2)).collect(),
            crate::curve::Topology::Open,
        )
        .unwrap();
        // x¹ = z − 1 on z ∈ [0, 2]: ∫|z − 1| = 1, sampled on a different grid.
        let b = PlanarCurve::new(
            (0..9).map(|i| {
                let z = i as f64 * 0.25;
                Point::new(z - 1.0, z)
            })
            .collect(),
            crate::curve::Topology::Open,
        )
        .unwrap();
        assert!((curve_l1_distance(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        assert!((curve_l1_distance(&b, &a.reversed()).unwrap() - 1.0).abs() < 1e-14);
    }
}
