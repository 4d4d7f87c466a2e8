//! Closed-form and glued solutions: lines, shrinking circles, the paper
//! clip, translating grim reapers and trombone initial data.

use crate::curve::{resample_arclength, PlanarCurve, Topology};
use crate::error::{CsfError, Result};
use crate::point::Point;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    /// `+1` for `Right`, `-1` for `Left`.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Right => 1.0,
            Direction::Left => -1.0,
        }
    }

    pub fn flip(self) -> Direction {
        match self {
            Direction::Right => Direction::Left,
            Direction::Left => Direction::Right,
        }
    }
}

/// `ln cosh x` without overflow.
pub fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `acosh(e^u)` for `u ≥ 0` without overflow.
fn acosh_exp(u: f64) -> f64 {
    u + (1.0 - (-2.0 * u).exp()).max(0.0).sqrt().ln_1p()
}

/// Samples of the static line `x² = a` on `[x_lo, x_hi]`.
pub fn line(a: f64, x_lo: f64, x_hi: f64, n: usize) -> Result<PlanarCurve> {
    if n < 2 || x_hi <= x_lo {
        return Err(CsfError::InvalidInput("line window must be nondegenerate".into()));
    }
    let pts = (0..n)
        .map(|i| Point::new(x_lo + (x_hi - x_lo) * i as f64 / (n - 1) as f64, a))
        .collect();
    PlanarCurve::new(pts, Topology::Open)
}

/// Radius of the shrinking circle at time `t`.
pub fn circle_radius(r0: f64, t: f64) -> Result<f64> {
    let r2 = r0 * r0 - 2.0 * t;
    if r2 <= 0.0 {
        return Err(CsfError::Extinct(format!(
            "circle of radius {r0} vanishes at t = {}",
            0.5 * r0 * r0
        )));
    }
    Ok(r2.sqrt())
}

/// Counterclockwise circle of radius `√(r0² − 2t)`.
pub fn shrinking_circle(r0: f64, t: f64, center: Point, n: usize) -> Result<PlanarCurve> {
    crate::curve::circle(center, circle_radius(r0, t)?, n)
}

/// A translating grim reaper between the asymptotes `a_lo < a_hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrimReaperSpec {
    pub a_lo: f64,
    pub a_hi: f64,
    pub b: f64,
    pub pointing: Direction,
}

impl GrimReaperSpec {
    pub fn new(a_lo: f64, a_hi: f64, b: f64, pointing: Direction) -> Result<Self> {
        if !(a_lo.is_finite() && a_hi.is_finite() && b.is_finite()) || a_hi <= a_lo {
            return Err(CsfError::InvalidInput(format!(
                "grim reaper needs finite a_lo < a_hi, got {a_lo}, {a_hi}"
            )));
        }
        Ok(GrimReaperSpec {
            a_lo,
            a_hi,
            b,
            pointing,
        })
    }

    pub fn width(&self) -> f64 {
        self.a_hi - self.a_lo
    }

    /// Translation speed `π / width`.
    pub fn k(&self) -> f64 {
        PI / self.width()
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.a_lo + self.a_hi)
    }

    pub fn tip_abscissa(&self, t: f64) -> f64 {
        self.b - self.pointing.sign() * self.k() * t
    }

    pub fn tip(&self, t: f64) -> Point {
        Point::new(self.tip_abscissa(t), self.mid())
    }

    /// Point at height offset `z` from the axis `x² = mid`.
    pub fn point(&self, t: f64, z: f64) -> Result<Point> {
        let k = self.k();
        if !z.is_finite() || z.abs() >= FRAC_PI_2 / k {
            return Err(CsfError::OutOfDomain(format!(
                "|z| = {} must be below π/(2k) = {}",
                z.abs(),
                FRAC_PI_2 / k
            )));
        }
        let x = self.tip_abscissa(t) + self.pointing.sign() * (k * z).cos().ln() / k;
        Ok(Point::new(x, self.mid() + z))
    }

    /// Point at signed arclength `s` from the tip, increasing with height.
    pub fn point_at_arclength(&self, t: f64, s: f64) -> Point {
        let k = self.k();
        Point::new(
            self.tip_abscissa(t) - self.pointing.sign() * ln_cosh(k * s) / k,
            self.mid() + (k * s).sinh().atan() / k,
        )
    }

    /// Curvature at arclength `s` for the upward parametrisation.
    pub fn curvature_at_arclength(&self, s: f64) -> f64 {
        let k = self.k();
        self.pointing.sign() * k / (k * s).cosh()
    }

    /// Distance to the nearer asymptote of the arm passing through abscissa
    /// `x`, or `None` beyond the tip.
    pub fn gap(&self, t: f64, x: f64) -> Option<f64> {
        let k = self.k();
        let u = k * self.pointing.sign() * (self.tip_abscissa(t) - x);
        if u < 0.0 {
            return None;
        }
        Some((-u).exp().min(1.0).asin() / k)
    }

    /// Height of the upper or lower arm above abscissa `x`.
    pub fn arm_height(&self, t: f64, x: f64, upper: bool) -> Option<f64> {
        self.gap(t, x)
            .map(|g| if upper { self.a_hi - g } else { self.a_lo + g })
    }

    /// Signed arclength at which the chosen arm reaches abscissa `x`.
    pub fn arclength_at(&self, t: f64, x: f64, upper: bool) -> Option<f64> {
        let k = self.k();
        let u = k * self.pointing.sign() * (self.tip_abscissa(t) - x);
        if u < 0.0 {
            return None;
        }
        let s = acosh_exp(u) / k;
        Some(if upper { s } else { -s })
    }

    /// `n` points equally spaced in arclength over `|s| ≤ half_length`.
    pub fn curve(&self, t: f64, half_length: f64, n: usize) -> Result<PlanarCurve> {
        if half_length <= 0.0 {
            return Err(CsfError::InvalidInput("half length must be positive".into()));
        }
        let pts = (0..n)
            .map(|i| {
                let s = -half_length + 2.0 * half_length * i as f64 / (n - 1) as f64;
                self.point_at_arclength(t, s)
            })
            .collect();
        PlanarCurve::new(pts, Topology::Open)
    }
}

/// Level-set function of the paper clip, `cosh x² − e^{−t} cos x¹`.
fn clip_level(t: f64, p: Point) -> f64 {
    p.y.cosh() - (-t).exp() * p.x.cos()
}

fn clip_gradient(t: f64, p: Point) -> Point {
    Point::new((-t).exp() * p.x.sin(), p.y.sinh())
}

/// Projects `p` onto the paper clip along the level-set gradient.
fn project_to_clip(t: f64, mut p: Point) -> Point {
    for _ in 0..50 {
        let f = clip_level(t, p);
        let g = clip_gradient(t, p);
        let step = g * (f / g.dot(g));
        p = p - step;
        if step.norm() < 1e-15 * (1.0 + p.norm()) {
            break;
        }
    }
    p
}

/// The closed convex ancient solution `cosh x² = e^{−t} cos x¹`, `t < 0`,
/// sampled counterclockwise with `n` points equally spaced in arclength.
pub fn paperclip(t: f64, n: usize) -> Result<PlanarCurve> {
    if t >= 0.0 || !t.is_finite() {
        return Err(CsfError::Extinct(format!("paper clip exists only for t < 0, got {t}")));
    }
    let dense = (64 * n).max(4096);
    let ey = (-t).exp();
    let pts: Vec<Point> = (0..dense)
        .map(|i| {
            let psi = TAU * i as f64 / dense as f64;
            let (s, c) = psi.sin_cos();
            let mut hi = f64::INFINITY;
            if c.abs() > 1e-300 {
                hi = hi.min(FRAC_PI_2 / c.abs());
            }
            if s.abs() > 1e-300 {
                hi = hi.min(ey.acosh() / s.abs());
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if clip_level(t, Point::new(mid * c, mid * s)) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 * hi {
                    break;
                }
            }
            let r = 0.5 * (lo + hi);
            Point::new(r * c, r * s)
        })
        .collect();
    let c = resample_arclength(&PlanarCurve::new(pts, Topology::Closed)?, n)?;
    c.map(|p| project_to_clip(t, p))
}

/// Normal velocity and curvature of the paper clip at a point on it, both
/// measured along the inward normal, from implicit differentiation of the
/// level-set formula.
pub fn paperclip_velocity_curvature(t: f64, p: Point) -> (f64, f64) {
    let e = (-t).exp();
    let g = clip_gradient(t, p);
    let gn = g.norm();
    let f_t = e * p.x.cos();
    let (fxx, fyy) = (e * p.x.cos(), p.y.cosh());
    let kappa = (fxx * g.y * g.y + fyy * g.x * g.x) / (gn * gn * gn);
    (f_t / gn, kappa)
}

/// Largest `|v_n − κ|` over the samples of [`paperclip`].
pub fn paperclip_residual(t: f64, n: usize) -> Result<f64> {
    let c = paperclip(t, n)?;
    Ok(c
        .points()
        .iter()
        .map(|&p| {
            let (v, k) = paperclip_velocity_curvature(t, p);
            (v - k).abs()
        })
        .fold(0.0, f64::max))
}

/// Heights and shifts of a trombone. Finger `i` (1-based) lies between
/// `a[i-1]` and `a[i]`; `tail_direction` is the direction of the tail along
/// the lowest asymptote `a[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TromboneSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub tail_direction: Direction,
}

/// Sampling controls for [`trombone_initial_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TromboneSampling {
    /// Target arclength spacing of the output.
    pub spacing: f64,
    /// How far the tails extend past the outermost tip.
    pub tail_margin: Option<f64>,
}

impl Default for TromboneSampling {
    fn default() -> Self {
        TromboneSampling {
            spacing: 0.05,
            tail_margin: None,
        }
    }
}

/// Minimum tip separation, in units of the largest finger width.
pub const TIP_SEPARATION_WIDTHS: f64 = 10.0;
/// Lower clip of the gluing tolerance.
pub const GLUE_TOL_FLOOR: f64 = 1e-8;

fn smoothstep5(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
}

impl TromboneSpec {
    pub fn new(a: Vec<f64>, b: Vec<f64>, tail_direction: Direction) -> Result<Self> {
        let s = TromboneSpec {
            a,
            b,
            tail_direction,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.b.len();
        if m < 2 {
            return Err(CsfError::InvalidInput(format!("trombone needs m >= 2 fingers, got {m}")));
        }
        if self.a.len() != m + 1 {
            return Err(CsfError::InvalidInput(format!(
                "{} heights given for {m} shifts; need m + 1",
                self.a.len()
            )));
        }
        if self.a.iter().chain(&self.b).any(|v| !v.is_finite()) {
            return Err(CsfError::NonFinite("trombone heights or shifts".into()));
        }
        if let Some(i) = (1..=m).find(|&i| self.a[i] <= self.a[i - 1]) {
            return Err(CsfError::InvalidInput(format!(
                "heights must be strictly increasing: a[{}] = {} >= a[{i}] = {}",
                i - 1,
                self.a[i - 1],
                self.a[i]
            )));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn pointing(&self, i: usize) -> Direction {
        let odd = i % 2 == 1;
        if odd == (self.tail_direction == Direction::Left) {
            Direction::Right
        } else {
            Direction::Left
        }
    }

    /// Grim reaper of finger `i`, `1 ≤ i ≤ m`.
    pub fn finger(&self, i: usize) -> GrimReaperSpec {
        GrimReaperSpec {
            a_lo: self.a[i - 1],
            a_hi: self.a[i],
            b: self.b[i - 1],
            pointing: self.pointing(i),
        }
    }

    pub fn max_width(&self) -> f64 {
        (1..=self.m())
            .map(|i| self.a[i] - self.a[i - 1])
            .fold(0.0, f64::max)
    }

    /// Strip half-width `1 + max |a_i|`.
    pub fn strip_bound(&self) -> f64 {
        1.0 + self.a.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    /// Smallest `|t0|` at which adjacent tips are separated, in the
    /// pointing direction, by the required number of widths.
    pub fn t_min(&self) -> f64 {
        let need = TIP_SEPARATION_WIDTHS * self.max_width();
        (1..self.m())
            .map(|i| {
                let f = self.finger(i);
                let g = self.finger(i + 1);
                let sigma = f.pointing.sign();
                (need - sigma * (f.b - g.b)) / (f.k() + g.k())
            })
            .fold(0.0, f64::max)
    }

    /// Gluing tolerance of the sheet at `a[j]`, `0 < j < m`.
    pub fn glue_tolerance(&self, j: usize, t: f64) -> f64 {
        let kmin = (1..=self.m())
            .map(|i| self.finger(i).k())
            .fold(f64::INFINITY, f64::min);
        let w = (self.a[j] - self.a[j - 1]).min(self.a[j + 1] - self.a[j]);
        (-0.5 * kmin * t.abs()).exp().clamp(GLUE_TOL_FLOOR, 0.1 * w)
    }

    /// Blending window `[lo, hi]` of the sheet at `a[j]` and the finger whose
    /// arm is used at `lo`.
    pub fn sheet_window(&self, j: usize, t: f64) -> Result<(f64, f64, usize)> {
        let h = self.glue_tolerance(j, t);
        let reach = |i: usize| {
            let f = self.finger(i);
            -(f.k() * h).sin().ln() / f.k()
        };
        let (f, g) = (self.finger(j), self.finger(j + 1));
        let (lo, hi, left) = if f.pointing == Direction::Right {
            (g.tip_abscissa(t) + reach(j + 1), f.tip_abscissa(t) - reach(j), j + 1)
        } else {
            (f.tip_abscissa(t) + reach(j), g.tip_abscissa(t) - reach(j + 1), j)
        };
        if !(hi > lo) {
            return Err(CsfError::GluingInfeasible(format!(
                "empty matching window at a[{j}] = {} for t = {t}",
                self.a[j]
            )));
        }
        Ok((lo, hi, left))
    }

    /// Height of the sheet or tail along `a[j]` at abscissa `x`, or `None`
    /// where that sheet does not extend.
    pub fn sheet_height(&self, j: usize, t: f64, x: f64) -> Option<f64> {
        let m = self.m();
        if j == 0 {
            return self.finger(1).arm_height(t, x, false);
        }
        if j == m {
            return self.finger(m).arm_height(t, x, true);
        }
        let (lo, hi, left) = self.sheet_window(j, t).ok()?;
        let right = if left == j { j + 1 } else { j };
        let branch = |i: usize| self.finger(i).arm_height(t, x, i == j);
        if x <= lo {
            branch(left)
        } else if x >= hi {
            branch(right)
        } else {
            let w = smoothstep5((x - lo) / (hi - lo));
            Some((1.0 - w) * branch(left)? + w * branch(right)?)
        }
    }

    fn tail_end(&self, i: usize, t: f64, margin: f64) -> f64 {
        let tips: Vec<f64> = (1..=self.m()).map(|j| self.finger(j).tip_abscissa(t)).collect();
        let lo = tips.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tips.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        match self.finger(i).pointing {
            Direction::Right => lo - margin,
            Direction::Left => hi + margin,
        }
    }

    /// Abscissae of the two tail ends used by [`trombone_initial_with`].
    pub fn tail_ends(&self, t: f64, sampling: &TromboneSampling) -> (f64, f64) {
        let margin = sampling
            .tail_margin
            .unwrap_or(TIP_SEPARATION_WIDTHS * self.max_width());
        (self.tail_end(1, t, margin), self.tail_end(self.m(), t, margin))
    }
}

/// Trombone initial data with default sampling.
pub fn trombone_initial(spec: &TromboneSpec, t0: f64) -> Result<PlanarCurve> {
    trombone_initial_with(spec, t0, &TromboneSampling::default())
}

/// Glues the `m` grim reapers of `spec` at time `t0` into one open curve,
/// ordered by increasing height.
pub fn trombone_initial_with(
    spec: &TromboneSpec,
    t0: f64,
    sampling: &TromboneSampling,
) -> Result<PlanarCurve> {
    spec.validate()?;
    let tmin = spec.t_min();
    if t0 >= 0.0 || t0.abs() < tmin {
        return Err(CsfError::GluingInfeasible(format!(
            "t0 = {t0} too close to 0; need t0 <= -{tmin}"
        )));
    }
    let m = spec.m();
    let windows: Vec<(f64, f64, usize)> = (1..m)
        .map(|j| spec.sheet_window(j, t0))
        .collect::<Result<_>>()?;
    let (x_start, x_end) = spec.tail_ends(t0, sampling);
    let kmax = (1..=m).map(|i| spec.finger(i).k()).fold(0.0, f64::max);
    let dense_h = (0.02 / kmax).min(sampling.spacing / 4.0);

    let mut dense: Vec<Point> = Vec::new();
    let push = |p: Point, dense: &mut Vec<Point>| {
        if dense.last() != Some(&p) {
            dense.push(p);
        }
    };
    for i in 1..=m {
        let f = spec.finger(i);
        // Arm abscissae where finger i hands over to the neighbouring piece.
        let x_lo_end = if i == 1 {
            x_start
        } else {
            let (lo, hi, left) = windows[i - 2];
            if left == i { lo } else { hi }
        };
        let x_hi_end = if i == m {
            x_end
        } else {
            let (lo, hi, left) = windows[i - 1];
            if left == i { lo } else { hi }
        };
        let s0 = f.arclength_at(t0, x_lo_end, false).ok_or_else(|| {
            CsfError::GluingInfeasible(format!("finger {i} does not reach x = {x_lo_end}"))
        })?;
        let s1 = f.arclength_at(t0, x_hi_end, true).ok_or_else(|| {
            CsfError::GluingInfeasible(format!("finger {i} does not reach x = {x_hi_end}"))
        })?;
        let count = ((s1 - s0) / dense_h).ceil().max(8.0) as usize;
        for q in 0..=count {
            let s = s0 + (s1 - s0) * q as f64 / count as f64;
            let mut p = f.point_at_arclength(t0, s);
            if q == count {
                p.x = x_hi_end;
            }
            if q == 0 {
                p.x = x_lo_end;
            }
            push(p, &mut dense);
        }
        if i < m {
            let (lo, hi, left) = windows[i - 1];
            let count = ((hi - lo) / dense_h).ceil().max(8.0) as usize;
            for q in 1..count {
                let frac = q as f64 / count as f64;
                let x = if left == i { lo + (hi - lo) * frac } else { hi - (hi - lo) * frac };
                let y = spec.sheet_height(i, t0, x).ok_or_else(|| {
                    CsfError::GluingInfeasible(format!("sheet {i} undefined at x = {x}"))
                })?;
                push(Point::new(x, y), &mut dense);
            }
        }
    }
    let dense = PlanarCurve::new(dense, Topology::Open)?;
    let n = ((dense.length() / sampling.spacing).ceil() as usize + 1).max(64);
    resample_arclength(&dense, n)
}
