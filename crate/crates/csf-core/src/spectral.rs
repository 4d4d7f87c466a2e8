//! Spectral dynamics of rescaled sheets: the eigenbasis of
//! `𝓛 = ∂² − (y/2)∂ + ½`, the cutoff profile `û`, error terms, mode
//! energies and the unstable/neutral dominance test.

use crate::error::{CsfError, Result};
use crate::exact::TromboneSpec;
use crate::flow::{cubic_eval, t_of, RescaledSheet};
use crate::functionals::GaussianQuadrature;
use crate::io::fmt12;
use serde::Serialize;

/// `−λ_i`, the eigenvalues of `𝓛` on `φ₁, φ₂, φ₃`.
pub const EIGENVALUES: [f64; 3] = [-0.5, 0.0, 0.5];

/// Smallest graphical radius accepted by [`cutoff`].
pub const MIN_RHO: f64 = 10.0;

/// Fraction of a series (most negative `τ`) on which dominance must hold.
pub const TAIL_FRACTION: f64 = 0.6;

/// The first three normalised eigenfunctions, `i ∈ {1, 2, 3}`.
pub fn phi(i: usize, y: f64) -> f64 {
    match i {
        1 => 1.0,
        2 => y / 2f64.sqrt(),
        3 => (y * y - 2.0) / 8f64.sqrt(),
        _ => panic!("eigenfunction index {i} out of range"),
    }
}

/// `𝓛 f` on a uniform grid by central differences; the two end samples are
/// left at zero.
pub fn apply_l(f: &[f64], y: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let h = y[i + 1] - y[i];
        let d2 = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
        let d1 = (f[i + 1] - f[i - 1]) / (2.0 * h);
        out[i] = d2 - 0.5 * y[i] * d1 + 0.5 * f[i];
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenbasisReport {
    /// `sup |𝓛φ_i + λ_i φ_i|` over the grid interior.
    pub residuals: [f64; 3],
    /// `max |⟨φ_i, φ_j⟩ − δ_ij|`.
    pub orthonormality: f64,
}

pub fn eigenbasis_check(h: f64, y_max: f64) -> EigenbasisReport {
    let n = (2.0 * y_max / h).round() as usize + 1;
    let y: Vec<f64> = (0..n).map(|i| -y_max + h * i as f64).collect();
    let mut residuals = [0.0; 3];
    for i in 0..3 {
        let f: Vec<f64> = y.iter().map(|&v| phi(i + 1, v)).collect();
        let lf = apply_l(&f, &y);
        residuals[i] = (1..n - 1)
            .map(|j| (lf[j] + EIGENVALUES[i] * f[j]).abs())
            .fold(0.0, f64::max);
    }
    let q = GaussianQuadrature::shared();
    let mut orth: f64 = 0.0;
    for i in 1..=3 {
        for j in 1..=3 {
            let v = q.inner(|y| phi(i, y), |y| phi(j, y)).expect("finite eigenfunctions");
            let d = if i == j { 1.0 } else { 0.0 };
            orth = orth.max((v - d).abs());
        }
    }
    EigenbasisReport {
        residuals,
        orthonormality: orth,
    }
}

fn smoothstep5(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if x >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let v = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    let d1 = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    let d2 = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    (v, d1, d2)
}

/// Cutoff `η(s)` with its first two derivatives: 1 on `|s| ≤ ½`, 0 on
/// `|s| ≥ ¾`, a quintic smoothstep in between.
pub fn eta(s: f64) -> (f64, f64, f64) {
    let (v, d1, d2) = smoothstep5(4.0 * (s.abs() - 0.5));
    (1.0 - v, -4.0 * d1 * s.signum(), -16.0 * d2)
}

/// Measured `max |η'|` and `max |η''|`.
pub fn cutoff_constants() -> (f64, f64) {
    let mut m1: f64 = 0.0;
    let mut m2: f64 = 0.0;
    for i in 0..=100_000 {
        let s = 0.5 + 0.25 * i as f64 / 100_000.0;
        let (_, d1, d2) = eta(s);
        m1 = m1.max(d1.abs());
        m2 = m2.max(d2.abs());
    }
    (m1, m2)
}

/// Centered differences of second order, one-sided at the ends.
pub fn derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
    }
    if n >= 3 {
        d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
        d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    }
    d
}

/// Second derivative, second order, with one-sided four-point ends.
pub fn second_derivative(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h);
    }
    if n >= 4 {
        d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / (h * h);
        d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / (h * h);
    }
    d
}

/// Profile with its derivatives on the sheet grid.
#[derive(Clone, Debug)]
pub struct SheetJet {
    pub tau: f64,
    pub rho: f64,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub u_y: Vec<f64>,
    pub u_yy: Vec<f64>,
    pub u_yyy: Vec<f64>,
}

impl SheetJet {
    pub fn from_sheet(s: &RescaledSheet) -> Self {
        let h = s.h();
        let u_y = derivative(&s.values, h);
        let u_yy = second_derivative(&s.values, h);
        let u_yyy = derivative(&u_yy, h);
        SheetJet {
            tau: s.tau,
            rho: s.rho,
            y: s.ys(),
            u: s.values.clone(),
            u_y,
            u_yy,
            u_yyy,
        }
    }

    fn h(&self) -> f64 {
        self.y[1] - self.y[0]
    }

    /// Cubic interpolation of a grid array; zero outside the grid.
    fn at(&self, f: &[f64], y: f64) -> f64 {
        if y < self.y[0] || y > self.y[self.y.len() - 1] {
            return 0.0;
        }
        cubic_eval(f, self.y[0], self.h(), y)
    }
}

/// `û = u η(y/ρ)`, defined on all of ℝ.
#[derive(Clone, Debug)]
pub struct CutProfile {
    pub jet: SheetJet,
}

impl CutProfile {
    pub fn value(&self, y: f64) -> f64 {
        let (e, _, _) = eta(y / self.jet.rho);
        if e == 0.0 {
            return 0.0;
        }
        self.jet.at(&self.jet.u, y) * e
    }
}

pub fn cutoff(sheet: &RescaledSheet) -> Result<CutProfile> {
    if !(sheet.rho > MIN_RHO) {
        return Err(CsfError::HypothesisViolated(format!(
            "graphical radius {} must exceed {MIN_RHO}",
            sheet.rho
        )));
    }
    Ok(CutProfile {
        jet: SheetJet::from_sheet(sheet),
    })
}

/// Mode coefficients and energies of `û` at one rescaled time.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralState {
    pub tau: f64,
    pub rho: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub norm_sq: f64,
    pub w_plus: f64,
    pub w_zero: f64,
    pub w_minus: f64,
    /// `û` at the shared quadrature nodes.
    #[serde(skip)]
    pub hat_nodes: Vec<f64>,
}

impl SpectralState {
    pub fn from_node_values(tau: f64, rho: f64, hat: Vec<f64>) -> Result<Self> {
        let q = GaussianQuadrature::shared();
        let p1 = q.sample(|y| phi(1, y));
        let p2 = q.sample(|y| phi(2, y));
        let p3 = q.sample(|y| phi(3, y));
        let alpha1 = q.inner_values(&hat, &p1)?;
        let alpha2 = q.inner_values(&hat, &p2)?;
        let alpha3 = q.inner_values(&hat, &p3)?;
        let norm_sq = q.inner_values(&hat, &hat)?;
        Ok(SpectralState {
            tau,
            rho,
            alpha1,
            alpha2,
            alpha3,
            norm_sq,
            w_plus: alpha1 * alpha1 + rho * rho * (-rho * rho / 16.0).exp(),
            w_zero: alpha2 * alpha2,
            w_minus: norm_sq - alpha1 * alpha1 - alpha2 * alpha2,
            hat_nodes: hat,
        })
    }

    /// State of an arbitrary profile given as a function.
    pub fn from_fn(tau: f64, rho: f64, hat: impl Fn(f64) -> f64) -> Result<Self> {
        let q = GaussianQuadrature::shared();
        SpectralState::from_node_values(tau, rho, q.sample(hat))
    }

    /// Energies only, for synthetic dominance tests.
    pub fn from_energies(tau: f64, w_plus: f64, w_zero: f64, w_minus: f64) -> Self {
        SpectralState {
            tau,
            rho: f64::INFINITY,
            alpha1: w_plus.sqrt(),
            alpha2: w_zero.sqrt(),
            alpha3: 0.0,
            norm_sq: w_plus + w_zero + w_minus,
            w_plus,
            w_zero,
            w_minus,
            hat_nodes: Vec::new(),
        }
    }
}

pub fn project(cut: &CutProfile) -> Result<SpectralState> {
    SpectralState::from_fn(cut.jet.tau, cut.jet.rho, |y| cut.value(y))
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorTerms {
    pub y: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub e_tilde: Vec<f64>,
    pub sup_e1: f64,
    pub sup_e2: f64,
    pub sup_e_tilde: f64,
    /// `2|⟨E, P_* û⟩|` for `* = +, 0, −`.
    pub projections: [f64; 3],
    /// `(‖û‖² + ρ²e^{−ρ²/16}) / √ρ`.
    pub bound_unit: f64,
    /// Smallest `K` with `2|⟨E, P_* û⟩| ≤ K · bound_unit` for all `*`.
    pub fitted_k: f64,
    /// `max |η'|` and `max |η''|` of the cutoff in use.
    pub cutoff_constants: (f64, f64),
}

fn error_parts(u: f64, uy: f64, uyy: f64, y: f64, rho: f64, log_rate: f64) -> (f64, f64, f64) {
    let (e, e1d, e2d) = eta(y / rho);
    let hat_y = uy * e + u * e1d / rho;
    let g = uyy / (1.0 + uy * uy);
    let et = -hat_y * g;
    let big1 = hat_y * et;
    let big2 = g * (e * (e - 1.0) * uy * uy + 2.0 * u * uy * e * e1d / rho + u * u * e1d * e1d / (rho * rho))
        + (e1d / rho) * ((0.5 - log_rate) * u * y - 2.0 * uy)
        - u * e2d / (rho * rho);
    (big1, big2, et)
}

/// `E = û_τ − 𝓛û = E₁ + E₂` and `Ẽ` for a sheet solving the rescaled
/// flow, with `ρ'` supplied by the caller.
pub fn error_terms(jet: &SheetJet, rho_prime: Option<f64>) -> Result<ErrorTerms> {
    let rp = rho_prime.ok_or_else(|| {
        CsfError::InvalidInput("error terms need the derivative of the graphical radius".into())
    })?;
    let rho = jet.rho;
    let rate = rp / rho;
    let n = jet.y.len();
    let mut e1 = vec![0.0; n];
    let mut e2 = vec![0.0; n];
    let mut et = vec![0.0; n];
    for i in 0..n {
        let (a, b, c) = error_parts(jet.u[i], jet.u_y[i], jet.u_yy[i], jet.y[i], rho, rate);
        e1[i] = a;
        e2[i] = b;
        et[i] = c;
    }
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let signed = forcing(jet, rp)?;
    let projections = signed.map(f64::abs);
    let state = project(&CutProfile { jet: jet.clone() })?;
    let bound_unit = (state.norm_sq + rho * rho * (-rho * rho / 16.0).exp()) / rho.sqrt();
    let fitted_k = projections.iter().fold(0.0f64, |m, p| m.max(p / bound_unit));
    Ok(ErrorTerms {
        sup_e1: sup(&e1),
        sup_e2: sup(&e2),
        sup_e_tilde: sup(&et),
        y: jet.y.clone(),
        e1,
        e2,
        e_tilde: et,
        projections,
        bound_unit,
        fitted_k,
        cutoff_constants: cutoff_constants(),
    })
}

/// `ρ'/ρ` by differences of `log ρ` on the (possibly nonuniform) τ grid.
pub fn log_rate(taus: &[f64], rhos: &[f64]) -> Vec<f64> {
    let n = taus.len();
    let l: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
    (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (l[b] - l[a]) / (taus[b] - taus[a])
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub margin: f64,
    pub pass: bool,
}

impl Check {
    fn new(margin: f64) -> Self {
        Check {
            margin,
            pass: margin >= 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub r1: Check,
    pub r2: Check,
    pub r3: Check,
    pub h2_value: Check,
    pub h2_gradient: Check,
    pub h3: Check,
    /// `min ((A + K₀)/√ρ − ‖u_y‖)`.
    pub gradient_decay: Check,
    pub a: f64,
    pub eps0: f64,
    pub k0: f64,
    pub k1: f64,
    pub mu: f64,
    pub b: f64,
}

/// Largest admissible gradient bound in (H2).
pub const EPS0_MAX: f64 = 0.01;

/// Fits the constants of the hypotheses on the sheet series and reports
/// margins. Sup norms are taken over the whole sheet window.
pub fn hypotheses_check(series: &[RescaledSheet]) -> Result<HypothesisReport> {
    if series.len() < 10 {
        return Err(CsfError::InvalidInput("hypothesis check needs at least 10 samples".into()));
    }
    let taus: Vec<f64> = series.iter().map(|s| s.tau).collect();
    let rhos: Vec<f64> = series.iter().map(|s| s.rho).collect();
    if rhos.iter().any(|r| !(*r > 0.0)) {
        return Err(CsfError::InvalidInput("graphical radius must be positive".into()));
    }
    let rates = log_rate(&taus, &rhos);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let jets: Vec<SheetJet> = series.iter().map(SheetJet::from_sheet).collect();
    let u_sup: Vec<f64> = jets.iter().map(|j| sup(&j.u)).collect();
    let uy_sup: Vec<f64> = jets.iter().map(|j| sup(&j.u_y)).collect();
    let tau0 = taus.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let eps0 = uy_sup.iter().cloned().fold(0.0, f64::max);
    let a = u_sup
        .iter()
        .zip(&taus)
        .map(|(u, t)| u * (-eps0 * (t - tau0)).exp())
        .fold(0.0, f64::max);
    let k0 = jets
        .iter()
        .map(|j| 2.0 * j.rho * sup(&j.u_yy))
        .fold(0.0, f64::max);
    let k1 = jets
        .iter()
        .map(|j| j.rho * j.rho * sup(&j.u_yyy))
        .fold(0.0, f64::max);
    let mu = -rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let b = rhos.iter().cloned().fold(f64::INFINITY, f64::min);
    let r1 = rates
        .iter()
        .map(|r| (r + 0.5).min(-r))
        .fold(f64::INFINITY, f64::min);
    let decay = uy_sup
        .iter()
        .zip(&rhos)
        .map(|(g, r)| (a + k0) / r.sqrt() - g)
        .fold(f64::INFINITY, f64::min);
    Ok(HypothesisReport {
        r1: Check::new(r1 + 1e-12),
        r2: Check::new(b - MIN_RHO),
        r3: Check {
            margin: mu,
            pass: mu > 1e-12,
        },
        h2_value: Check::new(a - u_sup.iter().zip(&taus).map(|(u, t)| u * (-eps0 * (t - tau0)).exp()).fold(0.0, f64::max)),
        h2_gradient: Check {
            margin: EPS0_MAX - eps0,
            pass: eps0 < EPS0_MAX,
        },
        h3: Check::new(if k0.is_finite() { 0.0 } else { -1.0 }),
        gradient_decay: Check::new(decay),
        a,
        eps0,
        k0,
        k1,
        mu,
        b,
    })
}

/// Time derivative of `v` at index `i`; fourth order on uniform grids when
/// two neighbours exist on each side.
fn time_derivative(t: &[f64], v: &[f64], i: usize) -> Option<f64> {
    let n = t.len();
    if i == 0 || i + 1 >= n {
        return None;
    }
    let h = t[i + 1] - t[i];
    let uniform = i >= 2
        && i + 2 < n
        && (1..=4).all(|k| ((t[i + k - 2] - t[i + k - 3]) - h).abs() <= 1e-9 * h.abs());
    if uniform {
        return Some((v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h));
    }
    let (h0, h1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
    Some(
        -h1 / (h0 * (h0 + h1)) * v[i - 1] + (h1 - h0) / (h0 * h1) * v[i]
            + h0 / (h1 * (h0 + h1)) * v[i + 1],
    )
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeTrack {
    pub states: Vec<SpectralState>,
    /// `2⟨E, P_* û⟩` per state, signed.
    pub forcing: Vec<[f64; 3]>,
    /// Residuals of the three mode equations at interior samples; the
    /// stable mode reports the excess over its inequality.
    pub residuals: Vec<(f64, [f64; 3])>,
    pub max_residual: [f64; 3],
}

/// Checks `d‖P₊û‖²/dτ = ‖P₊û‖² + 2⟨E,P₊û⟩`, `d‖P₀û‖²/dτ = 2⟨E,P₀û⟩` and
/// `d‖P₋û‖²/dτ ≤ −‖P₋û‖² + 2⟨E,P₋û⟩` by differencing in τ.
pub fn mode_track(states: Vec<SpectralState>, forcing: Vec<[f64; 3]>) -> Result<ModeTrack> {
    if states.len() != forcing.len() || states.len() < 3 {
        return Err(CsfError::InvalidInput("mode track needs 3 or more states with forcing".into()));
    }
    if states.windows(2).any(|w| !(w[1].tau > w[0].tau)) && states.windows(2).any(|w| !(w[1].tau < w[0].tau)) {
        return Err(CsfError::InvalidInput("mode track needs a monotone τ grid".into()));
    }
    let t: Vec<f64> = states.iter().map(|s| s.tau).collect();
    let plus: Vec<f64> = states.iter().map(|s| s.alpha1 * s.alpha1).collect();
    let zero: Vec<f64> = states.iter().map(|s| s.w_zero).collect();
    let minus: Vec<f64> = states.iter().map(|s| s.w_minus).collect();
    let mut residuals = Vec::new();
    let mut max_residual = [0.0f64; 3];
    for i in 0..states.len() {
        let (Some(dp), Some(d0), Some(dm)) = (
            time_derivative(&t, &plus, i),
            time_derivative(&t, &zero, i),
            time_derivative(&t, &minus, i),
        ) else {
            continue;
        };
        let f = forcing[i];
        let r = [
            (dp - plus[i] - f[0]).abs(),
            (d0 - f[1]).abs(),
            (dm - (-minus[i] + f[2])).max(0.0),
        ];
        for k in 0..3 {
            max_residual[k] = max_residual[k].max(r[k]);
        }
        residuals.push((t[i], r));
    }
    Ok(ModeTrack {
        states,
        forcing,
        residuals,
        max_residual,
    })
}

/// Signed `2⟨E, P_* û⟩` for a sheet.
pub fn forcing(jet: &SheetJet, rho_prime: f64) -> Result<[f64; 3]> {
    let q = GaussianQuadrature::shared();
    let rho = jet.rho;
    let rate = rho_prime / rho;
    let n = jet.y.len();
    let e: Vec<f64> = q
        .nodes
        .iter()
        .map(|&y| {
            if y < jet.y[0] || y > jet.y[n - 1] {
                return 0.0;
            }
            let (a, b, _) = error_parts(
                jet.at(&jet.u, y),
                jet.at(&jet.u_y, y),
                jet.at(&jet.u_yy, y),
                y,
                rho,
                rate,
            );
            a + b
        })
        .collect();
    let state = project(&CutProfile { jet: jet.clone() })?;
    let plus: Vec<f64> = q.nodes.iter().map(|_| state.alpha1).collect();
    let zero: Vec<f64> = q.nodes.iter().map(|&y| state.alpha2 * phi(2, y)).collect();
    let minus: Vec<f64> = state
        .hat_nodes
        .iter()
        .zip(plus.iter().zip(&zero))
        .map(|(h, (a, b))| h - a - b)
        .collect();
    Ok([
        2.0 * q.inner_values(&e, &plus)?,
        2.0 * q.inner_values(&e, &zero)?,
        2.0 * q.inner_values(&e, &minus)?,
    ])
}

/// Cuts, projects and tracks a series of rescaled sheets.
pub fn sheet_mode_track(series: &[RescaledSheet]) -> Result<ModeTrack> {
    let taus: Vec<f64> = series.iter().map(|s| s.tau).collect();
    let rhos: Vec<f64> = series.iter().map(|s| s.rho).collect();
    let rates = log_rate(&taus, &rhos);
    let mut states = Vec::new();
    let mut forces = Vec::new();
    for (s, r) in series.iter().zip(&rates) {
        let cut = cutoff(s)?;
        forces.push(forcing(&cut.jet, r * s.rho)?);
        states.push(project(&cut)?);
    }
    mode_track(states, forces)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MzVerdict {
    /// `W₊ + W₋ ≤ e^{μτ/2} W₀` on the tail.
    NeutralDominant,
    /// `W₀ + W₋ ≤ e^{μτ/2} W₊` on the tail.
    UnstableDominant,
    Undetermined,
}

#[derive(Clone, Debug, Serialize)]
pub struct MzReport {
    pub verdict: MzVerdict,
    /// `(τ, e^{μτ/2}W₀ − W₊ − W₋, e^{μτ/2}W₊ − W₀ − W₋)` per state.
    pub margins: Vec<(f64, f64, f64)>,
    pub tail_len: usize,
}

fn tail_indices(states: &[SpectralState]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..states.len()).collect();
    idx.sort_by(|a, b| states[*a].tau.total_cmp(&states[*b].tau));
    let k = ((TAIL_FRACTION * states.len() as f64).ceil() as usize).max(1);
    idx.truncate(k);
    idx
}

pub fn mz_classify(states: &[SpectralState], mu: f64) -> Result<MzReport> {
    if states.len() < 10 {
        return Err(CsfError::InvalidInput("dominance test needs at least 10 states".into()));
    }
    let margins: Vec<(f64, f64, f64)> = states
        .iter()
        .map(|s| {
            let f = (mu * s.tau / 2.0).exp();
            let wm = s.w_minus.max(0.0);
            (s.tau, f * s.w_zero - s.w_plus - wm, f * s.w_plus - s.w_zero - wm)
        })
        .collect();
    let tail = tail_indices(states);
    let mz1 = tail.iter().all(|&i| margins[i].1 >= 0.0);
    let mz2 = tail.iter().all(|&i| margins[i].2 >= 0.0);
    let verdict = match (mz1, mz2) {
        (true, false) => MzVerdict::NeutralDominant,
        (false, true) => MzVerdict::UnstableDominant,
        _ => MzVerdict::Undetermined,
    };
    Ok(MzReport {
        verdict,
        margins,
        tail_len: tail.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SharpLimit {
    pub a: f64,
    /// `max |e^{−τ/2}α₁ − a|` over the tail.
    pub spread: f64,
    /// `(τ, ‖e^{−τ/2}û − a‖², (1 + a²)e^{−ρ²/36})` over the tail.
    pub tail: Vec<(f64, f64, f64)>,
    pub holds: bool,
}

/// Limit `a` of `e^{−τ/2}α₁` as `τ → −∞`, read off at the most negative
/// sample, and the tail estimate against it.
pub fn sharp_limit_fit(states: &[SpectralState], mu: f64) -> Result<SharpLimit> {
    let mz = mz_classify(states, mu)?;
    if mz.verdict != MzVerdict::UnstableDominant {
        return Err(CsfError::NotApplicable(format!(
            "sharp limit needs unstable dominance, found {:?}",
            mz.verdict
        )));
    }
    let tail = tail_indices(states);
    let a = {
        let s = &states[tail[0]];
        (-s.tau / 2.0).exp() * s.alpha1
    };
    let q = GaussianQuadrature::shared();
    let mut rows = Vec::new();
    let mut spread: f64 = 0.0;
    let mut holds = true;
    for &i in &tail {
        let s = &states[i];
        let sc = (-s.tau / 2.0).exp();
        spread = spread.max((sc * s.alpha1 - a).abs());
        if s.hat_nodes.is_empty() {
            continue;
        }
        let d: Vec<f64> = s.hat_nodes.iter().map(|h| sc * h - a).collect();
        let dist = q.inner_values(&d, &d)?;
        let bound = (1.0 + a * a) * (-s.rho * s.rho / 36.0).exp();
        holds &= dist <= bound;
        rows.push((s.tau, dist, bound));
    }
    Ok(SharpLimit {
        a,
        spread,
        tail: rows,
        holds,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct InterpolationReport {
    pub f_sup: f64,
    pub df_sup: f64,
    pub d2f_sup: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// `(2/ξ)‖f‖ + (ξ/2)‖f''‖ − ‖f'‖` with sup norms over a uniform grid on
/// `[−ℓ, ℓ]`; `f'` is differenced from `f`.
pub fn interpolation_check(f: &[f64], d2f: &[f64], ell: f64, xi: f64) -> Result<InterpolationReport> {
    if !(ell > 4.0) || !(xi > 0.0 && xi < ell) {
        return Err(CsfError::InvalidInput(format!("need ℓ > 4 and 0 < ξ < ℓ, got ℓ = {ell}, ξ = {xi}")));
    }
    if f.len() != d2f.len() || f.len() < 3 {
        return Err(CsfError::InvalidInput("samples of f and f'' must match".into()));
    }
    let h = 2.0 * ell / (f.len() - 1) as f64;
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let df = derivative(f, h);
    let (a, b, c) = (sup(f), sup(&df), sup(d2f));
    let rhs = 2.0 / xi * a + xi / 2.0 * c;
    Ok(InterpolationReport {
        f_sup: a,
        df_sup: b,
        d2f_sup: c,
        rhs,
        margin: rhs - b,
    })
}

/// Polynomial in `y` by ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, y: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * y + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    /// `𝓛p` exactly.
    pub fn apply_l(&self) -> Poly {
        let d1 = self.derivative();
        let d2 = d1.derivative();
        let mut out = vec![0.0; self.0.len()];
        for (k, c) in self.0.iter().enumerate() {
            out[k] += 0.5 * c;
        }
        for (k, c) in d1.0.iter().enumerate() {
            out[k + 1] -= 0.5 * c;
        }
        for (k, c) in d2.0.iter().enumerate() {
            out[k] += c;
        }
        Poly(out)
    }

    /// `P₋p = p − ⟨p,1⟩ − ½⟨p,y⟩y`.
    pub fn stable_part(&self) -> Result<Poly> {
        let q = GaussianQuadrature::shared();
        let a1 = q.inner(|y| self.eval(y), |_| 1.0)?;
        let a2 = q.inner(|y| self.eval(y), |y| y)?;
        let mut c = self.0.clone();
        c.resize(c.len().max(2), 0.0);
        c[0] -= a1;
        c[1] -= 0.5 * a2;
        Ok(Poly(c))
    }
}

/// `⟨𝓛P₋p, P₋p⟩ + ½‖P₋p‖²`, which must not exceed zero.
pub fn coercivity_excess(p: &Poly) -> Result<f64> {
    let q = GaussianQuadrature::shared();
    let m = p.stable_part()?;
    let lm = m.apply_l();
    let a = q.inner(|y| lm.eval(y), |y| m.eval(y))?;
    let b = q.inner(|y| m.eval(y), |y| m.eval(y))?;
    Ok(a + 0.5 * b)
}

/// Default graphical radius `ρ(τ) = e^{−δτ}/2`.
pub fn default_rho(tau: f64, delta: f64) -> f64 {
    0.5 * (-delta * tau).exp()
}

/// Rescaled profile of trombone sheet `j` at rescaled time `τ` on
/// `[−2ρ, 2ρ]` with `n` samples, taken from the glued sheet formula.
pub fn trombone_rescaled_sheet(spec: &TromboneSpec, j: usize, tau: f64, rho: f64, n: usize) -> Result<RescaledSheet> {
    let t = t_of(tau);
    let scale = (-tau / 2.0).exp();
    let h = 4.0 * rho / (n - 1) as f64;
    let values = (0..n)
        .map(|i| {
            let y = -2.0 * rho + h * i as f64;
            spec.sheet_height(j, t, scale * y)
                .map(|v| v / scale)
                .ok_or_else(|| CsfError::OutOfDomain(format!("sheet {j} does not cover y = {y} at τ = {tau}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(RescaledSheet { tau, rho, values })
}

/// CSV of a state series with dominance margins at `μ`.
pub fn states_csv(states: &[SpectralState], mu: f64) -> String {
    let mut out = String::from("tau,rho,alpha1,alpha2,w_plus,w_zero,w_minus,mz1_margin,mz2_margin\n");
    for s in states {
        let f = (mu * s.tau / 2.0).exp();
        let wm = s.w_minus.max(0.0);
        let row = [
            s.tau,
            s.rho,
            s.alpha1,
            s.alpha2,
            s.w_plus,
            s.w_zero,
            s.w_minus,
            f * s.w_zero - s.w_plus - wm,
            f * s.w_plus - s.w_zero - wm,
        ];
        let cells: Vec<String> = row.iter().map(|v| fmt12(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{Direction, GrimReaperSpec};

    #[test]
    fn eigenbasis_residuals_and_orthonormality() {
        let r = eigenbasis_check(1e-3, 6.0);
        assert!(r.residuals.iter().all(|v| *v <= 1e-6), "{r:?}");
        assert!(r.orthonormality <= 1e-10);
        // 𝓛φ₃(0) = −½ φ₃(0) = 2^{−1/2}/2.
        let y = [-1e-3, 0.0, 1e-3];
        let f: Vec<f64> = y.iter().map(|v| phi(3, *v)).collect();
        let l = apply_l(&f, &y);
        assert!((l[1] - 0.5f64.sqrt() / 2.0).abs() < 1e-6);
    }

    #[test]
    fn cutoff_shape_and_constants() {
        assert_eq!(eta(0.3).0, 1.0);
        assert_eq!(eta(-0.5).0, 1.0);
        assert_eq!(eta(0.8).0, 0.0);
        let (m1, m2) = cutoff_constants();
        assert!((m1 - 7.5).abs() < 1e-6);
        assert!((m2 - 40.0 * 3f64.sqrt() * 4.0 / 3.0).abs() < 1e-3, "{m2}");
        // η' against a difference quotient.
        let h = 1e-6;
        for s in [0.55, 0.6, -0.7] {
            let fd = (eta(s + h).0 - eta(s - h).0) / (2.0 * h);
            assert!((fd - eta(s).1).abs() < 1e-6);
            let fd2 = (eta(s + h).1 - eta(s - h).1) / (2.0 * h);
            assert!((fd2 - eta(s).2).abs() < 1e-4);
        }
    }

    fn flat_sheet(a: f64, rho: f64, tau: f64) -> RescaledSheet {
        RescaledSheet {
            tau,
            rho,
            values: vec![a; 2001],
        }
    }

    #[test]
    fn cutoff_requires_large_radius() {
        assert!(matches!(cutoff(&flat_sheet(1.0, 10.0, -1.0)), Err(CsfError::HypothesisViolated(_))));
        let c = cutoff(&flat_sheet(2.0, 12.0, -1.0)).unwrap();
        assert!((c.value(5.9) - 2.0).abs() < 1e-14);
        assert_eq!(c.value(-9.1), 0.0);
    }

    #[test]
    fn constant_cutoff_error_bound() {
        let a = 1.7;
        let rho = 12.0;
        let c = cutoff(&flat_sheet(a, rho, -1.0)).unwrap();
        // Independent route: composite Gauss–Legendre on the transition.
        let w = |y: f64| (-y * y / 4.0).exp() / (4.0 * std::f64::consts::PI).sqrt();
        let d = 2.0 * crate::quadrature::integrate(|y| (c.value(y) - a).powi(2) * w(y), rho / 2.0, 40.0, 400);
        let bound = 4.0 * a * a / (rho * std::f64::consts::PI.sqrt()) * (-rho * rho / 16.0).exp();
        assert!(d <= bound, "{d} vs {bound}");
        let s = project(&c).unwrap();
        let q = GaussianQuadrature::shared();
        let diff: Vec<f64> = s.hat_nodes.iter().map(|h| h - a).collect();
        let gh = q.inner_values(&diff, &diff).unwrap();
        assert!((gh - d).abs() < 0.05 * d, "{gh} vs {d}");
    }

    #[test]
    fn projection_examples() {
        let s = SpectralState::from_fn(0.0, 20.0, |y| 3.0 + y).unwrap();
        assert!((s.alpha1 - 3.0).abs() < 1e-12);
        assert!((s.alpha2 - 2f64.sqrt()).abs() < 1e-12);
        assert!(s.w_minus.abs() < 1e-10);
        let s = SpectralState::from_fn(0.0, 20.0, |y| y * y).unwrap();
        assert!((s.alpha1 - 2.0).abs() < 1e-12);
        assert!(s.alpha2.abs() < 1e-12);
        assert!((s.w_minus - 8.0).abs() < 1e-10);
        let s = SpectralState::from_fn(0.0, 20.0, |y| phi(3, y)).unwrap();
        assert!(s.alpha1.abs() < 1e-12 && s.alpha2.abs() < 1e-12);
        assert!((s.w_minus - 1.0).abs() < 1e-10);
        assert!(s.w_plus >= 400.0 * (-25.0f64).exp());
    }

    #[test]
    fn error_terms_simple_profiles() {
        let rho = 12.0;
        let c = cutoff(&flat_sheet(0.8, rho, -1.0)).unwrap();
        let e = error_terms(&c.jet, Some(-0.4 * rho)).unwrap();
        assert!(e.sup_e1 == 0.0);
        for (y, v) in e.y.iter().zip(&e.e2) {
            if y.abs() < rho / 2.0 || y.abs() > 0.75 * rho {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(matches!(error_terms(&c.jet, None), Err(CsfError::InvalidInput(_))));
        let n = 2001;
        let lin = RescaledSheet {
            tau: -1.0,
            rho,
            values: (0..n).map(|i| 0.01 * (-2.0 * rho + 4.0 * rho * i as f64 / (n - 1) as f64)).collect(),
        };
        let e = error_terms(&cutoff(&lin).unwrap().jet, Some(-0.4 * rho)).unwrap();
        assert!(e.sup_e1 < 1e-12);
    }

    /// Rescaled lower arm of a slow grim reaper: an exact solution of the
    /// rescaled flow with visible slope in the cutoff window.
    fn reaper_rescaled(tau: f64, rho: f64, n: usize) -> RescaledSheet {
        let g = GrimReaperSpec::new(0.0, 10.0 * std::f64::consts::PI, 60.0, Direction::Right).unwrap();
        let t = t_of(tau);
        let scale = (-tau / 2.0).exp();
        let h = 4.0 * rho / (n - 1) as f64;
        RescaledSheet {
            tau,
            rho,
            values: (0..n)
                .map(|i| {
                    let y = -2.0 * rho + h * i as f64;
                    g.arm_height(t, scale * y, false).unwrap() / scale
                })
                .collect(),
        }
    }

    #[test]
    fn error_decomposition_matches_definition() {
        // E = û_τ − 𝓛û, evaluated by differencing the exact family.
        let rho_of = |tau: f64| 11.0 * (-0.4 * (tau + 1.0)).exp();
        let tau = -1.0;
        let n = 8001;
        let s = reaper_rescaled(tau, rho_of(tau), n);
        let jet = SheetJet::from_sheet(&s);
        let terms = error_terms(&jet, Some(-0.4 * rho_of(tau))).unwrap();
        let dt = 1e-4;
        let hat_at = |tau: f64, y: f64| {
            let r = rho_of(tau);
            let g = GrimReaperSpec::new(0.0, 10.0 * std::f64::consts::PI, 60.0, Direction::Right).unwrap();
            let sc = (-tau / 2.0).exp();
            g.arm_height(t_of(tau), sc * y, false).unwrap() / sc * eta(y / r).0
        };
        let hy = 1e-3;
        let mut worst: f64 = 0.0;
        for i in (0..n).step_by(97) {
            let y = s.y(i);
            if y.abs() > 1.8 * s.rho {
                continue;
            }
            let ut = (hat_at(tau + dt, y) - hat_at(tau - dt, y)) / (2.0 * dt);
            let (m, c, p) = (hat_at(tau, y - hy), hat_at(tau, y), hat_at(tau, y + hy));
            let l = (p - 2.0 * c + m) / (hy * hy) - 0.5 * y * (p - m) / (2.0 * hy) + 0.5 * c;
            let e = ut - l;
            worst = worst.max((e - terms.e1[i] - terms.e2[i]).abs());
        }
        assert!(worst < 1e-5, "decomposition mismatch {worst}");
        assert!(terms.sup_e2 > 1e-3);
    }

    #[test]
    fn hypotheses_on_exponential_radius() {
        let series: Vec<RescaledSheet> = (0..12)
            .map(|i| {
                let tau = -10.0 + 0.2 * i as f64;
                flat_sheet(0.5 * (tau / 2.0).exp(), default_rho(tau, 0.4), tau)
            })
            .collect();
        let r = hypotheses_check(&series).unwrap();
        assert!(r.r1.pass && r.r3.pass);
        assert!((r.mu - 0.4).abs() < 1e-9);
        assert!(r.h2_gradient.pass && r.h3.pass && r.gradient_decay.pass);
        let flat: Vec<RescaledSheet> = (0..12).map(|i| flat_sheet(0.0, 12.0, -10.0 + i as f64)).collect();
        let r = hypotheses_check(&flat).unwrap();
        assert!(!r.r3.pass);
    }

    #[test]
    fn pure_unstable_mode_tracks_exactly() {
        let c = 0.7;
        let states: Vec<SpectralState> = (0..21)
            .map(|i| {
                let tau = -6.0 + 0.01 * i as f64;
                SpectralState::from_fn(tau, 30.0, |_| c * (tau / 2.0).exp()).unwrap()
            })
            .collect();
        let n = states.len();
        let tr = mode_track(states, vec![[0.0; 3]; n]).unwrap();
        assert!(tr.max_residual[0] <= 1e-6, "{:?}", tr.max_residual);
        let states: Vec<SpectralState> = (0..21)
            .map(|i| SpectralState::from_fn(-6.0 + 0.01 * i as f64, 30.0, |y| 0.3 * phi(2, y)).unwrap())
            .collect();
        let w0: Vec<f64> = states.iter().map(|s| s.w_zero).collect();
        assert!(w0.iter().all(|w| (w - w0[0]).abs() < 1e-14));
    }

    #[test]
    fn dominance_fixtures() {
        let s2: Vec<SpectralState> = (0..20)
            .map(|i| {
                let tau = -20.0 + i as f64 * (18.0 / 19.0);
                SpectralState::from_energies(tau, tau.exp(), (1.6 * tau).exp(), (1.6 * tau).exp())
            })
            .collect();
        assert_eq!(mz_classify(&s2, 0.5).unwrap().verdict, MzVerdict::UnstableDominant);
        let s1: Vec<SpectralState> = (0..20)
            .map(|i| {
                let tau = -30.0 + i as f64;
                SpectralState::from_energies(tau, tau.exp(), 1.0, tau.exp())
            })
            .collect();
        assert_eq!(mz_classify(&s1, 0.5).unwrap().verdict, MzVerdict::NeutralDominant);
        assert!(matches!(sharp_limit_fit(&s1, 0.5), Err(CsfError::NotApplicable(_))));
    }

    #[test]
    fn sharp_limit_of_synthetic_profile() {
        let a0 = 1.3;
        let states: Vec<SpectralState> = (0..15)
            .map(|i| {
                let tau = -12.0 + 0.25 * i as f64;
                SpectralState::from_fn(tau, default_rho(tau, 0.4), |y| {
                    a0 * (tau / 2.0).exp() * (1.0 + tau.exp() * phi(3, y))
                })
                .unwrap()
            })
            .collect();
        let fit = sharp_limit_fit(&states, 0.4).unwrap();
        assert!((fit.a - a0).abs() < 1e-6);
    }

    #[test]
    fn interpolation_examples() {
        let n = 10001;
        let xs: Vec<f64> = (0..n).map(|i| -5.0 + 10.0 * i as f64 / (n - 1) as f64).collect();
        let f: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let r = interpolation_check(&f, &vec![2.0; n], 5.0, 2.0).unwrap();
        assert!((r.rhs - 27.0).abs() < 1e-9);
        assert!((r.margin - 17.0).abs() < 1e-6);
        let xs: Vec<f64> = (0..n).map(|i| -8.0 + 16.0 * i as f64 / (n - 1) as f64).collect();
        let f: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let d2: Vec<f64> = xs.iter().map(|x| -x.sin()).collect();
        let r = interpolation_check(&f, &d2, 8.0, 1.0).unwrap();
        assert!(r.rhs <= 2.5 + 1e-12 && r.margin >= 1.5 - 1e-6);
        assert!(interpolation_check(&f, &d2, 3.0, 1.0).is_err());
    }

    #[test]
    fn coercivity_on_low_degree_polynomials() {
        for d in 0..=8 {
            let mut c = vec![0.0; d + 1];
            c[d] = 1.0;
            assert!(coercivity_excess(&Poly(c)).unwrap() <= 1e-8);
        }
        // φ₃ attains equality.
        let p = Poly(vec![-2.0, 0.0, 1.0]);
        assert!(coercivity_excess(&p).unwrap().abs() < 1e-10);
    }

    #[test]
    fn trombone_sheet_limits() {
        let spec = TromboneSpec::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.0], Direction::Right).unwrap();
        let states: Vec<SpectralState> = (0..13)
            .map(|i| {
                let tau = -10.0 + 0.2 * i as f64;
                let s = trombone_rescaled_sheet(&spec, 1, tau, default_rho(tau, 0.4), 4001).unwrap();
                project(&cutoff(&s).unwrap()).unwrap()
            })
            .collect();
        let mz = mz_classify(&states, 0.4).unwrap();
        assert_eq!(mz.verdict, MzVerdict::UnstableDominant);
        let fit = sharp_limit_fit(&states, 0.4).unwrap();
        assert!((fit.a - 1.0).abs() < 1e-2);
        assert!(fit.holds, "{:?}", fit.tail);
    }
}
