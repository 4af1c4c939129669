//! Reference values: the exact Green function from direct ODE integration,
//! closed-form Green functions of two solvable models, and zero-energy
//! solutions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{wronskian, Schrodinger, State, Trajectory};
use crate::potential::PotentialModel;

type C = Complex64;

const I: C = C::new(0.0, 1.0);

/// One evaluated Green-function value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenSample {
    pub x: f64,
    pub y: f64,
    pub k: Complex64,
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub cutoff_left: Option<f64>,
    pub cutoff_right: Option<f64>,
    pub ode_rel_tol: f64,
    pub epsilon_imag: f64,
    /// Accepted size of the neglected WKB term at a cutoff.
    pub wkb_tol: f64,
    /// `|V_S|` below which a zero-energy solution is taken as constant.
    pub tail_tol: f64,
    pub max_cutoff: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cutoff_left: None,
            cutoff_right: None,
            ode_rel_tol: 1e-10,
            epsilon_imag: 1e-8,
            wkb_tol: 1e-12,
            tail_tol: 1e-12,
            max_cutoff: 1e8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ode_rel_tol", self.ode_rel_tol),
            ("epsilon_imag", self.epsilon_imag),
            ("wkb_tol", self.wkb_tol),
            ("tail_tol", self.tail_tol),
            ("max_cutoff", self.max_cutoff),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
            }
        }
        if let (Some(l), Some(r)) = (self.cutoff_left, self.cutoff_right) {
            if l >= r {
                return Err(Error::InvalidArgument(format!("cutoffs {l} >= {r}")));
            }
        }
        Ok(())
    }
}

/// [`GreenSample`] plus what the solver knows about its accuracy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenDetail {
    pub sample: GreenSample,
    /// `∂G/∂x` and `∂G/∂y` at the sample.
    pub d_dx: Complex64,
    pub d_dy: Complex64,
    /// Largest relative change of the Wronskian across the evaluation points.
    pub wronskian_drift: f64,
    /// `|G(k+iε) - G(k+iε/10)| / |G|` for real `k`, zero otherwise.
    pub epsilon_sensitivity: f64,
    pub cutoffs: (f64, f64),
}

struct Raw {
    g: C,
    dx: C,
    dy: C,
    drift: f64,
    cutoffs: (f64, f64),
}

fn structure_edges(model: &PotentialModel, lo: f64, hi: f64) -> (f64, f64) {
    let (mut l, mut r) = (lo.min(0.0), hi.max(0.0));
    for d in &model.discontinuities {
        l = l.min(d.at);
        r = r.max(d.at);
    }
    (l, r)
}

/// Size of the neglected WKB term at `x`, damped by the decay of the
/// unwanted solution between the structure edge and `x`.
fn wkb_error(eq: &Schrodinger, edge: f64, x: f64, toward_right: bool, k: C) -> Result<f64> {
    if eq.q(x).re + k.norm_sqr() < -1e4 {
        return Err(Error::UnsupportedAsymptotics(format!(
            "V_S({x}) = {:.3e} tends to -infinity",
            eq.q(x).re
        )));
    }
    let (_, crit) = eq.wkb_log_derivative(x, toward_right, k);
    let n = 64;
    let h = (x - edge) / n as f64;
    let mut damp = 0.0;
    for i in 0..=n {
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let r = eq.q(edge + h * i as f64).sqrt().re;
        if r.is_finite() {
            damp += w * r * h.abs();
        }
    }
    let est = crit * (-2.0 * damp).exp();
    Ok(if est.is_finite() { est } else { f64::INFINITY })
}

fn find_cutoff(
    edge: f64,
    dir: f64,
    cap: f64,
    mut err: impl FnMut(f64) -> Result<f64>,
    tol: f64,
) -> Result<f64> {
    let mut d = 1.0;
    loop {
        let mut ok = true;
        for m in [1.0, 1.25, 1.5] {
            if err(edge + dir * m * d)? >= tol {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(edge + dir * d);
        }
        d *= 2.0;
        if d > cap {
            return Err(Error::NonconvergedOde(format!(
                "no cutoff beyond {edge} within {cap:e} meets the asymptotic tolerance"
            )));
        }
    }
}

fn solve(model: &PotentialModel, x: f64, y: f64, k: C, cfg: &SolverConfig) -> Result<Raw> {
    let (lo, hi) = (y, x);
    let eq = Schrodinger::new(model, k, cfg.ode_rel_tol);
    let (el, er) = structure_edges(model, lo, hi);
    let xl = match cfg.cutoff_left {
        Some(c) if c < lo => c,
        Some(c) => return Err(Error::InvalidArgument(format!("left cutoff {c} not below {lo}"))),
        None => find_cutoff(el, -1.0, cfg.max_cutoff, |z| wkb_error(&eq, el, z, false, k), cfg.wkb_tol)?,
    };
    let xr = match cfg.cutoff_right {
        Some(c) if c > hi => c,
        Some(c) => return Err(Error::InvalidArgument(format!("right cutoff {c} not above {hi}"))),
        None => find_cutoff(er, 1.0, cfg.max_cutoff, |z| wkb_error(&eq, er, z, true, k), cfg.wkb_tol)?,
    };
    let probe = lo - 0.5 * (lo - xl).min(1.0);

    let (yl, _) = eq.wkb_log_derivative(xl, false, k);
    let start_l = State::new(C::new(1.0, 0.0), yl);
    let l_probe = eq.propagate(xl, probe, start_l, None)?;
    let l_lo = eq.propagate(probe, lo, l_probe, None)?;
    let l_hi = eq.propagate(lo, hi, l_lo, None)?;

    let (yr, _) = eq.wkb_log_derivative(xr, true, k);
    let start_r = State::new(C::new(1.0, 0.0), yr);
    let r_hi = eq.propagate(xr, hi, start_r, None)?;
    let r_lo = eq.propagate(hi, lo, r_hi, None)?;
    let r_probe = eq.propagate(lo, probe, r_lo, None)?;

    let raw_w = |a: &State, b: &State| a.psi * b.dpsi - a.dpsi * b.psi;
    let w_hi = raw_w(&l_hi, &r_hi);
    let mag = (l_hi.psi * r_hi.dpsi).norm() + (l_hi.dpsi * r_hi.psi).norm();
    if w_hi.norm() < 1e-12 * mag || w_hi.norm() == 0.0 {
        return Err(Error::WronskianDegenerate(wronskian(&l_hi, &r_hi).norm()));
    }
    let scale_hi = l_hi.log_scale + r_hi.log_scale;
    let rel = |w: C, s: f64| (w / w_hi * (s - scale_hi).exp() - 1.0).norm();
    let drift = rel(raw_w(&l_lo, &r_lo), l_lo.log_scale + r_lo.log_scale)
        .max(rel(raw_w(&l_probe, &r_probe), l_probe.log_scale + r_probe.log_scale));

    let f = (l_lo.log_scale + r_hi.log_scale - scale_hi).exp() / w_hi;
    Ok(Raw {
        g: l_lo.psi * r_hi.psi * f,
        dx: l_lo.psi * r_hi.dpsi * f,
        dy: l_lo.dpsi * r_hi.psi * f,
        drift,
        cutoffs: (xl, xr),
    })
}

/// Exact Green function of `ψ'' - V_S ψ + k² ψ = δ(x - y)` with outgoing or
/// decaying behaviour at both ends, plus accuracy diagnostics.
pub fn green_exact_detailed(
    model: &PotentialModel,
    x: f64,
    y: f64,
    k: Complex64,
    cfg: &SolverConfig,
) -> Result<GreenDetail> {
    cfg.validate()?;
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::InvalidArgument(format!("points ({x}, {y}) must be finite")));
    }
    if k == C::new(0.0, 0.0) || !k.re.is_finite() || !k.im.is_finite() {
        return Err(Error::InvalidArgument(format!("k = {k} must be finite and nonzero")));
    }
    if k.im < 0.0 {
        return Err(Error::InvalidArgument(format!("Im k = {} must be non-negative", k.im)));
    }
    let swapped = x < y;
    let (hi, lo) = if swapped { (y, x) } else { (x, y) };
    let (raw, sensitivity) = if k.im == 0.0 {
        let eps = cfg.epsilon_imag;
        let a = solve(model, hi, lo, k + I * eps, cfg)?;
        let b = solve(model, hi, lo, k + I * (eps / 10.0), cfg)?;
        let ex = |fa: C, fb: C| fb - (fa - fb) / 9.0;
        let g = ex(a.g, b.g);
        let sens = (a.g - b.g).norm() / g.norm();
        (
            Raw {
                g,
                dx: ex(a.dx, b.dx),
                dy: ex(a.dy, b.dy),
                drift: a.drift.max(b.drift),
                cutoffs: b.cutoffs,
            },
            sens,
        )
    } else {
        (solve(model, hi, lo, k, cfg)?, 0.0)
    };
    let (d_dx, d_dy) = if swapped { (raw.dy, raw.dx) } else { (raw.dx, raw.dy) };
    Ok(GreenDetail {
        sample: GreenSample { x, y, k, value: raw.g },
        d_dx,
        d_dy,
        wronskian_drift: raw.drift,
        epsilon_sensitivity: sensitivity,
        cutoffs: raw.cutoffs,
    })
}

/// Exact Green function; for real `k` the `ε → 0⁺` limit, extrapolated from
/// `k + iε` and `k + iε/10`.
pub fn green_exact(
    model: &PotentialModel,
    x: f64,
    y: f64,
    k: Complex64,
    cfg: &SolverConfig,
) -> Result<GreenSample> {
    green_exact_detailed(model, x, y, k, cfg).map(|d| d.sample)
}

/// Closed-form Green function of the square barrier `V_S = a²` on `|z| < 1`,
/// for `-1 < y ≤ x < 1`.
pub fn green_closed_ex6(x: f64, y: f64, k: Complex64, a: f64) -> Result<Complex64> {
    if !(-1.0 < y && y <= x && x < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need -1 < y <= x < 1, got x = {x}, y = {y}"
        )));
    }
    let p = (C::new(a * a, 0.0) - k * k).sqrt();
    let ik = I * k;
    let left = (p - ik) * (p * (1.0 - x)).exp() + (p + ik) * (-p * (1.0 - x)).exp();
    let right = (p + ik) * (-p * (1.0 + y)).exp() + (p - ik) * (p * (1.0 + y)).exp();
    let den = -4.0 * p * ((p * p - k * k) * (2.0 * p).sinh() - 2.0 * I * p * k * (2.0 * p).cosh());
    Ok(left * right / den)
}

/// Closed-form Green function of `V = α θ(z-1) log z` for `y < 1 < x`.
pub fn green_closed_ex5(x: f64, y: f64, k: Complex64, alpha: f64) -> Result<Complex64> {
    if !(y < 1.0 && 1.0 < x) {
        return Err(Error::InvalidArgument(format!("need y < 1 < x, got x = {x}, y = {y}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} must be non-negative")));
    }
    if k.norm() == 0.0 || k.im < 0.0 {
        return Err(Error::InvalidArgument(format!("k = {k} must be nonzero with Im k >= 0")));
    }
    let nu = 0.5 * (1.0 + alpha);
    let e = (I * (nu * PI)).exp();
    let kx = k * x;
    let num = x.sqrt() * (bessel_j(nu, kx)? - e * bessel_j(-nu, kx)?) * (-I * k * (y - 1.0)).exp();
    let den = k
        * (bessel_j(nu - 1.0, k)? + I * bessel_j(nu, k)?
            + e * (bessel_j(1.0 - nu, k)? - I * bessel_j(-nu, k)?));
    Ok(num / den)
}

fn rgamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        0.0
    } else {
        1.0 / statrs::function::gamma::gamma(x)
    }
}

/// Bessel function of the first kind by its ascending series, `|z| ≤ 30`.
/// Negative orders are accepted: non-integer ones through `1/Γ` of negative
/// arguments, integer ones through `J_{-n} = (-1)ⁿ J_n`.
pub fn bessel_j(nu: f64, z: Complex64) -> Result<Complex64> {
    if !nu.is_finite() {
        return Err(Error::InvalidArgument(format!("order {nu}")));
    }
    if z.norm() > 30.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InvalidArgument(format!("|z| = {} exceeds 30", z.norm())));
    }
    if nu < 0.0 && nu == nu.floor() {
        let n = -nu;
        let sign = if n % 2.0 == 0.0 { 1.0 } else { -1.0 };
        return bessel_j(n, z).map(|v| v * sign);
    }
    if z.norm() == 0.0 {
        return Ok(if nu == 0.0 {
            C::new(1.0, 0.0)
        } else if nu > 0.0 {
            C::new(0.0, 0.0)
        } else {
            C::new(f64::INFINITY, 0.0)
        });
    }
    let half = z / 2.0;
    let q = -half * half;
    let mut term = half.powf(nu) * rgamma(nu + 1.0);
    let mut sum = term;
    for m in 0..500u32 {
        let m = m as f64;
        term *= q / ((m + 1.0) * (nu + m + 1.0));
        sum += term;
        if term.norm() < 1e-16 * sum.norm() && m + 1.0 > -nu {
            return Ok(sum);
        }
    }
    Err(Error::BesselNonconvergence { nu, abs_z: z.norm() })
}

/// Zero-energy solutions `ψ₀⁻ → 1` at `-∞` and `ψ₀⁺ → 1` at `+∞`.
pub struct ZeroModes {
    eq: Schrodinger,
    minus: Trajectory,
    plus: Trajectory,
    pub wronskian: f64,
    /// `|ψ₀⁻ ψ₀⁺|` where the Wronskian was taken.
    pub wronskian_scale: f64,
    pub cutoffs: (f64, f64),
}

impl ZeroModes {
    /// `(ψ₀⁻, ψ₀⁻')` at `x`.
    pub fn psi_minus(&self, x: f64) -> Result<(f64, f64)> {
        let s = self.minus.eval(&self.eq, x)?;
        Ok((s.value().re, s.derivative().re))
    }

    /// `(ψ₀⁺, ψ₀⁺')` at `x`.
    pub fn psi_plus(&self, x: f64) -> Result<(f64, f64)> {
        let s = self.plus.eval(&self.eq, x)?;
        Ok((s.value().re, s.derivative().re))
    }

    /// Recorded states of `ψ₀⁻` and `ψ₀⁺` along the integration line.
    pub fn samples(&self) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let pick = |t: &Trajectory| t.points().iter().map(|(x, s)| (*x, s.value().re)).collect();
        (pick(&self.minus), pick(&self.plus))
    }
}

pub fn zero_energy_modes(model: &PotentialModel, cfg: &SolverConfig) -> Result<ZeroModes> {
    cfg.validate()?;
    let eq = Schrodinger::new(model, C::new(0.0, 0.0), cfg.ode_rel_tol.min(1e-12));
    let (el, er) = structure_edges(model, 0.0, 0.0);
    let small = |x: f64| Ok(model.eval_vs(x).abs() / cfg.tail_tol);
    let xl = match cfg.cutoff_left {
        Some(c) => c,
        None => find_cutoff(el, -1.0, cfg.max_cutoff, small, 1.0)?,
    };
    let xr = match cfg.cutoff_right {
        Some(c) => c,
        None => find_cutoff(er, 1.0, cfg.max_cutoff, small, 1.0)?,
    };
    let one = State::new(C::new(1.0, 0.0), C::new(0.0, 0.0));
    let mut rec_m = vec![(xl, one)];
    eq.propagate(xl, xr, one, Some(&mut rec_m))?;
    let mut rec_p = vec![(xr, one)];
    eq.propagate(xr, xl, one, Some(&mut rec_p))?;
    let minus = Trajectory::new(rec_m);
    let plus = Trajectory::new(rec_p);
    let mid = 0.5 * (el + er);
    let m = minus.eval(&eq, mid)?;
    let p = plus.eval(&eq, mid)?;
    let w = wronskian(&m, &p).re;
    let scale = (m.value() * p.value()).norm();
    Ok(ZeroModes { eq, minus, plus, wronskian: w, wronskian_scale: scale, cutoffs: (xl, xr) })
}

/// One point of a remainder-scaling fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub k: f64,
    pub exact: Complex64,
    pub partial_sum: Complex64,
    pub residual: f64,
    /// Size below which the residual is indistinguishable from solver error.
    pub noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: Vec<ScalingPoint>,
}

/// Least-squares slope and intercept of `log r` against `log k`.
pub fn log_log_fit(ks: &[f64], rs: &[f64]) -> Result<(f64, f64)> {
    if ks.len() != rs.len() || ks.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    if ks.iter().chain(rs).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateFit("non-positive value on a log scale".into()));
    }
    let lx: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let ly: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all k values coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Slope of `log|G_exact - Σ_{n≤N} (ik)ⁿ gₙ|` against `log k`.
pub fn remainder_scaling_fit(
    model: &PotentialModel,
    x: f64,
    y: f64,
    order: i32,
    k_grid: &[f64],
    solver: &SolverConfig,
    quad: &crate::brackets::QuadratureConfig,
) -> Result<ScalingFit> {
    if k_grid.len() < 2 {
        return Err(Error::InvalidArgument("k grid needs at least two points".into()));
    }
    if k_grid.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
        return Err(Error::InvalidArgument("k grid must be positive".into()));
    }
    if k_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("k grid must be strictly decreasing".into()));
    }
    let series = crate::assembler::green_series(model, x, y, order, quad)?;
    let mut points = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let d = green_exact_detailed(model, x, y, C::new(k, 0.0), solver)?;
        let exact = d.sample.value;
        let partial_sum = series.partial_sum(order, C::new(k, 0.0));
        let residual = (exact - partial_sum).norm();
        let noise = exact.norm() * (100.0 * solver.ode_rel_tol).max(d.wronskian_drift)
            + partial_sum.norm() * series.diagnostics.quadrature_error.max(1e-14);
        points.push(ScalingPoint { k, exact, partial_sum, residual, noise });
    }
    if let Some(p) = points.iter().find(|p| p.residual <= 10.0 * p.noise) {
        return Err(Error::DegenerateFit(format!(
            "residual {:.3e} at k = {} is within the noise floor {:.3e}",
            p.residual, p.k, p.noise
        )));
    }
    let ks: Vec<f64> = points.iter().map(|p| p.k).collect();
    let rs: Vec<f64> = points.iter().map(|p| p.residual).collect();
    let (slope, intercept) = log_log_fit(&ks, &rs)?;
    Ok(ScalingFit { slope, intercept, points })
}
