//! Green-function series `G = Σ gₙ (ik)ⁿ` from the `S - 1` series of each
//! case, plus the printed closed forms and the zero-energy route for models
//! given only through `V_S`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::brackets::{
    eval_bracket, BracketEngine, BracketKind, BracketSpec, EngineRequest, QuadratureConfig, Table,
    CHEB_DEGREE,
};
use crate::coeffgen::{a_terms, b_terms, btilde_terms, coeff_on_nodes, gamma_series, Side};
use crate::error::{Error, Result};
use crate::laurent::{Branch, LaurentSeries, LEADING_TOL};
use crate::oracle::{zero_energy_modes, SolverConfig, ZeroModes};
use crate::potential::{
    classify_case, max_valid_order, CaseTag, Decay, EndpointClass, EndpointKind, PotentialModel,
    RealFn, ValidOrder,
};

type C = Complex64;
const NP: usize = CHEB_DEGREE + 1;

/// How the coefficients were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    Brackets,
    ZeroEnergy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub valid_order: ValidOrder,
    /// Largest change of any `gₙ` under one uniform mesh refinement,
    /// relative to the largest `|gₙ|`.
    pub quadrature_error: f64,
    /// Largest imaginary part among the `gₙ`.
    pub max_imag: f64,
    pub route: Route,
    /// Relative disagreement with the closed forms of the zero-energy route.
    pub cross_check: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionResult {
    pub model: String,
    pub case_tag: CaseTag,
    pub reflected: bool,
    pub x: f64,
    pub y: f64,
    pub order: i32,
    pub g: LaurentSeries,
    pub s_x: LaurentSeries,
    pub s_y: LaurentSeries,
    /// `q₀ … q_{N+1}`.
    pub q: Vec<f64>,
    pub diagnostics: Diagnostics,
}

impl ExpansionResult {
    /// Real part of `gₙ`, zero outside the computed range.
    pub fn coeff(&self, n: i32) -> f64 {
        self.g.re(n)
    }

    /// `Σ_{n ≤ m} (ik)ⁿ gₙ`.
    pub fn partial_sum(&self, m: i32, k: Complex64) -> Complex64 {
        if m < self.g.min_order() {
            return C::new(0.0, 0.0);
        }
        self.g.truncate(m.min(self.g.max_order())).eval(C::new(0.0, 1.0) * k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fam {
    A,
    B,
    Gamma,
}

fn family(kind: EndpointKind) -> Fam {
    match kind {
        EndpointKind::FiniteLimit => Fam::A,
        EndpointKind::PlusInfinity => Fam::B,
        EndpointKind::MinusInfinity => Fam::Gamma,
    }
}

fn lowest_s_order(r: Fam, l: Fam) -> i32 {
    if r == Fam::Gamma || l == Fam::Gamma {
        -1
    } else if r == Fam::A || l == Fam::A {
        0
    } else {
        1
    }
}

fn branch_for(tag: CaseTag) -> Branch {
    match tag {
        CaseTag::I | CaseTag::Ii => Branch::Plus,
        _ => Branch::Minus,
    }
}

fn odd_orders(upto: i32) -> impl Iterator<Item = usize> {
    (1..=upto.max(0) as usize).step_by(2)
}

fn bracket_len(fam: Fam, side: Side, s_max: i32) -> usize {
    let len = match fam {
        Fam::A => (0..=s_max.max(0) as usize).map(|n| a_terms(n, side).max_len()).max().unwrap_or(0),
        Fam::B => odd_orders(s_max).map(|n| b_terms(n, side).max_len()).max().unwrap_or(0),
        Fam::Gamma => odd_orders(s_max + 2).map(|n| btilde_terms(n, side).max_len()).max().unwrap_or(0),
    };
    len.max(1)
}

fn zeros(panels: usize) -> Table {
    vec![[0.0; NP]; panels]
}

/// Coefficient tables for one side, indexed by `n + 1` for `n = -1 ..= s_max`.
fn family_tables(
    model: &PotentialModel,
    engine: &BracketEngine,
    fam: Fam,
    side: Side,
    s_max: i32,
) -> Result<Vec<Table>> {
    let panels = engine.panel_count();
    let count = (s_max + 2) as usize;
    let mut out = vec![zeros(panels); count];
    match fam {
        Fam::A => {
            for n in 0..=s_max {
                out[(n + 1) as usize] = coeff_on_nodes(&a_terms(n as usize, side), engine, model)?;
            }
        }
        Fam::B => {
            for n in odd_orders(s_max) {
                out[n + 1] = coeff_on_nodes(&b_terms(n, side), engine, model)?;
            }
        }
        Fam::Gamma => {
            let top = s_max + 2;
            let bt: Vec<Table> = odd_orders(top)
                .map(|n| coeff_on_nodes(&btilde_terms(n, side), engine, model))
                .collect::<Result<_>>()?;
            for p in 0..panels {
                for i in 0..NP {
                    let mut c = vec![C::new(0.0, 0.0); top as usize];
                    for (j, t) in bt.iter().enumerate() {
                        c[2 * j] = C::new(t[p][i], 0.0);
                    }
                    // b̃₁ vanishes where its bracket is empty; γ is undefined there
                    let g = gamma_series(&LaurentSeries::new(1, c)).ok();
                    for n in -1..=s_max {
                        out[(n + 1) as usize][p][i] = g.as_ref().map_or(f64::NAN, |g| g.re(n));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `sₙ` on the nodes of one engine.
struct STables {
    engine: BracketEngine,
    min_order: i32,
    /// Index `n + 1`.
    s: Vec<Table>,
}

impl STables {
    fn build(
        model: &PotentialModel,
        points: Vec<f64>,
        s_max: i32,
        cfg: &QuadratureConfig,
        extra: u32,
    ) -> Result<Self> {
        let (r, l) = (family(model.left.kind), family(model.right.kind));
        let req = EngineRequest {
            points,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            lower_len: bracket_len(r, Side::Right, s_max),
            upper_len: bracket_len(l, Side::Left, s_max),
            extra_bisections: extra,
        };
        let engine = BracketEngine::new(model, &req, cfg)?;
        let right = family_tables(model, &engine, r, Side::Right, s_max)?;
        let left = family_tables(model, &engine, l, Side::Left, s_max)?;
        let s = right
            .iter()
            .zip(&left)
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| std::array::from_fn(|i| u[i] + v[i])).collect())
            .collect();
        Ok(Self { engine, min_order: lowest_s_order(r, l), s })
    }

    fn s_max(&self) -> i32 {
        self.s.len() as i32 - 2
    }

    fn series_at(&self, z: f64) -> LaurentSeries {
        let coeffs = (self.min_order..=self.s_max())
            .map(|n| C::new(self.engine.value_at(&self.s[(n + 1) as usize], z), 0.0))
            .collect();
        LaurentSeries::new(self.min_order, coeffs)
    }

    /// `q₀ … q_{top}`, `q_m = -∫_y^x s_{m-1}`.
    fn q(&self, x: f64, y: f64, top: i32) -> Vec<f64> {
        (0..=top)
            .map(|m| {
                let n = m - 1;
                if n < -1 || n > self.s_max() {
                    0.0
                } else {
                    -self.engine.integrate(&self.s[(n + 1) as usize], y, x)
                }
            })
            .collect()
    }
}

/// `g = [2t √((1-S_x)(1-S_y))]^{-1} exp(Σ q_m t^m)` through order `n`.
fn assemble(
    s_x: &LaurentSeries,
    s_y: &LaurentSeries,
    q: &[f64],
    branch: Branch,
    n: i32,
) -> Result<LaurentSeries> {
    let prod = s_x.neg().mul(&s_y.neg());
    let lead = prod.leading().norm();
    if lead < LEADING_TOL {
        return Err(Error::BranchAmbiguity(lead));
    }
    let root = prod.sqrt(branch)?;
    let den = root.shift(1).scale(C::new(2.0, 0.0));
    let qs = LaurentSeries::new(0, q.iter().map(|&v| C::new(v, 0.0)).collect());
    let g = den.invert()?.mul(&qs.exp()?);
    Ok(g.truncate(n.min(g.max_order())))
}

/// The model in its canonical orientation and the points mapped onto it.
fn canonical(model: &PotentialModel, x: f64, y: f64) -> (PotentialModel, f64, f64, CaseTag, bool) {
    let class = classify_case(model);
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if class.reflected {
        (model.reflected(), -lo, -hi, class.tag, true)
    } else {
        (model.clone(), hi, lo, class.tag, false)
    }
}

fn check_order(model: &PotentialModel, tag: CaseTag, n: i32) -> Result<ValidOrder> {
    let valid = max_valid_order(model)?;
    if !valid.allows(n) {
        let ValidOrder::Finite(v) = valid else { unreachable!() };
        return Err(Error::OrderExceedsValidity { requested: n, valid: v });
    }
    if n < tag.g_min_order() {
        return Err(Error::InvalidArgument(format!(
            "order {n} is below the leading order {} of case {tag}",
            tag.g_min_order()
        )));
    }
    Ok(valid)
}

fn check_points(x: f64, y: f64) -> Result<()> {
    if x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("points ({x}, {y}) must be finite")))
    }
}

/// Coefficients of `S(x, k) - 1` through order `n`.
pub fn s_series(
    model: &PotentialModel,
    x: f64,
    n: i32,
    cfg: &QuadratureConfig,
) -> Result<LaurentSeries> {
    check_points(x, x)?;
    let (m, cx, _, tag, _) = canonical(model, x, x);
    let valid = max_valid_order(&m)?;
    let _ = tag;
    if !valid.allows(n) {
        let ValidOrder::Finite(v) = valid else { unreachable!() };
        return Err(Error::OrderExceedsValidity { requested: n, valid: v });
    }
    let t = STables::build(&m, vec![cx], n.max(-1), cfg, 0)?;
    Ok(t.series_at(cx))
}

/// `q₀ … q_{n+1}` with `q_m(x, y) = -∫_y^x s_{m-1}(z) dz`.
pub fn q_values(
    model: &PotentialModel,
    x: f64,
    y: f64,
    n: i32,
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    check_points(x, y)?;
    if x < y {
        return Err(Error::InvalidArgument(format!("need x >= y, got x = {x}, y = {y}")));
    }
    let (m, cx, cy, _, reflected) = canonical(model, x, y);
    let t = STables::build(&m, vec![cx, cy], n.max(-1), cfg, 0)?;
    let q = t.q(cx, cy, n + 1);
    // mirroring maps ∫_y^x onto ∫_{-x}^{-y}, which is the same interval reversed
    let _ = reflected;
    Ok(q)
}

fn series_pass(
    m: &PotentialModel,
    x: f64,
    y: f64,
    n: i32,
    tag: CaseTag,
    cfg: &QuadratureConfig,
    extra: u32,
) -> Result<(LaurentSeries, LaurentSeries, LaurentSeries, Vec<f64>)> {
    let m0 = lowest_s_order(family(m.left.kind), family(m.right.kind));
    let s_max = n + 2 * m0 + 1;
    let t = STables::build(m, vec![x, y], s_max, cfg, extra)?;
    let s_x = t.series_at(x);
    let s_y = t.series_at(y);
    let q = t.q(x, y, n - tag.g_min_order());
    let g = assemble(&s_x, &s_y, &q, branch_for(tag), n)?;
    Ok((g, s_x, s_y, q))
}

/// Green-function series through order `n` by the bracket formulas.
pub fn green_series(
    model: &PotentialModel,
    x: f64,
    y: f64,
    n: i32,
    cfg: &QuadratureConfig,
) -> Result<ExpansionResult> {
    check_points(x, y)?;
    let (m, cx, cy, tag, reflected) = canonical(model, x, y);
    let valid = check_order(&m, tag, n)?;
    let (g, s_hi, s_lo, q) = series_pass(&m, cx, cy, n, tag, cfg, 0)?;
    let quadrature_error = match series_pass(&m, cx, cy, n, tag, cfg, 1) {
        Ok((g2, ..)) => series_distance(&g, &g2),
        Err(_) => f64::NAN,
    };
    let (s_x, s_y) = if reflected { (s_lo, s_hi) } else { (s_hi, s_lo) };
    let mut warnings = model.probe_decay();
    if !(quadrature_error <= 1e-6) {
        warnings.push(format!("mesh refinement changes g by {quadrature_error:.2e}"));
    }
    let max_imag = g.max_imag();
    Ok(ExpansionResult {
        model: model.id.clone(),
        case_tag: tag,
        reflected,
        x: x.max(y),
        y: x.min(y),
        order: n,
        g,
        s_x,
        s_y,
        q,
        diagnostics: Diagnostics {
            valid_order: valid,
            quadrature_error,
            max_imag,
            route: Route::Brackets,
            cross_check: None,
            warnings,
        },
    })
}

fn series_distance(a: &LaurentSeries, b: &LaurentSeries) -> f64 {
    let lo = a.min_order().min(b.min_order());
    let hi = a.max_order().min(b.max_order());
    let scale = (lo..=hi).map(|n| a.coeff(n).unwrap().norm()).fold(0.0, f64::max);
    let diff = (lo..=hi)
        .map(|n| (a.coeff(n).unwrap() - b.coeff(n).unwrap()).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// The closed forms printed for the leading coefficients of each case.
///
/// | case | indices |
/// |---|---|
/// | i, ii | -1, 0 |
/// | iii | 0, 1 |
/// | iv | -2, 0 |
/// | v | 0, 2 |
/// | vi | 0 |
pub fn closed_form_g(
    model: &PotentialModel,
    x: f64,
    y: f64,
    case_tag: CaseTag,
    which: i32,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    use CaseTag::*;
    let listed = matches!(
        (case_tag, which),
        (I, -1) | (I, 0) | (Ii, -1) | (Ii, 0) | (Iii, 0) | (Iii, 1) | (Iv, -2) | (Iv, 0) | (V, 0) | (V, 2) | (Vi, 0)
    );
    if !listed {
        return Err(Error::NoClosedForm { case: case_tag.name().into(), index: which });
    }
    check_points(x, y)?;
    let (m, x, y, tag, _) = canonical(model, x, y);
    if tag != case_tag {
        return Err(Error::InvalidArgument(format!(
            "model `{}` is case {tag}, not {case_tag}",
            model.id
        )));
    }
    let inf = f64::INFINITY;
    let br = |kind: BracketKind, s: &str, lo: f64, hi: f64| -> Result<f64> {
        eval_bracket(&BracketSpec::parse(kind, s, lo, hi)?, &m, cfg)
    };
    let plain = |s: &str, lo: f64, hi: f64| br(BracketKind::Plain, s, lo, hi);
    let e = (-(m.eval_v(x)? + m.eval_v(y)?) / 2.0).exp();
    let v1 = m.v1().unwrap_or(0.0);
    let v2 = m.v2().unwrap_or(0.0);
    let angle_sum = |right_kind: BracketKind| -> Result<f64> {
        let mut s = 0.0;
        for p in [x, y] {
            s += br(BracketKind::AngleLeft, "-", -inf, p)? + br(right_kind, "-", p, inf)?;
        }
        Ok(s)
    };
    Ok(match (case_tag, which) {
        (I, -1) => e / ((-v1).exp() + (-v2).exp()),
        (I, 0) => {
            let d = (-v1).exp() + (-v2).exp();
            e / 2.0 * (angle_sum(BracketKind::AngleRight)? / (d * d) + plain("+", y, x)?)
        }
        (Ii, -1) => e * v1.exp(),
        (Ii, 0) => e / 2.0 * ((2.0 * v1).exp() * angle_sum(BracketKind::Plain)? + plain("+", y, x)?),
        (Iii, 0) | (V, 0) => -e * plain("+", x, inf)?,
        (Iii, 1) => -e * (-v1).exp() * plain("+", x, inf)? * plain("+", y, inf)?,
        (Iv, -2) => -e / plain("-", -inf, inf)?,
        (Iv, 0) => {
            let whole = plain("-", -inf, inf)?;
            let num = plain("--+", -inf, x)? + plain("+--", x, inf)? + plain("--+", -inf, y)? + plain("+--", y, inf)?;
            e * (-num / (whole * whole) + plain("+", y, x)? / 2.0)
        }
        (V, 2) => {
            let px = plain("+", x, inf)?;
            let inner = plain("-", -inf, x)? * px + plain("-", -inf, y)? * plain("+", y, x)? + plain("-+", y, x)?;
            e * (inner * px + 2.0 * plain("-++", x, inf)?)
        }
        (Vi, 0) => -e * plain("+", -inf, y)? * plain("+", x, inf)? / plain("+", -inf, inf)?,
        _ => unreachable!(),
    })
}

/// `p₁ … p_M` with `g = g_lead t^{n₀} exp(Σ pₙ tⁿ)`.
pub fn log_form_series(g: &LaurentSeries) -> Result<Vec<f64>> {
    let l = g.log()?;
    Ok((1..=l.max_order()).map(|n| l.re(n)).collect())
}

pub fn log_form(result: &ExpansionResult) -> Result<Vec<f64>> {
    log_form_series(&result.g)
}

/// `g_lead (ik)^{n₀} exp(Σ pₙ (ik)ⁿ)`.
pub fn log_form_value(result: &ExpansionResult, k: Complex64) -> Result<Complex64> {
    let p = log_form(result)?;
    let t = C::new(0.0, 1.0) * k;
    let expo: C = p.iter().enumerate().map(|(j, &pj)| pj * t.powi(j as i32 + 1)).sum();
    Ok(result.g.leading() * t.powi(result.g.min_order()) * expo.exp())
}

/// `(ik)^{-2} g₋₂ + g₀ / (1 - (ik)² g₂/g₀)`.
pub fn pole_resummed(g_m2: f64, g0: f64, g2: f64, k: Complex64) -> Result<Complex64> {
    if g0 == 0.0 {
        return Err(Error::InvalidArgument("g0 must be nonzero".into()));
    }
    let t2 = -(k * k);
    let den = 1.0 - t2 * (g2 / g0);
    if den.norm() <= 4.0 * f64::EPSILON * (1.0 + (t2 * (g2 / g0)).norm()) || (g_m2 != 0.0 && t2.norm() == 0.0) {
        return Err(Error::DivisionByZero);
    }
    let lead = if g_m2 == 0.0 { C::new(0.0, 0.0) } else { g_m2 / t2 };
    Ok(lead + g0 / den)
}

fn v_decay_from_vs(class: EndpointClass) -> Decay {
    match class.decay {
        Some(Decay::PowerLaw(p)) if p > 2.0 => Decay::PowerLaw(p - 2.0),
        Some(Decay::PowerLaw(_)) | Some(Decay::LogGrowth(_)) => Decay::PowerLaw(f64::MIN_POSITIVE),
        _ => Decay::ExponentialOrFaster,
    }
}

/// Fokker-Planck model built on `ψ₀⁻` (`minus = true`) or `ψ₀⁺`.
fn zero_mode_model(
    base: &PotentialModel,
    modes: &Arc<ZeroModes>,
    minus: bool,
) -> Result<PotentialModel> {
    let eval = {
        let modes = modes.clone();
        move |z: f64| -> (f64, f64) {
            let r = if minus { modes.psi_minus(z) } else { modes.psi_plus(z) };
            r.unwrap_or((f64::NAN, f64::NAN))
        }
    };
    let e2 = eval.clone();
    let v: RealFn = Arc::new(move |z| -2.0 * eval(z).0.ln());
    let f: RealFn = Arc::new(move |z| {
        let (p, d) = e2(z);
        d / p
    });
    let vs = base.vs_fn();
    let (left, right) = if minus {
        (
            EndpointClass::finite(0.0, v_decay_from_vs(base.left)),
            EndpointClass::minus_infinity(Decay::LogGrowth(2.0)),
        )
    } else {
        (
            EndpointClass::minus_infinity(Decay::LogGrowth(2.0)),
            EndpointClass::finite(0.0, v_decay_from_vs(base.right)),
        )
    };
    let id = format!("{}~psi0{}", base.id, if minus { "-" } else { "+" });
    Ok(PotentialModel::fokker_planck(id, v, f, Some(vs), left, right)?
        .with_discontinuities(base.discontinuities.clone()))
}

/// Green-function series for a model with `V_S(±∞) = 0`, through the
/// zero-energy solutions: `a^R` from `V₋ = -2 log ψ₀⁻`, `a^L` from
/// `V₊ = -2 log ψ₀⁺`, `s₋₁ = (f₋ - f₊)/2`.
pub fn generic_expansion(
    model: &PotentialModel,
    x: f64,
    y: f64,
    n: i32,
    solver: &SolverConfig,
    cfg: &QuadratureConfig,
) -> Result<ExpansionResult> {
    check_points(x, y)?;
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if n < 0 {
        return Err(Error::InvalidArgument(format!("order {n} is below the leading order 0")));
    }
    let valid = {
        let bound = |c: EndpointClass| v_decay_from_vs(c).membership().map(|m| m + 2);
        match (bound(model.left), bound(model.right)) {
            (None, None) => ValidOrder::Unbounded,
            (Some(a), None) | (None, Some(a)) => ValidOrder::Finite(a),
            (Some(a), Some(b)) => ValidOrder::Finite(a.min(b)),
        }
    };
    if !valid.allows(n) {
        let ValidOrder::Finite(v) = valid else { unreachable!() };
        return Err(Error::OrderExceedsValidity { requested: n, valid: v });
    }
    let modes = Arc::new(zero_energy_modes(model, solver)?);
    if modes.wronskian.abs() < 1e-8 * modes.wronskian_scale.max(f64::MIN_POSITIVE) || modes.wronskian == 0.0 {
        return Err(Error::ExceptionalCase(modes.wronskian.abs()));
    }
    let (ms, ps) = modes.samples();
    for (z, p) in ms.iter().chain(&ps) {
        if !(*p > 0.0) {
            return Err(Error::NegativeZeroMode(*z));
        }
    }
    for z in [lo, hi] {
        if !(modes.psi_minus(z)?.0 > 0.0 && modes.psi_plus(z)?.0 > 0.0) {
            return Err(Error::NegativeZeroMode(z));
        }
    }
    let vm = zero_mode_model(model, &modes, true)?;
    let vp = zero_mode_model(model, &modes, false)?;

    let s_max = n - 1;
    let top = s_max.max(0);
    let run = |extra: u32| -> Result<(LaurentSeries, LaurentSeries, LaurentSeries, Vec<f64>)> {
        let len = |side| (0..=top as usize).map(|j| a_terms(j, side).max_len()).max().unwrap_or(1).max(1);
        let em = BracketEngine::new(
            &vm,
            &EngineRequest {
                points: vec![lo, hi],
                lower: f64::NEG_INFINITY,
                upper: hi,
                lower_len: len(Side::Right),
                upper_len: 1,
                extra_bisections: extra,
            },
            cfg,
        )?;
        let ep = BracketEngine::new(
            &vp,
            &EngineRequest {
                points: vec![lo, hi],
                lower: lo,
                upper: f64::INFINITY,
                lower_len: 1,
                upper_len: len(Side::Left),
                extra_bisections: extra,
            },
            cfg,
        )?;
        let ar: Vec<Table> = (0..=s_max)
            .map(|j| coeff_on_nodes(&a_terms(j as usize, Side::Right), &em, &vm))
            .collect::<Result<_>>()?;
        let al: Vec<Table> = (0..=s_max)
            .map(|j| coeff_on_nodes(&a_terms(j as usize, Side::Left), &ep, &vp))
            .collect::<Result<_>>()?;
        let s_m1 = |z: f64| -> Result<f64> { Ok(0.5 * (vm.eval_f(z)? - vp.eval_f(z)?)) };
        let series = |z: f64| -> Result<LaurentSeries> {
            let mut c = vec![C::new(s_m1(z)?, 0.0)];
            for (r, l) in ar.iter().zip(&al) {
                c.push(C::new(em.value_at(r, z) + ep.value_at(l, z), 0.0));
            }
            Ok(LaurentSeries::new(-1, c))
        };
        let s_x = series(hi)?;
        let s_y = series(lo)?;
        let q0 = 0.25 * (vm.eval_v(hi)? - vm.eval_v(lo)? - vp.eval_v(hi)? + vp.eval_v(lo)?);
        let mut q = vec![q0];
        for j in 0..n {
            let j = j as usize;
            q.push(-(em.integrate(&ar[j], lo, hi) + ep.integrate(&al[j], lo, hi)));
        }
        let g = assemble(&s_x, &s_y, &q, Branch::Minus, n)?;
        Ok((g, s_x, s_y, q))
    };
    let (g, s_x, s_y, q) = run(0)?;
    let quadrature_error = run(1).map_or(f64::NAN, |(g2, ..)| series_distance(&g, &g2));

    let check = zero_energy_closed_forms(&vm, &vp, hi, lo, cfg)?;
    let mut cross = ((g.re(0) - check.0) / check.0).abs();
    if n >= 1 {
        cross = cross.max(((g.re(1) - check.1) / check.1).abs());
    }
    let mut warnings = Vec::new();
    if !(cross <= 1e-6) {
        warnings.push(format!("zero-energy closed forms disagree by {cross:.2e}"));
    }
    let max_imag = g.max_imag();
    Ok(ExpansionResult {
        model: model.id.clone(),
        case_tag: CaseTag::Iii,
        reflected: false,
        x: hi,
        y: lo,
        order: n,
        g,
        s_x,
        s_y,
        q,
        diagnostics: Diagnostics {
            valid_order: valid,
            quadrature_error,
            max_imag,
            route: Route::ZeroEnergy,
            cross_check: Some(cross),
            warnings,
        },
    })
}

/// `(g₀, g₁)` of the zero-energy route in closed form.
fn zero_energy_closed_forms(
    vm: &PotentialModel,
    vp: &PotentialModel,
    x: f64,
    y: f64,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    let df = |z: f64| -> Result<f64> { Ok(vm.eval_f(z)? - vp.eval_f(z)?) };
    let ev = |z: f64| -> Result<f64> { Ok(vm.eval_v(z)?.exp() + vp.eval_v(z)?.exp()) };
    let g0 = -((vm.eval_v(x)? - vp.eval_v(x)? - vm.eval_v(y)? + vp.eval_v(y)?) / 4.0).exp()
        / (df(x)? * df(y)?).sqrt();
    let integral = if x == y {
        0.0
    } else {
        eval_bracket(&BracketSpec::parse(BracketKind::Plain, "+", y, x)?, vm, cfg)?
            + eval_bracket(&BracketSpec::parse(BracketKind::Plain, "+", y, x)?, vp, cfg)?
    };
    let g1 = 0.5 * (integral + ev(x)? / df(x)? + ev(y)? / df(y)?) * g0;
    Ok((g0, g1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::catalog_with;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn free_particle_series() {
        let m = catalog_with("free", &[]).unwrap();
        let r = green_series(&m, 0.8, -0.3, 2, &cfg()).unwrap();
        let d = 1.1;
        assert!((r.coeff(-1) - 0.5).abs() < 1e-12);
        assert!((r.coeff(0) - d / 2.0).abs() < 1e-12);
        assert!((r.coeff(1) - d * d / 4.0).abs() < 1e-12);
        assert!((r.coeff(2) - d * d * d / 12.0).abs() < 1e-12);
        assert!((r.s_x.re(0) + 1.0).abs() < 1e-14);
        assert!(r.s_x.re(1).abs() < 1e-14);
        assert!((r.q[1] - d).abs() < 1e-13);
    }

    #[test]
    fn log_form_relations() {
        let g = LaurentSeries::from_real(-1, &[1.0, 2.0, 3.0]);
        let p = log_form_series(&g).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15);
        let g = LaurentSeries::from_real(-1, &[1.0, 0.0, 3.0]);
        assert_eq!(log_form_series(&g).unwrap()[0], 0.0);
    }

    #[test]
    fn pole_resummation_limits() {
        let k = C::new(0.3, 0.0);
        let a = pole_resummed(-1.0, 2.0, 0.0, k).unwrap();
        let b = C::new(-1.0, 0.0) / (-(k * k)) + 2.0;
        assert!((a - b).norm() < 1e-14);
        // g₀ / (1 - t² g₂/g₀) with t² = -k² = -1/2 → pole when g₂/g₀ = -2
        assert_eq!(pole_resummed(0.0, 1.0, -2.0, C::new(0.5f64.sqrt(), 0.0)).unwrap_err(), Error::DivisionByZero);
    }

    #[test]
    fn rejects_order_beyond_validity() {
        let m = catalog_with("logstep", &[("alpha", 1.5)]).unwrap();
        let e = green_series(&m, 1.5, 0.8, 2, &cfg()).unwrap_err();
        assert_eq!(e, Error::OrderExceedsValidity { requested: 2, valid: 0 });
    }

    #[test]
    fn unlisted_closed_form() {
        let m = catalog_with("invparabolic", &[]).unwrap();
        let e = closed_form_g(&m, 0.5, 0.0, CaseTag::Vi, 2, &cfg()).unwrap_err();
        assert!(matches!(e, Error::NoClosedForm { .. }));
    }

    #[test]
    fn barrier_zero_energy_route() {
        let m = catalog_with("barrier", &[("a", 1.0)]).unwrap();
        let r = generic_expansion(&m, 0.5, -0.5, 1, &SolverConfig::default(), &cfg()).unwrap();
        let g0 = -0.5f64.cosh().powi(2) / 2f64.sinh();
        assert!((r.coeff(0) - g0).abs() < 1e-8 * g0.abs(), "{} vs {g0}", r.coeff(0));
        assert!(r.diagnostics.cross_check.unwrap() < 1e-8);
    }

    #[test]
    fn zero_energy_route_at_each_order() {
        let m = catalog_with("barrier", &[("a", 1.0)]).unwrap();
        let g0 = -0.5f64.cosh().powi(2) / 2f64.sinh();
        let top = generic_expansion(&m, 0.5, -0.5, 2, &SolverConfig::default(), &cfg()).unwrap();
        for n in 0..=2 {
            let r = generic_expansion(&m, 0.5, -0.5, n, &SolverConfig::default(), &cfg()).unwrap();
            assert_eq!(r.g.max_order(), n);
            assert!((r.coeff(0) - g0).abs() < 1e-8 * g0.abs());
            for j in 0..=n {
                assert!((r.coeff(j) - top.coeff(j)).abs() < 1e-8 * top.coeff(j).abs().max(1e-3));
            }
        }
    }

    #[test]
    fn free_zero_energy_route_is_exceptional() {
        let m = catalog_with("free", &[]).unwrap();
        let e = generic_expansion(&m, 0.5, -0.5, 0, &SolverConfig::default(), &cfg()).unwrap_err();
        assert!(matches!(e, Error::ExceptionalCase(_)));
    }
}
