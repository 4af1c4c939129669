//! Potentials with declared asymptotic metadata.
//!
//! A model carries the Fokker-Planck potential `V`, the drift `f = -V'/2`
//! and the Schrödinger potential `V_S = f² + f'`. Models known only through
//! `V_S` (the zero-energy route) leave `V` and `f` empty.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// How the relevant tail function vanishes: `V - V₁` at a finite end,
/// `e^{-V}` at a `+∞` end, `e^{V}` at a `-∞` end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Decay {
    ExponentialOrFaster,
    /// `|tail| ~ |z|^{-α}`.
    PowerLaw(f64),
    /// `V ~ ±α log|z|`, so the tail weight again falls like `|z|^{-α}`.
    LogGrowth(f64),
}

impl Decay {
    /// Largest `n` with the tail in `F_n`; `None` when it is in every class.
    pub fn membership(self) -> Option<i32> {
        match self {
            Decay::ExponentialOrFaster => None,
            Decay::PowerLaw(a) | Decay::LogGrowth(a) => Some((a - 1.0).ceil() as i32 - 1),
        }
    }

    /// Power-law exponent of the tail, if any.
    pub fn power(self) -> Option<f64> {
        match self {
            Decay::ExponentialOrFaster => None,
            Decay::PowerLaw(a) | Decay::LogGrowth(a) => Some(a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointKind {
    FiniteLimit,
    PlusInfinity,
    MinusInfinity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointClass {
    pub kind: EndpointKind,
    pub limit_value: Option<f64>,
    pub decay: Option<Decay>,
}

impl EndpointClass {
    pub fn finite(limit: f64, decay: Decay) -> Self {
        Self {
            kind: EndpointKind::FiniteLimit,
            limit_value: Some(limit),
            decay: Some(decay),
        }
    }

    pub fn plus_infinity(decay: Decay) -> Self {
        Self {
            kind: EndpointKind::PlusInfinity,
            limit_value: None,
            decay: Some(decay),
        }
    }

    pub fn minus_infinity(decay: Decay) -> Self {
        Self {
            kind: EndpointKind::MinusInfinity,
            limit_value: None,
            decay: Some(decay),
        }
    }

    pub fn without_decay(mut self) -> Self {
        self.decay = None;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.limit_value.is_some() != (self.kind == EndpointKind::FiniteLimit) {
            return Err(Error::BadParameter(
                "limit value must be given exactly for finite endpoints".into(),
            ));
        }
        if let Some(a) = self.decay.and_then(Decay::power) {
            if !(a > 0.0) {
                return Err(Error::BadParameter(format!(
                    "decay exponent {a} must be positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DiscontinuityKind {
    /// `f` jumps by `delta = f(x₀+) - f(x₀-)`; `V_S` carries `delta·δ(x - x₀)`.
    FJump { delta: f64 },
    /// `V_S` has a finite jump; `f` is continuous.
    VsJump,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discontinuity {
    pub at: f64,
    pub kind: DiscontinuityKind,
}

impl Discontinuity {
    /// Weight of the delta function in `V_S` at this point.
    pub fn delta_weight(&self) -> f64 {
        match self.kind {
            DiscontinuityKind::FJump { delta } => delta,
            DiscontinuityKind::VsJump => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CaseTag {
    I,
    Ii,
    Iii,
    Iv,
    V,
    Vi,
}

impl CaseTag {
    /// Lowest power of `ik` in the Green-function series.
    pub fn g_min_order(self) -> i32 {
        match self {
            CaseTag::I | CaseTag::Ii => -1,
            CaseTag::Iii | CaseTag::V | CaseTag::Vi => 0,
            CaseTag::Iv => -2,
        }
    }

    /// Only even powers survive in the Green-function series.
    pub fn even_only(self) -> bool {
        matches!(self, CaseTag::Iv | CaseTag::V | CaseTag::Vi)
    }

    pub fn name(self) -> &'static str {
        match self {
            CaseTag::I => "i",
            CaseTag::Ii => "ii",
            CaseTag::Iii => "iii",
            CaseTag::Iv => "iv",
            CaseTag::V => "v",
            CaseTag::Vi => "vi",
        }
    }

    /// Class-index offsets `(left, right)`: order `N` needs the left tail in
    /// `F_{N+left}` and the right tail in `F_{N+right}`.
    fn validity_offsets(self) -> (i32, i32) {
        match self {
            CaseTag::I | CaseTag::Ii | CaseTag::Vi => (0, 0),
            CaseTag::Iii | CaseTag::V => (-2, 0),
            CaseTag::Iv => (2, 2),
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Case tag plus whether the model must be mirrored (`x ↦ -x`) to reach it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub tag: CaseTag,
    pub reflected: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidOrder {
    Finite(i32),
    Unbounded,
}

impl ValidOrder {
    pub fn capped(self, cap: i32) -> i32 {
        match self {
            ValidOrder::Finite(n) => n.min(cap),
            ValidOrder::Unbounded => cap,
        }
    }

    pub fn allows(self, n: i32) -> bool {
        match self {
            ValidOrder::Finite(m) => n <= m,
            ValidOrder::Unbounded => true,
        }
    }
}

impl fmt::Display for ValidOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidOrder::Finite(n) => write!(f, "{n}"),
            ValidOrder::Unbounded => f.write_str("unbounded"),
        }
    }
}

#[derive(Clone)]
pub struct PotentialModel {
    pub id: String,
    v: Option<RealFn>,
    f: Option<RealFn>,
    vs: RealFn,
    pub discontinuities: Vec<Discontinuity>,
    pub left: EndpointClass,
    pub right: EndpointClass,
    pub params: BTreeMap<String, f64>,
    /// Set on models produced by [`PotentialModel::reflected`].
    pub mirrored: bool,
}

impl fmt::Debug for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialModel")
            .field("id", &self.id)
            .field("fokker_planck", &self.v.is_some())
            .field("discontinuities", &self.discontinuities)
            .field("left", &self.left)
            .field("right", &self.right)
            .field("params", &self.params)
            .field("mirrored", &self.mirrored)
            .finish()
    }
}

impl PotentialModel {
    /// Fokker-Planck model. `V_S` defaults to `f² + f'` by central differences
    /// when not supplied.
    pub fn fokker_planck(
        id: impl Into<String>,
        v: RealFn,
        f: RealFn,
        vs: Option<RealFn>,
        left: EndpointClass,
        right: EndpointClass,
    ) -> Result<Self> {
        left.validate()?;
        right.validate()?;
        let vs = vs.unwrap_or_else(|| {
            let f = f.clone();
            Arc::new(move |x: f64| {
                let h = 1e-5 * x.abs().max(1.0);
                let fx = f(x);
                fx * fx + (f(x + h) - f(x - h)) / (2.0 * h)
            })
        });
        Ok(Self {
            id: id.into(),
            v: Some(v),
            f: Some(f),
            vs,
            discontinuities: Vec::new(),
            left,
            right,
            params: BTreeMap::new(),
            mirrored: false,
        })
    }

    /// Model known only through `V_S`; endpoint classes describe `V_S` itself.
    pub fn schrodinger(
        id: impl Into<String>,
        vs: RealFn,
        left: EndpointClass,
        right: EndpointClass,
    ) -> Result<Self> {
        left.validate()?;
        right.validate()?;
        Ok(Self {
            id: id.into(),
            v: None,
            f: None,
            vs,
            discontinuities: Vec::new(),
            left,
            right,
            params: BTreeMap::new(),
            mirrored: false,
        })
    }

    pub fn with_discontinuities(mut self, mut d: Vec<Discontinuity>) -> Self {
        d.sort_by(|a, b| a.at.total_cmp(&b.at));
        self.discontinuities = d;
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn is_fokker_planck(&self) -> bool {
        self.v.is_some()
    }

    fn require_fp(&self) -> Result<(&RealFn, &RealFn)> {
        match (&self.v, &self.f) {
            (Some(v), Some(f)) => Ok((v, f)),
            _ => Err(Error::SchrodingerOnly(self.id.clone())),
        }
    }

    pub fn v_fn(&self) -> Result<RealFn> {
        self.require_fp().map(|(v, _)| v.clone())
    }

    pub fn eval_v(&self, x: f64) -> Result<f64> {
        self.require_fp().map(|(v, _)| v(x))
    }

    pub fn eval_f(&self, x: f64) -> Result<f64> {
        self.require_fp().map(|(_, f)| f(x))
    }

    pub fn eval_vs(&self, x: f64) -> f64 {
        (self.vs)(x)
    }

    pub fn vs_fn(&self) -> RealFn {
        self.vs.clone()
    }

    /// `V₁`, the limit at `-∞`, when finite.
    pub fn v1(&self) -> Option<f64> {
        self.left.limit_value
    }

    /// `V₂`, the limit at `+∞`, when finite.
    pub fn v2(&self) -> Option<f64> {
        self.right.limit_value
    }

    /// The model under `x ↦ -x`: `V(-x)`, `-f(-x)`, `V_S(-x)`, ends swapped.
    pub fn reflected(&self) -> Self {
        let flip = |g: &RealFn| -> RealFn {
            let g = g.clone();
            Arc::new(move |x: f64| g(-x))
        };
        let f = self.f.as_ref().map(|f| {
            let f = f.clone();
            Arc::new(move |x: f64| -f(-x)) as RealFn
        });
        let mut discontinuities: Vec<_> = self
            .discontinuities
            .iter()
            .map(|d| Discontinuity {
                at: -d.at,
                kind: d.kind,
            })
            .collect();
        discontinuities.reverse();
        Self {
            id: format!("{}~mirror", self.id),
            v: self.v.as_ref().map(flip),
            f,
            vs: flip(&self.vs),
            discontinuities,
            left: self.right,
            right: self.left,
            params: self.params.clone(),
            mirrored: !self.mirrored,
        }
    }

    /// Log-log probe of the declared tails on `[10², 10⁴]`. Returns warnings;
    /// the declared metadata is never overridden.
    pub fn probe_decay(&self) -> Vec<String> {
        let Ok((v, _)) = self.require_fp() else {
            return Vec::new();
        };
        let mut warnings = Vec::new();
        for (end, class, sign) in [("left", self.left, -1.0), ("right", self.right, 1.0)] {
            let Some(decay) = class.decay else { continue };
            let weight = |z: f64| -> f64 {
                let vz = v(sign * z);
                match class.kind {
                    EndpointKind::FiniteLimit => (vz - class.limit_value.unwrap()).abs(),
                    EndpointKind::PlusInfinity => (-vz).exp(),
                    EndpointKind::MinusInfinity => vz.exp(),
                }
            };
            let (w1, w2) = (weight(1e2), weight(1e4));
            if w1 == 0.0 || w2 == 0.0 || !w1.is_finite() || !w2.is_finite() {
                continue;
            }
            let slope = (w2.ln() - w1.ln()) / (1e4f64.ln() - 1e2f64.ln());
            match decay.power() {
                Some(a) if (slope + a).abs() > 0.5 => warnings.push(format!(
                    "{}: {end} tail slope {slope:.3} differs from declared power -{a}",
                    self.id
                )),
                None if slope > -5.0 => warnings.push(format!(
                    "{}: {end} tail slope {slope:.3} looks algebraic, declared exponential",
                    self.id
                )),
                _ => {}
            }
        }
        warnings
    }
}

/// Place the model among the six cases; mirror configurations are reported
/// with `reflected = true` and the tag of their mirror image.
pub fn classify_case(model: &PotentialModel) -> Classification {
    use EndpointKind::*;
    let (tag, reflected) = match (model.left.kind, model.right.kind) {
        (FiniteLimit, FiniteLimit) => (CaseTag::I, false),
        (FiniteLimit, PlusInfinity) => (CaseTag::Ii, false),
        (FiniteLimit, MinusInfinity) => (CaseTag::Iii, false),
        (PlusInfinity, PlusInfinity) => (CaseTag::Iv, false),
        (PlusInfinity, MinusInfinity) => (CaseTag::V, false),
        (MinusInfinity, MinusInfinity) => (CaseTag::Vi, false),
        (PlusInfinity, FiniteLimit) => (CaseTag::Ii, true),
        (MinusInfinity, FiniteLimit) => (CaseTag::Iii, true),
        (MinusInfinity, PlusInfinity) => (CaseTag::V, true),
    };
    Classification { tag, reflected }
}

/// Largest truncation order for which every coefficient is finite and the
/// remainder is `o(k^N)`, from the declared tail classes.
pub fn max_valid_order(model: &PotentialModel) -> Result<ValidOrder> {
    let class = classify_case(model);
    let (left, right) = if class.reflected {
        (model.right, model.left)
    } else {
        (model.left, model.right)
    };
    let ld = left.decay.ok_or(Error::MissingDecayMetadata("left"))?;
    let rd = right.decay.ok_or(Error::MissingDecayMetadata("right"))?;
    let (lo, ro) = class.tag.validity_offsets();
    let bound = |m: Option<i32>, off: i32| m.map(|m| m - off);
    let n = match (bound(ld.membership(), lo), bound(rd.membership(), ro)) {
        (None, None) => return Ok(ValidOrder::Unbounded),
        (Some(a), None) | (None, Some(a)) => a,
        (Some(a), Some(b)) => a.min(b),
    };
    let n = if class.tag.even_only() {
        n.div_euclid(2) * 2
    } else {
        n
    };
    Ok(ValidOrder::Finite(n))
}

fn param(params: &BTreeMap<String, f64>, name: &str, default: Option<f64>) -> Result<f64> {
    match params.get(name).copied().or(default) {
        Some(v) if v.is_finite() => Ok(v),
        Some(v) => Err(Error::BadParameter(format!("{name} = {v}"))),
        None => Err(Error::BadParameter(format!("missing parameter `{name}`"))),
    }
}

/// Names accepted by [`catalog`].
pub const CATALOG: &[&str] = &[
    "free",
    "parabolic",
    "logcosh",
    "exponential",
    "sqrtwell",
    "logstep",
    "barrier",
    "tanhstep",
    "negexp",
    "invparabolic",
];

fn allowed_params(name: &str) -> &'static [&'static str] {
    match name {
        "logstep" => &["alpha"],
        "barrier" => &["a"],
        _ => &[],
    }
}

fn arc(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> RealFn {
    Arc::new(f)
}

/// Built-in potentials.
///
/// | name | `V(z)` | case |
/// |---|---|---|
/// | `free` | `0` | i |
/// | `parabolic` | `z²` | iv |
/// | `logcosh` | `2 log cosh z` | iv |
/// | `exponential` | `e^z` | ii |
/// | `sqrtwell` | `√(1-z) - 1` (z<0), `1 - √(1+z)` (z>0) | v |
/// | `logstep` | `α θ(z-1) log z` | ii |
/// | `barrier` | `V_S = a²` on `|z|<1` (zero-energy route) | i |
/// | `tanhstep` | `tanh z` | i |
/// | `negexp` | `-e^z` | iii |
/// | `invparabolic` | `-z²` | vi |
pub fn catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<PotentialModel> {
    if !CATALOG.contains(&name) {
        return Err(Error::UnknownPotential(name.to_string()));
    }
    if let Some(extra) = params
        .keys()
        .find(|k| !allowed_params(name).contains(&k.as_str()))
    {
        return Err(Error::BadParameter(format!(
            "`{name}` takes no parameter `{extra}`"
        )));
    }
    let exp = Decay::ExponentialOrFaster;
    let model = match name {
        "free" => PotentialModel::fokker_planck(
            name,
            arc(|_| 0.0),
            arc(|_| 0.0),
            Some(arc(|_| 0.0)),
            EndpointClass::finite(0.0, exp),
            EndpointClass::finite(0.0, exp),
        )?,
        "parabolic" => PotentialModel::fokker_planck(
            name,
            arc(|z| z * z),
            arc(|z| -z),
            Some(arc(|z| z * z - 1.0)),
            EndpointClass::plus_infinity(exp),
            EndpointClass::plus_infinity(exp),
        )?,
        "logcosh" => PotentialModel::fokker_planck(
            name,
            arc(|z: f64| {
                let a = z.abs();
                2.0 * (a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2)
            }),
            arc(|z: f64| -z.tanh()),
            Some(arc(|z: f64| 1.0 - 2.0 / z.cosh().powi(2))),
            EndpointClass::plus_infinity(exp),
            EndpointClass::plus_infinity(exp),
        )?,
        "exponential" => PotentialModel::fokker_planck(
            name,
            arc(f64::exp),
            arc(|z: f64| -0.5 * z.exp()),
            Some(arc(|z: f64| 0.25 * (2.0 * z).exp() - 0.5 * z.exp())),
            EndpointClass::finite(0.0, exp),
            EndpointClass::plus_infinity(exp),
        )?,
        "sqrtwell" => PotentialModel::fokker_planck(
            name,
            arc(|z: f64| {
                if z < 0.0 {
                    (1.0 - z).sqrt() - 1.0
                } else {
                    1.0 - (1.0 + z).sqrt()
                }
            }),
            arc(|z: f64| 0.25 / (1.0 + z.abs()).sqrt()),
            Some(arc(|z: f64| {
                let u = 1.0 + z.abs();
                let s = if z < 0.0 { 1.0 } else { -1.0 };
                1.0 / (16.0 * u) + s / (8.0 * u.powf(1.5))
            })),
            EndpointClass::plus_infinity(exp),
            EndpointClass::minus_infinity(exp),
        )?
        .with_discontinuities(vec![Discontinuity {
            at: 0.0,
            kind: DiscontinuityKind::VsJump,
        }]),
        "logstep" => {
            let alpha = param(params, "alpha", None)?;
            if alpha <= 0.0 {
                return Err(Error::BadParameter(format!(
                    "alpha = {alpha} must be positive"
                )));
            }
            PotentialModel::fokker_planck(
                name,
                arc(move |z: f64| if z > 1.0 { alpha * z.ln() } else { 0.0 }),
                arc(move |z: f64| if z > 1.0 { -0.5 * alpha / z } else { 0.0 }),
                Some(arc(move |z: f64| {
                    if z > 1.0 {
                        0.25 * alpha * (alpha + 2.0) / (z * z)
                    } else {
                        0.0
                    }
                })),
                EndpointClass::finite(0.0, exp),
                EndpointClass::plus_infinity(Decay::LogGrowth(alpha)),
            )?
            .with_discontinuities(vec![Discontinuity {
                at: 1.0,
                kind: DiscontinuityKind::FJump {
                    delta: -0.5 * alpha,
                },
            }])
            .with_param("alpha", alpha)
        }
        "barrier" => {
            let a = param(params, "a", Some(1.0))?;
            if a <= 0.0 {
                return Err(Error::BadParameter(format!("a = {a} must be positive")));
            }
            let a2 = a * a;
            PotentialModel::schrodinger(
                name,
                arc(move |z: f64| if z.abs() < 1.0 { a2 } else { 0.0 }),
                EndpointClass::finite(0.0, exp),
                EndpointClass::finite(0.0, exp),
            )?
            .with_discontinuities(vec![
                Discontinuity {
                    at: -1.0,
                    kind: DiscontinuityKind::VsJump,
                },
                Discontinuity {
                    at: 1.0,
                    kind: DiscontinuityKind::VsJump,
                },
            ])
            .with_param("a", a)
        }
        "tanhstep" => PotentialModel::fokker_planck(
            name,
            arc(f64::tanh),
            arc(|z: f64| -0.5 / z.cosh().powi(2)),
            Some(arc(|z: f64| {
                let s2 = 1.0 / z.cosh().powi(2);
                0.25 * s2 * s2 + s2 * z.tanh()
            })),
            EndpointClass::finite(-1.0, exp),
            EndpointClass::finite(1.0, exp),
        )?,
        "negexp" => PotentialModel::fokker_planck(
            name,
            arc(|z: f64| -z.exp()),
            arc(|z: f64| 0.5 * z.exp()),
            Some(arc(|z: f64| 0.25 * (2.0 * z).exp() + 0.5 * z.exp())),
            EndpointClass::finite(0.0, exp),
            EndpointClass::minus_infinity(exp),
        )?,
        "invparabolic" => PotentialModel::fokker_planck(
            name,
            arc(|z| -z * z),
            arc(|z| z),
            Some(arc(|z| z * z + 1.0)),
            EndpointClass::minus_infinity(exp),
            EndpointClass::minus_infinity(exp),
        )?,
        _ => unreachable!(),
    };
    Ok(model)
}

/// Convenience wrapper for [`catalog`] with `(name, value)` pairs.
pub fn catalog_with(name: &str, params: &[(&str, f64)]) -> Result<PotentialModel> {
    let map = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    catalog(name, &map)
}
