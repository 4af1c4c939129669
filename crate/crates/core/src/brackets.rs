//! Ordered-simplex integrals `[σ₁,…,σₙ]_a^b` and their angle variants.
//!
//! Integrals are built innermost-first by cumulative quadrature on a mesh of
//! Chebyshev–Lobatto panels. Every nested table lives on the same nodes, so a
//! bracket with `n` slots costs `n` cumulative sweeps, and tables sharing a
//! prefix are computed once.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{Decay, EndpointClass, EndpointKind, PotentialModel, RealFn};

/// Polynomial degree on each panel.
pub const CHEB_DEGREE: usize = 24;
const NP: usize = CHEB_DEGREE + 1;

/// Values at the nodes of every panel.
pub type Table = Vec<[f64; NP]>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BracketKind {
    Plain,
    /// First slot carries `2e^{-V₁} sinh[V₁ - V(z₁)]`.
    AngleLeft,
    /// Last slot carries `2e^{-V₂} sinh[V₂ - V(zₙ)]`.
    AngleRight,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketSpec {
    pub kind: BracketKind,
    pub signs: Vec<i8>,
    /// May be `-∞`.
    pub lower: f64,
    /// May be `+∞`.
    pub upper: f64,
}

impl BracketSpec {
    pub fn new(kind: BracketKind, signs: Vec<i8>, lower: f64, upper: f64) -> Self {
        Self {
            kind,
            signs,
            lower,
            upper,
        }
    }

    /// Parse a sign string such as `"-++"`.
    pub fn parse(kind: BracketKind, signs: &str, lower: f64, upper: f64) -> Result<Self> {
        let signs = parse_signs(signs)?;
        Ok(Self {
            kind,
            signs,
            lower,
            upper,
        })
    }

    pub fn sign_string(&self) -> String {
        sign_string(&self.signs)
    }

    fn validate(&self, model: &PotentialModel) -> Result<()> {
        if self.signs.is_empty() {
            return Err(Error::InvalidSpec("empty sign sequence".into()));
        }
        if self.signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpec("signs must be +1 or -1".into()));
        }
        if self.lower.is_nan()
            || self.upper.is_nan()
            || self.lower == f64::INFINITY
            || self.upper == f64::NEG_INFINITY
        {
            return Err(Error::InvalidSpec(
                "limits must be ordered reals or ±∞".into(),
            ));
        }
        if self.lower > self.upper {
            return Err(Error::InvalidSpec(format!(
                "lower limit {} exceeds upper limit {}",
                self.lower, self.upper
            )));
        }
        match self.kind {
            BracketKind::Plain => {}
            BracketKind::AngleLeft => {
                if self.lower != f64::NEG_INFINITY || model.v1().is_none() {
                    return Err(Error::InvalidSpec(
                        "angle-left bracket needs lower = -∞ and a finite V₁".into(),
                    ));
                }
                if self.signs[0] != -1 {
                    return Err(Error::InvalidSpec("angle slot must carry sign -1".into()));
                }
            }
            BracketKind::AngleRight => {
                if self.upper != f64::INFINITY || model.v2().is_none() {
                    return Err(Error::InvalidSpec(
                        "angle-right bracket needs upper = +∞ and a finite V₂".into(),
                    ));
                }
                if *self.signs.last().unwrap() != -1 {
                    return Err(Error::InvalidSpec("angle slot must carry sign -1".into()));
                }
            }
        }
        Ok(())
    }

    /// Slots in written order, angle slots marked.
    fn slots(&self) -> Vec<Slot> {
        let mut slots: Vec<Slot> = self.signs.iter().map(|&s| Slot::sign(s)).collect();
        match self.kind {
            BracketKind::Plain => {}
            BracketKind::AngleLeft => slots[0] = Slot::AngleV1,
            BracketKind::AngleRight => *slots.last_mut().unwrap() = Slot::AngleV2,
        }
        slots
    }
}

pub fn parse_signs(s: &str) -> Result<Vec<i8>> {
    s.chars()
        .map(|c| match c {
            '+' => Ok(1),
            '-' | '−' => Ok(-1),
            _ => Err(Error::InvalidSpec(format!(
                "bad sign character `{c}` in `{s}`"
            ))),
        })
        .collect()
}

pub fn sign_string(signs: &[i8]) -> String {
    signs
        .iter()
        .map(|&s| if s > 0 { '+' } else { '-' })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections of any initial panel.
    pub max_depth: u32,
    pub truncation_tail_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_depth: 40,
            truncation_tail_tol: 1e-14,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.rel_tol)
            && ok(self.abs_tol)
            && ok(self.truncation_tail_tol)
            && self.max_depth > 0
        {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "quadrature settings must be positive: {self:?}"
            )))
        }
    }
}

/// Which end of the interval the nested integrals start from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Anchor {
    Lower,
    Upper,
}

/// One integrand factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Plus,
    Minus,
    AngleV1,
    AngleV2,
}

impl Slot {
    pub fn sign(s: i8) -> Self {
        if s > 0 {
            Slot::Plus
        } else {
            Slot::Minus
        }
    }
}

struct Cheb {
    nodes: [f64; NP],
    /// `cum[i][j]`: weight of `f_j` in `∫_{-1}^{t_i} f`.
    cum: [[f64; NP]; NP],
    /// `rcum[i][j]`: weight of `f_j` in `∫_{t_i}^{1} f`.
    rcum: [[f64; NP]; NP],
    /// Values to Chebyshev coefficients.
    coef: [[f64; NP]; NP],
    bary: [f64; NP],
}

fn cheb() -> &'static Cheb {
    static CHEB: OnceLock<Cheb> = OnceLock::new();
    CHEB.get_or_init(|| {
        let p = CHEB_DEGREE;
        let pi = std::f64::consts::PI;
        let mut nodes = [0.0; NP];
        for (j, t) in nodes.iter_mut().enumerate() {
            *t = -(pi * j as f64 / p as f64).cos();
        }
        nodes[p / 2] = 0.0;
        // T_k(t_j) with t_j = -cos(πj/p) equals (-1)^k cos(πjk/p)
        let tk = |k: usize, j: usize| {
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            s * (pi * (j * k % (2 * p)) as f64 / p as f64).cos()
        };
        let mut coef = [[0.0; NP]; NP];
        for (k, row) in coef.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                let mut w = 2.0 / p as f64;
                if j == 0 || j == p {
                    w *= 0.5;
                }
                if k == 0 || k == p {
                    w *= 0.5;
                }
                *c = w * tk(k, j);
            }
        }
        // antiderivative coefficients of each T_k, then evaluate at the nodes
        let cheb_eval = |a: &[f64], t: f64| {
            let (mut b1, mut b2) = (0.0, 0.0);
            for &ak in a.iter().skip(1).rev() {
                let b0 = ak + 2.0 * t * b1 - b2;
                b2 = b1;
                b1 = b0;
            }
            a[0] + t * b1 - b2
        };
        let mut cum = [[0.0; NP]; NP];
        for j in 0..NP {
            let c: Vec<f64> = (0..NP).map(|k| coef[k][j]).collect();
            let mut ic = vec![0.0; NP + 1];
            for (k, &ck) in c.iter().enumerate() {
                match k {
                    0 => ic[1] += ck,
                    1 => ic[2] += ck / 4.0,
                    _ => {
                        ic[k + 1] += ck / (2.0 * (k + 1) as f64);
                        ic[k - 1] -= ck / (2.0 * (k - 1) as f64);
                    }
                }
            }
            let base = cheb_eval(&ic, -1.0);
            for i in 0..NP {
                cum[i][j] = if i == 0 {
                    0.0
                } else {
                    cheb_eval(&ic, nodes[i]) - base
                };
            }
        }
        let mut rcum = [[0.0; NP]; NP];
        for i in 0..NP {
            for j in 0..NP {
                rcum[i][j] = cum[p - i][p - j];
            }
        }
        let mut bary = [0.0; NP];
        for (j, b) in bary.iter_mut().enumerate() {
            *b = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == p {
                *b *= 0.5;
            }
        }
        Cheb {
            nodes,
            cum,
            rcum,
            coef,
            bary,
        }
    })
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    depth: u32,
}

/// What a [`BracketEngine`] must cover.
#[derive(Clone, Debug)]
pub struct EngineRequest {
    /// Points that must be panel endpoints (evaluation points, integration limits).
    pub points: Vec<f64>,
    /// Lower end of the domain; `-∞` selects a tail cutoff from the left metadata.
    pub lower: f64,
    /// Upper end of the domain; `+∞` selects a tail cutoff from the right metadata.
    pub upper: f64,
    /// Longest bracket reaching the lower tail; sets the tail weight `|z|^{n-1}`.
    pub lower_len: usize,
    /// Longest bracket reaching the upper tail.
    pub upper_len: usize,
    /// Uniform bisections applied after adaptive refinement (for error estimates).
    pub extra_bisections: u32,
}

impl EngineRequest {
    pub fn whole_line(points: Vec<f64>, max_len: usize) -> Self {
        Self {
            points,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            lower_len: max_len,
            upper_len: max_len,
            extra_bisections: 0,
        }
    }
}

/// Nested cumulative integrals on a shared mesh for one potential.
pub struct BracketEngine {
    panels: Vec<Panel>,
    x: Table,
    v: Table,
    v1: Option<f64>,
    v2: Option<f64>,
    memo: Mutex<HashMap<(Anchor, Vec<Slot>), Arc<Table>>>,
}

impl std::fmt::Debug for BracketEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BracketEngine")
            .field("panels", &self.panels.len())
            .field("lower", &self.lower())
            .field("upper", &self.upper())
            .finish()
    }
}

fn tail_weight(class: &EndpointClass, v: f64) -> f64 {
    match class.kind {
        EndpointKind::FiniteLimit => (v - class.limit_value.unwrap()).abs(),
        EndpointKind::PlusInfinity => (-v).exp(),
        EndpointKind::MinusInfinity => v.exp(),
    }
}

/// Distance beyond `edge` (in direction `dir`) past which the tail of an
/// `n`-slot bracket is below `tol` relative to the weight at `edge`.
fn tail_cutoff(
    v: &RealFn,
    class: &EndpointClass,
    edge: f64,
    dir: f64,
    n: usize,
    tol: f64,
) -> Result<f64> {
    let decay = class
        .decay
        .ok_or(Error::MissingDecayMetadata(if dir < 0.0 {
            "left"
        } else {
            "right"
        }))?;
    let weight = |z: f64| tail_weight(class, v(z));
    let reference = match class.kind {
        EndpointKind::FiniteLimit => 1.0,
        _ => weight(edge).max(f64::MIN_POSITIVE),
    };
    let nf = n.max(1) as f64;
    match decay {
        Decay::ExponentialOrFaster => {
            let tail = |d: f64| {
                let z = edge + dir * d;
                weight(z) * z.abs().max(1.0).powf(nf - 1.0)
            };
            let target = tol * reference;
            let mut hi = 1.0;
            while !(tail(hi) < target) {
                hi *= 2.0;
                if hi > 1e12 {
                    return Err(Error::DivergentTail(format!(
                        "declared exponential decay not observed toward {}",
                        if dir < 0.0 { "-∞" } else { "+∞" }
                    )));
                }
            }
            let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if tail(mid) < target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(edge + dir * (1.2 * hi).max(1.0))
        }
        Decay::PowerLaw(alpha) | Decay::LogGrowth(alpha) => {
            if alpha <= nf {
                return Err(Error::DivergentTail(format!(
                    "tail ~ |z|^-{alpha} is not integrable against |z|^{}",
                    n.max(1) - 1
                )));
            }
            let probe = edge + dir * (2.0 * edge.abs()).max(10.0);
            let c = weight(probe) * probe.abs().powf(alpha);
            let x = (c / (tol * reference * (alpha - nf))).powf(1.0 / (alpha - nf));
            let d = (x - edge * dir).max(1.0);
            Ok(edge + dir * 1.2 * d)
        }
    }
}

fn nudge(z: f64, toward: f64) -> f64 {
    z + (toward - z) * 1e-13
}

impl BracketEngine {
    pub fn new(
        model: &PotentialModel,
        req: &EngineRequest,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let v = model.v_fn()?;
        let mut pts: Vec<f64> = req
            .points
            .iter()
            .copied()
            .filter(|p| p.is_finite())
            .collect();
        if req.lower.is_finite() {
            pts.push(req.lower);
        }
        if req.upper.is_finite() {
            pts.push(req.upper);
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let (lo_edge, hi_edge) = match (pts.first(), pts.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (0.0, 0.0),
        };
        let lower = if req.lower.is_finite() {
            req.lower
        } else {
            tail_cutoff(
                &v,
                &model.left,
                lo_edge.min(hi_edge - 1.0),
                -1.0,
                req.lower_len,
                cfg.truncation_tail_tol,
            )?
        };
        let upper = if req.upper.is_finite() {
            req.upper
        } else {
            tail_cutoff(
                &v,
                &model.right,
                hi_edge.max(lo_edge + 1.0),
                1.0,
                req.upper_len,
                cfg.truncation_tail_tol,
            )?
        };
        let jumps: Vec<f64> = model.discontinuities.iter().map(|d| d.at).collect();
        let mut breaks: Vec<f64> = pts
            .iter()
            .chain(jumps.iter())
            .copied()
            .filter(|&p| p > lower && p < upper)
            .collect();
        breaks.push(lower);
        breaks.push(upper);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        // unit panels over the structured region, geometric growth beyond it
        let core_lo = breaks[1..].iter().copied().fold(0.0f64, f64::min) - 1.0;
        let core_hi = breaks[..breaks.len() - 1]
            .iter()
            .copied()
            .fold(0.0f64, f64::max)
            + 1.0;
        let mut cuts = breaks.clone();
        let m = (core_hi - core_lo).ceil() as usize;
        cuts.extend((0..=m).map(|i| core_lo + (core_hi - core_lo) * i as f64 / m as f64));
        let mut d = 1.0;
        while core_hi + d < upper || core_lo - d > lower {
            cuts.push(core_hi + d);
            cuts.push(core_lo - d);
            d = 2.0 * d + 1.0;
        }
        cuts.retain(|&c| c >= lower && c <= upper);
        cuts.sort_by(f64::total_cmp);
        let mut kept: Vec<f64> = Vec::with_capacity(cuts.len());
        for c in cuts {
            let fixed = breaks.contains(&c);
            match kept.last() {
                Some(&l) if c - l <= 1e-9 * (1.0 + c.abs()) => {
                    if fixed {
                        *kept.last_mut().unwrap() = c;
                    }
                }
                _ => kept.push(c),
            }
        }
        let initial: Vec<Panel> = kept
            .windows(2)
            .map(|w| Panel {
                a: w[0],
                b: w[1],
                depth: 0,
            })
            .collect();

        let ch = cheb();
        let eval_panel = |p: &Panel| -> ([f64; NP], [f64; NP]) {
            let mut xs = [0.0; NP];
            let mut vs = [0.0; NP];
            let h = 0.5 * (p.b - p.a);
            for i in 0..NP {
                xs[i] = if i == 0 {
                    p.a
                } else if i == NP - 1 {
                    p.b
                } else {
                    p.a + h * (ch.nodes[i] + 1.0)
                };
                let mut z = xs[i];
                if (i == 0 || i == NP - 1) && jumps.contains(&z) {
                    z = nudge(z, 0.5 * (p.a + p.b));
                }
                vs[i] = v(z);
            }
            (xs, vs)
        };
        let v1 = model.v1();
        let v2 = model.v2();
        let needs_split = |p: &Panel, vs: &[f64; NP]| -> Result<bool> {
            if vs.iter().any(|x| !x.is_finite()) {
                return Err(Error::ToleranceNotMet(format!(
                    "potential not finite on [{}, {}]",
                    p.a, p.b
                )));
            }
            let (mn, mx) = vs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
                    (a.min(x), b.max(x))
                });
            if mx - mn > 1.0 {
                return Ok(true);
            }
            let scale = vs.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
            let c_last = |k: usize| -> f64 { (0..NP).map(|j| ch.coef[k][j] * vs[j]).sum::<f64>() };
            let tail = c_last(NP - 1).abs() + c_last(NP - 2).abs();
            if tail > 64.0 * f64::EPSILON * scale {
                return Ok(true);
            }
            let log_spread = |lim: f64| {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for &x in vs {
                    let d = (x - lim).abs();
                    if d == 0.0 {
                        return 0.0;
                    }
                    lo = lo.min(d.ln());
                    hi = hi.max(d.ln());
                }
                hi - lo
            };
            if let Some(l) = v1 {
                if p.b <= core_lo && log_spread(l) > 1.0 {
                    return Ok(true);
                }
            }
            if let Some(l) = v2 {
                if p.a >= core_hi && log_spread(l) > 1.0 {
                    return Ok(true);
                }
            }
            Ok(false)
        };

        let mut panels = Vec::new();
        let mut xs_all = Vec::new();
        let mut vs_all = Vec::new();
        let mut stack: Vec<Panel> = initial.into_iter().rev().collect();
        while let Some(p) = stack.pop() {
            let (xs, vs) = eval_panel(&p);
            if needs_split(&p, &vs)? {
                if p.depth >= cfg.max_depth {
                    return Err(Error::ToleranceNotMet(format!(
                        "panel [{}, {}] still unresolved after {} bisections",
                        p.a, p.b, cfg.max_depth
                    )));
                }
                let m = 0.5 * (p.a + p.b);
                stack.push(Panel {
                    a: m,
                    b: p.b,
                    depth: p.depth + 1,
                });
                stack.push(Panel {
                    a: p.a,
                    b: m,
                    depth: p.depth + 1,
                });
                continue;
            }
            panels.push(p);
            xs_all.push(xs);
            vs_all.push(vs);
        }
        for _ in 0..req.extra_bisections {
            let mut finer = Vec::with_capacity(2 * panels.len());
            xs_all.clear();
            vs_all.clear();
            for p in &panels {
                let m = 0.5 * (p.a + p.b);
                for q in [
                    Panel {
                        a: p.a,
                        b: m,
                        depth: p.depth + 1,
                    },
                    Panel {
                        a: m,
                        b: p.b,
                        depth: p.depth + 1,
                    },
                ] {
                    let (xs, vs) = eval_panel(&q);
                    finer.push(q);
                    xs_all.push(xs);
                    vs_all.push(vs);
                }
            }
            panels = finer;
        }
        Ok(Self {
            panels,
            x: xs_all,
            v: vs_all,
            v1,
            v2,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn lower(&self) -> f64 {
        self.panels.first().map_or(0.0, |p| p.a)
    }

    pub fn upper(&self) -> f64 {
        self.panels.last().map_or(0.0, |p| p.b)
    }

    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }

    /// Node coordinates, panel by panel.
    pub fn nodes(&self) -> &Table {
        &self.x
    }

    /// `V` at the nodes.
    pub fn potential(&self) -> &Table {
        &self.v
    }

    /// Apply `f` to every node value of `V`.
    pub fn map_v(&self, f: impl Fn(f64) -> f64) -> Table {
        self.v.iter().map(|row| row.map(&f)).collect()
    }

    fn slot_weight(&self, slot: Slot) -> Result<Table> {
        Ok(match slot {
            Slot::Plus => self.map_v(f64::exp),
            Slot::Minus => self.map_v(|v| (-v).exp()),
            Slot::AngleV1 => {
                let l = self
                    .v1
                    .ok_or_else(|| Error::InvalidSpec("V₁ is not finite".into()))?;
                self.map_v(|v| 2.0 * (-l).exp() * (l - v).sinh())
            }
            Slot::AngleV2 => {
                let l = self
                    .v2
                    .ok_or_else(|| Error::InvalidSpec("V₂ is not finite".into()))?;
                self.map_v(|v| 2.0 * (-l).exp() * (l - v).sinh())
            }
        })
    }

    /// Cumulative integral of `integrand` from the anchored end.
    pub fn cumulate(&self, integrand: &Table, anchor: Anchor) -> Table {
        let ch = cheb();
        let mut out = vec![[0.0; NP]; self.panels.len()];
        let mut carry = 0.0;
        let mut sweep = |k: usize, m: &[[f64; NP]; NP], end: usize| {
            let h = 0.5 * (self.panels[k].b - self.panels[k].a);
            let u = &integrand[k];
            for i in 0..NP {
                let s: f64 = m[i].iter().zip(u).map(|(w, f)| w * f).sum();
                out[k][i] = carry + h * s;
            }
            carry = out[k][end];
        };
        match anchor {
            Anchor::Lower => (0..self.panels.len()).for_each(|k| sweep(k, &ch.cum, NP - 1)),
            Anchor::Upper => (0..self.panels.len())
                .rev()
                .for_each(|k| sweep(k, &ch.rcum, 0)),
        }
        out
    }

    /// Table of the nested integral whose slots, in integration order from
    /// `anchor`, are `chain`. Entry at node `z` is the bracket between the
    /// anchored end and `z`.
    pub fn table(&self, anchor: Anchor, chain: &[Slot]) -> Result<Arc<Table>> {
        if chain.is_empty() {
            return Err(Error::InvalidSpec("empty sign sequence".into()));
        }
        let key = (anchor, chain.to_vec());
        if let Some(t) = self.memo.lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let w = self.slot_weight(*chain.last().unwrap())?;
        let integrand = if chain.len() == 1 {
            w
        } else {
            let inner = self.table(anchor, &chain[..chain.len() - 1])?;
            w.iter()
                .zip(inner.iter())
                .map(|(a, b)| std::array::from_fn(|i| a[i] * b[i]))
                .collect()
        };
        let t = Arc::new(self.cumulate(&integrand, anchor));
        self.memo.lock().unwrap().insert(key, t.clone());
        Ok(t)
    }

    /// Value of a table at `z`, exact at panel endpoints and interpolated
    /// elsewhere.
    pub fn value_at(&self, table: &Table, z: f64) -> f64 {
        let k = self
            .panels
            .partition_point(|p| p.b < z)
            .min(self.panels.len() - 1);
        let p = self.panels[k];
        if z == p.a {
            return table[k][0];
        }
        if z == p.b {
            return table[k][NP - 1];
        }
        interp_in(&p, &table[k], z)
    }

    /// Bracket with its free end at `z`; the other end is the engine domain
    /// boundary on the `anchor` side.
    pub fn bracket(&self, kind: BracketKind, signs: &[i8], anchor: Anchor, z: f64) -> Result<f64> {
        let spec = BracketSpec {
            kind,
            signs: signs.to_vec(),
            lower: 0.0,
            upper: 0.0,
        };
        let mut slots = spec.slots();
        if anchor == Anchor::Upper {
            slots.reverse();
        }
        let t = self.table(anchor, &slots)?;
        Ok(self.value_at(&t, z))
    }

    /// `∫_a^b` of a tabulated function; `a` and `b` should be panel endpoints.
    pub fn integrate(&self, values: &Table, a: f64, b: f64) -> f64 {
        if a > b {
            return -self.integrate(values, b, a);
        }
        let ch = cheb();
        let mut s = 0.0;
        for (k, p) in self.panels.iter().enumerate() {
            if p.b <= a || p.a >= b {
                continue;
            }
            if p.a >= a && p.b <= b {
                let h = 0.5 * (p.b - p.a);
                s += h * ch.cum[NP - 1]
                    .iter()
                    .zip(&values[k])
                    .map(|(w, f)| w * f)
                    .sum::<f64>();
            } else {
                // partial panel: integrate the interpolant by a local sub-rule
                let lo = p.a.max(a);
                let hi = p.b.min(b);
                let h = 0.5 * (hi - lo);
                let mut part = 0.0;
                for j in 0..NP {
                    let z = lo + h * (ch.nodes[j] + 1.0);
                    part += ch.cum[NP - 1][j] * interp_in(p, &values[k], z);
                }
                s += h * part;
            }
        }
        s
    }
}

fn interp_in(p: &Panel, vals: &[f64; NP], z: f64) -> f64 {
    let ch = cheb();
    let t = (2.0 * z - p.a - p.b) / (p.b - p.a);
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..NP {
        let d = t - ch.nodes[j];
        if d == 0.0 {
            return vals[j];
        }
        let w = ch.bary[j] / d;
        num += w * vals[j];
        den += w;
    }
    num / den
}

/// Check that the integrand decays toward each infinite limit.
fn check_tails(spec: &BracketSpec, model: &PotentialModel) -> Result<()> {
    let slots = spec.slots();
    let partial_ok = |class: &EndpointClass, seq: &mut dyn Iterator<Item = &Slot>, end: &str| {
        let mut sum = 0i32;
        for (j, s) in seq.enumerate() {
            let sign = match s {
                Slot::Plus => 1,
                Slot::Minus => -1,
                Slot::AngleV1 | Slot::AngleV2 => {
                    if j == 0 {
                        return Ok(());
                    }
                    0
                }
            };
            sum += sign;
            let decays = match class.kind {
                EndpointKind::FiniteLimit => false,
                EndpointKind::PlusInfinity => sum < 0,
                EndpointKind::MinusInfinity => sum > 0,
            };
            if !decays {
                return Err(Error::DivergentTail(format!(
                    "[{}] does not converge at {end}",
                    spec.sign_string()
                )));
            }
        }
        Ok(())
    };
    if spec.lower == f64::NEG_INFINITY {
        partial_ok(&model.left, &mut slots.iter(), "-∞")?;
    }
    if spec.upper == f64::INFINITY {
        partial_ok(&model.right, &mut slots.iter().rev(), "+∞")?;
    }
    Ok(())
}

fn default_anchor(spec: &BracketSpec) -> Anchor {
    if spec.kind == BracketKind::AngleRight {
        Anchor::Upper
    } else {
        Anchor::Lower
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketValue {
    pub value: f64,
    pub error_estimate: f64,
}

fn engine_for(
    spec: &BracketSpec,
    model: &PotentialModel,
    points: Vec<f64>,
    extra: u32,
    cfg: &QuadratureConfig,
) -> Result<BracketEngine> {
    let req = EngineRequest {
        points,
        lower: spec.lower,
        upper: spec.upper,
        lower_len: spec.signs.len(),
        upper_len: spec.signs.len(),
        extra_bisections: extra,
    };
    BracketEngine::new(model, &req, cfg)
}

/// Value and an error estimate from uniform mesh refinement.
pub fn eval_bracket_with_error(
    spec: &BracketSpec,
    model: &PotentialModel,
    cfg: &QuadratureConfig,
) -> Result<BracketValue> {
    spec.validate(model)?;
    check_tails(spec, model)?;
    if spec.lower == spec.upper {
        return Ok(BracketValue {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    let anchor = default_anchor(spec);
    let mut slots = spec.slots();
    if anchor == Anchor::Upper {
        slots.reverse();
    }
    let run = |extra: u32| -> Result<f64> {
        let e = engine_for(spec, model, Vec::new(), extra, cfg)?;
        let t = e.table(anchor, &slots)?;
        Ok(match anchor {
            Anchor::Lower => t.last().unwrap()[NP - 1],
            Anchor::Upper => t[0][0],
        })
    };
    let mut prev = run(0)?;
    for extra in 1..=cfg.max_depth.min(6) {
        let next = run(extra)?;
        let err = (next - prev).abs();
        if err <= cfg.rel_tol * next.abs() + cfg.abs_tol {
            return Ok(BracketValue {
                value: next,
                error_estimate: err,
            });
        }
        prev = next;
    }
    Err(Error::ToleranceNotMet(format!(
        "[{}] did not settle under refinement",
        spec.sign_string()
    )))
}

pub fn eval_bracket(
    spec: &BracketSpec,
    model: &PotentialModel,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    eval_bracket_with_error(spec, model, cfg).map(|b| b.value)
}

/// The bracket with its free end moved over `grid`; the anchored end is
/// `upper` for angle-right brackets and `lower` otherwise.
pub fn cumulative_bracket(
    spec: &BracketSpec,
    model: &PotentialModel,
    grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    cumulative_bracket_anchored(spec, default_anchor(spec), model, grid, cfg)
}

pub fn cumulative_bracket_anchored(
    spec: &BracketSpec,
    anchor: Anchor,
    model: &PotentialModel,
    grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<Vec<f64>> {
    spec.validate(model)?;
    check_tails(spec, model)?;
    if grid
        .iter()
        .any(|&z| !(z >= spec.lower && z <= spec.upper) || !z.is_finite())
    {
        return Err(Error::InvalidArgument(
            "grid point outside the bracket limits".into(),
        ));
    }
    let e = engine_for(spec, model, grid.to_vec(), 0, cfg)?;
    let mut slots = spec.slots();
    if anchor == Anchor::Upper {
        slots.reverse();
    }
    let t = e.table(anchor, &slots)?;
    Ok(grid.iter().map(|&z| e.value_at(&t, z)).collect())
}
