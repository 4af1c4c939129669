//! Term tables for the coefficients `aₙ`, `bₙ`, `b̃ₙ` and their evaluation.
//!
//! Every coefficient is a rational combination of brackets. Right-side
//! coefficients integrate from `-∞` up to `x`; left-side ones from `x` to `+∞`
//! with the sign sequences reversed.

use num_complex::Complex64;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::brackets::{
    sign_string, Anchor, BracketEngine, BracketKind, BracketSpec, EngineRequest, QuadratureConfig,
    Slot, Table,
};
use crate::error::{Error, Result};
use crate::laurent::LaurentSeries;
use crate::potential::PotentialModel;

/// Default cap on generated orders.
pub const DEFAULT_MAX_ORDER: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Right,
    Left,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
    Btilde,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointFactor {
    ExpPlusV,
    ExpMinusV,
}

impl PointFactor {
    pub fn eval(self, v: f64) -> f64 {
        match self {
            PointFactor::ExpPlusV => v.exp(),
            PointFactor::ExpMinusV => (-v).exp(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Rational64,
    /// `Λ` in the prefactor `e^{-ΛV₁}` (right) or `e^{-ΛV₂}` (left).
    pub limit_exponent: i32,
    pub kind: BracketKind,
    /// Written order; empty for the constant bracket of `a₀`.
    pub signs: Vec<i8>,
}

impl Term {
    pub fn sign_string(&self) -> String {
        sign_string(&self.signs)
    }

    /// The bracket with its free end at `x`.
    pub fn spec_at(&self, side: Side, x: f64) -> BracketSpec {
        match side {
            Side::Right => BracketSpec::new(self.kind, self.signs.clone(), f64::NEG_INFINITY, x),
            Side::Left => BracketSpec::new(self.kind, self.signs.clone(), x, f64::INFINITY),
        }
    }

    pub fn coeff_f64(&self) -> f64 {
        *self.coeff.numer() as f64 / *self.coeff.denom() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermTable {
    pub n: usize,
    pub side: Side,
    pub family: Family,
    pub terms: Vec<Term>,
    pub point_factor: PointFactor,
}

impl TermTable {
    /// Longest bracket in the table.
    pub fn max_len(&self) -> usize {
        self.terms.iter().map(|t| t.signs.len()).max().unwrap_or(0)
    }

    /// Structural mirror: reverse sequences and swap angle sides.
    pub fn mirrored(&self) -> Self {
        let side = match self.side {
            Side::Right => Side::Left,
            Side::Left => Side::Right,
        };
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff,
                limit_exponent: t.limit_exponent,
                kind: match t.kind {
                    BracketKind::Plain => BracketKind::Plain,
                    BracketKind::AngleLeft => BracketKind::AngleRight,
                    BracketKind::AngleRight => BracketKind::AngleLeft,
                },
                signs: t.signs.iter().rev().copied().collect(),
            })
            .collect();
        Self { n: self.n, side, family: self.family, terms, point_factor: self.point_factor }
    }
}

/// `∏_j [(m - Σ_{i≤j} σᵢ)(-σⱼ)]`, empty product 1.
pub fn p_coeff(signs: &[i8], m: i64) -> i64 {
    let mut partial = 0i64;
    signs.iter().fold(1i64, |acc, &s| {
        partial += s as i64;
        acc * (m - partial) * (-(s as i64))
    })
}

fn sequences(len: usize) -> impl Iterator<Item = Vec<i8>> {
    // lexicographic with + before -
    (0..1u64 << len).map(move |bits| {
        (0..len)
            .map(|j| if bits >> (len - 1 - j) & 1 == 0 { 1 } else { -1 })
            .collect()
    })
}

fn orient(side: Side, written: Vec<i8>) -> Vec<i8> {
    match side {
        Side::Right => written,
        Side::Left => written.into_iter().rev().collect(),
    }
}

/// Terms of `aₙ` on the given side.
pub fn a_terms(n: usize, side: Side) -> TermTable {
    let mut terms = Vec::new();
    if n == 0 {
        terms.push(Term {
            coeff: Rational64::new(-1, 2),
            limit_exponent: 1,
            kind: BracketKind::Plain,
            signs: Vec::new(),
        });
    } else {
        let kind = match side {
            Side::Right => BracketKind::AngleLeft,
            Side::Left => BracketKind::AngleRight,
        };
        for sigma in sequences(n - 1) {
            let lambda: i64 = sigma.iter().map(|&s| s as i64).sum();
            let p = p_coeff(&sigma, lambda + 1);
            let parity = if lambda.rem_euclid(2) == 0 { 1 } else { -1 };
            let coeff = Rational64::new(parity * (lambda + 1) * p, 2);
            if coeff == Rational64::from_integer(0) {
                continue;
            }
            let mut written = vec![-1];
            written.extend(&sigma);
            terms.push(Term {
                coeff,
                limit_exponent: lambda as i32,
                kind,
                signs: orient(side, written),
            });
        }
    }
    TermTable { n, side, family: Family::A, terms, point_factor: PointFactor::ExpPlusV }
}

fn balanced_terms(n: usize, side: Side, flip: bool) -> Vec<Term> {
    if n % 2 == 0 {
        return Vec::new();
    }
    let lead: i8 = if flip { 1 } else { -1 };
    let mut terms = Vec::new();
    for sigma in sequences(n - 1) {
        if sigma.iter().map(|&s| s as i32).sum::<i32>() != 0 {
            continue;
        }
        let p = p_coeff(&sigma, 1);
        if p == 0 {
            continue;
        }
        let mut written = vec![lead];
        written.extend(sigma.iter().map(|&s| if flip { -s } else { s }));
        terms.push(Term {
            coeff: Rational64::new(p, 2),
            limit_exponent: 0,
            kind: BracketKind::Plain,
            signs: orient(side, written),
        });
    }
    terms
}

/// Terms of `bₙ`; empty for even `n`.
pub fn b_terms(n: usize, side: Side) -> TermTable {
    TermTable {
        n,
        side,
        family: Family::B,
        terms: balanced_terms(n, side, false),
        point_factor: PointFactor::ExpPlusV,
    }
}

/// Terms of `b̃ₙ`: `bₙ` with every sign flipped, point factor `e^{-V(x)}`.
pub fn btilde_terms(n: usize, side: Side) -> TermTable {
    TermTable {
        n,
        side,
        family: Family::Btilde,
        terms: balanced_terms(n, side, true),
        point_factor: PointFactor::ExpMinusV,
    }
}

pub fn terms(family: Family, n: usize, side: Side) -> TermTable {
    match family {
        Family::A => a_terms(n, side),
        Family::B => b_terms(n, side),
        Family::Btilde => btilde_terms(n, side),
    }
}

/// `[4(b̃₁ t + b̃₃ t³ + …)]^{-1} = γ₋₁ t^{-1} + γ₁ t + …`.
pub fn gamma_series(btilde: &LaurentSeries) -> Result<LaurentSeries> {
    btilde.scale(Complex64::new(4.0, 0.0)).invert()
}

fn limit_for(model: &PotentialModel, side: Side) -> Option<f64> {
    match side {
        Side::Right => model.v1(),
        Side::Left => model.v2(),
    }
}

fn slots_for(term: &Term, side: Side) -> Vec<Slot> {
    let mut slots: Vec<Slot> = term.signs.iter().map(|&s| Slot::sign(s)).collect();
    match term.kind {
        BracketKind::Plain => {}
        BracketKind::AngleLeft => slots[0] = Slot::AngleV1,
        BracketKind::AngleRight => *slots.last_mut().unwrap() = Slot::AngleV2,
    }
    if side == Side::Left {
        slots.reverse();
    }
    slots
}

/// Values of the coefficient function at every engine node.
pub fn coeff_on_nodes(
    table: &TermTable,
    engine: &BracketEngine,
    model: &PotentialModel,
) -> Result<Table> {
    let anchor = match table.side {
        Side::Right => Anchor::Lower,
        Side::Left => Anchor::Upper,
    };
    let mut acc: Table = vec![[0.0; crate::brackets::CHEB_DEGREE + 1]; engine.panel_count()];
    for term in &table.terms {
        let mut c = term.coeff_f64();
        if term.limit_exponent != 0 {
            let l = limit_for(model, table.side).ok_or_else(|| {
                Error::InvalidSpec(format!(
                    "term needs a finite limit on the {:?} side",
                    table.side
                ))
            })?;
            c *= (-(term.limit_exponent as f64) * l).exp();
        }
        if term.signs.is_empty() {
            acc.iter_mut().flatten().for_each(|a| *a += c);
            continue;
        }
        let t = engine.table(anchor, &slots_for(term, table.side))?;
        for (a, b) in acc.iter_mut().zip(t.iter()) {
            for (ai, bi) in a.iter_mut().zip(b) {
                *ai += c * bi;
            }
        }
    }
    let pf = engine.map_v(|v| table.point_factor.eval(v));
    for (a, p) in acc.iter_mut().zip(&pf) {
        for (ai, pi) in a.iter_mut().zip(p) {
            *ai *= pi;
        }
    }
    Ok(acc)
}

/// Coefficient value at `x`.
pub fn eval_coeff(
    table: &TermTable,
    model: &PotentialModel,
    x: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let len = table.max_len().max(1);
    let req = match table.side {
        Side::Right => EngineRequest {
            points: vec![x],
            lower: f64::NEG_INFINITY,
            upper: x,
            lower_len: len,
            upper_len: 1,
            extra_bisections: 0,
        },
        Side::Left => EngineRequest {
            points: vec![x],
            lower: x,
            upper: f64::INFINITY,
            lower_len: 1,
            upper_len: len,
            extra_bisections: 0,
        },
    };
    let engine = BracketEngine::new(model, &req, cfg)?;
    let vals = coeff_on_nodes(table, &engine, model)?;
    Ok(engine.value_at(&vals, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brackets::parse_signs;
    use crate::potential::catalog_with;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    fn listing(t: &TermTable) -> Vec<(Rational64, i32, String)> {
        let mut v: Vec<_> =
            t.terms.iter().map(|t| (t.coeff, t.limit_exponent, t.sign_string())).collect();
        v.sort_by(|a, b| a.2.cmp(&b.2));
        v
    }

    #[test]
    fn p_coeff_examples() {
        assert_eq!(p_coeff(&[], 1), 1);
        assert_eq!(p_coeff(&[-1], 1), 2);
        assert_eq!(p_coeff(&[1], 1), 0);
    }

    #[test]
    fn p_coeff_vanishes_when_m_is_reached() {
        for len in 0..8 {
            for s in sequences(len) {
                let lambda: i64 = s.iter().map(|&x| x as i64).sum();
                let max_partial = s
                    .iter()
                    .scan(0i64, |acc, &x| {
                        *acc += x as i64;
                        Some(*acc)
                    })
                    .max()
                    .unwrap_or(i64::MIN);
                let p = p_coeff(&s, lambda + 1);
                if max_partial >= lambda + 1 {
                    assert_eq!(p, 0);
                }
            }
        }
    }

    #[test]
    fn low_order_a_terms() {
        let a0 = a_terms(0, Side::Right);
        assert_eq!(listing(&a0), vec![(Rational64::new(-1, 2), 1, String::new())]);
        let a1 = a_terms(1, Side::Right);
        assert_eq!(listing(&a1), vec![(Rational64::new(1, 2), 0, "-".into())]);
        assert_eq!(a1.terms[0].kind, BracketKind::AngleLeft);
        let a3 = a_terms(3, Side::Right);
        assert_eq!(listing(&a3), vec![(r(3), 2, "-++".into()), (r(-1), 0, "--+".into())]);
    }

    #[test]
    fn b_and_btilde_low_orders() {
        assert_eq!(listing(&b_terms(3, Side::Right)), vec![(r(-1), 0, "--+".into())]);
        assert_eq!(
            listing(&b_terms(5, Side::Right)),
            vec![(r(2), 0, "--+-+".into()), (r(6), 0, "---++".into())]
        );
        assert_eq!(listing(&btilde_terms(1, Side::Right)), vec![(Rational64::new(1, 2), 0, "+".into())]);
        assert_eq!(listing(&btilde_terms(3, Side::Right)), vec![(r(-1), 0, "++-".into())]);
        assert_eq!(
            listing(&btilde_terms(5, Side::Right)),
            vec![(r(6), 0, "+++--".into()), (r(2), 0, "++-+-".into())]
        );
        assert!(b_terms(4, Side::Right).terms.is_empty());
        assert_eq!(btilde_terms(3, Side::Right).point_factor, PointFactor::ExpMinusV);
    }

    #[test]
    fn raw_sequence_counts() {
        for n in 1..=9usize {
            assert_eq!(sequences(n - 1).count(), 1 << (n - 1));
        }
        let binom = |n: u64, k: u64| (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1));
        for n in [1usize, 3, 5, 7, 9, 11] {
            let balanced = sequences(n - 1).filter(|s| s.iter().map(|&x| x as i32).sum::<i32>() == 0).count();
            assert_eq!(balanced as u64, binom(n as u64 - 1, (n as u64 - 1) / 2));
        }
    }

    #[test]
    fn b_table_is_the_large_limit_of_a_table() {
        for n in [1usize, 3, 5, 7, 9] {
            let a = a_terms(n, Side::Right);
            let mut kept: Vec<_> = a
                .terms
                .iter()
                .filter(|t| t.limit_exponent == 0)
                .map(|t| (t.coeff, t.sign_string()))
                .collect();
            kept.sort();
            let mut b: Vec<_> =
                b_terms(n, Side::Right).terms.iter().map(|t| (t.coeff, t.sign_string())).collect();
            b.sort();
            assert_eq!(kept, b, "n = {n}");
            // every other term carries a decaying e^{-ΛV₁}
            assert!(a.terms.iter().all(|t| t.limit_exponent >= 0));
        }
    }

    #[test]
    fn left_tables_mirror_right_tables() {
        for n in 0..=7 {
            for fam in [Family::A, Family::B, Family::Btilde] {
                let right = terms(fam, n, Side::Right);
                let left = terms(fam, n, Side::Left);
                assert_eq!(right.mirrored(), left, "{fam:?} {n}");
            }
        }
    }

    #[test]
    fn gamma_series_examples() {
        let s = LaurentSeries::from_real(1, &[0.25, 0.0, 0.0, 0.0, 0.0]);
        let g = gamma_series(&s).unwrap();
        assert_eq!(g.min_order(), -1);
        assert!((g.re(-1) - 1.0).abs() < 1e-15);
        for n in 0..=3 {
            assert!(g.re(n).abs() < 1e-15);
        }
        let s = LaurentSeries::from_real(1, &[0.5, 0.0, -1.0, 0.0, 0.0]);
        let g = gamma_series(&s).unwrap();
        for (n, want) in [(-1, 0.5), (0, 0.0), (1, 1.0), (2, 0.0), (3, 2.0)] {
            assert!((g.re(n) - want).abs() < 1e-14, "γ_{n} = {}", g.re(n));
        }
        let zero = LaurentSeries::from_real(1, &[0.0, 0.0, 1.0]);
        assert!(matches!(gamma_series(&zero), Err(Error::ZeroLeadingCoefficient(_))));
    }

    #[test]
    fn a0_on_exponential_potential() {
        let m = catalog_with("exponential", &[]).unwrap();
        let cfg = QuadratureConfig::default();
        for x in [-1.0, 0.0, 0.5] {
            let v = eval_coeff(&a_terms(0, Side::Right), &m, x, &cfg).unwrap();
            let want = -0.5 * f64::exp(f64::exp(x));
            assert!((v - want).abs() < 1e-14 * want.abs());
        }
    }

    #[test]
    fn b1_on_parabolic_potential() {
        let m = catalog_with("parabolic", &[]).unwrap();
        let cfg = QuadratureConfig::default();
        for x in [0.0, 0.7, 1.2] {
            let r = eval_coeff(&b_terms(1, Side::Right), &m, x, &cfg).unwrap();
            let l = eval_coeff(&b_terms(1, Side::Left), &m, x, &cfg).unwrap();
            let want = std::f64::consts::PI.sqrt() / 2.0 * (x * x).exp();
            assert!(((r + l) - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn b1_on_logcosh_potential() {
        let m = catalog_with("logcosh", &[]).unwrap();
        let cfg = QuadratureConfig::default();
        for x in [-0.5, 0.0, 1.0] {
            let r = eval_coeff(&b_terms(1, Side::Right), &m, x, &cfg).unwrap();
            let l = eval_coeff(&b_terms(1, Side::Left), &m, x, &cfg).unwrap();
            let want = f64::cosh(x).powi(2);
            assert!(((r + l) - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn parse_round_trip() {
        let t = b_terms(7, Side::Left);
        for term in &t.terms {
            assert_eq!(parse_signs(&term.sign_string()).unwrap(), term.signs);
            assert_eq!(*term.signs.last().unwrap(), -1);
        }
    }
}
