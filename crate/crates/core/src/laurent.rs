//! Truncated Laurent series in the formal variable `t = ik`.
//!
//! A series stores the coefficients of `t^min_order ..= t^max_order`. The
//! last stored coefficient is the last *reliable* one: every operation
//! propagates truncation so that no coefficient beyond the reliable order of
//! its inputs is ever produced. Exact polynomials are written with explicit
//! trailing zeros up to the order at which they should be trusted.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude below which a leading coefficient counts as zero.
pub const LEADING_TOL: f64 = 1e-13;

/// Sign choice for [`LaurentSeries::sqrt`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaurentSeries {
    min_order: i32,
    coeffs: Vec<Complex64>,
}

impl LaurentSeries {
    /// Series with the given leading order and coefficients.
    ///
    /// # Panics
    /// If `coeffs` is empty.
    pub fn new(min_order: i32, coeffs: Vec<Complex64>) -> Self {
        assert!(
            !coeffs.is_empty(),
            "a Laurent series needs at least one coefficient"
        );
        Self { min_order, coeffs }
    }

    pub fn from_real(min_order: i32, coeffs: &[f64]) -> Self {
        Self::new(
            min_order,
            coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        )
    }

    /// `c` known through order 0.
    pub fn constant(c: f64) -> Self {
        Self::from_real(0, &[c])
    }

    /// `c · t^order`, padded with zeros through `max_order`.
    pub fn monomial(order: i32, c: Complex64, max_order: i32) -> Self {
        assert!(max_order >= order);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); (max_order - order + 1) as usize];
        coeffs[0] = c;
        Self::new(order, coeffs)
    }

    pub fn min_order(&self) -> i32 {
        self.min_order
    }

    pub fn max_order(&self) -> i32 {
        self.min_order + self.coeffs.len() as i32 - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Coefficient of `t^order`; zero below `min_order`, `None` past the
    /// reliable order.
    pub fn coeff(&self, order: i32) -> Option<Complex64> {
        if order > self.max_order() {
            None
        } else if order < self.min_order {
            Some(Complex64::new(0.0, 0.0))
        } else {
            Some(self.coeffs[(order - self.min_order) as usize])
        }
    }

    /// Real part of `t^order`, zero if the order is out of range.
    pub fn re(&self, order: i32) -> f64 {
        self.coeff(order).map_or(0.0, |c| c.re)
    }

    /// Drop coefficients beyond `max_order`.
    pub fn truncate(&self, max_order: i32) -> Self {
        if max_order >= self.max_order() {
            return self.clone();
        }
        assert!(
            max_order >= self.min_order,
            "truncation would empty the series"
        );
        let len = (max_order - self.min_order + 1) as usize;
        Self::new(self.min_order, self.coeffs[..len].to_vec())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.min_order, self.coeffs.iter().map(|&a| a * c).collect())
    }

    /// Multiply by `t^shift`.
    pub fn shift(&self, shift: i32) -> Self {
        Self::new(self.min_order + shift, self.coeffs.clone())
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let lo = self.min_order.min(other.min_order);
        let hi = self.max_order().min(other.max_order());
        let coeffs = (lo..=hi)
            .map(|n| self.coeff(n).unwrap() + other.coeff(n).unwrap())
            .collect();
        Self::new(lo, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Cauchy product truncated at the order both factors support.
    pub fn mul(&self, other: &Self) -> Self {
        let lo = self.min_order + other.min_order;
        let hi = (self.max_order() + other.min_order).min(other.max_order() + self.min_order);
        let len = (hi - lo + 1) as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); len];
        for (j, c) in coeffs.iter_mut().enumerate() {
            for i in 0..=j {
                if let (Some(a), Some(b)) = (self.coeffs.get(i), other.coeffs.get(j - i)) {
                    *c += a * b;
                }
            }
        }
        Self::new(lo, coeffs)
    }

    fn check_leading(&self) -> Result<Complex64> {
        let c0 = self.leading();
        if c0.norm() < LEADING_TOL {
            Err(Error::ZeroLeadingCoefficient(c0.norm()))
        } else {
            Ok(c0)
        }
    }

    /// Reciprocal series. Keeps the relative precision of the input.
    pub fn invert(&self) -> Result<Self> {
        let c0 = self.check_leading()?;
        let a = &self.coeffs;
        let mut d = Vec::with_capacity(a.len());
        d.push(c0.inv());
        for j in 1..a.len() {
            let s: Complex64 = (1..=j).map(|i| a[i] * d[j - i]).sum();
            d.push(-s / c0);
        }
        Ok(Self::new(-self.min_order, d))
    }

    /// Square root; `branch` fixes the sign of the leading coefficient
    /// relative to the principal root.
    pub fn sqrt(&self, branch: Branch) -> Result<Self> {
        if self.min_order % 2 != 0 {
            return Err(Error::OddLeadingOrder(self.min_order));
        }
        let c0 = self.check_leading()?;
        let a = &self.coeffs;
        let e0 = c0.sqrt() * branch.sign();
        let mut e = Vec::with_capacity(a.len());
        e.push(e0);
        for j in 1..a.len() {
            let s: Complex64 = (1..j).map(|i| e[i] * e[j - i]).sum();
            e.push((a[j] - s) / (e0 * 2.0));
        }
        Ok(Self::new(self.min_order / 2, e))
    }

    /// Term-by-term exponential of a series with no negative powers.
    pub fn exp(&self) -> Result<Self> {
        if self.min_order < 0 {
            return Err(Error::NegativeOrderExponent(self.min_order));
        }
        let a: Vec<Complex64> = (0..=self.max_order())
            .map(|n| self.coeff(n).unwrap())
            .collect();
        let mut b = Vec::with_capacity(a.len());
        b.push(a[0].exp());
        for j in 1..a.len() {
            let s: Complex64 = (1..=j).map(|i| a[i] * b[j - i] * i as f64).sum();
            b.push(s / j as f64);
        }
        Ok(Self::new(0, b))
    }

    /// Logarithm of `self / t^min_order`, principal branch for the constant.
    pub fn log(&self) -> Result<Self> {
        let c0 = self.check_leading()?;
        let a = &self.coeffs;
        let mut b = Vec::with_capacity(a.len());
        b.push(c0.ln());
        for j in 1..a.len() {
            let s: Complex64 = (1..j).map(|i| b[i] * a[j - i] * i as f64).sum();
            b.push((a[j] - s / j as f64) / c0);
        }
        Ok(Self::new(0, b))
    }

    /// Evaluate the truncated sum at `t`.
    pub fn eval(&self, t: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * t.powi(self.min_order + j as i32))
            .sum()
    }

    /// Largest imaginary part among the coefficients.
    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().map(|c| c.im.abs()).fold(0.0, f64::max)
    }
}

impl fmt::Display for LaurentSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, c) in self.coeffs.iter().enumerate() {
            if j > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})(ik)^{}", self.min_order + j as i32)?;
        }
        write!(f, " + O((ik)^{})", self.max_order() + 1)
    }
}
