//! Truncated power series in one variable with `f64` coefficients.
//!
//! A [`PowerSeries`] holds the coefficients `c[0] ..= c[K]` of a polynomial
//! jet of truncation order `K`. Arithmetic is coefficient-wise (Cauchy
//! product for multiplication) and always stays at a fixed order: combining
//! two series of different orders is an error rather than a silent
//! truncation. Reciprocal and square root are computed by the classical
//! coefficient recurrences and fail loudly — instead of returning non-finite
//! garbage — when the constant term is zero, negative (for the square root),
//! or so small that the recurrence overflows working precision. Steep series
//! whose tail coefficients dwarf the constant term are legitimate (they just
//! have a small convergence radius) and are handled normally.

use crate::error::{Error, Result};

/// Degeneracy floor for reciprocal and square root: the constant term must
/// exceed `SINGULAR_FLOOR * max(1, max_k |c_k|)` in magnitude, which rejects
/// exactly-zero constant terms and inputs guaranteed to overflow.
pub const SINGULAR_FLOOR: f64 = 1e-300;

/// A power series truncated at a fixed order `K`, stored as `K + 1`
/// coefficients in increasing order of degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries {
    coeffs: Vec<f64>,
}

impl PowerSeries {
    /// Wraps a coefficient vector. The vector must be non-empty (its length
    /// is `K + 1`) and every entry must be finite.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "a power series needs at least one coefficient".into(),
            ));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite series coefficient {bad}"
            )));
        }
        Ok(Self { coeffs })
    }

    /// The zero series at truncation order `order`.
    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![0.0; order + 1],
        }
    }

    /// The constant series `c` at truncation order `order`.
    pub fn constant(c: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        Self { coeffs }
    }

    /// The multiplicative identity at truncation order `order`.
    pub fn one(order: usize) -> Self {
        Self::constant(1.0, order)
    }

    /// Truncation order `K` (the highest retained degree).
    pub fn truncation_order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// All coefficients, degree 0 upward.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of degree `k` (zero beyond the truncation order).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    fn check_order(&self, other: &Self) -> Result<()> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(Error::OrderMismatch {
                left: self.truncation_order(),
                right: other.truncation_order(),
            });
        }
        Ok(())
    }

    /// Coefficient-wise sum. Errors if the truncation orders differ.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Coefficient-wise difference. Errors if the truncation orders differ.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        Ok(Self {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// Cauchy product truncated at the shared order. Errors if the
    /// truncation orders differ.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_order(other)?;
        let n = self.coeffs.len();
        let mut coeffs = vec![0.0; n];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let mut acc = 0.0;
            for i in 0..=k {
                acc += self.coeffs[i] * other.coeffs[k - i];
            }
            *c = acc;
        }
        Ok(Self { coeffs })
    }

    /// Multiplies every coefficient by the scalar `s`.
    pub fn scale(&self, s: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Adds a scalar to the constant term.
    pub fn add_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    fn singular_floor(&self) -> f64 {
        SINGULAR_FLOOR
            * self
                .coeffs
                .iter()
                .fold(1.0_f64, |m, c| m.max(c.abs()))
    }

    fn check_finite(coeffs: Vec<f64>, leading: f64, floor: f64) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NearSingularSeries { leading, floor });
        }
        Ok(Self { coeffs })
    }

    /// Multiplicative inverse by the long-division recurrence
    /// `r0 = 1/c0`, `r_k = -(sum_{i=1..k} c_i r_{k-i}) / c0`.
    ///
    /// Errors with a near-singular report when the constant term is zero or
    /// so small that the recurrence leaves working precision.
    pub fn recip(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        let floor = self.singular_floor();
        if !(c0.abs() > floor) {
            return Err(Error::NearSingularSeries {
                leading: c0,
                floor,
            });
        }
        let n = self.coeffs.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / c0;
        for k in 1..n {
            let mut acc = 0.0;
            for i in 1..=k {
                acc += self.coeffs[i] * r[k - i];
            }
            r[k] = -acc / c0;
        }
        Self::check_finite(r, c0, floor)
    }

    /// Square root with the positive branch, by the recurrence
    /// `s0 = sqrt(c0)`, `s_k = (c_k - sum_{i=1..k-1} s_i s_{k-i}) / (2 s0)`.
    ///
    /// The constant term must be positive; a zero, negative, or
    /// overflow-inducing constant term is reported as near-singular.
    pub fn sqrt(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        let floor = self.singular_floor();
        if !(c0 > floor) {
            return Err(Error::NearSingularSeries {
                leading: c0,
                floor,
            });
        }
        let n = self.coeffs.len();
        let mut s = vec![0.0; n];
        s[0] = c0.sqrt();
        let inv = 1.0 / (2.0 * s[0]);
        for k in 1..n {
            let mut acc = 0.0;
            for i in 1..k {
                acc += s[i] * s[k - i];
            }
            s[k] = (self.coeffs[k] - acc) * inv;
        }
        Self::check_finite(s, c0, floor)
    }

    /// Term-by-term derivative. The result has truncation order `K - 1`
    /// (or stays the constant zero series when `K = 0`).
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero(0);
        }
        Self {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        }
    }

    /// Evaluates the truncated polynomial at offset `dt` by Horner's rule.
    pub fn eval(&self, dt: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * dt + c)
    }
}
