//! Nonnegative reals carried as a binary mantissa and an integer exponent.
//!
//! Products over a hundred CPT entries routinely fall below the smallest
//! positive `f64`. A [`ScaledProb`] keeps the mantissa in `[0.5, 1)` and
//! folds the magnitude into an `i64` power of two, so multiplication and
//! comparison stay exact to the last bit of the mantissa regardless of scale.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul};

/// `mantissa * 2^exponent`, with `mantissa` in `[0.5, 1)` or exactly zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledProb {
    mantissa: f64,
    exponent: i64,
}

/// `2^exp` as an `f64`, flushing to zero below the subnormal range.
#[inline]
pub(crate) fn pow2(exp: i64) -> f64 {
    if exp < -1074 {
        0.0
    } else if exp > 1023 {
        f64::INFINITY
    } else {
        libm::ldexp(1.0, exp as i32)
    }
}

impl ScaledProb {
    pub const ZERO: ScaledProb = ScaledProb { mantissa: 0.0, exponent: 0 };
    pub const ONE: ScaledProb = ScaledProb { mantissa: 0.5, exponent: 1 };

    /// Builds from a finite, nonnegative `f64`.
    pub fn from_f64(value: f64) -> Self {
        debug_assert!(value.is_finite() && value >= 0.0, "bad probability {value}");
        Self::from_parts(value, 0)
    }

    /// Builds `value * 2^exponent`, normalizing the mantissa.
    pub fn from_parts(value: f64, exponent: i64) -> Self {
        if value == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = libm::frexp(value);
        ScaledProb { mantissa: m, exponent: exponent + e as i64 }
    }

    pub fn mantissa(self) -> f64 {
        self.mantissa
    }

    pub fn exponent(self) -> i64 {
        self.exponent
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == 0.0
    }

    /// Value as an `f64`; underflows to zero for tiny magnitudes.
    pub fn to_f64(self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            libm::ldexp(self.mantissa, self.exponent.clamp(-2000, 2000) as i32)
        }
    }

    /// Natural logarithm; `-inf` for zero.
    pub fn ln(self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.ln() + self.exponent as f64 * std::f64::consts::LN_2
        }
    }

    pub fn log2(self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mantissa.log2() + self.exponent as f64
        }
    }

    /// Multiplies by a nonnegative `f64`.
    pub fn scale(self, factor: f64) -> ScaledProb {
        self * ScaledProb::from_f64(factor)
    }

    /// `self / other` as an `f64`; `other` must be nonzero.
    pub fn ratio(self, other: ScaledProb) -> f64 {
        debug_assert!(!other.is_zero());
        if self.is_zero() {
            return 0.0;
        }
        (self.mantissa / other.mantissa) * pow2(self.exponent - other.exponent)
    }

    /// Relative closeness: `|a - b| <= tol * max(a, b)`. Two zeros are close.
    pub fn rel_eq(self, other: ScaledProb, tol: f64) -> bool {
        let (hi, lo) = if self >= other { (self, other) } else { (other, self) };
        if hi.is_zero() {
            return true;
        }
        1.0 - lo.ratio(hi) <= tol
    }
}

impl Mul for ScaledProb {
    type Output = ScaledProb;

    #[inline]
    fn mul(self, other: ScaledProb) -> ScaledProb {
        if self.is_zero() || other.is_zero() {
            return ScaledProb::ZERO;
        }
        let mut m = self.mantissa * other.mantissa;
        let mut e = self.exponent + other.exponent;
        // product of two mantissas lies in [0.25, 1)
        if m < 0.5 {
            m *= 2.0;
            e -= 1;
        }
        ScaledProb { mantissa: m, exponent: e }
    }
}

impl Add for ScaledProb {
    type Output = ScaledProb;

    #[inline]
    fn add(self, other: ScaledProb) -> ScaledProb {
        if other.is_zero() {
            return self;
        }
        if self.is_zero() {
            return other;
        }
        let (hi, lo) = if self.exponent >= other.exponent { (self, other) } else { (other, self) };
        let shift = lo.exponent - hi.exponent;
        let mut m = if shift == 0 { hi.mantissa + lo.mantissa } else { hi.mantissa + lo.mantissa * pow2(shift) };
        let mut e = hi.exponent;
        // sum of two mantissas lies in [0.5, 2)
        if m >= 1.0 {
            m *= 0.5;
            e += 1;
        }
        ScaledProb { mantissa: m, exponent: e }
    }
}

impl Default for ScaledProb {
    fn default() -> Self {
        Self::ZERO
    }
}

impl PartialOrd for ScaledProb {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self.exponent.cmp(&other.exponent).then(self.mantissa.partial_cmp(&other.mantissa)?),
        })
    }
}

impl fmt::Display for ScaledProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_f64();
        if v == 0.0 && !self.is_zero() {
            write!(f, "{}*2^{}", self.mantissa, self.exponent)
        } else {
            write!(f, "{v}")
        }
    }
}

/// `|a - b| <= tol * max(|a|, |b|)` for plain floats.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    let scale = a.abs().max(b.abs());
    scale == 0.0 || (a - b).abs() <= tol * scale
}
