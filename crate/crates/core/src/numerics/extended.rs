//! Floating-point values with a 64-bit binary exponent.
//!
//! Order-dependent weights carry factorials such as `(σℓ)!` that leave the
//! `f64` range long before the dimensions we care about. [`ExtendedReal`]
//! keeps a normalized `f64` mantissa in `[1, 2)` next to an `i64` exponent so
//! those products and sums can be formed directly.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub};
use std::str::FromStr;

use super::NumericsError;

const EXP_ONE: u64 = 1023u64 << 52;

/// `sign · mantissa · 2^exponent` with `|mantissa| ∈ [1, 2)`, or exact zero.
#[derive(Clone, Copy, Debug)]
pub struct ExtendedReal {
    mant: f64,
    exp: i64,
}

/// `2^e` for `e` inside the normal `f64` exponent range.
#[inline]
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Split a finite nonzero `f64` into a mantissa in `[1,2)` (signed) and exponent.
#[inline]
fn split(x: f64) -> (f64, i64) {
    let bits = x.to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal: rescale into the normal range first
        let (m, e) = split(x * pow2(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ffu64 << 52)) | EXP_ONE);
    (m, raw - 1023)
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal { mant: 0.0, exp: 0 };
    pub const ONE: ExtendedReal = ExtendedReal { mant: 1.0, exp: 0 };

    /// Builds `x · 2^exp`, normalizing the mantissa.
    pub fn from_parts(x: f64, exp: i64) -> Self {
        assert!(x.is_finite(), "ExtendedReal from non-finite value {x}");
        if x == 0.0 {
            return Self::ZERO;
        }
        let (m, e) = split(x);
        ExtendedReal { mant: m, exp: e + exp }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::from_parts(x, 0)
    }

    /// `2^e` exactly.
    pub fn exp2_int(e: i64) -> Self {
        ExtendedReal { mant: 1.0, exp: e }
    }

    /// `2^x` for real `x`, well beyond the `f64` range.
    pub fn exp2(x: f64) -> Self {
        assert!(x.is_finite());
        let fl = x.floor();
        Self::from_parts((x - fl).exp2(), fl as i64)
    }

    /// `e^x` for real `x`.
    pub fn exp(x: f64) -> Self {
        Self::exp2(x * std::f64::consts::LOG2_E)
    }

    /// `n!` computed by repeated multiplication.
    pub fn factorial(n: u64) -> Self {
        let mut acc = Self::ONE;
        for k in 2..=n {
            acc *= Self::from_f64(k as f64);
        }
        acc
    }

    #[inline]
    pub fn mantissa(&self) -> f64 {
        self.mant
    }

    #[inline]
    pub fn exponent(&self) -> i64 {
        self.exp
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.mant == 0.0
    }

    #[inline]
    pub fn is_sign_negative(&self) -> bool {
        self.mant < 0.0
    }

    pub fn abs(self) -> Self {
        ExtendedReal { mant: self.mant.abs(), exp: self.exp }
    }

    /// `log2 |x|`; `-inf` for zero.
    pub fn log2(&self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.mant.abs().log2() + self.exp as f64
    }

    pub fn ln(&self) -> f64 {
        self.log2() * std::f64::consts::LN_2
    }

    /// `x^p` for `x ≥ 0`.
    pub fn powf(self, p: f64) -> Self {
        assert!(!self.is_sign_negative(), "powf of negative ExtendedReal");
        if self.is_zero() {
            return if p == 0.0 { Self::ONE } else { Self::ZERO };
        }
        // split the integer exponent so that most of it stays exact
        let ip = p.trunc();
        if ip == p && p.abs() < 64.0 {
            return self.powi(p as i32);
        }
        Self::exp2(self.log2() * p)
    }

    pub fn powi(self, mut k: i32) -> Self {
        let mut base = self;
        if k < 0 {
            base = Self::ONE / base;
            k = -k;
        }
        let mut acc = Self::ONE;
        while k > 0 {
            if k & 1 == 1 {
                acc *= base;
            }
            base *= base;
            k >>= 1;
        }
        acc
    }

    pub fn sqrt(self) -> Self {
        assert!(!self.is_sign_negative(), "sqrt of negative ExtendedReal");
        if self.is_zero() {
            return self;
        }
        if self.exp % 2 == 0 {
            Self::from_parts(self.mant.sqrt(), self.exp / 2)
        } else {
            Self::from_parts((2.0 * self.mant).sqrt(), (self.exp - 1).div_euclid(2))
        }
    }

    /// Converts to `f64`, failing when the magnitude leaves the `f64` range.
    pub fn to_f64(&self) -> Result<f64, NumericsError> {
        if self.is_zero() {
            return Ok(0.0);
        }
        if self.exp > 1023 || self.exp < -1074 {
            return Err(NumericsError::OutOfRange { log2: self.log2() });
        }
        Ok(self.to_f64_lossy())
    }

    /// Converts to `f64`, saturating to `±inf` or `0`.
    pub fn to_f64_lossy(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        if self.exp > 1023 {
            return self.mant.signum() * f64::INFINITY;
        }
        if self.exp < -1074 {
            return 0.0;
        }
        if self.exp >= -1022 {
            self.mant * pow2(self.exp)
        } else {
            self.mant * pow2(self.exp + 64) * pow2(-64)
        }
    }

    fn add_impl(self, rhs: Self) -> Self {
        if rhs.is_zero() {
            return self;
        }
        if self.is_zero() {
            return rhs;
        }
        let (big, small) = if self.exp >= rhs.exp { (self, rhs) } else { (rhs, self) };
        let d = big.exp - small.exp;
        if d > 60 {
            return big;
        }
        let sum = big.mant + small.mant * pow2(-d);
        if sum == 0.0 {
            return Self::ZERO;
        }
        let a = sum.abs();
        if (1.0..2.0).contains(&a) {
            return ExtendedReal { mant: sum, exp: big.exp };
        }
        Self::from_parts(sum, big.exp)
    }
}

impl Default for ExtendedReal {
    fn default() -> Self {
        Self::ZERO
    }
}

impl From<f64> for ExtendedReal {
    fn from(x: f64) -> Self {
        Self::from_f64(x)
    }
}

impl Mul for ExtendedReal {
    type Output = ExtendedReal;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let m = self.mant * rhs.mant;
        if m == 0.0 {
            return Self::ZERO;
        }
        let e = self.exp + rhs.exp;
        if m.abs() >= 2.0 {
            ExtendedReal { mant: m * 0.5, exp: e + 1 }
        } else {
            ExtendedReal { mant: m, exp: e }
        }
    }
}

impl Mul<f64> for ExtendedReal {
    type Output = ExtendedReal;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        if self.is_zero() || rhs == 0.0 {
            return Self::ZERO;
        }
        Self::from_parts(self.mant * rhs, self.exp)
    }
}

impl MulAssign for ExtendedReal {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Div for ExtendedReal {
    type Output = ExtendedReal;
    fn div(self, rhs: Self) -> Self {
        assert!(!rhs.is_zero(), "ExtendedReal division by zero");
        if self.is_zero() {
            return Self::ZERO;
        }
        let m = self.mant / rhs.mant;
        let e = self.exp - rhs.exp;
        if m.abs() < 1.0 {
            ExtendedReal { mant: m * 2.0, exp: e - 1 }
        } else {
            ExtendedReal { mant: m, exp: e }
        }
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.add_impl(rhs)
    }
}

impl AddAssign for ExtendedReal {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = self.add_impl(rhs);
    }
}

impl Neg for ExtendedReal {
    type Output = ExtendedReal;
    fn neg(self) -> Self {
        ExtendedReal { mant: -self.mant, exp: self.exp }
    }
}

impl Sub for ExtendedReal {
    type Output = ExtendedReal;
    fn sub(self, rhs: Self) -> Self {
        self.add_impl(-rhs)
    }
}

impl PartialEq for ExtendedReal {
    fn eq(&self, other: &Self) -> bool {
        (self.is_zero() && other.is_zero()) || (self.mant == other.mant && self.exp == other.exp)
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let d = *self - *other;
        if d.is_zero() {
            Some(Ordering::Equal)
        } else if d.is_sign_negative() {
            Some(Ordering::Less)
        } else {
            Some(Ordering::Greater)
        }
    }
}

impl fmt::Display for ExtendedReal {
    /// Decimal scientific notation with 17 significant digits; the decimal
    /// exponent may exceed the `f64` range.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0e0");
        }
        if self.exp.abs() < 1000 {
            return write!(f, "{:.16e}", self.to_f64_lossy());
        }
        let log10 = self.log2() * std::f64::consts::LOG10_2;
        let mut e10 = log10.floor();
        let mut m10 = 10f64.powf(log10 - e10);
        if m10 >= 10.0 {
            m10 /= 10.0;
            e10 += 1.0;
        }
        let sign = if self.is_sign_negative() { "-" } else { "" };
        write!(f, "{sign}{m10:.16}e{}", e10 as i64)
    }
}

impl FromStr for ExtendedReal {
    type Err = NumericsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || NumericsError::Parse(s.to_string());
        let (mant_str, exp10) = match s.find(['e', 'E']) {
            Some(pos) => (&s[..pos], s[pos + 1..].parse::<i64>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let m: f64 = mant_str.parse().map_err(|_| bad())?;
        if !m.is_finite() {
            return Err(bad());
        }
        if m == 0.0 {
            return Ok(Self::ZERO);
        }
        if exp10.abs() < 280 {
            let v: f64 = s.parse().map_err(|_| bad())?;
            if v.is_finite() && v != 0.0 {
                return Ok(Self::from_f64(v));
            }
        }
        // 10^exp10 = 2^(exp10·log2 10); split the exponent to keep precision
        let scale = Self::exp2(exp10 as f64 * std::f64::consts::LOG2_10);
        Ok(Self::from_f64(m) * scale)
    }
}
