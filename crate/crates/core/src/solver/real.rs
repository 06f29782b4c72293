//! Scalar backends for the eigensolver: native `f64` and a multiprecision
//! binary float whose mantissa width is chosen per solve.

use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, RoundingMode, Sign};

/// Real field operations the eigensolver needs. Values carry their own
/// precision; binary operations round to the precision of `self`.
pub trait Real: Clone + PartialOrd + Send + Sync + fmt::Debug {
    fn from_f64(x: f64, bits: u32) -> Self;
    /// Mantissa width in bits.
    fn bits(&self) -> u32;
    fn to_f64(&self) -> f64;
    /// `log2 |self|`, finite for any nonzero value even beyond `f64` range.
    fn log2_abs(&self) -> f64;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    /// Exact multiplication by `2^e`.
    fn mul_pow2(&self, e: i64) -> Self;
    /// Nearest integer.
    fn round(&self) -> Self;
    fn is_zero(&self) -> bool;

    fn zero(bits: u32) -> Self {
        Self::from_f64(0.0, bits)
    }

    fn from_i64(x: i64, bits: u32) -> Self {
        // exact for |x| < 2^53, which covers every coefficient we build
        Self::from_f64(x as f64, bits)
    }

    /// Unit roundoff `2^-bits`.
    fn epsilon(bits: u32) -> Self {
        Self::from_f64(1.0, bits).mul_pow2(-(bits as i64))
    }

    fn is_negative(&self) -> bool {
        *self < Self::zero(self.bits())
    }

    /// `|self|` with the sign of `s`.
    fn with_sign_of(&self, s: &Self) -> Self {
        if s.is_negative() {
            self.abs().neg()
        } else {
            self.abs()
        }
    }

    /// `self -= a * b`.
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self = self.sub(&a.mul(b));
    }
}

impl Real for f64 {
    fn from_f64(x: f64, _bits: u32) -> Self {
        x
    }

    fn bits(&self) -> u32 {
        53
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn log2_abs(&self) -> f64 {
        f64::abs(*self).log2()
    }

    fn add(&self, o: &Self) -> Self {
        self + o
    }

    fn sub(&self, o: &Self) -> Self {
        self - o
    }

    fn mul(&self, o: &Self) -> Self {
        self * o
    }

    fn div(&self, o: &Self) -> Self {
        self / o
    }

    fn neg(&self) -> Self {
        -self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }

    fn mul_pow2(&self, e: i64) -> Self {
        let e = e.clamp(-2000, 2000) as i32;
        // split so intermediate powers stay representable
        let half = e / 2;
        self * 2f64.powi(half) * 2f64.powi(e - half)
    }

    fn round(&self) -> Self {
        f64::round(*self)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }
}

const RM: RoundingMode = RoundingMode::ToEven;

/// Multiprecision float with a fixed mantissa width.
#[derive(Clone)]
pub struct MpFloat {
    v: BigFloat,
    bits: u32,
}

impl MpFloat {
    fn wrap(&self, v: BigFloat) -> Self {
        debug_assert!(!v.is_nan(), "NaN in multiprecision arithmetic");
        MpFloat { v, bits: self.bits }
    }

    fn p(&self) -> usize {
        self.bits as usize
    }

    pub fn inner(&self) -> &BigFloat {
        &self.v
    }

    /// Top 128 mantissa bits as a fraction in `[0.5, 1)` and the exponent.
    fn split(&self) -> Option<(f64, i64)> {
        let (words, _, _, exp, _) = self.v.as_raw_parts()?;
        let hi = *words.last()? as f64;
        let lo = if words.len() > 1 { words[words.len() - 2] as f64 } else { 0.0 };
        let frac = (hi + lo * 2f64.powi(-64)) * 2f64.powi(-64);
        Some((frac, exp as i64))
    }
}

impl fmt::Debug for MpFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}@{}b", self.to_f64(), self.bits)
    }
}

impl PartialEq for MpFloat {
    fn eq(&self, other: &Self) -> bool {
        self.v == other.v
    }
}

impl PartialOrd for MpFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.v.partial_cmp(&other.v)
    }
}

impl Real for MpFloat {
    fn from_f64(x: f64, bits: u32) -> Self {
        MpFloat {
            v: BigFloat::from_f64(x, bits as usize),
            bits,
        }
    }

    fn bits(&self) -> u32 {
        self.bits
    }

    fn to_f64(&self) -> f64 {
        if self.v.is_zero() {
            return 0.0;
        }
        let Some((frac, exp)) = self.split() else {
            return f64::NAN;
        };
        let mag = Real::mul_pow2(&frac, exp);
        if self.v.is_negative() {
            -mag
        } else {
            mag
        }
    }

    fn log2_abs(&self) -> f64 {
        match self.split() {
            Some((frac, exp)) if !self.v.is_zero() => frac.log2() + exp as f64,
            _ => f64::NEG_INFINITY,
        }
    }

    fn add(&self, o: &Self) -> Self {
        self.wrap(self.v.add(&o.v, self.p(), RM))
    }

    fn sub(&self, o: &Self) -> Self {
        self.wrap(self.v.sub(&o.v, self.p(), RM))
    }

    fn mul(&self, o: &Self) -> Self {
        self.wrap(self.v.mul(&o.v, self.p(), RM))
    }

    fn div(&self, o: &Self) -> Self {
        self.wrap(self.v.div(&o.v, self.p(), RM))
    }

    fn neg(&self) -> Self {
        self.wrap(self.v.neg())
    }

    fn abs(&self) -> Self {
        self.wrap(self.v.abs())
    }

    fn sqrt(&self) -> Self {
        self.wrap(self.v.sqrt(self.p(), RM))
    }

    fn mul_pow2(&self, e: i64) -> Self {
        if self.v.is_zero() {
            return self.clone();
        }
        let mut v = self.v.clone();
        let exp = v.exponent().expect("finite value") as i64 + e;
        v.set_exponent(exp as i32);
        self.wrap(v)
    }

    fn round(&self) -> Self {
        self.wrap(self.v.round(0, RoundingMode::ToEven))
    }

    fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    fn is_negative(&self) -> bool {
        !self.v.is_zero() && self.v.sign() == Some(Sign::Neg)
    }
}
