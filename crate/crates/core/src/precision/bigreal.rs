//! Binary floating point with a caller-chosen mantissa width.
//!
//! A value is `mantissa * 2^exponent` with `|mantissa| < 2^precision`.
//! Every operation rounds its exact result to nearest, ties to even.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Smallest supported mantissa width.
pub const MIN_PRECISION: u32 = 64;

#[derive(Clone, Debug)]
pub struct BigReal {
    mantissa: BigInt,
    exponent: i64,
    precision: u32,
}

fn clamp_precision(bits: u32) -> u32 {
    bits.max(MIN_PRECISION)
}

/// Round `|m|` to `prec` bits; returns the shifted magnitude and the shift applied.
fn round_magnitude(m: BigUint, prec: u32) -> (BigUint, u64) {
    let bits = m.bits();
    if bits <= prec as u64 {
        return (m, 0);
    }
    let shift = bits - prec as u64;
    let q = &m >> shift;
    let rem = &m - (&q << shift);
    let half = BigUint::one() << (shift - 1);
    let round_up = match rem.cmp(&half) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => q.is_odd(),
    };
    let mut q = if round_up { q + 1u32 } else { q };
    let mut shift = shift;
    if q.bits() > prec as u64 {
        q >>= 1;
        shift += 1;
    }
    (q, shift)
}

impl BigReal {
    fn from_parts(mantissa: BigInt, exponent: i64, precision: u32) -> Self {
        Self::from_parts_sticky(mantissa, exponent, precision, false)
    }

    /// `sticky` marks a nonzero discarded tail strictly below the last bit of `mantissa`.
    fn from_parts_sticky(mantissa: BigInt, exponent: i64, precision: u32, sticky: bool) -> Self {
        let precision = clamp_precision(precision);
        let (sign, mag) = mantissa.into_parts();
        if mag.is_zero() {
            return Self {
                mantissa: BigInt::zero(),
                exponent: 0,
                precision,
            };
        }
        let (mag, shift) = if sticky {
            // append the sticky bit so ties are broken correctly
            let widened = (mag << 1u32) | BigUint::one();
            let (q, s) = round_magnitude(widened, precision);
            (q, s as i64 - 1)
        } else {
            let (q, s) = round_magnitude(mag, precision);
            (q, s as i64)
        };
        Self {
            mantissa: BigInt::from_biguint(sign, mag),
            exponent: exponent + shift,
            precision,
        }
    }

    pub fn zero(precision: u32) -> Self {
        Self::from_parts(BigInt::zero(), 0, precision)
    }

    pub fn from_i64(v: i64, precision: u32) -> Self {
        Self::from_parts(BigInt::from(v), 0, precision)
    }

    pub fn from_bigint(v: &BigInt, precision: u32) -> Self {
        Self::from_parts(v.clone(), 0, precision)
    }

    /// Exact conversion of a finite double, then rounded to `precision` (never lossy above 53 bits).
    pub fn from_f64(v: f64, precision: u32) -> Self {
        assert!(v.is_finite(), "BigReal::from_f64 on non-finite value");
        if v == 0.0 {
            return Self::zero(precision);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Self::from_parts(BigInt::from(m) * sign, e, precision)
    }

    /// Correctly rounded quotient `num / den`.
    pub fn from_ratio(num: &BigInt, den: &BigInt, precision: u32) -> Self {
        assert!(!den.is_zero(), "BigReal::from_ratio with zero denominator");
        let precision = clamp_precision(precision);
        if num.is_zero() {
            return Self::zero(precision);
        }
        let negative = num.is_negative() != den.is_negative();
        let n = num.magnitude().clone();
        let d = den.magnitude().clone();
        // enough quotient bits for rounding: prec + 2
        let shift = precision as i64 + 2 + d.bits() as i64 - n.bits() as i64;
        let shift = shift.max(0);
        let (q, r) = (n << shift as u64).div_rem(&d);
        let sign = if negative { Sign::Minus } else { Sign::Plus };
        Self::from_parts_sticky(BigInt::from_biguint(sign, q), -shift, precision, !r.is_zero())
    }

    pub fn from_rational(r: &BigRational, precision: u32) -> Self {
        Self::from_ratio(r.numer(), r.denom(), precision)
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    /// Same value rounded (or widened) to a new mantissa width.
    pub fn with_precision(&self, precision: u32) -> Self {
        Self::from_parts(self.mantissa.clone(), self.exponent, precision)
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self {
            mantissa: self.mantissa.abs(),
            ..self.clone()
        }
    }

    /// Exact value as a rational number.
    pub fn to_rational(&self) -> BigRational {
        if self.exponent >= 0 {
            BigRational::from_integer(&self.mantissa << self.exponent as u64)
        } else {
            BigRational::new(self.mantissa.clone(), BigInt::one() << (-self.exponent) as u64)
        }
    }

    /// Largest integer not exceeding the value.
    pub fn floor(&self) -> BigInt {
        if self.exponent >= 0 {
            &self.mantissa << self.exponent as u64
        } else {
            let d = BigInt::one() << (-self.exponent) as u64;
            self.mantissa.div_floor(&d)
        }
    }

    /// Nearest integer, ties to even.
    pub fn round_to_int(&self) -> BigInt {
        let fl = self.floor();
        let frac = self - &Self::from_bigint(&fl, self.precision);
        let half = Self::from_ratio(&BigInt::one(), &BigInt::from(2), self.precision);
        match frac.cmp_value(&half) {
            Ordering::Less => fl,
            Ordering::Greater => fl + 1,
            Ordering::Equal => {
                if fl.is_even() {
                    fl
                } else {
                    fl + 1
                }
            }
        }
    }

    /// Fractional part in `[0, 1)`; exact.
    pub fn fract(&self) -> Self {
        if self.exponent >= 0 {
            return Self::zero(self.precision);
        }
        let modulus = BigInt::one() << (-self.exponent) as u64;
        Self {
            mantissa: self.mantissa.mod_floor(&modulus),
            ..self.clone()
        }
    }

    /// Unit in the last place at the current precision.
    pub fn ulp(&self) -> Self {
        if self.is_zero() {
            return Self::from_parts(BigInt::one(), -(self.precision as i64), self.precision);
        }
        let top = self.mantissa.bits() as i64 + self.exponent;
        Self::from_parts(BigInt::one(), top - self.precision as i64, self.precision)
    }

    pub fn cmp_value(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.mantissa, &other.mantissa);
        match (a.sign(), b.sign()) {
            (x, y) if x != y => return sign_rank(x).cmp(&sign_rank(y)),
            _ => {}
        }
        if a.is_zero() {
            return Ordering::Equal;
        }
        let e = self.exponent.min(other.exponent);
        let aa = a << (self.exponent - e) as u64;
        let bb = b << (other.exponent - e) as u64;
        aa.cmp(&bb)
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let r = Self::from_parts(self.mantissa.clone(), self.exponent, 64);
        let m = r.mantissa.to_f64().unwrap_or(f64::NAN);
        let e = r.exponent;
        if e > 2000 {
            return m.signum() * f64::INFINITY;
        }
        if e < -2200 {
            return 0.0 * m.signum();
        }
        // split the scaling to stay inside the double exponent range
        let half = (e / 2) as i32;
        m * 2f64.powi(half) * 2f64.powi(e as i32 - half)
    }

    /// Square root, correctly rounded.
    pub fn sqrt(&self) -> Result<Self> {
        if self.is_negative() {
            return Err(Error::InvalidArgument("square root of a negative BigReal".into()));
        }
        if self.is_zero() {
            return Ok(self.clone());
        }
        let prec = self.precision as i64;
        let mag = self.mantissa.magnitude().clone();
        // want the radicand with ~2*prec+4 bits and an even exponent
        let mut shift = 2 * prec + 4 - mag.bits() as i64;
        if (self.exponent - shift).rem_euclid(2) != 0 {
            shift += 1;
        }
        let shifted_exact;
        let mut sticky = false;
        let rad = if shift >= 0 {
            shifted_exact = mag << shift as u64;
            shifted_exact
        } else {
            let s = (-shift) as u64;
            let kept = &mag >> s;
            sticky = (&kept << s) != mag;
            kept
        };
        let root = rad.sqrt();
        if &root * &root != rad {
            sticky = true;
        }
        let exp = (self.exponent - shift) / 2;
        Ok(Self::from_parts_sticky(
            BigInt::from_biguint(Sign::Plus, root),
            exp,
            self.precision,
            sticky,
        ))
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut acc = Self::from_i64(1, self.precision);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Decimal rendering with `digits` significant digits (round half even).
    pub fn to_decimal(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.is_zero() {
            return "0".to_string();
        }
        let exact = self.to_rational().abs();
        // decimal exponent estimate, corrected below
        let approx = self.abs().to_f64();
        let mut e10 = if approx.is_finite() && approx > 0.0 {
            approx.log10().floor() as i64
        } else {
            let bits = self.mantissa.bits() as i64 + self.exponent;
            ((bits as f64) * std::f64::consts::LOG10_2).floor() as i64
        };
        let mut scaled;
        loop {
            let k = digits as i64 - 1 - e10;
            let scale = pow10(k.unsigned_abs());
            let value = if k >= 0 {
                &exact * BigRational::from_integer(scale)
            } else {
                &exact / BigRational::from_integer(scale)
            };
            scaled = round_half_even(&value);
            let len = scaled.to_string().len();
            if len > digits {
                e10 += 1;
            } else if len < digits {
                e10 -= 1;
            } else {
                break;
            }
        }
        let body = scaled.to_string();
        let sign = if self.is_negative() { "-" } else { "" };
        let body = body.trim_end_matches('0');
        let body = if body.is_empty() { "0" } else { body };
        if (-7..=40).contains(&e10) {
            if e10 >= 0 {
                let int_len = e10 as usize + 1;
                if body.len() <= int_len {
                    format!("{sign}{}{}", body, "0".repeat(int_len - body.len()))
                } else {
                    format!("{sign}{}.{}", &body[..int_len], &body[int_len..])
                }
            } else {
                format!("{sign}0.{}{}", "0".repeat((-e10 - 1) as usize), body)
            }
        } else if body.len() == 1 {
            format!("{sign}{body}e{e10}")
        } else {
            format!("{sign}{}.{}e{e10}", &body[..1], &body[1..])
        }
    }

    /// Digits needed for a decimal rendering that parses back to the same value.
    pub fn roundtrip_digits(precision: u32) -> usize {
        (precision as f64 * std::f64::consts::LOG10_2).ceil() as usize + 3
    }

    /// Parse a decimal (`-1.25e-3`) or rational (`7/3`) literal.
    pub fn parse(s: &str, precision: u32) -> Result<Self> {
        Ok(Self::from_rational(&parse_rational(s)?, precision))
    }
}

fn sign_rank(s: Sign) -> i8 {
    match s {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

fn pow10(k: u64) -> BigInt {
    num_traits::pow(BigInt::from(10), k as usize)
}

fn round_half_even(r: &BigRational) -> BigInt {
    let fl = r.floor().to_integer();
    let frac = r - BigRational::from_integer(fl.clone());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    match frac.cmp(&half) {
        Ordering::Less => fl,
        Ordering::Greater => fl + 1,
        Ordering::Equal => {
            if fl.is_even() {
                fl
            } else {
                fl + 1
            }
        }
    }
}

/// Parse `p/q`, an integer, or a decimal literal with optional exponent into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let q = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(p, q));
    }
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i64>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (negative, mant) = match mant.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let mut n = BigInt::from_str(&digits).map_err(|_| bad())?;
    if negative {
        n = -n;
    }
    let e = exp - frac_part.len() as i64;
    Ok(if e >= 0 {
        BigRational::from_integer(n * pow10(e as u64))
    } else {
        BigRational::new(n, pow10((-e) as u64))
    })
}

impl PartialEq for BigReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_value(other) == Ordering::Equal
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_value(other))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or_else(|| Self::roundtrip_digits(self.precision));
        f.write_str(&self.to_decimal(digits))
    }
}

fn add_impl(a: &BigReal, b: &BigReal, negate_b: bool) -> BigReal {
    let prec = a.precision.max(b.precision);
    let bm = if negate_b { -&b.mantissa } else { b.mantissa.clone() };
    if a.is_zero() {
        return BigReal::from_parts(bm, b.exponent, prec);
    }
    if b.is_zero() {
        return BigReal::from_parts(a.mantissa.clone(), a.exponent, prec);
    }
    let top_a = a.mantissa.bits() as i64 + a.exponent;
    let top_b = b.mantissa.bits() as i64 + b.exponent;
    // an operand entirely below the rounding position only contributes a sticky bit
    let gap = prec as i64 + 4;
    let (big_m, big_e, small_m, small_e) = if top_a >= top_b {
        (a.mantissa.clone(), a.exponent, bm, b.exponent)
    } else {
        (bm, b.exponent, a.mantissa.clone(), a.exponent)
    };
    let top_big = big_m.bits() as i64 + big_e;
    let top_small = small_m.bits() as i64 + small_e;
    if top_big - top_small > gap && small_e < big_e {
        let floor_e = top_big - gap;
        let lifted_big = big_m << (big_e - floor_e + 2) as u64;
        let tiny = if small_m.is_negative() {
            BigInt::from(-1)
        } else {
            BigInt::one()
        };
        return BigReal::from_parts(lifted_big + tiny, floor_e - 2, prec);
    }
    let e = big_e.min(small_e);
    let sum = (big_m << (big_e - e) as u64) + (small_m << (small_e - e) as u64);
    BigReal::from_parts(sum, e, prec)
}

impl<'a> Add<&'a BigReal> for &'a BigReal {
    type Output = BigReal;
    fn add(self, rhs: &'a BigReal) -> BigReal {
        add_impl(self, rhs, false)
    }
}

impl<'a> Sub<&'a BigReal> for &'a BigReal {
    type Output = BigReal;
    fn sub(self, rhs: &'a BigReal) -> BigReal {
        add_impl(self, rhs, true)
    }
}

impl<'a> Mul<&'a BigReal> for &'a BigReal {
    type Output = BigReal;
    fn mul(self, rhs: &'a BigReal) -> BigReal {
        let prec = self.precision.max(rhs.precision);
        BigReal::from_parts(&self.mantissa * &rhs.mantissa, self.exponent + rhs.exponent, prec)
    }
}

impl<'a> Div<&'a BigReal> for &'a BigReal {
    type Output = BigReal;
    fn div(self, rhs: &'a BigReal) -> BigReal {
        assert!(!rhs.is_zero(), "BigReal division by zero");
        let prec = self.precision.max(rhs.precision);
        let q = BigReal::from_ratio(&self.mantissa, &rhs.mantissa, prec);
        BigReal {
            exponent: q.exponent + self.exponent - rhs.exponent,
            ..q
        }
    }
}

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal {
            mantissa: -&self.mantissa,
            ..self.clone()
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<BigReal> for BigReal {
            type Output = BigReal;
            fn $m(self, rhs: BigReal) -> BigReal {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a BigReal> for BigReal {
            type Output = BigReal;
            fn $m(self, rhs: &'a BigReal) -> BigReal {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(s: &str) -> BigReal {
        BigReal::parse(s, 128).unwrap()
    }

    #[test]
    fn exact_small_arithmetic() {
        assert_eq!((&r("1.5") + &r("2.25")).to_f64(), 3.75);
        assert_eq!((&r("1.5") - &r("2.25")).to_f64(), -0.75);
        assert_eq!((&r("1.5") * &r("-4")).to_f64(), -6.0);
        assert_eq!((&r("3") / &r("4")).to_f64(), 0.75);
    }

    #[test]
    fn ties_to_even_at_64_bits() {
        // 2^64 + 1 needs 65 bits; the tie rounds down to the even mantissa 2^63
        let v = BigReal::from_bigint(&((BigInt::one() << 64u32) + 1), 64);
        assert_eq!(v.floor(), BigInt::one() << 64u32);
        // 2^64 + 3 ties upward to 2^64 + 4
        let w = BigReal::from_bigint(&((BigInt::one() << 64u32) + 3), 64);
        assert_eq!(w.floor(), (BigInt::one() << 64u32) + 4);
    }

    #[test]
    fn division_rounds_correctly() {
        let third = BigReal::from_ratio(&BigInt::one(), &BigInt::from(3), 64);
        let err = (third.to_rational() - BigRational::new(1.into(), 3.into())).abs();
        let bound = BigRational::new(BigInt::one(), BigInt::one() << 66u32);
        assert!(err <= bound);
    }

    #[test]
    fn sqrt_two_matches_known_digits() {
        let s = BigReal::from_i64(2, 256).sqrt().unwrap();
        assert_eq!(s.to_decimal(40), "1.41421356237309504880168872420969807857");
        assert!(s
            .to_string()
            .starts_with("1.41421356237309504880168872420969807856967187537694"));
        let back = &s * &s;
        let err = (&back - &BigReal::from_i64(2, 256)).abs();
        assert!(err.to_f64() < 1e-70);
    }

    #[test]
    fn decimal_roundtrip() {
        let x = BigReal::from_ratio(&BigInt::from(22), &BigInt::from(7), 200);
        let s = x.to_string();
        let y = BigReal::parse(&s, 200).unwrap();
        assert_eq!(x, y);
        assert_eq!(r("0.000123").to_decimal(3), "0.000123");
        assert_eq!(r("1e-30").to_decimal(2), "1e-30");
        assert_eq!(r("-2.5e3").to_decimal(5), "-2500");
    }

    #[test]
    fn floor_and_fract_of_negative() {
        let x = r("-2.75");
        assert_eq!(x.floor(), BigInt::from(-3));
        assert_eq!(x.fract().to_f64(), 0.25);
        assert_eq!(r("2.5").round_to_int(), BigInt::from(2));
        assert_eq!(r("3.5").round_to_int(), BigInt::from(4));
    }

    #[test]
    fn far_apart_operands_keep_sticky_information() {
        let one = BigReal::from_i64(1, 64);
        let tiny = BigReal::parse("1e-200", 64).unwrap();
        assert_eq!(&one + &tiny, one);
        assert_eq!(&one - &tiny, one);
        assert!((&tiny + &tiny) > tiny);
        // a half-ulp tie pushed upward by a far smaller positive term
        let half_ulp = BigReal::parse("5.42101086242752217003726400434970855712890625e-20", 64).unwrap();
        let wide = BigReal::from_i64(1, 64);
        let tie = &wide + &half_ulp;
        assert_eq!(tie, wide);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(BigReal::parse("abc", 64).is_err());
        assert!(BigReal::parse("1/0", 64).is_err());
        assert!(BigReal::parse("", 64).is_err());
    }
}
