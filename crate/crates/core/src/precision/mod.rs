//! Arbitrary-precision reals, points on the circle ℝ/ℤ, continued fractions and
//! integer polynomials.

mod bigreal;
mod cf;
mod poly;
mod torus;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use bigreal::{parse_rational, BigReal, MIN_PRECISION};
pub use cf::{continued_fraction, ContinuedFraction};
pub use poly::{eval_poly, IntPolynomial};
pub use torus::TorusPoint;

use crate::error::Result;

/// Distance from `x` to the nearest integer, in `[0, 1/2]`.
///
/// At an exact half-integer the result is exactly `1/2`.
pub fn dist_nearest_int(x: &BigReal) -> BigReal {
    let f = x.fract();
    let one = BigReal::from_i64(1, x.precision());
    let g = &one - &f;
    if f <= g {
        f
    } else {
        g
    }
}

/// A real coordinate that is either an exact rational or a binary approximation.
///
/// Exact rationals are kept so that resonance (‖qβ‖ = 0) is detected exactly.
#[derive(Clone, Debug, PartialEq)]
pub enum Real {
    Exact(BigRational),
    Approx(BigReal),
}

impl Real {
    /// `p/q` literals become exact; decimal literals become approximations at `precision`.
    pub fn parse(s: &str, precision: u32) -> Result<Self> {
        if s.contains('/') {
            Ok(Real::Exact(parse_rational(s)?))
        } else {
            Ok(Real::Approx(BigReal::parse(s, precision)?))
        }
    }

    pub fn from_ratio(p: i64, q: i64) -> Self {
        Real::Exact(BigRational::new(BigInt::from(p), BigInt::from(q)))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Real::Exact(r) => rational_to_f64(r),
            Real::Approx(x) => x.to_f64(),
        }
    }

    pub fn to_bigreal(&self, precision: u32) -> BigReal {
        match self {
            Real::Exact(r) => BigReal::from_rational(r, precision),
            Real::Approx(x) => x.clone(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Real::Exact(_))
    }

    /// Position on the circle ℝ/ℤ.
    pub fn torus(&self) -> TorusPoint {
        TorusPoint::from_real(self)
    }

    /// Multiply by an exact rational.
    pub fn scale(&self, by: &BigRational) -> Real {
        match self {
            Real::Exact(r) => Real::Exact(r * by),
            Real::Approx(x) => {
                let p = x.precision();
                Real::Approx(x * &BigReal::from_rational(by, p))
            }
        }
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Real::Exact(r) if r.denom().is_one() => write!(f, "{}", r.numer()),
            Real::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Real::Approx(x) => write!(f, "{x}"),
        }
    }
}

/// Serialized as a string: `p/q` for exact values, a full-precision decimal otherwise.
/// Decimals are read back at 512 bits.
impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Real::parse(&s, 512).map_err(serde::de::Error::custom)
    }
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
        if n.abs() < (1 << 53) && d < (1 << 53) {
            return n as f64 / d as f64;
        }
    }
    BigReal::from_rational(r, 128).to_f64()
}

/// Rational to an exact `p/q` string.
pub fn rational_string(r: &BigRational) -> String {
    Real::Exact(r.clone()).to_string()
}
