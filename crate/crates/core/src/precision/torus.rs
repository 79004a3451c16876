use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use super::{BigReal, Real};

const TWO_POW_M128: f64 = 1.0 / 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

/// A point of ℝ/ℤ.
///
/// Rationals with denominators below 2^63 stay exact, so `q·x ≡ 0` is decided
/// exactly. Everything else is held as a 128-bit binary fraction, for which
/// multiplication by an integer `q` is exact modulo 1 up to the initial
/// rounding of `2^-129`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorusPoint {
    Rational { num: u64, den: u64 },
    Fixed(u128),
}

impl TorusPoint {
    pub fn from_real(x: &Real) -> Self {
        match x {
            Real::Exact(r) => {
                let den = r.denom();
                let num = r.numer().mod_floor(den);
                match (num.to_u64(), den.to_u64()) {
                    (Some(n), Some(d)) if d < (1 << 63) => TorusPoint::Rational { num: n, den: d },
                    _ => Self::from_bigreal(&BigReal::from_rational(r, 256)),
                }
            }
            Real::Approx(b) => Self::from_bigreal(b),
        }
    }

    pub fn from_bigreal(x: &BigReal) -> Self {
        let frac = x.fract();
        let scaled = &frac * &BigReal::from_bigint(&(BigInt::one() << 128u32), frac.precision());
        let v = scaled.round_to_int();
        let modulus = BigInt::one() << 128u32;
        let v = v.mod_floor(&modulus);
        let (_, digits) = v.to_u64_digits();
        debug_assert!(v.sign() != Sign::Minus);
        let lo = digits.first().copied().unwrap_or(0) as u128;
        let hi = digits.get(1).copied().unwrap_or(0) as u128;
        TorusPoint::Fixed(lo | (hi << 64))
    }

    pub fn from_f64(x: f64) -> Self {
        Self::from_bigreal(&BigReal::from_f64(x, 128))
    }

    /// `q·x mod 1`.
    pub fn scale(self, q: i64) -> Self {
        match self {
            TorusPoint::Rational { num, den } => {
                let qm = q.rem_euclid(den as i64) as u128;
                TorusPoint::Rational {
                    num: ((qm * num as u128) % den as u128) as u64,
                    den,
                }
            }
            TorusPoint::Fixed(f) => TorusPoint::Fixed(f.wrapping_mul(q as i128 as u128)),
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            TorusPoint::Rational { num, .. } => num == 0,
            TorusPoint::Fixed(f) => f == 0,
        }
    }

    /// Representative in `[-1/2, 1/2)`.
    pub fn centered(self) -> f64 {
        match self {
            TorusPoint::Rational { num, den } => {
                if 2 * (num as u128) >= den as u128 {
                    -((den - num) as f64) / den as f64
                } else {
                    num as f64 / den as f64
                }
            }
            TorusPoint::Fixed(f) => (f as i128) as f64 * TWO_POW_M128,
        }
    }

    /// ‖x‖, distance to the nearest integer.
    pub fn dist(self) -> f64 {
        match self {
            TorusPoint::Rational { num, den } => num.min(den - num) as f64 / den as f64,
            TorusPoint::Fixed(f) => f.min(f.wrapping_neg()) as f64 * TWO_POW_M128,
        }
    }

    /// `sin(2πx)`, exactly zero at `x ≡ 0` and `x ≡ 1/2`.
    pub fn sin_2pi(self) -> f64 {
        let half = match self {
            TorusPoint::Rational { num, den } => 2 * num as u128 == den as u128,
            TorusPoint::Fixed(f) => f == 1u128 << 127,
        };
        if self.is_zero() || half {
            return 0.0;
        }
        (2.0 * std::f64::consts::PI * self.centered()).sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_multiples_hit_zero_exactly() {
        let third = Real::from_ratio(1, 3).torus();
        assert!(third.scale(3).is_zero());
        assert!(third.scale(-6).is_zero());
        assert_eq!(third.scale(2).dist(), 1.0 / 3.0);
        let quarter = Real::from_ratio(1, 4).torus();
        assert_eq!(quarter.scale(2).sin_2pi(), 0.0);
        assert_eq!(quarter.scale(1).sin_2pi(), 1.0);
    }

    #[test]
    fn fixed_point_scaling_matches_bigreal() {
        let x = BigReal::from_i64(2, 256).sqrt().unwrap();
        let t = TorusPoint::from_bigreal(&x);
        for q in [1i64, 7, 1000, 99_991, -123_457] {
            let exact = super::super::dist_nearest_int(&(&x * &BigReal::from_i64(q, 256))).to_f64();
            assert!((t.scale(q).dist() - exact).abs() < 1e-30, "q={q}");
        }
    }

    #[test]
    fn negation_preserves_distance() {
        let t = TorusPoint::from_f64(0.123456789);
        for q in 1..200 {
            assert_eq!(t.scale(q).dist(), t.scale(-q).dist());
        }
    }
}
