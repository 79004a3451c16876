use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use super::{BigReal, Real};
use crate::error::{Error, Result};

/// Extra working bits used for the second, certifying expansion.
const CERTIFY_EXTRA_BITS: u32 = 64;

/// Simple continued fraction `a0 + 1/(a1 + 1/(a2 + ...))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuedFraction {
    pub a0: BigInt,
    /// `a1, a2, ...`, all positive.
    pub quotients: Vec<BigInt>,
    /// `(p_k, q_k)` for `k = 0..=depth`.
    pub convergents: Vec<(BigInt, BigInt)>,
    /// The input ended (exactly rational) before the requested depth.
    pub terminated: bool,
    /// The input's precision could not certify the requested depth; the
    /// stored quotients are the certified prefix.
    pub precision_exhausted: bool,
}

impl ContinuedFraction {
    fn from_quotients(a0: BigInt, quotients: Vec<BigInt>, terminated: bool, exhausted: bool) -> Self {
        let mut convergents = Vec::with_capacity(quotients.len() + 1);
        // p_{-1}/q_{-1} = 1/0
        let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
        let (mut p, mut q) = (a0.clone(), BigInt::one());
        convergents.push((p.clone(), q.clone()));
        for a in &quotients {
            let p_next = a * &p + &p_prev;
            let q_next = a * &q + &q_prev;
            p_prev = std::mem::replace(&mut p, p_next);
            q_prev = std::mem::replace(&mut q, q_next);
            convergents.push((p.clone(), q.clone()));
        }
        Self {
            a0,
            quotients,
            convergents,
            terminated,
            precision_exhausted: exhausted,
        }
    }

    /// Exact expansion of a rational by the Euclidean algorithm.
    pub fn from_rational(r: &BigRational, depth: Option<usize>) -> Self {
        let (mut n, mut d) = (r.numer().clone(), r.denom().clone());
        let (a0, rem) = n.div_mod_floor(&d);
        n = d;
        d = rem;
        let mut quotients = Vec::new();
        while !d.is_zero() && depth.is_none_or(|k| quotients.len() < k) {
            let (a, rem) = n.div_mod_floor(&d);
            quotients.push(a);
            n = d;
            d = rem;
        }
        let terminated = d.is_zero();
        Self::from_quotients(a0, quotients, terminated, false)
    }

    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    pub fn max_quotient(&self) -> Option<&BigInt> {
        self.quotients.iter().max()
    }

    /// `max q_n / q_{n-1}` over the stored convergents (q̄ of the audit).
    pub fn max_denominator_ratio(&self) -> f64 {
        self.convergents
            .windows(2)
            .map(|w| ratio_f64(&w[1].1, &w[0].1))
            .fold(1.0, f64::max)
    }
}

fn ratio_f64(a: &BigInt, b: &BigInt) -> f64 {
    match (a.to_f64(), b.to_f64()) {
        (Some(x), Some(y)) if x.is_finite() && y.is_finite() && y != 0.0 => x / y,
        _ => BigReal::from_ratio(a, b, 64).to_f64(),
    }
}

/// Raw expansion at a fixed working precision, up to `depth` quotients.
fn expand(x: &BigReal, working_bits: u32, depth: usize) -> (BigInt, Vec<BigInt>, bool) {
    let mut y = x.with_precision(working_bits);
    let a0 = y.floor();
    y = &y - &BigReal::from_bigint(&a0, working_bits);
    let one = BigReal::from_i64(1, working_bits);
    let mut quotients = Vec::with_capacity(depth);
    while quotients.len() < depth {
        if y.is_zero() {
            return (a0, quotients, true);
        }
        y = &one / &y;
        let a = y.floor();
        y = &y - &BigReal::from_bigint(&a, working_bits);
        quotients.push(a);
    }
    (a0, quotients, y.is_zero())
}

/// Continued fraction of `x` to `depth` partial quotients.
///
/// The expansion is run at the input precision and again with 64 extra
/// working bits; only the common prefix is kept. A shorter prefix than
/// requested is reported through `precision_exhausted`.
pub fn continued_fraction(x: &BigReal, depth: usize) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(Error::InvalidArgument(
            "continued fraction depth must be at least 1".into(),
        ));
    }
    let p = x.precision();
    let (a0, first, end_a) = expand(x, p, depth + 1);
    let (b0, second, end_b) = expand(x, p + CERTIFY_EXTRA_BITS, depth + 1);
    if a0 != b0 {
        return Ok(ContinuedFraction::from_quotients(a0, Vec::new(), false, true));
    }
    let common = first.iter().zip(&second).take_while(|(u, v)| u == v).count();
    let terminated = end_a && end_b && first == second && first.len() <= depth;
    let take = common.min(depth);
    let exhausted = take < depth && !terminated;
    let quotients = first.into_iter().take(take).collect();
    Ok(ContinuedFraction::from_quotients(a0, quotients, terminated, exhausted))
}

impl Real {
    /// Continued fraction of either representation; exact values use the Euclidean algorithm.
    pub fn continued_fraction(&self, depth: usize) -> Result<ContinuedFraction> {
        match self {
            Real::Exact(r) => {
                if depth == 0 {
                    return Err(Error::InvalidArgument(
                        "continued fraction depth must be at least 1".into(),
                    ));
                }
                Ok(ContinuedFraction::from_rational(r, Some(depth)))
            }
            Real::Approx(x) => continued_fraction(x, depth),
        }
    }
}
