//! Construction of a badly approximable M-tuple inside a rational interval.
//!
//! The pipeline is: the integer polynomial `∏(x − iQ) − 1` of degree M+1 with
//! `Q = 5(M+1)`, its M+1 real roots (one per bracket `((i−½)Q, (i+½)Q)`), the
//! coefficients α of the monic polynomial vanishing at the first M roots, and
//! finally the affine placement `β = a + (α mod z)(b − a)/z` with
//! `z = 30·M^{3M}`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::diophantine::{cf_audit, CfAuditEntry};
use crate::error::{Error, Result};
use crate::precision::{BigReal, IntPolynomial, Real};

pub const DEFAULT_M_MAX: usize = 8;
pub const DEFAULT_AUDIT_DEPTH: usize = 40;

/// Bits of the initial bisection phase, before Newton takes over.
const BISECTION_BITS: u32 = 64;
const MAX_NEWTON_STEPS: usize = 400;

#[derive(Clone, Debug)]
pub struct ConstructionTrace {
    pub m: usize,
    pub q: u64,
    pub polynomial: IntPolynomial,
    /// All M+1 roots, increasing.
    pub xi: Vec<BigReal>,
    /// `|P(ξ_i)|` at the working precision.
    pub residuals: Vec<BigReal>,
    pub alpha: Vec<BigReal>,
    pub z: BigInt,
    pub precision_bits: u32,
}

#[derive(Clone, Debug)]
pub struct BaTuple {
    pub m: usize,
    pub a: BigRational,
    pub b: BigRational,
    pub beta: Vec<BigReal>,
    pub trace: ConstructionTrace,
    /// Continued-fraction audit of each coordinate.
    pub audit: Vec<CfAuditEntry>,
}

impl BaTuple {
    pub fn beta_reals(&self) -> Vec<Real> {
        self.beta.iter().cloned().map(Real::Approx).collect()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstructOptions {
    /// `None` selects [`default_precision`].
    pub precision_bits: Option<u32>,
    pub m_max: usize,
    pub audit_depth: usize,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        Self {
            precision_bits: None,
            m_max: DEFAULT_M_MAX,
            audit_depth: DEFAULT_AUDIT_DEPTH,
        }
    }
}

/// `Q = 5(M+1)`, the smallest spacing valid for the degree M+1 polynomial.
pub fn spacing(m: usize) -> u64 {
    5 * (m as u64 + 1)
}

/// `max(256, 32·(M+1)·⌈log₂ Q⌉)` bits.
pub fn default_precision(m: usize) -> u32 {
    let q = spacing(m);
    let log_q = 64 - (q - 1).leading_zeros();
    (32 * (m as u32 + 1) * log_q).max(256)
}

/// `z = 30·M^{3M}`, the integer with `z − 1 < 30·exp(3M ln M) ≤ z`.
pub fn scale_integer(m: usize) -> BigInt {
    BigInt::from(30) * num_traits::pow(BigInt::from(m), 3 * m)
}

/// `(x − Q)(x − 2Q)⋯(x − degree·Q) − 1`.
pub fn build_polynomial(degree: usize, q: u64) -> Result<IntPolynomial> {
    if degree == 0 {
        return Err(Error::InvalidArgument("polynomial degree must be at least 1".into()));
    }
    if q < 5 * degree as u64 {
        return Err(Error::DegenerateQ { q, degree });
    }
    let roots: Vec<BigInt> = (1..=degree as u64).map(|i| BigInt::from(i * q)).collect();
    let mut coeffs = IntPolynomial::from_integer_roots(&roots).coefficients().to_vec();
    coeffs[0] -= 1;
    Ok(IntPolynomial::new(coeffs))
}

fn bracket(i: usize, q: u64, prec: u32) -> (BigReal, BigReal) {
    let two = BigInt::from(2);
    let lo = BigInt::from((2 * i as u64 - 1) * q);
    let hi = BigInt::from((2 * i as u64 + 1) * q);
    (
        BigReal::from_ratio(&lo, &two, prec),
        BigReal::from_ratio(&hi, &two, prec),
    )
}

fn sign(x: &BigReal) -> i8 {
    if x.is_zero() {
        0
    } else if x.is_negative() {
        -1
    } else {
        1
    }
}

/// One root per bracket `((i−½)Q, (i+½)Q)`, `i = 1..=deg P`.
///
/// Each root is bisected to 64 bits and then polished by Newton steps kept
/// inside a sign-verified bracket.
pub fn isolate_roots(p: &IntPolynomial, q: u64, precision_bits: u32) -> Result<Vec<BigReal>> {
    let prec = precision_bits.max(crate::precision::MIN_PRECISION);
    let dp = p.derivative();
    let tolerance = BigReal::from_ratio(&BigInt::one(), &(BigInt::one() << (prec / 2)), prec);
    let mut roots = Vec::with_capacity(p.degree());
    for i in 1..=p.degree() {
        let (mut lo, mut hi) = bracket(i, q, prec);
        let (bracket_lo, bracket_hi) = (lo.clone(), hi.clone());
        let s_lo = sign(&p.eval(&lo));
        let s_hi = sign(&p.eval(&hi));
        if s_lo == 0 || s_hi == 0 || s_lo == s_hi {
            return Err(Error::BracketViolation {
                index: i,
                lo: lo.to_decimal(12),
                hi: hi.to_decimal(12),
            });
        }
        let half = BigReal::from_ratio(&BigInt::one(), &BigInt::from(2), prec);
        let bisect_width = BigReal::from_ratio(&BigInt::from(q), &(BigInt::one() << BISECTION_BITS), prec);
        while (&hi - &lo) > bisect_width {
            let mid = &(&lo + &hi) * &half;
            match sign(&p.eval(&mid)) {
                0 => {
                    lo = mid.clone();
                    hi = mid;
                }
                s if s == s_lo => lo = mid,
                _ => hi = mid,
            }
        }
        let mut x = &(&lo + &hi) * &half;
        let mut converged = false;
        for _ in 0..MAX_NEWTON_STEPS {
            let fx = p.eval(&x);
            let s = sign(&fx);
            if s == 0 {
                converged = true;
                break;
            }
            if s == s_lo {
                lo = x.clone();
            } else {
                hi = x.clone();
            }
            let dfx = dp.eval(&x);
            let mut next = if dfx.is_zero() {
                &(&lo + &hi) * &half
            } else {
                &x - &(&fx / &dfx)
            };
            if next <= lo || next >= hi {
                next = &(&lo + &hi) * &half;
            }
            let step = (&next - &x).abs();
            x = next;
            if step <= x.ulp() {
                converged = true;
                break;
            }
        }
        let residual = p.eval(&x).abs();
        if !converged || residual > tolerance {
            return Err(Error::PrecisionExhausted(format!(
                "root {i} did not reach |P(ξ)| ≤ 2^-{} at {prec} bits",
                prec / 2
            )));
        }
        if x <= bracket_lo || x >= bracket_hi {
            return Err(Error::BracketViolation {
                index: i,
                lo: bracket_lo.to_decimal(12),
                hi: bracket_hi.to_decimal(12),
            });
        }
        roots.push(x);
    }
    Ok(roots)
}

/// Coefficients of `∏(x − ξ_k)`, lowest degree first, leading 1 included.
pub fn expand_roots(xi: &[BigReal], prec: u32) -> Vec<BigReal> {
    let mut coeffs = vec![BigReal::from_i64(1, prec)];
    for r in xi {
        let r = r.with_precision(prec);
        let mut next = vec![BigReal::zero(prec); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] = &next[i + 1] + c;
            next[i] = &next[i] - &(c * &r);
        }
        coeffs = next;
    }
    coeffs
}

/// The α solving `Σ_i ξ_k^{i−1} α_i = −ξ_k^M` for `k = 1..M`.
///
/// The Vandermonde system is not inverted; α is read off as the lower
/// coefficients of the monic polynomial with roots ξ (elementary symmetric
/// functions with alternating signs).
pub fn solve_coefficients(xi: &[BigReal]) -> Vec<BigReal> {
    let prec = xi
        .iter()
        .map(BigReal::precision)
        .max()
        .unwrap_or(crate::precision::MIN_PRECISION);
    let mut coeffs = expand_roots(xi, prec);
    coeffs.pop();
    coeffs
}

/// `β_l = a + ((α_l mod z)/z)(b − a)`.
pub fn rescale_to_interval(alpha: &[BigReal], z: &BigInt, a: &BigRational, b: &BigRational) -> Result<Vec<BigReal>> {
    if a >= b {
        return Err(Error::Interval(format!("need a < b, got a = {a}, b = {b}")));
    }
    if !z.is_positive() {
        return Err(Error::InvalidArgument("scale integer z must be positive".into()));
    }
    let prec = alpha
        .iter()
        .map(BigReal::precision)
        .max()
        .unwrap_or(crate::precision::MIN_PRECISION);
    let zr = BigReal::from_bigint(z, prec);
    let ar = BigReal::from_rational(a, prec);
    let width = BigReal::from_rational(&(b - a), prec);
    let beta: Vec<BigReal> = alpha
        .iter()
        .map(|al| {
            let wraps = (al / &zr).floor();
            let reduced = al - &BigReal::from_bigint(&(&wraps * z), prec);
            &ar + &(&(&reduced / &zr) * &width)
        })
        .collect();
    for i in 0..beta.len() {
        for j in i + 1..beta.len() {
            if beta[i] == beta[j] {
                return Err(Error::Collision { first: i, second: j });
            }
        }
    }
    Ok(beta)
}

/// Inverse of the placement: `(β − a)·z/(b − a)`, i.e. `α mod z`.
pub fn unscale(beta: &BigReal, z: &BigInt, a: &BigRational, b: &BigRational) -> BigReal {
    let prec = beta.precision();
    let shifted = beta - &BigReal::from_rational(a, prec);
    &(&shifted * &BigReal::from_bigint(z, prec)) / &BigReal::from_rational(&(b - a), prec)
}

pub fn construct_ba_tuple(m: usize, a: &BigRational, b: &BigRational, opts: ConstructOptions) -> Result<BaTuple> {
    if m == 0 || m > opts.m_max {
        return Err(Error::InvalidArgument(format!(
            "M must be in 1..={}, got {m}",
            opts.m_max
        )));
    }
    if a >= b {
        return Err(Error::Interval(format!("need a < b, got a = {a}, b = {b}")));
    }
    let q = spacing(m);
    let prec = opts.precision_bits.unwrap_or_else(|| default_precision(m));
    let polynomial = build_polynomial(m + 1, q)?;
    let xi = isolate_roots(&polynomial, q, prec)?;
    let residuals = xi.iter().map(|x| polynomial.eval(x).abs()).collect();
    let alpha = solve_coefficients(&xi[..m]);
    let z = scale_integer(m);
    let beta = rescale_to_interval(&alpha, &z, a, b)?;
    let reals: Vec<Real> = beta.iter().cloned().map(Real::Approx).collect();
    let audit = cf_audit(&reals, opts.audit_depth)?;
    let trace = ConstructionTrace {
        m,
        q,
        polynomial,
        xi,
        residuals,
        alpha,
        z,
        precision_bits: prec,
    };
    Ok(BaTuple {
        m,
        a: a.clone(),
        b: b.clone(),
        beta,
        trace,
        audit,
    })
}

/// Outcome of re-checking every construction invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub brackets_hold: bool,
    pub residuals_within_tolerance: bool,
    pub max_residual: f64,
    pub alpha_bound_holds: bool,
    pub max_abs_alpha: f64,
    pub alpha_bound: f64,
    pub z_brackets_bound: bool,
    /// Largest coefficient gap between α and a re-expansion of ∏(x − ξ_k) at doubled precision.
    pub reexpansion_error: f64,
    pub reexpansion_within_tolerance: bool,
    pub beta_in_interval: bool,
    pub beta_distinct: bool,
}

impl InvariantReport {
    pub fn all_hold(&self) -> bool {
        self.brackets_hold
            && self.residuals_within_tolerance
            && self.alpha_bound_holds
            && self.z_brackets_bound
            && self.reexpansion_within_tolerance
            && self.beta_in_interval
            && self.beta_distinct
    }
}

impl BaTuple {
    pub fn check_invariants(&self) -> InvariantReport {
        let t = &self.trace;
        let prec = t.precision_bits;
        let tol = BigReal::from_ratio(&BigInt::one(), &(BigInt::one() << (prec / 2)), prec);
        let brackets_hold = t.xi.iter().enumerate().all(|(k, x)| {
            let (lo, hi) = bracket(k + 1, t.q, prec);
            *x > lo && *x < hi
        });
        let residuals_within_tolerance = t.residuals.iter().all(|r| *r <= tol);
        let max_residual = t.residuals.iter().map(BigReal::to_f64).fold(0.0, f64::max);

        // 30·exp(3M ln M) = 30·M^{3M} exactly
        let bound = scale_integer(t.m);
        let bound_r = BigReal::from_bigint(&bound, prec);
        let alpha_bound_holds = t.alpha.iter().all(|a| a.abs() <= bound_r);
        let max_abs_alpha = t.alpha.iter().map(|a| a.abs().to_f64()).fold(0.0, f64::max);
        let z_brackets_bound = &t.z - BigInt::one() < bound && bound <= t.z;

        let wide = expand_roots(&t.xi[..t.m], 2 * prec);
        let reexpansion = t
            .alpha
            .iter()
            .zip(&wide)
            .map(|(a, w)| (&a.with_precision(2 * prec) - w).abs())
            .fold(BigReal::zero(2 * prec), |acc, e| if e > acc { e } else { acc });
        let reexpansion_within_tolerance = reexpansion <= tol.with_precision(2 * prec);

        let a = BigReal::from_rational(&self.a, prec);
        let b = BigReal::from_rational(&self.b, prec);
        let beta_in_interval = self.beta.iter().all(|x| *x >= a && *x < b);
        let beta_distinct =
            (0..self.beta.len()).all(|i| (i + 1..self.beta.len()).all(|j| self.beta[i] != self.beta[j]));
        InvariantReport {
            brackets_hold,
            residuals_within_tolerance,
            max_residual,
            alpha_bound_holds,
            max_abs_alpha,
            alpha_bound: bound.to_f64().unwrap_or(f64::INFINITY),
            z_brackets_bound,
            reexpansion_error: reexpansion.to_f64(),
            reexpansion_within_tolerance,
            beta_in_interval,
            beta_distinct,
        }
    }
}
