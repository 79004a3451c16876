//! Exhaustive checks of simultaneous Diophantine behaviour.
//!
//! All scans reduce `q·β_i` on the circle ℝ/ℤ through [`TorusPoint`], which
//! keeps rationals exact and irrationals at 128 fractional bits.

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{BigReal, Real, TorusPoint};
use crate::stats::linear_fit;

/// Default `r₀ = 3 + log₂(π/3)`, the width that makes Ω_j cover the wavelet band at level j.
pub fn default_r0() -> f64 {
    3.0 + (std::f64::consts::PI / 3.0).log2()
}

const SCAN_CHUNK: u64 = 1 << 14;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BadnessReport {
    pub m: usize,
    pub q_max: u64,
    /// `min_{q ≤ q_max} q^{1/M} · max_i ‖qβ_i‖`.
    pub min_score: f64,
    pub argmin_q: u64,
    /// Record-breaking `(q, score)` pairs in increasing `q`.
    pub curve: Vec<(u64, f64)>,
}

fn points(beta: &[Real]) -> Vec<TorusPoint> {
    beta.iter().map(Real::torus).collect()
}

fn max_dist(points: &[TorusPoint], q: u64) -> f64 {
    points.iter().map(|p| p.scale(q as i64).dist()).fold(0.0, f64::max)
}

fn score(points: &[TorusPoint], q: u64, inv_m: f64) -> f64 {
    let d = max_dist(points, q);
    if d == 0.0 {
        0.0
    } else {
        (q as f64).powf(inv_m) * d
    }
}

/// Local record curve of one chunk.
fn chunk_records(points: &[TorusPoint], lo: u64, hi: u64, inv_m: f64) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let mut best = f64::INFINITY;
    for q in lo..=hi {
        let s = score(points, q, inv_m);
        if s < best {
            best = s;
            out.push((q, s));
            if s == 0.0 {
                break;
            }
        }
    }
    out
}

pub fn badness_scan(beta: &[Real], q_max: u64) -> Result<BadnessReport> {
    if beta.is_empty() {
        return Err(Error::InvalidArgument(
            "badness scan needs at least one coordinate".into(),
        ));
    }
    if q_max == 0 {
        return Err(Error::InvalidArgument("q_max must be at least 1".into()));
    }
    let pts = points(beta);
    let inv_m = 1.0 / beta.len() as f64;
    let chunks: Vec<(u64, u64)> = (0..q_max.div_ceil(SCAN_CHUNK))
        .map(|c| (c * SCAN_CHUNK + 1, ((c + 1) * SCAN_CHUNK).min(q_max)))
        .collect();
    let local: Vec<Vec<(u64, f64)>> = chunks
        .par_iter()
        .map(|&(lo, hi)| chunk_records(&pts, lo, hi, inv_m))
        .collect();
    // merge in q order; independent of how the range was split
    let mut curve = Vec::new();
    let mut best = f64::INFINITY;
    for (q, s) in local.into_iter().flatten() {
        if s < best {
            best = s;
            curve.push((q, s));
        }
        if best == 0.0 {
            break;
        }
    }
    let &(argmin_q, min_score) = curve.last().expect("q_max ≥ 1 yields a record");
    Ok(BadnessReport {
        m: beta.len(),
        q_max,
        min_score,
        argmin_q,
        curve,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinkowskiWitness {
    pub q: u64,
    pub p: Vec<BigInt>,
    /// `q^{1/M} · max_i |qβ_i − p_i|`, to be compared with `M/(M+1)`.
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessSearch {
    pub m: usize,
    pub q_max: u64,
    pub bound: f64,
    pub witness: Option<MinkowskiWitness>,
    pub best_q: u64,
    pub best_score: f64,
}

/// Nearest integer to `q·x`.
fn nearest_multiple(x: &Real, q: u64) -> BigInt {
    match x {
        Real::Exact(r) => {
            let v = r * BigInt::from(q);
            (v + num_rational::BigRational::new(1.into(), 2.into()))
                .floor()
                .to_integer()
        }
        Real::Approx(b) => (b * &BigReal::from_i64(q as i64, b.precision())).round_to_int(),
    }
}

/// Smallest `q ≤ q_max` with `max_i ‖qβ_i‖ < (M/(M+1))·q^{−1/M}`.
pub fn minkowski_witness(beta: &[Real], q_max: u64) -> Result<WitnessSearch> {
    if beta.is_empty() || q_max == 0 {
        return Err(Error::InvalidArgument(
            "witness search needs coordinates and q_max ≥ 1".into(),
        ));
    }
    let m = beta.len();
    let pts = points(beta);
    let inv_m = 1.0 / m as f64;
    let bound = m as f64 / (m as f64 + 1.0);
    let mut best = (0u64, f64::INFINITY);
    for q in 1..=q_max {
        let s = score(&pts, q, inv_m);
        if s < best.1 {
            best = (q, s);
        }
        if s < bound {
            let p = beta.iter().map(|x| nearest_multiple(x, q)).collect();
            return Ok(WitnessSearch {
                m,
                q_max,
                bound,
                witness: Some(MinkowskiWitness { q, p, score: s }),
                best_q: q,
                best_score: s,
            });
        }
    }
    Ok(WitnessSearch {
        m,
        q_max,
        bound,
        witness: None,
        best_q: best.0,
        best_score: best.1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfAuditEntry {
    pub coordinate: usize,
    /// Largest partial quotient `a_k, k ≥ 1` over the certified prefix, as a decimal string.
    pub max_partial_quotient: String,
    pub certified_depth: usize,
    /// `max q_n / q_{n−1}` over the certified convergents.
    pub q_bar: f64,
    pub precision_exhausted: bool,
    pub terminated: bool,
}

pub fn cf_audit(beta: &[Real], depth: usize) -> Result<Vec<CfAuditEntry>> {
    beta.iter()
        .enumerate()
        .map(|(i, x)| {
            let cf = x.continued_fraction(depth)?;
            Ok(CfAuditEntry {
                coordinate: i,
                max_partial_quotient: cf.max_quotient().map(ToString::to_string).unwrap_or_else(|| "0".into()),
                certified_depth: cf.depth(),
                q_bar: cf.max_denominator_ratio(),
                precision_exhausted: cf.precision_exhausted,
                terminated: cf.terminated,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlephReport {
    pub j: u32,
    pub k: u32,
    pub r0: f64,
    pub m: usize,
    /// `|Ω_j|`, counting both signs.
    pub omega_size: u64,
    pub value: f64,
    pub positive_half: f64,
    pub negative_half: f64,
}

/// `Ω_j ∩ ℕ = {l : 2^j ≤ l ≤ 2^{j+r₀}}`.
pub fn omega_range(j: u32, r0: f64) -> (u64, u64) {
    let lo = 1u64 << j;
    let hi = 2f64.powf(j as f64 + r0).floor() as u64;
    (lo, hi.max(lo - 1))
}

fn aleph_half(pts: &[TorusPoint], lo: u64, hi: u64, k: u32, sign: i64) -> Result<f64> {
    let mut sum = 0.0;
    for l in lo..=hi {
        let ls = sign * l as i64;
        let mut s2 = 0.0;
        let mut all_zero = true;
        for p in pts {
            let t = p.scale(ls);
            all_zero &= t.is_zero();
            s2 += t.dist().powi(2);
        }
        if all_zero || s2 == 0.0 {
            return Err(Error::Resonance { m: ls });
        }
        sum += s2.powi(-(k as i32));
    }
    Ok(sum)
}

/// `ℵ_k(j, M) = Σ_{l ∈ Ω_j} (Σ_i ‖lβ_i‖²)^{−k}`.
pub fn aleph(beta: &[Real], j: u32, k: u32, r0: f64) -> Result<AlephReport> {
    if beta.is_empty() {
        return Err(Error::InvalidArgument("aleph needs at least one coordinate".into()));
    }
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!("k must be in 1..=4, got {k}")));
    }
    if !(r0 > 0.0) || j > 40 {
        return Err(Error::InvalidArgument("need r0 > 0 and j ≤ 40".into()));
    }
    let pts = points(beta);
    let (lo, hi) = omega_range(j, r0);
    let positive_half = aleph_half(&pts, lo, hi, k, 1)?;
    let negative_half = aleph_half(&pts, lo, hi, k, -1)?;
    Ok(AlephReport {
        j,
        k,
        r0,
        m: beta.len(),
        omega_size: 2 * (hi + 1 - lo),
        value: positive_half + negative_half,
        positive_half,
        negative_half,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthFit {
    /// Slope of `log₂(ℵ_k(j)/j)` against `j`.
    pub exponent: f64,
    pub intercept: f64,
    pub points: Vec<(u32, f64)>,
}

/// Least-squares exponent of `ℵ(j)/j` from `(j, ℵ(j))` samples.
pub fn fit_growth(points: &[(u32, f64)]) -> Result<GrowthFit> {
    if points.len() < 5 {
        return Err(Error::InsufficientPoints {
            needed: 5,
            got: points.len(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|&(j, _)| j as f64).collect();
    let ys: Vec<f64> = points.iter().map(|&(j, v)| (v / j as f64).log2()).collect();
    let fit = linear_fit(&xs, &ys).ok_or(Error::InsufficientPoints {
        needed: 5,
        got: points.len(),
    })?;
    Ok(GrowthFit {
        exponent: fit.slope,
        intercept: fit.intercept,
        points: points.to_vec(),
    })
}

pub fn aleph_growth_fit(beta: &[Real], k: u32, j_range: std::ops::RangeInclusive<u32>, r0: f64) -> Result<GrowthFit> {
    let js: Vec<u32> = j_range.collect();
    let values: Vec<Result<(u32, f64)>> = js
        .par_iter()
        .map(|&j| aleph(beta, j, k, r0).map(|r| (j, r.value)))
        .collect();
    let points = values.into_iter().collect::<Result<Vec<_>>>()?;
    fit_growth(&points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::BigReal;
    use proptest::prelude::*;

    fn golden_conjugate() -> Real {
        let five = BigReal::from_i64(5, 256).sqrt().unwrap();
        Real::Approx(&(&five - &BigReal::from_i64(1, 256)) / &BigReal::from_i64(2, 256))
    }

    fn sqrt2() -> Real {
        Real::Approx(BigReal::from_i64(2, 256).sqrt().unwrap())
    }

    #[test]
    fn rational_pair_scores_zero_at_twelve() {
        let beta = [Real::from_ratio(1, 4), Real::from_ratio(1, 3)];
        let r = badness_scan(&beta, 100).unwrap();
        assert_eq!(r.min_score, 0.0);
        assert_eq!(r.argmin_q, 12);
    }

    #[test]
    fn golden_ratio_minimum_is_at_q1() {
        let r = badness_scan(&[golden_conjugate()], 10_000).unwrap();
        assert_eq!(r.argmin_q, 1);
        assert!((r.min_score - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
        assert_eq!(r.curve.len(), 1);
    }

    /// Brute force in plain doubles for small q.
    fn brute_min(beta: &[f64], q_max: u64) -> (u64, f64) {
        let m = beta.len() as f64;
        (1..=q_max)
            .map(|q| {
                let d = beta.iter().map(|b| {
                    let x = q as f64 * b;
                    (x - x.round()).abs()
                });
                (q, (q as f64).powf(1.0 / m) * d.fold(0.0, f64::max))
            })
            .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc })
    }

    #[test]
    fn scan_agrees_with_double_brute_force() {
        let beta = [std::f64::consts::FRAC_1_PI, std::f64::consts::FRAC_1_SQRT_2];
        let reals: Vec<Real> = beta.iter().map(|&b| Real::Approx(BigReal::from_f64(b, 128))).collect();
        let r = badness_scan(&reals, 5000).unwrap();
        let (q, s) = brute_min(&beta, 5000);
        assert_eq!(r.argmin_q, q);
        assert!((r.min_score - s).abs() < 1e-9);
    }

    #[test]
    fn curve_is_strictly_decreasing() {
        let r = badness_scan(&[sqrt2(), golden_conjugate()], 50_000).unwrap();
        for w in r.curve.windows(2) {
            assert!(w[1].1 < w[0].1 && w[1].0 > w[0].0);
        }
    }

    #[test]
    fn minkowski_examples() {
        let half = [Real::Approx(BigReal::parse("0.5", 128).unwrap())];
        let w = minkowski_witness(&half, 10).unwrap().witness.unwrap();
        assert_eq!(w.q, 2);
        assert_eq!(w.p, vec![BigInt::from(1)]);
        assert_eq!(w.score, 0.0);

        let w = minkowski_witness(&[golden_conjugate()], 10).unwrap().witness.unwrap();
        assert_eq!(w.q, 1);
        assert_eq!(w.p, vec![BigInt::from(1)]);
        assert!(w.score < 0.5);
    }

    #[test]
    fn audit_examples() {
        let s2m1 = Real::Approx(&BigReal::from_i64(2, 256).sqrt().unwrap() - &BigReal::from_i64(1, 256));
        let a = cf_audit(&[s2m1], 30).unwrap();
        assert_eq!(a[0].max_partial_quotient, "2");
        let five = BigReal::from_i64(5, 256).sqrt().unwrap();
        let phi = Real::Approx(&(&five + &BigReal::from_i64(1, 256)) / &BigReal::from_i64(2, 256));
        assert_eq!(cf_audit(&[phi], 30).unwrap()[0].max_partial_quotient, "1");

        let near =
            &BigReal::from_ratio(&BigInt::from(355), &BigInt::from(113), 256) + &BigReal::parse("1e-30", 256).unwrap();
        let a = cf_audit(&[Real::Approx(near)], 10).unwrap();
        let max: BigInt = a[0].max_partial_quotient.parse().unwrap();
        assert!(max >= BigInt::from(15));
    }

    #[test]
    fn aleph_sqrt2_oracle() {
        // direct summation over l = ±4..±8 in doubles
        let oracle: f64 = (4..=8)
            .map(|l| {
                let x = l as f64 * 2f64.sqrt();
                let d = (x - x.round()).abs();
                2.0 / (d * d)
            })
            .sum();
        let r = aleph(&[sqrt2()], 2, 1, 1.0).unwrap();
        assert_eq!(r.omega_size, 10);
        assert!((r.value - oracle).abs() < 1e-9 * oracle);
        assert_eq!(r.positive_half, r.negative_half);
    }

    #[test]
    fn aleph_resonance_on_rational() {
        let err = aleph(&[Real::from_ratio(1, 3)], 2, 1, 1.0).unwrap_err();
        assert!(matches!(err, Error::Resonance { m: 6 }));
    }

    #[test]
    fn growth_fit_recovers_plant() {
        let pts: Vec<(u32, f64)> = (6..=14).map(|j| (j, j as f64 * 2f64.powf(1.5 * j as f64))).collect();
        let fit = fit_growth(&pts).unwrap();
        assert!((fit.exponent - 1.5).abs() < 1e-12);
        assert!(fit_growth(&pts[..4]).is_err());
    }

    #[test]
    fn scan_requires_positive_qmax() {
        assert!(badness_scan(&[sqrt2()], 0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn scan_is_monotone_in_qmax(a in 0.0f64..1.0, b in 0.0f64..1.0, q1 in 1u64..3000, extra in 0u64..3000) {
            let beta = [Real::Approx(BigReal::from_f64(a, 128)), Real::Approx(BigReal::from_f64(b, 128))];
            let r1 = badness_scan(&beta, q1).unwrap();
            let r2 = badness_scan(&beta, q1 + extra).unwrap();
            prop_assert!(r2.min_score <= r1.min_score);
        }

        #[test]
        fn rational_tuples_reach_zero_by_lcm(p1 in 0i64..50, q1 in 1i64..50, p2 in 0i64..50, q2 in 1i64..50) {
            let beta = [Real::from_ratio(p1, q1), Real::from_ratio(p2, q2)];
            let lcm = num_integer::lcm(q1, q2) as u64;
            let r = badness_scan(&beta, lcm).unwrap();
            prop_assert_eq!(r.min_score, 0.0);
            prop_assert!(r.argmin_q <= lcm);
        }

        #[test]
        fn aleph_halves_are_symmetric(a in 0.001f64..0.999, j in 2u32..8) {
            let beta = [Real::Approx(BigReal::from_f64(a, 128))];
            if let Ok(r) = aleph(&beta, j, 1, default_r0()) {
                prop_assert_eq!(r.positive_half, r.negative_half);
            }
        }
    }
}
