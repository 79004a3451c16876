//! Exit criteria. Each test prints one `criterion N: PASS|FAIL` line.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use badeconv::construct::{construct_ba_tuple, ConstructOptions};
use badeconv::diophantine::{aleph_growth_fit, badness_scan, default_r0, minkowski_witness};
use badeconv::estimator::{
    checked_theory_levels, estimate, estimate_coefficients, make_config, theory_levels, EstimatorConfig, Mode,
};
use badeconv::fourier::Spectrum;
use badeconv::meyer::{
    analysis, band_set, coeff_fourier, project_onto_scaling, required_half_width, synthesis_spectrum,
};
use badeconv::model::{make_design, simulate, tau1, ChannelDesign, DesignKind, KernelProfile};
use badeconv::precision::{parse_rational, BigReal, Real, TorusPoint};
use badeconv::risk::{mc_risk, per_channel, rate_fit, RiskRow, RiskSettings};
use badeconv::signals::Signal;
use badeconv::theory::{alpha_n, choose_m, nu_opt, TheoryParams};
use badeconv::Error;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn verdict(criterion: u32, ok: bool, detail: impl AsRef<str>) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {tag}  {}", detail.as_ref());
    assert!(ok, "criterion {criterion} failed: {}", detail.as_ref());
}

fn q(s: &str) -> BigRational {
    parse_rational(s).unwrap()
}

/// Tuples live on (1/2, 1); channels on [1/4, 1/2].
fn tuple_interval() -> (BigRational, BigRational) {
    (q("1/2"), q("1"))
}

fn channel_interval() -> (BigRational, BigRational) {
    (q("1/4"), q("1/2"))
}

fn golden() -> Real {
    let p = 256;
    let five = BigReal::from_i64(5, p).sqrt().unwrap();
    Real::Approx(&(&five - &BigReal::from_i64(1, p)) / &BigReal::from_i64(2, p))
}

fn ba_design(m: usize) -> ChannelDesign {
    let (ta, tb) = tuple_interval();
    let (a, b) = channel_interval();
    let t = construct_ba_tuple(m, &ta, &tb, ConstructOptions::default()).unwrap();
    make_design(DesignKind::BaTuple, m, &a, &b, Some(&t)).unwrap()
}

fn design(kind: DesignKind, m: usize) -> ChannelDesign {
    let (a, b) = channel_interval();
    make_design(kind, m, &a, &b, None).unwrap()
}

fn profile() -> KernelProfile {
    KernelProfile::boxcar(0.25, 0.5)
}

#[test]
fn criterion_01_construction_suite() {
    let (a, b) = tuple_interval();
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    for m in 1..=6 {
        let start = Instant::now();
        let opts = ConstructOptions {
            precision_bits: Some(512),
            ..ConstructOptions::default()
        };
        let tuple = match construct_ba_tuple(m, &a, &b, opts) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("M={m}: {e}"));
                continue;
            }
        };
        let elapsed = start.elapsed();
        slowest = slowest.max(elapsed);
        let r = tuple.check_invariants();
        let checks = [
            ("brackets", r.brackets_hold),
            ("residuals", r.residuals_within_tolerance),
            ("re-expansion", r.reexpansion_within_tolerance),
            ("alpha bound", r.alpha_bound_holds),
            ("beta in [a,b)", r.beta_in_interval),
        ];
        for (name, ok) in checks {
            if !ok {
                failures.push(format!("M={m}: {name}"));
            }
        }
        // independent of the report: β ∈ [a, b) from the decimal rendering
        for beta in &tuple.beta {
            let v = q(&beta.to_decimal(60));
            if v < a || v >= b {
                failures.push(format!("M={m}: β = {} outside [a, b)", beta.to_decimal(12)));
            }
        }
        if elapsed > Duration::from_secs(10) {
            failures.push(format!("M={m}: {elapsed:?} > 10 s"));
        }
    }
    verdict(
        1,
        failures.is_empty(),
        format!("M=1..6 at 512 bits, slowest {slowest:?}; failures {failures:?}"),
    );
}

/// `min_{q ≤ q_max} q·‖qx‖` in plain floating point.
fn golden_oracle(q_max: u64) -> f64 {
    let x = (5f64.sqrt() - 1.0) / 2.0;
    (1..=q_max)
        .map(|q| {
            let t = (q as f64 * x).fract();
            q as f64 * t.min(1.0 - t)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_02_badness() {
    let rational = badness_scan(&[Real::from_ratio(1, 4), Real::from_ratio(1, 3)], 100_000).unwrap();
    let gold = badness_scan(&[golden()], 10_000).unwrap();
    let oracle = golden_oracle(10_000);
    let (a, b) = tuple_interval();
    let pinned = [(2usize, 0.0023698438293964317, 256u64), (3, 0.1024169399938457, 2)];
    let mut constructed = Vec::new();
    let mut pins_ok = true;
    for (m, expect, at) in pinned {
        let t = construct_ba_tuple(m, &a, &b, ConstructOptions::default()).unwrap();
        let r = badness_scan(&t.beta_reals(), 100_000).unwrap();
        pins_ok &= r.min_score > 0.0 && ((r.min_score - expect) / expect).abs() < 1e-9 && r.argmin_q == at;
        constructed.push((m, r.min_score, r.argmin_q));
    }
    let ok = rational.min_score == 0.0
        && (gold.min_score - 0.381966).abs() <= 1e-6
        && (gold.min_score - oracle).abs() <= 1e-9
        && pins_ok;
    verdict(
        2,
        ok,
        format!(
            "rational {} (q={}); golden {:.9} vs oracle {:.9}; constructed {constructed:?}",
            rational.min_score, rational.argmin_q, gold.min_score, oracle
        ),
    );
}

fn random_tuple(rng: &mut ChaCha20Rng, m: usize) -> Vec<Real> {
    let den = BigInt::from(1u8) << 192;
    (0..m)
        .map(|_| {
            let mut bytes = [0u8; 24];
            rng.fill_bytes(&mut bytes);
            let num = BigInt::from_bytes_le(num_bigint::Sign::Plus, &bytes);
            Real::Approx(BigReal::from_ratio(&num, &den, 256))
        })
        .collect()
}

#[test]
fn criterion_03_minkowski_witnesses() {
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let mut found = [0usize; 3];
    for m in 1..=3 {
        for _ in 0..20 {
            let beta = random_tuple(&mut rng, m);
            let w = minkowski_witness(&beta, 100_000).unwrap();
            if let Some(wit) = &w.witness {
                // independent recheck of the inequality
                let qf = wit.q as f64;
                let worst = beta
                    .iter()
                    .zip(&wit.p)
                    .map(|(x, p)| (qf * x.to_f64() - p.to_string().parse::<f64>().unwrap()).abs())
                    .fold(0.0, f64::max);
                if qf.powf(1.0 / m as f64) * worst <= m as f64 / (m as f64 + 1.0) + 1e-9 {
                    found[m - 1] += 1;
                }
            }
        }
    }
    verdict(
        3,
        found == [20, 20, 20],
        format!("witnesses found per M=1,2,3: {found:?} of 20"),
    );
}

#[test]
fn criterion_04_sine_distance_sandwich() {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut worst_lower: f64 = f64::INFINITY;
    let mut worst_upper: f64 = f64::INFINITY;
    for _ in 0..100_000 {
        let m = (rng.next_u64() % 100_000) as i64 + 1;
        let den = (rng.next_u64() % 1_000_000) as i64 + 2;
        let num = (rng.next_u64() % den as u64) as i64;
        // 2mu mod 1 exactly, then the circle distance
        let r = ((2 * m as i128 * num as i128).rem_euclid(den as i128)) as f64 / den as f64;
        let dist = r.min(1.0 - r);
        let reduced = ((m as i128 * num as i128).rem_euclid(den as i128)) as f64 / den as f64;
        let s2 = (2.0 * PI * reduced).sin().powi(2);
        worst_lower = worst_lower.min(s2 - 4.0 * dist * dist + 1e-12);
        worst_upper = worst_upper.min(PI * PI * dist * dist - s2 + 1e-12);
        let exact = TorusPoint::from_real(&Real::from_ratio(
            ((2 * m as i128 * num as i128) % den as i128) as i64,
            den,
        ))
        .dist();
        assert!((exact - dist).abs() < 1e-15);
    }
    let p = profile();
    let cap = p.gamma2 * p.gamma2 / (4.0 * PI * PI);
    let designs = [
        ba_design(2),
        ba_design(3),
        ba_design(4),
        design(DesignKind::Uniform, 3),
        design(DesignKind::Single, 1),
        design(DesignKind::Rational, 4),
    ];
    let mut worst_decay: f64 = 0.0;
    for d in &designs {
        for m in 1..=20_000i64 {
            worst_decay = worst_decay.max(tau1(m, d, &p) * (m * m) as f64 / cap);
        }
    }
    let ok = worst_lower >= 0.0 && worst_upper >= 0.0 && worst_decay <= 1.0;
    verdict(
        4,
        ok,
        format!(
            "10^5 draws: lower margin {worst_lower:.3e}, upper margin {worst_upper:.3e}; max τ₁m²/cap {worst_decay:.6}"
        ),
    );
}

fn random_spectrum(rng: &mut ChaCha20Rng, half: usize) -> Spectrum {
    let mut unit = || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    let mut s = Spectrum::zeros(half);
    s.set(0, Complex64::new(unit(), 0.0));
    for m in 1..=half as i64 {
        let c = Complex64::new(unit(), unit()) / (m as f64);
        s.set(m, c);
        s.set(-m, c.conj());
    }
    s
}

/// `ψ̂` support straight from the definition: nonzero amplitude strictly inside `1/3 < |ξ| < 4/3`.
fn brute_band(j: u32) -> Vec<i64> {
    let scale = (1u64 << j) as f64;
    let lim = 1i64 << (j + 2);
    (-lim..=lim)
        .filter(|&m| {
            let xi = (m as f64 / scale).abs();
            let open = 3 * m.abs() > (1 << j) && 3 * m.abs() < (1 << (j + 2));
            let nu = |t: f64| t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3));
            let amp = if xi <= 2.0 / 3.0 {
                (PI / 2.0 * nu(3.0 * xi - 1.0)).sin()
            } else {
                (PI / 2.0 * nu(1.5 * xi - 1.0)).cos()
            };
            open && amp > 0.0
        })
        .collect()
}

#[test]
fn criterion_05_meyer_machinery() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst_parseval: f64 = 0.0;
    let mut worst_roundtrip: f64 = 0.0;
    for _ in 0..100 {
        let j_max = 1 + (rng.next_u64() % 10) as u32;
        let j0 = (rng.next_u64() % j_max as u64) as u32;
        let f = random_spectrum(&mut rng, required_half_width(j0, j_max) + 5);
        let c = analysis(&f, j0, j_max).unwrap();
        let projected = project_onto_scaling(&f, j_max);
        worst_parseval = worst_parseval.max((c.energy() - projected.energy()).abs());
        worst_roundtrip = worst_roundtrip.max(synthesis_spectrum(&c).distance_sq(&projected).sqrt());
    }
    let mut worst_norm: f64 = 0.0;
    for j in 0..=14u32 {
        let cap = 2f64.powf(-(j as f64) / 2.0) * (1.0 + 1e-12);
        for k in [0u64, 1, (1 << j) - 1, (1 << j) / 3] {
            for &m in &band_set(j) {
                worst_norm = worst_norm.max(coeff_fourier(j, k, m).norm() / cap);
            }
        }
    }
    let bands_match = (0..=14).all(|j| band_set(j) == brute_band(j));
    let ok = worst_parseval <= 1e-8 && worst_roundtrip <= 1e-8 && worst_norm <= 1.0 && bands_match;
    verdict(
        5,
        ok,
        format!(
            "Parseval {worst_parseval:.2e}, round trip {worst_roundtrip:.2e}, max |ψ|/cap {worst_norm:.15}, bands match {bands_match}"
        ),
    );
}

#[test]
fn criterion_06_estimator() {
    let d = ba_design(2);
    let p = profile();

    // noiseless inversion, every threshold at zero
    let trig = Signal::by_id("trig").unwrap();
    let n = 1 << 12;
    let config = EstimatorConfig::with_levels(Mode::Practical, &d, &p, n, 0.0, 1.0, 3, 9)
        .unwrap()
        .without_thresholds();
    let data = simulate(&d, &p, &trig, n, 0.0, 1).unwrap();
    let est = estimate(&data, &config).unwrap();
    let recon_err = trig.l2_distance_sq(&synthesis_spectrum(&est.coeffs_thresholded)).sqrt();

    // per-level variance against Monte Carlo
    let zero = Signal::by_id("zero").unwrap();
    let n = 1 << 15;
    let levels = EstimatorConfig::with_levels(Mode::Practical, &d, &p, n, 1.0, 1.0, 2, 7).unwrap();
    let reps = 2000;
    let mut sums = vec![0.0; (levels.j_max - levels.j0) as usize];
    for r in 0..reps {
        let data = simulate(&d, &p, &zero, n, 1.0, 10_000 + r).unwrap();
        let raw = estimate_coefficients(&data, &levels).unwrap().raw;
        for j in levels.j0..levels.j_max {
            let lvl = raw.level(j);
            sums[(j - levels.j0) as usize] += lvl.iter().map(|c| c.norm_sqr()).sum::<f64>() / lvl.len() as f64;
        }
    }
    let ratios: Vec<(u32, f64)> = (levels.j0..levels.j_max)
        .map(|j| (j, sums[(j - levels.j0) as usize] / reps as f64 / levels.variances[&j]))
        .collect();
    let variance_ok = ratios.iter().all(|(_, r)| (r - 1.0).abs() <= 0.15);

    // survival under pure noise at n = 2^16
    let practical = make_config(Mode::Practical, &d, &p, n, 1.0, 1.0).unwrap();
    let survival_reps = 200;
    let mut kept = vec![0.0; (practical.j_max - practical.j0) as usize];
    for r in 0..survival_reps {
        let data = simulate(&d, &p, &zero, n, 1.0, 50_000 + r).unwrap();
        let res = estimate(&data, &practical).unwrap();
        for (j, s) in &res.survival {
            kept[(j - practical.j0) as usize] += s / survival_reps as f64;
        }
    }
    let survival_ok = kept.iter().all(|&s| s <= 0.02);

    let ok = recon_err <= 1e-8 && variance_ok && survival_ok;
    verdict(
        6,
        ok,
        format!(
            "noiseless L² error {recon_err:.2e}; MC/formula variance {ratios:?}; survival at n=2^16 (levels {}..{}) {kept:?}",
            practical.j0, practical.j_max
        ),
    );
}

#[test]
fn criterion_07_theory_degeneracy() {
    let (n_m, j0, j_max) = theory_levels(1_000_000, 2);
    let raised = matches!(checked_theory_levels(1_000_000, 2), Err(Error::DegenerateTheory { .. }));
    // the same rejection through the configuration path at the nearest admissible size
    let d = ba_design(2);
    let via_config = matches!(
        make_config(Mode::Theory, &d, &profile(), 1 << 19, 1.0, 4.0),
        Err(Error::DegenerateTheory { .. })
    );
    let ok = (n_m - 122.07).abs() < 0.01 && j_max < j0 && raised && via_config;
    verdict(
        7,
        ok,
        format!("n=10^6, M=2: n_M = {n_m:.4}, j0 = {j0}, J = {j_max}; error raised {raised}/{via_config}"),
    );
}

#[test]
fn criterion_08_aleph_growth() {
    let start = Instant::now();
    let (a, b) = tuple_interval();
    let r0 = default_r0();
    let mut fits = Vec::new();
    let mut ok = true;
    for m in [2usize, 3] {
        let t = construct_ba_tuple(m, &a, &b, ConstructOptions::default()).unwrap();
        let fit = aleph_growth_fit(&t.beta_reals(), 1, 6..=14, r0).unwrap();
        ok &= fit.exponent <= 1.0 + 1.0 / m as f64 + 0.25;
        fits.push((m, fit.exponent));
    }
    let gold = aleph_growth_fit(&[golden()], 1, 6..=14, r0).unwrap();
    ok &= gold.exponent <= 2.25;
    let elapsed = start.elapsed();
    ok &= elapsed <= Duration::from_secs(60);
    verdict(
        8,
        ok,
        format!("exponents (M, e) {fits:?}; golden {:.4}; {elapsed:?}", gold.exponent),
    );
}

fn risk_table(d: &ChannelDesign, signal: &Signal, grid: &[u64], settings: &RiskSettings) -> Vec<RiskRow> {
    grid.iter()
        .map(|&n| mc_risk(d, &profile(), signal, per_channel(n, d.m()).unwrap(), settings).unwrap())
        .collect()
}

#[test]
fn criterion_09_risk_benchmark() {
    let start = Instant::now();
    let signal = Signal::by_id("trig").unwrap();
    let grid: Vec<u64> = (14..=20).map(|k| 1u64 << k).collect();
    let settings = RiskSettings {
        mode: Mode::Practical,
        eta: 1.0,
        noise_sd: 1.0,
        reps: 200,
        seed: 9,
    };

    let ba2 = risk_table(&ba_design(2), &signal, &grid, &settings);
    let ba4 = risk_table(&ba_design(4), &signal, &grid, &settings);
    let single = risk_table(&design(DesignKind::Single, 1), &signal, &grid, &settings);
    let rational = risk_table(&design(DesignKind::Rational, 4), &signal, &grid, &settings);
    for rows in [&ba2, &ba4, &single, &rational] {
        println!(
            "  {:>9} M={}: {}",
            rows[0].design,
            rows[0].m,
            rows.iter()
                .map(|r| format!("{:.3e}±{:.1e}", r.risk, r.stderr))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }

    let fit = rate_fit(&ba2).unwrap();
    let slope_ok = (-1.0..=-0.4).contains(&fit.slope) && !fit.unreliable;
    let ordering: Vec<bool> = ba4
        .iter()
        .zip(&single)
        .map(|(b, s)| b.risk <= s.risk + 2.0 * (b.stderr.powi(2) + s.stderr.powi(2)).sqrt())
        .collect();
    let ordering_ok = ordering.iter().all(|&x| x);
    let rational_fit = rate_fit(&rational).unwrap();
    let last = grid.len() - 1;
    let dominating = rational[last].risk > ba4[last].risk.max(single[last].risk);
    let rational_ok = rational_fit.unreliable && rational.iter().all(|r| r.resonant_reps == r.reps) && dominating;
    let elapsed = start.elapsed();
    let time_ok = elapsed <= Duration::from_secs(30 * 60);

    verdict(
        9,
        slope_ok && ordering_ok && rational_ok && time_ok,
        format!(
            "BA-2 slope {:.3}±{:.3} (in [-1,-0.4]: {slope_ok}); BA-4 ≤ single within 2 SE per n {ordering:?}; \
             rational flagged {} and dominating at n=2^20 {dominating}; {elapsed:?}",
            fit.slope, fit.stderr, rational_fit.unreliable
        ),
    );
}

#[test]
fn criterion_10_theory_calculators() {
    let m = choose_m(1e6, 1.0 / 6f64.sqrt()).unwrap();
    let mut worst_gap: f64 = 0.0;
    for (s, p) in [(1.0, 2.0), (0.5, 4.0), (2.0, 1.5), (1.0, 1.0), (3.0, f64::INFINITY)] {
        let base = TheoryParams::new(s, p, 2.0, 1.0, 1.0).unwrap();
        let opt = base.with_nu(nu_opt(&base)).unwrap();
        let a = alpha_n(1e9, &opt).unwrap();
        worst_gap = worst_gap.max((a.bracket.0 - a.bracket.1).abs());
    }

    // α_n/n^0.01 must shrink and α_n/(ln n)^10 must grow along n = 2^20..2^60
    let base = TheoryParams::new(1.0, 2.0, 2.0, 1.0, 1.0).unwrap();
    let params = base.with_nu(nu_opt(&base)).unwrap();
    let ln_ratios: Vec<(i32, f64, f64)> = (20..=60)
        .map(|k| {
            let n = 2f64.powi(k);
            let ln_alpha = alpha_n(n, &params).unwrap().ln_value;
            (k, ln_alpha - 0.01 * n.ln(), ln_alpha - 10.0 * n.ln().ln())
        })
        .collect();
    let shrinks = ln_ratios.windows(2).all(|w| w[1].1 < w[0].1);
    let grows = ln_ratios.windows(2).all(|w| w[1].2 > w[0].2);
    let (first, last) = (ln_ratios[0], ln_ratios[ln_ratios.len() - 1]);

    let ok = m == 1 && worst_gap <= 1e-12 && shrinks && grows;
    verdict(
        10,
        ok,
        format!(
            "choose_M = {m}; bracket gap {worst_gap:.1e}; ln(α/n^0.01) {:.2} → {:.2} (shrinks {shrinks}); \
             ln(α/(ln n)^10) {:.2} → {:.2} (grows {grows})",
            first.1, last.1, first.2, last.2
        ),
    );
}
