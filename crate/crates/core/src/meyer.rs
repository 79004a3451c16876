//! Periodized Meyer wavelets, handled entirely through Fourier coefficients.
//!
//! `ψ_jk` has Fourier coefficients `ψ_mjk = 2^{−j/2} e^{−2πimk/2^j} ψ̂(2πm/2^j)`, so
//! the coefficient `b_jk = Σ_m f_m conj(ψ_mjk)` at one level is an inverse DFT of
//! the band-limited, 2^j-folded spectrum, and synthesis is the matching forward DFT.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{fft_forward, fft_inverse, Spectrum};

/// Smooth step `ν(t) = t⁴(35 − 84t + 70t² − 20t³)`, clamped to `[0, 1]`.
pub fn smoothing(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3))
}

/// `φ̂` at the normalized frequency `ξ = ω/2π`.
fn phi_amp(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 / 3.0 {
        1.0
    } else if a < 2.0 / 3.0 {
        (FRAC_PI_2 * smoothing(3.0 * a - 1.0)).cos()
    } else {
        0.0
    }
}

/// `|ψ̂|` at the normalized frequency `ξ = ω/2π`.
fn psi_amp(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 / 3.0 || a >= 4.0 / 3.0 {
        0.0
    } else if a <= 2.0 / 3.0 {
        (FRAC_PI_2 * smoothing(3.0 * a - 1.0)).sin()
    } else {
        (FRAC_PI_2 * smoothing(1.5 * a - 1.0)).cos()
    }
}

/// `(ψ̂(ω), φ̂(ω))` of the Meyer pair.
pub fn meyer_hat(omega: f64) -> (Complex64, f64) {
    let xi = omega / (2.0 * PI);
    let psi = Complex64::from_polar(psi_amp(xi), omega / 2.0);
    (psi, phi_amp(xi))
}

/// `ψ̂(2πm/2^j)`, exactly zero outside the open band `2^j < 3|m| < 2^{j+2}`.
pub fn psi_hat_at(m: i64, j: u32) -> Complex64 {
    let three_m = 3 * m.unsigned_abs() as u128;
    if three_m <= 1u128 << j || three_m >= 1u128 << (j + 2) {
        return Complex64::new(0.0, 0.0);
    }
    let xi = m as f64 / (1u64 << j) as f64;
    Complex64::from_polar(psi_amp(xi), PI * xi)
}

/// `φ̂(2πm/2^j)`: exactly 1 for `3|m| ≤ 2^j`, exactly 0 for `3|m| ≥ 2^{j+1}`.
pub fn phi_hat_at(m: i64, j: u32) -> f64 {
    let three_m = 3 * m.unsigned_abs() as u128;
    if three_m <= 1u128 << j {
        1.0
    } else if three_m >= 1u128 << (j + 1) {
        0.0
    } else {
        phi_amp(m as f64 / (1u64 << j) as f64)
    }
}

/// `C_j`: frequencies where `ψ_mjk ≠ 0`, increasing.
pub fn band_set(j: u32) -> Vec<i64> {
    let hi = band_limit(j);
    let pos: Vec<i64> = (1..=hi).filter(|&m| 3 * m > 1 << j).collect();
    pos.iter().rev().map(|m| -m).chain(pos.iter().copied()).collect()
}

/// Largest `|m|` in `C_j`.
pub fn band_limit(j: u32) -> i64 {
    ((1i64 << (j + 2)) - 1) / 3
}

/// Frequencies where `φ_mjk ≠ 0`.
pub fn scaling_band(j: u32) -> Vec<i64> {
    let hi = scaling_limit(j);
    (-hi..=hi).collect()
}

pub fn scaling_limit(j: u32) -> i64 {
    ((1i64 << (j + 1)) - 1) / 3
}

/// `2^{−j}|C_j|`.
pub fn c_psi(j: u32) -> f64 {
    band_set(j).len() as f64 / (1u64 << j) as f64
}

fn phase(m: i64, k: u64, j: u32) -> Complex64 {
    let period = 1i128 << j;
    let r = (m as i128 * k as i128).rem_euclid(period) as f64;
    Complex64::from_polar(1.0, -2.0 * PI * r / period as f64)
}

/// `ψ_mjk = ⟨ψ_jk, e_m⟩`, the m-th Fourier coefficient of `ψ_jk`.
pub fn coeff_fourier(j: u32, k: u64, m: i64) -> Complex64 {
    let h = psi_hat_at(m, j);
    if h == Complex64::new(0.0, 0.0) {
        return h;
    }
    phase(m, k, j) * h * 2f64.powf(-(j as f64) / 2.0)
}

/// m-th Fourier coefficient of `φ_jk`.
pub fn scaling_fourier(j: u32, k: u64, m: i64) -> Complex64 {
    let h = phi_hat_at(m, j);
    if h == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    phase(m, k, j) * h * 2f64.powf(-(j as f64) / 2.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct MeyerBasis {
    pub j0: u32,
    pub j_max: u32,
    pub band_sets: BTreeMap<u32, Vec<i64>>,
    pub c_psi: BTreeMap<u32, f64>,
}

impl MeyerBasis {
    pub fn new(j0: u32, j_max: u32) -> Result<Self> {
        check_levels(j0, j_max)?;
        let band_sets: BTreeMap<u32, Vec<i64>> = (j0..j_max).map(|j| (j, band_set(j))).collect();
        let c_psi = band_sets
            .iter()
            .map(|(&j, c)| (j, c.len() as f64 / (1u64 << j) as f64))
            .collect();
        Ok(Self {
            j0,
            j_max,
            band_sets,
            c_psi,
        })
    }

    /// Largest `|m|` touched by the expansion.
    pub fn max_frequency(&self) -> i64 {
        required_half_width(self.j0, self.j_max) as i64
    }
}

fn check_levels(j0: u32, j_max: u32) -> Result<()> {
    if j_max < j0 || j_max > 30 {
        return Err(Error::InvalidArgument(format!(
            "need j0 ≤ J ≤ 30, got j0={j0}, J={j_max}"
        )));
    }
    Ok(())
}

/// Half width of the spectrum needed for levels `j0..J`.
pub fn required_half_width(j0: u32, j_max: u32) -> usize {
    let detail = if j_max > j0 { band_limit(j_max - 1) } else { 0 };
    scaling_limit(j0).max(detail) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    True,
    RawEstimate,
    Thresholded,
}

/// Scaling coefficients at `j0` and wavelet coefficients for `j0 ≤ j < J`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientSet {
    pub j0: u32,
    pub j_max: u32,
    /// `a_{j0,k}`, `k = 0..2^{j0}`.
    pub scaling: Vec<Complex64>,
    /// `detail[j − j0][k] = b_{jk}`.
    pub detail: Vec<Vec<Complex64>>,
    pub provenance: Provenance,
}

impl CoefficientSet {
    pub fn zeros(j0: u32, j_max: u32, provenance: Provenance) -> Self {
        Self {
            j0,
            j_max,
            scaling: vec![Complex64::new(0.0, 0.0); 1 << j0],
            detail: (j0..j_max).map(|j| vec![Complex64::new(0.0, 0.0); 1 << j]).collect(),
            provenance,
        }
    }

    pub fn level(&self, j: u32) -> &[Complex64] {
        &self.detail[(j - self.j0) as usize]
    }

    pub fn level_mut(&mut self, j: u32) -> &mut [Complex64] {
        &mut self.detail[(j - self.j0) as usize]
    }

    pub fn energy(&self) -> f64 {
        self.scaling
            .iter()
            .chain(self.detail.iter().flatten())
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Largest imaginary part over all coefficients.
    pub fn max_imag(&self) -> f64 {
        self.scaling
            .iter()
            .chain(self.detail.iter().flatten())
            .map(|c| c.im.abs())
            .fold(0.0, f64::max)
    }
}

/// Project a periodic band of `f` onto one level: `c_k = 2^{−j/2} Σ_m f_m conj(ĥ(m)) e^{2πimk/2^j}`.
fn project(f: &Spectrum, j: u32, band: &[i64], hat: impl Fn(i64) -> Complex64) -> Vec<Complex64> {
    let len = 1usize << j;
    let mut folded = vec![Complex64::new(0.0, 0.0); len];
    for &m in band {
        folded[m.rem_euclid(len as i64) as usize] += f.get(m) * hat(m).conj();
    }
    fft_inverse(&mut folded);
    let norm = 2f64.powf(-(j as f64) / 2.0);
    folded.iter_mut().for_each(|c| *c *= norm);
    folded
}

/// Coefficients of `f` against the periodized basis on levels `j0..J`.
pub fn analysis(f: &Spectrum, j0: u32, j_max: u32) -> Result<CoefficientSet> {
    check_levels(j0, j_max)?;
    let needed = required_half_width(j0, j_max);
    if f.half_width() < needed {
        return Err(Error::MissingBand { m: needed as i64 });
    }
    let mut out = CoefficientSet::zeros(j0, j_max, Provenance::True);
    out.scaling = project(f, j0, &scaling_band(j0), |m| Complex64::new(phi_hat_at(m, j0), 0.0));
    for j in j0..j_max {
        out.detail[(j - j0) as usize] = project(f, j, &band_set(j), |m| psi_hat_at(m, j));
    }
    Ok(out)
}

fn embed(c: &[Complex64], j: u32, band: &[i64], hat: impl Fn(i64) -> Complex64, out: &mut Spectrum) {
    let mut buf = c.to_vec();
    fft_forward(&mut buf);
    let norm = 2f64.powf(-(j as f64) / 2.0);
    let len = buf.len() as i64;
    for &m in band {
        out.add(m, buf[m.rem_euclid(len) as usize] * hat(m) * norm);
    }
}

/// Fourier coefficients of the finite expansion.
pub fn synthesis_spectrum(c: &CoefficientSet) -> Spectrum {
    let mut out = Spectrum::zeros(required_half_width(c.j0, c.j_max));
    embed(
        &c.scaling,
        c.j0,
        &scaling_band(c.j0),
        |m| Complex64::new(phi_hat_at(m, c.j0), 0.0),
        &mut out,
    );
    for j in c.j0..c.j_max {
        embed(c.level(j), j, &band_set(j), |m| psi_hat_at(m, j), &mut out);
    }
    out
}

/// Samples of the finite expansion at `t_i = i/grid_size`.
pub fn synthesis(c: &CoefficientSet, grid_size: usize) -> Result<Vec<f64>> {
    if !grid_size.is_power_of_two() || grid_size < 1 << (c.j_max + 3) {
        return Err(Error::AntiAliasing {
            n: grid_size,
            required: 1 << (c.j_max + 3),
        });
    }
    synthesis_spectrum(c).to_samples(grid_size)
}

/// Orthogonal projection of `f` onto the span of `{φ_Jk}`.
pub fn project_onto_scaling(f: &Spectrum, j_max: u32) -> Spectrum {
    let band = scaling_band(j_max);
    let hat = |m| Complex64::new(phi_hat_at(m, j_max), 0.0);
    let a = project(f, j_max, &band, hat);
    let mut out = Spectrum::zeros(scaling_limit(j_max) as usize);
    embed(&a, j_max, &band, hat, &mut out);
    out
}

/// Energy of `f` outside the span of levels below `J`.
pub fn parseval_tail(f: &Spectrum, j_max: u32) -> f64 {
    f.distance_sq(&project_onto_scaling(f, j_max))
}
