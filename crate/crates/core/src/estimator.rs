//! Fourier-domain inversion followed by hard thresholding of Meyer coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::Spectrum;
use crate::meyer::{self, band_set, coeff_fourier, CoefficientSet, Provenance};
use crate::model::{channel_dft, g_fourier, ChannelDesign, Dataset, KernelProfile};

/// Smallest reconstruction grid, `2^14` points.
pub const MIN_GRID_LOG2: u32 = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Theory,
    Practical,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(Mode::Theory),
            "practical" => Ok(Mode::Practical),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Theory => "theory",
            Mode::Practical => "practical",
        }
    }

    pub fn default_eta(self) -> f64 {
        match self {
            Mode::Theory => 4.0,
            Mode::Practical => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorConfig {
    pub mode: Mode,
    pub eta: f64,
    pub j0: u32,
    pub j_max: u32,
    /// `λ_j` for `j0 ≤ j < J`.
    pub lambdas: BTreeMap<u32, f64>,
    /// Effective sample size `(n/M)·M^{−6M}`.
    pub n_m: f64,
    pub n: u64,
    pub m: usize,
    pub n_per_channel: usize,
    pub noise_sd: f64,
    /// Per-level variance of `b̂_jk` (practical mode; resonant frequencies excluded).
    pub variances: BTreeMap<u32, f64>,
    /// Frequencies inside the estimated bands where every kernel coefficient vanishes.
    pub resonant: Vec<i64>,
}

/// `n_M = (n/M)·exp(−6M ln M)`.
pub fn effective_sample_size(n: u64, m: usize) -> f64 {
    let mf = m as f64;
    n as f64 / mf * (-6.0 * mf * mf.ln()).exp()
}

/// `(n_M, j0, J)` with `j0 = ⌈log₂ ln n⌉` and `J = ⌊log₂ n_M / (3 + 1/M)⌋`.
pub fn theory_levels(n: u64, m: usize) -> (f64, i32, i32) {
    let n_m = effective_sample_size(n, m);
    let j0 = (n as f64).ln().log2().ceil() as i32;
    let j_max = (n_m.log2() / (3.0 + 1.0 / m as f64)).floor() as i32;
    (n_m, j0, j_max)
}

/// [`theory_levels`] that rejects `J ≤ j0`.
pub fn checked_theory_levels(n: u64, m: usize) -> Result<(f64, i32, i32)> {
    let (n_m, j0, j_max) = theory_levels(n, m);
    if j_max <= j0 {
        return Err(Error::DegenerateTheory { n_m, j0, j_max });
    }
    Ok((n_m, j0, j_max))
}

/// `(j0, J)` of practical mode: `J = ⌊log₂ n / (3 + 1/M)⌋`, `j0 = min(⌈log₂ ln n⌉, J − 1)`.
pub fn practical_levels(n: u64, m: usize) -> (i32, i32) {
    let j_max = ((n as f64).log2() / (3.0 + 1.0 / m as f64)).floor() as i32;
    let j0 = ((n as f64).ln().log2().ceil() as i32).min(j_max - 1);
    (j0, j_max)
}

/// Exact per-level variance `σ²/N · Σ_{m∈C_j} |ψ_mjk|² / Σ_l g_m(u_l)²`.
pub fn coeff_variance(
    j: u32,
    design: &ChannelDesign,
    profile: &KernelProfile,
    n_per_channel: usize,
    noise_sd: f64,
) -> Result<f64> {
    let (v, resonant) = level_variance(j, design, profile, n_per_channel, noise_sd);
    match resonant.first() {
        Some(&m) => Err(Error::Resonance { m }),
        None => Ok(v),
    }
}

/// Variance over the non-resonant part of `C_j`, and the resonant frequencies.
fn level_variance(
    j: u32,
    design: &ChannelDesign,
    profile: &KernelProfile,
    n_per_channel: usize,
    noise_sd: f64,
) -> (f64, Vec<i64>) {
    let mut sum = 0.0;
    let mut resonant = Vec::new();
    for m in band_set(j) {
        let g2 = design.g_energy(m, profile);
        if g2 == 0.0 {
            resonant.push(m);
        } else {
            sum += coeff_fourier(j, 0, m).norm_sqr() / g2;
        }
    }
    (noise_sd * noise_sd / n_per_channel as f64 * sum, resonant)
}

pub fn make_config(
    mode: Mode,
    design: &ChannelDesign,
    profile: &KernelProfile,
    n_per_channel: usize,
    noise_sd: f64,
    eta: f64,
) -> Result<EstimatorConfig> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    if !n_per_channel.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "N must be a power of two, got {n_per_channel}"
        )));
    }
    let m = design.m();
    let n = (m * n_per_channel) as u64;
    let (j0, j_max) = match mode {
        Mode::Theory => {
            let (_, j0, j_max) = checked_theory_levels(n, m)?;
            (j0, j_max)
        }
        Mode::Practical => {
            let (j0, j_max) = practical_levels(n, m);
            if j_max < 3 {
                return Err(Error::DegenerateLevels { n, j0, j_max });
            }
            (j0, j_max)
        }
    };
    let mut config = base_config(mode, design, n_per_channel, noise_sd, eta);
    config.j0 = j0.max(0) as u32;
    config.j_max = j_max as u32;
    config.fill_levels(design, profile);
    Ok(config)
}

impl EstimatorConfig {
    /// Same levels with every threshold at zero.
    pub fn without_thresholds(mut self) -> Self {
        self.lambdas.values_mut().for_each(|l| *l = 0.0);
        self
    }

    /// Explicit levels with the mode's threshold rule.
    #[allow(clippy::too_many_arguments)]
    pub fn with_levels(
        mode: Mode,
        design: &ChannelDesign,
        profile: &KernelProfile,
        n_per_channel: usize,
        noise_sd: f64,
        eta: f64,
        j0: u32,
        j_max: u32,
    ) -> Result<Self> {
        if j_max <= j0 {
            return Err(Error::DegenerateLevels {
                n: (design.m() * n_per_channel) as u64,
                j0: j0 as i32,
                j_max: j_max as i32,
            });
        }
        let mut c = base_config(mode, design, n_per_channel, noise_sd, eta);
        c.j0 = j0;
        c.j_max = j_max;
        c.fill_levels(design, profile);
        Ok(c)
    }

    fn fill_levels(&mut self, design: &ChannelDesign, profile: &KernelProfile) {
        let ln_n = (self.n as f64).ln();
        self.variances.clear();
        self.lambdas.clear();
        self.resonant.clear();
        for j in self.j0..self.j_max {
            let (v, r) = level_variance(j, design, profile, self.n_per_channel, self.noise_sd);
            self.resonant.extend(r);
            self.variances.insert(j, v);
            let lambda = match self.mode {
                Mode::Theory => {
                    let growth = j as f64 * 2f64.powf(j as f64 * (2.0 + 1.0 / self.m as f64)) * ln_n;
                    self.eta * self.noise_sd * (growth / self.n_m).sqrt()
                }
                Mode::Practical => self.eta * (2.0 * v * ln_n).sqrt(),
            };
            self.lambdas.insert(j, lambda);
        }
        self.resonant.sort_unstable();
        self.resonant.dedup();
    }
}

fn base_config(mode: Mode, design: &ChannelDesign, n_per_channel: usize, noise_sd: f64, eta: f64) -> EstimatorConfig {
    let m = design.m();
    let n = (m * n_per_channel) as u64;
    EstimatorConfig {
        mode,
        eta,
        j0: 0,
        j_max: 0,
        lambdas: BTreeMap::new(),
        n_m: effective_sample_size(n, m),
        n,
        m,
        n_per_channel,
        noise_sd,
        variances: BTreeMap::new(),
        resonant: Vec::new(),
    }
}

/// `f̂_m = Σ_l g_l y_l / Σ_l g_l²`; zero with the flag set when every `g_l` vanishes.
pub fn estimate_fm(y: &[Complex64], g: &[f64]) -> (Complex64, bool) {
    let denom: f64 = g.iter().map(|v| v * v).sum();
    if denom == 0.0 {
        return (Complex64::new(0.0, 0.0), true);
    }
    let num: Complex64 = y.iter().zip(g).map(|(y, g)| y * g).sum();
    (num / denom, false)
}

/// Keep `b_jk` when `|b_jk| ≥ λ_j`; scaling coefficients pass untouched.
pub fn hard_threshold(raw: &CoefficientSet, lambdas: &BTreeMap<u32, f64>) -> CoefficientSet {
    let mut out = raw.clone();
    out.provenance = Provenance::Thresholded;
    for j in raw.j0..raw.j_max {
        let lambda = lambdas.get(&j).copied().unwrap_or(0.0);
        for c in out.level_mut(j) {
            if c.norm() < lambda {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }
    out
}

/// Raw and thresholded coefficients without any time-domain reconstruction.
#[derive(Clone, Debug)]
pub struct CoefficientEstimate {
    pub raw: CoefficientSet,
    pub thresholded: CoefficientSet,
    /// Frequencies where `f̂_m` was forced to zero.
    pub resonant: Vec<i64>,
}

impl CoefficientEstimate {
    /// Fourier coefficients of the thresholded reconstruction.
    pub fn spectrum(&self) -> Spectrum {
        meyer::synthesis_spectrum(&self.thresholded)
    }
}

/// `f̂_m` for `|m| ≤ half_width` from per-channel spectra.
pub fn invert(
    spectra: &[Spectrum],
    design: &ChannelDesign,
    profile: &KernelProfile,
    half_width: usize,
) -> (Spectrum, Vec<i64>) {
    let mut resonant = Vec::new();
    let mut y = vec![Complex64::new(0.0, 0.0); spectra.len()];
    let mut g = vec![0.0; spectra.len()];
    let f = Spectrum::from_fn(half_width, |m| {
        for (l, (s, c)) in spectra.iter().zip(&design.channels).enumerate() {
            y[l] = s.get(m);
            g[l] = g_fourier(m, c, profile);
        }
        let (v, flag) = estimate_fm(&y, &g);
        if flag {
            resonant.push(m);
        }
        v
    });
    (f, resonant)
}

fn check_aliasing(dataset: &Dataset, config: &EstimatorConfig) -> Result<()> {
    let required = 1usize << (config.j_max + 3);
    if dataset.n_per_channel < required {
        return Err(Error::AntiAliasing {
            n: dataset.n_per_channel,
            required,
        });
    }
    Ok(())
}

pub fn estimate_coefficients(dataset: &Dataset, config: &EstimatorConfig) -> Result<CoefficientEstimate> {
    check_aliasing(dataset, config)?;
    let half = meyer::required_half_width(config.j0, config.j_max);
    let spectra = channel_dft(dataset);
    let (f_hat, resonant) = invert(&spectra, &dataset.design, &dataset.profile, half);
    let mut raw = meyer::analysis(&f_hat, config.j0, config.j_max)?;
    raw.provenance = Provenance::RawEstimate;
    let thresholded = hard_threshold(&raw, &config.lambdas);
    Ok(CoefficientEstimate {
        raw,
        thresholded,
        resonant,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateResult {
    pub coeffs_raw: CoefficientSet,
    pub coeffs_thresholded: CoefficientSet,
    pub grid_size: usize,
    #[serde(skip)]
    pub f_hat_samples: Vec<f64>,
    /// Fraction of `b_jk` kept at each level.
    pub survival: BTreeMap<u32, f64>,
    pub variance_map: BTreeMap<u32, f64>,
    pub resonant: Vec<i64>,
}

pub fn survival(thresholded: &CoefficientSet) -> BTreeMap<u32, f64> {
    (thresholded.j0..thresholded.j_max)
        .map(|j| {
            let level = thresholded.level(j);
            let kept = level.iter().filter(|c| c.norm() > 0.0).count();
            (j, kept as f64 / level.len() as f64)
        })
        .collect()
}

pub fn estimate(dataset: &Dataset, config: &EstimatorConfig) -> Result<EstimateResult> {
    let est = estimate_coefficients(dataset, config)?;
    let grid_size = 1usize << (config.j_max + 3).max(MIN_GRID_LOG2);
    let f_hat_samples = meyer::synthesis(&est.thresholded, grid_size)?;
    Ok(EstimateResult {
        survival: survival(&est.thresholded),
        coeffs_raw: est.raw,
        coeffs_thresholded: est.thresholded,
        grid_size,
        f_hat_samples,
        variance_map: config.variances.clone(),
        resonant: est.resonant,
    })
}
