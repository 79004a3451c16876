//! The multichannel boxcar observation model.
//!
//! Channel `l` observes `y(u_l, t_i) = (γ(u_l)/2) ∫ 𝕀(|t_i − x| < u_l) f(x) dx + ε`,
//! a periodic convolution whose kernel has Fourier coefficients
//! `g_m(u) = γ(u) sin(2πmu)/(2πm)` and `g_0(u) = γ(u)·u`.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::construct::BaTuple;
use crate::error::{Error, Result};
use crate::fourier::Spectrum;
use crate::meyer::band_set;
use crate::precision::{BigReal, Real, TorusPoint};
use crate::signals::Signal;

/// Shape of `γ(u)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum GammaShape {
    /// `γ(u) = 1/u`, the normalized boxcar (`g_0 = 1`).
    InverseWidth,
    Constant {
        value: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    pub shape: GammaShape,
    /// `min γ` over the design interval.
    pub gamma1: f64,
    /// `max γ` over the design interval.
    pub gamma2: f64,
}

impl KernelProfile {
    pub fn boxcar(a: f64, b: f64) -> Self {
        Self {
            shape: GammaShape::InverseWidth,
            gamma1: 1.0 / b,
            gamma2: 1.0 / a,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            shape: GammaShape::Constant { value },
            gamma1: value,
            gamma2: value,
        }
    }

    pub fn gamma(&self, u: f64) -> f64 {
        match self.shape {
            GammaShape::InverseWidth => 1.0 / u,
            GammaShape::Constant { value } => value,
        }
    }

    /// Whether `g_0 = γ(u)·u` equals 1 identically.
    pub fn is_normalized(&self) -> bool {
        matches!(self.shape, GammaShape::InverseWidth)
    }
}

/// One evaluation point, held exactly when rational.
#[derive(Clone, Debug)]
pub struct Channel {
    pub u: Real,
    value: f64,
    point: TorusPoint,
}

impl Channel {
    pub fn new(u: Real) -> Self {
        let value = u.to_f64();
        let point = u.torus();
        Self { u, value, point }
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// `g_m(u) = γ(u) sin(2πmu)/(2πm)`; exactly zero when `2mu ∈ ℤ`.
pub fn g_fourier(m: i64, channel: &Channel, profile: &KernelProfile) -> f64 {
    let gamma = profile.gamma(channel.value);
    if m == 0 {
        return gamma * channel.value;
    }
    gamma * channel.point.scale(m).sin_2pi() / (2.0 * PI * m as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignKind {
    BaTuple,
    Uniform,
    Single,
    Rational,
    Custom,
}

impl DesignKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignKind::BaTuple => "ba-tuple",
            DesignKind::Uniform => "uniform",
            DesignKind::Single => "single",
            DesignKind::Rational => "rational",
            DesignKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "ba-tuple" | "ba" => DesignKind::BaTuple,
            "uniform" => DesignKind::Uniform,
            "single" => DesignKind::Single,
            "rational" => DesignKind::Rational,
            "custom" => DesignKind::Custom,
            _ => return Err(Error::InvalidArgument(format!("unknown design kind {s:?}"))),
        })
    }
}

#[derive(Clone, Debug)]
pub struct ChannelDesign {
    pub kind: DesignKind,
    pub a: BigRational,
    pub b: BigRational,
    pub channels: Vec<Channel>,
    /// Digest of the tuple artifact a `ba-tuple` design came from.
    pub source: Option<String>,
}

impl ChannelDesign {
    pub fn m(&self) -> usize {
        self.channels.len()
    }

    pub fn u(&self) -> Vec<Real> {
        self.channels.iter().map(|c| c.u.clone()).collect()
    }

    pub fn u_f64(&self) -> Vec<f64> {
        self.channels.iter().map(Channel::value).collect()
    }

    /// Short label such as `ba-tuple-4`.
    pub fn label(&self) -> String {
        format!("{}-{}", self.kind.as_str(), self.m())
    }

    /// SHA-256 over the kind and the exact coordinate strings.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.kind.as_str());
        for c in &self.channels {
            h.update(b"|");
            h.update(c.u.to_string());
        }
        hex::encode(h.finalize())
    }

    /// `Σ_l g_m(u_l)²`.
    pub fn g_energy(&self, m: i64, profile: &KernelProfile) -> f64 {
        self.channels.iter().map(|c| g_fourier(m, c, profile).powi(2)).sum()
    }
}

fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn check_interval(a: &BigRational, b: &BigRational) -> Result<()> {
    if a >= b || *a <= ratio(0, 1) {
        return Err(Error::Interval(format!("need 0 < a < b, got a={a}, b={b}")));
    }
    Ok(())
}

fn check_channels(
    kind: DesignKind,
    a: &BigRational,
    b: &BigRational,
    channels: Vec<Channel>,
    source: Option<String>,
) -> Result<ChannelDesign> {
    let (af, bf) = (
        crate::precision::rational_to_f64(a),
        crate::precision::rational_to_f64(b),
    );
    for (i, c) in channels.iter().enumerate() {
        let v = c.value();
        if !(v > 0.0 && v <= 0.5) {
            return Err(Error::Interval(format!("u_{} = {v} is outside (0, 1/2]", i + 1)));
        }
        if v < af || v > bf {
            return Err(Error::Interval(format!("u_{} = {v} is outside [{a}, {b}]", i + 1)));
        }
    }
    Ok(ChannelDesign {
        kind,
        a: a.clone(),
        b: b.clone(),
        channels,
        source,
    })
}

/// Build a validated design on `[a, b]`.
///
/// `uniform` uses `u_l = a + (b−a)l/M`, `rational` uses `a + (b−a)l/(M+1)`,
/// `single` places one channel at `a + (b−a)(√5−1)/2`, and `ba-tuple` halves a
/// tuple constructed on `(2a, 2b)`.
pub fn make_design(
    kind: DesignKind,
    m: usize,
    a: &BigRational,
    b: &BigRational,
    tuple: Option<&BaTuple>,
) -> Result<ChannelDesign> {
    check_interval(a, b)?;
    if m == 0 {
        return Err(Error::InvalidArgument("a design needs at least one channel".into()));
    }
    let width = b - a;
    let exact = |r: BigRational| Channel::new(Real::Exact(r));
    let mut source = None;
    let channels: Vec<Channel> = match kind {
        DesignKind::Uniform => (1..=m as i64).map(|l| exact(a + &width * ratio(l, m as i64))).collect(),
        DesignKind::Rational => (1..=m as i64)
            .map(|l| exact(a + &width * ratio(l, m as i64 + 1)))
            .collect(),
        DesignKind::Single => {
            if m != 1 {
                return Err(Error::InvalidArgument(format!("single design has M = 1, got {m}")));
            }
            let p = 256;
            let golden = &(&BigReal::from_i64(5, p).sqrt()? - &BigReal::from_i64(1, p)) / &BigReal::from_i64(2, p);
            let u = &BigReal::from_rational(a, p) + &(&BigReal::from_rational(&width, p) * &golden);
            vec![Channel::new(Real::Approx(u))]
        }
        DesignKind::BaTuple => {
            let t = tuple.ok_or_else(|| Error::InvalidArgument("ba-tuple design needs a tuple".into()))?;
            let two = ratio(2, 1);
            if t.a != a * &two || t.b != b * &two {
                return Err(Error::Interval(format!(
                    "tuple lives on ({}, {}) but the design needs ({}, {})",
                    t.a,
                    t.b,
                    a * &two,
                    b * &two
                )));
            }
            if t.m != m {
                return Err(Error::InvalidArgument(format!(
                    "tuple has M = {}, design asked for {m}",
                    t.m
                )));
            }
            let half = ratio(1, 2);
            source = Some(tuple_digest(t));
            t.beta_reals().iter().map(|x| Channel::new(x.scale(&half))).collect()
        }
        DesignKind::Custom => {
            return Err(Error::InvalidArgument(
                "custom designs are built with custom_design".into(),
            ));
        }
    };
    check_channels(kind, a, b, channels, source)
}

/// A design from explicit points.
pub fn custom_design(u: Vec<Real>, a: &BigRational, b: &BigRational) -> Result<ChannelDesign> {
    check_interval(a, b)?;
    if u.is_empty() {
        return Err(Error::InvalidArgument("a design needs at least one channel".into()));
    }
    check_channels(
        DesignKind::Custom,
        a,
        b,
        u.into_iter().map(Channel::new).collect(),
        None,
    )
}

/// Rebuild a persisted design, re-running the interval checks.
pub fn restore_design(
    kind: DesignKind,
    u: Vec<Real>,
    a: &BigRational,
    b: &BigRational,
    source: Option<String>,
) -> Result<ChannelDesign> {
    check_interval(a, b)?;
    if u.is_empty() {
        return Err(Error::InvalidArgument("a design needs at least one channel".into()));
    }
    check_channels(kind, a, b, u.into_iter().map(Channel::new).collect(), source)
}

pub fn tuple_digest(t: &BaTuple) -> String {
    let mut h = Sha256::new();
    for b in &t.beta {
        h.update(b.to_string());
        h.update(b"|");
    }
    hex::encode(h.finalize())
}

/// `τ₁(m) = M⁻¹ Σ_l g_m(u_l)²`.
pub fn tau1(m: i64, design: &ChannelDesign, profile: &KernelProfile) -> f64 {
    design.g_energy(m, profile) / design.m() as f64
}

/// `Δ_κ(j) = |C_j|⁻¹ Σ_{m∈C_j} τ₁(m)^{−2κ} · M⁻¹ Σ_l |g_m(u_l)|^{2κ}`.
pub fn delta(j: u32, design: &ChannelDesign, profile: &KernelProfile, kappa: u32) -> Result<f64> {
    if !(1..=2).contains(&kappa) {
        return Err(Error::InvalidArgument(format!("kappa must be 1 or 2, got {kappa}")));
    }
    let band = band_set(j);
    let mf = design.m() as f64;
    let mut sum = 0.0;
    for &m in &band {
        let g: Vec<f64> = design.channels.iter().map(|c| g_fourier(m, c, profile)).collect();
        let t = g.iter().map(|v| v * v).sum::<f64>() / mf;
        if t == 0.0 {
            return Err(Error::Resonance { m });
        }
        let moment = g.iter().map(|v| v.abs().powi(2 * kappa as i32)).sum::<f64>() / mf;
        sum += t.powi(-2 * kappa as i32) * moment;
    }
    Ok(sum / band.len() as f64)
}

/// Noisy multichannel observations, row-major `M × N`.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub design: ChannelDesign,
    pub profile: KernelProfile,
    pub n_per_channel: usize,
    pub samples: Vec<f64>,
    pub noise_sd: f64,
    pub seed: u64,
    pub signal_id: String,
}

impl Dataset {
    /// Total sample count `n = M·N`.
    pub fn n(&self) -> u64 {
        (self.design.m() * self.n_per_channel) as u64
    }

    pub fn channel(&self, l: usize) -> &[f64] {
        &self.samples[l * self.n_per_channel..(l + 1) * self.n_per_channel]
    }
}

/// Noise for channel `l`: a ChaCha20 stream indexed by `(seed, l)`, read in sample order.
pub fn channel_noise(seed: u64, l: usize, len: usize, sd: f64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(l as u64);
    (0..len)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect()
}

/// Noiseless channel response at `t_i = i/N`.
pub fn noiseless_channel(signal: &Signal, channel: &Channel, profile: &KernelProfile, n: usize) -> Result<Vec<f64>> {
    let half = (n - 1) / 2;
    let blurred = Spectrum::from_fn(half, |m| signal.coefficient(m) * g_fourier(m, channel, profile));
    blurred.to_samples(n)
}

pub fn simulate(
    design: &ChannelDesign,
    profile: &KernelProfile,
    signal: &Signal,
    n_per_channel: usize,
    noise_sd: f64,
    seed: u64,
) -> Result<Dataset> {
    if !n_per_channel.is_power_of_two() || n_per_channel < 16 {
        return Err(Error::InvalidArgument(format!(
            "N must be a power of two ≥ 16, got {n_per_channel}"
        )));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise_sd must be finite and ≥ 0, got {noise_sd}"
        )));
    }
    let rows: Vec<Vec<f64>> = design
        .channels
        .par_iter()
        .enumerate()
        .map(|(l, c)| {
            let mut y = noiseless_channel(signal, c, profile, n_per_channel)?;
            if noise_sd > 0.0 {
                for (v, e) in y.iter_mut().zip(channel_noise(seed, l, n_per_channel, noise_sd)) {
                    *v += e;
                }
            }
            Ok(y)
        })
        .collect::<Result<_>>()?;
    Ok(Dataset {
        design: design.clone(),
        profile: *profile,
        n_per_channel,
        samples: rows.concat(),
        noise_sd,
        seed,
        signal_id: signal.id.clone(),
    })
}

/// `y_m(u_l) = N⁻¹ Σ_i y(u_l, t_i) e^{−2πim t_i}` for `|m| < N/2`, one spectrum per channel.
pub fn channel_dft(dataset: &Dataset) -> Vec<Spectrum> {
    (0..dataset.design.m())
        .map(|l| Spectrum::from_samples(dataset.channel(l)))
        .collect()
}
