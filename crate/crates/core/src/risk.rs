//! Monte-Carlo L² risk of the thresholding estimator and log-log rate fits.

use std::io::Write;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{estimate_coefficients, make_config, EstimatorConfig, Mode};
use crate::model::{simulate, ChannelDesign, KernelProfile};
use crate::signals::Signal;
use crate::stats::{linear_fit, mean_sd};

/// One row of a risk table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskRow {
    pub design: String,
    pub signal: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n_per_channel: usize,
    pub n: u64,
    pub mode: String,
    pub reps: usize,
    pub risk: f64,
    pub stderr: f64,
    pub resonant_reps: usize,
    pub seed: u64,
}

/// Seed of replicate `r`: first word of the ChaCha20 stream `r` keyed by `seed`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(r as u64);
    rng.next_u64()
}

/// Settings shared by every cell of a benchmark.
#[derive(Clone, Debug, Serialize)]
pub struct RiskSettings {
    pub mode: Mode,
    pub eta: f64,
    pub noise_sd: f64,
    pub reps: usize,
    pub seed: u64,
}

/// Per-replicate losses `‖f̂ − f‖²` and resonance flags.
pub fn replicate_losses(
    design: &ChannelDesign,
    profile: &KernelProfile,
    signal: &Signal,
    n_per_channel: usize,
    config: &EstimatorConfig,
    settings: &RiskSettings,
) -> Result<Vec<(f64, bool)>> {
    (0..settings.reps)
        .into_par_iter()
        .map(|r| {
            let data = simulate(
                design,
                profile,
                signal,
                n_per_channel,
                settings.noise_sd,
                replicate_seed(settings.seed, r),
            )?;
            let est = estimate_coefficients(&data, config)?;
            Ok((signal.l2_distance_sq(&est.spectrum()), !est.resonant.is_empty()))
        })
        .collect()
}

pub fn mc_risk(
    design: &ChannelDesign,
    profile: &KernelProfile,
    signal: &Signal,
    n_per_channel: usize,
    settings: &RiskSettings,
) -> Result<RiskRow> {
    if settings.reps < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 replicates, got {}",
            settings.reps
        )));
    }
    let config = make_config(
        settings.mode,
        design,
        profile,
        n_per_channel,
        settings.noise_sd,
        settings.eta,
    )?;
    mc_risk_with(design, profile, signal, n_per_channel, &config, settings)
}

/// As [`mc_risk`] with an explicit estimator configuration.
pub fn mc_risk_with(
    design: &ChannelDesign,
    profile: &KernelProfile,
    signal: &Signal,
    n_per_channel: usize,
    config: &EstimatorConfig,
    settings: &RiskSettings,
) -> Result<RiskRow> {
    let losses = replicate_losses(design, profile, signal, n_per_channel, config, settings)?;
    let values: Vec<f64> = losses.iter().map(|l| l.0).collect();
    let (risk, sd) = mean_sd(&values);
    Ok(RiskRow {
        design: design.kind.as_str().to_string(),
        signal: signal.id.clone(),
        m: design.m(),
        n_per_channel,
        n: (design.m() * n_per_channel) as u64,
        mode: config.mode.as_str().to_string(),
        reps: settings.reps,
        risk,
        stderr: sd / (settings.reps as f64).sqrt(),
        resonant_reps: losses.iter().filter(|l| l.1).count(),
        seed: settings.seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    /// Slope of `log₂ risk` against `log₂ n`.
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points: usize,
    /// Resonant replicates were present in some row.
    pub unreliable: bool,
}

/// Least-squares rate over rows of one design, signal and mode.
pub fn rate_fit(rows: &[RiskRow]) -> Result<RateFit> {
    let first = rows.first().ok_or(Error::InsufficientPoints { needed: 4, got: 0 })?;
    if rows
        .iter()
        .any(|r| r.design != first.design || r.signal != first.signal || r.mode != first.mode || r.m != first.m)
    {
        return Err(Error::InvalidArgument(
            "rate_fit needs rows of a single design, signal and mode".into(),
        ));
    }
    let mut ns: Vec<u64> = rows.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 4 {
        return Err(Error::InsufficientPoints {
            needed: 4,
            got: ns.len(),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).log2()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.risk.log2()).collect();
    let fit = linear_fit(&xs, &ys).ok_or(Error::InsufficientPoints {
        needed: 4,
        got: ns.len(),
    })?;
    Ok(RateFit {
        slope: fit.slope,
        stderr: fit.slope_stderr,
        intercept: fit.intercept,
        points: rows.len(),
        unreliable: rows.iter().any(|r| r.resonant_reps > 0),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DesignSummary {
    pub design: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub digest: String,
    pub resonant: bool,
    pub fit: Option<RateFit>,
    /// Why no fit is available.
    pub fit_error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub signal: String,
    pub settings: RiskSettings,
    pub n_grid: Vec<u64>,
    pub rows: Vec<RiskRow>,
    pub designs: Vec<DesignSummary>,
}

/// `N = n/M`, which must be a power of two.
pub fn per_channel(n: u64, m: usize) -> Result<usize> {
    let m64 = m as u64;
    if !n.is_multiple_of(m64) || !(n / m64).is_power_of_two() {
        return Err(Error::InvalidArgument(format!("n = {n} is not M·2^k for M = {m}")));
    }
    Ok((n / m64) as usize)
}

/// Risk of every design at every `n`, rows ordered by design then `n`.
pub fn compare_designs(
    designs: &[ChannelDesign],
    profile: &KernelProfile,
    signal: &Signal,
    n_grid: &[u64],
    settings: &RiskSettings,
) -> Result<Comparison> {
    if designs.len() < 2 {
        return Err(Error::InvalidArgument(
            "compare_designs needs at least two designs".into(),
        ));
    }
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for d in designs {
        let mut own = Vec::new();
        for &n in n_grid {
            own.push(mc_risk(d, profile, signal, per_channel(n, d.m())?, settings)?);
        }
        let fit = rate_fit(&own);
        summaries.push(DesignSummary {
            design: d.kind.as_str().to_string(),
            m: d.m(),
            digest: d.digest(),
            resonant: own.iter().any(|r| r.resonant_reps > 0),
            fit_error: fit.as_ref().err().map(ToString::to_string),
            fit: fit.ok(),
        });
        rows.extend(own);
    }
    Ok(Comparison {
        signal: signal.id.clone(),
        settings: settings.clone(),
        n_grid: n_grid.to_vec(),
        rows,
        designs: summaries,
    })
}

/// CSV with header `design,signal,M,N,n,mode,reps,risk,stderr,resonant_reps,seed`.
pub fn write_csv<W: Write>(rows: &[RiskRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<RiskRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .collect::<std::result::Result<Vec<RiskRow>, _>>()
        .map_err(|e| Error::Parse(e.to_string()))
}
