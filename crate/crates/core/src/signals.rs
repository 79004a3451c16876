//! Test signals on the unit circle, held through their Fourier coefficients.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::Spectrum;

/// Registered signal identifiers.
pub const SIGNAL_IDS: [&str; 6] = ["trig", "cos1", "zero", "bumps", "doppler", "step"];

/// Highest frequency of the `trig` polynomial.
pub const TRIG_DEGREE: i64 = 96;

const DENSE_LOG2: u32 = 16;

#[derive(Clone, Debug)]
pub struct Signal {
    pub id: String,
    /// Stored coefficients `f_m`.
    pub spectrum: Spectrum,
    /// `‖f‖² − Σ|f_m|²` over the stored range (zero for trigonometric polynomials).
    pub residual_energy: f64,
}

impl Signal {
    pub fn by_id(id: &str) -> Result<Signal> {
        let (spectrum, residual_energy) = match id {
            "trig" => (trig_spectrum(), 0.0),
            "cos1" => (
                Spectrum::from_fn(1, |m| Complex64::new(if m == 0 { 0.0 } else { 0.5 }, 0.0)),
                0.0,
            ),
            "zero" => (Spectrum::zeros(0), 0.0),
            "bumps" => dense(&BUMPS, bumps),
            "doppler" => dense(&DOPPLER, doppler),
            "step" => dense(&STEP, step),
            other => return Err(Error::UnknownSignal(other.to_string())),
        };
        Ok(Signal {
            id: id.to_string(),
            spectrum,
            residual_energy,
        })
    }

    pub fn coefficient(&self, m: i64) -> Complex64 {
        self.spectrum.get(m)
    }

    /// `‖f‖²`.
    pub fn energy(&self) -> f64 {
        self.spectrum.energy() + self.residual_energy
    }

    /// `‖g − f‖²` for a trigonometric polynomial `g`.
    pub fn l2_distance_sq(&self, estimate: &Spectrum) -> f64 {
        estimate.distance_sq(&self.spectrum) + self.residual_energy
    }

    /// Energy of `f` at frequencies `|m| > half_width`.
    pub fn energy_above(&self, half_width: usize) -> f64 {
        let h = self.spectrum.half_width() as i64;
        let cut = half_width as i64;
        self.spectrum
            .iter()
            .filter(|(m, _)| m.abs() > cut && m.abs() <= h)
            .map(|(_, v)| v.norm_sqr())
            .sum::<f64>()
            + self.residual_energy
    }
}

/// `Σ_{m=1}^{96} m^{−3/2} cos(2πmx + θ_m)` with fixed phases; smoothness just above 1.
fn trig_spectrum() -> Spectrum {
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    Spectrum::from_fn(TRIG_DEGREE as usize, |m| {
        if m == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let a = m.unsigned_abs() as f64;
        let theta = 2.0 * PI * ((a * golden) % 1.0);
        let c = Complex64::from_polar(0.5 * a.powf(-1.5), theta);
        if m > 0 {
            c
        } else {
            c.conj()
        }
    })
}

type Dense = OnceLock<(Spectrum, f64)>;

static BUMPS: Dense = OnceLock::new();
static DOPPLER: Dense = OnceLock::new();
static STEP: Dense = OnceLock::new();

fn dense(cell: &Dense, f: fn(f64) -> f64) -> (Spectrum, f64) {
    cell.get_or_init(|| {
        let n = 1usize << DENSE_LOG2;
        let xs: Vec<f64> = (0..n).map(|i| f(i as f64 / n as f64)).collect();
        let total = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let spectrum = Spectrum::from_samples(&xs);
        let residual = (total - spectrum.energy()).max(0.0);
        (spectrum, residual)
    })
    .clone()
}

fn bumps(t: f64) -> f64 {
    const POS: [f64; 11] = [0.1, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
    const HEIGHT: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
    const WIDTH: [f64; 11] = [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];
    POS.iter()
        .zip(HEIGHT.iter().zip(&WIDTH))
        .map(|(p, (h, w))| h / (1.0 + ((t - p) / w).abs().powi(4)))
        .sum()
}

fn doppler(t: f64) -> f64 {
    (t * (1.0 - t)).sqrt() * (2.0 * PI * 1.05 / (t + 0.05)).sin()
}

fn step(t: f64) -> f64 {
    if (1.0 / 3.0..2.0 / 3.0).contains(&t) {
        1.0
    } else {
        0.0
    }
}
