//! Truncated Fourier series on the unit circle, `f(t) = Σ f_m e^{2πimt}`,
//! with `f_m = ∫₀¹ f(t) e^{−2πimt} dt`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn forward_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

pub fn inverse_plan(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Unnormalized forward DFT in place: `X_k = Σ x_r e^{−2πirk/n}`.
pub fn fft_forward(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        forward_plan(buf.len()).process(buf);
    }
}

/// Unnormalized inverse DFT in place: `x_r = Σ X_k e^{+2πirk/n}`.
pub fn fft_inverse(buf: &mut [Complex64]) {
    if buf.len() > 1 {
        inverse_plan(buf.len()).process(buf);
    }
}

/// Coefficients `f_m` for `|m| ≤ half_width`; everything beyond is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    half_width: usize,
    values: Vec<Complex64>,
}

impl Spectrum {
    pub fn zeros(half_width: usize) -> Self {
        Self {
            half_width,
            values: vec![Complex64::new(0.0, 0.0); 2 * half_width + 1],
        }
    }

    pub fn from_fn(half_width: usize, mut f: impl FnMut(i64) -> Complex64) -> Self {
        let h = half_width as i64;
        Self {
            half_width,
            values: (-h..=h).map(&mut f).collect(),
        }
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn get(&self, m: i64) -> Complex64 {
        if m.unsigned_abs() as usize > self.half_width {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(m + self.half_width as i64) as usize]
        }
    }

    /// Panics when `|m|` exceeds the half width.
    pub fn set(&mut self, m: i64, v: Complex64) {
        let i = (m + self.half_width as i64) as usize;
        self.values[i] = v;
    }

    pub fn add(&mut self, m: i64, v: Complex64) {
        let i = (m + self.half_width as i64) as usize;
        self.values[i] += v;
    }

    /// `(m, f_m)` pairs in increasing `m`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let h = self.half_width as i64;
        self.values.iter().enumerate().map(move |(i, v)| (i as i64 - h, *v))
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `Σ |f_m − g_m|²` over the union of both supports.
    pub fn distance_sq(&self, other: &Spectrum) -> f64 {
        let h = self.half_width.max(other.half_width) as i64;
        (-h..=h).map(|m| (self.get(m) - other.get(m)).norm_sqr()).sum()
    }

    /// Largest deviation from `f_{−m} = conj(f_m)`.
    pub fn hermitian_defect(&self) -> f64 {
        let h = self.half_width as i64;
        (0..=h)
            .map(|m| (self.get(-m) - self.get(m).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Restriction to `|m| ≤ half_width`.
    pub fn truncated(&self, half_width: usize) -> Spectrum {
        Spectrum::from_fn(half_width, |m| self.get(m))
    }

    /// Samples `Re Σ f_m e^{2πimi/n}` at `t_i = i/n`. Needs `n > 2·half_width`.
    pub fn to_samples(&self, n: usize) -> Result<Vec<f64>> {
        if n <= 2 * self.half_width {
            return Err(Error::AntiAliasing {
                n,
                required: 2 * self.half_width + 1,
            });
        }
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (m, v) in self.iter() {
            buf[m.rem_euclid(n as i64) as usize] += v;
        }
        fft_inverse(&mut buf);
        Ok(buf.into_iter().map(|c| c.re).collect())
    }

    /// `f_m = n^{−1} Σ_i x_i e^{−2πim i/n}` for `|m| < n/2`; the Nyquist term is dropped.
    pub fn from_samples(samples: &[f64]) -> Spectrum {
        let n = samples.len();
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft_forward(&mut buf);
        let half = n.saturating_sub(1) / 2;
        let scale = 1.0 / n as f64;
        Spectrum::from_fn(half, |m| buf[m.rem_euclid(n as i64) as usize] * scale)
    }
}
