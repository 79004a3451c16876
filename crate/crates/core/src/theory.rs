//! Closed-form calculators for the asymptotic rate statement: the channel count
//! `M_n`, the slowly growing factor `α_n`, and the optimal `ν`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Which of the three Besov regimes `(s, p)` falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `p ≥ 2`.
    Dense,
    /// `6/(2s+3) < p < 2`.
    Intermediate,
    /// `p ≤ 6/(2s+3)`.
    Sparse,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryParams {
    pub s: f64,
    pub p: f64,
    pub q: f64,
    /// Besov ball radius.
    pub radius: f64,
    pub s_prime: f64,
    pub s_star: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub nu: f64,
    pub regime: Regime,
}

impl TheoryParams {
    /// `p` and `q` may be `f64::INFINITY`.
    pub fn new(s: f64, p: f64, q: f64, radius: f64, nu: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("s must be positive, got {s}")));
        }
        if !(p >= 1.0 && q >= 1.0) {
            return Err(Error::InvalidArgument(format!("need p, q ≥ 1, got p={p}, q={q}")));
        }
        if !(radius > 0.0) || !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument("radius and nu must be positive".into()));
        }
        let s_prime = s + 0.5 - 1.0 / p;
        let s_star = s_prime.min(s);
        let regime = if p >= 2.0 {
            Regime::Dense
        } else if p > 6.0 / (2.0 * s + 3.0) {
            Regime::Intermediate
        } else {
            Regime::Sparse
        };
        let (a1, a2, a3) = match regime {
            Regime::Dense => (2.0 * s, 2.0 * s + 3.0, 2.0 * s),
            Regime::Intermediate => (2.0 * s, 2.0 * s + 3.0, 4.0 * s),
            Regime::Sparse => (2.0 * s_star, 2.0 * s_star + 3.0, 4.0 * s_star),
        };
        Ok(Self {
            s,
            p,
            q,
            radius,
            s_prime,
            s_star,
            a1,
            a2,
            a3,
            nu,
            regime,
        })
    }

    /// Same smoothness class with a different `ν`.
    pub fn with_nu(&self, nu: f64) -> Result<Self> {
        Self::new(self.s, self.p, self.q, self.radius, nu)
    }

    /// `s > 3(1/p − 1/2)`, equivalently `p > 6/(2s+3)`.
    pub fn is_dense_rate(&self) -> bool {
        self.s > 3.0 * (1.0 / self.p - 0.5)
    }

    /// Polynomial exponent of the rate: `2s/(2s+3)`, or `s'/(s'+1)` in the sparse case.
    pub fn rate_exponent(&self) -> f64 {
        if self.is_dense_rate() {
            2.0 * self.s / (2.0 * self.s + 3.0)
        } else {
            self.s_prime / (self.s_prime + 1.0)
        }
    }

    /// Log-factor exponent `ϱ` of the uniform-design block estimator's rate.
    pub fn uniform_log_exponent(&self) -> f64 {
        let boundary = 3.0 * (1.0 / self.p - 0.5);
        if self.s > boundary {
            3.0 * (2.0 / self.p - 1.0).max(0.0) / (2.0 * self.s + 3.0)
        } else if self.s == boundary {
            (1.0 - self.p / self.q).max(0.0)
        } else {
            0.0
        }
    }
}

/// `M_n = ν·sqrt(ln n / ln ln n)`, rounded to nearest with a floor of 1.
pub fn choose_m(n: f64, nu: f64) -> Result<usize> {
    if !(n >= 16.0) {
        return Err(Error::InvalidArgument(format!("need n ≥ 16, got {n}")));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::InvalidArgument(format!("nu must be positive, got {nu}")));
    }
    let ln_n = n.ln();
    Ok(((nu * (ln_n / ln_n.ln()).sqrt()).round() as usize).max(1))
}

/// `ν_opt = (3A₂)^{−1/2}`.
pub fn nu_opt(params: &TheoryParams) -> f64 {
    (3.0 * params.a2).powf(-0.5)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaN {
    pub ln_n: f64,
    /// `ln α_n`; `α_n` itself overflows long before `ln α_n` does.
    pub ln_value: f64,
    /// `(A₁/A₂)(3ν + 1/(A₂ν))`.
    pub main: f64,
    /// `3ν` and `1/(A₂ν)`, equal at `ν_opt`.
    pub bracket: (f64, f64),
    pub r_terms: [f64; 3],
    pub r_n: f64,
}

impl AlphaN {
    pub fn value(&self) -> f64 {
        self.ln_value.exp()
    }
}

/// `α_n` for `n ≥ 16`.
pub fn alpha_n(n: f64, params: &TheoryParams) -> Result<AlphaN> {
    if !(n >= 16.0) {
        return Err(Error::InvalidArgument(format!("need n ≥ 16, got {n}")));
    }
    Ok(alpha_n_from_ln(n.ln(), params))
}

/// `α_n` parameterized by `ln n`, so that astronomically large `n` stay representable.
pub fn alpha_n_from_ln(ln_n: f64, params: &TheoryParams) -> AlphaN {
    let TheoryParams { a1, a2, a3, nu, .. } = *params;
    let l2 = ln_n.ln();
    let l3 = l2.ln();
    let bracket = (3.0 * nu, 1.0 / (a2 * nu));
    let main = a1 / a2 * (bracket.0 + bracket.1);
    let r_terms = [
        3.0 * a1 * nu * l3 / (a2 * l2) * (2.0 * nu.ln() / l3 - 1.0),
        (l2 / ln_n).sqrt() * (a3 / a2 + a1 / (2.0 * a2) - 3.0 * a1 / (a2 * a2) - a1 / (a2.powi(3) * nu * nu)),
        l3 / (ln_n.sqrt() * l2.sqrt()) * (3.0 * a1 / (a2 * a2) - a1 / (2.0 * a2)),
    ];
    let r_n = r_terms.iter().sum::<f64>();
    AlphaN {
        ln_n,
        ln_value: (ln_n * l2).sqrt() * (main + r_n),
        main,
        bracket,
        r_terms,
        r_n,
    }
}
