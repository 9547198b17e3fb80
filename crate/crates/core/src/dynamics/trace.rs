use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampled real signal on an increasing time axis in µs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub t_us: Vec<f64>,
    pub y: Vec<f64>,
    /// Free-form description of how the trace was produced.
    pub meta: String,
}

impl TimeTrace {
    pub fn new(t_us: Vec<f64>, y: Vec<f64>, meta: impl Into<String>) -> Result<Self> {
        if t_us.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: t_us.len(),
                found: y.len(),
            });
        }
        if t_us.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("trace contains non-finite values".into()));
        }
        if t_us.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("time axis must be strictly increasing".into()));
        }
        Ok(Self {
            t_us,
            y,
            meta: meta.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.t_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_us.is_empty()
    }

    /// Uniform sampling step, or an error if the grid is not uniform to a
    /// relative tolerance of 1e−6.
    pub fn uniform_step(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(Error::EmptyGrid);
        }
        let dt = (self.t_us[self.len() - 1] - self.t_us[0]) / (self.len() - 1) as f64;
        let dev = self
            .t_us
            .windows(2)
            .map(|w| ((w[1] - w[0]) - dt).abs())
            .fold(0.0, f64::max);
        if dev > 1e-6 * dt {
            return Err(Error::NonUniformGrid(dev / dt));
        }
        Ok(dt)
    }

    /// Same time axis with every value multiplied by `f(t)`.
    pub fn scaled_by(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            t_us: self.t_us.clone(),
            y: self.t_us.iter().zip(&self.y).map(|(&t, &y)| y * f(t)).collect(),
            meta: self.meta.clone(),
        }
    }
}

/// `n` points starting at `start` with spacing `step`.
pub fn uniform_times(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| start + step * k as f64).collect()
}

/// Measured coherence and relaxation times, µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayParams {
    pub t2_star_c13_us: f64,
    pub t2_star_n14_us: f64,
    pub t2_electron_us: f64,
    pub t1_electron_us: f64,
    /// Stretch exponent n of the echo envelope `exp(−(2τ/T2)ⁿ)`.
    pub echo_exponent: f64,
}

impl Default for DecayParams {
    fn default() -> Self {
        Self {
            t2_star_c13_us: 203.0,
            t2_star_n14_us: 864.0,
            t2_electron_us: 7.0,
            t1_electron_us: 3100.0,
            echo_exponent: 1.0,
        }
    }
}

impl DecayParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.t2_star_c13_us,
            self.t2_star_n14_us,
            self.t2_electron_us,
            self.t1_electron_us,
            self.echo_exponent,
        ];
        if all.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::InvalidInput(format!("decay constants must be positive: {self:?}")));
        }
        Ok(())
    }

    /// `exp(−(2τ/T2)ⁿ)`
    pub fn echo_envelope(&self, tau_us: f64) -> f64 {
        (-(2.0 * tau_us / self.t2_electron_us).powf(self.echo_exponent)).exp()
    }
}
