//! Ramsey synthesis, polynomial detrending and one-sided Fourier spectra.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex as FftComplex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::trace::TimeTrace;
use crate::error::{Error, Result};
use crate::spectroscopy::Spectrum;

/// One Ramsey component: detuning from the drive and its weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyComponent {
    pub detuning_khz: f64,
    pub weight: f64,
}

/// `y(t) = Σ w_k cos(2π δ_k t) · exp(−t/T2*)`.
pub fn simulate_ramsey(components: &[RamseyComponent], t2_star_us: f64, t_us: &[f64]) -> Result<TimeTrace> {
    if components.iter().any(|c| c.weight < 0.0 || !c.weight.is_finite()) {
        return Err(Error::InvalidInput("Ramsey weights must be non-negative".into()));
    }
    if !(t2_star_us > 0.0) {
        return Err(Error::InvalidInput(format!("T2* must be positive, got {t2_star_us}")));
    }
    let y = t_us
        .iter()
        .map(|&t| {
            let osc: f64 = components
                .iter()
                .map(|c| c.weight * (2.0 * PI * c.detuning_khz * 1e-3 * t).cos())
                .sum();
            osc * (-t / t2_star_us).exp()
        })
        .collect();
    TimeTrace::new(t_us.to_vec(), y, "ramsey")
}

/// Least-squares polynomial of degree `order` on a centred, scaled time
/// axis. Fails if the design matrix is numerically rank deficient.
pub fn polynomial_fit(trace: &TimeTrace, order: usize) -> Result<Vec<f64>> {
    let n = trace.len();
    if order + 1 > n {
        return Err(Error::RankDeficient);
    }
    let (t0, t1) = (trace.t_us[0], trace.t_us[n - 1]);
    let mid = 0.5 * (t0 + t1);
    let half = (0.5 * (t1 - t0)).max(f64::MIN_POSITIVE);
    let x: Vec<f64> = trace.t_us.iter().map(|t| (t - mid) / half).collect();
    let a = DMatrix::from_fn(n, order + 1, |i, j| x[i].powi(j as i32));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::RankDeficient);
    }
    let coef = svd
        .solve(&DVector::from_column_slice(&trace.y), 0.0)
        .map_err(|_| Error::RankDeficient)?;
    Ok((&a * coef).iter().copied().collect())
}

/// Trace minus its least-squares polynomial of degree `order`.
pub fn detrend_polynomial(trace: &TimeTrace, order: usize) -> Result<TimeTrace> {
    let fit = polynomial_fit(trace, order)?;
    let y = trace.y.iter().zip(&fit).map(|(y, f)| y - f).collect();
    TimeTrace::new(trace.t_us.clone(), y, format!("{} detrend{order}", trace.meta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    None,
    Hann,
}

impl Window {
    fn weights(self, n: usize) -> Vec<f64> {
        match self {
            Window::None => vec![1.0; n],
            Window::Hann if n < 2 => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|k| 0.5 - 0.5 * (2.0 * PI * k as f64 / (n - 1) as f64).cos())
                .collect(),
        }
    }
}

/// One-sided magnitude spectrum in MHz of a uniformly sampled trace.
///
/// The trace is windowed, zero-padded to `zero_pad_factor` times its length
/// and transformed. Bins are scaled by `dt` and interior bins by √2, so that
/// `Σ|Y|² df = Σ|y|² dt` for the windowed, padded samples.
pub fn fft_spectrum(trace: &TimeTrace, window: Window, zero_pad_factor: usize) -> Result<Spectrum> {
    let dt = trace.uniform_step()?;
    if zero_pad_factor == 0 {
        return Err(Error::InvalidInput("zero-pad factor must be at least 1".into()));
    }
    let n = trace.len();
    let m = n * zero_pad_factor;
    let w = window.weights(n);
    let mut buf: Vec<FftComplex<f64>> = trace
        .y
        .iter()
        .zip(&w)
        .map(|(y, w)| FftComplex::new(y * w, 0.0))
        .chain(std::iter::repeat(FftComplex::new(0.0, 0.0)).take(m - n))
        .collect();
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);

    let bins = m / 2 + 1;
    let df = 1.0 / (m as f64 * dt);
    let nyquist_is_bin = m % 2 == 0;
    let mut freq = Vec::with_capacity(bins);
    let mut mag = Vec::with_capacity(bins);
    for (k, x) in buf.iter().take(bins).enumerate() {
        let edge = k == 0 || (nyquist_is_bin && k == m / 2);
        let scale = if edge { dt } else { dt * std::f64::consts::SQRT_2 };
        freq.push(k as f64 * df);
        mag.push(x.norm() * scale);
    }
    Ok(Spectrum {
        freq_grid_mhz: freq,
        signal: mag,
        linewidth_mhz: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::trace::uniform_times;

    #[test]
    fn ramsey_starts_at_weight_sum() {
        let c = [
            RamseyComponent {
                detuning_khz: 9.79,
                weight: 0.7,
            },
            RamseyComponent {
                detuning_khz: 20.27,
                weight: 0.3,
            },
        ];
        let tr = simulate_ramsey(&c, 203.0, &[0.0, 10.0]).unwrap();
        assert!((tr.y[0] - 1.0).abs() < 1e-15);
        let neg = [RamseyComponent {
            detuning_khz: 1.0,
            weight: -1.0,
        }];
        assert!(simulate_ramsey(&neg, 1.0, &[0.0]).is_err());
    }

    #[test]
    fn single_component_n14_model() {
        let c = [RamseyComponent {
            detuning_khz: 8.0,
            weight: 1.0,
        }];
        let t = 125.0;
        let tr = simulate_ramsey(&c, 864.0, &[t]).unwrap();
        let expect = (2.0 * PI * 8e-3 * t).cos() * (-t / 864.0).exp();
        assert!((tr.y[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn cubic_is_removed_exactly() {
        let t = uniform_times(0.0, 0.1, 200);
        let y: Vec<f64> = t.iter().map(|t| 2.0 - 0.3 * t + 0.05 * t * t - 0.002 * t * t * t).collect();
        let max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tr = TimeTrace::new(t, y, "").unwrap();
        let d = detrend_polynomial(&tr, 3).unwrap();
        assert!(d.y.iter().all(|v| v.abs() <= 1e-10 * max));
    }

    #[test]
    fn order_zero_removes_mean() {
        let t = uniform_times(0.0, 1.0, 11);
        let y: Vec<f64> = t.iter().map(|t| (t * 0.7).sin() + 3.0).collect();
        let d = detrend_polynomial(&TimeTrace::new(t, y, "").unwrap(), 0).unwrap();
        assert!(d.y.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn too_high_order_is_rank_deficient() {
        let tr = TimeTrace::new(vec![0.0, 1.0, 2.0], vec![1.0, 2.0, 0.0], "").unwrap();
        assert_eq!(detrend_polynomial(&tr, 3).unwrap_err(), Error::RankDeficient);
    }

    #[test]
    fn cosine_peak_bin() {
        let t = uniform_times(0.0, 0.01, 1000);
        let y: Vec<f64> = t.iter().map(|t| (2.0 * PI * 0.5 * t).cos()).collect();
        let s = fft_spectrum(&TimeTrace::new(t, y, "").unwrap(), Window::None, 1).unwrap();
        let k = s.peak_in(0.0, 50.0).unwrap();
        assert!((s.freq_grid_mhz[k] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parseval_odd_and_even_lengths() {
        for n in [256usize, 255] {
            let dt = 0.02;
            let t = uniform_times(0.0, dt, n);
            let y: Vec<f64> = t.iter().map(|t| (3.1 * t).sin() + 0.2 * (17.0 * t).cos() + 0.1).collect();
            let time_energy: f64 = y.iter().map(|v| v * v).sum::<f64>() * dt;
            for pad in [1, 3] {
                let s = fft_spectrum(&TimeTrace::new(t.clone(), y.clone(), "").unwrap(), Window::None, pad).unwrap();
                let df = s.freq_grid_mhz[1];
                let freq_energy: f64 = s.signal.iter().map(|v| v * v).sum::<f64>() * df;
                assert!((freq_energy / time_energy - 1.0).abs() < 1e-6, "n={n} pad={pad}");
            }
        }
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let tr = TimeTrace::new(vec![0.0, 1.0, 2.5], vec![0.0; 3], "").unwrap();
        assert!(matches!(fft_spectrum(&tr, Window::Hann, 1), Err(Error::NonUniformGrid(_))));
    }
}
