//! Damped Gauss–Newton (Levenberg–Marquardt) least squares and the model
//! fits used for spectra and time traces.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::signal::{fft_spectrum, Window};
use super::trace::TimeTrace;
use crate::error::{Error, Result};
use crate::spectroscopy::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Converged once `‖δp‖ ≤ tol · (‖p‖ + tol)`.
    pub relative_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            relative_step: 1e-9,
        }
    }
}

/// A model `f(p; x)` with analytic parameter gradient.
pub trait Model {
    fn n_params(&self) -> usize;
    /// Returns `f(p; x)` and writes `∂f/∂p` into `grad`.
    fn eval(&self, p: &[f64], x: f64, grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// `s² (JᵀJ)⁻¹` with `s² = SSR / (n − p)`; `None` if `JᵀJ` is singular.
    pub covariance: Option<DMatrix<f64>>,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn residuals_and_jacobian(model: &dyn Model, p: &[f64], x: &[f64], y: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let np = model.n_params();
    let mut r = DVector::zeros(x.len());
    let mut j = DMatrix::zeros(x.len(), np);
    let mut grad = vec![0.0; np];
    for (i, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        r[i] = yi - model.eval(p, xi, &mut grad);
        for (k, g) in grad.iter().enumerate() {
            j[(i, k)] = *g;
        }
    }
    (r, j)
}

fn cost(model: &dyn Model, p: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let mut grad = vec![0.0; model.n_params()];
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - model.eval(p, xi, &mut grad)).powi(2))
        .sum()
}

/// Minimizes `Σ (y_i − f(p; x_i))²` starting from `p0`.
pub fn levenberg_marquardt(model: &dyn Model, x: &[f64], y: &[f64], p0: &[f64], opts: &LmOptions) -> LmOutcome {
    let np = model.n_params();
    let mut p = p0.to_vec();
    let mut lambda = 1e-3;
    let mut current = cost(model, &p, x, y);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let (r, j) = residuals_and_jacobian(model, &p, x, y);
        let jtj = j.transpose() * &j;
        let g = j.transpose() * &r;
        let diag_floor = jtj.diagonal().max() * 1e-15 + f64::MIN_POSITIVE;

        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * jtj[(k, k)].max(diag_floor);
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&g),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let trial_cost = cost(model, &trial, x, y);
            let p_norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            let small = step.norm() <= opts.relative_step * (p_norm + opts.relative_step);
            if trial_cost.is_finite() && trial_cost <= current {
                p = trial;
                current = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                converged = small;
                break;
            }
            if small {
                converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if converged || !accepted || current == 0.0 {
            converged = converged || current == 0.0;
            break;
        }
    }

    let n = x.len();
    let dof = n.saturating_sub(np).max(1) as f64;
    let (_, j) = residuals_and_jacobian(model, &p, x, y);
    let covariance = (j.transpose() * &j)
        .try_inverse()
        .map(|inv| inv * (current / dof))
        .filter(|c| c.diagonal().iter().all(|v| v.is_finite() && *v >= 0.0));
    LmOutcome {
        params: p,
        covariance,
        residual_rms: (current / n.max(1) as f64).sqrt(),
        converged,
        iterations,
    }
}

/// A named fitted value with its one-sigma uncertainty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).and_then(|p| p.sigma)
    }

    fn from_outcome(out: &LmOutcome, names: &[String]) -> Self {
        let params = names
            .iter()
            .enumerate()
            .map(|(k, name)| FitParam {
                name: name.clone(),
                value: out.params[k],
                sigma: if out.converged {
                    out.covariance.as_ref().map(|c| c[(k, k)].sqrt())
                } else {
                    None
                },
            })
            .collect();
        Self {
            params,
            residual_rms: out.residual_rms,
            converged: out.converged,
            iterations: out.iterations,
        }
    }

    fn push_derived(&mut self, name: &str, value: f64, sigma: Option<f64>) {
        self.params.push(FitParam {
            name: name.to_string(),
            value,
            sigma: if self.converged { sigma } else { None },
        });
    }
}

/// Sum of Lorentzians on a constant offset.
/// Parameters: `offset, (center, fwhm, amplitude) × n`.
struct Lorentzians(usize);

impl Model for Lorentzians {
    fn n_params(&self) -> usize {
        1 + 3 * self.0
    }

    fn eval(&self, p: &[f64], x: f64, grad: &mut [f64]) -> f64 {
        grad[0] = 1.0;
        let mut f = p[0];
        for k in 0..self.0 {
            let (c, w, a) = (p[1 + 3 * k], p[2 + 3 * k], p[3 + 3 * k]);
            let h = w / 2.0;
            let dx = x - c;
            let den = dx * dx + h * h;
            let shape = h * h / den;
            f += a * shape;
            grad[1 + 3 * k] = a * h * h * 2.0 * dx / (den * den);
            grad[2 + 3 * k] = a * h * dx * dx / (den * den);
            grad[3 + 3 * k] = shape;
        }
        f
    }
}

/// Starting values of one Lorentzian peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzianInit {
    pub center_mhz: f64,
    pub fwhm_mhz: f64,
    pub amplitude: f64,
}

/// Fits `n_peaks` Lorentzians plus an offset. Without `init`, peaks are
/// seeded from the tallest local maxima.
pub fn fit_lorentzian(spectrum: &Spectrum, n_peaks: usize, init: Option<&[LorentzianInit]>) -> Result<FitResult> {
    let x = &spectrum.freq_grid_mhz;
    let y = &spectrum.signal;
    if n_peaks == 0 {
        return Err(Error::InvalidInput("need at least one peak".into()));
    }
    if x.len() < 3 * n_peaks + 2 {
        return Err(Error::InvalidInput("too few points for the requested peaks".into()));
    }
    let (lo, hi) = (x[0], x[x.len() - 1]);
    let offset = y.iter().copied().fold(f64::INFINITY, f64::min);
    let seeds: Vec<LorentzianInit> = match init {
        Some(s) => {
            if s.len() != n_peaks {
                return Err(Error::InvalidInput(format!("expected {n_peaks} initial peaks, got {}", s.len())));
            }
            if s.iter().any(|p| p.center_mhz < lo || p.center_mhz > hi) {
                return Err(Error::InvalidInput("initial centers must lie inside the grid".into()));
            }
            s.to_vec()
        }
        None => seed_peaks(x, y, n_peaks, offset),
    };
    let mut p0 = vec![offset];
    for s in &seeds {
        p0.extend([s.center_mhz, s.fwhm_mhz, s.amplitude]);
    }
    let out = levenberg_marquardt(&Lorentzians(n_peaks), x, y, &p0, &LmOptions::default());
    let mut names = vec!["offset".to_string()];
    for k in 0..n_peaks {
        names.extend([format!("center_mhz_{k}"), format!("fwhm_mhz_{k}"), format!("amplitude_{k}")]);
    }
    let mut res = FitResult::from_outcome(&out, &names);
    for k in 0..n_peaks {
        let idx = 2 + 3 * k;
        res.params[idx].value = res.params[idx].value.abs();
    }
    Ok(res)
}

fn seed_peaks(x: &[f64], y: &[f64], n: usize, offset: f64) -> Vec<LorentzianInit> {
    let mut maxima: Vec<usize> = (1..y.len() - 1)
        .filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1])
        .collect();
    maxima.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    let span = x[x.len() - 1] - x[0];
    let mut seeds: Vec<LorentzianInit> = maxima
        .iter()
        .take(n)
        .map(|&k| {
            let half = offset + 0.5 * (y[k] - offset);
            let left = (0..k).rev().find(|&i| y[i] < half).unwrap_or(0);
            let right = (k..y.len()).find(|&i| y[i] < half).unwrap_or(y.len() - 1);
            let fwhm = (x[right] - x[left]).max(span / x.len() as f64);
            LorentzianInit {
                center_mhz: x[k],
                fwhm_mhz: fwhm,
                amplitude: y[k] - offset,
            }
        })
        .collect();
    let mut k = 0;
    while seeds.len() < n {
        k += 1;
        seeds.push(LorentzianInit {
            center_mhz: x[0] + span * k as f64 / (n + 1) as f64,
            fwhm_mhz: span / (4 * n) as f64,
            amplitude: 0.0,
        });
    }
    seeds
}

/// `offset + e^{−γt} Σ a_k cos(2π f_k t + φ_k)`.
/// Parameters: `offset, γ, (f, a, φ) × n`.
struct DecayingSinusoids(usize);

impl Model for DecayingSinusoids {
    fn n_params(&self) -> usize {
        2 + 3 * self.0
    }

    fn eval(&self, p: &[f64], t: f64, grad: &mut [f64]) -> f64 {
        let env = (-p[1] * t).exp();
        let mut osc = 0.0;
        for k in 0..self.0 {
            let (f, a, ph) = (p[2 + 3 * k], p[3 + 3 * k], p[4 + 3 * k]);
            let arg = 2.0 * PI * f * t + ph;
            let (s, c) = arg.sin_cos();
            osc += a * c;
            grad[2 + 3 * k] = -env * a * s * 2.0 * PI * t;
            grad[3 + 3 * k] = env * c;
            grad[4 + 3 * k] = -env * a * s;
        }
        grad[0] = 1.0;
        grad[1] = -t * env * osc;
        p[0] + env * osc
    }
}

/// Starting values of one damped cosine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidInit {
    pub frequency_mhz: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
}

/// Fits `n_components` cosines sharing a single exponential decay.
///
/// Without `init`, frequencies come from the tallest peaks of a Hann
/// windowed, zero-padded FFT; amplitudes, phases and the decay rate from a
/// linear least-squares scan.
pub fn fit_decaying_sinusoids(
    trace: &TimeTrace,
    n_components: usize,
    init: Option<&[SinusoidInit]>,
) -> Result<FitResult> {
    if n_components == 0 {
        return Err(Error::InvalidInput("need at least one component".into()));
    }
    if trace.len() < 3 * n_components + 3 {
        return Err(Error::InvalidInput("too few points for the requested components".into()));
    }
    let t = &trace.t_us;
    let span = t[t.len() - 1] - t[0];
    let p0 = match init {
        Some(s) => {
            if s.len() != n_components {
                return Err(Error::InvalidInput(format!(
                    "expected {n_components} initial components, got {}",
                    s.len()
                )));
            }
            let freqs: Vec<f64> = s.iter().map(|c| c.frequency_mhz).collect();
            let (seed, gamma) = best_linear_seed(trace, &freqs, span);
            let mut p = vec![seed[0], gamma];
            for c in s {
                p.extend([c.frequency_mhz, c.amplitude, c.phase_rad]);
            }
            p
        }
        None => best_linear_seed(trace, &fft_seed_frequencies(trace, n_components)?, span).0,
    };
    let out = levenberg_marquardt(&DecayingSinusoids(n_components), t, &trace.y, &p0, &LmOptions::default());
    let mut names = vec!["offset".to_string(), "decay_rate_per_us".to_string()];
    for k in 0..n_components {
        names.extend([format!("frequency_mhz_{k}"), format!("amplitude_{k}"), format!("phase_rad_{k}")]);
    }
    let mut res = FitResult::from_outcome(&out, &names);
    normalize_sinusoids(&mut res, n_components);
    let gamma = out.params[1];
    let sigma_gamma = res.sigma("decay_rate_per_us");
    res.push_derived("t2_us", 1.0 / gamma, sigma_gamma.map(|s| s / (gamma * gamma)));
    Ok(res)
}

/// Folds negative frequencies and amplitudes into the phase.
fn normalize_sinusoids(res: &mut FitResult, n: usize) {
    for k in 0..n {
        let (fi, ai, pi) = (2 + 3 * k, 3 + 3 * k, 4 + 3 * k);
        if res.params[fi].value < 0.0 {
            res.params[fi].value = -res.params[fi].value;
            res.params[pi].value = -res.params[pi].value;
        }
        if res.params[ai].value < 0.0 {
            res.params[ai].value = -res.params[ai].value;
            res.params[pi].value += PI;
        }
        res.params[pi].value = (res.params[pi].value + PI).rem_euclid(2.0 * PI) - PI;
    }
}

fn fft_seed_frequencies(trace: &TimeTrace, n: usize) -> Result<Vec<f64>> {
    let spec = fft_spectrum(trace, Window::Hann, 8)?;
    let y = &spec.signal;
    let mut maxima: Vec<usize> = (0..y.len())
        .filter(|&k| {
            let left = k == 0 || y[k] > y[k - 1];
            let right = k + 1 == y.len() || y[k] >= y[k + 1];
            left && right
        })
        .collect();
    maxima.sort_by(|&a, &b| y[b].total_cmp(&y[a]).then(a.cmp(&b)));
    let mut f: Vec<f64> = maxima.iter().take(n).map(|&k| spec.freq_grid_mhz[k]).collect();
    let df = spec.freq_grid_mhz.get(1).copied().unwrap_or(0.0);
    while f.len() < n {
        f.push(df * (f.len() + 1) as f64);
    }
    Ok(f)
}

/// For fixed frequencies, scans the decay rate and solves the remaining
/// linear problem. Returns the full parameter vector and the chosen rate.
fn best_linear_seed(trace: &TimeTrace, freqs: &[f64], span: f64) -> (Vec<f64>, f64) {
    let t = &trace.t_us;
    let n = freqs.len();
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let span = span.max(f64::MIN_POSITIVE);
    for factor in [0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0, 1e3] {
        let gamma = 1.0 / (span * factor);
        let a = DMatrix::from_fn(t.len(), 1 + 2 * n, |i, j| {
            if j == 0 {
                return 1.0;
            }
            let env = (-gamma * t[i]).exp();
            let arg = 2.0 * PI * freqs[(j - 1) / 2] * t[i];
            if (j - 1) % 2 == 0 {
                env * arg.cos()
            } else {
                env * arg.sin()
            }
        });
        let b = DVector::from_column_slice(&trace.y);
        let Ok(coef) = a.clone().svd(true, true).solve(&b, 1e-12) else {
            continue;
        };
        let ssr = (&a * &coef - &b).norm_squared();
        if best.as_ref().map(|(s, _, _)| ssr < *s).unwrap_or(true) {
            let mut p = vec![coef[0], gamma];
            for k in 0..n {
                let (c, s) = (coef[1 + 2 * k], coef[2 + 2 * k]);
                // c cos + s sin = A cos(x + φ) with A = √(c²+s²), φ = atan2(−s, c)
                p.extend([freqs[k], c.hypot(s), (-s).atan2(c)]);
            }
            best = Some((ssr, p, gamma));
        }
    }
    let (_, p, gamma) = best.unwrap_or_else(|| {
        let mut p = vec![0.0, 1.0 / span];
        for &f in freqs {
            p.extend([f, 0.0, 0.0]);
        }
        (0.0, p, 1.0 / span)
    });
    (p, gamma)
}

/// `a e^{−k t} + c`. Parameters: `a, k, c`.
struct Exponential;

impl Model for Exponential {
    fn n_params(&self) -> usize {
        3
    }

    fn eval(&self, p: &[f64], t: f64, grad: &mut [f64]) -> f64 {
        let e = (-p[1] * t).exp();
        grad[0] = e;
        grad[1] = -p[0] * t * e;
        grad[2] = 1.0;
        p[0] * e + p[2]
    }
}

/// Fits `a·exp(−t/τ) + c`. A non-positive fitted rate is reported as
/// `tau_us = ∞` with `converged = false`.
pub fn fit_exponential(trace: &TimeTrace) -> Result<FitResult> {
    let n = trace.len();
    if n < 3 {
        return Err(Error::InvalidInput("exponential fit needs at least three points".into()));
    }
    let t = &trace.t_us;
    let y = &trace.y;
    let span = (t[n - 1] - t[0]).max(f64::MIN_POSITIVE);
    let mut best: Option<(f64, [f64; 3])> = None;
    for factor in [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0] {
        let k = 1.0 / (span * factor);
        let a = DMatrix::from_fn(n, 2, |i, j| if j == 0 { (-k * t[i]).exp() } else { 1.0 });
        let b = DVector::from_column_slice(y);
        let Ok(coef) = a.clone().svd(true, true).solve(&b, 1e-14) else {
            continue;
        };
        let ssr = (&a * &coef - &b).norm_squared();
        if best.map(|(s, _)| ssr < s).unwrap_or(true) {
            best = Some((ssr, [coef[0], k, coef[1]]));
        }
    }
    let p0 = best.map(|(_, p)| p).unwrap_or([0.0, 1.0 / span, y[n - 1]]);
    let out = levenberg_marquardt(&Exponential, t, y, &p0, &LmOptions::default());
    let names = ["amplitude", "rate_per_us", "offset"].map(String::from);
    let mut res = FitResult::from_outcome(&out, &names);
    let rate = out.params[1];
    if rate > 0.0 {
        let s = res.sigma("rate_per_us").map(|s| s / (rate * rate));
        res.push_derived("tau_us", 1.0 / rate, s);
    } else {
        res.converged = false;
        for p in &mut res.params {
            p.sigma = None;
        }
        res.push_derived("tau_us", f64::INFINITY, None);
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::trace::uniform_times;
    use crate::spectroscopy::{linear_grid, synthesize_spectrum, TransitionLine};

    fn lines(spec: &[(f64, f64)]) -> Vec<TransitionLine> {
        spec.iter()
            .map(|&(f, a)| TransitionLine {
                frequency_mhz: f,
                amplitude: a,
                matrix_element_sq: a,
                from_label: String::new(),
                to_label: String::new(),
                manifold: None,
                family: None,
            })
            .collect()
    }

    #[test]
    fn single_lorentzian_round_trip() {
        let grid = linear_grid(0.40, 0.55, 601);
        let s = synthesize_spectrum(&lines(&[(0.4698, 1.0)]), &grid, 0.003).unwrap();
        let r = fit_lorentzian(&s, 1, None).unwrap();
        assert!(r.converged);
        assert!((r.get("center_mhz_0").unwrap() - 0.4698).abs() < 1e-4 * 0.15);
        assert!((r.get("fwhm_mhz_0").unwrap() - 0.003).abs() < 1e-9);
    }

    #[test]
    fn overlapping_lorentzians() {
        let w = 0.01;
        let grid = linear_grid(0.0, 1.0, 2001);
        let s = synthesize_spectrum(&lines(&[(0.5, 1.0), (0.5 + 3.0 * w, 0.7)]), &grid, w).unwrap();
        let r = fit_lorentzian(&s, 2, None).unwrap();
        let mut c = [r.get("center_mhz_0").unwrap(), r.get("center_mhz_1").unwrap()];
        c.sort_by(f64::total_cmp);
        assert!((c[0] - 0.5).abs() < 0.02 * w && (c[1] - 0.53).abs() < 0.02 * w, "{c:?}");
    }

    #[test]
    fn flat_spectrum_has_no_peak() {
        let grid = linear_grid(0.0, 1.0, 200);
        let s = Spectrum {
            signal: vec![0.3; grid.len()],
            freq_grid_mhz: grid,
            linewidth_mhz: 0.0,
        };
        let r = fit_lorentzian(&s, 1, None).unwrap();
        assert!(!r.converged || r.get("amplitude_0").unwrap().abs() < 1e-6);
    }

    #[test]
    fn init_outside_grid_rejected() {
        let grid = linear_grid(0.0, 1.0, 100);
        let s = synthesize_spectrum(&lines(&[(0.5, 1.0)]), &grid, 0.05).unwrap();
        let init = [LorentzianInit {
            center_mhz: 1.5,
            fwhm_mhz: 0.05,
            amplitude: 1.0,
        }];
        assert!(fit_lorentzian(&s, 1, Some(&init)).is_err());
    }

    #[test]
    fn exponential_value_at_tau() {
        let t = uniform_times(0.0, 0.05, 100);
        let y: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        let r = fit_exponential(&TimeTrace::new(t, y, "").unwrap()).unwrap();
        let tau = r.get("tau_us").unwrap();
        assert!((tau - 1.0).abs() < 1e-8);
        let at = r.get("amplitude").unwrap() * (-1.0f64).exp() + r.get("offset").unwrap();
        assert!((at - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn constant_input_is_flagged() {
        let t = uniform_times(0.0, 1.0, 50);
        let r = fit_exponential(&TimeTrace::new(t, vec![2.0; 50], "").unwrap()).unwrap();
        let amp = r.get("amplitude").unwrap().abs();
        let tau = r.get("tau_us").unwrap();
        assert!(amp < 1e-6 || !tau.is_finite() || !r.converged, "amp {amp} tau {tau}");
    }

    #[test]
    fn sinusoid_on_pure_exponential_has_zero_frequency() {
        let t = uniform_times(0.0, 1.0, 200);
        let y: Vec<f64> = t.iter().map(|t| (-t / 80.0).exp()).collect();
        let r = fit_decaying_sinusoids(&TimeTrace::new(t, y, "").unwrap(), 1, None).unwrap();
        assert!(r.get("frequency_mhz_0").unwrap().abs() < 1e-5, "{r:?}");
    }
}
