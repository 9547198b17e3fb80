//! Hahn-echo simulation with ideal electron pulses and exact free evolution.

use num_complex::Complex64;

use super::trace::{DecayParams, TimeTrace};
use crate::error::{Error, Result};
use crate::hamiltonian::{build, ElectronSpecies, FieldConfig, SpinSystemSpec};
use crate::hyperfine::{HyperfineScalars, PhysicalConstants};
use crate::spectroscopy::linear_grid;
use crate::spin::hermitian_eig;

const NORM_TOLERANCE: f64 = 1e-10;

/// Propagator `exp(−2πi H t)` from a precomputed eigendecomposition.
struct Propagator {
    energies: Vec<f64>,
    /// Eigenvectors, `vectors[k]` belongs to `energies[k]`.
    vectors: Vec<Vec<Complex64>>,
}

impl Propagator {
    fn apply(&self, t_us: f64, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        for (e, v) in self.energies.iter().zip(&self.vectors) {
            let overlap: Complex64 = v.iter().zip(psi).map(|(a, b)| a.conj() * b).sum();
            let c = overlap * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * e * t_us);
            for (o, a) in out.iter_mut().zip(v) {
                *o += c * a;
            }
        }
        out
    }
}

/// Ideal rotation about x by `theta` on the electron levels `m_s = 0` and
/// `m_s = −1`, identity on `m_s = +1`.
fn electron_pulse(psi: &mut [Complex64], nuclear_dim: usize, theta: f64) {
    let (s, c) = (theta / 2.0).sin_cos();
    let mis = Complex64::new(0.0, -s);
    for r in 0..nuclear_dim {
        let (i0, i1) = (nuclear_dim + r, 2 * nuclear_dim + r);
        let (a, b) = (psi[i0], psi[i1]);
        psi[i0] = a * c + b * mis;
        psi[i1] = a * mis + b * c;
    }
}

/// Echo amplitude `2 P(m_s = 0) − 1` after π/2 – τ – π – τ – π/2, averaged
/// over an unpolarized nuclear bath. With `decay` set the result is
/// multiplied by `exp(−(2τ/T2)ⁿ)`.
pub fn simulate_hahn_echo(spec: &SpinSystemSpec, tau_us: &[f64], decay: Option<&DecayParams>) -> Result<TimeTrace> {
    if spec.electron != ElectronSpecies::NvMinus {
        return Err(Error::InvalidSystem("Hahn echo needs an NV⁻ electron".into()));
    }
    if let Some(d) = decay {
        d.validate()?;
    }
    if tau_us.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput("echo delays must be finite and non-negative".into()));
    }
    let h = build(spec)?;
    let eig = hermitian_eig(&h.matrix)?;
    let prop = Propagator {
        energies: eig.energies,
        vectors: eig.states,
    };
    let n = h.dim();
    let nuclear_dim = n / 3;

    let mut y = Vec::with_capacity(tau_us.len());
    for &tau in tau_us {
        let mut acc = 0.0;
        for r in 0..nuclear_dim {
            let mut psi = vec![Complex64::new(0.0, 0.0); n];
            psi[nuclear_dim + r] = Complex64::new(1.0, 0.0);
            electron_pulse(&mut psi, nuclear_dim, std::f64::consts::FRAC_PI_2);
            let mut psi = prop.apply(tau, &psi);
            electron_pulse(&mut psi, nuclear_dim, std::f64::consts::PI);
            let mut psi = prop.apply(tau, &psi);
            electron_pulse(&mut psi, nuclear_dim, std::f64::consts::FRAC_PI_2);

            let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::InvalidSystem(format!("state norm drifted to {norm}")));
            }
            let p0: f64 = psi[nuclear_dim..2 * nuclear_dim].iter().map(|z| z.norm_sqr()).sum();
            acc += 2.0 * p0 - 1.0;
        }
        let envelope = decay.map(|d| d.echo_envelope(tau)).unwrap_or(1.0);
        y.push(acc / nuclear_dim as f64 * envelope);
    }
    TimeTrace::new(tau_us.to_vec(), y, "hahn-echo")
}

/// Weighted average of echo traces from several independent clusters.
pub fn simulate_hahn_echo_ensemble(
    members: &[(SpinSystemSpec, f64)],
    tau_us: &[f64],
    decay: Option<&DecayParams>,
) -> Result<TimeTrace> {
    let total: f64 = members.iter().map(|(_, w)| w).sum();
    if members.is_empty() || members.iter().any(|(_, w)| *w < 0.0) || !(total > 0.0) {
        return Err(Error::InvalidInput("ensemble weights must be non-negative with a positive sum".into()));
    }
    let mut y = vec![0.0; tau_us.len()];
    for (spec, w) in members {
        let trace = simulate_hahn_echo(spec, tau_us, None)?;
        for (acc, v) in y.iter_mut().zip(&trace.y) {
            *acc += w / total * v;
        }
    }
    if let Some(d) = decay {
        d.validate()?;
        for (v, &t) in y.iter_mut().zip(tau_us) {
            *v *= d.echo_envelope(t);
        }
    }
    TimeTrace::new(tau_us.to_vec(), y, "hahn-echo-ensemble")
}

/// Distant ¹³C bath stand-in: `n` single-nucleus clusters with
/// `a_par = a_perp` spread evenly over `[−max, max]` MHz, a common `a_ani`,
/// equal weights.
pub fn weak_c13_ensemble(
    field: &FieldConfig,
    constants: &PhysicalConstants,
    n: usize,
    max_coupling_mhz: f64,
    a_ani_mhz: f64,
) -> Vec<(SpinSystemSpec, f64)> {
    linear_grid(-max_coupling_mhz, max_coupling_mhz, n)
        .into_iter()
        .map(|a| {
            let sc = HyperfineScalars {
                a_par: a,
                a_perp: a,
                a_ani: a_ani_mhz,
                ..HyperfineScalars::default()
            };
            (SpinSystemSpec::nv_c13(sc, *field).with_constants(*constants), 1.0)
        })
        .collect()
}
